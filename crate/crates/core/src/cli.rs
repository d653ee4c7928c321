//! Command-line front end: configuration, subcommands and CSV/manifest output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{build_drift, compare_routes, is_stable, EquivalenceReport, Stability};
use crate::params::{
    angular, derive, PhysicalParams, Preset, Regime, YIG_GYROMAGNETIC_HZ_PER_T, YIG_SPIN,
};
use crate::response::Rates;
use crate::spectra::Magnetometer;
use crate::sweep::{
    evaluate_series, figure_dataset, Dataset, FigureId, GridScale, GridSpec, RatioSeries,
    SeriesRecord, SpectrumSeries, FIGURE_KAPPA_RATIO,
};

pub const SPECTRUM_HEADER: [&str; 6] = [
    "omega_over_kappa_m",
    "R",
    "n_add",
    "S_P",
    "S_N",
    "sensitivity",
];
pub const RATIO_HEADER: [&str; 3] = ["omega_over_kappa_m", "R_ratio", "N_ratio"];
pub const VALIDATION_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_OUT_DIR: &str = "out";

#[derive(Parser, Debug)]
#[command(
    name = "emagnon",
    version,
    about = "Cavity-electromagnonic magnetometer model"
)]
pub struct Cli {
    /// TOML run configuration
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Frequency grid in units of kappa_m, e.g. 1e-3:10:400:log
    #[arg(long, global = true, value_name = "MIN:MAX:POINTS:log|lin")]
    pub grid: Option<String>,
    /// beyond | rwa
    #[arg(long, global = true)]
    pub regime: Option<String>,
    /// beyond_rwa_paper | rwa_paper | coplanar_paper
    #[arg(long, global = true)]
    pub preset: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Eq)]
pub enum Command {
    /// Print derived parameters
    Derive,
    /// Write the spectrum of one configuration as CSV
    Spectrum,
    /// Write one CSV per value of the configured sweep parameter
    Sweep,
    /// Write the dataset of one figure panel
    Figure { id: String },
    /// Compare the closed-form and state-space transfer coefficients
    Validate,
    /// Print the configuration schema
    Schema,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub regime: Option<String>,
    pub grid: Option<String>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub params: ParamsConfig,
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub omega_a_hz: Option<f64>,
    pub omega_m_hz: Option<f64>,
    pub kappa_a_hz: Option<f64>,
    pub kappa_m_hz: Option<f64>,
    pub g0_hz: Option<f64>,
    pub coupling_from_mode_volume: Option<bool>,
    pub modulation_amplitude: Option<f64>,
    pub target_cooperativity: Option<f64>,
    pub delta_hz: Option<f64>,
    pub delta_over_kappa_m: Option<f64>,
    pub temperature_k: Option<f64>,
    pub spin_count: Option<f64>,
    pub spin_s: Option<f64>,
    pub gyromagnetic_hz_per_t: Option<f64>,
    pub mode_volume_m3: Option<f64>,
    pub drive_power_w: Option<f64>,
    pub magnon_drive_field_t: Option<f64>,
    pub omega_l_hz: Option<f64>,
    pub omega_d_hz: Option<f64>,
    pub bias_field_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Cooperativity,
    DeltaOverKappaM,
    DeltaHz,
    TemperatureK,
    ModulationAmplitude,
    G0Hz,
    SpinCount,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::Cooperativity => "cooperativity",
            SweepParameter::DeltaOverKappaM => "delta_over_kappa_m",
            SweepParameter::DeltaHz => "delta_hz",
            SweepParameter::TemperatureK => "temperature_k",
            SweepParameter::ModulationAmplitude => "modulation_amplitude",
            SweepParameter::G0Hz => "g0_hz",
            SweepParameter::SpinCount => "spin_count",
        }
    }

    pub fn apply(
        self,
        params: &PhysicalParams,
        regime: Regime,
        value: f64,
    ) -> Result<PhysicalParams> {
        let mut p = params.clone();
        match self {
            SweepParameter::Cooperativity => {
                if value.is_nan() || value < 0.0 {
                    return Err(Error::Config(format!(
                        "cooperativity must be >= 0, got {value}"
                    )));
                }
                let coupling = (value * p.kappa_a * p.kappa_m / 4.0).sqrt();
                match regime {
                    Regime::UnderRwa => p.g0 = coupling,
                    Regime::BeyondRwa if p.g0 > 0.0 => p = p.with_target_cooperativity(value),
                    Regime::BeyondRwa => {
                        return Err(Error::Config("cooperativity sweep needs g0_hz > 0".into()))
                    }
                }
            }
            SweepParameter::DeltaOverKappaM => p.delta = value * p.kappa_m,
            SweepParameter::DeltaHz => p.delta = angular(value),
            SweepParameter::TemperatureK => p.temperature = value,
            SweepParameter::ModulationAmplitude => p.modulation_amplitude = value,
            SweepParameter::G0Hz => p.g0 = angular(value),
            SweepParameter::SpinCount => p.spin_count = value,
        }
        p.validate()?;
        Ok(p)
    }
}

impl ParamsConfig {
    fn is_empty(&self) -> bool {
        *self == ParamsConfig::default()
    }

    fn custom_base(&self) -> Result<PhysicalParams> {
        let mut missing = Vec::new();
        let mut need = |name: &'static str, v: Option<f64>| {
            if v.is_none() {
                missing.push(name);
            }
            v.unwrap_or(f64::NAN)
        };
        let omega_a = need("omega_a_hz", self.omega_a_hz);
        let kappa_a = need("kappa_a_hz", self.kappa_a_hz);
        let kappa_m = need("kappa_m_hz", self.kappa_m_hz);
        let spin_count = need("spin_count", self.spin_count);
        if self.g0_hz.is_none() && self.coupling_from_mode_volume != Some(true) {
            missing.push("g0_hz");
        }
        if !missing.is_empty() {
            return Err(Error::Config(format!(
                "missing parameters without a preset: {}",
                missing.join(", ")
            )));
        }
        Ok(PhysicalParams {
            omega_a: angular(omega_a),
            omega_m: angular(self.omega_m_hz.unwrap_or(omega_a)),
            kappa_a: angular(kappa_a),
            kappa_m: angular(kappa_m),
            g0: 0.0,
            modulation_amplitude: 1.0,
            delta: 0.0,
            temperature: 0.0,
            spin_count,
            spin_s: YIG_SPIN,
            gyromagnetic: angular(YIG_GYROMAGNETIC_HZ_PER_T),
            mode_volume: None,
            drive_power: None,
            magnon_drive_field: None,
            omega_l: None,
            omega_d: None,
            bias_field: None,
        })
    }

    /// Overlays the given fields onto `base`.
    pub fn apply(&self, base: PhysicalParams) -> Result<PhysicalParams> {
        let mut p = base;
        let hz = |v: Option<f64>| v.map(angular);
        if let Some(v) = hz(self.omega_a_hz) {
            p.omega_a = v;
        }
        if let Some(v) = hz(self.omega_m_hz) {
            p.omega_m = v;
        }
        if let Some(v) = hz(self.kappa_a_hz) {
            p.kappa_a = v;
        }
        if let Some(v) = hz(self.kappa_m_hz) {
            p.kappa_m = v;
        }
        if let Some(v) = hz(self.g0_hz) {
            p.g0 = v;
        }
        if let Some(v) = self.modulation_amplitude {
            p.modulation_amplitude = v;
        }
        if let Some(v) = self.temperature_k {
            p.temperature = v;
        }
        if let Some(v) = self.spin_count {
            p.spin_count = v;
        }
        if let Some(v) = self.spin_s {
            p.spin_s = v;
        }
        if let Some(v) = hz(self.gyromagnetic_hz_per_t) {
            p.gyromagnetic = v;
        }
        if self.mode_volume_m3.is_some() {
            p.mode_volume = self.mode_volume_m3;
        }
        if self.drive_power_w.is_some() {
            p.drive_power = self.drive_power_w;
        }
        if self.magnon_drive_field_t.is_some() {
            p.magnon_drive_field = self.magnon_drive_field_t;
        }
        if self.omega_l_hz.is_some() {
            p.omega_l = hz(self.omega_l_hz);
        }
        if self.omega_d_hz.is_some() {
            p.omega_d = hz(self.omega_d_hz);
        }
        if self.bias_field_t.is_some() {
            p.bias_field = self.bias_field_t;
        }
        match (self.delta_hz, self.delta_over_kappa_m) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give delta_hz or delta_over_kappa_m, not both".into(),
                ))
            }
            (Some(d), None) => p.delta = angular(d),
            (None, Some(d)) => p.delta = d * p.kappa_m,
            (None, None) => {}
        }
        if self.coupling_from_mode_volume == Some(true) {
            if self.g0_hz.is_some() {
                return Err(Error::Config(
                    "give g0_hz or coupling_from_mode_volume, not both".into(),
                ));
            }
            p = p.with_coupling_from_mode_volume()?;
        }
        if let Some(c) = self.target_cooperativity {
            if self.modulation_amplitude.is_some() {
                return Err(Error::Config(
                    "give modulation_amplitude or target_cooperativity, not both".into(),
                ));
            }
            if !(c >= 0.0 && p.g0 > 0.0) {
                return Err(Error::Config(
                    "target_cooperativity needs a value >= 0 and g0 > 0".into(),
                ));
            }
            p = p.with_target_cooperativity(c);
        }
        p.validate()?;
        Ok(p)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::Config(one_line(&e.to_string())))
}

/// Everything a subcommand needs, after flags override the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub preset: Option<Preset>,
    pub params: PhysicalParams,
    pub regime: Regime,
    pub grid: Option<GridSpec>,
    pub out: PathBuf,
    pub sweep: Option<SweepConfig>,
}

pub fn resolve(cli: &Cli) -> Result<Settings> {
    let config = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    let preset = match cli.preset.as_deref().or(config.preset.as_deref()) {
        Some(name) => Some(name.parse::<Preset>()?),
        None if config.params.is_empty() || config.params.omega_a_hz.is_none() => {
            Some(Preset::BeyondRwaPaper)
        }
        None => None,
    };
    let base = match preset {
        Some(p) => p.params(),
        None => config.params.custom_base()?,
    };
    let params = config.params.apply(base)?;
    let regime = match cli.regime.as_deref().or(config.regime.as_deref()) {
        Some(r) => r.parse::<Regime>()?,
        None => preset.map(Preset::regime).unwrap_or(Regime::BeyondRwa),
    };
    let grid = match cli.grid.as_deref().or(config.grid.as_deref()) {
        Some(g) => Some(g.parse::<GridSpec>()?),
        None => None,
    };
    let out = cli
        .out
        .clone()
        .or(config.output)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    Ok(Settings {
        preset,
        params,
        regime,
        grid,
        out,
        sweep: config.sweep,
    })
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// CSV bytes for one spectrum series. A trailing `flag` column appears only
/// when the series has gaps; gap rows leave the value cells empty.
pub fn spectrum_csv(series: &SpectrumSeries) -> Result<Vec<u8>> {
    let flagged = series.gap_count() > 0;
    let mut w = csv_writer();
    let mut header: Vec<&str> = SPECTRUM_HEADER.to_vec();
    if flagged {
        header.push("flag");
    }
    w.write_record(&header).map_err(csv_error)?;
    for sample in &series.samples {
        let mut row = vec![num(sample.x())];
        match sample {
            crate::sweep::Sample::Value { point, .. } => {
                row.extend([
                    num(point.response),
                    num(point.added_noise),
                    num(point.output_spectrum),
                    num(point.noise_power),
                    num(point.sensitivity),
                ]);
                if flagged {
                    row.push(String::new());
                }
            }
            crate::sweep::Sample::Gap { reason, .. } => {
                row.extend(std::iter::repeat_n(String::new(), 5));
                row.push(reason.to_string());
            }
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    finish(w)
}

pub fn ratio_csv(series: &RatioSeries) -> Result<Vec<u8>> {
    let flagged = series.gap_count() > 0;
    let mut w = csv_writer();
    let mut header: Vec<&str> = RATIO_HEADER.to_vec();
    if flagged {
        header.push("flag");
    }
    w.write_record(&header).map_err(csv_error)?;
    for sample in &series.samples {
        let mut row = vec![num(sample.x())];
        match sample {
            crate::sweep::RatioSample::Value {
                response_ratio,
                noise_ratio,
                ..
            } => {
                row.extend([num(*response_ratio), num(*noise_ratio)]);
                if flagged {
                    row.push(String::new());
                }
            }
            crate::sweep::RatioSample::Gap { reason, .. } => {
                row.extend([String::new(), String::new(), reason.to_string()]);
            }
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    finish(w)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ManifestEntry<'a> {
    label: &'a str,
    file: String,
    points: usize,
    gaps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    record: Option<&'a SeriesRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stability: Option<&'a Stability>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beyond: Option<&'a SeriesRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rwa: Option<&'a SeriesRecord>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    name: &'a str,
    grid: GridSpec,
    abscissa: &'static str,
    units: Units,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep_parameter: Option<&'static str>,
    series: Vec<ManifestEntry<'a>>,
}

#[derive(Debug, Serialize)]
struct Units {
    response: &'static str,
    added_noise: &'static str,
    output_spectrum: &'static str,
    noise_power: &'static str,
    sensitivity: &'static str,
}

const UNITS: Units = Units {
    response: "dimensionless",
    added_noise: "quanta",
    output_spectrum: "quanta",
    noise_power: "T^2/Hz",
    sensitivity: "T/sqrt(Hz)",
};

fn spectrum_entry(s: &SpectrumSeries) -> ManifestEntry<'_> {
    ManifestEntry {
        label: &s.label,
        file: format!("{}.csv", s.label),
        points: s.samples.len(),
        gaps: s.gap_count(),
        record: Some(&s.record),
        stability: Some(&s.stability),
        beyond: None,
        rwa: None,
    }
}

fn ratio_entry(s: &RatioSeries) -> ManifestEntry<'_> {
    ManifestEntry {
        label: &s.label,
        file: format!("{}.csv", s.label),
        points: s.samples.len(),
        gaps: s.gap_count(),
        record: None,
        stability: None,
        beyond: Some(&s.beyond),
        rwa: Some(&s.rwa),
    }
}

fn write_manifest(path: &Path, manifest: &Manifest<'_>) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(manifest).map_err(|e| Error::Io(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Writes a figure dataset to `dir` and returns the files written.
pub fn write_figure(id: FigureId, grid: &GridSpec, dir: &Path) -> Result<Vec<PathBuf>> {
    let dataset = figure_dataset(id, grid)?;
    let mut written = Vec::new();
    let entries = match &dataset {
        Dataset::Spectra(series) => {
            for s in series {
                let path = dir.join(format!("{}.csv", s.label));
                write_atomic(&path, &spectrum_csv(s)?)?;
                written.push(path);
            }
            series.iter().map(spectrum_entry).collect()
        }
        Dataset::Ratios(series) => {
            for s in series {
                let path = dir.join(format!("{}.csv", s.label));
                write_atomic(&path, &ratio_csv(s)?)?;
                written.push(path);
            }
            series.iter().map(ratio_entry).collect()
        }
    };
    let manifest = Manifest {
        name: id.as_str(),
        grid: *grid,
        abscissa: "omega_over_kappa_m",
        units: UNITS,
        sweep_parameter: None,
        series: entries,
    };
    let path = dir.join(format!("{id}_manifest.json"));
    write_manifest(&path, &manifest)?;
    written.push(path);
    Ok(written)
}

fn stable_magnetometer(params: &PhysicalParams, regime: Regime) -> Result<Magnetometer> {
    let m = Magnetometer::from_params(params, regime)?;
    let stability = is_stable(&build_drift(&m.rates, regime));
    if !stability.stable {
        return Err(Error::Unstable {
            max_real_part: -stability.margin,
        });
    }
    Ok(m)
}

pub fn write_spectrum(settings: &Settings) -> Result<PathBuf> {
    let m = stable_magnetometer(&settings.params, settings.regime)?;
    let grid = settings.grid.unwrap_or_else(GridSpec::figure_default);
    let series = evaluate_series("spectrum", &m, &grid.values())?;
    let path = settings.out.join("spectrum.csv");
    write_atomic(&path, &spectrum_csv(&series)?)?;
    Ok(path)
}

fn value_label(v: f64) -> String {
    format!("{v}")
}

pub fn write_sweep(settings: &Settings) -> Result<Vec<PathBuf>> {
    let sweep = settings
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep needs a [sweep] section in the config".into()))?;
    if sweep.values.is_empty() {
        return Err(Error::Config("sweep values are empty".into()));
    }
    let grid = settings.grid.unwrap_or_else(GridSpec::figure_default);
    let xs = grid.values();
    let name = sweep.parameter.as_str();
    let mut series = Vec::with_capacity(sweep.values.len());
    for &v in &sweep.values {
        let params = sweep
            .parameter
            .apply(&settings.params, settings.regime, v)?;
        let m = stable_magnetometer(&params, settings.regime)?;
        series.push(evaluate_series(
            &format!("sweep_{name}_{}", value_label(v)),
            &m,
            &xs,
        )?);
    }
    let mut written = Vec::new();
    for s in &series {
        let path = settings.out.join(format!("{}.csv", s.label));
        write_atomic(&path, &spectrum_csv(s)?)?;
        written.push(path);
    }
    let manifest = Manifest {
        name: "sweep",
        grid,
        abscissa: "omega_over_kappa_m",
        units: UNITS,
        sweep_parameter: Some(name),
        series: series.iter().map(spectrum_entry).collect(),
    };
    let path = settings.out.join("sweep_manifest.json");
    write_manifest(&path, &manifest)?;
    written.push(path);
    Ok(written)
}

/// Default grid of the equivalence check: 200 log points over `[10⁻³, 10²]`.
pub fn validation_grid() -> GridSpec {
    GridSpec {
        min: 1e-3,
        max: 1e2,
        points: 200,
        scale: GridScale::Log,
    }
}

/// The parameter sets checked by `validate`: C ∈ {0.5, 1000} and
/// Δ/κ_m ∈ {0, 0.05, 0.5, 5} in both regimes, plus every preset.
pub fn validation_suite() -> Result<Vec<(String, Rates, Regime)>> {
    let mut suite = Vec::new();
    for regime in [Regime::BeyondRwa, Regime::UnderRwa] {
        for c in [0.5, 1000.0] {
            for d in [0.0, 0.05, 0.5, 5.0] {
                let rates = Rates::from_cooperativity(c, d, FIGURE_KAPPA_RATIO, 1.0)?;
                suite.push((
                    format!("{}_C_{c}_delta_{d}", regime.as_str()),
                    rates,
                    regime,
                ));
            }
        }
    }
    for preset in Preset::ALL {
        let params = preset.params();
        let derived = derive(&params, preset.regime())?;
        suite.push((
            preset.name().to_string(),
            Rates::from_params(&params, &derived),
            preset.regime(),
        ));
    }
    Ok(suite)
}

pub fn run_validation(grid: &GridSpec, out: &mut dyn Write) -> Result<EquivalenceReport> {
    let xs = grid.values();
    let mut total = EquivalenceReport::default();
    for (label, rates, regime) in validation_suite()? {
        let omegas: Vec<f64> = xs.iter().map(|x| x * rates.kappa_m).collect();
        let report = compare_routes(&rates, regime, &omegas);
        writeln!(
            out,
            "set={label} regime={} compared={} singular={} max_relative_deviation={:e}",
            regime.as_str(),
            report.points_compared,
            report.points_singular,
            report.max_relative_deviation
        )?;
        total = total.merge(report);
    }
    writeln!(
        out,
        "max_relative_deviation = {:e}",
        total.max_relative_deviation
    )?;
    writeln!(out, "tolerance = {VALIDATION_TOLERANCE:e}")?;
    if total.max_relative_deviation > VALIDATION_TOLERANCE {
        return Err(Error::ValidationFailed {
            deviation: total.max_relative_deviation,
            tolerance: VALIDATION_TOLERANCE,
        });
    }
    Ok(total)
}

fn print_derived(settings: &Settings, out: &mut dyn Write) -> Result<()> {
    let p = &settings.params;
    let d = derive(p, settings.regime)?;
    let kv = |out: &mut dyn Write, k: &str, v: f64| writeln!(out, "{k} = {v:e}");
    if let Some(preset) = settings.preset {
        writeln!(out, "preset = {}", preset.name())?;
    }
    writeln!(out, "regime = {}", d.regime.as_str())?;
    kv(out, "eta_rad_per_s_t", d.eta)?;
    kv(out, "g_eff_rad_per_s", d.g_eff)?;
    kv(out, "cooperativity", d.cooperativity)?;
    if d.regime == Regime::BeyondRwa {
        kv(out, "modulation_amplitude", p.modulation_amplitude)?;
        kv(
            out,
            "cooperativity_over_modulation_sq",
            crate::params::cooperativity(p.g0, p.kappa_a, p.kappa_m),
        )?;
    }
    kv(out, "nbar_a", d.nbar_a)?;
    kv(out, "nbar_m", d.nbar_m)?;
    if let Some(v) = d.b0 {
        kv(out, "b0_t", v)?;
    }
    if let Some(v) = d.epsilon_l {
        kv(out, "epsilon_l_rad_per_s", v)?;
    }
    if let Some(v) = d.epsilon_d {
        kv(out, "epsilon_d_rad_per_s", v)?;
    }
    kv(
        out,
        "sensitivity_prefactor_t_per_sqrt_hz",
        d.sensitivity_prefactor,
    )?;
    let m = Magnetometer::from_derived(p, &d);
    match m.sensitivity(0.0) {
        Ok(s) => kv(out, "sensitivity_at_resonance_t_per_sqrt_hz", s)?,
        Err(e) => writeln!(
            out,
            "sensitivity_at_resonance_t_per_sqrt_hz = undefined ({})",
            e.kind()
        )?,
    }
    let stability = is_stable(&build_drift(&m.rates, d.regime));
    writeln!(out, "stable = {}", stability.stable)?;
    kv(out, "stability_margin_rad_per_s", stability.margin)?;
    let flags: Vec<&str> = d.validity_flags.iter().map(|f| f.as_str()).collect();
    writeln!(
        out,
        "validity_flags = {}",
        if flags.is_empty() {
            "none".to_string()
        } else {
            flags.join(",")
        }
    )?;
    Ok(())
}

pub const SCHEMA: &str = r#"# emagnon run configuration (TOML). Every key is optional; unknown keys are rejected.
#
# preset = "beyond_rwa_paper"   # beyond_rwa_paper | rwa_paper | coplanar_paper
# regime = "beyond"             # beyond | rwa  (default: the preset's regime)
# grid   = "1e-3:10:400:log"    # min:max:points:log|lin, in units of kappa_m
# output = "out"                # output directory
#
# [params]                      # overrides on top of the preset
# omega_a_hz = 37.5e9           # cavity frequency, Hz
# omega_m_hz = 37.5e9           # magnon frequency, Hz (default: omega_a_hz)
# kappa_a_hz = 33e6             # cavity decay rate, Hz
# kappa_m_hz = 15e6             # magnon decay rate, Hz
# g0_hz = 2.5e9                 # bare coupling, Hz
# coupling_from_mode_volume = false  # compute g0 from mode_volume_m3 instead
# modulation_amplitude = 1.0    # dimensionless, used beyond the RWA
# target_cooperativity = 1000.0 # sets modulation_amplitude to reach this C
# delta_hz = 0.0                # detuning, Hz
# delta_over_kappa_m = 0.0      # detuning in units of kappa_m (exclusive with delta_hz)
# temperature_k = 0.0           # bath temperature, K
# spin_count = 3.5e19           # number of spins
# spin_s = 2.5                  # spin per site
# gyromagnetic_hz_per_t = 28e9  # gyromagnetic ratio, Hz/T
# mode_volume_m3 = 1.12e-7      # cavity mode volume, m^3
# drive_power_w = 1e-3          # cavity drive power, W
# magnon_drive_field_t = 1e-6   # magnon drive amplitude, T
# omega_l_hz = 37.5e9           # cavity drive frequency, Hz
# omega_d_hz = 37.5e9           # magnon drive frequency, Hz
# bias_field_t = 1.34           # static bias field, T
#
# [sweep]                       # used by the sweep subcommand
# parameter = "cooperativity"   # cooperativity | delta_over_kappa_m | delta_hz | temperature_k
#                               # | modulation_amplitude | g0_hz | spin_count
# values = [0.5, 1.0, 10.0]
#
# Without a preset, omega_a_hz, kappa_a_hz, kappa_m_hz, spin_count and g0_hz
# (or coupling_from_mode_volume) are required.
"#;

/// Runs one parsed command, writing human-readable output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    if cli.command == Command::Schema {
        out.write_all(SCHEMA.as_bytes())?;
        return Ok(());
    }
    let settings = resolve(cli)?;
    match &cli.command {
        Command::Derive => print_derived(&settings, out),
        Command::Spectrum => {
            let path = write_spectrum(&settings)?;
            writeln!(out, "{}", path.display())?;
            Ok(())
        }
        Command::Sweep => {
            for path in write_sweep(&settings)? {
                writeln!(out, "{}", path.display())?;
            }
            Ok(())
        }
        Command::Figure { id } => {
            let id: FigureId = id.parse()?;
            let grid = settings.grid.unwrap_or_else(GridSpec::figure_default);
            for path in write_figure(id, &grid, &settings.out)? {
                writeln!(out, "{}", path.display())?;
            }
            Ok(())
        }
        Command::Validate => {
            let grid = settings.grid.unwrap_or_else(validation_grid);
            run_validation(&grid, out).map(|_| ())
        }
        Command::Schema => unreachable!(),
    }
}

pub fn error_line(kind: &str, message: &str) -> String {
    format!("error kind={kind} message={}", one_line(message))
}

/// Full entry point; returns the process exit status.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            let _ = writeln!(err, "{}", error_line("usage", first));
            return 2;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", error_line(e.kind(), &e.to_string()));
            1
        }
    }
}
