//! Frequency grids, parameter sweeps and the figure datasets.
//!
//! Every abscissa is `ω/κ_m`. Figure datasets are evaluated in units where
//! `κ_m = 1` with `κ_a/κ_m = 33/15`; physical sweeps scale the grid by the
//! magnetometer's own `κ_m`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{build_drift, is_stable, Stability};
use crate::params::{derive, Preset, Regime};
use crate::response::Rates;
use crate::spectra::{Magnetometer, NoiseBath, SpectrumPoint};

/// κ_a/κ_m used by all figure datasets.
pub const FIGURE_KAPPA_RATIO: f64 = 33.0 / 15.0;

/// Room-temperature occupancy at 37.5 GHz quoted for the beyond-RWA figures.
pub const NBAR_ROOM_BEYOND: f64 = 166.0;

/// Room-temperature occupancy at 7.875 GHz quoted for the RWA figures.
pub const NBAR_ROOM_RWA: f64 = 793.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    Log,
    Linear,
}

/// `points` samples of `ω/κ_m` between `min` and `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub scale: GridScale,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, points: usize, scale: GridScale) -> Result<Self> {
        if points == 0 {
            return Err(Error::EmptyGrid);
        }
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::InvalidInput("grid bounds must be finite".into()));
        }
        match scale {
            GridScale::Log if min <= 0.0 => {
                return Err(Error::InvalidInput(format!(
                    "log grid needs min > 0, got {min}"
                )))
            }
            GridScale::Linear if min < 0.0 => {
                return Err(Error::InvalidInput(format!(
                    "grid needs min >= 0, got {min}"
                )))
            }
            _ => {}
        }
        if points > 1 && max <= min {
            return Err(Error::InvalidInput(format!(
                "grid needs max > min for {points} points, got {min}:{max}"
            )));
        }
        if points == 1 && max != min {
            return Err(Error::InvalidInput(
                "a single-point grid needs min == max".into(),
            ));
        }
        Ok(GridSpec {
            min,
            max,
            points,
            scale,
        })
    }

    /// 400 log-spaced points over `[10⁻³, 10]`.
    pub fn figure_default() -> Self {
        GridSpec {
            min: 1e-3,
            max: 1e1,
            points: 400,
            scale: GridScale::Log,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                if k == self.points - 1 {
                    return self.max;
                }
                let t = k as f64 / last;
                match self.scale {
                    GridScale::Log => self.min * (self.max / self.min).powf(t),
                    GridScale::Linear => self.min + (self.max - self.min) * t,
                }
            })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// Parses `min:max:points:log|lin`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidInput(format!(
                "grid must look like min:max:points:log|lin, got '{s}'"
            ))
        };
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        let min: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let max: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let points: usize = parts[2].trim().parse().map_err(|_| bad())?;
        let scale = match parts[3].trim() {
            "log" => GridScale::Log,
            "lin" | "linear" => GridScale::Linear,
            _ => return Err(bad()),
        };
        GridSpec::new(min, max, points, scale)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scale = match self.scale {
            GridScale::Log => "log",
            GridScale::Linear => "lin",
        };
        write!(f, "{}:{}:{}:{}", self.min, self.max, self.points, scale)
    }
}

/// Parameters shared by every point of a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesRecord {
    pub regime: Regime,
    pub delta_over_kappa_m: f64,
    /// C beyond the RWA, C′ under it.
    pub cooperativity: f64,
    pub nbar_a: f64,
    pub nbar_m: f64,
    pub kappa_a_over_kappa_m: f64,
    pub kappa_m: f64,
    pub sensitivity_prefactor: f64,
}

impl SeriesRecord {
    pub fn of(m: &Magnetometer) -> Self {
        SeriesRecord {
            regime: m.regime,
            delta_over_kappa_m: m.rates.delta / m.rates.kappa_m,
            cooperativity: m.rates.cooperativity(),
            nbar_a: m.bath.nbar_a,
            nbar_m: m.bath.nbar_m,
            kappa_a_over_kappa_m: m.rates.kappa_a / m.rates.kappa_m,
            kappa_m: m.rates.kappa_m,
            sensitivity_prefactor: m.sensitivity_prefactor,
        }
    }
}

/// A sensor in units of κ_m.
pub fn normalized_magnetometer(
    regime: Regime,
    delta_over_kappa_m: f64,
    cooperativity: f64,
    nbar: f64,
    sensitivity_prefactor: f64,
) -> Result<Magnetometer> {
    let rates =
        Rates::from_cooperativity(cooperativity, delta_over_kappa_m, FIGURE_KAPPA_RATIO, 1.0)?;
    Ok(Magnetometer::new(
        rates,
        regime,
        NoiseBath::uniform(nbar),
        sensitivity_prefactor,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Sample {
    Value { x: f64, point: SpectrumPoint },
    Gap { x: f64, reason: &'static str },
}

impl Sample {
    pub fn x(&self) -> f64 {
        match self {
            Sample::Value { x, .. } | Sample::Gap { x, .. } => *x,
        }
    }

    pub fn point(&self) -> Option<&SpectrumPoint> {
        match self {
            Sample::Value { point, .. } => Some(point),
            Sample::Gap { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSeries {
    pub label: String,
    pub record: SeriesRecord,
    pub stability: Stability,
    pub samples: Vec<Sample>,
}

impl SpectrumSeries {
    pub fn gap_count(&self) -> usize {
        self.samples.iter().filter(|s| s.point().is_none()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RatioSample {
    Value {
        x: f64,
        response_ratio: f64,
        noise_ratio: f64,
    },
    Gap {
        x: f64,
        reason: &'static str,
    },
}

impl RatioSample {
    pub fn x(&self) -> f64 {
        match self {
            RatioSample::Value { x, .. } | RatioSample::Gap { x, .. } => *x,
        }
    }

    /// `(ℛ, 𝒩)` when both regimes are regular at this point.
    pub fn ratios(&self) -> Option<(f64, f64)> {
        match self {
            RatioSample::Value {
                response_ratio,
                noise_ratio,
                ..
            } => Some((*response_ratio, *noise_ratio)),
            RatioSample::Gap { .. } => None,
        }
    }
}

/// `ℛ = R/R′` and `𝒩 = N/N′` on a common grid, `N = (n̄ + ½) + n_add`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSeries {
    pub label: String,
    pub beyond: SeriesRecord,
    pub rwa: SeriesRecord,
    pub samples: Vec<RatioSample>,
}

impl RatioSeries {
    pub fn gap_count(&self) -> usize {
        self.samples.iter().filter(|s| s.ratios().is_none()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", content = "series", rename_all = "lowercase")]
pub enum Dataset {
    Spectra(Vec<SpectrumSeries>),
    Ratios(Vec<RatioSeries>),
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Spectra(v) => v.len(),
            Dataset::Ratios(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn point_or_gap(m: &Magnetometer, x: f64) -> Result<Sample> {
    match m.point(x * m.rates.kappa_m) {
        Ok(point) => Ok(Sample::Value { x, point }),
        Err(e) if e.is_point_singularity() => Ok(Sample::Gap {
            x,
            reason: e.kind(),
        }),
        Err(e) => Err(e),
    }
}

/// Evaluates one sensor on the grid; points are computed in parallel and
/// assembled in grid order.
pub fn evaluate_series(label: &str, m: &Magnetometer, xs: &[f64]) -> Result<SpectrumSeries> {
    if xs.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let samples = xs
        .par_iter()
        .map(|&x| point_or_gap(m, x))
        .collect::<Result<Vec<_>>>()?;
    if samples.iter().all(|s| s.point().is_none()) {
        return Err(Error::AllPointsSingular {
            label: label.to_string(),
        });
    }
    Ok(SpectrumSeries {
        label: label.to_string(),
        record: SeriesRecord::of(m),
        stability: is_stable(&build_drift(&m.rates, m.regime)),
        samples,
    })
}

/// One series per family member, all on the same grid.
pub fn sweep(grid: &GridSpec, family: &[(String, Magnetometer)]) -> Result<Vec<SpectrumSeries>> {
    if family.is_empty() {
        return Err(Error::InvalidInput("sweep family is empty".into()));
    }
    let xs = grid.values();
    family
        .iter()
        .map(|(label, m)| evaluate_series(label, m, &xs))
        .collect()
}

fn ratio_at(beyond: &Magnetometer, rwa: &Magnetometer, x: f64) -> Result<RatioSample> {
    let pair = beyond
        .point(x * beyond.rates.kappa_m)
        .and_then(|b| rwa.point(x * rwa.rates.kappa_m).map(|r| (b, r)));
    match pair {
        Ok((b, r)) => {
            let total =
                b.noise_power / (beyond.sensitivity_prefactor * beyond.sensitivity_prefactor);
            let total_rwa = r.noise_power / (rwa.sensitivity_prefactor * rwa.sensitivity_prefactor);
            Ok(RatioSample::Value {
                x,
                response_ratio: b.response / r.response,
                noise_ratio: total / total_rwa,
            })
        }
        Err(e) if e.is_point_singularity() => Ok(RatioSample::Gap {
            x,
            reason: e.kind(),
        }),
        Err(e) => Err(e),
    }
}

pub fn evaluate_ratio(
    label: &str,
    beyond: &Magnetometer,
    rwa: &Magnetometer,
    xs: &[f64],
) -> Result<RatioSeries> {
    if xs.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let samples = xs
        .par_iter()
        .map(|&x| ratio_at(beyond, rwa, x))
        .collect::<Result<Vec<_>>>()?;
    if samples.iter().all(|s| s.ratios().is_none()) {
        return Err(Error::AllPointsSingular {
            label: label.to_string(),
        });
    }
    Ok(RatioSeries {
        label: label.to_string(),
        beyond: SeriesRecord::of(beyond),
        rwa: SeriesRecord::of(rwa),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FigureId {
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
    Fig4,
    Fig5a,
    Fig5b,
    Fig6a,
    Fig6b,
    Fig7,
    Fig8a,
    Fig8b,
}

impl FigureId {
    pub const ALL: [FigureId; 12] = [
        FigureId::Fig2a,
        FigureId::Fig2b,
        FigureId::Fig3a,
        FigureId::Fig3b,
        FigureId::Fig4,
        FigureId::Fig5a,
        FigureId::Fig5b,
        FigureId::Fig6a,
        FigureId::Fig6b,
        FigureId::Fig7,
        FigureId::Fig8a,
        FigureId::Fig8b,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Fig2a => "fig2a",
            FigureId::Fig2b => "fig2b",
            FigureId::Fig3a => "fig3a",
            FigureId::Fig3b => "fig3b",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5a => "fig5a",
            FigureId::Fig5b => "fig5b",
            FigureId::Fig6a => "fig6a",
            FigureId::Fig6b => "fig6b",
            FigureId::Fig7 => "fig7",
            FigureId::Fig8a => "fig8a",
            FigureId::Fig8b => "fig8b",
        }
    }

    pub fn regime(self) -> Regime {
        match self {
            FigureId::Fig5a
            | FigureId::Fig5b
            | FigureId::Fig6a
            | FigureId::Fig6b
            | FigureId::Fig7 => Regime::UnderRwa,
            _ => Regime::BeyondRwa,
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

pub const DETUNINGS: [f64; 4] = [0.0, 0.05, 0.5, 5.0];
pub const COOPERATIVITIES: [f64; 5] = [1000.0, 100.0, 10.0, 1.0, 0.5];
pub const THERMAL_COOPERATIVITIES_BEYOND: [f64; 3] = [1000.0, 100.0, 1.0];
pub const THERMAL_COOPERATIVITIES_RWA: [f64; 2] = [100.0, 1.0];
pub const COOPERATIVITY_RATIOS: [f64; 3] = [0.1, 1.0, 10.0];

fn preset_prefactor(regime: Regime) -> Result<f64> {
    let preset = match regime {
        Regime::BeyondRwa => Preset::BeyondRwaPaper,
        Regime::UnderRwa => Preset::RwaPaper,
    };
    Ok(derive(&preset.params(), regime)?.sensitivity_prefactor)
}

/// The curve family of one figure panel.
pub fn figure_family(id: FigureId) -> Result<Vec<(String, Magnetometer)>> {
    let regime = id.regime();
    let prefactor = preset_prefactor(regime)?;
    let make =
        |delta: f64, c: f64, nbar: f64| normalized_magnetometer(regime, delta, c, nbar, prefactor);
    let name = id.as_str();
    let mut family = Vec::new();
    match id {
        FigureId::Fig2a | FigureId::Fig2b => {
            for d in DETUNINGS {
                family.push((format!("{name}_delta_{d}"), make(d, 1000.0, 0.0)?));
            }
        }
        FigureId::Fig5a | FigureId::Fig5b => {
            for d in DETUNINGS {
                family.push((format!("{name}_delta_{d}"), make(d, 1.0, 0.0)?));
            }
        }
        FigureId::Fig3a | FigureId::Fig3b | FigureId::Fig6a | FigureId::Fig6b => {
            for c in COOPERATIVITIES {
                family.push((format!("{name}_C_{c}"), make(0.0, c, 0.0)?));
            }
        }
        FigureId::Fig4 | FigureId::Fig7 => {
            let (cs, room): (&[f64], f64) = if regime == Regime::BeyondRwa {
                (&THERMAL_COOPERATIVITIES_BEYOND, NBAR_ROOM_BEYOND)
            } else {
                (&THERMAL_COOPERATIVITIES_RWA, NBAR_ROOM_RWA)
            };
            for nbar in [0.0, room] {
                for &c in cs {
                    family.push((format!("{name}_C_{c}_nbar_{nbar}"), make(0.0, c, nbar)?));
                }
            }
        }
        FigureId::Fig8a | FigureId::Fig8b => {
            return Err(Error::InvalidInput(format!("{name} is a ratio figure")));
        }
    }
    Ok(family)
}

/// Pairs (beyond, RWA) for the ratio figures, with `C′ = 1`.
pub fn ratio_family(id: FigureId) -> Result<Vec<(String, Magnetometer, Magnetometer)>> {
    if !matches!(id, FigureId::Fig8a | FigureId::Fig8b) {
        return Err(Error::InvalidInput(format!("{id} is not a ratio figure")));
    }
    let beyond_prefactor = preset_prefactor(Regime::BeyondRwa)?;
    let rwa_prefactor = preset_prefactor(Regime::UnderRwa)?;
    let rwa = normalized_magnetometer(Regime::UnderRwa, 0.0, 1.0, 0.0, rwa_prefactor)?;
    COOPERATIVITY_RATIOS
        .iter()
        .map(|&ratio| {
            let beyond =
                normalized_magnetometer(Regime::BeyondRwa, 0.0, ratio, 0.0, beyond_prefactor)?;
            Ok((format!("{id}_ratio_{ratio}"), beyond, rwa))
        })
        .collect()
}

pub fn figure_dataset(id: FigureId, grid: &GridSpec) -> Result<Dataset> {
    let xs = grid.values();
    if matches!(id, FigureId::Fig8a | FigureId::Fig8b) {
        let series = ratio_family(id)?
            .iter()
            .map(|(label, beyond, rwa)| evaluate_ratio(label, beyond, rwa, &xs))
            .collect::<Result<Vec<_>>>()?;
        return Ok(Dataset::Ratios(series));
    }
    Ok(Dataset::Spectra(sweep(grid, &figure_family(id)?)?))
}
