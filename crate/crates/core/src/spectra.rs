//! Observables built from the transfer coefficients: output phase spectrum,
//! magnonic response, added noise, noise channels, noise power spectrum,
//! signal gain, SNR and sensitivity.
//!
//! The fluctuation spectra exclude the deterministic signal; a classical
//! field only enters through [`Magnetometer::signal_gain`] and
//! [`Magnetometer::snr`].

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{derive, DerivedParams, PhysicalParams, Regime};
use crate::response::{transfer, Rates, TransferCoefficients};

/// Thermal occupancies of the cavity and magnon baths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseBath {
    pub nbar_a: f64,
    pub nbar_m: f64,
}

impl NoiseBath {
    pub fn uniform(nbar: f64) -> Self {
        NoiseBath {
            nbar_a: nbar,
            nbar_m: nbar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub omega: f64,
    pub regime: Regime,
    /// R = |A|² + |B|².
    pub response: f64,
    /// Added noise in quanta, referred to the magnon input.
    pub added_noise: f64,
    /// Symmetrized output phase-quadrature spectrum in quanta.
    pub output_spectrum: f64,
    /// T²/Hz.
    pub noise_power: f64,
    /// T/√Hz.
    pub sensitivity: f64,
    /// (|P₁|², |P₂|²).
    pub channel_weights: (f64, f64),
}

/// A monochromatic test field `B(t) = B_s cos(ω_s t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalTone {
    /// T (per √Hz when compared with a sensitivity).
    pub amplitude: f64,
    pub frequency: f64,
}

/// Which drive sideband `ω ± ω_d` the tone falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sideband {
    Upper,
    Lower,
}

/// Field components `B(ω + ω_d)` and `B(ω − ω_d)` at an analysis frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandField {
    pub upper: Complex64,
    pub lower: Complex64,
}

impl SidebandField {
    /// B̃₁ = [B(ω + ω_d) − B(ω − ω_d)] / 2
    pub fn antisymmetric(&self) -> Complex64 {
        0.5 * (self.upper - self.lower)
    }

    /// B̃₂ = [B(ω + ω_d) + B(ω − ω_d)] / 2
    pub fn symmetric(&self) -> Complex64 {
        0.5 * (self.upper + self.lower)
    }
}

impl SignalTone {
    pub fn new(amplitude: f64, frequency: f64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "tone amplitude must be >= 0, got {amplitude}"
            )));
        }
        Ok(SignalTone {
            amplitude,
            frequency,
        })
    }

    /// Single-sideband convention: the whole amplitude lands on one sideband.
    pub fn sidebands(&self, sideband: Sideband) -> SidebandField {
        let full = Complex64::new(self.amplitude, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match sideband {
            Sideband::Upper => SidebandField {
                upper: full,
                lower: zero,
            },
            Sideband::Lower => SidebandField {
                upper: zero,
                lower: full,
            },
        }
    }
}

/// A fully specified sensor: response rates, bath occupancies and the
/// `√κ_m / η` prefactor that converts quanta into field units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Magnetometer {
    pub rates: Rates,
    pub regime: Regime,
    pub bath: NoiseBath,
    /// √κ_m / η, T/√Hz.
    pub sensitivity_prefactor: f64,
}

impl Magnetometer {
    pub fn new(rates: Rates, regime: Regime, bath: NoiseBath, sensitivity_prefactor: f64) -> Self {
        Magnetometer {
            rates,
            regime,
            bath,
            sensitivity_prefactor,
        }
    }

    pub fn from_derived(params: &PhysicalParams, derived: &DerivedParams) -> Self {
        Magnetometer {
            rates: Rates::from_params(params, derived),
            regime: derived.regime,
            bath: NoiseBath {
                nbar_a: derived.nbar_a,
                nbar_m: derived.nbar_m,
            },
            sensitivity_prefactor: derived.sensitivity_prefactor,
        }
    }

    pub fn from_params(params: &PhysicalParams, regime: Regime) -> Result<Self> {
        let derived = derive(params, regime)?;
        Ok(Self::from_derived(params, &derived))
    }

    pub fn transfer(&self, omega: f64) -> Result<TransferCoefficients> {
        transfer(omega, &self.rates, self.regime)
    }

    pub fn magnonic_response(&self, omega: f64) -> Result<f64> {
        Ok(self.transfer(omega)?.magnon_weight())
    }

    pub fn added_noise(&self, omega: f64) -> Result<f64> {
        added_noise_from(&self.transfer(omega)?, self.bath.nbar_a)
    }

    pub fn output_phase_spectrum(&self, omega: f64) -> Result<f64> {
        let t = self.transfer(omega)?;
        Ok(t.magnon_weight() * (self.bath.nbar_m + 0.5)
            + t.cavity_weight() * (self.bath.nbar_a + 0.5))
    }

    pub fn channel_weights(&self, omega: f64) -> Result<(f64, f64)> {
        channel_weights_from(&self.transfer(omega)?)
    }

    /// `S_N = (κ_m / η²)[(n̄_m + ½) + n_add]`.
    pub fn noise_power_spectrum(&self, omega: f64) -> Result<f64> {
        let n_add = self.added_noise(omega)?;
        Ok(self.noise_power_from(n_add))
    }

    /// Minimum detectable field at unit SNR, `√S_N`.
    pub fn sensitivity(&self, omega: f64) -> Result<f64> {
        Ok(self.noise_power_spectrum(omega)?.sqrt())
    }

    /// Amplitude over noise standard deviation, `|B̃| / √S_N`.
    pub fn snr(&self, omega: f64, tone: &SignalTone) -> Result<f64> {
        Ok(tone.amplitude / self.sensitivity(omega)?)
    }

    /// η √(2/κ_m), the factor multiplying B̃₁ and B̃₂ in the magnon inputs.
    pub fn source_gain(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.sensitivity_prefactor
    }

    /// Deterministic part of `P_out`: `i A s B̃₁ + B s B̃₂` with `s = η √(2/κ_m)`.
    pub fn signal_gain(&self, omega: f64, field: &SidebandField) -> Result<Complex64> {
        let t = self.transfer(omega)?;
        let s = self.source_gain();
        let i = Complex64::new(0.0, 1.0);
        Ok(i * t.a * s * field.antisymmetric() + t.b * s * field.symmetric())
    }

    /// All scalar observables at one frequency.
    pub fn point(&self, omega: f64) -> Result<SpectrumPoint> {
        let t = self.transfer(omega)?;
        let response = t.magnon_weight();
        let added_noise = added_noise_from(&t, self.bath.nbar_a)?;
        let channel_weights = channel_weights_from(&t)?;
        let output_spectrum =
            response * (self.bath.nbar_m + 0.5) + t.cavity_weight() * (self.bath.nbar_a + 0.5);
        let noise_power = self.noise_power_from(added_noise);
        Ok(SpectrumPoint {
            omega,
            regime: self.regime,
            response,
            added_noise,
            output_spectrum,
            noise_power,
            sensitivity: noise_power.sqrt(),
            channel_weights,
        })
    }

    fn noise_power_from(&self, added_noise: f64) -> f64 {
        self.sensitivity_prefactor
            * self.sensitivity_prefactor
            * (self.bath.nbar_m + 0.5 + added_noise)
    }
}

fn added_noise_from(t: &TransferCoefficients, nbar_a: f64) -> Result<f64> {
    let response = t.magnon_weight();
    if response <= 0.0 {
        return Err(Error::NoTransduction { omega: t.omega });
    }
    Ok((nbar_a + 0.5) * t.cavity_weight() / response)
}

fn channel_weights_from(t: &TransferCoefficients) -> Result<(f64, f64)> {
    let response = t.magnon_weight();
    if response <= 0.0 {
        return Err(Error::NoTransduction { omega: t.omega });
    }
    Ok((t.a.norm_sqr() / response, t.b.norm_sqr() / response))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{build_drift, signal_response, transfer_via_state_space};
    use crate::params::Preset;
    use approx::assert_relative_eq;

    const KAPPA_RATIO: f64 = 33.0 / 15.0;

    fn sensor(c: f64, delta: f64, nbar: f64, regime: Regime) -> Magnetometer {
        let rates = Rates::from_cooperativity(c, delta, KAPPA_RATIO, 1.0).unwrap();
        Magnetometer::new(rates, regime, NoiseBath::uniform(nbar), 1.0)
    }

    #[test]
    fn beyond_resonant_response_and_noise() {
        let s = sensor(1000.0, 0.0, 0.0, Regime::BeyondRwa);
        assert_relative_eq!(
            s.magnonic_response(0.0).unwrap(),
            16000.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(s.added_noise(0.0).unwrap(), 3.125e-5, max_relative = 1e-12);
        let s = sensor(1000.0, 0.0, 166.0, Regime::BeyondRwa);
        assert_relative_eq!(
            s.added_noise(0.0).unwrap(),
            166.5 / 16000.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn rwa_resonant_response_and_noise() {
        let s = sensor(1.0, 0.0, 3.0, Regime::UnderRwa);
        assert_relative_eq!(s.magnonic_response(0.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_eq!(s.added_noise(0.0).unwrap(), 0.0);
        let s = sensor(0.5, 0.0, 0.0, Regime::UnderRwa);
        assert_relative_eq!(
            s.magnonic_response(0.0).unwrap(),
            8.0 / 9.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn output_spectrum_at_resonance() {
        let s = sensor(1.0, 0.0, 0.0, Regime::BeyondRwa);
        assert_relative_eq!(
            s.output_phase_spectrum(0.0).unwrap(),
            8.5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn decoupled_output_spectrum_is_cavity_only() {
        let s = sensor(0.0, 0.4, 2.0, Regime::BeyondRwa);
        for &w in &[0.0, 0.2, 3.0] {
            let t = s.transfer(w).unwrap();
            assert_eq!(s.output_phase_spectrum(w).unwrap(), t.cavity_weight() * 2.5);
            assert_eq!(s.added_noise(w), Err(Error::NoTransduction { omega: w }));
            assert_eq!(
                s.channel_weights(w),
                Err(Error::NoTransduction { omega: w })
            );
        }
    }

    #[test]
    fn output_spectrum_matches_state_space() {
        let s = sensor(100.0, 0.0, 0.0, Regime::BeyondRwa);
        let model = build_drift(&s.rates, Regime::BeyondRwa);
        let t = transfer_via_state_space(0.3, &model).unwrap();
        let expected = 0.5 * (t.magnon_weight() + t.cavity_weight());
        let actual = s.output_phase_spectrum(0.3).unwrap();
        assert!((actual - expected).abs() / expected < 1e-9);
    }

    #[test]
    fn channel_weights_at_resonance() {
        let s = sensor(10.0, 0.0, 0.0, Regime::BeyondRwa);
        assert_eq!(s.channel_weights(0.0).unwrap(), (1.0, 0.0));
        // At ω = 0, χ_m = 2/κ_m so B = Δχ_m A = A when Δ = κ_m/2.
        let s = sensor(10.0, 0.5, 0.0, Regime::BeyondRwa);
        let (p1, p2) = s.channel_weights(0.0).unwrap();
        assert_relative_eq!(p1, 0.5, max_relative = 1e-14);
        assert_relative_eq!(p2, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn noise_power_floor_is_vacuum() {
        let mut s = sensor(1e12, 0.0, 0.0, Regime::BeyondRwa);
        s.sensitivity_prefactor = 3.0;
        assert_relative_eq!(
            s.noise_power_spectrum(0.0).unwrap(),
            4.5,
            max_relative = 1e-9
        );
    }

    #[test]
    fn preset_sensitivities() {
        let cases = [
            (Preset::BeyondRwaPaper, 0.0, 5.90e-18),
            (Preset::BeyondRwaPaper, 300.0, 1.08e-16),
            (Preset::RwaPaper, 0.0, 1.22e-16),
            (Preset::RwaPaper, 300.0, 4.87e-15),
            (Preset::CoplanarPaper, 0.01, 3.01e-16),
        ];
        for (preset, temperature, expected) in cases {
            let mut p = preset.params();
            p.temperature = temperature;
            let s = Magnetometer::from_params(&p, preset.regime()).unwrap();
            let value = s.sensitivity(0.0).unwrap();
            assert!(
                (value / expected - 1.0).abs() < 0.02,
                "{preset:?} {temperature}: {value:e}"
            );
        }
        let s =
            Magnetometer::from_params(&Preset::BeyondRwaPaper.params(), Regime::BeyondRwa).unwrap();
        let sn = s.noise_power_spectrum(0.0).unwrap();
        assert!((sn / 3.48e-35 - 1.0).abs() < 0.02, "{sn:e}");
    }

    #[test]
    fn snr_definitions() {
        let s =
            Magnetometer::from_params(&Preset::BeyondRwaPaper.params(), Regime::BeyondRwa).unwrap();
        let floor = s.sensitivity(0.0).unwrap();
        let tone = SignalTone::new(floor, 1e6).unwrap();
        assert_relative_eq!(s.snr(0.0, &tone).unwrap(), 1.0, max_relative = 1e-15);
        assert_eq!(
            s.snr(0.0, &SignalTone::new(0.0, 1e6).unwrap()).unwrap(),
            0.0
        );
        let tone = SignalTone::new(5.90e-18, 1e6).unwrap();
        assert!((s.snr(0.0, &tone).unwrap() - 1.0).abs() < 0.02);
        assert!(SignalTone::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn signal_gain_at_resonance() {
        let s = sensor(10.0, 0.0, 0.0, Regime::BeyondRwa);
        let tone = SignalTone::new(2.0, 1.0).unwrap();
        let gain = s
            .signal_gain(0.0, &tone.sidebands(Sideband::Upper))
            .unwrap();
        // |B̃₁| = amplitude / 2 on a single sideband.
        let expected = 4.0 * 10f64.sqrt() * s.source_gain() * 1.0;
        assert_relative_eq!(gain.norm(), expected, max_relative = 1e-12);

        let zero = SidebandField {
            upper: 0.0.into(),
            lower: 0.0.into(),
        };
        assert_eq!(s.signal_gain(0.3, &zero).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn signal_gain_matches_oracle_finite_differences() {
        for regime in [Regime::BeyondRwa, Regime::UnderRwa] {
            let s = sensor(20.0, 0.3, 0.0, regime);
            let model = build_drift(&s.rates, regime);
            let omega = 0.7;
            let field = SidebandField {
                upper: Complex64::new(0.8, -0.1),
                lower: Complex64::new(0.3, 0.4),
            };
            let (b1, b2) = (field.antisymmetric(), field.symmetric());
            let gain = s.source_gain();
            let zero = Complex64::new(0.0, 0.0);
            let h = 1e-3;
            let base = signal_response(omega, &model, gain, zero, zero).unwrap();
            let d1 = (signal_response(omega, &model, gain, Complex64::new(h, 0.0), zero).unwrap()
                - base)
                / h;
            let d2 = (signal_response(omega, &model, gain, zero, Complex64::new(h, 0.0)).unwrap()
                - base)
                / h;
            let expected = d1 * b1 + d2 * b2;
            let actual = s.signal_gain(omega, &field).unwrap();
            assert!(
                (actual - expected).norm() / expected.norm() < 1e-9,
                "{actual} vs {expected}"
            );
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn any_regime() -> impl Strategy<Value = Regime> {
            prop_oneof![Just(Regime::BeyondRwa), Just(Regime::UnderRwa)]
        }

        proptest! {
            #[test]
            fn reconstruction_and_normalization(
                w in 0.0f64..50.0, delta in 0.0f64..5.0, c in 0.1f64..1000.0,
                nbar in 0.0f64..1000.0, regime in any_regime()
            ) {
                let s = sensor(c, delta, nbar, regime);
                if let Ok(p) = s.point(w) {
                    let rebuilt = p.response * (nbar + 0.5 + p.added_noise);
                    prop_assert!((rebuilt - p.output_spectrum).abs() <= 1e-12 * p.output_spectrum);
                    let (p1, p2) = p.channel_weights;
                    prop_assert!((p1 + p2 - 1.0).abs() <= 1e-12);
                    prop_assert!(p.added_noise >= 0.0 && p.response >= 0.0);
                    let expected = (nbar + 0.5 + p.added_noise).sqrt();
                    prop_assert!((p.sensitivity - expected).abs() <= 1e-14 * expected);
                }
            }

            #[test]
            fn observables_even_in_frequency(
                w in 1e-3f64..50.0, delta in 0.0f64..5.0, c in 0.1f64..1000.0, regime in any_regime()
            ) {
                let s = sensor(c, delta, 1.0, regime);
                if let (Ok(p), Ok(n)) = (s.point(w), s.point(-w)) {
                    for (x, y) in [
                        (p.response, n.response),
                        (p.added_noise, n.added_noise),
                        (p.output_spectrum, n.output_spectrum),
                        (p.noise_power, n.noise_power),
                    ] {
                        prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(y.abs()));
                    }
                }
            }

            #[test]
            fn rwa_response_bounded_by_one(c in 0.01f64..1000.0) {
                let s = sensor(c, 0.0, 0.0, Regime::UnderRwa);
                let r = s.magnonic_response(0.0).unwrap();
                prop_assert!(r <= 1.0 + 1e-12);
                prop_assert!((r - 4.0 * c / (1.0 + c).powi(2)).abs() <= 1e-10 * r);
            }
        }
    }
}
