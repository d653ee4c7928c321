//! Closed-form susceptibilities and input-to-output transfer coefficients.
//!
//! The output phase quadrature is
//! `P_out(ω) = A X'_m,in + B P'_m,in + C X_a,in + D P_a,in`, and this module
//! evaluates `(A, B, C, D)` for both interaction forms.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{cooperativity, DerivedParams, PhysicalParams, Regime};

/// Relative size below which a self-energy bracket is treated as zero.
pub const SINGULARITY_TOLERANCE: f64 = 1e-12;

/// The four rates that fully determine the frequency response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rates {
    pub delta: f64,
    pub kappa_a: f64,
    pub kappa_m: f64,
    /// Effective coupling: `g0 ℰ` beyond the RWA, `g0` under it.
    pub coupling: f64,
}

impl Rates {
    pub fn new(delta: f64, kappa_a: f64, kappa_m: f64, coupling: f64) -> Result<Self> {
        if !(kappa_a > 0.0 && kappa_a.is_finite() && kappa_m > 0.0 && kappa_m.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "decay rates must be positive (kappa_a = {kappa_a}, kappa_m = {kappa_m})"
            )));
        }
        if !(delta.is_finite() && coupling.is_finite()) {
            return Err(Error::InvalidInput(
                "delta and coupling must be finite".into(),
            ));
        }
        Ok(Rates {
            delta,
            kappa_a,
            kappa_m,
            coupling,
        })
    }

    /// Rates whose coupling reproduces the requested cooperativity.
    pub fn from_cooperativity(
        cooperativity: f64,
        delta: f64,
        kappa_a: f64,
        kappa_m: f64,
    ) -> Result<Self> {
        if !(cooperativity >= 0.0 && cooperativity.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "cooperativity must be >= 0, got {cooperativity}"
            )));
        }
        let coupling = (cooperativity * kappa_a * kappa_m / 4.0).sqrt();
        Rates::new(delta, kappa_a, kappa_m, coupling)
    }

    pub fn from_params(params: &PhysicalParams, derived: &DerivedParams) -> Self {
        Rates {
            delta: params.delta,
            kappa_a: params.kappa_a,
            kappa_m: params.kappa_m,
            coupling: derived.g_eff,
        }
    }

    pub fn cooperativity(&self) -> f64 {
        cooperativity(self.coupling, self.kappa_a, self.kappa_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Susceptibilities {
    BeyondRwa {
        chi_a: Complex64,
        chi_m: Complex64,
        /// χ_m dressed by the cavity-mediated self-energy.
        chi_m_prime: Complex64,
    },
    UnderRwa {
        chi_a: Complex64,
        chi_m: Complex64,
        psi: Complex64,
    },
}

impl Susceptibilities {
    pub fn chi_m(&self) -> Complex64 {
        match *self {
            Susceptibilities::BeyondRwa { chi_m, .. }
            | Susceptibilities::UnderRwa { chi_m, .. } => chi_m,
        }
    }

    pub fn chi_a(&self) -> Complex64 {
        match *self {
            Susceptibilities::BeyondRwa { chi_a, .. }
            | Susceptibilities::UnderRwa { chi_a, .. } => chi_a,
        }
    }
}

/// Gains from `(X'_m,in, P'_m,in, X_a,in, P_a,in)` to `P_out`, in that order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferCoefficients {
    pub omega: f64,
    pub regime: Regime,
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl TransferCoefficients {
    pub fn as_array(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// `|A|² + |B|²`, the magnonic response.
    pub fn magnon_weight(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    /// `|C|² + |D|²`.
    pub fn cavity_weight(&self) -> f64 {
        self.c.norm_sqr() + self.d.norm_sqr()
    }
}

fn magnon_chi(omega: f64, kappa_m: f64) -> Complex64 {
    1.0 / Complex64::new(kappa_m / 2.0, omega)
}

fn check_bracket(bracket: Complex64, terms: &[Complex64], omega: f64) -> Result<()> {
    let scale = terms.iter().fold(1.0_f64, |acc, t| acc.max(t.norm()));
    if bracket.norm() < SINGULARITY_TOLERANCE * scale || !bracket.is_finite() {
        return Err(Error::PolaritonSingularity { omega });
    }
    Ok(())
}

pub fn susceptibilities_beyond(omega: f64, rates: &Rates) -> Result<Susceptibilities> {
    let Rates {
        delta,
        kappa_a,
        kappa_m,
        coupling,
    } = *rates;
    let cavity_pole = Complex64::new(kappa_a / 2.0, omega);
    // Δ² − ω² + iωκ_a + κ_a²/4
    let cavity_den = cavity_pole * cavity_pole + delta * delta;
    let chi_a = delta / cavity_den;
    let chi_m = magnon_chi(omega, kappa_m);

    let rotation = delta * delta * chi_m * chi_m;
    let self_energy = 4.0 * delta * coupling * coupling * chi_a * chi_m * chi_m;
    let bracket = 1.0 + rotation - self_energy;
    check_bracket(bracket, &[rotation, self_energy], omega)?;

    Ok(Susceptibilities::BeyondRwa {
        chi_a,
        chi_m,
        chi_m_prime: chi_m / bracket,
    })
}

pub fn susceptibilities_under_rwa(omega: f64, rates: &Rates) -> Result<Susceptibilities> {
    let Rates {
        delta,
        kappa_a,
        kappa_m,
        coupling,
    } = *rates;
    let g2 = coupling * coupling;
    let s = Complex64::new(kappa_a / 2.0, omega);
    let chi_m = magnon_chi(omega, kappa_m);
    let chi_a = delta / (s * s + delta * delta + g2 * chi_m * s);
    let ladder = 1.0 + chi_m * s;

    let terms = [
        delta * delta * chi_m * chi_m,
        -delta * g2 * chi_m * chi_m * chi_a * ladder,
        -delta * g2 * chi_m * chi_a / s * ladder,
        g2 * chi_m / s,
    ];
    let bracket = 1.0 + terms.iter().sum::<Complex64>();
    check_bracket(bracket, &terms, omega)?;

    Ok(Susceptibilities::UnderRwa {
        chi_a,
        chi_m,
        psi: 1.0 / bracket,
    })
}

pub fn susceptibilities(omega: f64, rates: &Rates, regime: Regime) -> Result<Susceptibilities> {
    match regime {
        Regime::BeyondRwa => susceptibilities_beyond(omega, rates),
        Regime::UnderRwa => susceptibilities_under_rwa(omega, rates),
    }
}

pub fn transfer_beyond(omega: f64, rates: &Rates) -> Result<TransferCoefficients> {
    let Rates {
        delta,
        kappa_a,
        kappa_m,
        coupling: g,
    } = *rates;
    let (chi_a, chi_m, chi_m_prime) = match susceptibilities_beyond(omega, rates)? {
        Susceptibilities::BeyondRwa {
            chi_a,
            chi_m,
            chi_m_prime,
        } => (chi_a, chi_m, chi_m_prime),
        Susceptibilities::UnderRwa { .. } => unreachable!(),
    };
    let root = (kappa_a * kappa_m).sqrt();
    let cavity_pole = Complex64::new(kappa_a / 2.0, omega);
    let cavity_den = cavity_pole * cavity_pole + delta * delta;
    // (Δχ_a − 1) / (2iω + κ_a)
    let loop_gain = (delta * chi_a - 1.0) / (2.0 * cavity_pole);
    // χ_a (Δχ_a − 1) / Δ with the 1/Δ cancelled analytically.
    let chi_a_loop = -(cavity_pole * cavity_pole) / (cavity_den * cavity_den);
    let dressed = delta * chi_m * chi_m_prime;

    let a = 4.0 * g * root * loop_gain * chi_m_prime;
    let b = 4.0 * g * root * dressed * loop_gain;
    let c = -4.0 * g * g * kappa_a * dressed * chi_a_loop - kappa_a * chi_a;
    let d = -8.0 * g * g * kappa_a * dressed * chi_a * loop_gain - 2.0 * kappa_a * loop_gain - 1.0;

    Ok(TransferCoefficients {
        omega,
        regime: Regime::BeyondRwa,
        a,
        b,
        c,
        d,
    })
}

pub fn transfer_under_rwa(omega: f64, rates: &Rates) -> Result<TransferCoefficients> {
    let Rates {
        delta,
        kappa_a,
        kappa_m,
        coupling: g0,
    } = *rates;
    let (chi_a, chi_m, psi) = match susceptibilities_under_rwa(omega, rates)? {
        Susceptibilities::UnderRwa { chi_a, chi_m, psi } => (chi_a, chi_m, psi),
        Susceptibilities::BeyondRwa { .. } => unreachable!(),
    };
    let g2 = g0 * g0;
    let s = Complex64::new(kappa_a / 2.0, omega);
    let sqrt_ka = kappa_a.sqrt();
    let sqrt_km = kappa_m.sqrt();
    let root = sqrt_ka * sqrt_km;
    let chi_m2 = chi_m * chi_m;
    let ladder = 1.0 + chi_m * s;
    // 1 + Δ²χ_m² − Δ g0² χ_m² χ_a [1 + χ_m s]
    let dressing = 1.0 + delta * delta * chi_m2 - delta * g2 * chi_m2 * chi_a * ladder;
    // −g0² χ_m³ χ_a √κ_m s + Δ χ_m² √κ_m
    let cross = -g2 * chi_m2 * chi_m * chi_a * sqrt_km * s + delta * chi_m2 * sqrt_km;

    let a = psi * (g0 * delta * chi_m * chi_a * root / s * ladder - g0 * chi_m * root / s);
    let b = psi
        * (g0 * delta * chi_a * sqrt_ka / s * ladder * cross
            - g0 * chi_m * chi_a * root * dressing
            - g0 * sqrt_ka / s * cross);
    let c = psi
        * (-g2 * chi_m2 * chi_a * chi_a * delta * kappa_a * ladder - kappa_a * chi_a * dressing
            + g2 * chi_m2 * chi_a * kappa_a);
    let d = psi
        * (-g2 * delta * delta * chi_m2 * chi_a * chi_a * kappa_a / s * ladder
            + (kappa_a - delta * chi_a * kappa_a) / s * dressing
            + delta * kappa_a * g2 * chi_m2 * chi_a / s)
        - 1.0;

    Ok(TransferCoefficients {
        omega,
        regime: Regime::UnderRwa,
        a,
        b,
        c,
        d,
    })
}

pub fn transfer(omega: f64, rates: &Rates, regime: Regime) -> Result<TransferCoefficients> {
    match regime {
        Regime::BeyondRwa => transfer_beyond(omega, rates),
        Regime::UnderRwa => transfer_under_rwa(omega, rates),
    }
}
