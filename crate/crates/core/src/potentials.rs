//! Pair potentials `phi(r)`, their first two derivatives, and the closed-form
//! stability thresholds available for each family.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Error, Result};
use crate::math;
use crate::Problem;

/// Inter-particle potential. All parameters are dimensionless.
///
/// In JSON this is `{"family": ..., "params": {...}}` with the families
/// `lennard_jones`, `buckingham`, `normalized_buckingham` and `spring`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(
        tag = "family",
        content = "params",
        rename_all = "snake_case",
        try_from = "unchecked::UncheckedPotential"
    )
)]
pub enum PotentialSpec {
    /// `c1 / r^delta1 - c2 / r^delta2` with `delta1 > delta2 > 2`.
    LennardJones {
        c1: f64,
        c2: f64,
        delta1: f64,
        delta2: f64,
    },
    /// `alpha exp(-beta r) - gamma / r^eta`.
    Buckingham {
        alpha: f64,
        beta: f64,
        gamma: f64,
        eta: f64,
    },
    /// Buckingham potential written through its well depth `D`, the location
    /// `R` of the minimum and the stiffness `xi > eta`.
    NormalizedBuckingham {
        #[cfg_attr(feature = "serde", serde(rename = "D"))]
        depth: f64,
        #[cfg_attr(feature = "serde", serde(rename = "R"))]
        r_min: f64,
        xi: f64,
        eta: f64,
    },
    /// `k r^2 / 2 + beta r^4 / 4`: Hooke (`beta = 0`), hard (`> 0`) or soft (`< 0`).
    Spring { k: f64, beta: f64 },
}

#[cfg(feature = "serde")]
mod unchecked {
    use serde::Deserialize;

    #[derive(Deserialize)]
    #[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
    pub(super) enum UncheckedPotential {
        LennardJones {
            c1: f64,
            c2: f64,
            delta1: f64,
            delta2: f64,
        },
        Buckingham {
            alpha: f64,
            beta: f64,
            gamma: f64,
            eta: f64,
        },
        NormalizedBuckingham {
            #[serde(rename = "D")]
            depth: f64,
            #[serde(rename = "R")]
            r_min: f64,
            xi: f64,
            eta: f64,
        },
        Spring {
            k: f64,
            beta: f64,
        },
    }

    impl TryFrom<UncheckedPotential> for super::PotentialSpec {
        type Error = super::Error;

        fn try_from(raw: UncheckedPotential) -> Result<Self, Self::Error> {
            use super::PotentialSpec as P;
            let spec = match raw {
                UncheckedPotential::LennardJones { c1, c2, delta1, delta2 } => {
                    P::LennardJones { c1, c2, delta1, delta2 }
                }
                UncheckedPotential::Buckingham { alpha, beta, gamma, eta } => {
                    P::Buckingham { alpha, beta, gamma, eta }
                }
                UncheckedPotential::NormalizedBuckingham { depth, r_min, xi, eta } => {
                    P::NormalizedBuckingham { depth, r_min, xi, eta }
                }
                UncheckedPotential::Spring { k, beta } => P::Spring { k, beta },
            };
            spec.validate()?;
            Ok(spec)
        }
    }
}

/// Which derivative of `phi` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    Value,
    First,
    Second,
}

impl TryFrom<u8> for Derivative {
    type Error = Error;

    fn try_from(order: u8) -> Result<Self> {
        match order {
            0 => Ok(Derivative::Value),
            1 => Ok(Derivative::First),
            2 => Ok(Derivative::Second),
            _ => Err(usage(format!("derivative order {order} not in {{0, 1, 2}}"))),
        }
    }
}

impl core::fmt::Display for Threshold {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} = {}", self.name, self.value)
    }
}

/// A closed-form stability boundary.
///
/// `coefficient` is the `k` of the margin `phi'' + k phi' / r` that vanishes
/// there (3 for the triangle and the first tetrahedral eigenvalue, 7 for the
/// second tetrahedral eigenvalue).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct Threshold {
    pub name: &'static str,
    pub coefficient: u8,
    pub value: f64,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive and finite, got {x}")))
    }
}

impl PotentialSpec {
    pub fn lennard_jones(c1: f64, c2: f64, delta1: f64, delta2: f64) -> Result<Self> {
        let p = PotentialSpec::LennardJones { c1, c2, delta1, delta2 };
        p.validate()?;
        Ok(p)
    }

    pub fn buckingham(alpha: f64, beta: f64, gamma: f64, eta: f64) -> Result<Self> {
        let p = PotentialSpec::Buckingham { alpha, beta, gamma, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn normalized_buckingham(depth: f64, r_min: f64, xi: f64, eta: f64) -> Result<Self> {
        let p = PotentialSpec::NormalizedBuckingham { depth, r_min, xi, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn spring(k: f64, beta: f64) -> Result<Self> {
        let p = PotentialSpec::Spring { k, beta };
        p.validate()?;
        Ok(p)
    }

    /// Checks the parameter constraints of each family.
    pub fn validate(&self) -> Result<()> {
        match *self {
            PotentialSpec::LennardJones { c1, c2, delta1, delta2 } => {
                positive("c1", c1)?;
                positive("c2", c2)?;
                if !(delta1 > delta2 && delta2 > 2.0 && delta1.is_finite()) {
                    return Err(domain(format!(
                        "Lennard-Jones exponents need delta1 > delta2 > 2, got ({delta1}, {delta2})"
                    )));
                }
                Ok(())
            }
            PotentialSpec::Buckingham { alpha, beta, gamma, eta } => {
                positive("alpha", alpha)?;
                positive("beta", beta)?;
                positive("gamma", gamma)?;
                positive("eta", eta)
            }
            PotentialSpec::NormalizedBuckingham { depth, r_min, xi, eta } => {
                positive("D", depth)?;
                positive("R", r_min)?;
                positive("xi", xi)?;
                positive("eta", eta)?;
                if xi <= eta {
                    return Err(domain(format!("normalized Buckingham needs xi > eta, got xi={xi}, eta={eta}")));
                }
                Ok(())
            }
            PotentialSpec::Spring { k, beta } => {
                positive("k", k)?;
                if !beta.is_finite() {
                    return Err(domain("spring beta must be finite"));
                }
                Ok(())
            }
        }
    }

    /// Family name as used in configuration files.
    pub fn family(&self) -> &'static str {
        match self {
            PotentialSpec::LennardJones { .. } => "lennard_jones",
            PotentialSpec::Buckingham { .. } => "buckingham",
            PotentialSpec::NormalizedBuckingham { .. } => "normalized_buckingham",
            PotentialSpec::Spring { .. } => "spring",
        }
    }

    /// `phi(r)`, `phi'(r)` or `phi''(r)`.
    pub fn eval(&self, r: f64, which: Derivative) -> Result<f64> {
        if !(r > 0.0) {
            return Err(domain(format!("potential evaluated at non-positive distance {r}")));
        }
        let [v, d1, d2] = self.derivatives(r);
        Ok(match which {
            Derivative::Value => v,
            Derivative::First => d1,
            Derivative::Second => d2,
        })
    }

    /// [`eval`](Self::eval) with a numeric derivative order.
    pub fn eval_order(&self, r: f64, order: u8) -> Result<f64> {
        self.eval(r, Derivative::try_from(order)?)
    }

    /// `[phi, phi', phi'']` at `r > 0` (unchecked).
    pub(crate) fn derivatives(&self, r: f64) -> [f64; 3] {
        match *self {
            PotentialSpec::LennardJones { c1, c2, delta1, delta2 } => {
                let rep = c1 * math::powf(r, -delta1);
                let att = c2 * math::powf(r, -delta2);
                [
                    rep - att,
                    (-delta1 * rep + delta2 * att) / r,
                    (delta1 * (delta1 + 1.0) * rep - delta2 * (delta2 + 1.0) * att) / (r * r),
                ]
            }
            PotentialSpec::Buckingham { alpha, beta, gamma, eta } => {
                let ex = alpha * math::exp(-beta * r);
                let pw = gamma * math::powf(r, -eta);
                buckingham_terms(ex, pw, beta, eta, r)
            }
            PotentialSpec::NormalizedBuckingham { depth, r_min, xi, eta } => {
                // alpha exp(-beta r) = D eta / (xi - eta) * exp(xi (1 - r / R)); the
                // exponent is combined before exponentiating so exp(xi) never appears alone.
                let beta = xi / r_min;
                let ex = math::exp(math::ln(depth * eta / (xi - eta)) + xi * (1.0 - r / r_min));
                let pw = depth * xi / (xi - eta) * math::powf(r_min / r, eta);
                buckingham_terms(ex, pw, beta, eta, r)
            }
            PotentialSpec::Spring { k, beta } => {
                let r2 = r * r;
                [
                    0.5 * k * r2 + 0.25 * beta * r2 * r2,
                    k * r + beta * r2 * r,
                    k + 3.0 * beta * r2,
                ]
            }
        }
    }

    /// `phi''(r) + k phi'(r) / r`.
    pub fn stability_margin(&self, r: f64, k: f64) -> Result<f64> {
        let d2 = self.eval(r, Derivative::Second)?;
        let d1 = self.eval(r, Derivative::First)?;
        Ok(d2 + k * d1 / r)
    }

    pub(crate) fn margin_unchecked(&self, r: f64, k: f64) -> f64 {
        let [_, d1, d2] = self.derivatives(r);
        d2 + k * d1 / r
    }

    /// Closed-form stability boundaries of the symmetric state, where known.
    ///
    /// Lennard-Jones: `A0` (triangle) or `V0` plus `V1` when `delta2 > 6`
    /// (tetrahedron). Soft spring: `A0`, or `V1` and `V2`. Everything else,
    /// including Buckingham and the stiff springs, returns an empty list.
    pub fn closed_form_thresholds(&self, problem: Problem) -> Vec<Threshold> {
        const SQRT3: f64 = 1.732_050_807_568_877_2;
        const SQRT2: f64 = core::f64::consts::SQRT_2;
        match (*self, problem) {
            (PotentialSpec::LennardJones { c1, c2, delta1, delta2 }, Problem::Triangle) => {
                let ratio = c1 * delta1 * (delta1 - 2.0) / (c2 * delta2 * (delta2 - 2.0));
                vec![Threshold {
                    name: "A0",
                    coefficient: 3,
                    value: SQRT3 / 4.0 * math::powf(ratio, 2.0 / (delta1 - delta2)),
                }]
            }
            (PotentialSpec::LennardJones { c1, c2, delta1, delta2 }, Problem::Tetrahedron) => {
                let ratio = c1 * delta1 * (delta1 - 2.0) / (c2 * delta2 * (delta2 - 2.0));
                let mut out = vec![Threshold {
                    name: "V0",
                    coefficient: 3,
                    value: SQRT2 / 12.0 * math::powf(ratio, 3.0 / (delta1 - delta2)),
                }];
                // delta2 in (2, 6]: the second margin never vanishes.
                if delta2 > 6.0 {
                    let ratio7 = c1 * delta1 * (delta1 - 6.0) / (c2 * delta2 * (delta2 - 6.0));
                    out.push(Threshold {
                        name: "V1",
                        coefficient: 7,
                        value: SQRT2 / 12.0 * math::powf(ratio7, 3.0 / (delta1 - delta2)),
                    });
                }
                out
            }
            (PotentialSpec::Spring { k, beta }, Problem::Triangle) if beta < 0.0 => {
                vec![Threshold {
                    name: "A0",
                    coefficient: 3,
                    value: -k / (2.0 * SQRT3 * beta),
                }]
            }
            (PotentialSpec::Spring { k, beta }, Problem::Tetrahedron) if beta < 0.0 => {
                let b3 = beta * beta * beta;
                vec![
                    Threshold {
                        name: "V1",
                        coefficient: 3,
                        value: math::sqrt(-k * k * k / (243.0 * b3)),
                    },
                    Threshold {
                        name: "V2",
                        coefficient: 7,
                        value: math::sqrt(-8.0 * k * k * k / (1125.0 * b3)),
                    },
                ]
            }
            _ => Vec::new(),
        }
    }

    /// Sufficient condition for the symmetric triangle to be stable on a
    /// nonempty interval `(A0, A1)`:
    /// `alpha beta e^-4 > gamma eta (eta - 2) (beta / 4)^(eta + 1)`.
    ///
    /// Both sides are compared in log space.
    pub fn buckingham_interval_certificate(&self) -> Result<bool> {
        let (ln_alpha, beta, gamma, eta) = match *self {
            PotentialSpec::Buckingham { alpha, beta, gamma, eta } => (math::ln(alpha), beta, gamma, eta),
            PotentialSpec::NormalizedBuckingham { depth, r_min, xi, eta } => {
                let (_, beta, gamma) = normalized_buckingham_convert(depth, r_min, xi, eta)?;
                (math::ln(depth * eta / (xi - eta)) + xi, beta, gamma, eta)
            }
            _ => {
                return Err(usage(format!(
                    "interval certificate only applies to Buckingham potentials, not {}",
                    self.family()
                )))
            }
        };
        if !(eta > 2.0) {
            return Err(usage(format!("interval certificate needs eta > 2, got {eta}")));
        }
        let lhs = ln_alpha + math::ln(beta) - 4.0;
        let rhs = math::ln(gamma) + math::ln(eta) + math::ln(eta - 2.0) + (eta + 1.0) * math::ln(beta / 4.0);
        Ok(lhs > rhs)
    }
}

fn buckingham_terms(ex: f64, pw: f64, beta: f64, eta: f64, r: f64) -> [f64; 3] {
    [
        ex - pw,
        -beta * ex + eta * pw / r,
        beta * beta * ex - eta * (eta + 1.0) * pw / (r * r),
    ]
}

/// Converts `(D, R, xi, eta)` to the plain Buckingham `(alpha, beta, gamma)`.
pub fn normalized_buckingham_convert(depth: f64, r_min: f64, xi: f64, eta: f64) -> Result<(f64, f64, f64)> {
    positive("D", depth)?;
    positive("R", r_min)?;
    positive("xi", xi)?;
    positive("eta", eta)?;
    if xi <= eta {
        return Err(domain(format!("normalized Buckingham needs xi > eta, got xi={xi}, eta={eta}")));
    }
    let alpha = depth * eta * math::exp(xi) / (xi - eta);
    let beta = xi / r_min;
    let gamma = depth * xi * math::powf(r_min, eta) / (xi - eta);
    Ok((alpha, beta, gamma))
}
