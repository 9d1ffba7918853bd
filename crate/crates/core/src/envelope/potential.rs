//! Pair potentials `f(u, v)` acting on directors.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::SampledFunction1D;
use crate::error::{Error, Result};
use crate::qtensor::{Director2, Director3};

/// Tolerance for the exact-value tests of the two-valued example potential.
pub const NORADIAL_TOL: f64 = 1e-9;

type PairFn = dyn Fn(&Director2, &Director2) -> f64 + Send + Sync;

/// User-supplied planar pair potential. Evaluations are symmetrised so that
/// sign flips and exchange of the two arguments never change the value.
#[derive(Clone)]
pub struct GeneralPair {
    name: String,
    f: Arc<PairFn>,
}

impl GeneralPair {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Director2, &Director2) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, u: &Director2, v: &Director2) -> f64 {
        let (a, b) = (u.canonical(), v.canonical());
        0.5 * ((self.f)(&a, &b) + (self.f)(&b, &a))
    }
}

impl fmt::Debug for GeneralPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralPair").field("name", &self.name).finish()
    }
}

/// Interaction potential between neighbouring directors.
#[derive(Debug, Clone)]
pub enum Potential {
    /// `h(x) = -x^2`.
    LebwohlLasher,
    /// `h(x) = -x^p`.
    Power { p: f64 },
    /// `h(x) = (x^2 - s^2)^2`.
    QuarticWell { s: f64 },
    /// `h(x) = (x^2 - s^2)^4`, a well with quartic contact at `s`.
    SteepWell { s: f64 },
    /// `h(x) = (1 - x)^2`.
    OneMinus,
    /// Tabulated `h` with linear interpolation.
    Sampled(SampledFunction1D),
    /// Two-valued anisotropic potential: zero exactly when one director
    /// makes `|u·e1| = l` and the pair makes `|u·v| = m`, one otherwise.
    Noradial { l: f64, m: f64 },
    General(GeneralPair),
}

fn pow_abs(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

impl Potential {
    pub fn name(&self) -> String {
        match self {
            Potential::LebwohlLasher => "lebwohl-lasher".into(),
            Potential::Power { p } => format!("power(p={p})"),
            Potential::QuarticWell { s } => format!("quartic-well(s={s})"),
            Potential::SteepWell { s } => format!("steep-well(s={s})"),
            Potential::OneMinus => "one-minus".into(),
            Potential::Sampled(h) => format!("sampled({} nodes)", h.len()),
            Potential::Noradial { l, m } => format!("example-noradial(l={l}, m={m})"),
            Potential::General(g) => format!("general({})", g.name),
        }
    }

    pub fn is_isotropic(&self) -> bool {
        !matches!(self, Potential::Noradial { .. } | Potential::General(_))
    }

    /// Radial profile `h(x)`, `x = |u·v|`, for isotropic potentials.
    pub fn h(&self, x: f64) -> Option<f64> {
        let x = x.clamp(0.0, 1.0);
        Some(match self {
            Potential::LebwohlLasher => -x * x,
            Potential::Power { p } => -pow_abs(x, *p),
            Potential::QuarticWell { s } => {
                let d = x * x - s * s;
                d * d
            }
            Potential::SteepWell { s } => {
                let d = x * x - s * s;
                let d2 = d * d;
                d2 * d2
            }
            Potential::OneMinus => {
                let d = 1.0 - x;
                d * d
            }
            Potential::Sampled(h) => h.eval(x),
            Potential::Noradial { .. } | Potential::General(_) => return None,
        })
    }

    /// `h'(x)`; one-sided slopes of the interpolant for sampled profiles.
    pub fn h_derivative(&self, x: f64) -> Option<f64> {
        let x = x.clamp(0.0, 1.0);
        Some(match self {
            Potential::LebwohlLasher => -2.0 * x,
            Potential::Power { p } => {
                if x == 0.0 && *p < 1.0 {
                    f64::NEG_INFINITY
                } else {
                    -p * pow_abs(x, p - 1.0)
                }
            }
            Potential::QuarticWell { s } => 4.0 * x * (x * x - s * s),
            Potential::SteepWell { s } => {
                let d = x * x - s * s;
                8.0 * x * d * d * d
            }
            Potential::OneMinus => -2.0 * (1.0 - x),
            Potential::Sampled(h) => h.slope(x),
            Potential::Noradial { .. } | Potential::General(_) => return None,
        })
    }

    /// `inf h` for isotropic profiles (grid minimum for sampled ones).
    pub fn inf_h(&self) -> Option<f64> {
        match self {
            Potential::LebwohlLasher | Potential::Power { .. } => Some(-1.0),
            Potential::QuarticWell { .. } | Potential::SteepWell { .. } | Potential::OneMinus => {
                Some(0.0)
            }
            Potential::Sampled(h) => Some(h.min()),
            Potential::Noradial { .. } => Some(0.0),
            Potential::General(_) => None,
        }
    }

    /// Planar pair energy `f(u, v)`.
    pub fn pair(&self, u: &Director2, v: &Director2) -> f64 {
        match self {
            Potential::Noradial { l, m } => {
                let t = |a: &Director2, b: &Director2| -> f64 {
                    let ok = (a.x().abs() - l).abs() <= NORADIAL_TOL
                        && (a.dot(b).abs() - m).abs() <= NORADIAL_TOL;
                    if ok {
                        0.0
                    } else {
                        1.0
                    }
                };
                t(u, v).min(t(v, u))
            }
            Potential::General(g) => g.eval(u, v),
            iso => iso.h(u.dot(v).abs()).expect("isotropic"),
        }
    }

    /// Spatial pair energy; only isotropic potentials extend to 3D.
    pub fn pair3(&self, u: &Director3, v: &Director3) -> Result<f64> {
        self.h(u.dot(v).abs())
            .ok_or_else(|| Error::UnsupportedPotential(format!("{} is planar only", self.name())))
    }

    pub fn require_isotropic(&self) -> Result<()> {
        if self.is_isotropic() {
            Ok(())
        } else {
            Err(Error::UnsupportedPotential(format!("{} is not isotropic", self.name())))
        }
    }
}

/// Serializable named potentials used by configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NamedPotential {
    LebwohlLasher {},
    Power { p: f64 },
    QuarticWell { s: f64 },
    SteepWell { s: f64 },
    OneMinus {},
    ExampleNoradial { l: f64, m: f64 },
}

impl NamedPotential {
    pub fn build(&self) -> Result<Potential> {
        let unit_open = |name: &str, x: f64| {
            if x > 0.0 && x < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must lie in (0, 1), got {x}")))
            }
        };
        Ok(match *self {
            NamedPotential::LebwohlLasher {} => Potential::LebwohlLasher,
            NamedPotential::Power { p } => {
                if !(p > 0.0) {
                    return Err(Error::InvalidSpec(format!("power exponent must be positive, got {p}")));
                }
                Potential::Power { p }
            }
            NamedPotential::QuarticWell { s } => {
                unit_open("s", s)?;
                Potential::QuarticWell { s }
            }
            NamedPotential::SteepWell { s } => {
                unit_open("s", s)?;
                Potential::SteepWell { s }
            }
            NamedPotential::OneMinus {} => Potential::OneMinus,
            NamedPotential::ExampleNoradial { l, m } => {
                unit_open("l", l)?;
                unit_open("m", m)?;
                Potential::Noradial { l, m }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_forms() {
        assert_eq!(Potential::LebwohlLasher.h(0.5), Some(-0.25));
        assert_eq!(Potential::QuarticWell { s: 0.5 }.h(0.5), Some(0.0));
        assert_eq!(Potential::OneMinus.h(1.0), Some(0.0));
        assert_eq!(Potential::Power { p: 3.0 }.h(0.5), Some(-0.125));
        assert_eq!(Potential::SteepWell { s: 0.5 }.h(0.0), Some(0.0625 * 0.0625));
        assert!(Potential::Noradial { l: 0.5, m: 0.5 }.h(0.3).is_none());
    }

    #[test]
    fn derivatives_match_differences() {
        let pots = [
            Potential::LebwohlLasher,
            Potential::Power { p: 3.0 },
            Potential::QuarticWell { s: 0.4 },
            Potential::SteepWell { s: 0.7 },
            Potential::OneMinus,
        ];
        for p in &pots {
            for x in [0.1, 0.35, 0.8] {
                let d = 1e-6;
                let fd = (p.h(x + d).unwrap() - p.h(x - d).unwrap()) / (2.0 * d);
                assert!((fd - p.h_derivative(x).unwrap()).abs() < 1e-7, "{}", p.name());
            }
        }
    }

    #[test]
    fn general_pair_is_symmetrised() {
        let g = GeneralPair::new("skew", |u: &Director2, v: &Director2| u.x() * 3.0 + v.y() * v.y());
        let p = Potential::General(g);
        let u = Director2::from_angle(0.4);
        let v = Director2::from_angle(2.2);
        let base = p.pair(&u, &v);
        assert_eq!(p.pair(&u.flipped(), &v), base);
        assert_eq!(p.pair(&u, &v.flipped()), base);
        assert_eq!(p.pair(&v, &u), base);
    }

    #[test]
    fn noradial_zero_set() {
        let (l, m) = (0.8f64, 0.6f64);
        let p = Potential::Noradial { l, m };
        let tl = l.acos();
        let tm = m.acos();
        let u = Director2::from_angle(tl);
        let v = Director2::from_angle(tl + tm);
        assert_eq!(p.pair(&u, &v), 0.0);
        assert_eq!(p.pair(&v, &u), 0.0);
        assert_eq!(p.pair(&u, &Director2::from_angle(tl + PI / 2.0)), 1.0);
    }

    #[test]
    fn named_roundtrip_and_validation() {
        let n: NamedPotential = serde_json::from_str(r#"{"kind":"quartic-well","s":0.5}"#).unwrap();
        assert_eq!(n, NamedPotential::QuarticWell { s: 0.5 });
        assert!(serde_json::from_str::<NamedPotential>(r#"{"kind":"one-minus","x":1}"#).is_err());
        assert!(NamedPotential::QuarticWell { s: 1.5 }.build().is_err());
        let ll: NamedPotential = serde_json::from_str(r#"{"kind":"lebwohl-lasher"}"#).unwrap();
        assert_eq!(serde_json::to_string(&ll).unwrap(), r#"{"kind":"lebwohl-lasher"}"#);
    }
}
