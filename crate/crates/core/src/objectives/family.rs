use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grad::{sigmoid, softplus, Tensor};

/// The three R functions of a GAN objective plus the derivative of R₃.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    R1,
    R2,
    R3,
    DR3,
}

/// Objective families. The `-san` tags share R functions with their base
/// family and differ only in the default objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RFamily {
    LsGan,
    LsSan,
    Hinge,
    HingeSan,
    Ns,
    NsSan,
}

/// Which adversarial objective is optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Gan,
    San,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Gan => "gan",
            Objective::San => "san",
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gan" => Ok(Objective::Gan),
            "san" => Ok(Objective::San),
            _ => Err(Error::invalid(
                "objective",
                format!("unknown objective '{s}' (accepted: gan, san)"),
            )),
        }
    }
}

impl RFamily {
    pub const ALL: [RFamily; 6] = [
        RFamily::LsGan,
        RFamily::LsSan,
        RFamily::Hinge,
        RFamily::HingeSan,
        RFamily::Ns,
        RFamily::NsSan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RFamily::LsGan => "ls-gan",
            RFamily::LsSan => "ls-san",
            RFamily::Hinge => "hinge",
            RFamily::HingeSan => "hinge-san",
            RFamily::Ns => "ns",
            RFamily::NsSan => "ns-san",
        }
    }

    /// True iff r₃(z) < 0 for every real z.
    pub fn san_valid(self) -> bool {
        !matches!(self, RFamily::LsGan)
    }

    /// `San` for the `-san` tags, `Gan` otherwise.
    pub fn default_objective(self) -> Objective {
        match self {
            RFamily::LsSan | RFamily::HingeSan | RFamily::NsSan => Objective::San,
            _ => Objective::Gan,
        }
    }

    /// Errors unless the family may be used with the SAN objective.
    pub fn require_san_valid(self) -> Result<()> {
        if self.san_valid() {
            Ok(())
        } else {
            Err(Error::NotSanValid(self.name().to_string()))
        }
    }

    pub fn eval_scalar(self, which: Which, z: f64) -> f64 {
        use RFamily::*;
        use Which::*;
        match (self, which) {
            (LsGan, R1) => -(1.0 - z) * (1.0 - z),
            (LsGan, R2) => -z * z,
            (LsGan, R3) => (1.0 - z) * (1.0 - z),
            (LsGan, DR3) => -2.0 * (1.0 - z),
            (LsSan, R1) => -softplus(1.0 - z).powi(2),
            (LsSan, R2) => -softplus(z).powi(2),
            (LsSan, R3) => softplus(1.0 - z).powi(2),
            (LsSan, DR3) => -2.0 * softplus(1.0 - z) * sigmoid(1.0 - z),
            (Hinge | HingeSan, R1) => -(1.0 - z).max(0.0),
            (Hinge | HingeSan, R2) => -(1.0 + z).max(0.0),
            (Hinge | HingeSan, R3) => -z,
            (Hinge | HingeSan, DR3) => -1.0,
            (Ns | NsSan, R1) => -softplus(-z),
            (Ns | NsSan, R2) => -softplus(z),
            (Ns | NsSan, R3) => softplus(-z),
            (Ns | NsSan, DR3) => -sigmoid(-z),
        }
    }

    /// Elementwise, differentiable evaluation.
    pub fn eval(self, which: Which, z: &Tensor) -> Tensor {
        use RFamily::*;
        use Which::*;
        let one_minus = || z.neg().add_scalar(1.0);
        match (self, which) {
            (LsGan, R1) => one_minus().square().neg(),
            (LsGan, R2) => z.square().neg(),
            (LsGan, R3) => one_minus().square(),
            (LsGan, DR3) => one_minus().mul_scalar(-2.0),
            (LsSan, R1) => one_minus().softplus().square().neg(),
            (LsSan, R2) => z.softplus().square().neg(),
            (LsSan, R3) => one_minus().softplus().square(),
            (LsSan, DR3) => {
                let u = one_minus();
                u.softplus().mul(&u.sigmoid()).expect("same shape").mul_scalar(-2.0)
            }
            (Hinge | HingeSan, R1) => one_minus().relu().neg(),
            (Hinge | HingeSan, R2) => z.add_scalar(1.0).relu().neg(),
            (Hinge | HingeSan, R3) => z.neg(),
            (Hinge | HingeSan, DR3) => z.mul_scalar(0.0).add_scalar(-1.0),
            (Ns | NsSan, R1) => z.neg().softplus().neg(),
            (Ns | NsSan, R2) => z.softplus().neg(),
            (Ns | NsSan, R3) => z.neg().softplus(),
            (Ns | NsSan, DR3) => z.neg().sigmoid().neg(),
        }
    }

    pub fn r1(self, z: &Tensor) -> Tensor {
        self.eval(Which::R1, z)
    }

    pub fn r2(self, z: &Tensor) -> Tensor {
        self.eval(Which::R2, z)
    }

    pub fn r3(self, z: &Tensor) -> Tensor {
        self.eval(Which::R3, z)
    }
}

/// Elementwise evaluation of one R function of `family`.
pub fn r_eval(family: RFamily, which: Which, z: &Tensor) -> Tensor {
    family.eval(which, z)
}

impl fmt::Display for RFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RFamily::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            let accepted: Vec<_> = RFamily::ALL.iter().map(|f| f.name()).collect();
            Error::invalid(
                "family",
                format!("unknown family '{s}' (accepted: {})", accepted.join(", ")),
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ls_gan_witness_values() {
        let f = RFamily::LsGan;
        assert_eq!(f.eval_scalar(Which::R3, 1.0), 0.0);
        assert_eq!(f.eval_scalar(Which::R3, 0.0), 1.0);
        assert_eq!(f.eval_scalar(Which::R3, 2.0), 1.0);
        assert!(!f.san_valid());
        assert!(f
            .require_san_valid()
            .unwrap_err()
            .to_string()
            .contains("R3 not monotonically decreasing"));
    }

    #[test]
    fn ls_san_at_one() {
        let ln2 = std::f64::consts::LN_2;
        assert!((RFamily::LsSan.eval_scalar(Which::R3, 1.0) - ln2 * ln2).abs() < 1e-15);
        assert!((RFamily::LsSan.eval_scalar(Which::DR3, 1.0) + ln2).abs() < 1e-15);
    }

    #[test]
    fn tensor_and_scalar_forms_agree() {
        let zs = vec![-7.5, -1.0, -0.2, 0.0, 0.3, 1.0, 2.5, 40.0];
        let z = Tensor::from_vec(zs.clone());
        for fam in RFamily::ALL {
            for which in [Which::R1, Which::R2, Which::R3, Which::DR3] {
                let t = fam.eval(which, &z).to_vec();
                for (a, &zi) in t.iter().zip(&zs) {
                    let b = fam.eval_scalar(which, zi);
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{fam} {which:?} {zi}");
                }
            }
        }
    }

    #[test]
    fn dr3_matches_autodiff_of_r3() {
        for fam in RFamily::ALL {
            let z = Tensor::param(vec![-2.0, -0.4, 0.6, 3.0], &[4]).unwrap();
            fam.r3(&z).sum().backward().unwrap();
            let g = z.grad().unwrap();
            let d = fam.eval(Which::DR3, &z).to_vec();
            for (a, b) in g.iter().zip(&d) {
                assert!((a - b).abs() < 1e-12, "{fam}");
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for fam in RFamily::ALL {
            assert_eq!(fam.name().parse::<RFamily>().unwrap(), fam);
        }
        let err = "wgan".parse::<RFamily>().unwrap_err().to_string();
        assert!(err.contains("ls-san"), "{err}");
        assert_eq!(RFamily::LsSan.default_objective(), Objective::San);
        assert_eq!(RFamily::Hinge.default_objective(), Objective::Gan);
    }
}
