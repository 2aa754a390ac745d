//! Anti-parallelogram (crossed four-bar) coupling between an actuated joint
//! and the passive joint distal to it.
//!
//! With crossed-side length `l1` and non-adjacent-side length `l2`, the two
//! interior angles at the ground pivots satisfy
//!
//! ```text
//! tan(theta_d / 2) * tan(theta_p / 2) = k,   k = (l1 - l2) / (l1 + l2)
//! ```
//!
//! The hand uses the flexion frame (`phi = pi - theta_p` for the driver), in
//! which zero flexion of the driver maps to zero flexion of the driven joint:
//!
//! ```text
//! phi_d = 2 atan(k tan(phi_p / 2))
//! ```

mod oracle;
mod synthesis;
mod trajectory;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use oracle::four_bar_oracle;
pub use synthesis::{synthesize_linkage, LinkageFit};
pub use trajectory::{SigmoidParams, TrajectoryTable};

/// Crossed four-bar with crossed side `l1` and non-adjacent side `l2` (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LinkageLengths", into = "LinkageLengths")]
pub struct AntiparallelogramLinkage {
    l1: f64,
    l2: f64,
}

#[derive(Serialize, Deserialize)]
struct LinkageLengths {
    l1: f64,
    l2: f64,
}

impl TryFrom<LinkageLengths> for AntiparallelogramLinkage {
    type Error = Error;

    fn try_from(v: LinkageLengths) -> Result<Self> {
        Self::new(v.l1, v.l2)
    }
}

impl From<AntiparallelogramLinkage> for LinkageLengths {
    fn from(v: AntiparallelogramLinkage) -> Self {
        LinkageLengths { l1: v.l1, l2: v.l2 }
    }
}

impl AntiparallelogramLinkage {
    /// Requires `l1 > l2 > 0`. Equal lengths give `k = 0`, i.e. no coupling.
    pub fn new(l1: f64, l2: f64) -> Result<Self> {
        if !(l1.is_finite() && l2.is_finite()) {
            return Err(Error::NonFinite("linkage lengths"));
        }
        if l2 <= 0.0 {
            return Err(Error::validation("l2", format!("must be positive, got {l2}")));
        }
        if l1 <= l2 {
            return Err(Error::validation(
                "l1",
                format!("crossed side must be longer than the non-adjacent side (l1 = {l1}, l2 = {l2}); l1 = l2 is a degenerate anti-parallelogram"),
            ));
        }
        Ok(Self { l1, l2 })
    }

    /// Builds the linkage with coupling ratio `k` and total length `l1 + l2 = l_sum`.
    pub fn from_ratio(k: f64, l_sum: f64) -> Result<Self> {
        if !(k > 0.0 && k < 1.0) {
            return Err(Error::Domain { op: "from_ratio", value: k, domain: "(0, 1)" });
        }
        if !(l_sum > 0.0 && l_sum.is_finite()) {
            return Err(Error::validation("l_sum", format!("must be positive, got {l_sum}")));
        }
        Self::new(0.5 * l_sum * (1.0 + k), 0.5 * l_sum * (1.0 - k))
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    /// Dimensionless coupling ratio `(l1 - l2) / (l1 + l2)`, always in `(0, 1)`.
    pub fn k(&self) -> f64 {
        (self.l1 - self.l2) / (self.l1 + self.l2)
    }

    /// Passive interior angle for the actuated interior angle `theta_p`.
    ///
    /// Defined on `(0, pi]`; at `pi` the cotangent vanishes and the result is 0.
    pub fn interior_coupling(&self, theta_p: f64) -> Result<f64> {
        if !(theta_p > 0.0 && theta_p <= PI) {
            return Err(Error::Domain { op: "interior_coupling", value: theta_p, domain: "(0, pi]" });
        }
        if theta_p == PI {
            return Ok(0.0);
        }
        Ok(2.0 * (self.k() / (0.5 * theta_p).tan()).atan())
    }

    /// Driven flexion for driver flexion `phi_p` in `[0, pi)`.
    pub fn flexion_coupling(&self, phi_p: f64) -> Result<f64> {
        check_flexion("flexion_coupling", phi_p)?;
        Ok(coupling_value(self.k(), phi_p))
    }

    /// Driver flexion that produces driven flexion `phi_d` in `[0, pi)`.
    pub fn flexion_coupling_inverse(&self, phi_d: f64) -> Result<f64> {
        check_flexion("flexion_coupling_inverse", phi_d)?;
        Ok(2.0 * ((0.5 * phi_d).tan() / self.k()).atan())
    }

    /// `d phi_d / d phi_p`, strictly positive on `[0, pi)`.
    pub fn flexion_coupling_derivative(&self, phi_p: f64) -> Result<f64> {
        check_flexion("flexion_coupling_derivative", phi_p)?;
        Ok(coupling_slope(self.k(), phi_p))
    }
}

fn check_flexion(op: &'static str, phi: f64) -> Result<()> {
    if (0.0..PI).contains(&phi) {
        Ok(())
    } else {
        Err(Error::Domain { op, value: phi, domain: "[0, pi)" })
    }
}

// Unchecked kernels shared with synthesis and retargeting; callers guarantee
// the flexion domain.

pub(crate) fn coupling_value(k: f64, phi_p: f64) -> f64 {
    2.0 * (k * (0.5 * phi_p).tan()).atan()
}

pub(crate) fn coupling_slope(k: f64, phi_p: f64) -> f64 {
    let t = (0.5 * phi_p).tan();
    k * (1.0 + t * t) / (1.0 + k * k * t * t)
}

pub(crate) fn coupling_curvature(k: f64, phi_p: f64) -> f64 {
    let t = (0.5 * phi_p).tan();
    let den = 1.0 + k * k * t * t;
    k * t * (1.0 - k * k) * (1.0 + t * t) / (den * den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn k02() -> AntiparallelogramLinkage {
        AntiparallelogramLinkage::new(0.030, 0.020).unwrap()
    }

    #[test]
    fn ratio_of_lengths() {
        assert!((k02().k() - 0.2).abs() < 1e-15);
        let l = AntiparallelogramLinkage::from_ratio(0.3, 0.05).unwrap();
        assert!((l.k() - 0.3).abs() < 1e-15);
        assert!((l.l1() + l.l2() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_lengths() {
        assert!(AntiparallelogramLinkage::new(0.02, 0.02).is_err());
        assert!(AntiparallelogramLinkage::new(0.01, 0.02).is_err());
        assert!(AntiparallelogramLinkage::new(0.02, 0.0).is_err());
        assert!(AntiparallelogramLinkage::new(f64::NAN, 0.01).is_err());
    }

    #[test]
    fn interior_at_right_angle() {
        let d = k02().interior_coupling(FRAC_PI_2).unwrap();
        assert!((d - 2.0 * 0.2f64.atan()).abs() < 1e-15);
        assert!((d - 0.394_791_119_699_761_55).abs() < 1e-12);
    }

    #[test]
    fn interior_near_straight_vanishes() {
        let d = k02().interior_coupling(PI - 1e-9).unwrap();
        assert!(d.abs() < 1e-8);
        assert_eq!(k02().interior_coupling(PI).unwrap(), 0.0);
    }

    #[test]
    fn interior_domain_errors() {
        assert!(k02().interior_coupling(0.0).is_err());
        assert!(k02().interior_coupling(-0.1).is_err());
        assert!(k02().interior_coupling(PI + 1e-6).is_err());
    }

    #[test]
    fn vanishing_ratio_gives_no_coupling() {
        let l = AntiparallelogramLinkage::new(0.020 * (1.0 + 1e-12), 0.020).unwrap();
        for theta in [0.3, 1.0, 2.0, 3.0] {
            assert!(l.interior_coupling(theta).unwrap().abs() < 1e-11);
        }
    }

    #[test]
    fn flexion_examples() {
        assert_eq!(k02().flexion_coupling(0.0).unwrap(), 0.0);
        let d = k02().flexion_coupling(FRAC_PI_2).unwrap();
        assert!((d - 0.394_791_119_699_761_55).abs() < 1e-12);
        assert!((d.to_degrees() - 22.619_864_948_040_43).abs() < 1e-9);

        let l = AntiparallelogramLinkage::from_ratio(0.66, 0.05).unwrap();
        let d = l.flexion_coupling(FRAC_PI_2).unwrap();
        assert!((d - 2.0 * 0.66f64.atan()).abs() < 1e-12);
        assert!((d - 1.166_746_013_987_712).abs() < 1e-12, "{d}");
    }

    #[test]
    fn flexion_matches_interior_with_supplement() {
        let l = k02();
        for i in 1..100 {
            let phi = PI * i as f64 / 100.0;
            let a = l.flexion_coupling(phi).unwrap();
            let b = l.interior_coupling(PI - phi).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_examples() {
        let l = k02();
        assert_eq!(l.flexion_coupling_inverse(0.0).unwrap(), 0.0);
        let p = l.flexion_coupling_inverse(2.0 * 0.2f64.atan()).unwrap();
        assert!((p - FRAC_PI_2).abs() < 1e-12);
        assert!(l.flexion_coupling_inverse(PI).is_err());
        assert!(l.flexion_coupling_inverse(-1e-3).is_err());
    }

    #[test]
    fn derivative_examples() {
        let l = k02();
        assert!((l.flexion_coupling_derivative(0.0).unwrap() - 0.2).abs() < 1e-15);
        let d = l.flexion_coupling_derivative(FRAC_PI_2).unwrap();
        assert!((d - 0.4 / 1.04).abs() < 1e-14);
        assert!((d - 0.384_615_384_615_384_6).abs() < 1e-12);
        assert!(l.flexion_coupling_derivative(PI).is_err());
    }

    #[test]
    fn curvature_matches_slope_differences() {
        for &k in &[0.1, 0.5, 0.9] {
            for i in 1..30 {
                let x = 3.0 * i as f64 / 30.0;
                let h = 1e-6;
                let fd = (coupling_slope(k, x + h) - coupling_slope(k, x - h)) / (2.0 * h);
                let an = coupling_curvature(k, x);
                assert!((fd - an).abs() < 1e-5 * an.abs().max(1.0), "k={k} x={x}");
            }
        }
    }
}
