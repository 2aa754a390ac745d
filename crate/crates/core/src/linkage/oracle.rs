//! Planar position analysis of the crossed four-bar, independent of the
//! half-angle closed form.

use std::f64::consts::PI;

use nalgebra::Vector2;

use super::AntiparallelogramLinkage;
use crate::error::{Error, Result};

/// Output interior angle of the anti-parallelogram for input interior angle
/// `theta_p` in `(0, pi)`, by explicit loop closure.
///
/// The ground side `AB` has length `l2`, `A` at the origin. The input crank
/// `AD` (length `l1`) makes angle `theta_p` with `AB`. `C` lies at distance
/// `l1` from `B` and `l2` from `D`; of the two circle intersections, the one
/// that is not the parallelogram closure `D + (B - A)` is the crossed branch.
/// The result is the angle at `B` between `BA` and `BC`.
pub fn four_bar_oracle(link: &AntiparallelogramLinkage, theta_p: f64) -> Result<f64> {
    if !(theta_p > 0.0 && theta_p < PI) {
        return Err(Error::Domain { op: "four_bar_oracle", value: theta_p, domain: "(0, pi)" });
    }
    let (l1, l2) = (link.l1(), link.l2());
    let a = Vector2::new(0.0, 0.0);
    let b = Vector2::new(l2, 0.0);
    let d = Vector2::new(l1 * theta_p.cos(), l1 * theta_p.sin());

    let [c0, c1] = circle_intersections(b, l1, d, l2).ok_or(Error::NoIntersection { theta: theta_p })?;
    let parallel = d + (b - a);
    let c = if (c0 - parallel).norm_squared() > (c1 - parallel).norm_squared() { c0 } else { c1 };

    let ba = a - b;
    let bc = c - b;
    let cross = ba.x * bc.y - ba.y * bc.x;
    Ok(cross.abs().atan2(ba.dot(&bc)))
}

fn circle_intersections(p0: Vector2<f64>, r0: f64, p1: Vector2<f64>, r1: f64) -> Option<[Vector2<f64>; 2]> {
    let delta = p1 - p0;
    let dist = delta.norm();
    if dist == 0.0 || dist > r0 + r1 || dist < (r0 - r1).abs() {
        return None;
    }
    let along = (r0 * r0 - r1 * r1 + dist * dist) / (2.0 * dist);
    let h2 = r0 * r0 - along * along;
    let h = if h2 < 0.0 { 0.0 } else { h2.sqrt() };
    let u = delta / dist;
    let base = p0 + u * along;
    let perp = Vector2::new(-u.y, u.x);
    Some([base + perp * h, base - perp * h])
}
