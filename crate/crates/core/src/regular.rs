//! Regular (hexagonal) deployment.
//!
//! Three neighbouring APs form an equilateral triangle of side `D`:
//! `A₁ = (0, 0)`, `A₂ = (D, 0)`, `A₃ = (D/2, √3 D/2)`. Every user in the plane
//! maps onto a point of this triangle by symmetry, and the triangle itself is
//! mirror-symmetric about `x = D/2`, so searches only cover the left half.
//!
//! For each AP the blocker field runs from the AP through the user to the far
//! edge of the triangle, so the per-link blocking probability grows linearly
//! with the user's distance along that ray.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blockage::pblk_regular;
use crate::error::{domain, Error, Result};
use crate::model::{BlockageParams, HeightProfile};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserPoint {
    pub x: f64,
    pub y: f64,
}

impl UserPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn dist(self, other: UserPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Three-AP triangle of a hexagonal layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HexLayout {
    pub d_inter: f64,
    pub r_cell: f64,
    pub ap_positions: [UserPoint; 3],
}

impl HexLayout {
    pub fn from_inter_site(d_inter: f64) -> Result<Self> {
        if !(d_inter.is_finite() && d_inter > 0.0) {
            return Err(domain(format!("inter-site distance must be positive, got {d_inter}")));
        }
        Ok(Self {
            d_inter,
            r_cell: d_inter / SQRT3,
            ap_positions: [
                UserPoint::new(0.0, 0.0),
                UserPoint::new(d_inter, 0.0),
                UserPoint::new(0.5 * d_inter, 0.5 * SQRT3 * d_inter),
            ],
        })
    }

    pub fn from_cell_radius(r_cell: f64) -> Result<Self> {
        if !(r_cell.is_finite() && r_cell > 0.0) {
            return Err(domain(format!("cell radius must be positive, got {r_cell}")));
        }
        Self::from_inter_site(r_cell * SQRT3)
    }

    pub fn centroid(&self) -> UserPoint {
        UserPoint::new(0.5 * self.d_inter, 0.5 * self.d_inter / SQRT3)
    }

    fn tol(&self) -> f64 {
        1e-9 * self.d_inter
    }

    /// Inside the closed triangle, with a small tolerance on the edges.
    pub fn contains(&self, u: UserPoint) -> bool {
        let d = self.d_inter;
        let t = self.tol();
        u.y >= -t && SQRT3 * u.x - u.y >= -t && SQRT3 * (d - u.x) - u.y >= -t
    }

    /// Inside the left half-triangle `x <= D/2`.
    pub fn in_left_half(&self, u: UserPoint) -> bool {
        self.contains(u) && u.x <= 0.5 * self.d_inter + self.tol()
    }

    /// Reflection across the symmetry axis `x = D/2`.
    pub fn mirror(&self, u: UserPoint) -> UserPoint {
        UserPoint::new(self.d_inter - u.x, u.y)
    }
}

/// Angle, distance and far-boundary distance of one AP seen from the user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerApGeometry {
    pub theta: f64,
    pub range: f64,
    pub boundary_dist: f64,
}

/// Distance from `origin` along the ray towards `through` until it meets the
/// segment `[p, q]`, or `None` if it misses.
pub fn ray_segment_distance(
    origin: UserPoint,
    through: UserPoint,
    p: UserPoint,
    q: UserPoint,
) -> Option<f64> {
    let (dx, dy) = (through.x - origin.x, through.y - origin.y);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return None;
    }
    let (dx, dy) = (dx / len, dy / len);
    let (ex, ey) = (q.x - p.x, q.y - p.y);
    // origin + t·d = p + s·e
    let denom = dx * (-ey) - dy * (-ex);
    if denom.abs() < 1e-15 * ex.hypot(ey) {
        return None;
    }
    let (wx, wy) = (p.x - origin.x, p.y - origin.y);
    let t = (wx * (-ey) - wy * (-ex)) / denom;
    let s = (dx * wy - dy * wx) / denom;
    let eps = 1e-12;
    if t > 0.0 && (-eps..=1.0 + eps).contains(&s) {
        Some(t)
    } else {
        None
    }
}

/// Per-AP angles (from the x axis for the first two APs, from the vertical
/// for the third), ranges and exact boundary distances. A user sitting on an
/// AP gets range 0 and the median direction for that AP.
pub fn geometry_at(layout: &HexLayout, u: UserPoint) -> Result<[PerApGeometry; 3]> {
    if !(u.x.is_finite() && u.y.is_finite()) || !layout.contains(u) {
        return Err(Error::Geometry(format!(
            "user ({}, {}) lies outside the triangle with D = {}",
            u.x, u.y, layout.d_inter
        )));
    }
    let d = layout.d_inter;
    let a = layout.ap_positions;
    let thetas = [
        u.y.atan2(u.x),
        u.y.atan2(d - u.x),
        (0.5 * d - u.x).atan2(0.5 * SQRT3 * d - u.y),
    ];
    let median = [PI / 6.0, PI / 6.0, 0.0];
    let mut out = [PerApGeometry {
        theta: 0.0,
        range: 0.0,
        boundary_dist: 0.0,
    }; 3];
    for i in 0..3 {
        let range = a[i].dist(u);
        let (far_p, far_q) = (a[(i + 1) % 3], a[(i + 2) % 3]);
        if range <= layout.tol() {
            out[i] = PerApGeometry {
                theta: median[i],
                range: 0.0,
                boundary_dist: 0.5 * SQRT3 * d,
            };
            continue;
        }
        let boundary_dist = ray_segment_distance(a[i], u, far_p, far_q).ok_or_else(|| {
            Error::Geometry(format!("ray from AP {} through user misses the far edge", i + 1))
        })?;
        out[i] = PerApGeometry {
            theta: thetas[i],
            range: range.min(boundary_dist),
            boundary_dist,
        };
    }
    Ok(out)
}

/// Trigonometric boundary-distance formulas in their customary form, all in
/// terms of `θ₁` and `θ₂`. The third one uses `θ₁` where `θ₃` belongs and
/// therefore disagrees with the exact geometry away from special points.
pub fn printed_boundary_dists(layout: &HexLayout, g: &[PerApGeometry; 3]) -> [f64; 3] {
    let half_alt = SQRT3 * layout.d_inter / 2.0;
    [
        half_alt / (2.0 * PI / 3.0 - g[0].theta).sin(),
        half_alt / (2.0 * PI / 3.0 - g[1].theta).sin(),
        half_alt / (FRAC_PI_2 - g[0].theta).sin(),
    ]
}

/// The third expression with `θ₃` substituted for `θ₁`.
pub fn corrected_third_boundary_dist(layout: &HexLayout, g: &[PerApGeometry; 3]) -> f64 {
    SQRT3 * layout.d_inter / 2.0 / (FRAC_PI_2 - g[2].theta).sin()
}

/// Per-link LOS probabilities `exp(-β P_blk,i R_i)`.
pub fn link_los_probs(
    layout: &HexLayout,
    u: UserPoint,
    profile: &HeightProfile,
    b: &BlockageParams,
) -> Result<[f64; 3]> {
    let geo = geometry_at(layout, u)?;
    let mut p = [1.0; 3];
    for (pi, g) in p.iter_mut().zip(geo.iter()) {
        if g.range > 0.0 {
            let pb = pblk_regular(profile, g.range, g.boundary_dist)?;
            *pi = (-b.beta * pb.value * g.range).exp();
        }
    }
    Ok(p)
}

/// Probability that at least one of the three links is LOS, assuming
/// independent blockage per link.
pub fn p_los_at_point(
    layout: &HexLayout,
    u: UserPoint,
    profile: &HeightProfile,
    b: &BlockageParams,
) -> Result<f64> {
    let p = link_los_probs(layout, u, profile, b)?;
    Ok(1.0 - p.iter().map(|pi| 1.0 - pi).product::<f64>())
}

/// Grid step used when none is given: `D / 200`.
pub fn default_grid_step(layout: &HexLayout) -> f64 {
    layout.d_inter / 200.0
}

/// Regular grid over the left half-triangle; the symmetry axis is always
/// included as the last column.
pub fn half_triangle_grid(layout: &HexLayout, grid_step: f64) -> Result<Vec<UserPoint>> {
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(domain(format!("grid step must be positive, got {grid_step}")));
    }
    let half = 0.5 * layout.d_inter;
    let n_cols = (half / grid_step).floor() as usize;
    let mut xs: Vec<f64> = (0..=n_cols).map(|i| i as f64 * grid_step).collect();
    if half - xs[n_cols] > layout.tol() {
        xs.push(half);
    }
    let mut pts = Vec::new();
    for &x in &xs {
        let y_top = SQRT3 * x;
        let n_rows = (y_top / grid_step + 1e-9).floor() as usize;
        for j in 0..=n_rows {
            pts.push(UserPoint::new(x, (j as f64 * grid_step).min(y_top)));
        }
    }
    Ok(pts)
}

/// Every point of the half-triangle grid with its LOS probability.
pub fn grid_evaluate(
    layout: &HexLayout,
    profile: &HeightProfile,
    b: &BlockageParams,
    grid_step: f64,
) -> Result<Vec<(UserPoint, f64)>> {
    half_triangle_grid(layout, grid_step)?
        .into_par_iter()
        .map(|u| p_los_at_point(layout, u, profile, b).map(|p| (u, p)))
        .collect()
}

/// Minimum LOS probability over the left half-triangle.
///
/// A grid search locates the basin; a compass search then refines the point
/// until its step is below `grid_step / 100`.
pub fn worst_case_p_los(
    layout: &HexLayout,
    profile: &HeightProfile,
    b: &BlockageParams,
    grid_step: f64,
) -> Result<(f64, UserPoint)> {
    let field = grid_evaluate(layout, profile, b, grid_step)?;
    let (mut best_u, mut best) = field
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid always contains the origin");

    let mut step = grid_step;
    let min_step = grid_step / 100.0;
    let dirs = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (0.5f64.sqrt(), 0.5f64.sqrt()),
        (-(0.5f64.sqrt()), 0.5f64.sqrt()),
        (0.5f64.sqrt(), -(0.5f64.sqrt())),
        (-(0.5f64.sqrt()), -(0.5f64.sqrt())),
    ];
    while step > min_step {
        let mut improved = false;
        for (dx, dy) in dirs {
            let cand = UserPoint::new(best_u.x + step * dx, best_u.y + step * dy);
            if !layout.in_left_half(cand) {
                continue;
            }
            let v = p_los_at_point(layout, cand, profile, b)?;
            if v < best {
                best = v;
                best_u = cand;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((best, best_u))
}
