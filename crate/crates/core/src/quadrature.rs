//! One- and two-dimensional quadrature building blocks.
//!
//! All planar grids carry weights for the normalized area measure
//! `dA = dx dy / pi`, so integrating the constant 1 over the unit disc gives 1.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
#[derive(Debug, Clone)]
pub struct GaussLegendreRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Cached Gauss-Legendre rule of the given order (at least 2 points).
pub fn gauss_legendre(order: usize) -> &'static GaussLegendreRule {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static GaussLegendreRule>>> = OnceLock::new();
    let order = order.max(2);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard.entry(order).or_insert_with(|| {
        let rule = GaussLegendre::new(order).expect("order >= 2");
        let mut pairs: Vec<(f64, f64)> = rule.into_node_weight_pairs();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Box::leak(Box::new(GaussLegendreRule { nodes, weights }))
    })
}

/// Composite Gauss-Legendre nodes on `[a, b]` split into `panels` equal panels.
pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(order);
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * rule.nodes.len());
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// Composite nodes over consecutive break points; every interval is split so
/// that no panel is longer than `max_panel`.
pub fn composite_breaks(breaks: &[f64], max_panel: f64, order: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
        out.extend(composite(a, b, panels, order));
    }
    out
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss-Kronrod (7/15) integration on a finite interval.
///
/// Returns the integral and the accumulated error estimate.
pub fn adaptive_gauss_kronrod<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    const MAX_INTERVALS: usize = 20_000;
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (v, e) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    loop {
        let total: f64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, err));
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "adaptive quadrature did not reach tolerance (estimate {err:e})"
            )));
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Pairwise summation; the result does not depend on how work was scheduled.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// A planar quadrature rule with weights for `dA = dx dy / pi`.
#[derive(Debug, Clone, Default)]
pub struct QuadratureGrid {
    pub points: Vec<Complex64>,
    pub weights: Vec<f64>,
    /// Centre and radius of a disc containing every node.
    pub center: Complex64,
    pub radius: f64,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, z: Complex64, w: f64) {
        self.points.push(z);
        self.weights.push(w);
    }

    /// Appends another grid; the bounding disc grows to cover both.
    pub fn extend(&mut self, other: &QuadratureGrid) {
        if self.is_empty() {
            self.center = other.center;
            self.radius = other.radius;
        } else if !other.is_empty() {
            let d = (other.center - self.center).norm();
            self.radius = self.radius.max(d + other.radius);
        }
        self.points.extend_from_slice(&other.points);
        self.weights.extend_from_slice(&other.weights);
    }

    /// Polar tensor grid about `center`: radial nodes `(r, w)` times
    /// `n_theta` equispaced angles (trapezoid rule, exact for trigonometric
    /// polynomials of degree below `n_theta`).
    pub fn polar(center: Complex64, radial: &[(f64, f64)], n_theta: usize, phase: f64) -> Self {
        let n_theta = n_theta.max(1);
        let dtheta = 2.0 * PI / n_theta as f64;
        let mut grid = QuadratureGrid {
            points: Vec::with_capacity(radial.len() * n_theta),
            weights: Vec::with_capacity(radial.len() * n_theta),
            center,
            radius: radial.iter().map(|p| p.0).fold(0.0, f64::max),
        };
        let dirs: Vec<Complex64> = (0..n_theta)
            .map(|k| Complex64::from_polar(1.0, phase + dtheta * k as f64))
            .collect();
        for &(r, w) in radial {
            let weight = w * r * dtheta / PI;
            for d in &dirs {
                grid.push(center + d * r, weight);
            }
        }
        grid
    }

    /// Gauss rule on a triangle via the collapsed (Duffy) square map,
    /// recursively split into `4^levels` congruent sub-triangles.
    pub fn triangle(v: [Complex64; 3], order: usize, levels: u32) -> Self {
        let mut tris = vec![v];
        for _ in 0..levels {
            let mut next = Vec::with_capacity(tris.len() * 4);
            for [a, b, c] in tris {
                let ab = 0.5 * (a + b);
                let bc = 0.5 * (b + c);
                let ca = 0.5 * (c + a);
                next.push([a, ab, ca]);
                next.push([ab, b, bc]);
                next.push([ca, bc, c]);
                next.push([ab, bc, ca]);
            }
            tris = next;
        }
        let rule = gauss_legendre(order);
        let centroid = (v[0] + v[1] + v[2]) / 3.0;
        let radius = v.iter().map(|p| (p - centroid).norm()).fold(0.0, f64::max);
        let mut grid = QuadratureGrid {
            center: centroid,
            radius,
            ..Default::default()
        };
        for [a, b, c] in tris {
            let twice_area = ((b - a).conj() * (c - a)).im.abs();
            for (xs, ws) in rule.nodes.iter().zip(&rule.weights) {
                let s = 0.5 * (xs + 1.0);
                for (xt, wt) in rule.nodes.iter().zip(&rule.weights) {
                    let t = 0.5 * (xt + 1.0);
                    let z = a + (b - a) * s + (c - b) * (s * t);
                    // 0.25 maps [-1,1]^2 to [0,1]^2.
                    let w = 0.25 * ws * wt * s * twice_area / PI;
                    grid.push(z, w);
                }
            }
        }
        grid
    }

    pub fn integrate<F: Fn(Complex64) -> f64>(&self, f: F) -> f64 {
        let terms: Vec<f64> = self.points.iter().zip(&self.weights).map(|(z, w)| w * f(*z)).collect();
        pairwise_sum(&terms)
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(5);
        let v: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(8)).sum();
        assert!((v - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let (v, _) = adaptive_gauss_kronrod(|x| (-1e4 * x * x).exp(), -1.0, 1.0, 1e-14, 1e-13).unwrap();
        assert!((v - (PI / 1e4).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn polar_grid_has_unit_mass_on_unit_disc() {
        let radial = composite(0.0, 1.0, 2, 8);
        let g = QuadratureGrid::polar(Complex64::new(0.0, 0.0), &radial, 16, 0.0);
        assert!((g.total_weight() - 1.0).abs() < 1e-14);
        let second = g.integrate(|z| z.norm_sqr());
        assert!((second - 0.5).abs() < 1e-14);
    }

    #[test]
    fn triangle_rule_area_and_moment() {
        let v = [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        let g = QuadratureGrid::triangle(v, 6, 2);
        assert!((g.total_weight() - 0.5 / PI).abs() < 1e-15);
        // integral of x over the triangle is 1/6
        let mx = g.integrate(|z| z.re);
        assert!((mx - 1.0 / 6.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }
}
