//! Number variances: exact Bernoulli sums for radial ensembles, kernel
//! quadrature for general regions, and the bulk and edge asymptotic laws.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edge::{f_delta, harmonic_measure_integral};
use crate::error::{Error, Result};
use crate::geometry::{dilation_grid, disc_grids, kernel_scale, polygon_grid, weighted_perimeter, Region, RegionKind};
use crate::kernel::KernelEvaluator;
use crate::orthopoly::radial_split_masses;
use crate::potential::{droplet_of, Droplet, Potential};
use crate::quadrature::{composite_breaks, pairwise_sum, QuadratureGrid};

/// Default quadrature budget (Gauss order per kernel-scale panel).
pub const DEFAULT_BUDGET: usize = 16;

/// Largest relative change tolerated between budget `b` and `b / 2`.
pub const REFINEMENT_TOLERANCE: f64 = 0.01;

/// `1 / (2 pi sqrt(pi))`.
pub fn bulk_constant() -> f64 {
    1.0 / (2.0 * PI * PI.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Quad,
    RadialExact,
    Mc,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Quad => "QUAD",
            Method::RadialExact => "RADIAL_EXACT",
            Method::Mc => "MC",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceResult {
    pub n: usize,
    pub region: String,
    pub method: Method,
    pub value: f64,
    pub prediction: Option<f64>,
    /// `value / sqrt(n)`.
    pub normalized: f64,
    pub abs_gap: Option<f64>,
    pub rel_gap: Option<f64>,
    pub runtime_s: f64,
    /// Standard error, Monte Carlo only.
    pub stderr: Option<f64>,
}

impl VarianceResult {
    pub fn new(n: usize, region: String, method: Method, value: f64, runtime_s: f64) -> Self {
        VarianceResult {
            n,
            region,
            method,
            value,
            prediction: None,
            normalized: value / (n as f64).sqrt(),
            abs_gap: None,
            rel_gap: None,
            runtime_s,
            stderr: None,
        }
    }

    /// Attaches an asymptotic prediction and fills in the gaps.
    pub fn with_prediction(mut self, prediction: f64) -> Self {
        let gap = self.value - prediction;
        self.prediction = Some(prediction);
        self.abs_gap = Some(gap.abs());
        self.rel_gap = Some(if prediction != 0.0 {
            (gap / prediction).abs()
        } else {
            gap.abs()
        });
        self
    }

    /// `prediction / sqrt(n)`.
    pub fn prediction_normalized(&self) -> Option<f64> {
        self.prediction.map(|p| p / (self.n as f64).sqrt())
    }
}

/// `tr(G_A G_B)` for Hermitian Gram matrices.
fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let terms: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).collect();
    pairwise_sum(&terms)
}

/// `tr(G_A (I - G_A))`.
fn trace_with_identity_complement(a: &DMatrix<Complex64>) -> f64 {
    let mut terms: Vec<f64> = (0..a.nrows()).map(|i| a[(i, i)].re).collect();
    terms.extend(a.iter().map(|x| -x.norm_sqr()));
    pairwise_sum(&terms)
}

/// `int_A int_B |K_n|^2` from grids on `A` and `B`; `B` defaults to the
/// complement of `A`, using `int_C psi psi^* = I`.
pub fn variance_on_grids(k: &KernelEvaluator, a: &QuadratureGrid, b: Option<&QuadratureGrid>) -> f64 {
    let ga = k.gram(a, &a.weights);
    match b {
        Some(b) => trace_product(&ga, &k.gram(b, &b.weights)),
        None => trace_with_identity_complement(&ga),
    }
}

/// Grids for `A` and (for discs) its complement at a given budget.
pub fn region_grids(
    k: &KernelEvaluator,
    d: &Droplet,
    region: &Region,
    budget: usize,
) -> Result<(QuadratureGrid, Option<QuadratureGrid>)> {
    if budget < 2 {
        return Err(Error::InvalidParameter("quadrature budget must be at least 2".into()));
    }
    let p = k.potential();
    let n = k.n();
    Ok(match &region.kind {
        RegionKind::Disc { center, radius } => {
            let (inside, outside) = disc_grids(*center, *radius, d, p, n, budget);
            (inside, Some(outside))
        }
        RegionKind::Polygon { vertices } => (polygon_grid(vertices, kernel_scale(d, p, n), budget), None),
        RegionKind::DropletDilation { delta, n: dn, droplet } => {
            (dilation_grid(droplet, p, *delta, *dn, n, budget), None)
        }
    })
}

/// `Var N_A = int_A int_{A^c} |K_n|^2 dA dA` by kernel quadrature, checked
/// against the same computation at half the budget.
pub fn variance_quadrature(k: &KernelEvaluator, region: &Region, budget: usize) -> Result<VarianceResult> {
    let start = Instant::now();
    let d = droplet_of(k.potential())?;
    let (a, b) = region_grids(k, &d, region, budget)?;
    let value = variance_on_grids(k, &a, b.as_ref());
    let coarse_budget = (budget / 2).max(2);
    if coarse_budget < budget {
        let (a2, b2) = region_grids(k, &d, region, coarse_budget)?;
        let coarse = variance_on_grids(k, &a2, b2.as_ref());
        let change = (value - coarse).abs();
        if change > REFINEMENT_TOLERANCE * value.abs().max(1e-12) && change > 1e-8 {
            return Err(Error::Quadrature(format!(
                "variance changed from {coarse} to {value} when the budget went from {coarse_budget} to {budget}"
            )));
        }
    }
    Ok(VarianceResult::new(
        k.n(),
        region.describe(),
        Method::Quad,
        value,
        start.elapsed().as_secs_f64(),
    ))
}

/// Inner and outer masses of each `|p_j|^2 e^{-nQ}` split at `|z| = a`.
pub fn radial_split(p: &Potential, n: usize, a: f64) -> Result<Vec<(f64, f64)>> {
    if !p.is_radial() {
        return Err(Error::UnsupportedPotential(format!("{p} is not radial")));
    }
    if !(a >= 0.0) || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "need a >= 0 and n > 0, got a = {a}, n = {n}"
        )));
    }
    (0..n)
        .into_par_iter()
        .map(|j| radial_split_masses(p, n, j, a, None).map(|(i, o, _)| (i, o)))
        .collect()
}

/// `p_j`: probability that the `j`th independent modulus falls in `B(0, a)`.
pub fn radial_inclusion_probabilities(p: &Potential, n: usize, a: f64) -> Result<Vec<f64>> {
    radial_split(p, n, a)?
        .into_iter()
        .enumerate()
        .map(|(j, (i, o))| {
            let pj = i / (i + o);
            if !(0.0..=1.0 + 1e-12).contains(&pj) {
                return Err(Error::QuadratureInconsistency(format!("p_{j} = {pj}")));
            }
            Ok(pj)
        })
        .collect()
}

/// `sum_j p_j (1 - p_j)` for the centred disc `B(0, a)`.
pub fn variance_radial_exact(p: &Potential, n: usize, a: f64) -> Result<VarianceResult> {
    let start = Instant::now();
    let masses = radial_split(p, n, a)?;
    let mut terms = Vec::with_capacity(n);
    for (j, (i, o)) in masses.into_iter().enumerate() {
        let total = i + o;
        if !(i >= 0.0 && o >= 0.0 && total > 0.0 && total.is_finite()) {
            return Err(Error::QuadratureInconsistency(format!("masses ({i}, {o}) for j = {j}")));
        }
        terms.push(i / total * (o / total));
    }
    let value = pairwise_sum(&terms);
    let region = if a > 0.0 {
        Region::disc(Complex64::new(0.0, 0.0), a)?.describe()
    } else {
        "empty".to_string()
    };
    Ok(VarianceResult::new(
        n,
        region,
        Method::RadialExact,
        value,
        start.elapsed().as_secs_f64(),
    ))
}

/// `sqrt(n) / (2 pi sqrt(pi)) int_{dA} sqrt(Delta Q) dH^1` for `A` inside the droplet.
pub fn bulk_prediction(p: &Potential, region: &Region, n: usize) -> Result<f64> {
    let d = droplet_of(p)?;
    let clearance = region.clearance(&d);
    if !(clearance > 0.0) {
        return Err(Error::Hypothesis(format!(
            "{} is not compactly contained in the droplet interior (clearance {clearance})",
            region.describe()
        )));
    }
    Ok((n as f64).sqrt() * bulk_constant() * weighted_perimeter(region, p)?)
}

/// `sqrt(n) f(delta) / (2 pi sqrt(pi)) int sqrt(Delta Q) |phi'| dH^1`.
pub fn edge_prediction(p: &Potential, d: &Droplet, delta: f64, n: usize) -> Result<f64> {
    Ok((n as f64).sqrt() * f_delta(delta)? * bulk_constant() * harmonic_measure_integral(d, p)?)
}

/// `(1/2) int int |f(z) - f(w)|^2 |K_n|^2 = tr G(f^2) - tr G(f)^2` on a grid
/// covering the kernel's support.
pub fn linear_statistic_variance<F>(k: &KernelEvaluator, f: F, grid: &QuadratureGrid) -> f64
where
    F: Fn(Complex64) -> f64,
{
    let fv: Vec<f64> = grid.points.iter().map(|&z| f(z)).collect();
    let w1: Vec<f64> = grid.weights.iter().zip(&fv).map(|(w, v)| w * v).collect();
    let w2: Vec<f64> = w1.iter().zip(&fv).map(|(w, v)| w * v).collect();
    let g1 = k.gram(grid, &w1);
    let g2 = k.gram(grid, &w2);
    let mut terms: Vec<f64> = (0..g2.nrows()).map(|i| g2[(i, i)].re).collect();
    terms.extend(g1.iter().map(|x| -x.norm_sqr()));
    pairwise_sum(&terms)
}

/// Polar grid on a disc resolved at the kernel scale, `order` nodes per panel.
fn disc_grid(k: &KernelEvaluator, center: Complex64, radius: f64, order: usize) -> Result<QuadratureGrid> {
    let d = droplet_of(k.potential())?;
    let sigma = kernel_scale(&d, k.potential(), k.n());
    let radial = composite_breaks(&[0.0, radius], sigma, order);
    let n_theta = ((2.0 * PI * radius / sigma) * order as f64).ceil() as usize;
    Ok(QuadratureGrid::polar(center, &radial, n_theta.max(8), 0.0))
}

/// `(1/2) int int |f(z) - f(w)| |K_n|^2` for `f` supported in `B(center, radius)`.
///
/// Pairs with one point outside the support use the reproducing identity;
/// pairs inside are summed directly.
pub fn bump_functional<F>(k: &KernelEvaluator, f: F, center: Complex64, radius: f64, order: usize) -> Result<f64>
where
    F: Fn(Complex64) -> f64,
{
    let grid = disc_grid(k, center, radius, order)?;
    let n = k.n();
    let m = grid.len();
    let fv: Vec<f64> = grid.points.iter().map(|&z| f(z)).collect();
    let mut frames = DMatrix::<Complex64>::zeros(n, m);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (col, &z) in grid.points.iter().enumerate() {
        k.frame_into(z, &mut buf);
        frames.column_mut(col).copy_from_slice(&buf);
    }
    // cross[i, j] = K(z_j, z_i) up to conjugation
    let cross = frames.adjoint() * &frames;
    let inner: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(m);
            for j in 0..m {
                row.push(grid.weights[j] * (fv[i] - fv[j]).abs() * cross[(i, j)].norm_sqr());
            }
            grid.weights[i] * pairwise_sum(&row)
        })
        .collect();
    // support x outside: sum_i w_i |f_i| (K(z_i,z_i) - int_S |K(z_i, .)|^2)
    let outer: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(m + 1);
            row.push(cross[(i, i)].re);
            for j in 0..m {
                row.push(-grid.weights[j] * cross[(i, j)].norm_sqr());
            }
            grid.weights[i] * fv[i].abs() * pairwise_sum(&row)
        })
        .collect();
    Ok(0.5 * pairwise_sum(&inner) + pairwise_sum(&outer))
}

/// `sqrt(n) / (2 pi sqrt(pi)) int |grad f| sqrt(Delta Q) dx dy` over `B(center, radius)`.
pub fn smooth_statistic_prediction<G>(p: &Potential, grad_norm: G, center: Complex64, radius: f64, n: usize) -> f64
where
    G: Fn(Complex64) -> f64,
{
    let radial = composite_breaks(&[0.0, radius], radius / 16.0, 16);
    let grid = QuadratureGrid::polar(center, &radial, 512, 0.0);
    // polar weights carry dA = dx dy / pi
    let v = PI * grid.integrate(|z| grad_norm(z) * p.laplacian_quarter(z).sqrt());
    (n as f64).sqrt() * bulk_constant() * v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundReport {
    /// `(n, value - prediction)`.
    pub residuals: Vec<(usize, f64)>,
    pub max_residual: f64,
    /// Least-squares slope of residuals against `sqrt(n)`.
    pub residual_slope: f64,
    /// Slope of the prediction in `sqrt(n)`.
    pub prediction_slope: f64,
    pub bounded: bool,
}

/// Residuals `value - prediction` must not grow like `sqrt(n)`: their fitted
/// slope in `sqrt(n)` may be at most a tenth of the prediction's.
pub fn upper_bound_check(results: &[VarianceResult]) -> Result<UpperBoundReport> {
    if results.is_empty() {
        return Err(Error::InvalidParameter("no results to check".into()));
    }
    let region = &results[0].region;
    if results.iter().any(|r| &r.region != region) {
        return Err(Error::InvalidParameter("results must share a region".into()));
    }
    let mut residuals = Vec::with_capacity(results.len());
    let mut slopes = Vec::with_capacity(results.len());
    for r in results {
        let pred = r
            .prediction
            .ok_or_else(|| Error::InvalidParameter(format!("result at n = {} carries no prediction", r.n)))?;
        residuals.push((r.n, r.value - pred));
        slopes.push(pred / (r.n as f64).sqrt());
    }
    let prediction_slope = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let xs: Vec<f64> = residuals.iter().map(|&(n, _)| (n as f64).sqrt()).collect();
    let ys: Vec<f64> = residuals.iter().map(|&(_, r)| r).collect();
    let residual_slope = if xs.len() < 2 {
        0.0
    } else {
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        if sxx > 0.0 {
            sxy / sxx
        } else {
            0.0
        }
    };
    let max_residual = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(UpperBoundReport {
        bounded: residual_slope <= 0.1 * prediction_slope.abs() + 1e-12,
        residuals,
        max_residual,
        residual_slope,
        prediction_slope,
    })
}
