//! Monte Carlo samplers: Ginibre eigenvalues, independent radial moduli and
//! the sequential projection (HKPV) sampler for a general kernel.

use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelEvaluator;
use crate::orthopoly::{radial_log_integrand, radial_window};
use crate::potential::Potential;
use crate::quadrature::{composite, pairwise_sum, QuadratureGrid};

/// Largest `n` accepted by the dense eigen-sampler.
pub const GINIBRE_MAX_N: usize = 2000;

/// Safety factor on the grid maximum of the density in the HKPV sampler.
pub const HKPV_ENVELOPE: f64 = 1.2;

/// Smallest tolerated HKPV acceptance rate.
pub const HKPV_MIN_ACCEPTANCE: f64 = 1e-4;

/// Generator for repetition `rep` of a seeded batch.
pub fn repetition_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

/// `m` configurations of `n` points each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub n: usize,
    pub potential: String,
    pub m: usize,
    pub seed: u64,
    /// Row-major `m x n`.
    pub points: Vec<Complex64>,
    /// False when only the moduli follow the target law.
    pub angles_valid: bool,
}

impl SampleBatch {
    pub fn configuration(&self, rep: usize) -> &[Complex64] {
        &self.points[rep * self.n..(rep + 1) * self.n]
    }

    pub fn configurations(&self) -> impl Iterator<Item = &[Complex64]> {
        self.points.chunks(self.n.max(1))
    }

    /// Number of points of each configuration in `B(center, radius)`.
    pub fn counts_in_disc(&self, center: Complex64, radius: f64) -> Vec<usize> {
        self.configurations()
            .map(|c| c.iter().filter(|z| (**z - center).norm() < radius).count())
            .collect()
    }

    /// Little-endian `n, m, seed` as `u64`, then `(re, im)` as `f32` pairs.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        for v in [self.n as u64, self.m as u64, self.seed] {
            w.write_all(&v.to_le_bytes())?;
        }
        for z in &self.points {
            w.write_all(&(z.re as f32).to_le_bytes())?;
            w.write_all(&(z.im as f32).to_le_bytes())?;
        }
        Ok(())
    }

    /// Inverse of [`SampleBatch::write_binary`]; the potential label is not stored.
    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut header = [0u64; 3];
        for h in header.iter_mut() {
            r.read_exact(&mut word)?;
            *h = u64::from_le_bytes(word);
        }
        let (n, m) = (header[0] as usize, header[1] as usize);
        let total = n
            .checked_mul(m)
            .ok_or_else(|| Error::Schema("sample header overflows".into()))?;
        let mut points = Vec::with_capacity(total);
        let mut half = [0u8; 4];
        for _ in 0..total {
            r.read_exact(&mut half)?;
            let re = f32::from_le_bytes(half) as f64;
            r.read_exact(&mut half)?;
            let im = f32::from_le_bytes(half) as f64;
            points.push(Complex64::new(re, im));
        }
        Ok(SampleBatch {
            n,
            potential: String::new(),
            m,
            seed: header[2],
            points,
            angles_valid: true,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))
    }
}

/// Eigenvalues of an `n x n` matrix with i.i.d. complex Gaussian entries of
/// variance `1 / n`.
pub fn ginibre_eigenvalues(n: usize, seed: u64, rep: usize) -> Result<Vec<Complex64>> {
    let mut rng = repetition_rng(seed, rep);
    let s = (0.5 / n as f64).sqrt();
    let a = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    });
    Schur::try_new(a, f64::EPSILON, 1000 * n.max(1))
        .and_then(|schur| schur.eigenvalues())
        .map(|v| v.iter().copied().collect())
        .ok_or(Error::Eigensolver {
            seed,
            repetition: rep as u64,
        })
}

pub fn sample_ginibre(n: usize, m: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 || n > GINIBRE_MAX_N || m == 0 {
        return Err(Error::InvalidParameter(format!(
            "Ginibre sampler needs 1 <= n <= {GINIBRE_MAX_N} and m >= 1, got n = {n}, m = {m}"
        )));
    }
    let reps: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|rep| ginibre_eigenvalues(n, seed, rep))
        .collect::<Result<_>>()?;
    Ok(SampleBatch {
        n,
        potential: Potential::ginibre().to_string(),
        m,
        seed,
        points: reps.concat(),
        angles_valid: true,
    })
}

/// Tabulated distribution function of the `j`th modulus.
#[derive(Debug, Clone)]
pub struct ModulusCdf {
    radii: Vec<f64>,
    cdf: Vec<f64>,
}

impl ModulusCdf {
    pub fn new(p: &Potential, n: usize, j: usize) -> Result<Self> {
        let win = radial_window(p, n, j)?;
        let g0 = radial_log_integrand(p, n, j, win.peak)?;
        let panels = (((win.hi - win.lo) / win.sigma) * 64.0).ceil() as usize;
        let h = (win.hi - win.lo) / panels as f64;
        let rule = composite(0.0, h, 1, 6);
        let mut radii = Vec::with_capacity(panels + 1);
        let mut cdf = Vec::with_capacity(panels + 1);
        radii.push(win.lo);
        cdf.push(0.0);
        let mut acc = 0.0;
        for k in 0..panels {
            let a = win.lo + k as f64 * h;
            let mut mass = 0.0;
            for &(t, w) in &rule {
                let r = a + t;
                if r > 0.0 {
                    mass += w * (radial_log_integrand(p, n, j, r)? - g0).exp();
                }
            }
            if !(mass >= 0.0 && mass.is_finite()) {
                return Err(Error::QuadratureInconsistency(format!(
                    "modulus distribution for j = {j} is not monotone near r = {a}"
                )));
            }
            acc += mass;
            radii.push(a + h);
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::QuadratureInconsistency(format!("no mass for j = {j}")));
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        Ok(ModulusCdf { radii, cdf })
    }

    pub fn cdf(&self, r: f64) -> f64 {
        if r <= self.radii[0] {
            return 0.0;
        }
        let k = self.radii.partition_point(|&x| x < r);
        if k >= self.radii.len() {
            return 1.0;
        }
        let t = (r - self.radii[k - 1]) / (self.radii[k] - self.radii[k - 1]);
        self.cdf[k - 1] + t * (self.cdf[k] - self.cdf[k - 1])
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let k = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.radii[k - 1] + t.clamp(0.0, 1.0) * (self.radii[k] - self.radii[k - 1])
    }
}

/// Independent moduli with densities `prop. r^{2j+1} e^{-n q(r)}`, `j < n`,
/// and uniform angles; correct only for rotation-invariant statistics.
pub fn sample_radial_moduli(p: &Potential, n: usize, m: usize, seed: u64) -> Result<SampleBatch> {
    if !p.is_radial() {
        return Err(Error::UnsupportedPotential(format!("{p} is not radial")));
    }
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("need n >= 1 and m >= 1".into()));
    }
    let cdfs: Vec<ModulusCdf> = (0..n)
        .into_par_iter()
        .map(|j| ModulusCdf::new(p, n, j))
        .collect::<Result<_>>()?;
    let reps: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|rep| {
            let mut rng = repetition_rng(seed, rep);
            cdfs.iter()
                .map(|c| {
                    let r = c.quantile(rng.gen::<f64>());
                    Complex64::from_polar(r, 2.0 * PI * rng.gen::<f64>())
                })
                .collect()
        })
        .collect();
    Ok(SampleBatch {
        n,
        potential: p.to_string(),
        m,
        seed,
        points: reps.concat(),
        angles_valid: false,
    })
}

/// One HKPV draw. Proposals are uniform on the grid's bounding disc and
/// accepted with probability `K_V(z, z) / bound`.
fn hkpv_draw(k: &KernelEvaluator, grid: &QuadratureGrid, bound: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Complex64>> {
    let n = k.n();
    let mut used: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    let mut psi = vec![Complex64::new(0.0, 0.0); n];
    let (mut proposals, mut accepted) = (0u64, 0u64);
    let residual = |psi: &[Complex64], used: &[Vec<Complex64>]| -> Vec<Complex64> {
        let mut v = psi.to_vec();
        for _ in 0..2 {
            for e in used {
                let c: Complex64 = e.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ei) in v.iter_mut().zip(e) {
                    *vi -= c * ei;
                }
            }
        }
        v
    };
    while points.len() < n {
        proposals += 1;
        if proposals >= 100_000 && (accepted as f64) < HKPV_MIN_ACCEPTANCE * proposals as f64 {
            return Err(Error::Envelope(format!(
                "acceptance {accepted}/{proposals} below {HKPV_MIN_ACCEPTANCE}"
            )));
        }
        let r = grid.radius * rng.gen::<f64>().sqrt();
        let z = grid.center + Complex64::from_polar(r, 2.0 * PI * rng.gen::<f64>());
        k.frame_into(z, &mut psi);
        let v = residual(&psi, &used);
        let dens: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        if dens > bound {
            return Err(Error::Envelope(format!(
                "density {dens} exceeds envelope {bound} at {z}"
            )));
        }
        if rng.gen::<f64>() * bound >= dens {
            continue;
        }
        accepted += 1;
        let total: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
        if !(dens > 1e-10 * total) {
            return Err(Error::NumericalRank(format!(
                "residual frame norm {dens:e} after {} points",
                points.len()
            )));
        }
        let norm = dens.sqrt();
        used.push(v.into_iter().map(|x| x / norm).collect());
        points.push(z);
    }
    Ok(points)
}

/// Sequential projection sampler for the determinantal process of `K_n`;
/// proposals are drawn on the bounding disc of `grid`.
pub fn sample_dpp_hkpv(k: &KernelEvaluator, grid: &QuadratureGrid, m: usize, seed: u64) -> Result<SampleBatch> {
    if grid.is_empty() || m == 0 {
        return Err(Error::InvalidParameter("HKPV needs a non-empty grid and m >= 1".into()));
    }
    let max_density = grid.points.par_iter().map(|&z| k.density(z)).reduce(|| 0.0, f64::max);
    let bound = HKPV_ENVELOPE * max_density * k.n() as f64;
    let reps: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|rep| hkpv_draw(k, grid, bound, &mut repetition_rng(seed, rep)))
        .collect::<Result<_>>()?;
    Ok(SampleBatch {
        n: k.n(),
        potential: k.potential().to_string(),
        m,
        seed,
        points: reps.concat(),
        angles_valid: true,
    })
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// `|value - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}

pub fn mean_estimate(xs: &[f64]) -> Estimate {
    let m = xs.len() as f64;
    let mean = pairwise_sum(xs) / m;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (m - 1.0);
    Estimate {
        value: mean,
        stderr: (var / m).sqrt(),
    }
}

/// Unbiased sample variance with the large-sample standard error
/// `sqrt((mu_4 - s^4) / m)`.
pub fn variance_estimate(xs: &[f64]) -> Estimate {
    let m = xs.len() as f64;
    let mean = pairwise_sum(xs) / m;
    let d2: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let d4: Vec<f64> = xs.iter().map(|x| (x - mean).powi(4)).collect();
    let s2 = pairwise_sum(&d2) / (m - 1.0);
    let mu4 = pairwise_sum(&d4) / m;
    Estimate {
        value: s2,
        stderr: ((mu4 - s2 * s2).max(0.0) / m).sqrt(),
    }
}

/// Ordered pairs `i != j` with `x_i in B(z, h)` and `x_j in B(w, h)`, per configuration.
pub fn pair_counts(batch: &SampleBatch, z: Complex64, w: Complex64, h: f64) -> Vec<f64> {
    batch
        .configurations()
        .map(|c| {
            let mut count = 0usize;
            for (i, a) in c.iter().enumerate() {
                if (a - z).norm() >= h {
                    continue;
                }
                for (j, b) in c.iter().enumerate() {
                    if i != j && (b - w).norm() < h {
                        count += 1;
                    }
                }
            }
            count as f64
        })
        .collect()
}

/// Empirical disc-averaged pair correlation `rho_2` around `(z, w)`.
pub fn pair_correlation_estimate(batch: &SampleBatch, z: Complex64, w: Complex64, h: f64) -> Estimate {
    let e = mean_estimate(&pair_counts(batch, z, w, h));
    let area = h * h;
    Estimate {
        value: e.value / (area * area),
        stderr: e.stderr / (area * area),
    }
}

/// `rho_2` averaged over `B(z, h) x B(w, h)` by product quadrature.
pub fn pair_correlation_average(k: &KernelEvaluator, z: Complex64, w: Complex64, h: f64) -> f64 {
    let radial = composite(0.0, h, 2, 12);
    let gz = QuadratureGrid::polar(z, &radial, 48, 0.0);
    let gw = QuadratureGrid::polar(w, &radial, 48, 0.0);
    let mut terms = Vec::with_capacity(gz.len() * gw.len());
    for (a, wa) in gz.points.iter().zip(&gz.weights) {
        for (b, wb) in gw.points.iter().zip(&gw.weights) {
            terms.push(wa * wb * k.two_point(*a, *b));
        }
    }
    pairwise_sum(&terms) / (h * h * h * h)
}

/// Fraction of configurations containing two points closer than `r`.
pub fn close_pair_fraction(batch: &SampleBatch, r: f64) -> f64 {
    let hits = batch
        .configurations()
        .filter(|c| {
            c.iter()
                .enumerate()
                .any(|(i, a)| c[i + 1..].iter().any(|b| (a - b).norm() < r))
        })
        .count();
    hits as f64 / batch.m as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::disc_grids;
    use crate::potential::droplet_of;
    use crate::variance::variance_radial_exact;
    use statrs::distribution::{ContinuousCDF, Gamma};

    fn origin() -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    #[test]
    fn ginibre_batch_shape_and_reproducibility() {
        let a = sample_ginibre(12, 5, 7).unwrap();
        assert_eq!(a.points.len(), 60);
        assert!(a.points.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        let b = sample_ginibre(12, 5, 7).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        a.write_binary(&mut ba).unwrap();
        b.write_binary(&mut bb).unwrap();
        assert_eq!(ba, bb);
        assert_ne!(a.points, sample_ginibre(12, 5, 8).unwrap().points);
        assert!(sample_ginibre(0, 1, 0).is_err());
    }

    #[test]
    fn ginibre_counts_match_kernel() {
        let n = 30;
        let batch = sample_ginibre(n, 1500, 11).unwrap();
        let counts: Vec<f64> = batch.counts_in_disc(origin(), 0.5).iter().map(|&c| c as f64).collect();
        let g = Potential::ginibre();
        let exact = variance_radial_exact(&g, n, 0.5).unwrap().value;
        assert!(variance_estimate(&counts).within(exact, 3.0));
        let k = KernelEvaluator::for_potential(&g, n).unwrap();
        let d = droplet_of(&g).unwrap();
        let (inside, _) = disc_grids(origin(), 0.5, &d, &g, n, 16);
        assert!(mean_estimate(&counts).within(k.trace(&inside), 3.0));
    }

    #[test]
    fn binary_and_json_round_trip() {
        let batch = sample_ginibre(4, 3, 1).unwrap();
        let mut buf = Vec::new();
        batch.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 8 * 12);
        let back = SampleBatch::read_binary(buf.as_slice()).unwrap();
        assert_eq!((back.n, back.m, back.seed), (4, 3, 1));
        for (a, b) in back.points.iter().zip(&batch.points) {
            assert!((a - b).norm() < 1e-6);
        }
        let json = batch.to_json().unwrap();
        assert_eq!(SampleBatch::from_json(&json).unwrap(), batch);
    }

    #[test]
    fn radial_moduli_follow_gamma_law() {
        let n = 30;
        let m = 2000;
        let batch = sample_radial_moduli(&Potential::ginibre(), n, m, 5).unwrap();
        assert!(!batch.angles_valid);
        for j in [0usize, 7, 29] {
            let law = Gamma::new(j as f64 + 1.0, n as f64).unwrap();
            let mut xs: Vec<f64> = batch.configurations().map(|c| c[j].norm_sqr()).collect();
            xs.sort_by(f64::total_cmp);
            let d = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let f = law.cdf(x);
                    (f - i as f64 / m as f64)
                        .abs()
                        .max(((i + 1) as f64 / m as f64 - f).abs())
                })
                .fold(0.0, f64::max);
            // 1% critical value of the one-sample Kolmogorov-Smirnov statistic
            assert!(d < 1.628 / (m as f64).sqrt(), "j={j}: D={d}");
        }
        let again = sample_radial_moduli(&Potential::ginibre(), n, m, 5).unwrap();
        assert_eq!(again.points, batch.points);
    }

    #[test]
    fn modulus_cdf_is_monotone() {
        let c = ModulusCdf::new(&Potential::radial_power(2.0, 1.0).unwrap(), 40, 10).unwrap();
        let mut prev = 0.0;
        for k in 0..=200 {
            let r = 0.3 + k as f64 * 0.004;
            let f = c.cdf(r);
            assert!(f >= prev && f <= 1.0);
            prev = f;
        }
        assert!((c.cdf(c.quantile(0.37)) - 0.37).abs() < 1e-12);
    }

    #[test]
    fn hkpv_draws_have_n_points_and_repel() {
        let g = Potential::ginibre();
        let n = 8;
        let k = KernelEvaluator::for_potential(&g, n).unwrap();
        let d = droplet_of(&g).unwrap();
        let (mut grid, out) = disc_grids(origin(), 1.0, &d, &g, n, 8);
        grid.extend(&out);
        let batch = sample_dpp_hkpv(&k, &grid, 300, 3).unwrap();
        assert_eq!(batch.points.len(), 300 * n);
        let counts: Vec<f64> = batch.counts_in_disc(origin(), 0.5).iter().map(|&c| c as f64).collect();
        let exact = variance_radial_exact(&g, n, 0.5).unwrap().value;
        assert!(variance_estimate(&counts).within(exact, 3.0));
    }

    #[test]
    fn three_se_coverage_over_seeds() {
        let n = 10;
        let exact = variance_radial_exact(&Potential::ginibre(), n, 0.5).unwrap().value;
        let covered = (0..100u64)
            .filter(|&seed| {
                let batch = sample_ginibre(n, 500, 1000 + seed).unwrap();
                let counts: Vec<f64> = batch.counts_in_disc(origin(), 0.5).iter().map(|&c| c as f64).collect();
                variance_estimate(&counts).within(exact, 3.0)
            })
            .count();
        assert!(covered >= 99, "covered {covered}/100");
    }

    #[test]
    fn ginibre_repulsion_beats_poisson() {
        let n = 50;
        let batch = sample_ginibre(n, 400, 9).unwrap();
        let r = 0.1 / (n as f64).sqrt();
        // independent uniform points on the unit disc: P(some pair closer than r) ~ C(n,2) r^2
        let poisson = 1.0 - (-((n * (n - 1) / 2) as f64) * r * r).exp();
        assert!(close_pair_fraction(&batch, r) < poisson);
    }

    #[test]
    fn estimators() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let e = mean_estimate(&xs);
        assert!((e.value - 2.5).abs() < 1e-15);
        assert!((e.stderr - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert!((variance_estimate(&xs).value - 5.0 / 3.0).abs() < 1e-15);
    }
}
