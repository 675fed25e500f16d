//! Orthonormal planar polynomials `p_0, ..., p_{n-1}` for the weight `e^{-nQ} dA`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potential::{droplet_of, Potential, PotentialKind};
use crate::quadrature::{composite_breaks, QuadratureGrid};

/// How a basis was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    /// Monomials `z^j / sqrt(h_j)` for radial weights.
    RadialDiagonal,
    /// Cholesky factor of a quadrature moment matrix.
    GramCholesky,
    /// Closed-form three-term recurrence (elliptic Ginibre).
    ClosedForm,
}

/// Relative pivot below which the moment matrix counts as singular.
pub const PIVOT_RATIO_MIN: f64 = 1e-13;

/// Log-drop of the radial integrand at which windows are truncated.
const WINDOW_LOG_DROP: f64 = 46.0;
const WINDOW_ORDER: usize = 20;

#[derive(Debug, Clone)]
enum Repr {
    Radial {
        log_h: Vec<f64>,
    },
    Gram {
        c: DMatrix<Complex64>,
        scale: f64,
        pivots: Vec<f64>,
    },
    Hermite {
        tau: f64,
        s: f64,
        log_p0: f64,
    },
}

/// The orthonormal polynomials spanning the kernel.
#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    n: usize,
    potential: Potential,
    repr: Repr,
}

/// Radial quadrature nodes for one monomial, with the log of the integrand.
#[derive(Debug, Clone)]
pub struct RadialWindow {
    pub lo: f64,
    pub peak: f64,
    pub hi: f64,
    pub sigma: f64,
}

pub(crate) fn radial_log_integrand(p: &Potential, n: usize, j: usize, r: f64) -> Result<f64> {
    let (q, _, _) = p.radial_profile(r)?;
    Ok((2 * j + 1) as f64 * r.ln() - n as f64 * q + std::f64::consts::LN_2)
}

/// Window `[lo, hi]` carrying all but `e^{-46}` of `r^{2j+1} e^{-n q(r)}`.
pub fn radial_window(p: &Potential, n: usize, j: usize) -> Result<RadialWindow> {
    let target = (2 * j + 1) as f64 / n as f64;
    let f = |r: f64| -> Result<f64> {
        let (_, d, _) = p.radial_profile(r)?;
        Ok(r * d - target)
    };
    let (mut lo, mut hi) = (1e-300_f64, 1.0_f64);
    while f(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::UnsupportedPotential(
                "radial weight has no maximum below r = 1e6".into(),
            ));
        }
    }
    for _ in 0..2000 {
        let mid = if lo < 1e-250 {
            (lo * hi).sqrt().max(hi * 1e-3)
        } else {
            0.5 * (lo + hi)
        };
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let peak = 0.5 * (lo + hi);
    let (_, _, dd) = p.radial_profile(peak)?;
    let curv = (2 * j + 1) as f64 / (peak * peak) + n as f64 * dd;
    let sigma = 1.0 / curv.max(1e-300).sqrt();
    let g0 = radial_log_integrand(p, n, j, peak)?;
    let mut lo = peak;
    loop {
        let next = lo - sigma;
        if next <= 0.0 {
            lo = 0.0;
            break;
        }
        lo = next;
        if g0 - radial_log_integrand(p, n, j, lo)? > WINDOW_LOG_DROP {
            break;
        }
    }
    let mut hi = peak;
    let mut steps = 0;
    loop {
        hi += sigma;
        steps += 1;
        if g0 - radial_log_integrand(p, n, j, hi)? > WINDOW_LOG_DROP {
            break;
        }
        if steps > 100_000 {
            return Err(Error::Quadrature("radial window did not close".into()));
        }
    }
    Ok(RadialWindow { lo, peak, hi, sigma })
}

/// Inner and outer masses `int_0^a` and `int_a^inf` of `r^{2j} e^{-nq} 2r dr`,
/// scaled by a common factor `e^{-log_scale}`, on shared nodes.
pub fn radial_split_masses(p: &Potential, n: usize, j: usize, a: f64, r_max: Option<f64>) -> Result<(f64, f64, f64)> {
    let win = radial_window(p, n, j)?;
    let mut breaks = vec![win.lo];
    if a > win.lo && a < win.hi {
        breaks.push(a);
    }
    breaks.push(win.hi);
    let nodes = composite_breaks(&breaks, win.sigma, WINDOW_ORDER);
    let g0 = radial_log_integrand(p, n, j, win.peak)?;
    let (mut inner, mut outer, mut tail) = (0.0, 0.0, 0.0);
    for (r, w) in nodes {
        if r <= 0.0 {
            continue;
        }
        let v = w * (radial_log_integrand(p, n, j, r)? - g0).exp();
        if let Some(rm) = r_max {
            if r > rm {
                tail += v;
                continue;
            }
        }
        if r < a {
            inner += v;
        } else {
            outer += v;
        }
    }
    if let Some(rm) = r_max {
        if tail > 1e-16 * (inner + outer + tail) || win.lo > rm {
            return Err(Error::RadialCutoff(format!(
                "tail beyond r_max = {rm} carries relative mass {:e} for j = {j}",
                tail / (inner + outer + tail)
            )));
        }
    }
    Ok((inner, outer, g0))
}

/// `log h_j` for `h_j = int_0^inf r^{2j} e^{-n q(r)} 2r dr`.
pub fn radial_log_norm(p: &Potential, n: usize, j: usize, r_max: Option<f64>) -> Result<f64> {
    let (inner, outer, g0) = radial_split_masses(p, n, j, f64::INFINITY, r_max)?;
    Ok(g0 + (inner + outer).ln())
}

/// Diagonal basis for a radial potential.
pub fn build_radial(p: &Potential, n: usize, r_max: Option<f64>) -> Result<OrthonormalBasis> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !p.is_radial() {
        return Err(Error::UnsupportedPotential(format!("{p} is not radial")));
    }
    let log_h = (0..n)
        .map(|j| radial_log_norm(p, n, j, r_max))
        .collect::<Result<Vec<_>>>()?;
    Ok(OrthonormalBasis {
        n,
        potential: p.clone(),
        repr: Repr::Radial { log_h },
    })
}

/// Closed-form basis for `Q = |z|^2 - tau Re z^2`.
pub fn build_elliptic(p: &Potential, n: usize) -> Result<OrthonormalBasis> {
    let PotentialKind::EllipticGinibre { tau } = *p.kind() else {
        return Err(Error::UnsupportedPotential(format!("{p} is not elliptic Ginibre")));
    };
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let nf = n as f64;
    let one_m = 1.0 - tau * tau;
    Ok(OrthonormalBasis {
        n,
        potential: p.clone(),
        repr: Repr::Hermite {
            tau,
            s: (nf * one_m).sqrt(),
            log_p0: 0.5 * (nf * one_m.sqrt()).ln(),
        },
    })
}

/// Scaled monomials `(z/rho)^k e^{-nQ(z)/2}`, `k < n`.
fn weighted_monomials(p: &Potential, n: usize, scale: f64, z: Complex64, out: &mut [Complex64]) {
    let half = 0.5 * n as f64 * p.eval(z);
    let u = z / scale;
    let m = u.norm();
    if m == 0.0 {
        out.fill(Complex64::new(0.0, 0.0));
        out[0] = Complex64::new((-half).exp(), 0.0);
        return;
    }
    let (lm, th) = (m.ln(), u.arg());
    for (k, o) in out.iter_mut().enumerate() {
        *o = Complex64::from_polar((k as f64 * lm - half).exp(), k as f64 * th);
    }
}

/// `sum_i w_i v(z_i) v(z_i)^*` for an `n x N` column matrix, chunked to bound memory.
pub fn weighted_outer<F>(grid: &QuadratureGrid, weights: &[f64], dim: usize, fill: F) -> DMatrix<Complex64>
where
    F: Fn(Complex64, &mut [Complex64]) + Sync,
{
    use rayon::prelude::*;
    const CHUNK: usize = 2048;
    let chunks: Vec<(usize, usize)> = (0..grid.len())
        .step_by(CHUNK)
        .map(|s| (s, (s + CHUNK).min(grid.len())))
        .collect();
    let parts: Vec<(DMatrix<f64>, DMatrix<f64>)> = chunks
        .par_iter()
        .map(|&(s, e)| {
            let m = e - s;
            let mut re = DMatrix::<f64>::zeros(dim, m);
            let mut im = DMatrix::<f64>::zeros(dim, m);
            let mut buf = vec![Complex64::new(0.0, 0.0); dim];
            for (col, i) in (s..e).enumerate() {
                fill(grid.points[i], &mut buf);
                for (k, v) in buf.iter().enumerate() {
                    re[(k, col)] = v.re;
                    im[(k, col)] = v.im;
                }
            }
            let mut wre = re.clone();
            let mut wim = im.clone();
            for col in 0..m {
                let w = weights[s + col];
                wre.column_mut(col).scale_mut(w);
                wim.column_mut(col).scale_mut(w);
            }
            let real = &wre * re.transpose() + &wim * im.transpose();
            let imag = &wim * re.transpose() - &wre * im.transpose();
            (real, imag)
        })
        .collect();
    let mut real = DMatrix::<f64>::zeros(dim, dim);
    let mut imag = DMatrix::<f64>::zeros(dim, dim);
    for (r, i) in parts {
        real += r;
        imag += i;
    }
    DMatrix::from_fn(dim, dim, |a, b| Complex64::new(real[(a, b)], imag[(a, b)]))
}

/// Cholesky factor of a Hermitian matrix with unit diagonal, reporting the
/// first pivot whose ratio drops below [`PIVOT_RATIO_MIN`].
fn cholesky_with_pivots(m: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, Vec<f64>)> {
    let n = m.nrows();
    let mut l = DMatrix::<Complex64>::zeros(n, n);
    let mut pivots = Vec::with_capacity(n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        let ratio = d / m[(j, j)].re;
        pivots.push(ratio);
        if !(ratio >= PIVOT_RATIO_MIN) {
            return Err(Error::IllConditioned { pivot: j, ratio });
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok((l, pivots))
}

fn invert_lower(l: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = l.nrows();
    let mut c = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        c[(j, j)] = 1.0 / l[(j, j)];
        for i in j + 1..n {
            let mut s = Complex64::new(0.0, 0.0);
            for k in j..i {
                s += l[(i, k)] * c[(k, j)];
            }
            c[(i, j)] = -s / l[(i, i)];
        }
    }
    c
}

/// Basis from the Cholesky factor of the quadrature moment matrix.
pub fn build_gram(p: &Potential, n: usize, quad: &QuadratureGrid) -> Result<OrthonormalBasis> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if quad.is_empty() {
        return Err(Error::InvalidParameter("empty quadrature grid".into()));
    }
    let scale = droplet_of(p)?.circumradius();
    let moments = weighted_outer(quad, &quad.weights, n, |z, out| weighted_monomials(p, n, scale, z, out));
    if moments.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Quadrature("non-finite moment matrix".into()));
    }
    let d: Vec<f64> = (0..n).map(|j| 1.0 / moments[(j, j)].re.sqrt()).collect();
    let equil = DMatrix::from_fn(n, n, |a, b| moments[(a, b)] * d[a] * d[b]);
    let (l, pivots) = cholesky_with_pivots(&equil)?;
    let inv = invert_lower(&l);
    // p_j = sum_k inv[j][k] d_k (z/rho)^k
    let c = DMatrix::from_fn(n, n, |a, b| inv[(a, b)] * d[b]);
    Ok(OrthonormalBasis {
        n,
        potential: p.clone(),
        repr: Repr::Gram { c, scale, pivots },
    })
}

/// Default construction: diagonal for radial potentials, closed form for the
/// elliptic family.
pub fn build(p: &Potential, n: usize) -> Result<OrthonormalBasis> {
    if p.is_radial() {
        build_radial(p, n, None)
    } else {
        build_elliptic(p, n)
    }
}

impl OrthonormalBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn construction(&self) -> Construction {
        match self.repr {
            Repr::Radial { .. } => Construction::RadialDiagonal,
            Repr::Gram { .. } => Construction::GramCholesky,
            Repr::Hermite { .. } => Construction::ClosedForm,
        }
    }

    /// `log h_j` for radial bases.
    pub fn log_norms(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Radial { log_h } => Some(log_h),
            _ => None,
        }
    }

    /// Cholesky pivot ratios for Gram bases.
    pub fn pivot_ratios(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Gram { pivots, .. } => Some(pivots),
            _ => None,
        }
    }

    /// Coefficients `C[j][k]` of `p_j(z) = sum_k C[j][k] z^k`. Entries may
    /// overflow for large `n`; evaluation never uses this matrix.
    pub fn coefficients(&self) -> DMatrix<Complex64> {
        let n = self.n;
        match &self.repr {
            Repr::Radial { log_h } => DMatrix::from_fn(n, n, |a, b| {
                if a == b {
                    Complex64::new((-0.5 * log_h[a]).exp(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
            Repr::Gram { c, scale, .. } => DMatrix::from_fn(n, n, |a, b| c[(a, b)] / scale.powi(b as i32)),
            Repr::Hermite { tau, s, log_p0 } => {
                let mut c = DMatrix::<Complex64>::zeros(n, n);
                c[(0, 0)] = Complex64::new(log_p0.exp(), 0.0);
                for k in 0..n - 1 {
                    for m in 0..=k {
                        let v = s * c[(k, m)];
                        c[(k + 1, m + 1)] += v / ((k + 1) as f64).sqrt();
                    }
                    if k >= 1 {
                        for m in 0..k {
                            let v = tau * (k as f64).sqrt() * c[(k - 1, m)];
                            c[(k + 1, m)] -= v / ((k + 1) as f64).sqrt();
                        }
                    }
                }
                c
            }
        }
    }

    /// Weighted frame `psi_j(z) = p_j(z) e^{-nQ(z)/2}` for `j < n`.
    pub fn frame(&self, z: Complex64, out: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(out.len(), n);
        let half = 0.5 * n as f64 * self.potential.eval(z);
        match &self.repr {
            Repr::Radial { log_h } => {
                let m = z.norm();
                if m == 0.0 {
                    out.fill(Complex64::new(0.0, 0.0));
                    out[0] = Complex64::new((-0.5 * log_h[0] - half).exp(), 0.0);
                    return;
                }
                let (lm, th) = (m.ln(), z.arg());
                for (j, o) in out.iter_mut().enumerate() {
                    let mag = (j as f64 * lm - 0.5 * log_h[j] - half).exp();
                    *o = Complex64::from_polar(mag, j as f64 * th);
                }
            }
            Repr::Gram { c, scale, .. } => {
                let mut v = vec![Complex64::new(0.0, 0.0); n];
                weighted_monomials(&self.potential, n, *scale, z, &mut v);
                for (j, o) in out.iter_mut().enumerate() {
                    let mut s = Complex64::new(0.0, 0.0);
                    for k in 0..=j {
                        s += c[(j, k)] * v[k];
                    }
                    *o = s;
                }
            }
            Repr::Hermite { tau, s, log_p0 } => {
                const RESCALE: f64 = 1e150;
                let ln_rescale = RESCALE.ln();
                let mut log_scale = *log_p0 - half;
                let mut prev = Complex64::new(0.0, 0.0);
                let mut cur = Complex64::new(1.0, 0.0);
                let emit = |v: Complex64, ls: f64| -> Complex64 {
                    let m = v.norm();
                    if m == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        v * ((m.ln() + ls).exp() / m)
                    }
                };
                out[0] = emit(cur, log_scale);
                for k in 0..n - 1 {
                    let next = (*s * z * cur - *tau * (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
                    prev = cur;
                    cur = next;
                    if cur.norm() > RESCALE {
                        cur /= RESCALE;
                        prev /= RESCALE;
                        log_scale += ln_rescale;
                    } else if cur.norm() < 1.0 / RESCALE && prev.norm() < 1.0 / RESCALE && cur.norm() > 0.0 {
                        cur *= RESCALE;
                        prev *= RESCALE;
                        log_scale -= ln_rescale;
                    }
                    out[k + 1] = emit(cur, log_scale);
                }
            }
        }
    }

    /// `max_{j,k} |<psi_j, psi_k> - delta_jk|` on a grid.
    pub fn gram_residual(&self, quad: &QuadratureGrid) -> f64 {
        let g = weighted_outer(quad, &quad.weights, self.n, |z, out| self.frame(z, out));
        let mut worst: f64 = 0.0;
        for a in 0..self.n {
            for b in 0..self.n {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g[(a, b)] - target).norm());
            }
        }
        worst
    }
}
