//! Edge asymptotics: the erfc edge kernel, the Szegő kernel and its envelope,
//! the profile `f(delta)` and harmonic-measure integrals.

pub mod erfc;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use erfc::{erfc, erfc_c, erfcx_c, ln_abs_erfc};

use crate::error::{Error, Result};
use crate::kernel::KernelEvaluator;
use crate::potential::{Droplet, DropletShape, Potential};
use crate::quadrature::adaptive_gauss_kronrod;

/// Default window constant `M` for `|xi|, |eta| <= M sqrt(log n)`.
pub const DEFAULT_WINDOW: f64 = 3.0;

/// Multiplier applied to the calibrated ratio maximum when fitting `C_Q`.
pub const SZEGO_FIT_MARGIN: f64 = 1.1;

/// Local data at a pair of boundary points.
#[derive(Debug, Clone, Copy)]
pub struct EdgeFrame {
    pub z0: Complex64,
    pub w0: Complex64,
    pub normal_z: Complex64,
    pub normal_w: Complex64,
    pub laplacian_z: f64,
    pub laplacian_w: f64,
    pub phi_z: Complex64,
    pub phi_w: Complex64,
    pub dphi_z: Complex64,
    pub dphi_w: Complex64,
    /// Principal `log(phi(z0) conj(phi(w0)))`.
    pub log_l: Complex64,
}

impl EdgeFrame {
    pub fn new(d: &Droplet, p: &Potential, z0: Complex64, w0: Complex64) -> Result<Self> {
        let (phi_z, phi_w) = (d.phi(z0), d.phi(w0));
        for (pt, ph) in [(z0, phi_z), (w0, phi_w)] {
            if (ph.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::Domain(format!("{pt} is not on the droplet boundary")));
            }
        }
        let prod = phi_z * phi_w.conj();
        if (prod + 1.0).norm() < 1e-12 {
            return Err(Error::AntipodalPoints);
        }
        let (dphi_z, dphi_w) = (d.dphi(z0), d.dphi(w0));
        Ok(EdgeFrame {
            z0,
            w0,
            normal_z: phi_z * dphi_z.conj() / dphi_z.norm(),
            normal_w: phi_w * dphi_w.conj() / dphi_w.norm(),
            laplacian_z: p.laplacian_quarter(z0),
            laplacian_w: p.laplacian_quarter(w0),
            phi_z,
            phi_w,
            dphi_z,
            dphi_w,
            log_l: prod.ln(),
        })
    }

    /// Frame at boundary parameters `s` and `t` of the exterior map.
    pub fn at_parameters(d: &Droplet, p: &Potential, s: f64, t: f64) -> Result<Self> {
        EdgeFrame::new(d, p, d.boundary(s).z, d.boundary(t).z)
    }

    /// `z0 + n(z0) xi / sqrt(n Delta Q(z0))`.
    pub fn point_z(&self, xi: Complex64, n: usize) -> Complex64 {
        self.z0 + self.normal_z * xi / (n as f64 * self.laplacian_z).sqrt()
    }

    /// `w0 + n(w0) eta / sqrt(n Delta Q(w0))`.
    pub fn point_w(&self, eta: Complex64, n: usize) -> Complex64 {
        self.w0 + self.normal_w * eta / (n as f64 * self.laplacian_w).sqrt()
    }

    /// True when `|xi|, |eta| <= M sqrt(log n)` and `|z0 - w0| <= M sqrt(log n / n)`.
    pub fn in_window(&self, xi: Complex64, eta: Complex64, n: usize, m: f64) -> bool {
        let l = (n as f64).ln().max(1.0);
        xi.norm() <= m * l.sqrt()
            && eta.norm() <= m * l.sqrt()
            && (self.z0 - self.w0).norm() <= m * (l / n as f64).sqrt()
    }
}

/// Leading-order edge prediction for `|K_n| / (n sqrt(Delta Q(z0) Delta Q(w0)))`:
/// `(1/2) exp(-|xi - eta + l|^2 / 2) |erfc((xi + conj(eta) + l) / sqrt 2)|`
/// with `l = sqrt(n Delta Q(z0)) log(phi(z0) conj(phi(w0))) / |phi'(z0)|`.
pub fn edge_kernel_modulus_prediction(f: &EdgeFrame, xi: Complex64, eta: Complex64, n: usize) -> f64 {
    let ell = (n as f64 * f.laplacian_z).sqrt() * f.log_l / f.dphi_z.norm();
    let gauss = -0.5 * (xi - eta + ell).norm_sqr();
    let arg = (xi + eta.conj() + ell) / 2f64.sqrt();
    0.5 * (gauss + ln_abs_erfc(arg)).exp()
}

/// `S(z, w) = sqrt(phi'(z)) conj(sqrt(phi'(w))) / (2 pi (phi(z) conj(phi(w)) - 1))`.
pub fn szego(d: &Droplet, z: Complex64, w: Complex64) -> Result<Complex64> {
    let den = d.phi(z) * d.phi(w).conj() - 1.0;
    if den.norm() < 1e-14 {
        return Err(Error::SzegoPole);
    }
    Ok(d.dphi(z).sqrt() * d.dphi(w).sqrt().conj() / (2.0 * PI * den))
}

/// `C_Q |S(z, w)| e^{-(Re xi)^2} e^{-(Re eta)^2}` at the rescaled points.
pub fn edge_kernel_bound(d: &Droplet, f: &EdgeFrame, xi: Complex64, eta: Complex64, n: usize, c_q: f64) -> Result<f64> {
    let s = szego(d, f.point_z(xi, n), f.point_w(eta, n))?;
    Ok(c_q * s.norm() * (-(xi.re * xi.re) - eta.re * eta.re).exp())
}

/// A boundary-pair probe: parameters of `z0` and `w0` plus offsets.
#[derive(Debug, Clone, Copy)]
pub struct EdgeProbe {
    pub s: f64,
    pub t: f64,
    pub xi: Complex64,
    pub eta: Complex64,
}

/// `m x m` boundary pairs at the parameter offsets `(a, b)` (fractions of a cell).
pub fn probe_grid(m: usize, offset_s: f64, offset_t: f64, offsets: &[(Complex64, Complex64)]) -> Vec<EdgeProbe> {
    let mut out = Vec::with_capacity(m * m * offsets.len());
    for i in 0..m {
        for j in 0..m {
            for &(xi, eta) in offsets {
                out.push(EdgeProbe {
                    s: 2.0 * PI * (i as f64 + offset_s) / m as f64,
                    t: 2.0 * PI * (j as f64 + offset_t) / m as f64,
                    xi,
                    eta,
                });
            }
        }
    }
    out
}

/// Ratio `(|K_n| / sqrt n) / (|S| e^{-(Re xi)^2 - (Re eta)^2})` at one probe.
pub fn szego_ratio(k: &KernelEvaluator, d: &Droplet, probe: &EdgeProbe) -> Result<f64> {
    let n = k.n();
    let f = EdgeFrame::at_parameters(d, k.potential(), probe.s, probe.t)?;
    let (z, w) = (f.point_z(probe.xi, n), f.point_w(probe.eta, n));
    let envelope = edge_kernel_bound(d, &f, probe.xi, probe.eta, n, 1.0)?;
    Ok(k.eval(z, w).norm() / (n as f64).sqrt() / envelope)
}

/// Empirical `C_Q`: the largest ratio on a calibration set, times [`SZEGO_FIT_MARGIN`].
pub fn fit_szego_constant(k: &KernelEvaluator, d: &Droplet, calibration: &[EdgeProbe]) -> Result<f64> {
    let mut best: f64 = 0.0;
    for probe in calibration {
        match szego_ratio(k, d, probe) {
            Ok(r) => best = best.max(r),
            Err(Error::SzegoPole) | Err(Error::AntipodalPoints) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(SZEGO_FIT_MARGIN * best)
}

/// `f(delta) = sqrt(2 pi) int_delta^inf erfc(t) erfc(-t) / 4 dt`.
pub fn f_delta(delta: f64) -> Result<f64> {
    if !delta.is_finite() {
        return Err(Error::InvalidParameter("delta must be finite".into()));
    }
    const CUT: f64 = 12.0;
    let lo = delta.max(-CUT);
    let hi = CUT.max(lo);
    let integrand = |t: f64| {
        let e = erfc(t.abs());
        e * (2.0 - e) / 4.0
    };
    let (mut v, _) = adaptive_gauss_kronrod(integrand, lo, hi, 1e-15, 1e-14)?;
    if delta < -CUT {
        // erfc(t) erfc(-t) ~ 2 erfc(|t|) below -CUT; the remainder is below 1e-60
        v += 0.0;
    }
    Ok((2.0 * PI).sqrt() * v)
}

/// Numeric `int e^{-theta^2} |erfc((s + i theta)/sqrt 2)|^2 d theta` and the
/// closed form `2 sqrt(pi) erfc(s)` with `s = xi + eta`.
pub fn gauss_erfc_identity(xi: f64, eta: f64) -> Result<(f64, f64)> {
    let s = xi + eta;
    if !(s.abs() <= 8.0) {
        return Err(Error::InvalidParameter(format!("|xi + eta| = {} exceeds 8", s.abs())));
    }
    let integrand = |u: f64| {
        let (sin, cos) = u.sin_cos();
        let theta = sin / cos;
        let z = Complex64::new(s, theta) / 2f64.sqrt();
        (-s * s).exp() * erfcx_c(z).norm_sqr() / (cos * cos)
    };
    let (half, err) = adaptive_gauss_kronrod(integrand, 0.0, 0.5 * PI, 1e-16, 1e-13)
        .map_err(|e| Error::Quadrature(format!("Gaussian-erfc integral: {e}")))?;
    if !(err <= 1e-10) {
        return Err(Error::Quadrature(format!("Gaussian-erfc integral error {err:e}")));
    }
    Ok((2.0 * half, 2.0 * PI.sqrt() * erfc(s)))
}

fn trapezoid_doubling<F: Fn(f64) -> f64>(f: F) -> Result<f64> {
    let eval = |m: usize| (0..m).map(|k| f(2.0 * PI * k as f64 / m as f64)).sum::<f64>() * 2.0 * PI / m as f64;
    let mut m = 1024;
    let mut prev = eval(m);
    loop {
        m *= 2;
        let cur = eval(m);
        if (cur - prev).abs() <= 1e-13 * cur.abs() {
            return Ok(cur);
        }
        if m > 1 << 22 {
            return Err(Error::Quadrature("periodic boundary integral did not converge".into()));
        }
        prev = cur;
    }
}

/// `int_{dS} sqrt(Delta Q) |phi'| dH^1`, cross-checked against the pullback
/// `int_{|zeta|=1} sqrt(Delta Q(phi^{-1}(zeta))) |d zeta|`.
pub fn harmonic_measure_integral(d: &Droplet, p: &Potential) -> Result<f64> {
    let (ax, ay) = match d.shape {
        DropletShape::Disc { radius } => (radius, radius),
        DropletShape::Ellipse { semi_x, semi_y } => (semi_x, semi_y),
    };
    let direct = trapezoid_doubling(|s| {
        let (sin, cos) = s.sin_cos();
        let z = Complex64::new(ax * cos, ay * sin);
        let speed = (ax * ax * sin * sin + ay * ay * cos * cos).sqrt();
        p.laplacian_quarter(z).sqrt() * d.dphi(z).norm() * speed
    })?;
    let pullback = trapezoid_doubling(|u| p.laplacian_quarter(d.phi_inverse(Complex64::from_polar(1.0, u))).sqrt())?;
    if (direct - pullback).abs() > 1e-8 * direct.abs() {
        return Err(Error::ConformalMap(format!(
            "harmonic measure routes disagree: {direct} vs {pullback}"
        )));
    }
    Ok(direct)
}
