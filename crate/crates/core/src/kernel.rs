//! The weighted correlation kernel `K_n`, densities, Berezin kernels and the
//! first-order Bergman approximation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::orthopoly::{build, weighted_outer, OrthonormalBasis};
use crate::potential::{droplet_of, Potential};
use crate::quadrature::{CompensatedSum, QuadratureGrid};

/// `K_n(z, w) = sum_j psi_j(z) conj(psi_j(w))` with `psi_j = p_j e^{-nQ/2}`.
#[derive(Debug, Clone)]
pub struct KernelEvaluator {
    basis: OrthonormalBasis,
}

impl KernelEvaluator {
    pub fn new(basis: OrthonormalBasis) -> Self {
        KernelEvaluator { basis }
    }

    /// Kernel from the default basis construction.
    pub fn for_potential(p: &Potential, n: usize) -> Result<Self> {
        Ok(KernelEvaluator::new(build(p, n)?))
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn potential(&self) -> &Potential {
        self.basis.potential()
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    pub fn frame(&self, z: Complex64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n()];
        self.basis.frame(z, &mut out);
        out
    }

    pub fn frame_into(&self, z: Complex64, out: &mut [Complex64]) {
        self.basis.frame(z, out);
    }

    /// `K_n(z, w)`, summed in increasing magnitude with compensation.
    pub fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        let fz = self.frame(z);
        let fw = if z == w { fz.clone() } else { self.frame(w) };
        kernel_from_frames(&fz, &fw)
    }

    /// `K_n(z, z) / n`.
    pub fn density(&self, z: Complex64) -> f64 {
        let f = self.frame(z);
        let mut terms: Vec<f64> = f.iter().map(|v| v.norm_sqr()).collect();
        terms.sort_by(f64::total_cmp);
        let mut s = CompensatedSum::default();
        for t in terms {
            s.add(t);
        }
        s.value() / self.n() as f64
    }

    /// `|K_n(z, w)|^2 / K_n(w, w)`.
    pub fn berezin(&self, w: Complex64, z: Complex64) -> Result<f64> {
        let kww = self.density(w) * self.n() as f64;
        if !(kww > 0.0) {
            return Err(Error::DegenerateRoot(w));
        }
        Ok(self.eval(z, w).norm_sqr() / kww)
    }

    /// `G = sum_i w_i psi(z_i) psi(z_i)^*` over a grid with the given weights.
    pub fn gram(&self, grid: &QuadratureGrid, weights: &[f64]) -> DMatrix<Complex64> {
        weighted_outer(grid, weights, self.n(), |z, out| self.basis.frame(z, out))
    }

    /// `int K_n(z, z) dA` over a grid.
    pub fn trace(&self, grid: &QuadratureGrid) -> f64 {
        grid.integrate(|z| self.density(z)) * self.n() as f64
    }

    /// Two-point correlation `K(z,z) K(w,w) - |K(z,w)|^2`.
    pub fn two_point(&self, z: Complex64, w: Complex64) -> f64 {
        let n = self.n() as f64;
        self.density(z) * self.density(w) * n * n - self.eval(z, w).norm_sqr()
    }
}

/// `sum_j a_j conj(b_j)`, accumulated smallest first with compensation.
pub fn kernel_from_frames(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut terms: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x * y.conj()).collect();
    terms.sort_by(|x, y| x.norm_sqr().total_cmp(&y.norm_sqr()));
    let (mut re, mut im) = (CompensatedSum::default(), CompensatedSum::default());
    for t in terms {
        re.add(t.re);
        im.add(t.im);
    }
    Complex64::new(re.value(), im.value())
}

/// `K^1_n(z, w) = (n B0 + B1) e^{n (Q(z, conj w) - Q(z)/2 - Q(w)/2)}`.
#[derive(Debug, Clone)]
pub struct BergmanFirstOrder {
    potential: Potential,
    n: usize,
    epsilon: f64,
}

impl BergmanFirstOrder {
    pub fn new(p: &Potential, n: usize) -> Result<Self> {
        if !p.has_polarization() {
            return Err(Error::Unsupported(format!("{p} has no polarization")));
        }
        let epsilon = 0.5 * droplet_of(p)?.inradius();
        Ok(BergmanFirstOrder {
            potential: p.clone(),
            n,
            epsilon,
        })
    }

    /// Radius of the polarization domain around the diagonal.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eval(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        if (z - w).norm() >= self.epsilon {
            return Err(Error::Domain(format!(
                "|z - w| = {} outside the polarization domain (epsilon = {})",
                (z - w).norm(),
                self.epsilon
            )));
        }
        let p = &self.potential;
        let wc = w.conj();
        let missing = || Error::Unsupported("missing polarization".into());
        let pol = p.polarization(z, wc).ok_or_else(missing)?;
        let b0 = p.bergman_b0(z, wc).ok_or_else(missing)?;
        let b1 = p.bergman_b1(z, wc).ok_or_else(missing)?;
        let nf = self.n as f64;
        let exponent = nf * (pol - 0.5 * p.eval(z) - 0.5 * p.eval(w));
        Ok((nf * b0 + b1) * exponent.exp())
    }
}
