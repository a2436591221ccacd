//! Test-only oracles: random positive definite matrices and empirical
//! risks of affine estimators computed from Wishart replicates.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use speccoh::simlab::{cell_rng, WishartSampler};
use speccoh::HermitianMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `A A^H / p + floor I` with complex Gaussian `A`.
pub fn random_pd<R: Rng>(p: usize, floor: f64, rng: &mut R) -> HermitianMatrix {
    let a = DMatrix::from_fn(p, p, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let mut m = &a * a.adjoint() / Complex64::new(p as f64, 0.0);
    for j in 0..p {
        m[(j, j)] += Complex64::new(floor, 0.0);
    }
    HermitianMatrix::from_matrix(m).unwrap()
}

fn tr(m: &DMatrix<Complex64>) -> f64 {
    m.trace().re
}

/// Empirical risk of `a X + b I`, which is exactly quadratic:
/// `aa a^2 + 2 ab a b + bb b^2 - 2 a_lin a - 2 b_lin b + c`, with each
/// coefficient an average over replicates.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuadRisk {
    pub aa: f64,
    pub ab: f64,
    pub bb: f64,
    pub a_lin: f64,
    pub b_lin: f64,
    pub c: f64,
}

impl QuadRisk {
    pub fn eval(&self, a: f64, b: f64) -> f64 {
        self.aa * a * a + 2.0 * self.ab * a * b + self.bb * b * b - 2.0 * self.a_lin * a - 2.0 * self.b_lin * b
            + self.c
    }

    /// Unconstrained minimizer.
    pub fn argmin(&self) -> (f64, f64) {
        let det = self.aa * self.bb - self.ab * self.ab;
        (
            (self.a_lin * self.bb - self.b_lin * self.ab) / det,
            (self.b_lin * self.aa - self.a_lin * self.ab) / det,
        )
    }

    fn add(&mut self, o: &QuadRisk) {
        self.aa += o.aa;
        self.ab += o.ab;
        self.bb += o.bb;
        self.a_lin += o.a_lin;
        self.b_lin += o.b_lin;
        self.c += o.c;
    }

    fn scale(&mut self, s: f64) {
        self.aa *= s;
        self.ab *= s;
        self.bb *= s;
        self.a_lin *= s;
        self.b_lin *= s;
        self.c *= s;
    }
}

/// `||a X + b I - T||_F^2`.
pub fn hs_terms(x: &HermitianMatrix, t: &HermitianMatrix) -> QuadRisk {
    let (xm, tm) = (x.as_matrix(), t.as_matrix());
    QuadRisk {
        aa: x.trace_of_square(),
        ab: x.trace(),
        bb: x.dim() as f64,
        a_lin: tr(&(xm * tm)),
        b_lin: t.trace(),
        c: t.trace_of_square(),
    }
}

/// `tr{((a X + b I) W - I)^2}`.
pub fn ql_terms(x: &HermitianMatrix, w: &HermitianMatrix) -> QuadRisk {
    let (xm, wm) = (x.as_matrix(), w.as_matrix());
    let xw = xm * wm;
    QuadRisk {
        aa: tr(&(&xw * &xw)),
        ab: tr(&(xm * wm * wm)),
        bb: w.trace_of_square(),
        a_lin: tr(&xw),
        b_lin: w.trace(),
        c: x.dim() as f64,
    }
}

/// Empirical risks over `m` replicates drawn around `s`.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalRisks {
    /// Spectral estimate, HS loss against `S`.
    pub spectral_hs: QuadRisk,
    /// Spectral estimate, QL loss (`X S^-1 - I`).
    pub spectral_ql: QuadRisk,
    /// Precision estimate, HS loss against `S^-1`.
    pub precision_hs: QuadRisk,
    /// Precision estimate, QL loss (`Y S - I`).
    pub precision_ql: QuadRisk,
}

pub fn empirical_risks(s: &HermitianMatrix, k: usize, m: usize, seed: u64) -> EmpiricalRisks {
    let s_inv = s.invert().unwrap();
    let sampler = WishartSampler::new(s).unwrap();
    let mut acc = [QuadRisk::default(); 4];
    for i in 0..m {
        let s_hat = sampler.draw_spectral(k, &mut cell_rng(seed, i as u64, 0));
        let s_hat_inv = s_hat.invert().unwrap();
        acc[0].add(&hs_terms(&s_hat, s));
        acc[1].add(&ql_terms(&s_hat, &s_inv));
        acc[2].add(&hs_terms(&s_hat_inv, &s_inv));
        acc[3].add(&ql_terms(&s_hat_inv, s));
    }
    for q in &mut acc {
        q.scale(1.0 / m as f64);
    }
    EmpiricalRisks {
        spectral_hs: acc[0],
        spectral_ql: acc[1],
        precision_hs: acc[2],
        precision_ql: acc[3],
    }
}

/// Grid minimizer over `rho in {0, step, ..., 1}` of the convex model
/// `(1 - rho) X + rho eta I`.
pub fn rho_grid_argmin(q: &QuadRisk, eta: f64, step: f64) -> f64 {
    let n = (1.0 / step).round() as usize;
    (0..=n)
        .map(|i| i as f64 * step)
        .min_by(|x, y| q.eval(1.0 - x, x * eta).total_cmp(&q.eval(1.0 - y, y * eta)))
        .unwrap()
}

/// Grid minimizer on an `n x n` grid over `[a_lo, a_hi] x [b_lo, b_hi]`;
/// returns the minimizer and the two grid steps.
pub fn box_grid_argmin(q: &QuadRisk, a: (f64, f64), b: (f64, f64), n: usize) -> ((f64, f64), (f64, f64)) {
    let sa = (a.1 - a.0) / (n - 1) as f64;
    let sb = (b.1 - b.0) / (n - 1) as f64;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..n {
        let av = a.0 + i as f64 * sa;
        for j in 0..n {
            let bv = b.0 + j as f64 * sb;
            let r = q.eval(av, bv);
            if r < best.0 {
                best = (r, av, bv);
            }
        }
    }
    ((best.1, best.2), (sa, sb))
}
