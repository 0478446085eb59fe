//! The block-weighted operator h_w and its structure.
//!
//! With P = P_Ũ, Q = P_Ṽ,
//! h_w(Z) = w1 P Z Q + w2 P Z Q⊥ + w3 P⊥ Z Q + w4 P⊥ Z Q⊥, w4 = w2 w3 / w1,
//! which factors as (1/w3)(w1 P + w3 P⊥) Z (w3 Q + w4 Q⊥).

use crate::error::{Error, Result};
use crate::geometry::{BasisPair, GroundTruth, SubspacePrior};
use crate::numerics::{Matrix, SvdTriple};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVector {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl WeightVector {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        if !(w1 > 0.0 && w2 > 0.0 && w3 > 0.0) || ![w1, w2, w3].iter().all(|w| w.is_finite()) {
            return Err(Error::InvalidWeights(format!("weights must be finite and positive, got ({w1}, {w2}, {w3})")));
        }
        Ok(Self { w1, w2, w3 })
    }

    pub fn ones() -> Self {
        Self { w1: 1.0, w2: 1.0, w3: 1.0 }
    }

    pub fn w4(&self) -> f64 {
        self.w2 * self.w3 / self.w1
    }

    pub fn reciprocal(&self) -> Self {
        Self { w1: 1.0 / self.w1, w2: 1.0 / self.w2, w3: 1.0 / self.w3 }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { w1: c * self.w1, w2: c * self.w2, w3: c * self.w3 }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.w1, self.w2, self.w3, self.w4()]
    }
}

/// h_w with its two one-sided factors precomputed.
#[derive(Debug, Clone)]
pub struct HOperator {
    left: Matrix,
    right: Matrix,
}

impl HOperator {
    pub fn new(w: &WeightVector, u_tilde: &Matrix, v_tilde: &Matrix) -> Self {
        let pu = u_tilde * u_tilde.transpose();
        let pv = v_tilde * v_tilde.transpose();
        let n = pu.nrows();
        let m = pv.nrows();
        let left = (&pu * w.w1 + (Matrix::identity(n, n) - &pu) * w.w3) / w.w3;
        let right = &pv * w.w3 + (Matrix::identity(m, m) - &pv) * w.w4();
        Self { left, right }
    }

    pub fn inverse(w: &WeightVector, u_tilde: &Matrix, v_tilde: &Matrix) -> Self {
        Self::new(&w.reciprocal(), u_tilde, v_tilde)
    }

    pub fn apply(&self, z: &Matrix) -> Matrix {
        &self.left * z * &self.right
    }

    /// The n² × n² matrix acting on column-stacked vec(Z).
    pub fn matrix(&self) -> Matrix {
        self.right.transpose().kronecker(&self.left)
    }
}

pub fn apply_h(w: &WeightVector, u_tilde: &Matrix, v_tilde: &Matrix, z: &Matrix) -> Matrix {
    HOperator::new(w, u_tilde, v_tilde).apply(z)
}

/// Inverse of [`apply_h`], i.e. h with reciprocal weights.
pub fn apply_h_inverse(w: &WeightVector, u_tilde: &Matrix, v_tilde: &Matrix, z: &Matrix) -> Matrix {
    HOperator::inverse(w, u_tilde, v_tilde).apply(z)
}

/// Factors of h_w in the adapted bases:
/// h_w(Z) = (1/w3) B_L O_L L B_Lᵀ Z B_R Rᵀ O_Rᵀ B_Rᵀ.
#[derive(Debug, Clone)]
pub struct WeightedDecomposition {
    pub w: WeightVector,
    pub o_l: Matrix,
    pub o_r: Matrix,
    pub l: Matrix,
    pub r: Matrix,
    pub c_l: Vec<f64>,
    pub c_r: Vec<f64>,
    pub l12: Vec<f64>,
    pub r12: Vec<f64>,
}

/// One side of the factorisation for weights `a` on the prior and `b` on its
/// complement: returns (O, T, C, T12) with O T = B ᵀ(a P + b P⊥) B.
pub(crate) fn side_factors(a: f64, b: f64, theta: &[f64], widths: [usize; 4]) -> (Matrix, Matrix, Vec<f64>, Vec<f64>) {
    let [r, _, k, q] = widths;
    let n = 2 * r + k + q;
    let mut o = Matrix::identity(n, n);
    let mut t = Matrix::zeros(n, n);
    let mut c_vec = Vec::with_capacity(r);
    let mut t12_vec = Vec::with_capacity(r);
    for (i, th) in theta.iter().enumerate() {
        let (s, c) = th.to_radians().sin_cos();
        let cc = (a * a * c * c + b * b * s * s).sqrt();
        let diag = (a * c * c + b * s * s) / cc;
        let off = (a - b) * s * c / cc;
        let j = r + i;
        o[(i, i)] = diag;
        o[(i, j)] = off;
        o[(j, i)] = -off;
        o[(j, j)] = diag;
        let t12 = (b * b - a * a) * s * c / cc;
        t[(i, i)] = cc;
        t[(i, j)] = t12;
        t[(j, j)] = a * b / cc;
        c_vec.push(cc);
        t12_vec.push(t12);
    }
    for j in 0..k {
        t[(2 * r + j, 2 * r + j)] = a;
    }
    for j in 0..q {
        t[(2 * r + k + j, 2 * r + k + j)] = b;
    }
    (o, t, c_vec, t12_vec)
}

pub fn decompose(w: &WeightVector, bp: &BasisPair, p: &SubspacePrior) -> Result<WeightedDecomposition> {
    if bp.widths != p.block_widths() {
        return Err(Error::InvalidInstance("basis pair does not match the prior".into()));
    }
    if let Some(t) = p.theta_u.iter().chain(&p.theta_v).find(|t| **t < crate::geometry::ANGLE_FLOOR_DEG) {
        return Err(Error::DegenerateAngle(format!("angle {t}° below floor")));
    }
    let (o_l, l, c_l, l12) = side_factors(w.w1, w.w3, &p.theta_u, bp.widths);
    let (o_r, r, c_r, r12) = side_factors(w.w3, w.w4(), &p.theta_v, bp.widths);
    Ok(WeightedDecomposition { w: *w, o_l, o_r, l, r, c_l, c_r, l12, r12 })
}

impl WeightedDecomposition {
    /// h_w(Z) evaluated through the factorisation.
    pub fn apply(&self, bp: &BasisPair, z: &Matrix) -> Matrix {
        let lhs = &bp.b_l * &self.o_l * &self.l * bp.b_l.transpose();
        let rhs = &bp.b_r * self.r.transpose() * self.o_r.transpose() * bp.b_r.transpose();
        lhs * z * rhs / self.w.w3
    }
}

/// SVD of h_w(X) read off the factorisation; singular values are
/// (1/w3) C_L Σ C_R, sorted.
pub fn weighted_svd(gt: &GroundTruth, bp: &BasisPair, dec: &WeightedDecomposition) -> SvdTriple {
    let r = gt.sigma.len();
    let ql = &bp.b_l * &dec.o_l;
    let qr = &bp.b_r * &dec.o_r;
    let vals: Vec<f64> = (0..r).map(|i| dec.c_l[i] * gt.sigma[i] * dec.c_r[i] / dec.w.w3).collect();
    let mut idx: Vec<usize> = (0..r).collect();
    idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let n = ql.nrows();
    let mut left = Matrix::zeros(n, r);
    let mut right = Matrix::zeros(qr.nrows(), r);
    for (j, &i) in idx.iter().enumerate() {
        left.set_column(j, &ql.column(i));
        right.set_column(j, &qr.column(i));
    }
    SvdTriple { left, singulars: idx.iter().map(|&i| vals[i]).collect(), right }
}

/// sgn(h_w(X)) and the projectors onto T̂ (the support of h_w(X)) and T̂⊥.
#[derive(Debug, Clone)]
pub struct SupportProjectors {
    pub sgn: Matrix,
    q_l: Matrix,
    q_r: Matrix,
    r: usize,
}

pub fn support_projectors(bp: &BasisPair, dec: &WeightedDecomposition, r: usize) -> SupportProjectors {
    let q_l = &bp.b_l * &dec.o_l;
    let q_r = &bp.b_r * &dec.o_r;
    let sgn = q_l.columns(0, r) * q_r.columns(0, r).transpose();
    SupportProjectors { sgn, q_l, q_r, r }
}

impl SupportProjectors {
    pub fn project_t_hat_perp(&self, z: &Matrix) -> Matrix {
        let n = self.q_l.ncols();
        let m = self.q_r.ncols();
        let mut zt = self.q_l.transpose() * z * &self.q_r;
        zt.rows_mut(0, self.r).fill(0.0);
        zt.columns_mut(0, self.r).fill(0.0);
        debug_assert_eq!(zt.shape(), (n, m));
        &self.q_l * zt * self.q_r.transpose()
    }

    pub fn project_t_hat(&self, z: &Matrix) -> Matrix {
        z - self.project_t_hat_perp(z)
    }

    /// Left and right bases whose leading r columns span the support.
    pub fn bases(&self) -> (&Matrix, &Matrix) {
        (&self.q_l, &self.q_r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_validate() {
        assert!(WeightVector::new(0.0, 1.0, 1.0).is_err());
        assert!(WeightVector::new(1.0, f64::INFINITY, 1.0).is_err());
        let w = WeightVector::new(1.0, 2.0, 3.0).unwrap();
        assert_eq!(w.w4(), 6.0);
        assert!((w.reciprocal().w4() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn unit_weights_are_identity_factors() {
        let (o, t, c, t12) = side_factors(1.0, 1.0, &[30.0, 10.0], [2, 2, 1, 3]);
        assert!((o - Matrix::identity(8, 8)).amax() < 1e-15);
        assert!((t - Matrix::identity(8, 8)).amax() < 1e-15);
        assert!(c.iter().all(|x| (x - 1.0).abs() < 1e-15));
        assert!(t12.iter().all(|x| x.abs() < 1e-15));
    }
}
