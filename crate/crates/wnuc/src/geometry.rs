//! Prior subspaces with prescribed principal angles and the adapted bases.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::numerics::{random_orthogonal, rng_from_seed, svd, Matrix};
use rand::Rng;
use rand_distr::StandardNormal;

/// Angles closer than this (degrees) to 0° make the adapted basis singular.
pub const ANGLE_FLOOR_DEG: f64 = 1e-4;

const ORTHO_TOL: f64 = 1e-8;

/// Dimensions and principal angles (degrees) of a prior.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspacePrior {
    pub n: usize,
    pub r: usize,
    pub r_prime: usize,
    pub theta_u: Vec<f64>,
    pub theta_v: Vec<f64>,
}

fn sort_desc(v: &mut [f64]) {
    v.sort_by(|a, b| b.total_cmp(a));
}

impl SubspacePrior {
    /// Validates dimensions and stores both angle vectors non-increasingly.
    pub fn new(n: usize, r: usize, r_prime: usize, mut theta_u: Vec<f64>, mut theta_v: Vec<f64>) -> Result<Self> {
        if r == 0 || r > r_prime || r + r_prime > n {
            return Err(Error::InvalidInstance(format!(
                "need 1 ≤ r ≤ r' and r + r' ≤ n, got n={n} r={r} r'={r_prime}"
            )));
        }
        if theta_u.len() != r || theta_v.len() != r {
            return Err(Error::InvalidInstance(format!(
                "expected {r} angles per side, got {} and {}",
                theta_u.len(),
                theta_v.len()
            )));
        }
        if theta_u.iter().chain(&theta_v).any(|t| !(0.0..=90.0).contains(t)) {
            return Err(Error::InvalidInstance("angles must lie in [0°, 90°]".into()));
        }
        sort_desc(&mut theta_u);
        sort_desc(&mut theta_v);
        Ok(Self { n, r, r_prime, theta_u, theta_v })
    }

    /// Widths of the four column blocks (r, r, r' − r, n − r − r').
    pub fn block_widths(&self) -> [usize; 4] {
        [self.r, self.r, self.r_prime - self.r, self.n - self.r - self.r_prime]
    }

    /// Copy with every angle clamped to [floor, 90° − floor]; the flag tells
    /// whether anything moved.
    pub fn clamped(&self) -> (Self, bool) {
        let lo = ANGLE_FLOOR_DEG;
        let hi = 90.0 - ANGLE_FLOOR_DEG;
        let mut moved = false;
        let mut clamp = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .map(|t| {
                    let c = t.clamp(lo, hi);
                    moved |= c != *t;
                    c
                })
                .collect()
        };
        let theta_u = clamp(&self.theta_u);
        let theta_v = clamp(&self.theta_v);
        (Self { theta_u, theta_v, ..self.clone() }, moved)
    }
}

/// X = U diag(Σ) Vᵀ.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl GroundTruth {
    pub fn matrix(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

/// Ground truth together with the prior bases Ũ, Ṽ (n × r').
#[derive(Debug, Clone)]
pub struct PriorInstance {
    pub prior: SubspacePrior,
    pub truth: GroundTruth,
    pub u_tilde: Matrix,
    pub v_tilde: Matrix,
}

fn prior_side<R: Rng>(rng: &mut R, n: usize, r: usize, rp: usize, theta: &[f64]) -> (Matrix, Matrix) {
    let q = random_orthogonal(rng, n);
    let u = q.columns(0, r).into_owned();
    let w = q.columns(r, r);
    let mut tilde = Matrix::zeros(n, rp);
    for (i, t) in theta.iter().enumerate() {
        let (s, c) = t.to_radians().sin_cos();
        tilde.set_column(i, &(u.column(i) * c + w.column(i) * s));
    }
    for j in 0..rp - r {
        tilde.set_column(r + j, &q.column(2 * r + j));
    }
    (u, tilde)
}

/// Draws X and (Ũ, Ṽ) with Uᵀ Ũ = [cos θu, 0] and Vᵀ Ṽ = [cos θv, 0].
pub fn make_prior_instance(p: &SubspacePrior, seed: u64) -> Result<PriorInstance> {
    let p = SubspacePrior::new(p.n, p.r, p.r_prime, p.theta_u.clone(), p.theta_v.clone())?;
    let mut rng = rng_from_seed(seed);
    let (u, u_tilde) = prior_side(&mut rng, p.n, p.r, p.r_prime, &p.theta_u);
    let (v, v_tilde) = prior_side(&mut rng, p.n, p.r, p.r_prime, &p.theta_v);
    let sigma = (0..p.r).map(|_| rng.sample::<f64, _>(StandardNormal).abs() + 0.5).collect();
    Ok(PriorInstance { prior: p, truth: GroundTruth { u, sigma, v }, u_tilde, v_tilde })
}

fn check_orthonormal(a: &Matrix, name: &str) -> Result<()> {
    let k = a.ncols();
    let err = (a.transpose() * a - Matrix::identity(k, k)).amax();
    if err > ORTHO_TOL {
        return Err(Error::InvalidInstance(format!("{name} columns are not orthonormal (error {err:.2e})")));
    }
    Ok(())
}

/// Principal angles (degrees, non-increasing) between span(A) and span(B).
pub fn principal_angles(a: &Matrix, b: &Matrix) -> Result<Vec<f64>> {
    if a.nrows() != b.nrows() || a.ncols() > b.ncols() {
        return Err(Error::InvalidInstance(format!(
            "principal angles need n×r and n×r' with r ≤ r', got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    check_orthonormal(a, "A")?;
    check_orthonormal(b, "B")?;
    // cosines lose accuracy near 0°, sines near 90°; take each angle from
    // whichever is better conditioned
    let mut cos = svd(&(a.transpose() * b))?.singulars;
    let mut sin = svd(&(a - b * (b.transpose() * a)))?.singulars;
    cos.sort_by(|x, y| y.total_cmp(x));
    sin.sort_by(|x, y| x.total_cmp(y));
    let mut angles: Vec<f64> = cos
        .iter()
        .zip(&sin)
        .map(|(c, s)| {
            let t =
                if *s < std::f64::consts::FRAC_1_SQRT_2 { s.clamp(0.0, 1.0).asin() } else { c.clamp(0.0, 1.0).acos() };
            t.to_degrees()
        })
        .collect();
    sort_desc(&mut angles);
    Ok(angles)
}

/// Orthonormal B_L, B_R with column blocks [U, U′₁, U′₂, U″] and
/// [V, V′₁, V′₂, V″].
#[derive(Debug, Clone)]
pub struct BasisPair {
    pub b_l: Matrix,
    pub b_r: Matrix,
    pub widths: [usize; 4],
}

/// Columns spanning the orthogonal complement of span(b) (b orthonormal).
fn complete_basis(b: &Matrix, extra: usize) -> Result<Matrix> {
    let n = b.nrows();
    if extra == 0 {
        return Ok(Matrix::zeros(n, 0));
    }
    let proj = Matrix::identity(n, n) - b * b.transpose();
    let t = svd(&proj)?;
    Ok(t.left.columns(0, extra).into_owned())
}

fn adapted_side(base: &Matrix, tilde: &Matrix, theta: &[f64], widths: [usize; 4], side: &str) -> Result<Matrix> {
    let n = base.nrows();
    let r = widths[0];
    let k = widths[2];
    let cross = base.transpose() * tilde;
    for i in 0..r {
        for j in 0..r + k {
            let want = if i == j { theta[i].to_radians().cos() } else { 0.0 };
            if (cross[(i, j)] - want).abs() > 1e-6 {
                return Err(Error::InvalidInstance(format!(
                    "{side}: prior basis is not in canonical form (entry ({i},{j}) = {:.3e}, expected {want:.3e})",
                    cross[(i, j)]
                )));
            }
        }
    }
    let perp = |m: Matrix| -> Matrix { &m - base * (base.transpose() * &m) };
    let mut b = Matrix::zeros(n, n);
    b.columns_mut(0, r).copy_from(base);
    let t1 = perp(tilde.columns(0, r).into_owned());
    for (i, t) in theta.iter().enumerate() {
        if *t < ANGLE_FLOOR_DEG {
            return Err(Error::DegenerateAngle(format!("{side}: angle {t}° is below the floor {ANGLE_FLOOR_DEG}°")));
        }
        let s = t.to_radians().sin();
        b.set_column(r + i, &(t1.column(i) * (-1.0 / s)));
    }
    if k > 0 {
        let t2 = perp(tilde.columns(r, k).into_owned());
        b.columns_mut(2 * r, k).copy_from(&(-t2));
    }
    let filled = b.columns(0, 2 * r + k).into_owned();
    let rest = complete_basis(&filled, widths[3])?;
    b.columns_mut(2 * r + k, widths[3]).copy_from(&rest);
    Ok(b)
}

pub fn build_basis_pair(gt: &GroundTruth, u_tilde: &Matrix, v_tilde: &Matrix, p: &SubspacePrior) -> Result<BasisPair> {
    let widths = p.block_widths();
    if gt.u.shape() != (p.n, p.r) || u_tilde.shape() != (p.n, p.r_prime) || v_tilde.shape() != (p.n, p.r_prime) {
        return Err(Error::InvalidInstance("factor shapes do not match the prior".into()));
    }
    let b_l = adapted_side(&gt.u, u_tilde, &p.theta_u, widths, "column side")?;
    let b_r = adapted_side(&gt.v, v_tilde, &p.theta_v, widths, "row side")?;
    Ok(BasisPair { b_l, b_r, widths })
}

/// The coefficient block M with Ũ = B_L M, i.e. [cos θ 0; −sin θ 0; 0 −I; 0 0].
pub fn canonical_coefficients(theta: &[f64], widths: [usize; 4]) -> Matrix {
    let [r, _, k, q] = widths;
    let n = 2 * r + k + q;
    let mut m = Matrix::zeros(n, r + k);
    for (i, t) in theta.iter().enumerate() {
        let (s, c) = t.to_radians().sin_cos();
        m[(i, i)] = c;
        m[(r + i, i)] = -s;
    }
    for j in 0..k {
        m[(2 * r + j, r + j)] = -1.0;
    }
    m
}

/// Orthogonal projector onto span(a) for orthonormal a.
pub fn projector(a: &Matrix) -> Matrix {
    a * a.transpose()
}

/// Diagonal matrix helper.
pub fn diag(v: &[f64]) -> Matrix {
    Matrix::from_diagonal(&DVector::from_column_slice(v))
}
