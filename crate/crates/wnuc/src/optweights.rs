//! Golden-section search and cyclic coordinate descent for the optimal
//! weights.

use crate::error::{Error, Result};
use crate::geometry::SubspacePrior;
use crate::sdim::{coordinate_bracket, psi_weighted, PsiOptions, ScaledWeights};
use crate::weighting::WeightVector;

/// (√5 − 1)/2.
pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Minimiser of a unimodal `f` on [a, b]. Stops once the bracket is shorter
/// than `tol` or after `max_iter` reductions, and returns whichever interior
/// probe has the smaller value.
pub fn gss<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> f64 {
    let (mut a, mut b) = (a, b);
    let mut x1 = a + (1.0 - GOLDEN) * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut k = 0;
    while (b - a).abs() >= tol && k < max_iter {
        k += 1;
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + (1.0 - GOLDEN) * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub tol: f64,
    pub max_outer: usize,
    pub gss_max_iter: usize,
    /// Upper end of each coordinate search; `None` uses the bound from coordinate_bracket.
    pub bracket_hi: Option<f64>,
    pub floor: f64,
    pub psi: PsiOptions,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { tol: 1e-6, max_outer: 200, gss_max_iter: 100, bracket_hi: None, floor: 1e-8, psi: PsiOptions::default() }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_outer == 0 || self.gss_max_iter == 0 {
            return Err(Error::Config("tol must be positive and iteration caps ≥ 1".into()));
        }
        if let Some(hi) = self.bracket_hi {
            if !(hi > 0.0) {
                return Err(Error::Config("bracket_hi must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalWeights {
    pub v_star: ScaledWeights,
    /// v* scaled so that max(w1, w2, w3, w4) = 1.
    pub w_star: WeightVector,
    pub m_hat: f64,
    pub iterations: usize,
    /// Objective after every coordinate step, starting from the initial point.
    pub trace: Vec<f64>,
}

/// Cyclic coordinate descent on Ψ(v) from v = (1, 1, 1).
pub fn optimize_weights(p: &SubspacePrior, cfg: &OptimizerConfig) -> Result<OptimalWeights> {
    optimize_weights_from(p, cfg, [1.0, 1.0, 1.0])
}

pub fn optimize_weights_from(p: &SubspacePrior, cfg: &OptimizerConfig, start: [f64; 3]) -> Result<OptimalWeights> {
    cfg.validate()?;
    let hi = cfg.bracket_hi.unwrap_or_else(|| coordinate_bracket(p.n));
    if cfg.floor >= hi {
        return Err(Error::Config(format!("empty coordinate bracket ({}, {hi}]", cfg.floor)));
    }
    let mut err: Option<Error> = None;
    let mut eval = |v: [f64; 3]| -> f64 {
        match ScaledWeights::new(v[0], v[1], v[2]).and_then(|s| psi_weighted(&s, p, cfg.psi)) {
            Ok(x) => x,
            Err(e) => {
                err.get_or_insert(e);
                f64::INFINITY
            }
        }
    };
    let mut v = start.map(|x| x.clamp(cfg.floor, hi));
    let mut fv = eval(v);
    let mut trace = vec![fv];
    let mut iterations = 0;
    for _ in 0..cfg.max_outer {
        iterations += 1;
        let v_old = v;
        let f_old = fv;
        for i in 0..3 {
            let mut probe = v;
            let zeta = gss(
                |z| {
                    probe[i] = z;
                    eval(probe)
                },
                cfg.floor,
                hi,
                cfg.tol,
                cfg.gss_max_iter,
            );
            let mut cand = v;
            cand[i] = zeta;
            let fc = eval(cand);
            // keep the incumbent if the search did not improve on it
            if fc <= fv {
                v = cand;
                fv = fc;
            }
            trace.push(fv);
        }
        let step = ((v[0] - v_old[0]).powi(2) + (v[1] - v_old[1]).powi(2) + (v[2] - v_old[2]).powi(2)).sqrt();
        if step < cfg.tol || (f_old - fv).abs() < cfg.tol {
            break;
        }
    }
    if let Some(e) = err {
        return Err(e);
    }
    let v_star = ScaledWeights::new(v[0], v[1], v[2])?;
    let top = v[0].max(v[1]).max(v[2]).max(v_star.v4());
    let w_star = WeightVector::new(v[0] / top, v[1] / top, v[2] / top)?;
    Ok(OptimalWeights { v_star, w_star, m_hat: fv / (p.n * p.n) as f64, iterations, trace })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub expected_w4: f64,
    pub given_w4: f64,
    pub relative_error: f64,
    pub consistent: bool,
}

/// Checks w4 = w2·w3/w1 within 0.1 % for a reported 4-tuple.
pub fn weights_consistency_check(w: [f64; 4]) -> ConsistencyReport {
    let expected = w[1] * w[2] / w[0];
    let rel = (w[3] - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
    ConsistencyReport { expected_w4: expected, given_w4: w[3], relative_error: rel, consistent: rel <= 1e-3 }
}

/// Cosine of the angle between two weight 4-tuples.
pub fn direction_cosine(a: [f64; 4], b: [f64; 4]) -> f64 {
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gss_quadratic() {
        let x = gss(|x| (x - 1.0).powi(2), 0.0, 5.0, 1e-9, 200);
        assert!((x - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gss_v_shape() {
        let x = gss(|x| (x - std::f64::consts::PI).abs(), 0.0, 10.0, 1e-9, 200);
        assert!((x - std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn gss_respects_cap() {
        let mut calls = 0;
        gss(
            |x| {
                calls += 1;
                x * x
            },
            -1.0,
            1.0,
            0.0,
            5,
        );
        assert_eq!(calls, 7);
    }

    #[test]
    fn consistency_examples() {
        assert!(weights_consistency_check([1.0, 1.0, 1.0, 1.0]).consistent);
        let r = weights_consistency_check([1.0, 2.0, 3.0, 5.0]);
        assert!(!r.consistent);
        assert_eq!(r.expected_w4, 6.0);
    }

    #[test]
    fn rejects_empty_bracket() {
        let p = SubspacePrior::new(4, 1, 1, vec![10.0], vec![10.0]).unwrap();
        let cfg = OptimizerConfig { bracket_hi: Some(1e-9), ..Default::default() };
        assert!(matches!(optimize_weights(&p, &cfg), Err(Error::Config(_))));
    }
}
