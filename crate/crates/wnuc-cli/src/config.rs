use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wnuc::geometry::SubspacePrior;
use wnuc::recovery::SolverParams;
use wnuc::sdim::{Pairing, PsiOptions, TangentBlocks};
use wnuc::weighting::WeightVector;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgramSpec {
    Nuclear,
    WeightedOptimal,
    WeightedCustom([f64; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TangentChoice {
    #[default]
    SupportOnly,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairingChoice {
    #[default]
    AngleIndex,
    Sorted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub rho: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub success_threshold: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverParams::default();
        Self { rho: d.rho, max_iter: d.max_iter, tol: d.primal_tol, success_threshold: d.success_threshold }
    }
}

/// On-disk experiment file. Every field is optional; missing ones fall back
/// to the desk-scale strong-prior instance.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: Option<usize>,
    pub r: Option<usize>,
    pub r_prime: Option<usize>,
    pub theta_u: Option<Vec<f64>>,
    pub theta_v: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub m_grid: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub programs: Option<Vec<ProgramSpec>>,
    pub tangent: Option<TangentChoice>,
    pub pairing: Option<PairingChoice>,
    pub solver: Option<SolverSection>,
}

/// Command-line overrides, applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub r: Option<usize>,
    pub r_prime: Option<usize>,
    pub theta_u: Option<Vec<f64>>,
    pub theta_v: Option<Vec<f64>>,
    pub m_grid: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

/// Fully resolved experiment; this is what gets hashed.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub n: usize,
    pub r: usize,
    pub r_prime: usize,
    pub theta_u: Vec<f64>,
    pub theta_v: Vec<f64>,
    pub seed: u64,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub programs: Vec<ProgramSpec>,
    pub tangent: TangentChoice,
    pub pairing: PairingChoice,
    pub solver: SolverSection,
}

const DEFAULT_THETA_U: [f64; 3] = [0.0196, 0.0156, 0.005];
const DEFAULT_THETA_V: [f64; 3] = [0.0258, 0.0146, 0.0098];

pub fn read_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// {5, 10, …} up to n², with n² itself always included.
pub fn default_m_grid(n: usize) -> Vec<usize> {
    let nn = n * n;
    let mut g: Vec<usize> = (1..).map(|k| 5 * k).take_while(|m| *m <= nn).collect();
    if g.last() != Some(&nn) {
        g.push(nn);
    }
    g
}

impl ExperimentConfig {
    pub fn resolve(command: &str, file: ConfigFile, o: Overrides, default_trials: usize) -> Result<Self, CliError> {
        let n = o.n.or(file.n).unwrap_or(10);
        let r = o.r.or(file.r).unwrap_or(3);
        // a bare --r keeps the prior square
        let r_prime = o.r_prime.or(if o.r.is_some() { None } else { file.r_prime }).unwrap_or(r);
        let theta_u = o.theta_u.or(file.theta_u).unwrap_or_else(|| DEFAULT_THETA_U.to_vec());
        let theta_v = o.theta_v.or(file.theta_v).unwrap_or_else(|| DEFAULT_THETA_V.to_vec());
        let trials = o.trials.or(file.trials).unwrap_or(default_trials);
        if trials == 0 {
            return Err(CliError::Config("trials must be ≥ 1".into()));
        }
        let m_grid = o.m_grid.or(file.m_grid).unwrap_or_else(|| default_m_grid(n));
        let cfg = Self {
            command: command.to_string(),
            n,
            r,
            r_prime,
            theta_u,
            theta_v,
            seed: o.seed.or(file.seed).unwrap_or(0),
            m_grid,
            trials,
            programs: file.programs.unwrap_or_else(|| vec![ProgramSpec::Nuclear, ProgramSpec::WeightedOptimal]),
            tangent: file.tangent.unwrap_or_default(),
            pairing: file.pairing.unwrap_or_default(),
            solver: file.solver.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.prior()?;
        let nn = self.n * self.n;
        let g = &self.m_grid;
        if g.is_empty() || g[0] == 0 || g.windows(2).any(|w| w[0] >= w[1]) || *g.last().unwrap() > nn {
            return Err(CliError::Config(format!("m_grid must be strictly increasing within [1, {nn}]")));
        }
        if self.programs.is_empty() {
            return Err(CliError::Config("at least one program is required".into()));
        }
        for p in &self.programs {
            if let ProgramSpec::WeightedCustom([a, b, c]) = p {
                WeightVector::new(*a, *b, *c).map_err(|e| CliError::Config(e.to_string()))?;
            }
        }
        let s = &self.solver;
        if !(s.rho > 0.0 && s.tol > 0.0 && s.success_threshold > 0.0) || s.max_iter == 0 {
            return Err(CliError::Config("solver settings must be positive".into()));
        }
        Ok(())
    }

    pub fn prior(&self) -> Result<SubspacePrior, CliError> {
        SubspacePrior::new(self.n, self.r, self.r_prime, self.theta_u.clone(), self.theta_v.clone())
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn psi(&self) -> PsiOptions {
        PsiOptions {
            pairing: match self.pairing {
                PairingChoice::AngleIndex => Pairing::AngleIndex,
                PairingChoice::Sorted => Pairing::Sorted,
            },
            tangent: match self.tangent {
                TangentChoice::SupportOnly => TangentBlocks::SupportOnly,
                TangentChoice::Complete => TangentBlocks::Complete,
            },
        }
    }

    pub fn solver_params(&self) -> SolverParams {
        let s = &self.solver;
        SolverParams {
            rho: s.rho,
            max_iter: s.max_iter,
            primal_tol: s.tol,
            dual_tol: s.tol,
            success_threshold: s.success_threshold,
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Distinct CSV labels, one per program.
    pub fn labels(&self) -> Vec<String> {
        let mut custom = 0;
        self.programs
            .iter()
            .map(|p| match p {
                ProgramSpec::Nuclear => "nuclear".to_string(),
                ProgramSpec::WeightedOptimal => "weighted_optimal".to_string(),
                ProgramSpec::WeightedCustom(_) => {
                    custom += 1;
                    if custom == 1 {
                        "weighted_custom".to_string()
                    } else {
                        format!("weighted_custom_{custom}")
                    }
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        assert_eq!(default_m_grid(10).len(), 20);
        assert_eq!(default_m_grid(6), vec![5, 10, 15, 20, 25, 30, 35, 36]);
    }

    #[test]
    fn programs_parse() {
        let f: ConfigFile =
            serde_json::from_str(r#"{"programs": ["nuclear", {"weighted_custom": [0.1, 0.5, 0.5]}]}"#).unwrap();
        assert_eq!(f.programs.unwrap()[1], ProgramSpec::WeightedCustom([0.1, 0.5, 0.5]));
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = ExperimentConfig::resolve("phase", ConfigFile::default(), Overrides::default(), 50).unwrap();
        let b = ExperimentConfig::resolve(
            "phase",
            ConfigFile::default(),
            Overrides { seed: Some(1), ..Default::default() },
            50,
        )
        .unwrap();
        assert_eq!(a.hash().len(), 64);
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn bare_r_override_needs_matching_angles() {
        let o = Overrides { r: Some(2), ..Default::default() };
        assert!(ExperimentConfig::resolve("weights", ConfigFile::default(), o, 50).is_err());
        let o = Overrides {
            r: Some(2),
            theta_u: Some(vec![10.0, 5.0]),
            theta_v: Some(vec![20.0, 1.0]),
            ..Default::default()
        };
        let c = ExperimentConfig::resolve("weights", ConfigFile::default(), o, 50).unwrap();
        assert_eq!((c.r, c.r_prime), (2, 2));
    }
}
