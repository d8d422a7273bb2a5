//! Flat `key = value` run configuration.

use std::path::{Path, PathBuf};

use tfdw::minimize::MinimizeOptions;
use tfdw::model::{CellSpec, ModelParams, Nucleus};
use tfdw::radial::ShootControls;
use tfdw::scan::{GridPolicy, TOL_SYM};

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TFDW_OUT_DIR";

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub params: ModelParams,
    pub cell: CellSpec,
    /// Grid points per side of the unit cell.
    pub n: usize,
    pub mode_effective: bool,
    /// Supercell multiplier of the symmetry scan and the critical-c search.
    pub supercell: usize,
    pub opts: MinimizeOptions,
    pub controls: ShootControls,
    pub policy: GridPolicy,
    pub c_list: Vec<f64>,
    pub mu: Option<f64>,
    pub mu_list: Vec<f64>,
    pub mu_count: usize,
    pub c_lo: f64,
    pub c_hi: f64,
    pub tol_c: f64,
    pub tol_sym: f64,
    pub z: Option<f64>,
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            cell: CellSpec::default(),
            n: 32,
            mode_effective: false,
            supercell: 2,
            opts: MinimizeOptions::default(),
            controls: ShootControls::default(),
            policy: GridPolicy::default(),
            c_list: vec![0.0],
            mu: None,
            mu_list: Vec::new(),
            mu_count: 40,
            c_lo: 0.0,
            c_hi: 24.0,
            tol_c: 0.05,
            tol_sym: TOL_SYM,
            z: None,
            workers: 1,
            output_dir: std::env::var_os(OUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(".")),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse `{value}` for key `{key}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|s| parse(key, s.trim())).collect()
}

/// `x y z charge` per nucleus, nuclei separated by `;`.
fn parse_nuclei(value: &str) -> Result<Vec<Nucleus>, CliError> {
    value
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let parts: Vec<f64> = item
                .split_whitespace()
                .map(|s| parse("nuclei", s))
                .collect::<Result<_, _>>()?;
            match parts[..] {
                [x, y, z, charge] => Ok(Nucleus {
                    position: [x, y, z],
                    charge,
                }),
                _ => Err(CliError::Config(format!(
                    "nucleus `{}` needs `x y z charge`",
                    item.trim()
                ))),
            }
        })
        .collect()
}

fn join(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key {
            "c_tf" => self.params.c_tf = parse(key, v)?,
            "c" => self.params.c_dirac = parse(key, v)?,
            "c_w" => self.params.c_w = parse(key, v)?,
            "lambda" => self.params.lambda = parse(key, v)?,
            "q" => self.params.q = parse(key, v)?,
            "edge" => self.cell.edge = parse(key, v)?,
            "multiplier" => self.cell.multiplier = parse(key, v)?,
            "nuclei" => self.cell.nuclei = parse_nuclei(v)?,
            "n" => self.n = parse(key, v)?,
            "mode" => {
                self.mode_effective = match v {
                    "full" => false,
                    "effective" => true,
                    _ => {
                        return Err(CliError::Config(format!(
                            "mode must be `full` or `effective`, got `{v}`"
                        )))
                    }
                }
            }
            "supercell" => self.supercell = parse(key, v)?,
            "max_iters" => self.opts.max_iters = parse(key, v)?,
            "tol_residual" => self.opts.tol_residual = parse(key, v)?,
            "step0" => self.opts.step0 = parse(key, v)?,
            "backtrack" => self.opts.backtrack = parse(key, v)?,
            "n_starts" => self.opts.n_starts = parse(key, v)?,
            "seed" => self.opts.seed = parse(key, v)?,
            "step_scale" => self.controls.step_scale = parse(key, v)?,
            "match_split" => self.controls.match_split = parse(key, v)?,
            "tail_floor" => self.controls.tail_floor = parse(key, v)?,
            "max_bisections" => self.controls.max_bisections = parse(key, v)?,
            "r_floor" => self.controls.r_floor = parse(key, v)?,
            "r_scale" => self.controls.r_scale = parse(key, v)?,
            "policy_per_c" => self.policy.per_c = parse(key, v)?,
            "policy_cap" => self.policy.cap = parse(key, v)?,
            "c_list" => self.c_list = parse_list(key, v)?,
            "mu" => {
                self.mu = if v.is_empty() {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            "mu_list" => self.mu_list = parse_list(key, v)?,
            "mu_count" => self.mu_count = parse(key, v)?,
            "c_lo" => self.c_lo = parse(key, v)?,
            "c_hi" => self.c_hi = parse(key, v)?,
            "tol_c" => self.tol_c = parse(key, v)?,
            "tol_sym" => self.tol_sym = parse(key, v)?,
            "z" => {
                self.z = if v.is_empty() {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            "workers" => self.workers = parse(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("{origin}:{}: expected `key = value`", lineno + 1))
            })?;
            self.set(key.trim(), value)
                .map_err(|e| CliError::Config(format!("{origin}:{}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Applies a `key=value` override from the command line.
    pub fn apply_override(&mut self, item: &str) -> Result<(), CliError> {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{item}` is not `key=value`")))?;
        self.set(key.trim(), value)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate()?;
        self.cell.validate()?;
        self.opts.validate()?;
        if self.n < 2 {
            return Err(CliError::Config("n must be at least 2".into()));
        }
        if self.supercell < 2 {
            return Err(CliError::Config("supercell must be at least 2".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if !(self.tol_sym > 0.0) || !(self.tol_c > 0.0) {
            return Err(CliError::Config(
                "tol_sym and tol_c must be positive".into(),
            ));
        }
        if self.policy.cap < 8 {
            return Err(CliError::Config("policy_cap must be at least 8".into()));
        }
        Ok(())
    }

    /// Every key with its effective value, in a fixed order; feeding these
    /// lines back through [`RunConfig::apply_text`] reproduces the run.
    /// The output directory is left out so that outputs do not depend on
    /// where they were written.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let nuclei = self
            .cell
            .nuclei
            .iter()
            .map(|nu| {
                format!(
                    "{} {} {} {}",
                    nu.position[0], nu.position[1], nu.position[2], nu.charge
                )
            })
            .collect::<Vec<_>>()
            .join("; ");
        vec![
            ("c_tf", self.params.c_tf.to_string()),
            ("c", self.params.c_dirac.to_string()),
            ("c_w", self.params.c_w.to_string()),
            ("lambda", self.params.lambda.to_string()),
            ("q", self.params.q.to_string()),
            ("edge", self.cell.edge.to_string()),
            ("multiplier", self.cell.multiplier.to_string()),
            ("nuclei", nuclei),
            ("n", self.n.to_string()),
            (
                "mode",
                if self.mode_effective {
                    "effective"
                } else {
                    "full"
                }
                .to_string(),
            ),
            ("supercell", self.supercell.to_string()),
            ("max_iters", self.opts.max_iters.to_string()),
            ("tol_residual", self.opts.tol_residual.to_string()),
            ("step0", self.opts.step0.to_string()),
            ("backtrack", self.opts.backtrack.to_string()),
            ("n_starts", self.opts.n_starts.to_string()),
            ("seed", self.opts.seed.to_string()),
            ("step_scale", self.controls.step_scale.to_string()),
            ("match_split", self.controls.match_split.to_string()),
            ("tail_floor", self.controls.tail_floor.to_string()),
            ("max_bisections", self.controls.max_bisections.to_string()),
            ("r_floor", self.controls.r_floor.to_string()),
            ("r_scale", self.controls.r_scale.to_string()),
            ("policy_per_c", self.policy.per_c.to_string()),
            ("policy_cap", self.policy.cap.to_string()),
            ("c_list", join(&self.c_list)),
            ("mu", opt(self.mu)),
            ("mu_list", join(&self.mu_list)),
            ("mu_count", self.mu_count.to_string()),
            ("c_lo", self.c_lo.to_string()),
            ("c_hi", self.c_hi.to_string()),
            ("tol_c", self.tol_c.to_string()),
            ("tol_sym", self.tol_sym.to_string()),
            ("z", opt(self.z)),
            ("workers", self.workers.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_lists() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# header\nc_tf = 2  # trailing\n\nc_list = 0, 1.5,3\nnuclei = 0 0 0 1; 0.5 0.5 0.5 2\n", "t")
            .unwrap();
        assert_eq!(cfg.params.c_tf, 2.0);
        assert_eq!(cfg.c_list, vec![0.0, 1.5, 3.0]);
        assert_eq!(cfg.cell.nuclei.len(), 2);
        assert_eq!(cfg.cell.nuclei[1].charge, 2.0);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_errors() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_text("bogus = 1", "t").is_err());
        assert!(cfg.apply_text("c_tf = one", "t").is_err());
        assert!(cfg.apply_text("c_tf 1", "t").is_err());
        assert!(cfg.apply_override("nuclei=0 0 1").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.apply_text(
            "c = 0.1\nmu_list = 0.01,0.02\nz = 2\nnuclei = 0 0 0 1; 0.25 0.5 0.5 3",
            "t",
        )
        .unwrap();
        let text: String = cfg
            .entries()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        let mut again = RunConfig::default();
        again.apply_text(&text, "echo").unwrap();
        assert_eq!(again.entries(), cfg.entries());
    }
}
