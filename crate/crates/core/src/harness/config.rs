use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::correction::{KernelSpec, SolverParams};
use crate::error::{OpeError, Result};
use crate::mdp::{Environment, QLearningParams};

/// Estimation methods the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Bch,
    Emp,
    BchPooled,
    BchKlPooled,
    EmpSingle,
    KlEmp,
    Sadl,
    Mis,
    Wis,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Bch,
        Method::Emp,
        Method::BchPooled,
        Method::BchKlPooled,
        Method::EmpSingle,
        Method::KlEmp,
        Method::Sadl,
        Method::Mis,
        Method::Wis,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Bch => "bch",
            Method::Emp => "emp",
            Method::BchPooled => "bch-pooled",
            Method::BchKlPooled => "bch-kl-pooled",
            Method::EmpSingle => "emp-single",
            Method::KlEmp => "kl-emp",
            Method::Sadl => "sadl",
            Method::Mis => "mis",
            Method::Wis => "wis",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = OpeError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.id() == s).ok_or_else(|| OpeError::UnknownMethod(s.to_string()))
    }
}

/// Kernel family; resolved to a state or state-action kernel per method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    Delta,
    Gaussian { bandwidth: f64 },
}

impl KernelChoice {
    pub fn state_kernel(self, env: Environment) -> KernelSpec {
        match self {
            KernelChoice::Delta => KernelSpec::state_delta(),
            KernelChoice::Gaussian { bandwidth } => KernelSpec::gaussian(bandwidth, env.state_embedding()),
        }
    }

    pub fn state_action_kernel(self, env: Environment) -> KernelSpec {
        match self {
            KernelChoice::Delta => KernelSpec::state_action_delta(),
            KernelChoice::Gaussian { bandwidth } => KernelSpec::gaussian(bandwidth, env.state_embedding()),
        }
    }
}

/// A full sweep description.
///
/// The target is the Q-learning greedy policy softened by `target_epsilon`;
/// each behavior softens the same Q-table by its own epsilon.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub environment: Environment,
    pub q_learning: QLearningParams,
    pub target_epsilon: f64,
    pub behavior_epsilons: Vec<f64>,
    pub num_trajectories: Vec<usize>,
    pub horizons: Vec<usize>,
    pub methods: Vec<Method>,
    pub seeds: usize,
    pub kernel: KernelChoice,
    pub solver: SolverParams,
    pub output: PathBuf,
    pub master_seed: u64,
    pub workers: Option<usize>,
    /// Wall-clock timings break byte-for-byte reproducibility, so they are opt-in.
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn new(environment: Environment) -> Self {
        Self {
            environment,
            q_learning: QLearningParams::default(),
            target_epsilon: 0.1,
            behavior_epsilons: vec![0.2],
            num_trajectories: vec![20, 50, 100, 200],
            horizons: vec![50, 100, 200],
            methods: vec![Method::Bch, Method::Emp, Method::Wis],
            seeds: 50,
            kernel: KernelChoice::Delta,
            solver: SolverParams::default(),
            output: PathBuf::from("."),
            master_seed: 0,
            workers: None,
            record_wall_time: false,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| OpeError::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(OpeError::InvalidConfig(msg));
        if self.seeds == 0 {
            return bad("seeds must be at least 1".into());
        }
        if self.num_trajectories.is_empty() || self.horizons.is_empty() || self.methods.is_empty() {
            return bad("num_trajectories, horizons and methods must be nonempty".into());
        }
        if self.behavior_epsilons.is_empty() {
            return bad("at least one behavior epsilon is required".into());
        }
        let m = self.behavior_epsilons.len();
        if let Some(&n) = self.num_trajectories.iter().find(|&&n| n < m) {
            return bad(format!("{n} trajectories cannot cover {m} behaviors"));
        }
        if self.horizons.contains(&0) {
            return bad("horizons must be positive".into());
        }
        for &eps in std::iter::once(&self.target_epsilon).chain(&self.behavior_epsilons) {
            if !(eps > 0.0 && eps <= 1.0) {
                return bad(format!("softening epsilon {eps} must lie in (0, 1]"));
            }
        }
        self.q_learning.validate().map_err(|e| OpeError::InvalidConfig(e.to_string()))?;
        if let KernelChoice::Gaussian { bandwidth } = self.kernel {
            if !(bandwidth > 0.0 && bandwidth.is_finite()) {
                return bad(format!("kernel bandwidth {bandwidth} must be positive"));
            }
        }
        if !(self.solver.step > 0.0) || self.solver.window == 0 {
            return bad("solver step and window must be positive".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str, kernel_name: &mut Option<String>, bandwidth: &mut f64) -> Result<()> {
        match key {
            "environment" => self.environment = value.parse().map_err(|_| invalid(key, value))?,
            "target_epsilon" => self.target_epsilon = parse(key, value)?,
            "behavior_epsilons" => self.behavior_epsilons = parse_list(key, value)?,
            "q_episodes" => self.q_learning.episodes = parse(key, value)?,
            "q_steps" => self.q_learning.steps_per_episode = parse(key, value)?,
            "q_epsilon" => self.q_learning.epsilon = parse(key, value)?,
            "q_alpha" => self.q_learning.alpha = parse(key, value)?,
            "q_gamma" => self.q_learning.gamma = parse(key, value)?,
            "num_trajectories" => self.num_trajectories = parse_list(key, value)?,
            "horizons" => self.horizons = parse_list(key, value)?,
            "methods" => {
                self.methods = split_list(value).map(str::parse).collect::<Result<_>>()?;
            }
            "seeds" => self.seeds = parse(key, value)?,
            "kernel" => *kernel_name = Some(value.to_string()),
            "kernel_bandwidth" => *bandwidth = parse(key, value)?,
            "solver_step" => self.solver.step = parse(key, value)?,
            "solver_iters" => self.solver.iters = parse(key, value)?,
            "solver_tol" => self.solver.tol = parse(key, value)?,
            "solver_window" => self.solver.window = parse(key, value)?,
            "output" => self.output = PathBuf::from(value),
            "seed" => self.master_seed = parse(key, value)?,
            "workers" => self.workers = Some(parse(key, value)?),
            "record_wall_time" => self.record_wall_time = parse(key, value)?,
            _ => return Err(OpeError::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }
}

fn invalid(key: &str, value: &str) -> OpeError {
    OpeError::InvalidConfig(format!("bad value `{value}` for `{key}`"))
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| invalid(key, value))
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    split_list(value).map(|v| parse(key, v)).collect()
}

impl FromStr for ExperimentConfig {
    type Err = OpeError;

    /// `key = value` per line; `#` starts a comment; lists are comma separated.
    /// `environment` is required, everything else has a default.
    fn from_str(text: &str) -> Result<Self> {
        let mut config: Option<Self> = None;
        let mut pending = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| OpeError::InvalidConfig(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "environment" {
                if config.is_some() {
                    return Err(OpeError::InvalidConfig("environment given twice".into()));
                }
                config = Some(Self::new(value.parse().map_err(|_| invalid(key, value))?));
            } else {
                pending.push((key.to_string(), value.to_string()));
            }
        }
        let mut config = config.ok_or_else(|| OpeError::InvalidConfig("missing `environment`".into()))?;
        let mut kernel_name = None;
        let mut bandwidth = 1.0;
        for (key, value) in &pending {
            config.set(key, value, &mut kernel_name, &mut bandwidth)?;
        }
        config.kernel = match kernel_name.as_deref() {
            None | Some("delta") => KernelChoice::Delta,
            Some("gaussian") => KernelChoice::Gaussian { bandwidth },
            Some(other) => return Err(invalid("kernel", other)),
        };
        config.validate()?;
        Ok(config)
    }
}
