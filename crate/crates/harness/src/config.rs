use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use padic_tree::operators::Window;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Identities that compose several operators.
    pub composed: f64,
    /// A single operator against a closed form or an oracle.
    pub single: f64,
    /// Relative error allowed for eigenvalue checks.
    pub relative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { composed: 1e-9, single: 1e-12, relative: 1e-10 }
    }
}

/// Where identities are evaluated, relative to the test function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSpec {
    /// Levels between the window ball and the function's support ball.
    pub above: i32,
    /// Window resolution beyond the function's resolution.
    pub extra_resolution: i32,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { above: 1, extra_resolution: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Vladimirov,
    Kernel,
    Field,
    Pushforward,
}

/// Inputs of the `apply` experiment. Paths are relative to the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplyConfig {
    pub operator: Operator,
    pub function: PathBuf,
    #[serde(default)]
    pub kernel: Option<PathBuf>,
    #[serde(default)]
    pub field: Option<PathBuf>,
    #[serde(default)]
    pub morphism: Option<PathBuf>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub window: Option<Window>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub p: Vec<u32>,
    pub d: Vec<usize>,
    pub precision: u32,
    pub seeds: Vec<u64>,
    pub alphas: Vec<f64>,
    pub gammas: Vec<i32>,
    pub gamma_max: i32,
    pub window: WindowSpec,
    pub tolerances: Tolerances,
    /// Wavelets in each random test function.
    pub span_size: usize,
    /// Vector fields per morphism in the covariance sweep.
    pub fields_per_morphism: usize,
    /// Test functions per vector field in the covariance sweep.
    pub functions_per_field: usize,
    /// Transport kernels along the wrong morphism; every transform-rule case must then fail.
    pub negative_control: bool,
    pub apply: Option<ApplyConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "identities".into(),
            p: vec![2, 3],
            d: vec![2, 3],
            precision: padic_tree::padic::DEFAULT_PRECISION,
            seeds: (0..20).collect(),
            alphas: vec![0.5, 1.0, 2.0],
            gammas: vec![-1, 0, 1],
            gamma_max: 40,
            window: WindowSpec::default(),
            tolerances: Tolerances::default(),
            span_size: 10,
            fields_per_morphism: 5,
            functions_per_field: 5,
            negative_control: false,
            apply: None,
        }
    }
}

impl ExperimentConfig {
    /// Defaults for one experiment.
    pub fn for_experiment(name: &str) -> Self {
        let base = ExperimentConfig { name: name.into(), ..Default::default() };
        match name {
            "frame-bound" => ExperimentConfig { p: vec![2, 3, 5], d: vec![1], seeds: vec![0], ..base },
            "structure" => ExperimentConfig { p: vec![2, 3, 5], d: vec![1, 2, 3], seeds: (0..100).collect(), ..base },
            "oracle" => ExperimentConfig { p: vec![2, 3, 5], d: vec![1], seeds: vec![0], ..base },
            "apply" => ExperimentConfig { d: vec![1], seeds: vec![0], ..base },
            _ => base,
        }
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: ExperimentConfig = parse_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if let (Some(apply), Some(dir)) = (cfg.apply.as_mut(), path.parent()) {
            for p in [Some(&mut apply.function), apply.kernel.as_mut(), apply.field.as_mut(), apply.morphism.as_mut()]
                .into_iter()
                .flatten()
            {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }
}

/// Parses JSON, naming the offending field and position on failure.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        format!("field `{path}`: {inner}")
    })
}
