use std::fs;
use std::path::{Path, PathBuf};

use ghostfd::assembly::AssemblyOptions;
use ghostfd::basis::DEFAULT_ORDER;
use ghostfd::boundary_ops::ConditionMeasure;
use ghostfd::geometry::BoundaryNodePolicy;
use ghostfd::pipeline::{RunOptions, REFERENCE_GRIDS};
use ghostfd::stencils::StencilStrategy;
use ghostfd::Error;
use serde::{Deserialize, Serialize};

pub const MIN_CELLS: usize = 16;

/// Everything needed to reproduce a run. Echoed verbatim into `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub benchmark: String,
    pub strategy: StencilStrategy,
    pub order: usize,
    pub condition_measure: ConditionMeasure,
    pub boundary_nodes: BoundaryNodePolicy,
    /// Single grid; ignored when `sweep` is set.
    pub n: Option<usize>,
    pub sweep: Option<Vec<usize>>,
    pub out: PathBuf,
    pub export_matrix: bool,
    pub export_diagnostics: bool,
    pub inject_exact: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            benchmark: "annulus".into(),
            strategy: StencilStrategy::default(),
            order: DEFAULT_ORDER,
            condition_measure: ConditionMeasure::default(),
            boundary_nodes: BoundaryNodePolicy::Exterior,
            n: Some(160),
            sweep: None,
            out: PathBuf::from("out"),
            export_matrix: false,
            export_diagnostics: false,
            inject_exact: false,
        }
    }
}

#[derive(Serialize)]
struct Echo<'a> {
    config: &'a RunConfig,
}

impl RunConfig {
    /// Reads a config file, or the `config` object of a previous `run.json`.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
        let inner = match value.get("config") {
            Some(c) if value.get("benchmark").is_none() => c.clone(),
            _ => value,
        };
        serde_json::from_value(inner).map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(Echo { config: self }).expect("config serializes")["config"].clone()
    }

    pub fn grids(&self) -> Vec<usize> {
        match (&self.sweep, self.n) {
            (Some(list), _) => list.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => Vec::new(),
        }
    }

    pub fn is_sweep(&self) -> bool {
        self.sweep.is_some()
    }

    pub fn validate(&self) -> Result<(), Error> {
        let grids = self.grids();
        if grids.is_empty() {
            return Err(Error::InvalidParameter("either n or sweep must be given".into()));
        }
        if let Some(&n) = grids.iter().find(|&&n| n < MIN_CELLS) {
            return Err(Error::InvalidParameter(format!(
                "grid size must be at least {MIN_CELLS}, got {n}"
            )));
        }
        if grids.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("sweep grid list must be strictly increasing".into()));
        }
        if self.order < 2 {
            return Err(Error::InvalidParameter(format!("order must be at least 2, got {}", self.order)));
        }
        self.strategy.validate(self.order)?;
        ghostfd::benchmarks::by_name(&self.benchmark).map(|_| ())
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            assembly: AssemblyOptions {
                strategy: self.strategy,
                order: self.order,
                raw_basis: false,
                condition_measure: self.condition_measure,
            },
            boundary_nodes: self.boundary_nodes,
            inject_exact: self.inject_exact,
        }
    }
}

/// `paper13` or a comma-separated list of grid sizes.
pub fn parse_sweep(spec: &str) -> Result<Vec<usize>, String> {
    if spec.eq_ignore_ascii_case("paper13") {
        return Ok(REFERENCE_GRIDS.to_vec());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| format!("bad grid size {s:?}: {e}")))
        .collect()
}
