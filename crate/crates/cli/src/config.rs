//! Run configuration: one JSON document per invocation.

use std::path::Path;

use clusterlr::bounds::{BoundParams, ConstantsMode};
use clusterlr::cluster_sim::PlanRequest;
use clusterlr::lattice::{build_rectangular_lattice, build_square_lattice_with, Boundary, FactorGraph};
use clusterlr::operators::{build_named_hamiltonian, LocalOperator, ModelParams, Pauli, State};
use clusterlr::{Error, Hamiltonian, Operator};
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Lattice,
    Bound,
    Simulate,
    Oracle,
    Ssb,
    Bench,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Lattice => "lattice",
            Command::Bound => "bound",
            Command::Simulate => "simulate",
            Command::Oracle => "oracle",
            Command::Ssb => "ssb",
            Command::Bench => "bench",
            Command::Verify => "verify",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    /// Pauli string as `[site, "X" | "Y" | "Z"]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<Vec<(usize, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<Vec<Sweep>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<ClusterCountSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssb: Option<SsbSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchSpec>,
    /// Compare against the exact oracle where the system is small enough.
    #[serde(default)]
    pub oracle: bool,
    /// Adds a `wall_time` column to result files (breaks byte-identity).
    #[serde(default)]
    pub record_timings: bool,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_results")]
    pub results: String,
    #[serde(default = "default_manifest")]
    pub manifest: String,
}

fn default_results() -> String {
    "results.csv".into()
}

fn default_manifest() -> String {
    "manifest.json".into()
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { results: default_results(), manifest: default_manifest() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    /// Equal sides: `dimension` and `side`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<usize>,
    /// Per-axis sides (open boundaries only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sides: Option<Vec<usize>>,
    #[serde(default = "one")]
    pub range: usize,
    #[serde(default)]
    pub periodic: bool,
}

fn one() -> usize {
    1
}

impl LatticeSpec {
    pub fn build(&self) -> Result<FactorGraph, RunError> {
        let boundary = if self.periodic { Boundary::Periodic } else { Boundary::Open };
        let g = match (&self.sides, self.dimension, self.side) {
            (Some(sides), None, None) => {
                if self.periodic {
                    return Err(RunError::config("per-axis sides support open boundaries only"));
                }
                build_rectangular_lattice(sides, self.range)?
            }
            (None, Some(d), Some(l)) => build_square_lattice_with(d, l, self.range, boundary)?,
            _ => return Err(RunError::config("lattice needs either `sides` or `dimension` + `side`")),
        };
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub lattice: LatticeSpec,
    /// One of `tfim`, `heisenberg`, `random2local`, `quasilocal`.
    pub hamiltonian: String,
    #[serde(default)]
    pub params: ModelParams,
}

impl ModelSpec {
    pub fn build(&self) -> Result<(FactorGraph, Hamiltonian), RunError> {
        let g = self.lattice.build()?;
        let h = build_named_hamiltonian(&self.hamiltonian, &g, &self.params)?;
        Ok((g, h))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    AllZero,
    /// Computational basis state, one bit per site.
    Basis { bits: Vec<u8> },
    MaximallyMixed,
}

impl StateSpec {
    pub fn build(&self, n: usize) -> Result<State<f64>, RunError> {
        let s = match self {
            StateSpec::AllZero => State::all_zero(n),
            StateSpec::Basis { bits } => {
                if bits.len() != n || bits.iter().any(|&b| b > 1) {
                    return Err(RunError::config(format!("basis state needs {n} bits in {{0, 1}}")));
                }
                State::basis(&bits.iter().map(|&b| b == 1).collect::<Vec<_>>())
            }
            StateSpec::MaximallyMixed => State::maximally_mixed(n),
        };
        Ok(s)
    }
}

pub fn pauli_from_name(name: &str) -> Result<Pauli, RunError> {
    match name {
        "I" => Ok(Pauli::I),
        "X" => Ok(Pauli::X),
        "Y" => Ok(Pauli::Y),
        "Z" => Ok(Pauli::Z),
        other => Err(RunError::config(format!("unknown Pauli `{other}`"))),
    }
}

pub fn pauli_string(pairs: &[(usize, String)]) -> Result<Operator, RunError> {
    let factors = pairs
        .iter()
        .map(|(v, p)| Ok((*v, pauli_from_name(p)?)))
        .collect::<Result<Vec<_>, RunError>>()?;
    Ok(LocalOperator::pauli_string(&factors)?)
}

/// A list of values, given either explicitly or as an inclusive range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    List(Vec<f64>),
    Range { start: f64, stop: f64, steps: usize },
}

impl Values {
    pub fn expand(&self) -> Result<Vec<f64>, RunError> {
        let v = match self {
            Values::List(v) => v.clone(),
            Values::Range { start, stop, steps } => {
                if *steps == 0 {
                    return Err(RunError::config("range needs at least one step"));
                }
                if *steps == 1 {
                    vec![*start]
                } else {
                    (0..*steps)
                        .map(|k| start + (stop - start) * k as f64 / (*steps - 1) as f64)
                        .collect()
                }
            }
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(RunError::config("grid values must be finite"));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub t: Values,
}

/// One bound evaluated over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bound", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    /// Regions `(|∂B_i|, |∂S_i|, r_i)`.
    Combinatorial { regions: Vec<(usize, usize, usize)>, t: Values },
    Volume { radius: Values, t: Values },
    StandardLr { d_r: usize, d_s: usize, dist: Values, t: Values },
    QuasilocalPair { d_b: usize, d_s: usize, dist: Values, t: Values },
    /// Regions `(|∂B_i|, |∂S_i|, d(S_i, B_i))`.
    QuasilocalNested { regions: Vec<(usize, usize, usize)>, t: Values },
    Truncation { volume: Values, t: Values },
    PathSum { instance: InstanceSpec, t: Values },
    MatrixExp { instance: InstanceSpec, t: Values },
    /// Randomized instances with paired oracle evaluations.
    Dominance { instances: usize, max_qubits: usize },
}

/// A concrete nested-commutator problem on a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub model: ModelSpec,
    pub r: Vec<usize>,
    pub s: Vec<Vec<usize>>,
    pub b: Vec<Vec<usize>>,
    /// Operator in `r`, as Pauli pairs; only read by the oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<(usize, String)>>,
    /// One probe per `s`, as Pauli pairs; only read by the oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<Vec<(usize, String)>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterCountSpec {
    pub root: usize,
    pub m_max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case", deny_unknown_fields)]
pub enum SsbSpec {
    /// Random symmetric evolutions checked against the nested identity.
    Identity { instances: usize, max_sites: usize, max_order: usize, t: Values },
    /// Ground-state splitting of the TFIM chain.
    Ghz { g: f64, lengths: Vec<usize> },
    /// Disorder parameter of the RK state on `lattice`.
    Rk {
        lattice: LatticeSpec,
        beta: f64,
        /// Rectangle sides `(w, h)` (or interval lengths in 1D) anchored at vertex 0.
        regions: Vec<Vec<usize>>,
        #[serde(default)]
        compare_t: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Vanishing,
    Identity,
    ClusterCounts,
    Completeness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default = "all_suites")]
    pub suites: Vec<Suite>,
    /// Fault injection for harness self-tests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<String>,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { suites: all_suites(), mutation: None }
    }
}

fn all_suites() -> Vec<Suite> {
    vec![Suite::Vanishing, Suite::Identity, Suite::ClusterCounts, Suite::Completeness]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub lengths: Vec<usize>,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default = "default_bench_t")]
    pub t: f64,
}

fn default_reps() -> usize {
    3
}

fn default_bench_t() -> f64 {
    0.5
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, RunError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| RunError::config(e.to_string()))?;
        cfg.check_sections()?;
        Ok(cfg)
    }

    /// Rejects sections that the command would silently ignore.
    fn check_sections(&self) -> Result<(), RunError> {
        let present = [
            ("model", self.model.is_some()),
            ("state", self.state.is_some()),
            ("observable", self.observable.is_some()),
            ("grid", self.grid.is_some()),
            ("plan", self.plan.is_some()),
            ("bounds", self.bounds.is_some()),
            ("sweeps", self.sweeps.is_some()),
            ("clusters", self.clusters.is_some()),
            ("ssb", self.ssb.is_some()),
            ("verify", self.verify.is_some()),
            ("bench", self.bench.is_some()),
        ];
        let (required, optional): (&[&str], &[&str]) = match self.command {
            Command::Lattice => (&["model"], &["clusters"]),
            Command::Bound => (&["sweeps"], &["bounds"]),
            Command::Simulate => (&["model", "observable", "grid", "plan"], &["state", "bounds"]),
            Command::Oracle => (&["model", "observable", "grid"], &["state"]),
            Command::Ssb => (&["ssb"], &["bounds"]),
            Command::Bench => (&["bench"], &[]),
            Command::Verify => (&[], &["verify"]),
        };
        for (name, is_set) in present {
            if is_set && !required.contains(&name) && !optional.contains(&name) {
                return Err(RunError::config(format!(
                    "section `{name}` is not used by command `{}`",
                    self.command.name()
                )));
            }
        }
        for name in required {
            if !present.iter().any(|(n, s)| n == name && *s) {
                return Err(RunError::config(format!(
                    "command `{}` needs section `{name}`",
                    self.command.name()
                )));
            }
        }
        Ok(())
    }

    /// Applies command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, mode: Option<ConstantsMode>) -> Self {
        if seed.is_some() {
            self.seed = seed;
        }
        if let Some(mode) = mode {
            if let Some(plan) = self.plan.as_mut() {
                plan.mode = mode;
            }
            let uses_bounds = matches!(self.command, Command::Bound | Command::Simulate | Command::Ssb);
            if self.bounds.is_some() || uses_bounds {
                self.bounds = Some(self.bounds.take().unwrap_or_default().with_mode(mode));
            }
        }
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn bound_params(&self) -> BoundParams {
        self.bounds.clone().unwrap_or_default()
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Library(e)
    }
}
