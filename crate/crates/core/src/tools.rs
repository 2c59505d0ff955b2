//! The four command-line programs: `viem`, `generate_model`, `graphchecker`
//! and `evaluator`.
//!
//! Each program has a `*_main` entry point taking its argument list and
//! output streams and returning the process exit code: 0 on success, 1 for
//! invalid input or usage, 2 for internal errors. Reports go to standard
//! output as `key=value` lines followed by a one-line summary. Objectives
//! count every ordered PE pair, so each communication edge contributes
//! twice.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::construction::{construct, Construction};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::io::{parse_graph, read_mapping, validate_graph, write_graph, write_permutation};
use crate::local_search::{local_search, NeighborhoodKind, NeighborhoodSpec, SearchStats};
use crate::mapping::{check_cost_bound, total_cost, Mapping};
use crate::partition::{partition, quotient_graph, Quality};
use crate::topology::{DistanceOracle, HierarchyTopology, DEFAULT_MATRIX_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ConstructionArg {
    #[value(name = "random")]
    Random,
    #[value(name = "identity")]
    Identity,
    #[value(name = "growing")]
    Growing,
    #[value(name = "hierarchybottomup")]
    HierarchyBottomUp,
    #[default]
    #[value(name = "hierarchytopdown")]
    HierarchyTopDown,
}

impl From<ConstructionArg> for Construction {
    fn from(c: ConstructionArg) -> Self {
        match c {
            ConstructionArg::Random => Construction::Random,
            ConstructionArg::Identity => Construction::Identity,
            ConstructionArg::Growing => Construction::Growing,
            ConstructionArg::HierarchyBottomUp => Construction::HierarchyBottomUp,
            ConstructionArg::HierarchyTopDown => Construction::HierarchyTopDown,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum DistanceConstructionArg {
    /// Store the full distance matrix.
    #[default]
    #[value(name = "hierarchy")]
    Hierarchy,
    /// Compute distances on demand.
    #[value(name = "hierarchyonline")]
    HierarchyOnline,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum NeighborhoodArg {
    #[value(name = "nsquare")]
    NSquare,
    #[value(name = "nsquarepruned")]
    NSquarePruned,
    #[default]
    #[value(name = "communication")]
    Communication,
}

impl From<NeighborhoodArg> for NeighborhoodKind {
    fn from(n: NeighborhoodArg) -> Self {
        match n {
            NeighborhoodArg::NSquare => NeighborhoodKind::NSquare,
            NeighborhoodArg::NSquarePruned => NeighborhoodKind::NSquarePruned,
            NeighborhoodArg::Communication => NeighborhoodKind::Communication,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    #[value(name = "strong")]
    Strong,
    #[default]
    #[value(name = "eco")]
    Eco,
    #[value(name = "fast")]
    Fast,
}

impl From<PresetArg> for Quality {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Strong => Quality::Strong,
            PresetArg::Eco => Quality::Eco,
            PresetArg::Fast => Quality::Fast,
        }
    }
}

/// Partitioner presets accepted by `generate_model`. The social-network
/// variants run the nearest plain preset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ModelPresetArg {
    #[value(name = "strong")]
    Strong,
    #[default]
    #[value(name = "eco")]
    Eco,
    #[value(name = "fast")]
    Fast,
    #[value(name = "fastsocial")]
    FastSocial,
    #[value(name = "ecosocial")]
    EcoSocial,
    #[value(name = "strongsocial")]
    StrongSocial,
}

impl ModelPresetArg {
    fn quality(self) -> (Quality, bool) {
        match self {
            ModelPresetArg::Strong => (Quality::Strong, false),
            ModelPresetArg::Eco => (Quality::Eco, false),
            ModelPresetArg::Fast => (Quality::Fast, false),
            ModelPresetArg::StrongSocial => (Quality::Strong, true),
            ModelPresetArg::EcoSocial => (Quality::Eco, true),
            ModelPresetArg::FastSocial => (Quality::Fast, true),
        }
    }
}

/// Maps the processes of a model onto the PEs of a hierarchical machine.
#[derive(Clone, Debug, PartialEq, Parser)]
#[command(name = "viem", about = "Map a communication model onto a hierarchical machine")]
pub struct ViemConfig {
    /// Path to file (model).
    pub file: PathBuf,

    /// Seed to use for the random number generator.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub seed: i64,

    /// Preconfiguration for the partitioner used inside the mapping algorithm.
    #[arg(long = "preconfiguration_mapping", value_enum, default_value_t = PresetArg::Eco)]
    pub preconfiguration_mapping: PresetArg,

    /// Hierarchy as a:b:..., e.g. 4:16:2 for 4 cores per processor, 16
    /// processors per node and 2 nodes.
    #[arg(long = "hierarchy_parameter_string")]
    pub hierarchy_parameter_string: String,

    /// Distances between levels as d1:d2:..., e.g. 1:10:100.
    #[arg(long = "distance_parameter_string")]
    pub distance_parameter_string: String,

    /// Initial construction algorithm.
    #[arg(long = "construction_algorithm", value_enum, default_value_t = ConstructionArg::HierarchyTopDown)]
    pub construction_algorithm: ConstructionArg,

    /// How distances are provided: a stored matrix or computed on demand.
    #[arg(long = "distance_construction_algorithm", value_enum, default_value_t = DistanceConstructionArg::Hierarchy)]
    pub distance_construction_algorithm: DistanceConstructionArg,

    /// Local search neighborhood.
    #[arg(long = "local_search_neighborhood", value_enum, default_value_t = NeighborhoodArg::Communication)]
    pub local_search_neighborhood: NeighborhoodArg,

    /// Hop distance bound of the communication neighborhood.
    #[arg(long = "communication_neighborhood_dist", default_value_t = 10)]
    pub communication_neighborhood_dist: usize,

    /// Output filename for the permutation.
    #[arg(long = "output_filename", default_value = "permutation")]
    pub output_filename: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViemReport {
    pub mapping: Mapping,
    pub stats: SearchStats,
}

/// Runs the mapper and writes the permutation file and report.
pub fn run_viem(config: &ViemConfig, out: &mut dyn Write) -> Result<ViemReport> {
    let g = load_graph(&config.file)?;
    let topology = HierarchyTopology::parse(&config.hierarchy_parameter_string, &config.distance_parameter_string)?;
    require_same_size(&g, &topology)?;
    let oracle = match config.distance_construction_algorithm {
        DistanceConstructionArg::Hierarchy => DistanceOracle::materialized(topology, DEFAULT_MATRIX_CAP)?,
        DistanceConstructionArg::HierarchyOnline => DistanceOracle::online(topology),
    };
    check_cost_bound(&g, &oracle)?;

    let seed = config.seed as u64;
    let quality = Quality::from(config.preconfiguration_mapping);
    let construction = Construction::from(config.construction_algorithm);
    let mut mapping = construct(construction, &g, oracle.topology(), quality, seed)?;
    let spec = NeighborhoodSpec {
        kind: config.local_search_neighborhood.into(),
        comm_distance: config.communication_neighborhood_dist,
        ..NeighborhoodSpec::default()
    };
    let stats = local_search(&g, &oracle, &mut mapping, &spec, seed)?;
    write_permutation(&mapping, &config.output_filename)?;

    let t = oracle.topology();
    writeln!(out, "graph={}", config.file.display())?;
    writeln!(out, "n={}", g.n())?;
    writeln!(out, "m={}", g.m())?;
    writeln!(out, "hierarchy={}", config.hierarchy_parameter_string)?;
    writeln!(out, "distances={}", config.distance_parameter_string)?;
    writeln!(out, "pe_count={}", t.pe_count())?;
    writeln!(out, "seed={}", config.seed)?;
    writeln!(out, "preconfiguration_mapping={quality}")?;
    writeln!(out, "construction_algorithm={construction}")?;
    writeln!(
        out,
        "distance_construction_algorithm={}",
        if oracle.is_materialized() {
            "hierarchy"
        } else {
            "hierarchyonline"
        }
    )?;
    writeln!(out, "local_search_neighborhood={}", spec.kind)?;
    writeln!(out, "communication_neighborhood_dist={}", spec.comm_distance)?;
    writeln!(out, "initial_cost={}", stats.initial_cost)?;
    writeln!(out, "final_cost={}", stats.final_cost)?;
    writeln!(out, "swaps_performed={}", stats.swaps_performed)?;
    writeln!(out, "pairs_evaluated={}", stats.pairs_evaluated)?;
    writeln!(out, "rounds={}", stats.rounds)?;
    writeln!(out, "permutation_file={}", config.output_filename.display())?;
    writeln!(
        out,
        "mapped {} processes: objective {} after construction, {} after local search",
        g.n(),
        stats.initial_cost,
        stats.final_cost
    )?;
    Ok(ViemReport { mapping, stats })
}

/// Partitions a graph and writes the quotient graph as a communication model.
#[derive(Clone, Debug, PartialEq, Parser)]
#[command(
    name = "generate_model",
    about = "Partition a graph and build its communication model"
)]
pub struct GenerateModelConfig {
    /// Path to the graph file to partition.
    pub file: PathBuf,

    /// Number of blocks, i.e. vertices in the model.
    #[arg(long)]
    pub k: usize,

    /// Seed to use for the random number generator.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub seed: i64,

    /// Partitioner preconfiguration.
    #[arg(long, value_enum, default_value_t = ModelPresetArg::Eco)]
    pub preconfiguration: ModelPresetArg,

    /// Allowed imbalance in percent.
    #[arg(long, default_value_t = 3.0)]
    pub imbalance: f64,

    /// Output filename for the model.
    #[arg(long = "output_filename", default_value = "model.graph")]
    pub output_filename: PathBuf,
}

pub fn run_generate_model(config: &GenerateModelConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<Graph> {
    let g = load_graph(&config.file)?;
    if config.k == 0 || config.k > g.n() {
        return Err(Error::Config(format!(
            "--k={} must lie in 1..={} (the number of vertices)",
            config.k,
            g.n()
        )));
    }
    if !(config.imbalance >= 0.0 && config.imbalance.is_finite()) {
        return Err(Error::Config(format!(
            "--imbalance={} must be non-negative",
            config.imbalance
        )));
    }
    let (quality, social) = config.preconfiguration.quality();
    if social {
        writeln!(
            err,
            "warning: social-network preconfigurations are not available; using `{quality}`"
        )?;
    }
    let epsilon = config.imbalance / 100.0;
    let p = partition(&g, config.k, epsilon, quality, config.seed as u64)?;
    let model = quotient_graph(&g, &p);
    fs::write(&config.output_filename, write_graph(&model, true))?;

    let sizes: Vec<String> = p.block_sizes().iter().map(ToString::to_string).collect();
    writeln!(out, "graph={}", config.file.display())?;
    writeln!(out, "n={}", g.n())?;
    writeln!(out, "m={}", g.m())?;
    writeln!(out, "k={}", config.k)?;
    writeln!(out, "imbalance={}", config.imbalance)?;
    writeln!(out, "preconfiguration={quality}")?;
    writeln!(out, "l_max={}", p.l_max())?;
    writeln!(out, "cut={}", p.cut(&g))?;
    writeln!(out, "block_sizes={}", sizes.join(","))?;
    writeln!(out, "max_block_size={}", p.block_sizes().iter().max().unwrap())?;
    writeln!(out, "model_edges={}", model.m())?;
    writeln!(out, "model_file={}", config.output_filename.display())?;
    writeln!(
        out,
        "wrote a model with {} vertices and {} edges (cut {})",
        model.n(),
        model.m(),
        p.cut(&g)
    )?;
    Ok(model)
}

/// Checks whether a graph file is valid.
#[derive(Clone, Debug, PartialEq, Parser)]
#[command(name = "graphchecker", about = "Check a graph file for format errors")]
pub struct GraphCheckerConfig {
    /// Path to the graph file.
    pub file: PathBuf,
}

/// Prints every violation; returns whether the file is valid.
pub fn run_graphchecker(config: &GraphCheckerConfig, out: &mut dyn Write) -> Result<bool> {
    let text = fs::read_to_string(&config.file)?;
    let report = validate_graph(&text);
    for v in &report.violations {
        writeln!(out, "{v}")?;
    }
    if report.ok() {
        writeln!(out, "graph format OK")?;
    } else {
        writeln!(out, "graph format INVALID: {} violation(s)", report.violations.len())?;
    }
    Ok(report.ok())
}

/// Computes the objective of a given mapping.
#[derive(Clone, Debug, PartialEq, Parser)]
#[command(name = "evaluator", about = "Evaluate the objective of a mapping")]
pub struct EvaluatorConfig {
    /// Path to file (graph/model).
    pub file: PathBuf,

    /// Permutation file to evaluate.
    #[arg(long = "input_mapping")]
    pub input_mapping: PathBuf,

    /// Hierarchy as a:b:..., e.g. 4:16:2.
    #[arg(long = "hierarchy_parameter_string")]
    pub hierarchy_parameter_string: String,

    /// Distances between levels as d1:d2:..., e.g. 1:10:100.
    #[arg(long = "distance_parameter_string")]
    pub distance_parameter_string: String,
}

pub fn run_evaluator(config: &EvaluatorConfig, out: &mut dyn Write) -> Result<i64> {
    let g = load_graph(&config.file)?;
    let topology = HierarchyTopology::parse(&config.hierarchy_parameter_string, &config.distance_parameter_string)?;
    require_same_size(&g, &topology)?;
    let mapping = read_mapping(&config.input_mapping, g.n())?;
    let oracle = DistanceOracle::online(topology);
    check_cost_bound(&g, &oracle)?;
    let objective = total_cost(&g, &oracle, &mapping)?;
    writeln!(out, "n={}", g.n())?;
    writeln!(out, "m={}", g.m())?;
    writeln!(out, "objective={objective}")?;
    writeln!(out, "quadratic assignment objective (ordered PE pairs): {objective}")?;
    Ok(objective)
}

fn load_graph(path: &PathBuf) -> Result<Graph> {
    let text = fs::read_to_string(path)?;
    parse_graph(&text)
}

fn require_same_size(g: &Graph, t: &HierarchyTopology) -> Result<()> {
    if g.n() != t.pe_count() {
        return Err(Error::SizeMismatch(format!(
            "the model has {} vertices but the hierarchy {} describes {} PEs; they must be equal",
            g.n(),
            t,
            t.pe_count()
        )));
    }
    Ok(())
}

/// Parses arguments, runs `body`, and turns the outcome into an exit code.
fn drive<C: Parser, T>(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    out: &mut dyn Write,
    err: &mut dyn Write,
    body: impl FnOnce(&C, &mut dyn Write, &mut dyn Write) -> Result<T>,
    exit_of: impl FnOnce(&T) -> i32,
) -> i32 {
    let config = match C::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_INPUT
                }
            };
        }
    };
    match catch_unwind(AssertUnwindSafe(|| body(&config, out, err))) {
        Ok(Ok(value)) => exit_of(&value),
        Ok(Err(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
        Err(_) => {
            let _ = writeln!(err, "error: internal failure");
            EXIT_INTERNAL
        }
    }
}

pub fn viem_main(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    drive::<ViemConfig, _>(args, out, err, |c, out, _| run_viem(c, out), |_| EXIT_OK)
}

pub fn generate_model_main(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    drive::<GenerateModelConfig, _>(args, out, err, run_generate_model, |_| EXIT_OK)
}

pub fn graphchecker_main(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    drive::<GraphCheckerConfig, _>(
        args,
        out,
        err,
        |c, out, _| run_graphchecker(c, out),
        |&ok| if ok { EXIT_OK } else { EXIT_INPUT },
    )
}

pub fn evaluator_main(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    drive::<EvaluatorConfig, _>(args, out, err, |c, out, _| run_evaluator(c, out), |_| EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn viem_defaults() {
        let c = ViemConfig::try_parse_from([
            "viem",
            "model.graph",
            "--hierarchy_parameter_string=4:16:2",
            "--distance_parameter_string=1:10:100",
        ])
        .unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.preconfiguration_mapping, PresetArg::Eco);
        assert_eq!(c.construction_algorithm, ConstructionArg::HierarchyTopDown);
        assert_eq!(c.distance_construction_algorithm, DistanceConstructionArg::Hierarchy);
        assert_eq!(c.local_search_neighborhood, NeighborhoodArg::Communication);
        assert_eq!(c.communication_neighborhood_dist, 10);
        assert_eq!(c.output_filename, PathBuf::from("permutation"));
    }

    #[test]
    fn viem_requires_hierarchy_and_rejects_unknown() {
        assert!(ViemConfig::try_parse_from(["viem", "g", "--distance_parameter_string=1"]).is_err());
        assert!(ViemConfig::try_parse_from([
            "viem",
            "g",
            "--hierarchy_parameter_string=2",
            "--distance_parameter_string=1",
            "--bogus=1",
        ])
        .is_err());
        assert!(ViemConfig::try_parse_from([
            "viem",
            "g",
            "--hierarchy_parameter_string=2",
            "--distance_parameter_string=1",
            "--construction_algorithm=magic",
        ])
        .is_err());
    }

    #[test]
    fn generate_model_defaults() {
        let c = GenerateModelConfig::try_parse_from(["generate_model", "g.graph", "--k=4"]).unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.preconfiguration, ModelPresetArg::Eco);
        assert_eq!(c.imbalance, 3.0);
        assert_eq!(c.output_filename, PathBuf::from("model.graph"));
        assert!(GenerateModelConfig::try_parse_from(["generate_model", "g.graph"]).is_err());
    }

    #[test]
    fn social_presets_map_to_plain_ones() {
        assert_eq!(ModelPresetArg::FastSocial.quality(), (Quality::Fast, true));
        assert_eq!(ModelPresetArg::EcoSocial.quality(), (Quality::Eco, true));
        assert_eq!(ModelPresetArg::StrongSocial.quality(), (Quality::Strong, true));
        assert_eq!(ModelPresetArg::Eco.quality(), (Quality::Eco, false));
    }

    #[test]
    fn help_exits_zero() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(viem_main(["viem", "--help"], &mut out, &mut err), EXIT_OK);
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("--hierarchy_parameter_string"));
        assert!(text.contains("--communication_neighborhood_dist"));
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(evaluator_main(["evaluator", "--nope"], &mut out, &mut err), EXIT_INPUT);
        assert!(String::from_utf8(err).unwrap().contains("Usage"));
    }
}
