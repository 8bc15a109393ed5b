//! Command-line front end: `compare`, `diff`, `logs2nfa` and `validate`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::automata::{minimize, Nfa};
use crate::ingest::{self, HidingConfig, IngestError};
use crate::levels::{self, LevelError, VariantPartition, DEFAULT_NODE_CAP};
use crate::ltsdiff::{self, DiffParams};
use crate::model_sets::Workspace;
use crate::par;
use crate::report::{self, Level6Diff, ReportBundle, RunMetadata};

#[derive(Debug, Parser)]
#[command(name = "behavdiff", version, about = "Compare behavioral models of software variants")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare all model sets under a workspace directory.
    Compare(CompareArgs),
    /// Structural diff of two `.nfa` files.
    Diff(DiffArgs),
    /// Build a prefix-tree acceptor from a log with one trace per line.
    Logs2nfa(Logs2NfaArgs),
    /// Check that a `.nfa` file is well formed.
    Validate { file: PathBuf },
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Weight of neighbor context in similarity scores.
    #[arg(long, default_value_t = 0.5)]
    pub attenuation: f64,
    /// Share of top-scoring pairs considered as landmarks.
    #[arg(long, default_value_t = 0.25)]
    pub landmark_fraction: f64,
    /// Factor by which a landmark must outscore its competitors.
    #[arg(long, default_value_t = 1.5)]
    pub landmark_ratio: f64,
}

impl ParamArgs {
    pub fn to_params(&self) -> Result<DiffParams, CliError> {
        let params = DiffParams {
            attenuation: self.attenuation,
            landmark_fraction: self.landmark_fraction,
            landmark_ratio: self.landmark_ratio,
            ..DiffParams::default()
        };
        params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Workspace root: one directory per model set holding `<entity>.nfa` files.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for the report, CSV and DOT files; created if missing.
    #[arg(long)]
    pub output: PathBuf,
    /// Levels to compute, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u8).range(1..=6),
          default_value = "1,2,3,4,5,6")]
    pub levels: Vec<u8>,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Hide matching events (`*` wildcard); repeatable.
    #[arg(long = "hide")]
    pub hide: Vec<String>,
    /// Restrict levels 5 and 6 to this entity.
    #[arg(long)]
    pub entity: Option<String>,
    /// Source variant of a single level-6 diff.
    #[arg(long, requires_all = ["entity", "to"])]
    pub from: Option<String>,
    /// Target variant of a single level-6 diff.
    #[arg(long, requires_all = ["entity", "from"])]
    pub to: Option<String>,
    /// Maximum lattice size; exceeding it exits with status 2.
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    pub node_cap: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DiffArgs {
    pub left: PathBuf,
    pub right: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Write the DOT rendering here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Logs2NfaArgs {
    pub log: PathBuf,
    pub output: PathBuf,
    /// Minimize the prefix tree.
    #[arg(long)]
    pub minimize: bool,
}

/// Validated settings of a `compare` run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub levels: BTreeSet<u8>,
    pub params: DiffParams,
    pub hiding: HidingConfig,
    pub entity: Option<String>,
    pub pair: Option<(String, String)>,
    pub node_cap: usize,
}

impl RunConfig {
    pub fn from_args(args: &CompareArgs) -> Result<Self, CliError> {
        let levels: BTreeSet<u8> = args.levels.iter().copied().collect();
        if levels.is_empty() {
            return Err(CliError::Usage("no levels selected".into()));
        }
        let pair = match (&args.from, &args.to) {
            (Some(f), Some(t)) => Some((f.clone(), t.clone())),
            (None, None) => None,
            _ => return Err(CliError::Usage("--from and --to go together".into())),
        };
        if pair.is_some() && args.entity.is_none() {
            return Err(CliError::Usage("--from/--to need --entity".into()));
        }
        Ok(RunConfig {
            input: args.input.clone(),
            output: args.output.clone(),
            levels,
            params: args.params.to_params()?,
            hiding: HidingConfig::new(args.hide.iter().cloned())?,
            entity: args.entity.clone(),
            pair,
            node_cap: args.node_cap,
        })
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Level(LevelError::NodeCapExceeded { .. }) => 2,
            _ => 1,
        }
    }
}

/// Computes every requested level for a loaded workspace.
pub fn compute_bundle(ws: &Workspace, config: &RunConfig) -> Result<ReportBundle, LevelError> {
    let wants = |l: u8| config.levels.contains(&l);
    let need_entities = wants(5) || wants(6);
    let level1 = (wants(1) || wants(2)).then(|| levels::level1(ws));
    let level4 = (wants(4) || need_entities).then(|| levels::level4(ws));
    let level2 = match (&level1, wants(2)) {
        (Some(p), true) => Some(levels::level2(ws, p, config.node_cap)?),
        _ => None,
    };

    let mut level5 = BTreeMap::new();
    let mut level6 = Vec::new();
    if need_entities {
        let partitions = level4.as_ref().unwrap();
        let selected: Vec<&VariantPartition> = match &config.entity {
            Some(name) => {
                let idx = ws
                    .entities()
                    .iter()
                    .position(|e| e.as_str() == name)
                    .ok_or_else(|| LevelError::UnknownEntity(name.clone()))?;
                vec![&partitions[idx]]
            }
            None => partitions.iter().filter(|p| p.classes.len() >= 2).collect(),
        };
        let lattices = par::map(&selected, |p| levels::level5_from(ws, p, &config.params, config.node_cap));
        for (p, lattice) in selected.iter().zip(lattices) {
            let lattice = lattice?;
            let levels::Scope::Entity(entity) = &p.scope else { unreachable!() };
            let entity = entity.as_str().to_string();
            if wants(6) {
                let pairs: Vec<(String, String)> = match &config.pair {
                    Some(pair) => vec![pair.clone()],
                    None => lattice
                        .edges
                        .iter()
                        .map(|e| (lattice.nodes[e.lower].label.clone(), lattice.nodes[e.upper].label.clone()))
                        .collect(),
                };
                let diffs = par::map(&pairs, |(from, to)| {
                    levels::level6_in(&lattice, &entity, from, to, &config.params)
                });
                for ((from, to), diff) in pairs.into_iter().zip(diffs) {
                    level6.push(Level6Diff {
                        entity: entity.clone(),
                        from,
                        to,
                        diff: diff?,
                    });
                }
            }
            if wants(5) {
                level5.insert(entity, lattice);
            }
        }
    }

    Ok(ReportBundle {
        metadata: RunMetadata::new(
            config.input.display().to_string(),
            config.levels.iter().copied().collect(),
            config.params,
            config.hiding.patterns().to_vec(),
            config.node_cap,
        ),
        model_sets: ws.model_sets().iter().map(|s| s.name().to_string()).collect(),
        entities: ws.entities().iter().map(|e| e.as_str().to_string()).collect(),
        level1: level1.filter(|_| wants(1)),
        level2,
        level3: wants(3).then(|| levels::level3(ws)),
        level4: level4.filter(|_| wants(4)),
        level5,
        level6,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let err = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(err)?;
    }
    fs::write(path, contents).map_err(err)
}

/// Writes the output tree of a `compare` run.
pub fn write_outputs(bundle: &ReportBundle, dir: &Path) -> Result<(), CliError> {
    write_file(&dir.join("report.json"), &report::to_json(bundle))?;
    if let Some(l) = &bundle.level2 {
        write_file(&dir.join("level2.dot"), &report::lattice_to_dot("level2", l))?;
    }
    if let Some(m) = &bundle.level3 {
        write_file(&dir.join("level3.csv"), &report::matrix_to_csv(m))?;
    }
    if let Some(t) = &bundle.level4 {
        write_file(&dir.join("level4.csv"), &report::table_to_csv(&bundle.entities, t))?;
    }
    for (entity, lattice) in &bundle.level5 {
        let path = dir.join("level5").join(format!("{entity}.dot"));
        write_file(&path, &report::lattice_to_dot(entity, lattice))?;
    }
    for d in &bundle.level6 {
        let path = dir
            .join("level6")
            .join(&d.entity)
            .join(format!("{}-{}.dot", d.from, d.to));
        let name = format!("{} {}-{}", d.entity, d.from, d.to);
        write_file(&path, &report::diff_to_dot(&name, &d.diff))?;
    }
    Ok(())
}

pub fn cmd_compare(config: &RunConfig) -> Result<ReportBundle, CliError> {
    let ws = ingest::load_workspace(&config.input, &config.hiding)?;
    let bundle = compute_bundle(&ws, config)?;
    write_outputs(&bundle, &config.output)?;
    Ok(bundle)
}

pub fn cmd_diff(args: &DiffArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = args.params.to_params()?;
    let left = ingest::read_nfa(&args.left)?;
    let right = ingest::read_nfa(&args.right)?;
    let d = ltsdiff::diff(&left, &right, &params);
    let dot = report::diff_to_dot("diff", &d);
    let stdout_err = |source| CliError::Write {
        path: PathBuf::from("<stdout>"),
        source,
    };
    writeln!(out, "{}", d.stats()).map_err(stdout_err)?;
    match &args.output {
        Some(path) => write_file(path, &dot),
        None => out.write_all(dot.as_bytes()).map_err(stdout_err),
    }
}

pub fn cmd_logs2nfa(args: &Logs2NfaArgs) -> Result<Nfa, CliError> {
    let text = fs::read_to_string(&args.log).map_err(|source| IngestError::Io {
        path: args.log.clone(),
        source,
    })?;
    let traces = ingest::parse_log(&text).map_err(|e| IngestError::InFile {
        path: args.log.clone(),
        source: Box::new(e),
    })?;
    let mut machine = ingest::build_pta(&traces);
    if args.minimize {
        machine = minimize(&machine).to_nfa();
    }
    write_file(&args.output, &ingest::write_nfa(&machine))?;
    Ok(machine)
}

pub fn cmd_validate(file: &Path) -> Result<Nfa, CliError> {
    Ok(ingest::read_nfa(file)?)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Compare(args) => RunConfig::from_args(args).and_then(|c| cmd_compare(&c).map(|_| ())),
        Command::Diff(args) => cmd_diff(args, out),
        Command::Logs2nfa(args) => cmd_logs2nfa(args).map(|m| {
            let _ = writeln!(out, "{}: {} states", args.output.display(), m.num_states());
        }),
        Command::Validate { file } => cmd_validate(file).map(|m| {
            let _ = writeln!(
                out,
                "{}: ok ({} states, {} transitions)",
                file.display(),
                m.num_states(),
                m.num_transitions()
            );
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
