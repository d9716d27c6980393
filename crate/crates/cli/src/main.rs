//! `mmspace` — rooted metric measure space toolkit.
//!
//! - `space`: validate, restrict, and probe single space files (JSON).
//! - `dist`: distances between two spaces (Prohorov and Hausdorff on a
//!   shared matrix; searched Gromov-type upper bounds otherwise).
//! - `gen`: tree and path generators (JSON trees, CSV paths).
//! - `run`: seeded convergence experiments producing versioned CSV reports.
//!
//! Exit codes: 0 success, 2 invalid input or config, 3 size-limit refusal.

use clap::{Parser, Subcommand, ValueEnum};
use mmspace::align::{ghp_ub, gromov_prohorov_ub, localized, sghp, LocalKind, SearchParams};
use mmspace::experiment::{
    ConvergenceReport, CubeConfig, ExperimentConfig, KallenbergConfig, SequenceConfig, SwapConfig,
};
use mmspace::metrics::{hausdorff, prohorov};
use mmspace::sampling::dmd_exact;
use mmspace::treegen::{
    bessel3_em, brownian_path, geometric_offspring, gw_tree, kallenberg_excursion,
    pitman_transform, GwOutcome,
};
use mmspace::{Error, FiniteMMSpace, Result};
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "mmspace", version, about = "rooted metric measure space toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master seed (generators; overrides the config seed for `run`)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for experiment fan-out
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Output: a file path (.csv/.json selects the format) or the literal
    /// `csv`/`json` to pick the stdout format
    #[arg(long, global = true)]
    out: Option<String>,
    /// Experiment config JSON for `run` (built-in defaults otherwise)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect and transform a space file
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Distances between two space files
    #[command(subcommand)]
    Dist(DistCmd),
    /// Generators: trees and paths
    #[command(subcommand)]
    Gen(GenCmd),
    /// Convergence experiments (CSV reports)
    #[command(subcommand)]
    Run(RunCmd),
}

#[derive(Subcommand)]
enum SpaceCmd {
    /// Check the space file (exit 2 with a message when invalid)
    Validate { file: PathBuf },
    /// Restrict to the closed ball around the root
    Restrict {
        file: PathBuf,
        #[arg(long)]
        radius: f64,
    },
    /// Exact m-point distance matrix distribution
    Dmd {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        m: usize,
    },
    /// Lower mass at ball radius delta (over the whole support by default)
    Lowmass {
        file: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        radius: Option<f64>,
    },
}

#[derive(Subcommand)]
enum DistCmd {
    /// Prohorov distance of the two mass vectors (shared matrix required)
    Pr { a: PathBuf, b: PathBuf },
    /// Hausdorff distance of the two supports (shared matrix required)
    Hausdorff { a: PathBuf, b: PathBuf },
    /// Searched Gromov-Prohorov upper bound
    Gp { a: PathBuf, b: PathBuf },
    /// Searched Gromov-Hausdorff-Prohorov upper bound
    Ghp { a: PathBuf, b: PathBuf },
    /// Searched support-GHP upper bound (adds the reciprocal-mass integral)
    Sghp { a: PathBuf, b: PathBuf },
    /// Exponentially weighted integral of capped restricted distances
    Localized {
        #[arg(long, value_enum, default_value_t = KindArg::Gp)]
        kind: KindArg,
        a: PathBuf,
        b: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Gp,
    Sghp,
}

#[derive(Subcommand)]
enum GenCmd {
    /// Galton-Watson tree, truncated-geometric offspring (JSON)
    Gw {
        /// Node budget; generation truncates when it is reached
        #[arg(long, default_value_t = 64)]
        cap: usize,
        /// Largest offspring count of the truncated-geometric law
        #[arg(long, default_value_t = 8)]
        offspring_max: usize,
    },
    /// Lattice-walk excursion certified past the truncation barrier (CSV)
    Kallenberg {
        /// Lattice scale: time pitch n⁻², height pitch n⁻¹
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 4_000_000)]
        walk_steps: usize,
    },
    /// Brownian-type path on a uniform time grid (CSV)
    Brownian {
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = PathArg::Brownian)]
        kind: PathArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    /// Standard Brownian path
    Brownian,
    /// Pitman transform 2·max − path of a Brownian path
    Pitman,
    /// Euler-Maruyama three-dimensional Bessel path
    Bessel,
}

#[derive(Subcommand)]
enum RunCmd {
    /// Named space sequence against its base space
    Sequence,
    /// Growing-dimension cube family (designed mass-bound failure)
    Cube,
    /// Measure replacement on random graph trees
    Swap,
    /// Discrete vs continuum lattice-tree ensembles across scales
    Kallenberg,
}

/// What a command produced; each payload has a natural format and can be
/// rendered in the other on request.
enum Payload {
    Value(serde_json::Value),
    Report(Box<ConvergenceReport>),
    /// (t, value) series, e.g. path or excursion breakpoints.
    Series(Vec<(f64, f64)>),
}

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Json,
    Csv,
}

impl Payload {
    fn natural_format(&self) -> Format {
        match self {
            Payload::Value(_) => Format::Json,
            Payload::Report(_) | Payload::Series(_) => Format::Csv,
        }
    }

    fn render(&self, fmt: Format) -> String {
        match (self, fmt) {
            (Payload::Value(v), Format::Json) => {
                let mut s = serde_json::to_string_pretty(v).expect("json values render");
                s.push('\n');
                s
            }
            // flat key,value lines; non-scalar fields stay JSON-encoded
            (Payload::Value(v), Format::Csv) => {
                let mut s = String::from("key,value\n");
                if let Some(map) = v.as_object() {
                    for (k, val) in map {
                        s.push_str(&format!("{k},{val}\n"));
                    }
                } else {
                    s.push_str(&format!("value,{v}\n"));
                }
                s
            }
            (Payload::Report(r), Format::Csv) => r.to_csv(),
            (Payload::Report(r), Format::Json) => {
                let mut s = serde_json::to_string_pretty(r).expect("reports render");
                s.push('\n');
                s
            }
            (Payload::Series(rows), Format::Csv) => {
                let mut s = String::from("t,value\n");
                for (t, v) in rows {
                    s.push_str(&format!("{t},{v}\n"));
                }
                s
            }
            (Payload::Series(rows), Format::Json) => {
                let t: Vec<f64> = rows.iter().map(|r| r.0).collect();
                let value: Vec<f64> = rows.iter().map(|r| r.1).collect();
                let mut s = serde_json::to_string_pretty(&json!({"t": t, "value": value}))
                    .expect("series render");
                s.push('\n');
                s
            }
        }
    }
}

fn format_of(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        _ => Format::Csv,
    }
}

fn emit(payload: &Payload, out: &Option<String>) -> Result<()> {
    match out.as_deref() {
        None => print!("{}", payload.render(payload.natural_format())),
        Some("json") => print!("{}", payload.render(Format::Json)),
        Some("csv") => print!("{}", payload.render(Format::Csv)),
        Some(path) => {
            let path = Path::new(path);
            std::fs::write(path, payload.render(format_of(path)))?;
        }
    }
    Ok(())
}

fn load_space(path: &Path) -> Result<FiniteMMSpace> {
    let text = std::fs::read_to_string(path)?;
    let space: FiniteMMSpace = serde_json::from_str(&text)?;
    Ok(space)
}

/// Prohorov and Hausdorff compare structures over one metric, so both
/// files must carry the identical matrix (and root).
fn load_shared_pair(a: &Path, b: &Path) -> Result<(FiniteMMSpace, FiniteMMSpace)> {
    let (x, y) = (load_space(a)?, load_space(b)?);
    if x.len() != y.len() || x.root() != y.root() {
        return Err(Error::InvalidConfig(
            "the two spaces must share one matrix and root; for distances \
             between different metrics use gp/ghp/sghp/localized"
                .into(),
        ));
    }
    for i in 0..x.len() {
        for j in 0..x.len() {
            if x.dist(i, j) != y.dist(i, j) {
                return Err(Error::InvalidConfig(format!(
                    "matrices differ at ({i}, {j}): {} vs {}",
                    x.dist(i, j),
                    y.dist(i, j)
                )));
            }
        }
    }
    Ok((x, y))
}

fn estimate_value(e: &mmspace::align::DistanceEstimate) -> serde_json::Value {
    serde_json::to_value(e).expect("estimates serialize")
}

fn space_cmd(cmd: &SpaceCmd) -> Result<Payload> {
    Ok(match cmd {
        SpaceCmd::Validate { file } => {
            let sp = load_space(file)?;
            sp.validate()?;
            Payload::Value(json!({
                "valid": true,
                "points": sp.len(),
                "support": sp.support_indices().len(),
                "root": sp.root(),
                "total_mass": sp.total_mass(),
                "max_root_distance": sp.max_root_distance(),
            }))
        }
        SpaceCmd::Restrict { file, radius } => {
            let sp = load_space(file)?.restrict(*radius)?;
            Payload::Value(serde_json::to_value(&sp)?)
        }
        SpaceCmd::Dmd { file, m } => {
            let dmd = dmd_exact(&load_space(file)?, *m)?;
            Payload::Value(serde_json::to_value(&dmd)?)
        }
        SpaceCmd::Lowmass { file, delta, radius } => {
            let sp = load_space(file)?;
            let value = match radius {
                Some(r) => sp.lower_mass(*delta, *r),
                None => sp.global_lower_mass(*delta),
            };
            Payload::Value(json!({"delta": delta, "radius": radius, "lower_mass": value}))
        }
    })
}

fn dist_cmd(cmd: &DistCmd) -> Result<Payload> {
    let params = SearchParams::default();
    Ok(match cmd {
        DistCmd::Pr { a, b } => {
            let (x, y) = load_shared_pair(a, b)?;
            let v = prohorov(x.masses(), y.masses(), x.matrix())?;
            Payload::Value(json!({"value": v}))
        }
        DistCmd::Hausdorff { a, b } => {
            let (x, y) = load_shared_pair(a, b)?;
            let v = hausdorff(&x.support_with_root(), &y.support_with_root(), x.matrix())?;
            Payload::Value(json!({"value": v}))
        }
        DistCmd::Gp { a, b } => {
            let e = gromov_prohorov_ub(&load_space(a)?, &load_space(b)?, &params)?;
            Payload::Value(estimate_value(&e))
        }
        DistCmd::Ghp { a, b } => {
            let e = ghp_ub(&load_space(a)?, &load_space(b)?, &params)?;
            Payload::Value(estimate_value(&e))
        }
        DistCmd::Sghp { a, b } => {
            let e = sghp(&load_space(a)?, &load_space(b)?, &params)?;
            Payload::Value(estimate_value(&e))
        }
        DistCmd::Localized { kind, a, b } => {
            let k = match kind {
                KindArg::Gp => LocalKind::Gp,
                KindArg::Sghp => LocalKind::Sghp,
            };
            let v = localized(k, &load_space(a)?, &load_space(b)?, &params)?;
            Payload::Value(json!({"value": v}))
        }
    })
}

fn gen_cmd(cmd: &GenCmd, seed: u64) -> Result<Payload> {
    Ok(match cmd {
        GenCmd::Gw { cap, offspring_max } => {
            let offspring = geometric_offspring(*offspring_max);
            match gw_tree(&offspring, seed, *cap)? {
                GwOutcome::Extinct => Payload::Value(json!({"extinct": true})),
                GwOutcome::Tree { tree, truncated } => Payload::Value(json!({
                    "tree": serde_json::to_value(&tree)?,
                    "truncated": truncated,
                })),
            }
        }
        GenCmd::Kallenberg { n, radius, walk_steps } => {
            let e = kallenberg_excursion(*n, *walk_steps, seed, *radius)?;
            Payload::Series(e.breakpoints().to_vec())
        }
        GenCmd::Brownian { horizon, grid, kind } => {
            let path = match kind {
                PathArg::Brownian => brownian_path(*grid, *horizon, seed),
                PathArg::Pitman => pitman_transform(&brownian_path(*grid, *horizon, seed)),
                PathArg::Bessel => bessel3_em(*grid, *horizon, seed),
            };
            let dt = horizon / *grid as f64;
            Payload::Series(
                path.values().iter().enumerate().map(|(i, &v)| (i as f64 * dt, v)).collect(),
            )
        }
    })
}

fn run_cmd(cmd: &RunCmd, cli: &Cli) -> Result<Payload> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let config: ExperimentConfig = serde_json::from_str(&text)?;
            let matches_cmd = matches!(
                (cmd, &config),
                (RunCmd::Sequence, ExperimentConfig::SequenceConvergence(_))
                    | (RunCmd::Cube, ExperimentConfig::CubeCounterexample(_))
                    | (RunCmd::Swap, ExperimentConfig::MeasureSwap(_))
                    | (RunCmd::Kallenberg, ExperimentConfig::Kallenberg(_))
            );
            if !matches_cmd {
                return Err(Error::InvalidConfig(
                    "config experiment kind does not match the subcommand".into(),
                ));
            }
            config
        }
        None => match cmd {
            RunCmd::Sequence => ExperimentConfig::SequenceConvergence(SequenceConfig::default()),
            RunCmd::Cube => ExperimentConfig::CubeCounterexample(CubeConfig::default()),
            RunCmd::Swap => ExperimentConfig::MeasureSwap(SwapConfig::default()),
            RunCmd::Kallenberg => ExperimentConfig::Kallenberg(KallenbergConfig::default()),
        },
    };
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    if cli.workers == 0 {
        return Err(Error::InvalidConfig("workers must be positive".into()));
    }
    let report = config.run(cli.workers)?;
    Ok(Payload::Report(Box::new(report)))
}

fn dispatch(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let payload = match &cli.command {
        Command::Space(cmd) => space_cmd(cmd)?,
        Command::Dist(cmd) => dist_cmd(cmd)?,
        Command::Gen(cmd) => gen_cmd(cmd, seed)?,
        Command::Run(cmd) => run_cmd(cmd, cli)?,
    };
    emit(&payload, &cli.out)
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
