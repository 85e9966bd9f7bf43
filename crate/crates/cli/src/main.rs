use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cmmom::scenario::{self, Geometry, Scenario};
use cmmom::solver::{bench_compression, BenchConfig, SolveMode, BENCH_CSV_HEADER};
use cmmom::{exec, Error};

/// Conversion-matrix method of moments: time-varying loaded scatterers and
/// antennas.
#[derive(Parser)]
#[command(name = "cmmom", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write its result files.
    Run {
        scenario: PathBuf,
        /// Output directory (default: out/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario's solver mode.
        #[arg(long, value_parser = parse_mode)]
        mode: Option<SolveMode>,
        /// Replace the geometry block with a mesh file.
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Check a scenario (schema, mesh, ports, loads) without solving.
    Validate {
        scenario: PathBuf,
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Time compressed against uncompressed solves on random systems.
    Bench {
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        freqs: Option<Vec<usize>>,
        #[arg(long)]
        trials: Option<usize>,
        /// CSV destination (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> Result<SolveMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Exit 2 for bad input, 3 for failures while solving or writing.
enum Failure {
    Input(Error),
    Solve(Error),
}

impl Failure {
    fn report(self) -> ExitCode {
        let (code, what, e) = match self {
            Failure::Input(e) => (2, "invalid input", e),
            Failure::Solve(e) => (3, "solver failure", e),
        };
        eprintln!("cmmom: {what}: {e}");
        ExitCode::from(code)
    }
}

fn load(path: &Path, mesh: Option<&PathBuf>) -> Result<Scenario, Failure> {
    let mut s = Scenario::from_path(path).map_err(Failure::Input)?;
    if let Some(m) = mesh {
        let ports = match &s.geometry {
            Geometry::MeshFile { ports, .. } => ports.clone(),
            _ => Default::default(),
        };
        let abs = std::env::current_dir()
            .map(|d| d.join(m))
            .unwrap_or_else(|_| m.clone());
        s.geometry = Geometry::MeshFile { path: abs, ports };
    }
    Ok(s)
}

fn base_dir(path: &Path) -> &Path {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
}

fn run(
    path: &Path,
    out: Option<PathBuf>,
    mode: Option<SolveMode>,
    mesh: Option<PathBuf>,
) -> Result<(), Failure> {
    let s = load(path, mesh.as_ref())?;
    let base = base_dir(path);
    scenario::validate(&s, base).map_err(Failure::Input)?;
    let (model, cases) = scenario::solve_scenario(&s, base, mode).map_err(Failure::Solve)?;
    let out = out.unwrap_or_else(|| PathBuf::from("out").join(&s.name));
    for case in &cases {
        let dir = case
            .label
            .as_ref()
            .map_or_else(|| out.clone(), |l| out.join(l));
        let files = scenario::write_case(&s, &model, case, &dir).map_err(Failure::Solve)?;
        let label = case.label.as_deref().unwrap_or(&s.name);
        eprintln!(
            "{label}: N = {}, N_f = {}, {:?} solve, residual {:.2e}, power balance {:.2e}",
            model.n(),
            model.grid.n_f(),
            case.solution.method,
            case.solution.residual,
            case.power.balance_residual_rel
        );
        for f in files {
            println!("{}", f.display());
        }
    }
    Ok(())
}

fn validate(path: &Path, mesh: Option<PathBuf>) -> Result<(), Failure> {
    let s = load(path, mesh.as_ref())?;
    let model = scenario::validate(&s, base_dir(path)).map_err(Failure::Input)?;
    println!(
        "{}: ok ({} triangles, {} basis functions, {} harmonics, {} case(s))",
        s.name,
        model.basis.mesh().triangles().len(),
        model.n(),
        model.grid.n_f(),
        s.variants.len().max(1)
    );
    Ok(())
}

struct BenchOverrides {
    sizes: Option<Vec<usize>>,
    ratios: Option<Vec<f64>>,
    freqs: Option<Vec<usize>>,
    trials: Option<usize>,
}

fn bench(path: &Path, o: BenchOverrides, out: Option<PathBuf>) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| {
        Failure::Input(Error::Schema(format!(
            "cannot read {}: {e}",
            path.display()
        )))
    })?;
    let mut cfg: BenchConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(Error::Schema(format!("{}: {e}", path.display()))))?;
    cfg.sizes = o.sizes.unwrap_or(cfg.sizes);
    cfg.ratios = o.ratios.unwrap_or(cfg.ratios);
    cfg.freqs = o.freqs.unwrap_or(cfg.freqs);
    cfg.trials = o.trials.unwrap_or(cfg.trials);
    if cfg.sizes.is_empty() || cfg.ratios.is_empty() || cfg.freqs.is_empty() {
        return Err(Failure::Input(Error::Schema(
            "benchmark needs sizes, ratios and freqs".into(),
        )));
    }
    if let Some(f) = cfg.freqs.iter().find(|f| **f % 2 == 0) {
        return Err(Failure::Input(Error::Schema(format!(
            "comb length {f} must be odd"
        ))));
    }
    let rows = bench_compression(&cfg, |r| eprintln!("{}", r.csv())).map_err(Failure::Solve)?;
    let mut csv = String::from(BENCH_CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv += &r.csv();
        csv.push('\n');
    }
    match out {
        Some(p) => fs::write(&p, csv).map_err(|e| Failure::Solve(e.into()))?,
        None => std::io::stdout()
            .write_all(csv.as_bytes())
            .map_err(|e| Failure::Solve(e.into()))?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    exec::init_from_env();
    let result = match cli.command {
        Command::Run {
            scenario,
            out,
            mode,
            mesh,
        } => run(&scenario, out, mode, mesh),
        Command::Validate { scenario, mesh } => validate(&scenario, mesh),
        Command::Bench {
            config,
            sizes,
            ratios,
            freqs,
            trials,
            out,
        } => bench(
            &config,
            BenchOverrides {
                sizes,
                ratios,
                freqs,
                trials,
            },
            out,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
