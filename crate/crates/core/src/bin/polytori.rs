use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use polytori::pipeline::{run_stages, write_outputs, Config, PipelineError, Stage};
use polytori::study::convergence_study;

#[derive(Parser)]
#[command(name = "polytori", version, about = "Piecewise-linear isotropic tori in R^2n")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the smooth map and report its symplectic density.
    Sample(Common),
    /// Project the samples onto isotropic meshes.
    Solve(Common),
    /// Refine the projected mesh with optimal apexes.
    Refine(Common),
    /// Run the whole pipeline and write report and meshes.
    Build(Common),
    /// Run the whole pipeline and fail unless every certificate holds.
    Verify(Common),
    /// Run the whole pipeline and write only the meshes.
    Export(Common),
    /// Convergence study over a list of N.
    Study {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subdivision counts, overriding `study.n_list`.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in map name.
    #[arg(long)]
    spec: Option<String>,
    /// Subdivision count.
    #[arg(long)]
    n: Option<usize>,
    /// Solver tolerance on the density.
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also run the embedding check.
    #[arg(long)]
    embedding_check: bool,
    /// Seed for sampled seminorms.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn config(&self) -> Result<Config, PipelineError> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(s) = &self.spec {
            cfg.spec = s.clone();
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(t) = self.tol {
            cfg.solver.tol = t;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = Some(o.clone());
        }
        if self.embedding_check {
            cfg.certify.embedding_check = true;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

const CERTIFICATION_FAILURE: u8 = 4;

fn main() -> ExitCode {
    let defaults = toml::to_string(&Config::default()).expect("defaults serialize");
    let matches = Cli::command()
        .after_help(format!("Configuration defaults:\n\n{defaults}"))
        .get_matches();
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<u8, PipelineError> {
    let (common, last, mesh_only, require_cert) = match &command {
        Command::Sample(c) => (c, Stage::Sample, false, false),
        Command::Solve(c) => (c, Stage::Solve, false, false),
        Command::Refine(c) => (c, Stage::Refine, false, false),
        Command::Build(c) => (c, Stage::Certify, false, true),
        Command::Verify(c) => (c, Stage::Certify, false, true),
        Command::Export(c) => (c, Stage::Certify, true, false),
        Command::Study { common, n_list } => {
            let cfg = common.config()?;
            let list = n_list.clone().unwrap_or_else(|| cfg.study.n_list.clone());
            if list.len() < 3 {
                return Err(PipelineError::Config("a study needs at least three values of N".into()));
            }
            let table = convergence_study(&cfg, &list)?;
            let csv = table.to_csv();
            match &cfg.output.dir {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join("study.csv"), &csv)?;
                }
                None => print!("{csv}"),
            }
            return Ok(if table.all_succeeded() { 0 } else { 3 });
        }
    };
    let cfg = common.config()?;
    if mesh_only && cfg.output.dir.is_none() {
        return Err(PipelineError::Config("export needs --out or output.dir".into()));
    }
    let art = run_stages(&cfg, cfg.n, last)?;
    if mesh_only {
        let dir = cfg.output.dir.as_ref().expect("checked above");
        std::fs::create_dir_all(dir)?;
        let map = art.map.as_ref().expect("certify stage builds the map");
        polytori::plmap::export_mesh(map, &dir.join("mesh.symmesh"), cfg.output.projection)?;
    } else if cfg.output.dir.is_some() {
        for p in write_outputs(&cfg, &art)? {
            eprintln!("wrote {}", p.display());
        }
    } else {
        println!("{}", art.report.to_json());
    }
    if require_cert && art.report.certified() == Some(false) {
        eprintln!("certification failed");
        return Ok(CERTIFICATION_FAILURE);
    }
    Ok(0)
}
