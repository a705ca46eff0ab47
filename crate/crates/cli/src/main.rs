use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use surfml::metric_learning::ObjectiveKind;

mod commands;
mod config;
mod data;

use config::PipelineConfig;

/// Distance metric learning on surfaces: embedding, learning, clustering and
/// evaluation from the command line.
#[derive(Parser, Debug)]
#[command(name = "surfml", version)]
struct Cli {
    /// JSON configuration file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Surface registry key, e.g. `hyperboloid:2`, `euclidean:3`, `helicoid`.
    #[arg(long, global = true)]
    surface: Option<String>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Embed a graph or dissimilarity matrix onto the surface.
    Embed {
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Learn a linear transform of the base space.
    Learn {
        /// Labelled point table; `--dataset` is accepted as an alias.
        #[arg(long, alias = "dataset")]
        points: Option<String>,
        #[arg(long)]
        objective: Option<ObjectiveKind>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Generalized k-means on surface distances.
    Cluster {
        #[arg(long, alias = "dataset")]
        points: Option<String>,
        #[arg(long)]
        transform: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        /// Cluster on squared distances.
        #[arg(long)]
        squared: bool,
    },
    /// kNN classification error over stratified splits.
    Knn {
        /// Graph source: embeds on Euclidean and hyperbolic space and prints the four-column table.
        #[arg(long, conflicts_with = "points")]
        dataset: Option<String>,
        /// Point table: evaluates on `--surface` with and without a learned transform.
        #[arg(long)]
        points: Option<String>,
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        #[arg(long)]
        splits: Option<usize>,
        #[arg(long)]
        test_frac: Option<f64>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        objective: Option<ObjectiveKind>,
    },
    /// Approximate a geodesic, or sweep the approximation ratio over waypoint counts.
    Geodesic {
        /// Base coordinates of the start, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required_unless_present = "sweep")]
        x: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required_unless_present = "sweep")]
        y: Option<Vec<f64>>,
        #[arg(long, conflicts_with_all = ["x", "y"])]
        sweep: bool,
        #[arg(long, value_delimiter = ',')]
        n_values: Option<Vec<usize>>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        n_intermediate: Option<usize>,
        #[arg(long)]
        n_samples: Option<usize>,
    },
    /// Generalization gap of the learned transform against sample size.
    GapCurve {
        #[arg(long, value_delimiter = ',')]
        m_values: Option<Vec<usize>>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
    },
}

/// A failed run, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<surfml::Error> for Failure {
    fn from(e: surfml::Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn resolve(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let mut c = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(s) = &cli.surface {
        c.surface = s.clone();
    }
    if let Some(d) = &cli.out_dir {
        c.out_dir = d.clone();
    }
    if cli.threads.is_some() {
        c.threads = cli.threads;
    }
    match &cli.command {
        Command::Embed { dataset, tau, max_iters } => {
            c.dataset = dataset.clone().or(c.dataset);
            c.mds.tau = tau.unwrap_or(c.mds.tau);
            c.mds.optimizer.max_iters = max_iters.unwrap_or(c.mds.optimizer.max_iters);
        }
        Command::Learn { points, objective, lambda, max_iters } => {
            c.points = points.clone().or(c.points);
            c.objective = objective.unwrap_or(c.objective);
            c.optimizer.lambda = lambda.unwrap_or(c.optimizer.lambda);
            c.optimizer.max_iters = max_iters.unwrap_or(c.optimizer.max_iters);
        }
        Command::Cluster { points, transform, k, restarts, squared } => {
            c.points = points.clone().or(c.points);
            c.transform = transform.clone().or(c.transform);
            c.kmeans.k = k.unwrap_or(c.kmeans.k);
            c.kmeans.restarts = restarts.unwrap_or(c.kmeans.restarts);
            c.kmeans.squared |= squared;
        }
        Command::Knn { dataset, points, k, splits, test_frac, dim, tau, objective } => {
            if dataset.is_some() {
                c.points = None;
            }
            if points.is_some() {
                c.dataset = None;
            }
            c.dataset = dataset.clone().or(c.dataset);
            c.points = points.clone().or(c.points);
            c.knn.ks = k.clone().unwrap_or(c.knn.ks);
            c.knn.n_splits = splits.unwrap_or(c.knn.n_splits);
            c.knn.test_frac = test_frac.unwrap_or(c.knn.test_frac);
            c.knn.dim = dim.unwrap_or(c.knn.dim);
            c.mds.tau = tau.unwrap_or(c.mds.tau);
            c.objective = objective.unwrap_or(c.objective);
        }
        Command::Geodesic { n_values, pairs, radius, n_intermediate, n_samples, .. } => {
            c.sweep.n_values = n_values.clone().unwrap_or(c.sweep.n_values);
            c.sweep.pairs = pairs.unwrap_or(c.sweep.pairs);
            c.sweep.radius = radius.unwrap_or(c.sweep.radius);
            c.geodesic.n_intermediate = n_intermediate.unwrap_or(c.geodesic.n_intermediate);
            c.geodesic.n_samples = n_samples.unwrap_or(c.geodesic.n_samples);
        }
        Command::GapCurve { m_values, trials, lambda } => {
            c.gap.m_values = m_values.clone().unwrap_or(c.gap.m_values);
            c.gap.n_trials = trials.unwrap_or(c.gap.n_trials);
            if let Some(l) = lambda {
                c.gap.loss = surfml::eval::PairLoss::Contrastive { lambda: *l };
            }
        }
    }
    c.propagate_seed();
    c.validate()?;
    Ok(c)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = resolve(&cli)?;
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Input(format!("cannot start {n} threads: {e}")))?;
    }
    match cli.command {
        Command::Embed { .. } => commands::embed(&config),
        Command::Learn { .. } => commands::learn(&config),
        Command::Cluster { .. } => commands::cluster(&config),
        Command::Knn { .. } => commands::knn(&config),
        Command::Geodesic { x, y, sweep, .. } => {
            if sweep {
                commands::ratio_sweep(&config)
            } else {
                commands::geodesic(&config, &x.unwrap_or_default(), &y.unwrap_or_default())
            }
        }
        Command::GapCurve { .. } => commands::gap_curve(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
