use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use jtvsp::experiments::{self, DataSource, ExperimentConfig, ResultsTable};
use jtvsp::graph::{build_gaussian_radius_graph, calibrate_kernel_scale, EDGE_WEIGHT_CUTOFF};
use jtvsp::io::{self, Readings, StoredGraph};
use jtvsp::psd::{default_window, estimate_jpsd, Jpsd, MeanHandling};
use jtvsp::stationarity::{synthesize_jwss, JwssModel, NoiseKind};
use jtvsp::wiener::{joint_wiener_closed_form, wiener_solve_noiseless, MaskOperator, SolverConfig};
use jtvsp::{GraphSpectrum, JointBasis, TimeBasis, Window};

/// Joint time-vertex stationary signal processing on sensor networks.
#[derive(Parser)]
#[command(name = "jtvsp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Graph construction.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Power spectral density estimation.
    #[command(subcommand)]
    Psd(PsdCommand),
    /// Draw realizations of a jointly stationary process.
    Synth(SynthArgs),
    /// Wiener denoising of readings corrupted by white noise.
    Denoise(DenoiseArgs),
    /// Noiseless Wiener interpolation of missing readings (empty cells).
    Recover(RecoverArgs),
    /// Run a denoising or recovery experiment from a TOML config.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Gaussian-kernel radius graph on station coordinates.
    Build(GraphBuildArgs),
}

#[derive(Args)]
struct GraphBuildArgs {
    /// Coordinates CSV with header id,x,y[,z].
    #[arg(long)]
    coords: PathBuf,
    #[arg(long)]
    radius: f64,
    /// Average degree the kernel scale is calibrated to.
    #[arg(long, default_value_t = 3.0)]
    target_degree: f64,
    /// Use this kernel scale instead of calibrating.
    #[arg(long)]
    kernel_scale: Option<f64>,
    /// Edge list CSV; the node file is written next to it as <stem>.nodes.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum PsdCommand {
    /// Welch-style JPSD estimate from one or more readings files.
    Estimate(PsdArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MeanArg {
    Remove,
    AssertCentered,
}

impl From<MeanArg> for MeanHandling {
    fn from(m: MeanArg) -> Self {
        match m {
            MeanArg::Remove => MeanHandling::Remove,
            MeanArg::AssertCentered => MeanHandling::AssertCentered,
        }
    }
}

#[derive(Args)]
struct PsdArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Readings CSV; repeat for several realizations.
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    /// Number of STFT bands (even); defaults to min(32, T).
    #[arg(long)]
    bands: Option<usize>,
    #[arg(long, value_enum, default_value = "remove")]
    mean: MeanArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Gaussian,
    Uniform,
    Rademacher,
}

impl From<NoiseArg> for NoiseKind {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Gaussian => NoiseKind::Gaussian,
            NoiseArg::Uniform => NoiseKind::Uniform,
            NoiseArg::Rademacher => NoiseKind::Rademacher,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    jpsd: PathBuf,
    /// Number of realizations.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Time steps per realization; defaults to the number of JPSD bands.
    #[arg(long)]
    steps: Option<usize>,
    /// Constant mean added to every entry.
    #[arg(long, default_value_t = 0.0)]
    mean: f64,
    #[arg(long, value_enum, default_value = "gaussian")]
    noise: NoiseArg,
    /// Output directory, one realization_<k>.csv per realization.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = SolverConfig::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = SolverConfig::default().max_iters)]
    max_iters: usize,
    #[arg(long, default_value_t = SolverConfig::default().f_max)]
    f_max: f64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iters: self.max_iters,
            f_max: self.f_max,
        }
    }
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    jpsd: PathBuf,
    /// Standard deviation of the white noise.
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    jpsd: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Protocol {
    Denoising,
    Recovery,
}

#[derive(Args)]
struct ExperimentArgs {
    protocol: Protocol,
    #[arg(long)]
    config: PathBuf,
    /// Long-form results CSV; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let convergence = e
                .chain()
                .filter_map(|c| c.downcast_ref::<jtvsp::Error>())
                .any(|c| c.is_convergence_failure());
            ExitCode::from(if convergence { 3 } else { 2 })
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Graph(GraphCommand::Build(a)) => graph_build(a),
        Command::Psd(PsdCommand::Estimate(a)) => psd_estimate(a),
        Command::Synth(a) => synth(a),
        Command::Denoise(a) => denoise(a),
        Command::Recover(a) => recover(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn graph_build(a: GraphBuildArgs) -> Result<()> {
    let c = io::read_coordinates(&a.coords)?;
    let scale = match a.kernel_scale {
        Some(k) => k,
        None => calibrate_kernel_scale(&c.coords, a.radius, a.target_degree)?,
    };
    let g = build_gaussian_radius_graph(&c.coords, a.radius, scale)?;
    io::write_graph(&a.out, &g, &c.ids)?;
    let degree = g.effective_average_degree();
    println!(
        "graph: {} vertices, {} edges ({} above the relative weight cutoff {EDGE_WEIGHT_CUTOFF:e}), kernel scale {scale:.6e}, effective average degree {degree:.3}",
        g.n_vertices(),
        g.edges().len(),
        (degree * g.n_vertices() as f64 / 2.0).round(),
    );
    Ok(())
}

fn load_graph(path: &Path) -> Result<(StoredGraph, GraphSpectrum)> {
    let g = io::read_graph(path).with_context(|| format!("reading graph {}", path.display()))?;
    let spectrum = g.graph.spectrum()?;
    Ok((g, spectrum))
}

/// Reorders readings rows to the graph's vertex order.
fn align(graph_ids: &[String], r: &Readings, path: &Path) -> Result<DMatrix<f64>> {
    if r.ids.len() != graph_ids.len() {
        bail!(
            "{}: {} stations but the graph has {} vertices",
            path.display(),
            r.ids.len(),
            graph_ids.len()
        );
    }
    let mut out = DMatrix::zeros(graph_ids.len(), r.values.ncols());
    for (i, id) in graph_ids.iter().enumerate() {
        let src = r
            .ids
            .iter()
            .position(|x| x == id)
            .ok_or_else(|| anyhow!("{}: station '{id}' of the graph is missing", path.display()))?;
        out.set_row(i, &r.values.row(src));
    }
    Ok(out)
}

fn read_aligned(graph: &StoredGraph, path: &Path) -> Result<(Readings, DMatrix<f64>)> {
    let r = io::read_readings(path)?;
    let x = align(&graph.ids, &r, path)?;
    Ok((r, x))
}

fn require_complete(x: &DMatrix<f64>, path: &Path) -> Result<()> {
    let missing = x.iter().filter(|v| v.is_nan()).count();
    if missing > 0 {
        bail!("{}: {missing} missing cells; this command needs complete data", path.display());
    }
    Ok(())
}

fn write_aligned(path: &Path, graph: &StoredGraph, times: &[String], x: DMatrix<f64>) -> Result<()> {
    io::write_readings(
        path,
        &Readings {
            ids: graph.ids.clone(),
            times: times.to_vec(),
            values: x,
        },
    )?;
    Ok(())
}

fn psd_estimate(a: PsdArgs) -> Result<()> {
    let (graph, spectrum) = load_graph(&a.graph)?;
    let mut signals = Vec::new();
    for p in &a.data {
        let (_, x) = read_aligned(&graph, p)?;
        require_complete(&x, p)?;
        signals.push(x);
    }
    let t = signals[0].ncols();
    let window = match a.bands {
        Some(m) => Window::iterated_sine(m)?,
        None => default_window(t)?,
    };
    if t % window.hop() != 0 {
        bail!("T = {t} is not a multiple of the window hop {}", window.hop());
    }
    let jpsd = estimate_jpsd(&signals, &spectrum, &window, a.mean.into())?;
    io::write_jpsd(&a.out, &jpsd)?;
    println!(
        "jpsd: {} graph frequencies x {} bands from {} realization(s) of {t} steps",
        jpsd.values().nrows(),
        jpsd.n_bands(),
        signals.len()
    );
    Ok(())
}

fn load_jpsd(path: &Path, spectrum: &GraphSpectrum) -> Result<Jpsd> {
    let jpsd = io::read_jpsd(path)?;
    let want = spectrum.eigenvalues();
    let got = jpsd.eigenvalues();
    if got.len() != want.len() {
        bail!(
            "{}: {} graph frequencies but the graph has {} vertices",
            path.display(),
            got.len(),
            want.len()
        );
    }
    let tol = 1e-6 * want.amax().max(1.0);
    if (got - want).amax() > tol {
        bail!("{}: eigenvalues do not match the graph", path.display());
    }
    Ok(jpsd)
}

fn synth(a: SynthArgs) -> Result<()> {
    let (graph, spectrum) = load_graph(&a.graph)?;
    let jpsd = load_jpsd(&a.jpsd, &spectrum)?;
    let t = a.steps.unwrap_or(jpsd.n_bands());
    let basis = JointBasis::new(spectrum, TimeBasis::laplacian(t)?);
    let model = JwssModel::new(a.mean, jpsd.upsample_to_grid(t)?)?;
    let xs = synthesize_jwss(&basis, &model, a.n, a.seed, a.noise.into())?;
    std::fs::create_dir_all(&a.out)?;
    let times: Vec<String> = (0..t).map(|k| k.to_string()).collect();
    for (k, x) in xs.into_iter().enumerate() {
        write_aligned(&a.out.join(format!("realization_{k:03}.csv")), &graph, &times, x)?;
    }
    println!("synth: {} realization(s) of {t} steps in {}", a.n, a.out.display());
    Ok(())
}

fn denoise(a: DenoiseArgs) -> Result<()> {
    if !(a.sigma >= 0.0) || !a.sigma.is_finite() {
        bail!("sigma must be a nonnegative number, got {}", a.sigma);
    }
    let (graph, spectrum) = load_graph(&a.graph)?;
    let jpsd = load_jpsd(&a.jpsd, &spectrum)?;
    let (r, y) = read_aligned(&graph, &a.data)?;
    require_complete(&y, &a.data)?;
    let (n, t) = y.shape();
    let basis = JointBasis::new(spectrum, TimeBasis::laplacian(t)?);
    let mean = y.mean();
    let hx = jpsd.upsample_to_grid(t)?;
    let hw = DMatrix::from_element(n, t, a.sigma * a.sigma);
    let ones = DMatrix::from_element(n, t, 1.0);
    let mut x = joint_wiener_closed_form(&basis, &ones, &hx, &hw, &y.add_scalar(-mean))?;
    x.add_scalar_mut(mean);
    write_aligned(&a.out, &graph, &r.times, x)?;
    println!("denoise: {n} x {t} signal written to {}", a.out.display());
    Ok(())
}

fn recover(a: RecoverArgs) -> Result<()> {
    let (graph, spectrum) = load_graph(&a.graph)?;
    let jpsd = load_jpsd(&a.jpsd, &spectrum)?;
    let (r, y) = read_aligned(&graph, &a.data)?;
    let (n, t) = y.shape();
    let mask = y.map(|v| !v.is_nan());
    let observed: Vec<f64> = y.iter().copied().filter(|v| !v.is_nan()).collect();
    if observed.is_empty() {
        bail!("{}: every cell is missing", a.data.display());
    }
    let missing = n * t - observed.len();
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    let basis = JointBasis::new(spectrum, TimeBasis::laplacian(t)?);
    let op = MaskOperator::new(mask)?;
    let centred = y.map(|v| if v.is_nan() { 0.0 } else { v - mean });
    let report = wiener_solve_noiseless(
        &basis,
        &op,
        &op.sample(&centred),
        &jpsd.upsample_to_grid(t)?,
        &a.solver.config(),
    )?;
    let mut x = report.solution;
    x.add_scalar_mut(mean);
    write_aligned(&a.out, &graph, &r.times, x)?;
    println!(
        "recover: filled {missing} of {} cells in {} iterations (constraint residual {:.2e})",
        n * t,
        report.iterations,
        report.residual
    );
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let cfg = ExperimentConfig::from_path(&a.config)?;
    let (dataset, graph) = match &cfg.data {
        DataSource::Files {
            coords,
            readings,
            radius,
            target_degree,
        } => {
            let (d, report) = experiments::ingest(coords, readings)?;
            for (id, missing) in &report.dropped {
                eprintln!("dropped station {id}: {missing} missing cells");
            }
            let g = d.build_graph(*radius, *target_degree)?;
            (d, g)
        }
        DataSource::Synthetic {
            n_vertices,
            n_steps,
            seed,
        } => {
            let s = experiments::synthetic_dataset(*n_vertices, *n_steps, *seed)?;
            (s.dataset, s.graph)
        }
    };
    let table = match a.protocol {
        Protocol::Denoising => experiments::run_denoising(&dataset, &graph, &cfg)?,
        Protocol::Recovery => experiments::run_recovery(&dataset, &graph, &cfg)?,
    };
    if let Some(out) = a.out.as_ref().or(cfg.output.as_ref()) {
        table.write_csv(out)?;
        eprintln!("results written to {}", out.display());
    }
    print_summary(&table);
    Ok(())
}

fn print_summary(table: &ResultsTable) {
    println!(
        "{:<8} {:>10} {:<15} {:>10} {:>9} {:>6} {:>10}",
        "method", "parameter", "metric", "mean", "std", "count", "infeasible"
    );
    for s in table.summary() {
        println!(
            "{:<8} {:>10.3} {:<15} {:>10.4} {:>9.4} {:>6} {:>10}",
            s.method, s.parameter, s.metric, s.mean, s.std, s.count, s.infeasible
        );
    }
}
