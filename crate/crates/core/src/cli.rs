//! The `statbench` command line: one subcommand per experiment.
//!
//! Exit status 0 on success, 1 for domain errors, 2 for usage errors and 3
//! for I/O failures, including malformed input files. Every subcommand
//! writes its files into `--out-dir` and prints one `key=value` summary
//! line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::em::{EmConfig, EmError, EmInit};
use crate::io::{self, fmt_f64, IoError};
use crate::net::{self, build_route_matrix, estimate_rates, simulate_traffic, NetError};
use crate::ocr::{self, run_benchmark, synthetic_split, Jitter, OcrError, TangentConfig};
use crate::pet::{
    build_system_matrix, make_phantom, normalized_rmse, reconstruct_pet, shepp_logan,
    simulate_sinogram, DetectorGeometry, PetError, Weighting,
};
use crate::renewal::{
    self, bias_sim, residual_cdf, scaling_defect, solve_cq, Family, GridCdf, RenewalError,
    SampleMode, ScalingReport, SolveConfig, CONVERGED_DEFECT,
};
use crate::rng::{Stream, DEFAULT_SEED};

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(
    name = "statbench",
    version,
    about = "Seeded experiments: EM tomography, network traffic, tangent-distance OCR, residual lifetimes",
    after_help = "Run `statbench <COMMAND> --help` for every key of a subcommand, with units and defaults."
)]
pub struct RunConfig {
    /// Seed for every random stream of the run
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Directory receiving all output files (created if missing)
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Rasterize a phantom, build the system matrix and sample a Poisson sinogram
    PetSimulate(PetSimulate),
    /// EM reconstruction of a sinogram
    PetReconstruct(PetReconstruct),
    /// Simulate per-epoch link counts from Poisson route traffic
    NettomoSimulate(NettomoSimulate),
    /// Estimate route rates from link counts
    NettomoEstimate(NettomoEstimate),
    /// Generate a synthetic labelled digit corpus
    OcrGen(OcrGen),
    /// Tangent-distance vs plain L2 nearest-neighbour benchmark
    OcrBench(OcrBench),
    /// Build a member of the scaling class C_q by fixed-point iteration
    RenewalSolve(RenewalSolve),
    /// Scaling defect of a given cdf
    RenewalCheck(RenewalCheck),
    /// Plain vs length-biased lifetime sampling
    RenewalBias(RenewalBias),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    /// Chord length of each bin's central ray
    Line,
    /// Pixel area inside the detector strip
    Strip,
}

impl From<WeightingArg> for Weighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Line => Weighting::LineLength,
            WeightingArg::Strip => Weighting::StripArea,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ImageGrid {
    /// Image width (pixels)
    #[arg(long, default_value_t = 32)]
    pub width: usize,
    /// Image height (pixels)
    #[arg(long, default_value_t = 32)]
    pub height: usize,
    /// Pixel edge length (length units)
    #[arg(long, default_value_t = 1.0)]
    pub pixel_size: f64,
    /// System-matrix weighting
    #[arg(long, value_enum, default_value_t = WeightingArg::Line)]
    pub weighting: WeightingArg,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct EmArgs {
    /// EM iteration cap (iterations)
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Stop when the log-likelihood gain is at most this fraction of |log-likelihood|
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

impl EmArgs {
    fn config(&self) -> EmConfig {
        EmConfig {
            max_iters: self.max_iters,
            rel_ll_tol: self.tol,
            init: EmInit::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct PetSimulate {
    #[command(flatten)]
    pub grid: ImageGrid,
    /// Projection angles over [0, π) (count)
    #[arg(long, default_value_t = 48)]
    pub angles: usize,
    /// Detector bins per angle (count)
    #[arg(long, default_value_t = 48)]
    pub bins: usize,
    /// Ellipse CSV `cx,cy,a,b,theta,intensity` in normalized coordinates; Shepp-Logan if absent
    #[arg(long)]
    pub ellipses: Option<PathBuf>,
    /// Expected total counts over all detectors (counts); the phantom is rescaled to match
    #[arg(long, default_value_t = 1e6)]
    pub total_counts: f64,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct PetReconstruct {
    #[command(flatten)]
    pub grid: ImageGrid,
    /// Sinogram CSV `angle,bin,count` [default: <out-dir>/sinogram.csv]
    #[arg(long)]
    pub sinogram: Option<PathBuf>,
    /// System-matrix file; rebuilt from the grid keys if absent
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// True image as a vector file; adds `nrmse` to the summary
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub em: EmArgs,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct NettomoSimulate {
    /// Graph file; the built-in 4-node path fixture if absent
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Origin-destination CSV; the fixture's routes if absent
    #[arg(long)]
    pub od: Option<PathBuf>,
    /// Route rates, comma separated (traffic per epoch)
    #[arg(long, value_delimiter = ',', default_value = "2,5,9")]
    pub rates: Vec<f64>,
    /// Measurement epochs (count)
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct NettomoEstimate {
    /// Graph file [default: <out-dir>/graph.txt]
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Origin-destination CSV [default: <out-dir>/od.csv]
    #[arg(long)]
    pub od: Option<PathBuf>,
    /// Link counts CSV [default: <out-dir>/counts.csv]
    #[arg(long)]
    pub counts: Option<PathBuf>,
    #[command(flatten)]
    pub em: EmArgs,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct JitterArgs {
    /// Maximum rotation (degrees)
    #[arg(long, default_value_t = 10.0)]
    pub rotation: f64,
    /// Maximum shift per axis (pixels)
    #[arg(long, default_value_t = 2.0)]
    pub shift: f64,
    /// Maximum thickening strength (unitless, 0 to 1)
    #[arg(long, default_value_t = 0.2)]
    pub thicken: f64,
    /// Writer-style variation: slant, size and stroke wobble (unitless, 0 to 4)
    #[arg(long, default_value_t = 1.0)]
    pub style: f64,
}

impl JitterArgs {
    fn jitter(&self) -> Jitter {
        Jitter {
            rotation_deg: self.rotation,
            shift_px: self.shift,
            thicken: self.thicken,
            style: self.style,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorpusFormat {
    /// `corpus.csv` with `label,p0..p255`
    Csv,
    /// `glyphs/*.pgm` 8-bit images plus `glyphs/labels.csv`
    Pgm,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct OcrGen {
    /// Items per digit class (count)
    #[arg(long, default_value_t = 100)]
    pub n_per_class: usize,
    #[command(flatten)]
    pub jitter: JitterArgs,
    /// Output format
    #[arg(long, value_enum, default_value_t = CorpusFormat::Csv)]
    pub format: CorpusFormat,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct OcrBench {
    /// Synthetic training items (count); ignored with --train
    #[arg(long, default_value_t = 5000)]
    pub n_train: usize,
    /// Synthetic test items (count); ignored with --test
    #[arg(long, default_value_t = 1000)]
    pub n_test: usize,
    /// Training corpus: a `label,p0..p255` CSV or a `file,label` CSV of PGM glyphs
    #[arg(long, requires = "test")]
    pub train: Option<PathBuf>,
    /// Test corpus, same formats as --train
    #[arg(long, requires = "train")]
    pub test: Option<PathBuf>,
    #[command(flatten)]
    pub jitter: JitterArgs,
    /// Tangent step for thicken, rotation (radians), scale and shears (unitless)
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Tangent step for translations (pixels)
    #[arg(long, default_value_t = 1.0)]
    pub translate_px: f64,
    /// Record wall-clock times in the report (otherwise wall_ms is 0 so reruns match byte for byte)
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct CdfGrid {
    /// Grid extent (lifetime units)
    #[arg(long, default_value_t = renewal::DEFAULT_X_MAX)]
    pub x_max: f64,
    /// Grid cells (count)
    #[arg(long, default_value_t = renewal::DEFAULT_N)]
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RenewalSolve {
    /// Scale factor q of the class C_q (unitless, 0 < q <= 1)
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    /// Initial cdf: exp[:rate], uniform[:b], weibull[:k], lognormal[:sigma], point[:a[:width]]
    #[arg(long, default_value = "exp:1")]
    pub init: Family,
    #[command(flatten)]
    pub grid: CdfGrid,
    /// Damping of each sweep (unitless, 0 < d <= 1)
    #[arg(long, default_value_t = 0.5)]
    pub damping: f64,
    /// Iteration cap (iterations)
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RenewalCheck {
    /// Scale factor q (unitless, > 0)
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Distribution, same syntax as renewal-solve --init; ignored with --cdf
    #[arg(long, default_value = "exp:1")]
    pub dist: Family,
    /// GridCdf CSV to check instead of --dist
    #[arg(long)]
    pub cdf: Option<PathBuf>,
    #[command(flatten)]
    pub grid: CdfGrid,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RenewalBias {
    /// Lifetime distribution, same syntax as renewal-solve --init
    #[arg(long, default_value = "exp:1")]
    pub dist: Family,
    /// Samples per mode (count)
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[command(flatten)]
    pub grid: CdfGrid,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Em(#[from] EmError),
    #[error(transparent)]
    Pet(#[from] PetError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Ocr(#[from] OcrError),
    #[error(transparent)]
    Renewal(#[from] RenewalError),
    #[error("{0}")]
    Domain(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io(_) => 3,
            _ => 1,
        }
    }
}

/// Parses `argv` (program name first). `Err` carries clap's message, which
/// also covers `--help` and `--version`.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    RunConfig::try_parse_from(argv)
}

/// Runs the parsed command and returns its summary line.
pub fn run(cfg: &RunConfig) -> Result<String, RunError> {
    fs::create_dir_all(&cfg.out_dir).map_err(|source| IoError::Io {
        path: cfg.out_dir.clone(),
        source,
    })?;
    let out = cfg.out_dir.as_path();
    let summary = match &cfg.command {
        Command::PetSimulate(a) => pet_simulate(a, out, cfg.seed)?,
        Command::PetReconstruct(a) => pet_reconstruct(a, out)?,
        Command::NettomoSimulate(a) => nettomo_simulate(a, out, cfg.seed)?,
        Command::NettomoEstimate(a) => nettomo_estimate(a, out)?,
        Command::OcrGen(a) => ocr_gen(a, out, cfg.seed)?,
        Command::OcrBench(a) => ocr_bench(a, out, cfg.seed)?,
        Command::RenewalSolve(a) => renewal_solve(a, out)?,
        Command::RenewalCheck(a) => renewal_check(a, out)?,
        Command::RenewalBias(a) => renewal_bias(a, out, cfg.seed)?,
    };
    Ok(summary
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" "))
}

/// Full entry point: parse, run, print, and return the exit status.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_args(argv) {
        Ok(cfg) => cfg,
        Err(e) => {
            // help and version go to stdout with status 0
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cfg) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

type Summary = Vec<(&'static str, String)>;

fn or_default(path: &Option<PathBuf>, out: &Path, name: &str) -> PathBuf {
    path.clone().unwrap_or_else(|| out.join(name))
}

fn pet_simulate(a: &PetSimulate, out: &Path, seed: u64) -> Result<Summary, RunError> {
    let g = &a.grid;
    let geom = DetectorGeometry::new(a.angles, a.bins).with_weighting(g.weighting.into());
    let matrix = build_system_matrix(&geom, g.width, g.height, g.pixel_size)?;
    let ellipses = match &a.ellipses {
        Some(p) => io::read_ellipses(p)?,
        None => shepp_logan(),
    };
    let phantom = make_phantom(&ellipses, g.width, g.height)?.with_pixel_size(g.pixel_size);
    if !(a.total_counts.is_finite() && a.total_counts > 0.0) {
        return Err(RunError::Domain(format!(
            "total counts must be positive, got {}",
            a.total_counts
        )));
    }
    let raw: f64 = matrix.forward(&phantom.grid)?.iter().sum();
    if raw <= 0.0 {
        return Err(RunError::Domain(
            "phantom has no emission inside the field of view".into(),
        ));
    }
    let phantom = phantom.scaled(a.total_counts / raw);
    let sino = simulate_sinogram(&phantom, &geom, &matrix, seed)?;

    io::write_scaled_image(&out.join("phantom.pgm"), g.width, g.height, &phantom.grid)?;
    io::write_vector(&out.join("phantom.txt"), &phantom.grid)?;
    io::write_ellipses(&out.join("ellipses.csv"), &phantom.ellipses)?;
    io::write_sinogram(&out.join("sinogram.csv"), &sino)?;
    io::write_vector(
        &out.join("expected.txt"),
        sino.expected.as_deref().unwrap_or_default(),
    )?;
    io::write_matrix(&out.join("system_matrix.txt"), &matrix)?;
    Ok(vec![
        ("detectors", geom.n_detectors().to_string()),
        ("pixels", (g.width * g.height).to_string()),
        ("nnz", matrix.nnz().to_string()),
        ("total_counts", sino.total().to_string()),
    ])
}

fn pet_reconstruct(a: &PetReconstruct, out: &Path) -> Result<Summary, RunError> {
    let g = &a.grid;
    let sino = io::read_sinogram(&or_default(&a.sinogram, out, "sinogram.csv"))?;
    let matrix = match &a.matrix {
        Some(p) => io::read_matrix(p)?,
        None => {
            let geom = DetectorGeometry::new(sino.n_angles, sino.n_bins)
                .with_weighting(g.weighting.into());
            build_system_matrix(&geom, g.width, g.height, g.pixel_size)?
        }
    };
    if matrix.n_sources() != g.width * g.height {
        return Err(RunError::Domain(format!(
            "matrix has {} sources but the image is {}x{}",
            matrix.n_sources(),
            g.width,
            g.height
        )));
    }
    let outcome = reconstruct_pet(&sino, &matrix, &a.em.config())?;
    let est = outcome.estimate.as_slice();
    io::write_scaled_image(&out.join("recon.pgm"), g.width, g.height, est)?;
    io::write_vector(&out.join("recon.txt"), est)?;
    io::write_trace(&out.join("trace.csv"), &outcome.trace)?;
    let mut summary = vec![
        ("iterations", outcome.iterations.to_string()),
        ("converged", outcome.converged.to_string()),
        (
            "log_likelihood",
            fmt_f64(*outcome.trace.last().expect("trace has the initial point")),
        ),
    ];
    if let Some(p) = &a.truth {
        let truth = io::read_vector(p)?;
        if truth.len() != est.len() {
            return Err(RunError::Domain(format!(
                "truth has {} values, image has {}",
                truth.len(),
                est.len()
            )));
        }
        summary.push(("nrmse", fmt_f64(normalized_rmse(est, &truth))));
    }
    Ok(summary)
}

fn nettomo_simulate(a: &NettomoSimulate, out: &Path, seed: u64) -> Result<Summary, RunError> {
    let (fixture_graph, fixture_od) = net::four_node_fixture();
    let graph = match &a.graph {
        Some(p) => io::read_graph(p)?,
        None => fixture_graph,
    };
    let od = match &a.od {
        Some(p) => io::read_od(p)?,
        None => fixture_od,
    };
    let routes = build_route_matrix(&graph, &od)?;
    let rates = net::rates(a.rates.clone())?;
    let counts = simulate_traffic(&routes, &rates, a.epochs, seed)?;
    io::write_graph(&out.join("graph.txt"), &graph)?;
    io::write_od(&out.join("od.csv"), &od)?;
    io::write_counts(&out.join("counts.csv"), &counts)?;
    io::write_vector(&out.join("rates.txt"), rates.as_slice())?;
    Ok(vec![
        ("routes", routes.n_routes().to_string()),
        ("links", routes.n_links.to_string()),
        ("epochs", counts.n_epochs().to_string()),
        (
            "total_count",
            counts.totals().iter().sum::<u64>().to_string(),
        ),
    ])
}

fn nettomo_estimate(a: &NettomoEstimate, out: &Path) -> Result<Summary, RunError> {
    let graph = io::read_graph(&or_default(&a.graph, out, "graph.txt"))?;
    let od = io::read_od(&or_default(&a.od, out, "od.csv"))?;
    let counts = io::read_counts(&or_default(&a.counts, out, "counts.csv"))?;
    let routes = build_route_matrix(&graph, &od)?;
    let est = estimate_rates(&routes, &counts, &a.em.config())?;
    io::write_estimates(&out.join("estimates.csv"), &routes, &est.rates)?;
    io::write_trace(&out.join("trace.csv"), &est.outcome.trace)?;
    Ok(vec![
        ("iterations", est.outcome.iterations.to_string()),
        ("converged", est.outcome.converged.to_string()),
        (
            "log_likelihood",
            fmt_f64(
                *est.outcome
                    .trace
                    .last()
                    .expect("trace has the initial point"),
            ),
        ),
        (
            "rates",
            est.rates
                .iter()
                .map(|v| fmt_f64(*v))
                .collect::<Vec<_>>()
                .join(","),
        ),
    ])
}

fn ocr_gen(a: &OcrGen, out: &Path, seed: u64) -> Result<Summary, RunError> {
    let corpus = ocr::gen_synthetic_glyphs(a.n_per_class, &a.jitter.jitter(), seed)?;
    match a.format {
        CorpusFormat::Csv => io::write_corpus(&out.join("corpus.csv"), &corpus)?,
        CorpusFormat::Pgm => {
            let dir = out.join("glyphs");
            fs::create_dir_all(&dir).map_err(|source| IoError::Io {
                path: dir.clone(),
                source,
            })?;
            let mut labels = String::from("file,label\n");
            for (i, (img, label)) in corpus.iter().enumerate() {
                let name = format!("{i:06}.pgm");
                io::write_pgm8(&dir.join(&name), img)?;
                labels.push_str(&format!("{name},{label}\n"));
            }
            let path = dir.join("labels.csv");
            fs::write(&path, labels).map_err(|source| IoError::Io { path, source })?;
        }
    }
    Ok(vec![("items", corpus.len().to_string())])
}

fn read_any_corpus(path: &Path) -> Result<ocr::LabeledCorpus, IoError> {
    let first = fs::read_to_string(path)
        .map_err(|source| IoError::Io {
            path: path.to_path_buf(),
            source,
        })?
        .lines()
        .next()
        .unwrap_or_default()
        .trim()
        .to_string();
    if first == "file,label" {
        io::read_pgm_corpus(path)
    } else {
        io::read_corpus(path)
    }
}

fn ocr_bench(a: &OcrBench, out: &Path, seed: u64) -> Result<Summary, RunError> {
    let (train, test) = match (&a.train, &a.test) {
        (Some(tr), Some(te)) => (read_any_corpus(tr)?, read_any_corpus(te)?),
        _ => synthetic_split(a.n_train, a.n_test, &a.jitter.jitter(), seed)?,
    };
    let cfg = TangentConfig {
        epsilon: a.epsilon,
        translate_px: a.translate_px,
        ..TangentConfig::default()
    };
    let mut rows = run_benchmark(&train, &test, &cfg)?;
    if !a.timing {
        for r in &mut rows {
            r.wall_ms = 0;
        }
    }
    io::write_bench(&out.join("bench.csv"), &rows)?;
    let mut summary = vec![
        ("n_train", train.len().to_string()),
        ("n_test", test.len().to_string()),
    ];
    for r in &rows {
        let (errors, rate) = match r.method {
            ocr::Method::Tangent => ("tangent_errors", "tangent_error_rate"),
            ocr::Method::L2 => ("l2_errors", "l2_error_rate"),
        };
        summary.push((errors, r.errors.to_string()));
        summary.push((rate, fmt_f64(r.error_rate)));
    }
    Ok(summary)
}

fn solve_summary(f: &GridCdf, r: &ScalingReport) -> Summary {
    vec![
        ("q", fmt_f64(r.q)),
        ("defect", fmt_f64(r.defect)),
        ("iterations", r.iterations.to_string()),
        ("converged", r.converged.to_string()),
        ("mean", f.mean().map_or("inf".into(), fmt_f64)),
    ]
}

fn renewal_solve(a: &RenewalSolve, out: &Path) -> Result<Summary, RunError> {
    let init = a.init.grid(a.grid.x_max, a.grid.n)?;
    let cfg = SolveConfig {
        damping: a.damping,
        max_iters: a.max_iters,
    };
    match solve_cq(a.q, &init, &cfg) {
        Ok((f, report)) => {
            io::write_grid_cdf(&out.join("cdf.csv"), &f)?;
            io::write_reports(&out.join("report.csv"), &[report])?;
            Ok(solve_summary(&f, &report))
        }
        Err(RenewalError::NotConverged { best }) => {
            // keep the best iterate for inspection, then report the failure
            let (f, report) = &*best;
            io::write_grid_cdf(&out.join("cdf.csv"), f)?;
            io::write_reports(&out.join("report.csv"), &[*report])?;
            Err(RenewalError::NotConverged { best }.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn renewal_check(a: &RenewalCheck, out: &Path) -> Result<Summary, RunError> {
    let f = match &a.cdf {
        Some(p) => io::read_grid_cdf(p)?,
        None => a.dist.grid(a.grid.x_max, a.grid.n)?,
    };
    let defect = scaling_defect(&f, a.q)?;
    let g = residual_cdf(&f)?;
    io::write_grid_cdf(&out.join("residual.csv"), &g)?;
    io::write_reports(
        &out.join("report.csv"),
        &[ScalingReport {
            q: a.q,
            defect,
            iterations: 0,
            converged: defect <= CONVERGED_DEFECT,
        }],
    )?;
    Ok(vec![
        ("q", fmt_f64(a.q)),
        ("defect", fmt_f64(defect)),
        ("dx", fmt_f64(f.dx())),
        ("mean", fmt_f64(f.mean()?)),
    ])
}

fn renewal_bias(a: &RenewalBias, out: &Path, seed: u64) -> Result<Summary, RunError> {
    let f = a.dist.grid(a.grid.x_max, a.grid.n)?;
    let stats = [SampleMode::Plain, SampleMode::LengthBiased]
        .iter()
        .enumerate()
        .map(|(k, &mode)| {
            bias_sim(
                &f,
                a.samples,
                mode,
                Stream::substream(seed, k as u64).next_u64(),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    io::write_bias(&out.join("bias.csv"), &stats)?;
    Ok(vec![
        ("samples", a.samples.to_string()),
        ("mean", fmt_f64(f.mean()?)),
        ("plain_mean", fmt_f64(stats[0].mean)),
        ("biased_mean", fmt_f64(stats[1].mean)),
    ])
}
