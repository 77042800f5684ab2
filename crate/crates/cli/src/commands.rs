//! Argument parsing and the subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qvision_core::enhance::{AdaptiveParams, Enhancement, StretchLimits};
use qvision_core::eval::{render_csv, render_markdown, MetricRow, ReportFormat};
use qvision_core::ingest::{read_gray_png, write_gray_png, MinMaxModel};
use qvision_core::qkernel::kernel_gram;
use qvision_core::qboost::{QuboMode, ThresholdMode};
use qvision_core::reduce::pca_fit;

use crate::config::{DataConfig, Entanglement, ModelSpec, PcaConfig, RunConfig, SweepKind};
use crate::error::{CliError, CliResult};
use crate::pipeline;
use crate::recipes::Recipe;

#[derive(Debug, Parser)]
#[command(name = "qvision", version, about = "Defect classification pipelines over X-ray images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load or generate a dataset and print its class and series counts.
    Ingest(CommonArgs),
    /// Enhance one grayscale PNG.
    Enhance(EnhanceArgs),
    /// Fit PCA on the training split and write the model as JSON.
    Pca(OutputArgs),
    /// Quantum-kernel Gram matrix of the scaled training split.
    Kernel(KernelArgs),
    /// Train the first configured model and report its test metrics.
    Train(OutputArgs),
    /// Train and evaluate every configured model.
    Bench(BenchArgs),
    /// Regularisation, depth or inference-time sweep.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnhanceMethod {
    None,
    Stretch,
    Histeq,
    Adapthist,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Synthetic manifest (`.json`) or GDXray root directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Principal components kept; 0 disables PCA.
    #[arg(long)]
    pub pca: Option<usize>,
    #[arg(long, value_enum)]
    pub enhance: Option<EnhanceMethod>,
    /// Random under-sampling of the training split.
    #[arg(long)]
    pub rus: bool,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Models as `kind[:trees]`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<ModelSpec>,
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub qubo_mode: Option<QuboMode>,
    #[arg(long)]
    pub threshold: Option<ThresholdMode>,
    #[arg(long)]
    pub qsvm_reps: Option<usize>,
    /// Validate the configuration and exit without side effects.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<ReportFormat>,
    /// Fill the training and inference time columns.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EnhanceArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = EnhanceMethod::Histeq)]
    pub method: EnhanceMethod,
    #[arg(long, default_value_t = 2.0)]
    pub p_low: f64,
    #[arg(long, default_value_t = 98.0)]
    pub p_high: f64,
    /// Tile grid as `rows,cols`.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [8, 8])]
    pub tiles: Vec<usize>,
    /// Clip limit as a fraction of the tile size; 0 disables clipping.
    #[arg(long, default_value_t = 0.01)]
    pub clip_limit: f64,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Entanglement::Full)]
    pub entanglement: Entanglement,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub report: ReportArgs,
    #[arg(long, value_enum)]
    pub recipe: Option<Recipe>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub report: ReportArgs,
    #[arg(long, value_enum)]
    pub kind: Option<SweepKind>,
    /// Comma-separated values or `start:stop:step` (inclusive).
    #[arg(long = "grid")]
    pub grid: Option<String>,
    /// Grid values are fractions of the regularisation ceiling.
    #[arg(long)]
    pub relative: bool,
    #[arg(long = "depths", value_delimiter = ',')]
    pub depths: Vec<usize>,
    /// Selected-tree counts of the inference sweep.
    #[arg(long = "tree-counts", value_delimiter = ',')]
    pub tree_counts: Vec<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
}

/// `0:100:5` or `0,5,10`.
pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("bad grid '{text}'"));
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<CliResult<_>>()?;
        let (start, stop, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect());
    }
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

impl CommonArgs {
    /// Config file, then flags.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        self.apply(&mut cfg);
        Ok(cfg)
    }

    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(d) = &self.data {
            cfg.data = Some(DataConfig::from_path(d));
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        match self.pca {
            Some(0) => cfg.pca = None,
            Some(k) => cfg.pca = Some(PcaConfig { k }),
            None => {}
        }
        if let Some(m) = self.enhance {
            cfg.enhance = match m {
                EnhanceMethod::None => Enhancement::None,
                EnhanceMethod::Stretch => Enhancement::Stretch(StretchLimits::default()),
                EnhanceMethod::Histeq => Enhancement::Histeq,
                EnhanceMethod::Adapthist => Enhancement::Adapthist(AdaptiveParams::default()),
            };
        }
        cfg.split.rus |= self.rus;
        if let Some(f) = self.test_fraction {
            cfg.split.test_fraction = f;
        }
        if !self.models.is_empty() {
            cfg.model.models = self.models.clone();
        }
        if let Some(t) = self.trees {
            cfg.model.trees = t;
            cfg.model.models.iter_mut().for_each(|s| {
                if s.kind.uses_trees() {
                    s.trees.get_or_insert(t);
                }
            });
        }
        if let Some(d) = self.depth {
            cfg.model.depth = d;
        }
        if let Some(l) = self.lambda {
            cfg.model.lambda = l;
        }
        if let Some(m) = self.qubo_mode {
            cfg.model.qubo_mode = m;
        }
        if let Some(t) = self.threshold {
            cfg.model.threshold = t;
        }
        if let Some(r) = self.qsvm_reps {
            cfg.model.qsvm_reps = r;
        }
    }
}

impl ReportArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(r) = &self.report {
            cfg.output.report = Some(r.clone());
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        cfg.output.timings |= self.timings;
    }
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&a, out),
        Command::Enhance(a) => cmd_enhance(&a, out),
        Command::Pca(a) => cmd_pca(&a, out),
        Command::Kernel(a) => cmd_kernel(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
    }
}

fn say(out: &mut dyn Write, text: impl AsRef<str>) -> CliResult<()> {
    writeln!(out, "{}", text.as_ref()).map_err(|e| CliError::Output {
        path: PathBuf::from("<stdout>"),
        source: e,
    })
}

/// Validates and reports whether the command should stop here.
fn checked(cfg: &RunConfig, dry_run: bool, out: &mut dyn Write) -> CliResult<bool> {
    cfg.validate()?;
    if dry_run {
        say(out, "configuration ok")?;
    }
    Ok(dry_run)
}

pub fn cmd_ingest(args: &CommonArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = args.resolve()?;
    cfg.data()?.validate()?;
    if args.dry_run {
        return say(out, "configuration ok");
    }
    let ds = pipeline::load_dataset(cfg.data()?)?;
    say(out, format!("{} samples, {} positive", ds.len(), ds.count_positive()))?;
    for (series, (total, pos)) in ds.series_counts() {
        say(out, format!("{series}: {total} samples, {pos} positive"))?;
    }
    Ok(())
}

pub fn cmd_enhance(args: &EnhanceArgs, out: &mut dyn Write) -> CliResult<()> {
    let enhancement = match args.method {
        EnhanceMethod::None => Enhancement::None,
        EnhanceMethod::Stretch => Enhancement::Stretch(StretchLimits::new(args.p_low, args.p_high, 0, 255)?),
        EnhanceMethod::Histeq => Enhancement::Histeq,
        EnhanceMethod::Adapthist => Enhancement::Adapthist(AdaptiveParams {
            tiles: (args.tiles[0], args.tiles[1]),
            clip_limit: (args.clip_limit > 0.0).then_some(args.clip_limit),
            ..AdaptiveParams::default()
        }),
    };
    let image = read_gray_png(&args.input)?;
    let enhanced = enhancement.apply(&image)?;
    write_gray_png(&enhanced, &args.output)?;
    say(
        out,
        format!("{}x{} image written to {}", enhanced.width(), enhanced.height(), args.output.display()),
    )
}

pub fn cmd_pca(args: &OutputArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = args.common.resolve()?;
    let k = cfg.pca.map_or(10, |p| p.k);
    cfg.pca = None;
    if checked(&cfg, args.common.dry_run, out)? {
        return Ok(());
    }
    let data = pipeline::prepare(&cfg)?;
    let model = pca_fit(&data.x_train, k)?;
    let total: f64 = data.x_train.total_variance();
    let kept: f64 = model.eigenvalues.iter().sum();
    say(
        out,
        format!(
            "{k} components of {} features, {:.2}% of the training variance",
            model.n_features,
            100.0 * kept / total
        ),
    )?;
    if let Some(path) = &args.output {
        model.save(path)?;
    }
    Ok(())
}

pub fn cmd_kernel(args: &KernelArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = args.common.resolve()?;
    cfg.model.qsvm_entanglement = args.entanglement;
    cfg.model.models = vec![ModelSpec::new(crate::config::ModelKind::Qsvm)];
    if checked(&cfg, args.common.dry_run, out)? {
        return Ok(());
    }
    let data = pipeline::prepare(&cfg)?;
    let x = MinMaxModel::fit(&data.x_train, 0.0, std::f64::consts::PI)?.apply(&data.x_train)?;
    let spec = pipeline::qsvm_spec(&cfg, x.cols());
    let gram = kernel_gram(&x, &spec)?;
    gram.write(&args.output)?;
    say(
        out,
        format!("{0}x{0} kernel over {1} qubits written to {2}", gram.rows(), spec.n, args.output.display()),
    )
}

pub fn cmd_train(args: &OutputArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = args.common.resolve()?;
    if checked(&cfg, args.common.dry_run, out)? {
        return Ok(());
    }
    let data = pipeline::prepare(&cfg)?;
    let spec = cfg.model.models[0];
    let trained = pipeline::train_model(&cfg, &spec, &data)?;
    let row = pipeline::evaluate(&cfg, &trained, &data)?;
    say(out, render_markdown(&[row])?)?;
    if let Some(path) = &args.output {
        trained.save(path)?;
    }
    Ok(())
}

/// Resolved configuration of a bench invocation.
pub fn bench_config(args: &BenchArgs) -> CliResult<RunConfig> {
    let mut cfg = args.common.resolve()?;
    if let Some(r) = args.recipe {
        r.apply(&mut cfg);
        args.common.apply(&mut cfg);
    }
    args.report.apply(&mut cfg);
    Ok(cfg)
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = bench_config(args)?;
    if checked(&cfg, args.common.dry_run, out)? {
        return Ok(());
    }
    let rows = match args.recipe {
        Some(r) if r.is_sweep() => pipeline::sweep(&cfg)?,
        _ => pipeline::bench(&cfg)?,
    };
    emit(&cfg, &rows, out)
}

pub fn sweep_config(args: &SweepArgs) -> CliResult<RunConfig> {
    let mut cfg = args.common.resolve()?;
    args.report.apply(&mut cfg);
    if let Some(k) = args.kind {
        cfg.sweep.kind = k;
    }
    if let Some(g) = &args.grid {
        cfg.sweep.lambda = parse_grid(g)?;
        if cfg.sweep.lambda.is_empty() {
            return Err(qvision_core::Error::Config("regularisation grid is empty".into()).into());
        }
    }
    cfg.sweep.relative |= args.relative;
    if !args.depths.is_empty() {
        cfg.sweep.depth = args.depths.clone();
    }
    if !args.tree_counts.is_empty() {
        cfg.sweep.trees = args.tree_counts.clone();
    }
    if let Some(r) = args.repetitions {
        cfg.sweep.repetitions = r;
    }
    Ok(cfg)
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = sweep_config(args)?;
    if checked(&cfg, args.common.dry_run, out)? {
        return Ok(());
    }
    let rows = pipeline::sweep(&cfg)?;
    emit(&cfg, &rows, out)
}

fn emit(cfg: &RunConfig, rows: &[MetricRow], out: &mut dyn Write) -> CliResult<()> {
    let text = match cfg.output.format {
        ReportFormat::Csv => render_csv(rows)?,
        ReportFormat::Markdown => render_markdown(rows)?,
    };
    match &cfg.output.report {
        Some(path) => {
            write_file(path, &text)?;
            say(out, format!("{} rows written to {}", rows.len(), path.display()))
        }
        None => say(out, text.trim_end()),
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0:10:5").unwrap(), vec![0.0, 5.0, 10.0]);
        assert_eq!(parse_grid("0:100:5").unwrap().len(), 21);
        assert_eq!(parse_grid("0:1:0.05").unwrap()[3], 0.15);
        assert_eq!(parse_grid("1, 2.5").unwrap(), vec![1.0, 2.5]);
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"seed": 5, "pca": {"k": 4}, "model": {"lambda": 0.5}}"#).unwrap();
        let args = CommonArgs {
            config: Some(path),
            seed: Some(9),
            pca: Some(0),
            ..CommonArgs::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!((cfg.seed, cfg.pca, cfg.model.lambda), (9, None, 0.5));
    }
}
