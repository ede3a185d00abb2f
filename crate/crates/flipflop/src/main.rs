use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use flipflop::config::Config;
use flipflop::error::{Error, Result};
use flipflop::experiment::{
    read_ialm_params, run_experiment, truncated_svd, write_records, ExperimentConfig, Kind, Method, ResultRecord,
    SvdSettings, TableFormat,
};
use flipflop::io::{self, dmat, dten, obs, svd_files};
use flipflop_core::generate::{gen_completion_instance, gen_rpca_instance, gen_sparse_tensor, gen_type1};
use flipflop_core::ialm::{held_out_error, ialm_mc, ialm_rpca, nmae, IalmParams, IterRecord, ObservationSet};
use flipflop_core::tucker::{st_hosvd, tucker_error};

#[derive(Parser)]
#[command(name = "flipflop", version, about = "Flip-Flop SRQR low-rank approximation toolkit")]
struct Cli {
    /// Seed for every random draw; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `key=value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Results table destination (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or tsv.
    #[arg(long, global = true, default_value = "csv")]
    format: TableFormat,
    /// Run independent benchmark cells concurrently (capped by SRQR_THREADS).
    #[arg(long, global = true)]
    parallel: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank-k approximate SVD of a matrix.
    Svd(SvdArgs),
    /// ST-HOSVD Tucker decomposition of a tensor.
    Tensor(TensorArgs),
    /// Robust PCA by IALM.
    Rpca(RpcaArgs),
    /// Matrix completion by IALM.
    Complete(CompleteArgs),
    /// Run an experiment described by the config and `--set` overrides.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SvdOpts {
    /// flipflop, rsisvd or exact.
    #[arg(long)]
    method: Option<Method>,
    /// Flip-flop factorization rank is `l = k + l_offset`.
    #[arg(long)]
    l_offset: Option<usize>,
    /// Sketch block size.
    #[arg(long)]
    b: Option<usize>,
    /// Oversampling.
    #[arg(long)]
    p: Option<usize>,
    /// RSISVD power iterations.
    #[arg(long)]
    q: Option<usize>,
    /// SRQR swap tolerance (> 1).
    #[arg(long)]
    g: Option<f64>,
    /// SRQR reliability parameter in (0, 1).
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct SvdArgs {
    /// Matrix file (`.csv` or DMAT).
    #[arg(long, conflicts_with = "type1", required_unless_present = "type1")]
    input: Option<PathBuf>,
    /// Generate a Type-1 test matrix `M,N,S` instead of reading one.
    #[arg(long, value_delimiter = ',')]
    type1: Option<Vec<usize>>,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    opts: SvdOpts,
    /// Write `<prefix>.U.dmat`, `<prefix>.sigma.dmat`, `<prefix>.V.dmat` and `<prefix>.meta`.
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Args)]
struct TensorArgs {
    /// DTEN tensor file.
    #[arg(long, conflicts_with = "sparse_tensor", required_unless_present = "sparse_tensor")]
    input: Option<PathBuf>,
    /// Generate the sparse n x n x n test tensor instead of reading one.
    #[arg(long)]
    sparse_tensor: Option<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    ranks: Vec<usize>,
    /// Processing order of the modes (0-based); default is by increasing dimension.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<usize>>,
    #[command(flatten)]
    opts: SvdOpts,
    /// Write `<prefix>.core.dten` and `<prefix>.U<n>.dmat`.
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Args)]
struct IalmOpts {
    /// Sparsity weight (default 1/sqrt(max(m, n))).
    #[arg(long)]
    lambda: Option<f64>,
    /// Initial penalty (default 1.25/|M|_2).
    #[arg(long)]
    mu0: Option<f64>,
    /// Penalty cap (default 1e7 mu0).
    #[arg(long)]
    mu_bar: Option<f64>,
    /// Penalty growth factor (default 1.5).
    #[arg(long)]
    rho: Option<f64>,
    /// Relative residual stopping tolerance (default 1e-7).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Singular values requested at the first iteration (default 10).
    #[arg(long)]
    sv_guess: Option<usize>,
    /// Per-iteration trace table destination.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct RpcaArgs {
    #[arg(long, conflicts_with = "instance", required_unless_present = "instance")]
    input: Option<PathBuf>,
    /// Generate an instance `M,N,RANK,SPARSITY`; the error is then measured against the planted X.
    #[arg(long, value_delimiter = ',')]
    instance: Option<Vec<f64>>,
    #[command(flatten)]
    ialm: IalmOpts,
    #[command(flatten)]
    opts: SvdOpts,
    /// Write `<prefix>.X.dmat` and `<prefix>.E.dmat`.
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Args)]
struct CompleteArgs {
    /// Observations as `i j value` lines.
    #[arg(long, group = "source")]
    input: Option<PathBuf>,
    /// Observations in MovieLens `user item rating timestamp` form.
    #[arg(long, group = "source")]
    movielens: Option<PathBuf>,
    /// Generate an instance `M,N,RANK,FRACTION`; unobserved entries form the test set.
    #[arg(long, group = "source", value_delimiter = ',')]
    synthetic: Option<Vec<f64>>,
    /// Matrix shape `M,N` for `--input` (default: from the largest indices).
    #[arg(long, value_delimiter = ',')]
    shape: Option<Vec<usize>>,
    /// Held-out observations in `i j value` form.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Rating range for NMAE on the held-out set.
    #[arg(long, requires = "r_max", allow_negative_numbers = true)]
    r_min: Option<f64>,
    #[arg(long, requires = "r_min", allow_negative_numbers = true)]
    r_max: Option<f64>,
    #[command(flatten)]
    ialm: IalmOpts,
    #[command(flatten)]
    opts: SvdOpts,
    /// Write `<prefix>.X.dmat`.
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// svd-accuracy, sv-tracking, tensor, rpca or completion; overrides `kind` in the config.
    #[arg(long)]
    kind: Option<String>,
    /// Extra `key=value` settings applied over the config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

struct Ctx {
    seed: u64,
    config: Config,
    out: Option<PathBuf>,
    format: TableFormat,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

impl Ctx {
    fn svd_settings(&self, o: &SvdOpts) -> Result<(Method, SvdSettings)> {
        let mut s = self.config_svd()?;
        let method = match o.method {
            Some(m) => m,
            None => self.config.get("method")?.unwrap_or(Method::FlipFlop),
        };
        s.l_offset = o.l_offset.unwrap_or(s.l_offset);
        s.b = o.b.unwrap_or(s.b);
        s.p = o.p.unwrap_or(s.p);
        s.q = o.q.unwrap_or(s.q);
        s.g = o.g.unwrap_or(s.g);
        s.epsilon = o.epsilon.unwrap_or(s.epsilon);
        Ok((method, s))
    }

    fn config_svd(&self) -> Result<SvdSettings> {
        let d = SvdSettings::default();
        let c = &self.config;
        Ok(SvdSettings {
            l_offset: c.get_or("l_offset", d.l_offset)?,
            b: c.get_or("b", d.b)?,
            p: c.get_or("p", d.p)?,
            q: c.get_or("q", d.q)?,
            g: c.get_or("g", d.g)?,
            epsilon: c.get_or("epsilon", d.epsilon)?,
        })
    }

    fn ialm_params(&self, o: &IalmOpts) -> Result<IalmParams> {
        let mut p = read_ialm_params(&self.config)?;
        p.lambda = o.lambda.or(p.lambda);
        p.mu0 = o.mu0.or(p.mu0);
        p.mu_bar = o.mu_bar.or(p.mu_bar);
        p.rho = o.rho.or(p.rho);
        p.tol = o.tol.unwrap_or(p.tol);
        p.max_iter = o.max_iter.unwrap_or(p.max_iter);
        p.sv_guess = o.sv_guess.unwrap_or(p.sv_guess);
        Ok(p)
    }

    fn emit(&self, records: &[ResultRecord]) -> Result<()> {
        match &self.out {
            Some(path) => write_records(io::create_file(path)?, records, self.format),
            None => write_records(std::io::stdout().lock(), records, self.format),
        }
    }

    fn write_trace(&self, path: &Path, trace: &[IterRecord]) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(self.format.delimiter()).from_writer(io::create_file(path)?);
        w.write_record(["iter", "residual", "mu", "sv", "rank"])?;
        for t in trace {
            w.write_record([
                t.iter.to_string(),
                t.residual.to_string(),
                t.mu.to_string(),
                t.sv.to_string(),
                t.rank.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn arity<const N: usize, T: Copy>(flag: &str, v: &[T]) -> Result<[T; N]> {
    v.try_into().map_err(|_| Error::Invalid(format!("--{flag} takes {N} comma-separated values")))
}

fn cmd_svd(ctx: &Ctx, a: &SvdArgs) -> Result<()> {
    let (method, settings) = ctx.svd_settings(&a.opts)?;
    let m = match (&a.input, &a.type1) {
        (Some(p), _) => io::load_matrix(p)?,
        (None, Some(t)) => {
            let [m, n, s] = arity::<3, _>("type1", t)?;
            if s == 0 || s > m.min(n) {
                return Err(Error::Invalid("type1 needs 1 <= S <= min(M, N)".into()));
            }
            gen_type1(m, n, s, ctx.seed)
        }
        _ => unreachable!("clap requires a source"),
    };
    ctx.config.reject_unknown()?;
    let start = Instant::now();
    let (svd, flops) = truncated_svd(&m, method, a.k, &settings, ctx.seed)?;
    let mut rec = ResultRecord::new(Kind::SvdAccuracy, method, a.k);
    rec.runtime_s = start.elapsed().as_secs_f64();
    rec.rel_error = Some(svd.relative_error(&m));
    rec.flops = flops;
    rec.sigma = svd.sigma.clone();
    if let Some(prefix) = &a.save {
        let meta = [
            ("method", method.to_string()),
            ("seed", ctx.seed.to_string()),
            ("l", (a.k + settings.l_offset).to_string()),
            ("b", settings.b.to_string()),
            ("p", settings.p.to_string()),
            ("q", settings.q.to_string()),
            ("g", settings.g.to_string()),
            ("epsilon", settings.epsilon.to_string()),
        ];
        svd_files::save(prefix, &svd, &meta)?;
    }
    ctx.emit(&[rec])
}

fn cmd_tensor(ctx: &Ctx, a: &TensorArgs) -> Result<()> {
    let (method, settings) = ctx.svd_settings(&a.opts)?;
    let x = match (&a.input, a.sparse_tensor) {
        (Some(p), _) => dten::load(p)?,
        (None, Some(n)) => gen_sparse_tensor(n, ctx.seed)?,
        _ => unreachable!("clap requires a source"),
    };
    ctx.config.reject_unknown()?;
    let start = Instant::now();
    let t = st_hosvd(&x, &a.ranks, a.order.as_deref(), &settings.engine(method, ctx.seed))?;
    let mut rec = ResultRecord::new(Kind::Tensor, method, a.ranks.iter().copied().max().unwrap_or(0));
    rec.runtime_s = start.elapsed().as_secs_f64();
    rec.rel_error = Some(tucker_error(&x, &t)?);
    if let Some(prefix) = &a.save {
        dten::save(&with_suffix(prefix, ".core.dten"), &t.core)?;
        for (n, u) in t.factors.iter().enumerate() {
            dmat::save(&with_suffix(prefix, &format!(".U{n}.dmat")), u)?;
        }
    }
    ctx.emit(&[rec])
}

fn cmd_rpca(ctx: &Ctx, a: &RpcaArgs) -> Result<()> {
    let (method, settings) = ctx.svd_settings(&a.opts)?;
    let params = ctx.ialm_params(&a.ialm)?.with_engine(settings.engine(method, ctx.seed));
    let (m, truth) = match (&a.input, &a.instance) {
        (Some(p), _) => (io::load_matrix(p)?, None),
        (None, Some(v)) => {
            let [m, n, r, sp] = arity::<4, _>("instance", v)?;
            let (m, x, _) = gen_rpca_instance(m as usize, n as usize, r as usize, sp, ctx.seed)?;
            (m, Some(x))
        }
        _ => unreachable!("clap requires a source"),
    };
    ctx.config.reject_unknown()?;
    let start = Instant::now();
    let out = ialm_rpca(&m, &params)?;
    let mut rec = ResultRecord::new(Kind::Rpca, method, out.trace.last().map_or(0, |t| t.rank));
    rec.runtime_s = start.elapsed().as_secs_f64();
    rec.rel_error = Some(match &truth {
        Some(x) => out.x.sub(x).norm_fro() / x.norm_fro(),
        None => out.trace.last().map_or(0.0, |t| t.residual),
    });
    rec.iterations = Some(out.trace.len());
    rec.sv = out.trace.last().map(|t| t.sv);
    if !out.converged {
        rec.status = "not-converged".into();
    }
    if let Some(path) = &a.ialm.trace {
        ctx.write_trace(path, &out.trace)?;
    }
    if let Some(prefix) = &a.save {
        dmat::save(&with_suffix(prefix, ".X.dmat"), &out.x)?;
        dmat::save(&with_suffix(prefix, ".E.dmat"), &out.e)?;
    }
    ctx.emit(&[rec])
}

fn cmd_complete(ctx: &Ctx, a: &CompleteArgs) -> Result<()> {
    let (method, settings) = ctx.svd_settings(&a.opts)?;
    let params = ctx.ialm_params(&a.ialm)?.with_engine(settings.engine(method, ctx.seed));
    let shape = a.shape.as_deref().map(|s| arity::<2, _>("shape", s)).transpose()?.map(|[m, n]| (m, n));
    let (train, mut test): (ObservationSet, Option<ObservationSet>) = if let Some(p) = &a.input {
        (obs::load_triplets(p, shape)?, None)
    } else if let Some(p) = &a.movielens {
        (obs::load_movielens(p)?.obs, None)
    } else if let Some(v) = &a.synthetic {
        let [m, n, r, f] = arity::<4, _>("synthetic", v)?;
        let (_, train, test) = gen_completion_instance(m as usize, n as usize, r as usize, f, ctx.seed)?;
        (train, Some(test).filter(|t| !t.is_empty()))
    } else {
        return Err(Error::Invalid("one of --input, --movielens or --synthetic is required".into()));
    };
    if let Some(p) = &a.test {
        test = Some(obs::load_triplets(p, Some(train.shape()))?);
    }
    ctx.config.reject_unknown()?;
    let start = Instant::now();
    let out = ialm_mc(&train, &params)?;
    let mut rec = ResultRecord::new(Kind::Completion, method, out.trace.last().map_or(0, |t| t.rank));
    rec.runtime_s = start.elapsed().as_secs_f64();
    rec.rel_error = Some(match &test {
        Some(t) => held_out_error(t, &out.x),
        None => out.trace.last().map_or(0.0, |t| t.residual),
    });
    rec.iterations = Some(out.trace.len());
    rec.sv = out.trace.last().map(|t| t.sv);
    if !out.converged {
        rec.status = "not-converged".into();
    }
    if let (Some(t), Some(lo), Some(hi)) = (&test, a.r_min, a.r_max) {
        eprintln!("nmae={}", nmae(t, &out.x, lo, hi)?);
    }
    if let Some(path) = &a.ialm.trace {
        ctx.write_trace(path, &out.trace)?;
    }
    if let Some(prefix) = &a.save {
        dmat::save(&with_suffix(prefix, ".X.dmat"), &out.x)?;
    }
    ctx.emit(&[rec])
}

fn cmd_bench(mut ctx: Ctx, a: &BenchArgs, parallel: bool) -> Result<()> {
    if let Some(k) = &a.kind {
        ctx.config.set("kind", k.clone());
    }
    for kv in &a.set {
        let (k, v) =
            kv.split_once('=').ok_or_else(|| Error::Invalid(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        ctx.config.set(k.trim(), v.trim());
    }
    ctx.config.set("seed", ctx.seed.to_string());
    if parallel {
        ctx.config.set("parallel", "true");
    }
    let cfg = ExperimentConfig::from_config(&ctx.config)?;
    if cfg.parallel {
        eprintln!("note: cells ran concurrently; runtime_s values are not comparable");
    }
    let records = run_experiment(&cfg)?;
    ctx.emit(&records)
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => config.get_or("seed", 0)?,
    };
    let ctx = Ctx { seed, config, out: cli.out, format: cli.format };
    match &cli.command {
        Command::Svd(a) => cmd_svd(&ctx, a),
        Command::Tensor(a) => cmd_tensor(&ctx, a),
        Command::Rpca(a) => cmd_rpca(&ctx, a),
        Command::Complete(a) => cmd_complete(&ctx, a),
        Command::Bench(a) => cmd_bench(ctx, a, cli.parallel),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
