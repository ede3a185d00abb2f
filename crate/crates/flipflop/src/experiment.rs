//! Experiment configurations, runners and the CSV result schema.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use flipflop_core::engine::Engine;
use flipflop_core::flipflop::{flip_flop_srqr_counted, rsisvd_counted};
use flipflop_core::generate::{gen_completion_instance, gen_rpca_instance, gen_sparse_tensor, gen_type1};
use flipflop_core::ialm::{held_out_error, ialm_mc, ialm_rpca, IalmParams};
use flipflop_core::svd::singular_values;
use flipflop_core::tucker::{st_hosvd, tucker_error};
use flipflop_core::{truncated_svd_oracle, ApproxSvd, DenseMatrix, Flops, SketchParams};

use crate::config::Config;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    SvdAccuracy,
    SvTracking,
    Tensor,
    Rpca,
    Completion,
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "svd-accuracy" => Kind::SvdAccuracy,
            "sv-tracking" => Kind::SvTracking,
            "tensor" => Kind::Tensor,
            "rpca" => Kind::Rpca,
            "completion" => Kind::Completion,
            _ => return Err(format!("unknown experiment kind {s:?}")),
        })
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::SvdAccuracy => "svd-accuracy",
            Kind::SvTracking => "sv-tracking",
            Kind::Tensor => "tensor",
            Kind::Rpca => "rpca",
            Kind::Completion => "completion",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    FlipFlop,
    Rsisvd,
    Exact,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "flipflop" => Ok(Method::FlipFlop),
            "rsisvd" => Ok(Method::Rsisvd),
            "exact" => Ok(Method::Exact),
            _ => Err(format!("unknown method {s:?}")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::FlipFlop => "flipflop",
            Method::Rsisvd => "rsisvd",
            Method::Exact => "exact",
        })
    }
}

/// Randomized SVD settings shared by every method that needs them.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdSettings {
    /// `l = k + l_offset` for Flip-Flop.
    pub l_offset: usize,
    pub b: usize,
    pub p: usize,
    pub q: usize,
    pub g: f64,
    pub epsilon: f64,
}

impl Default for SvdSettings {
    fn default() -> Self {
        Self { l_offset: 0, b: 32, p: 5, q: 1, g: 2.0, epsilon: 0.5 }
    }
}

impl SvdSettings {
    pub fn engine(&self, method: Method, seed: u64) -> Engine {
        match method {
            Method::Exact => Engine::Exact,
            Method::FlipFlop => Engine::FlipFlop {
                oversample: self.l_offset,
                b: self.b,
                p: self.p,
                g: self.g,
                epsilon: self.epsilon,
                seed,
            },
            Method::Rsisvd => Engine::Rsisvd { p: self.p, q: self.q, seed },
        }
    }

    pub fn sketch_params(&self, k: usize, seed: u64) -> SketchParams {
        let l = k + self.l_offset;
        let mut sp = SketchParams::new(k).with_l(l).with_block(self.b.min(l), self.p).with_seed(seed);
        sp.g = self.g;
        sp.epsilon = self.epsilon;
        sp
    }

    fn read(cfg: &Config) -> Result<Self> {
        let d = Self::default();
        Ok(Self {
            l_offset: cfg.get_or("l_offset", d.l_offset)?,
            b: cfg.get_or("b", d.b)?,
            p: cfg.get_or("p", d.p)?,
            q: cfg.get_or("q", d.q)?,
            g: cfg.get_or("g", d.g)?,
            epsilon: cfg.get_or("epsilon", d.epsilon)?,
        })
    }
}

/// Reads the solver keys `lambda mu0 mu_bar rho tol max_iter sv_guess`.
pub fn read_ialm_params(cfg: &Config) -> Result<IalmParams> {
    let d = IalmParams::default();
    Ok(IalmParams {
        lambda: cfg.get("lambda")?,
        mu0: cfg.get("mu0")?,
        mu_bar: cfg.get("mu_bar")?,
        rho: cfg.get("rho")?,
        tol: cfg.get_or("tol", d.tol)?,
        max_iter: cfg.get_or("max_iter", d.max_iter)?,
        engine: d.engine,
        sv_guess: cfg.get_or("sv_guess", d.sv_guess)?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub m: usize,
    pub n: usize,
    /// Number of geometrically decaying singular values in Type-1 matrices.
    pub s: usize,
    /// Target ranks swept (Tucker ranks are `(k, k, k)`).
    pub ks: Vec<usize>,
    pub seed: u64,
    /// Rank of the planted low-rank matrix (robust PCA, completion).
    pub rank: usize,
    pub sparsity: f64,
    /// Observed fraction for completion.
    pub fraction: f64,
    pub tensor_n: usize,
    pub methods: Vec<Method>,
    pub svd: SvdSettings,
    /// Singular values reported per row by `sv-tracking`.
    pub top: usize,
    pub ialm: IalmParams,
    /// Run the (method, k) cells on several threads; runtimes then overlap.
    pub parallel: bool,
}

impl ExperimentConfig {
    pub fn defaults(kind: Kind) -> Self {
        let (m, n, ks) = match kind {
            Kind::SvdAccuracy => (200, 200, (1..=10).map(|i| 5 * i).collect()),
            Kind::SvTracking => (200, 200, vec![20]),
            Kind::Tensor => (0, 0, vec![10]),
            Kind::Rpca => (200, 200, vec![]),
            Kind::Completion => (200, 200, vec![]),
        };
        Self {
            kind,
            m,
            n,
            s: 100,
            ks,
            seed: 0,
            rank: if kind == Kind::Completion { 5 } else { 20 },
            sparsity: 0.05,
            fraction: 0.5,
            tensor_n: 50,
            methods: vec![Method::FlipFlop, Method::Rsisvd, Method::Exact],
            svd: SvdSettings::default(),
            top: 20,
            ialm: IalmParams::default(),
            parallel: false,
        }
    }

    /// Builds a configuration from `key=value` settings; `kind` is required and
    /// unknown keys are rejected.
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let kind: Kind = cfg.get("kind")?.ok_or_else(|| Error::Invalid("missing key `kind`".into()))?;
        let d = Self::defaults(kind);
        let out = Self {
            kind,
            m: cfg.get_or("m", d.m)?,
            n: cfg.get_or("n", d.n)?,
            s: cfg.get_or("s", d.s)?,
            ks: cfg.get_list("ks")?.unwrap_or(d.ks),
            seed: cfg.get_or("seed", d.seed)?,
            rank: cfg.get_or("rank", d.rank)?,
            sparsity: cfg.get_or("sparsity", d.sparsity)?,
            fraction: cfg.get_or("fraction", d.fraction)?,
            tensor_n: cfg.get_or("tensor_n", d.tensor_n)?,
            methods: cfg.get_list("methods")?.unwrap_or(d.methods),
            svd: SvdSettings::read(cfg)?,
            top: cfg.get_or("top", d.top)?,
            ialm: read_ialm_params(cfg)?,
            parallel: cfg.get_or("parallel", d.parallel)?,
        };
        cfg.reject_unknown()?;
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Invalid(msg.into()));
        if self.methods.is_empty() {
            return bad("no methods selected");
        }
        match self.kind {
            Kind::Tensor => {
                if self.tensor_n < 11 {
                    return bad("tensor_n must be at least 11");
                }
                if self.ks.is_empty() || self.ks.iter().any(|&k| k == 0 || k > self.tensor_n) {
                    return bad("ks must lie in 1..=tensor_n");
                }
            }
            _ => {
                if self.m == 0 || self.n == 0 {
                    return bad("m and n must be positive");
                }
            }
        }
        match self.kind {
            Kind::SvdAccuracy | Kind::SvTracking => {
                if self.s == 0 || self.s > self.m.min(self.n) {
                    return bad("s must lie in 1..=min(m, n)");
                }
                if self.ks.is_empty() || self.ks.iter().any(|&k| k == 0 || k >= self.m.min(self.n)) {
                    return bad("ks must lie in 1..min(m, n)");
                }
                if self.kind == Kind::SvTracking && self.ks.iter().any(|&k| k < self.top) {
                    return bad("sv-tracking needs every k >= top");
                }
            }
            Kind::Rpca | Kind::Completion => {
                if self.rank == 0 || self.rank > self.m.min(self.n) {
                    return bad("rank must lie in 1..=min(m, n)");
                }
                if !(0.0..=1.0).contains(&self.sparsity) {
                    return bad("sparsity must lie in [0, 1]");
                }
                if !(self.fraction > 0.0 && self.fraction <= 1.0) {
                    return bad("fraction must lie in (0, 1]");
                }
            }
            Kind::Tensor => {}
        }
        Ok(())
    }
}

/// One row of results.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub kind: Kind,
    pub method: Method,
    pub k: usize,
    /// `ok`, `not-converged` or `error: ...`.
    pub status: String,
    pub rel_error: Option<f64>,
    pub flops: Option<u64>,
    pub iterations: Option<usize>,
    pub sv: Option<usize>,
    pub sigma: Vec<f64>,
    pub runtime_s: f64,
}

/// Column order of the results table. `runtime_s` is the only column that varies
/// between runs with the same configuration.
pub const COLUMNS: [&str; 10] =
    ["kind", "method", "k", "status", "rel_error", "flops", "iterations", "sv", "sigma", "runtime_s"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Tsv,
}

impl TableFormat {
    pub fn delimiter(self) -> u8 {
        match self {
            TableFormat::Csv => b',',
            TableFormat::Tsv => b'\t',
        }
    }
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "tsv" => Ok(TableFormat::Tsv),
            _ => Err(format!("unknown format {s:?}")),
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultRecord {
    /// An `ok` row with every measurement empty.
    pub fn new(kind: Kind, method: Method, k: usize) -> Self {
        Self {
            kind,
            method,
            k,
            status: "ok".into(),
            rel_error: None,
            flops: None,
            iterations: None,
            sv: None,
            sigma: Vec::new(),
            runtime_s: 0.0,
        }
    }

    pub fn fields(&self) -> [String; 10] {
        [
            self.kind.to_string(),
            self.method.to_string(),
            self.k.to_string(),
            self.status.clone(),
            opt(self.rel_error),
            opt(self.flops),
            opt(self.iterations),
            opt(self.sv),
            self.sigma.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
            format!("{:.6}", self.runtime_s),
        ]
    }
}

pub fn write_records(w: impl Write, records: &[ResultRecord], format: TableFormat) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().delimiter(format.delimiter()).from_writer(w);
    wtr.write_record(COLUMNS)?;
    for r in records {
        wtr.write_record(r.fields())?;
    }
    wtr.flush()?;
    Ok(())
}

/// Thread cap from `SRQR_THREADS`, else the available parallelism.
pub fn thread_cap() -> usize {
    std::env::var("SRQR_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

enum Instance {
    Matrix(DenseMatrix),
    Tensor(flipflop_core::DenseTensor),
    Rpca { m: DenseMatrix, x: DenseMatrix },
    Completion { train: flipflop_core::ialm::ObservationSet, test: flipflop_core::ialm::ObservationSet },
}

fn instance(cfg: &ExperimentConfig) -> Result<Instance> {
    Ok(match cfg.kind {
        Kind::SvdAccuracy | Kind::SvTracking => Instance::Matrix(gen_type1(cfg.m, cfg.n, cfg.s, cfg.seed)),
        Kind::Tensor => Instance::Tensor(gen_sparse_tensor(cfg.tensor_n, cfg.seed)?),
        Kind::Rpca => {
            let (m, x, _) = gen_rpca_instance(cfg.m, cfg.n, cfg.rank, cfg.sparsity, cfg.seed)?;
            Instance::Rpca { m, x }
        }
        Kind::Completion => {
            let (_, train, test) = gen_completion_instance(cfg.m, cfg.n, cfg.rank, cfg.fraction, cfg.seed)?;
            Instance::Completion { train, test }
        }
    })
}

/// A rank-`k` SVD by `method`, with its flop count where one is kept.
pub fn truncated_svd(
    a: &DenseMatrix,
    method: Method,
    k: usize,
    svd: &SvdSettings,
    seed: u64,
) -> flipflop_core::Result<(ApproxSvd, Option<u64>)> {
    let flops = Flops::new();
    let out = match method {
        Method::FlipFlop => flip_flop_srqr_counted(a, &svd.sketch_params(k, seed), &flops)?,
        Method::Rsisvd => rsisvd_counted(a, k, svd.p, svd.q, seed, &flops)?,
        Method::Exact => return Ok((truncated_svd_oracle(a, k)?, None)),
    };
    Ok((out, Some(flops.get())))
}

fn run_cell(cfg: &ExperimentConfig, inst: &Instance, method: Method, k: usize) -> ResultRecord {
    let mut rec = ResultRecord::new(cfg.kind, method, k);
    let start = Instant::now();
    let outcome: flipflop_core::Result<()> = (|| {
        match inst {
            Instance::Matrix(a) => {
                let (s, flops) = truncated_svd(a, method, k, &cfg.svd, cfg.seed)?;
                rec.rel_error = Some(s.relative_error(a));
                rec.flops = flops;
                if cfg.kind == Kind::SvTracking {
                    rec.sigma = s.sigma[..cfg.top].to_vec();
                }
            }
            Instance::Tensor(x) => {
                let engine = cfg.svd.engine(method, cfg.seed);
                let t = st_hosvd(x, &[k, k, k], None, &engine)?;
                rec.rel_error = Some(tucker_error(x, &t)?);
            }
            Instance::Rpca { m, x } => {
                let params = cfg.ialm.clone().with_engine(cfg.svd.engine(method, cfg.seed));
                let out = ialm_rpca(m, &params)?;
                rec.rel_error = Some(out.x.sub(x).norm_fro() / x.norm_fro());
                rec.iterations = Some(out.trace.len());
                rec.sv = out.trace.last().map(|t| t.rank);
                if !out.converged {
                    rec.status = "not-converged".into();
                }
            }
            Instance::Completion { train, test } => {
                let params = cfg.ialm.clone().with_engine(cfg.svd.engine(method, cfg.seed));
                let out = ialm_mc(train, &params)?;
                rec.rel_error = Some(if test.is_empty() { 0.0 } else { held_out_error(test, &out.x) });
                rec.iterations = Some(out.trace.len());
                rec.sv = out.trace.last().map(|t| t.rank);
                if !out.converged {
                    rec.status = "not-converged".into();
                }
            }
        }
        Ok(())
    })();
    rec.runtime_s = start.elapsed().as_secs_f64();
    if let Err(e) = outcome {
        rec.status = format!("error: {e}");
    }
    rec
}

/// Runs every (method, k) cell; failures become rows with an error status.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let inst = instance(cfg)?;
    let ks: Vec<usize> = match cfg.kind {
        Kind::Rpca | Kind::Completion => vec![cfg.rank],
        _ => cfg.ks.clone(),
    };
    let cells: Vec<(Method, usize)> = cfg.methods.iter().flat_map(|&m| ks.iter().map(move |&k| (m, k))).collect();
    let mut records = if cfg.parallel {
        let threads = thread_cap().min(cells.len()).max(1);
        let chunk = cells.len().div_ceil(threads);
        std::thread::scope(|scope| {
            let handles: Vec<_> = cells
                .chunks(chunk)
                .map(|part| {
                    let inst = &inst;
                    scope.spawn(move || part.iter().map(|&(m, k)| run_cell(cfg, inst, m, k)).collect::<Vec<_>>())
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("experiment worker panicked")).collect::<Vec<_>>()
        })
    } else {
        cells.iter().map(|&(m, k)| run_cell(cfg, &inst, m, k)).collect()
    };
    if cfg.kind == Kind::SvTracking {
        if let Instance::Matrix(a) = &inst {
            let start = Instant::now();
            let s = singular_values(a);
            let mut rec = ResultRecord::new(cfg.kind, Method::Exact, s.len());
            rec.status = "reference".into();
            rec.sigma = s[..cfg.top].to_vec();
            rec.runtime_s = start.elapsed().as_secs_f64();
            records.push(rec);
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: Kind) -> ExperimentConfig {
        let mut c = ExperimentConfig::defaults(kind);
        c.m = 60;
        c.n = 50;
        c.s = 40;
        c.ks = vec![5, 10];
        c.top = 5;
        c.rank = 3;
        c.tensor_n = 12;
        c
    }

    #[test]
    fn one_row_per_cell() {
        let recs = run_experiment(&small(Kind::SvdAccuracy)).unwrap();
        assert_eq!(recs.len(), 6);
        assert!(recs.iter().all(|r| r.status == "ok"));
        let exact: Vec<_> = recs.iter().filter(|r| r.method == Method::Exact).collect();
        for r in &recs {
            let e = exact.iter().find(|e| e.k == r.k).unwrap();
            assert!(r.rel_error.unwrap() >= e.rel_error.unwrap() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn failures_become_rows() {
        let mut c = small(Kind::SvdAccuracy);
        c.ks = vec![49];
        c.svd.l_offset = 5;
        let recs = run_experiment(&c).unwrap();
        let ff = recs.iter().find(|r| r.method == Method::FlipFlop).unwrap();
        assert!(ff.status.starts_with("error"), "{}", ff.status);
    }

    #[test]
    fn tracking_adds_reference_row() {
        let mut c = small(Kind::SvTracking);
        c.ks = vec![8];
        let recs = run_experiment(&c).unwrap();
        assert_eq!(recs.last().unwrap().status, "reference");
        assert!(recs.iter().all(|r| r.sigma.len() == 5));
    }

    #[test]
    fn config_round_trip() {
        let cfg = Config::parse("kind=rpca\nm=30\nn=30\nrank=3\nmethods=exact,flipflop\ntol=1e-6\n").unwrap();
        let c = ExperimentConfig::from_config(&cfg).unwrap();
        assert_eq!(c.methods, vec![Method::Exact, Method::FlipFlop]);
        assert_eq!(c.ialm.tol, 1e-6);
        assert!(ExperimentConfig::from_config(&Config::parse("kind=rpca\nbogus=1\n").unwrap()).is_err());
        assert!(ExperimentConfig::from_config(&Config::parse("m=3\n").unwrap()).is_err());
        assert!(ExperimentConfig::from_config(&Config::parse("kind=rpca\nsparsity=2\n").unwrap()).is_err());
    }

    #[test]
    fn csv_columns_are_stable() {
        let mut rec = ResultRecord::new(Kind::Rpca, Method::Exact, 3);
        rec.sigma = vec![1.5, 0.25];
        rec.iterations = Some(7);
        let mut out = Vec::new();
        write_records(&mut out, &[rec], TableFormat::Tsv).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), COLUMNS.join("\t"));
        assert_eq!(lines.next().unwrap(), "rpca\texact\t3\tok\t\t\t7\t\t1.5;0.25\t0.000000");
    }
}
