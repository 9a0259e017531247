//! Master/worker straggler simulation with deterministic, seedable streams.
//!
//! Every random draw comes from a counter-based generator seeded by hashing
//! `(master_seed, lane, a, b)`, so paired experiments (e.g. the node-family
//! comparison) consume identical trial streams and results are bitwise
//! reproducible regardless of worker parallelism. Trials run in parallel via
//! rayon; aggregation walks pre-ordered slots, so the reduction order is
//! fixed.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bacc::{decode_pairs, CodedShare, DecodeInput, Encoder};
use crate::diagnostics::{worst_case_pattern, PatternModel, StragglerPattern};
use crate::pointsets::NodeSet;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Function registry
// ---------------------------------------------------------------------------

/// A named scalar function with optional analytic derivatives (used for
/// closed-form bound checks when available).
#[derive(Clone, Copy)]
pub struct NamedFunction {
    pub f: fn(f64) -> f64,
    pub d1: Option<fn(f64) -> f64>,
    pub d2: Option<fn(f64) -> f64>,
}

/// Registry of named worker functions.
#[derive(Clone, Default)]
pub struct FunctionRegistry {
    entries: std::collections::BTreeMap<String, NamedFunction>,
}

impl FunctionRegistry {
    /// Registry with the stock entries: `identity`, `exp`, `sin`, `xsinx`.
    pub fn standard() -> Self {
        let mut r = FunctionRegistry::default();
        r.register(
            "identity",
            NamedFunction {
                f: |x| x,
                d1: Some(|_| 1.0),
                d2: Some(|_| 0.0),
            },
        );
        r.register(
            "exp",
            NamedFunction {
                f: f64::exp,
                d1: Some(f64::exp),
                d2: Some(f64::exp),
            },
        );
        r.register(
            "sin",
            NamedFunction {
                f: f64::sin,
                d1: Some(f64::cos),
                d2: Some(|x| -x.sin()),
            },
        );
        r.register(
            "xsinx",
            NamedFunction {
                f: |x| x * x.sin(),
                d1: Some(|x| x.sin() + x * x.cos()),
                d2: Some(|x| 2.0 * x.cos() - x * x.sin()),
            },
        );
        r
    }

    pub fn register(&mut self, name: &str, f: NamedFunction) {
        self.entries.insert(name.to_string(), f);
    }

    pub fn get(&self, name: &str) -> Option<&NamedFunction> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }
}

/// What the worker computes.
#[derive(Clone, Debug, PartialEq)]
pub enum FunctionKind {
    /// Coefficients in ascending degree order.
    Polynomial(Vec<f64>),
    XSinX,
    Named(String),
}

/// How a scalar function is applied to a matrix payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Application {
    /// Payloads are 1x1.
    Scalar,
    /// Apply the scalar function to each entry.
    Entrywise,
    /// Polynomial in the matrix itself (`sum c_k X^k`, square payloads only).
    MatrixPowerSum,
}

#[derive(Clone, Debug)]
pub struct FunctionSpec {
    pub kind: FunctionKind,
    pub application: Application,
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Coefficients of the derivative polynomial.
fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * i as f64)
        .collect()
}

impl FunctionSpec {
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        FunctionSpec {
            kind: FunctionKind::Polynomial(coeffs),
            application: Application::Scalar,
        }
    }

    pub fn xsinx() -> Self {
        FunctionSpec {
            kind: FunctionKind::XSinX,
            application: Application::Scalar,
        }
    }

    pub fn named(name: &str) -> Self {
        FunctionSpec {
            kind: FunctionKind::Named(name.to_string()),
            application: Application::Scalar,
        }
    }

    pub fn with_application(mut self, application: Application) -> Self {
        self.application = application;
        self
    }

    pub fn validate(&self, registry: &FunctionRegistry) -> Result<()> {
        match &self.kind {
            FunctionKind::Polynomial(c) => {
                if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "polynomial coefficients must be nonempty and finite".into(),
                    ));
                }
            }
            FunctionKind::Named(name) => {
                if registry.get(name).is_none() {
                    return Err(Error::InvalidParameter(format!(
                        "function {name:?} not in registry"
                    )));
                }
            }
            FunctionKind::XSinX => {}
        }
        if self.application == Application::MatrixPowerSum
            && !matches!(self.kind, FunctionKind::Polynomial(_))
        {
            return Err(Error::InvalidParameter(
                "matrix-power application needs a polynomial".into(),
            ));
        }
        Ok(())
    }

    pub fn eval_scalar(&self, x: f64, registry: &FunctionRegistry) -> Result<f64> {
        Ok(match &self.kind {
            FunctionKind::Polynomial(c) => horner(c, x),
            FunctionKind::XSinX => x * x.sin(),
            FunctionKind::Named(name) => {
                let f = registry
                    .get(name)
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown function {name}")))?;
                (f.f)(x)
            }
        })
    }

    /// Apply to a matrix payload under this spec's application mode.
    pub fn apply(&self, m: &Array2<f64>, registry: &FunctionRegistry) -> Result<Array2<f64>> {
        match self.application {
            Application::Scalar => {
                if m.dim() != (1, 1) {
                    return Err(Error::ShapeMismatch(format!(
                        "scalar application on {:?} payload",
                        m.dim()
                    )));
                }
                Ok(Array2::from_elem(
                    (1, 1),
                    self.eval_scalar(m[(0, 0)], registry)?,
                ))
            }
            Application::Entrywise => {
                let mut out = m.clone();
                for v in out.iter_mut() {
                    *v = self.eval_scalar(*v, registry)?;
                }
                Ok(out)
            }
            Application::MatrixPowerSum => {
                let coeffs = match &self.kind {
                    FunctionKind::Polynomial(c) => c,
                    _ => {
                        return Err(Error::InvalidParameter(
                            "matrix-power application needs a polynomial".into(),
                        ))
                    }
                };
                let (r, c) = m.dim();
                if r != c {
                    return Err(Error::ShapeMismatch(format!(
                        "matrix polynomial needs a square payload, got {r}x{c}"
                    )));
                }
                let eye = Array2::eye(r);
                let mut acc: Array2<f64> = &eye * *coeffs.last().unwrap();
                for &coef in coeffs.iter().rev().skip(1) {
                    acc = acc.dot(m) + &eye * coef;
                }
                Ok(acc)
            }
        }
    }

    /// Max-norm estimates of the first and second derivative over `[a, b]`,
    /// analytic when available, finite differences otherwise.
    pub fn derivative_norms(
        &self,
        a: f64,
        b: f64,
        registry: &FunctionRegistry,
    ) -> Result<(f64, f64)> {
        const POINTS: usize = 4001;
        let grid_max = |g: &dyn Fn(f64) -> f64| {
            (0..POINTS)
                .map(|i| g(a + (b - a) * i as f64 / (POINTS - 1) as f64).abs())
                .fold(0.0f64, f64::max)
        };
        match &self.kind {
            FunctionKind::Polynomial(c) => {
                let d1 = poly_derivative(c);
                let d2 = poly_derivative(&d1);
                Ok((grid_max(&|x| horner(&d1, x)), grid_max(&|x| horner(&d2, x))))
            }
            FunctionKind::XSinX => Ok((
                grid_max(&|x| x.sin() + x * x.cos()),
                grid_max(&|x| 2.0 * x.cos() - x * x.sin()),
            )),
            FunctionKind::Named(name) => {
                let f = registry
                    .get(name)
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown function {name}")))?;
                match (f.d1, f.d2) {
                    (Some(d1), Some(d2)) => Ok((grid_max(&d1), grid_max(&d2))),
                    _ => {
                        let func = f.f;
                        Ok(crate::diagnostics::derivative_norms(func, a, b))
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Deterministic substreams
// ---------------------------------------------------------------------------

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based substream keyed by `(master_seed, lane, a, b)`. Identical
/// keys give identical streams on every platform and thread schedule.
pub fn substream(master_seed: u64, lane: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut h = splitmix(master_seed);
    h = splitmix(h ^ splitmix(lane.wrapping_mul(0xA076_1D64_78BD_642F)));
    h = splitmix(h ^ splitmix(a.wrapping_add(0xE703_7ED1_A0B4_28DB)));
    h = splitmix(h ^ splitmix(b.wrapping_add(0x8EBC_6AF0_9C88_C6E3)));
    ChaCha8Rng::seed_from_u64(h)
}

const LANE_FUNCTION: u64 = 1;
const LANE_STRAGGLER: u64 = 2;
const LANE_SAMPLE: u64 = 3;
const LANE_CURVE: u64 = 4;
const LANE_SWEEP_INPUT: u64 = 5;

/// First `s` entries of a uniform random permutation of `0..=n`
/// (partial Fisher-Yates, so prefixes nest as `s` grows).
fn draw_distinct(rng: &mut ChaCha8Rng, n: usize, s: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..=n).collect();
    let len = pool.len();
    for i in 0..s.min(len) {
        let j = rng.random_range(i..len);
        pool.swap(i, j);
    }
    pool.truncate(s);
    pool
}

/// Straggler sampling model.
#[derive(Clone, Copy, Debug)]
pub enum StragglerModel {
    UniformRandom,
    WorstCaseConsecutive { kbar: usize },
}

/// Draw a straggler pattern over workers `0..=n`. Deterministic given `seed`.
pub fn sample_stragglers(
    n: usize,
    s: usize,
    model: StragglerModel,
    seed: u64,
) -> Result<StragglerPattern> {
    if s > n {
        return Err(Error::InvalidParameter(format!(
            "s={s} stragglers but only N={n} allowed (N+1 workers)"
        )));
    }
    match model {
        StragglerModel::UniformRandom => {
            let mut rng = substream(seed, LANE_SAMPLE, n as u64, s as u64);
            let indices = draw_distinct(&mut rng, n, s);
            StragglerPattern::with_model(n, indices, PatternModel::UniformRandom { seed })
        }
        StragglerModel::WorstCaseConsecutive { kbar } => worst_case_pattern(n, s, kbar),
    }
}

// ---------------------------------------------------------------------------
// Worker execution
// ---------------------------------------------------------------------------

/// Outcome of applying the worker function to every non-straggling share.
/// Workers whose results came back non-finite are excluded from the survivor
/// set and listed in `failures`.
#[derive(Clone, Debug)]
pub struct WorkerRun {
    n: usize,
    pub survivors: Vec<usize>,
    pub results: Vec<Array2<f64>>,
    pub failures: Vec<usize>,
}

impl WorkerRun {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn decode_input(&self) -> Result<DecodeInput> {
        DecodeInput::new(self.n, self.survivors.clone(), self.results.clone())
    }
}

/// Apply `f` to every non-straggling share. Results are keyed by worker
/// index, so the outcome is independent of execution order.
pub fn execute_workers(
    shares: &[CodedShare],
    f: &FunctionSpec,
    registry: &FunctionRegistry,
    pattern: &StragglerPattern,
) -> Result<WorkerRun> {
    if shares.is_empty() {
        return Err(Error::EmptyInput("shares"));
    }
    let n = shares.len() - 1;
    if pattern.n() != n {
        return Err(Error::InvalidParameter(format!(
            "pattern over N={} but {} shares",
            pattern.n(),
            shares.len()
        )));
    }
    f.validate(registry)?;
    let mut survivors = Vec::new();
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for share in shares {
        if pattern.is_straggler(share.worker) {
            continue;
        }
        let value = f.apply(&share.payload, registry)?;
        if value.iter().all(|v| v.is_finite()) {
            survivors.push(share.worker);
            results.push(value);
        } else {
            failures.push(share.worker);
        }
    }
    Ok(WorkerRun {
        n,
        survivors,
        results,
        failures,
    })
}

/// Mean over all outputs and entries of `|approx - exact| / (|exact| + 1e-12)`.
pub fn relative_error(approx: &[Array2<f64>], exact: &[Array2<f64>]) -> Result<f64> {
    if approx.len() != exact.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} approximations vs {} references",
            approx.len(),
            exact.len()
        )));
    }
    if approx.is_empty() {
        return Err(Error::EmptyInput("relative_error inputs"));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (a, e) in approx.iter().zip(exact) {
        if a.dim() != e.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                a.dim(),
                e.dim()
            )));
        }
        for (av, ev) in a.iter().zip(e.iter()) {
            total += (av - ev).abs() / (ev.abs() + 1e-12);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

/// Which `(alpha, z)` abscissa pair the encoder/workers use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeFamily {
    /// First-kind anchors, second-kind worker points (the scheme's choice).
    ChebyshevPair,
    /// Both families evenly spaced on `[-1, 1]`.
    Equidistant,
}

impl NodeFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeFamily::ChebyshevPair => "chebyshev",
            NodeFamily::Equidistant => "equidistant",
        }
    }
}

/// Configuration of the random-polynomial experiment.
#[derive(Clone, Debug)]
pub struct PolyExperimentConfig {
    /// Workers are `0..=n`.
    pub n: usize,
    pub k: usize,
    pub deg_f: usize,
    pub s_values: Vec<usize>,
    pub trials_functions: usize,
    pub trials_stragglers: usize,
    pub coefficient_range: (f64, f64),
    pub input_range: (f64, f64),
    pub node_family: NodeFamily,
    pub master_seed: u64,
}

impl PolyExperimentConfig {
    /// Desk-scale defaults: 20 random functions x 100 straggler draws on the
    /// `(N, K, deg) = (500, 20, 25)` setup, `s` from 0 to 450 in steps of 50.
    pub fn desk_default() -> Self {
        PolyExperimentConfig {
            n: 500,
            k: 20,
            deg_f: 25,
            s_values: (0..=9).map(|i| i * 50).collect(),
            trials_functions: 20,
            trials_stragglers: 100,
            coefficient_range: (-10.0, 10.0),
            input_range: (-1.0, 1.0),
            node_family: NodeFamily::ChebyshevPair,
            master_seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(Error::InvalidParameter("need n >= 1 and k >= 1".into()));
        }
        if self.trials_functions == 0 || self.trials_stragglers == 0 {
            return Err(Error::InvalidParameter(
                "trial counts must be positive".into(),
            ));
        }
        if self.s_values.is_empty() {
            return Err(Error::InvalidParameter("empty s sweep".into()));
        }
        for &s in &self.s_values {
            if s > self.n {
                return Err(Error::InvalidParameter(format!(
                    "s={s} exceeds N={}",
                    self.n
                )));
            }
        }
        for (lo, hi) in [self.coefficient_range, self.input_range] {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(Error::InvalidInterval { a: lo, b: hi });
            }
        }
        Ok(())
    }
}

/// Aggregated relative-error statistics for one straggler count.
///
/// `min`/`max` range over per-function means when several functions were run
/// (the shaded-band quantities), otherwise over individual draws.
#[derive(Clone, Debug)]
pub struct ErrorStats {
    pub s: usize,
    pub mean_rel_err: f64,
    pub min_rel_err: f64,
    pub max_rel_err: f64,
    pub n_trials: usize,
    pub per_function_mean: Vec<f64>,
}

impl ErrorStats {
    fn from_trials(s: usize, per_function: &[Vec<f64>]) -> Self {
        let per_function_mean: Vec<f64> = per_function
            .iter()
            .map(|errs| errs.iter().sum::<f64>() / errs.len() as f64)
            .collect();
        let n_trials: usize = per_function.iter().map(Vec::len).sum();
        let mean_rel_err = per_function_mean.iter().sum::<f64>() / per_function_mean.len() as f64;
        let (min_rel_err, max_rel_err) = if per_function.len() > 1 {
            (
                per_function_mean
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min),
                per_function_mean.iter().cloned().fold(0.0f64, f64::max),
            )
        } else {
            (
                per_function[0]
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min),
                per_function[0].iter().cloned().fold(0.0f64, f64::max),
            )
        };
        ErrorStats {
            s,
            mean_rel_err,
            min_rel_err,
            max_rel_err,
            n_trials,
            per_function_mean,
        }
    }
}

fn family_alphas(family: NodeFamily, k: usize) -> Result<NodeSet> {
    match family {
        NodeFamily::ChebyshevPair => NodeSet::chebyshev_first(k),
        NodeFamily::Equidistant => {
            if k == 1 {
                NodeSet::custom(vec![0.0], (-1.0, 1.0))
            } else {
                NodeSet::equidistant(k - 1, -1.0, 1.0)
            }
        }
    }
}

fn family_worker_z(family: NodeFamily, n: usize, i: usize) -> f64 {
    match family {
        NodeFamily::ChebyshevPair => crate::pointsets::worker_abscissa(n, i),
        NodeFamily::Equidistant => {
            if i == 0 {
                -1.0
            } else if i == n {
                1.0
            } else {
                -1.0 + 2.0 * (i as f64 / n as f64)
            }
        }
    }
}

fn family_shares(enc: &Encoder, family: NodeFamily, n: usize) -> Result<Vec<CodedShare>> {
    (0..=n)
        .map(|i| {
            let z = family_worker_z(family, n, i);
            Ok(CodedShare {
                worker: i,
                z,
                payload: enc.evaluate(z)?,
            })
        })
        .collect()
}

/// Per-function experiment state shared by the poly and non-poly sweeps.
struct PreparedFunction {
    exact: Vec<Array2<f64>>,
    alphas: NodeSet,
    /// Worker results by index; `None` marks a failed (non-finite) worker.
    worker_values: Vec<Option<Array2<f64>>>,
    worker_z: Vec<f64>,
}

impl PreparedFunction {
    fn build(
        inputs: &[f64],
        f: &FunctionSpec,
        registry: &FunctionRegistry,
        family: NodeFamily,
        n: usize,
    ) -> Result<Self> {
        let data: Vec<Array2<f64>> = inputs
            .iter()
            .map(|&x| Array2::from_elem((1, 1), x))
            .collect();
        let alphas = family_alphas(family, inputs.len())?;
        let enc = Encoder::with_alphas(data.clone(), alphas.clone())?;
        let shares = family_shares(&enc, family, n)?;
        let worker_z = shares.iter().map(|sh| sh.z).collect();
        let worker_values = shares
            .iter()
            .map(|sh| {
                let v = f.apply(&sh.payload, registry)?;
                Ok(if v.iter().all(|x| x.is_finite()) {
                    Some(v)
                } else {
                    None
                })
            })
            .collect::<Result<_>>()?;
        let exact = data
            .iter()
            .map(|m| f.apply(m, registry))
            .collect::<Result<_>>()?;
        Ok(PreparedFunction {
            exact,
            alphas,
            worker_values,
            worker_z,
        })
    }

    /// Decode with the given workers knocked out and return the mean relative
    /// error against the direct evaluation.
    fn trial_error(&self, straggling: &[usize]) -> Result<f64> {
        let mut down = vec![false; self.worker_values.len()];
        for &w in straggling {
            down[w] = true;
        }
        let pairs: Vec<(f64, Array2<f64>)> = self
            .worker_values
            .iter()
            .enumerate()
            .filter(|(w, v)| !down[*w] && v.is_some())
            .map(|(w, v)| (self.worker_z[w], v.clone().unwrap()))
            .collect();
        let decoded = decode_pairs(&pairs, &self.alphas)?;
        relative_error(&decoded, &self.exact)
    }
}

/// Case-1 experiment: random polynomials over random scalar inputs, swept
/// over straggler counts. Returns one [`ErrorStats`] per entry of
/// `s_values`.
pub fn run_poly_experiment(cfg: &PolyExperimentConfig) -> Result<Vec<ErrorStats>> {
    cfg.validate()?;
    let registry = FunctionRegistry::standard();
    let s_max = *cfg.s_values.iter().max().unwrap();

    // per_fn[fidx][s_index][draw]
    let per_fn: Vec<Vec<Vec<f64>>> = (0..cfg.trials_functions)
        .into_par_iter()
        .map(|fidx| -> Result<Vec<Vec<f64>>> {
            let mut rng = substream(cfg.master_seed, LANE_FUNCTION, fidx as u64, 0);
            let (clo, chi) = cfg.coefficient_range;
            let coeffs: Vec<f64> = (0..=cfg.deg_f)
                .map(|_| rng.random_range(clo..chi))
                .collect();
            let (ilo, ihi) = cfg.input_range;
            let inputs: Vec<f64> = (0..cfg.k).map(|_| rng.random_range(ilo..ihi)).collect();
            let f = FunctionSpec::polynomial(coeffs);
            let prep = PreparedFunction::build(&inputs, &f, &registry, cfg.node_family, cfg.n)?;
            let mut errs = vec![Vec::with_capacity(cfg.trials_stragglers); cfg.s_values.len()];
            for sidx in 0..cfg.trials_stragglers {
                let mut rng_s =
                    substream(cfg.master_seed, LANE_STRAGGLER, fidx as u64, sidx as u64);
                let prefix = draw_distinct(&mut rng_s, cfg.n, s_max);
                for (si, &s) in cfg.s_values.iter().enumerate() {
                    errs[si].push(prep.trial_error(&prefix[..s])?);
                }
            }
            Ok(errs)
        })
        .collect::<Result<_>>()?;

    Ok(cfg
        .s_values
        .iter()
        .enumerate()
        .map(|(si, &s)| {
            let slices: Vec<Vec<f64>> = per_fn.iter().map(|f| f[si].clone()).collect();
            ErrorStats::from_trials(s, &slices)
        })
        .collect())
}

/// Paired per-`s` statistics for the two node families.
#[derive(Clone, Debug)]
pub struct NodeComparison {
    pub s: usize,
    pub chebyshev: ErrorStats,
    pub equidistant: ErrorStats,
}

/// Run the poly experiment twice on identical trial streams, once per node
/// family, and pair the statistics.
pub fn compare_nodesets(cfg: &PolyExperimentConfig) -> Result<Vec<NodeComparison>> {
    let mut cheb_cfg = cfg.clone();
    cheb_cfg.node_family = NodeFamily::ChebyshevPair;
    let mut equi_cfg = cfg.clone();
    equi_cfg.node_family = NodeFamily::Equidistant;
    let cheb = run_poly_experiment(&cheb_cfg)?;
    let equi = run_poly_experiment(&equi_cfg)?;
    Ok(cheb
        .into_iter()
        .zip(equi)
        .map(|(c, e)| NodeComparison {
            s: c.s,
            chebyshev: c,
            equidistant: e,
        })
        .collect())
}

/// Configuration of the non-polynomial (`f = x sin x`) experiment: a fixed
/// decoded curve plus a straggler sweep.
#[derive(Clone, Debug)]
pub struct NonPolyConfig {
    pub curve_n: usize,
    pub curve_k: usize,
    pub curve_s: usize,
    /// Curve inputs; `None` means the grid `-12 + 24 i / (K - 1)`.
    pub curve_inputs: Option<Vec<f64>>,
    pub sweep_n: usize,
    pub sweep_k: usize,
    pub sweep_s_values: Vec<usize>,
    pub sweep_trials: usize,
    pub master_seed: u64,
}

impl NonPolyConfig {
    /// Defaults: curve at `(N, K, s) = (60, 20, 20)`, sweep at
    /// `N = 250, K = 20` with 1000 draws per `s`.
    pub fn desk_default() -> Self {
        NonPolyConfig {
            curve_n: 60,
            curve_k: 20,
            curve_s: 20,
            curve_inputs: None,
            sweep_n: 250,
            sweep_k: 20,
            sweep_s_values: (0..=9).map(|i| i * 25).collect(),
            sweep_trials: 1000,
            master_seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.curve_n == 0 || self.curve_k == 0 || self.sweep_n == 0 || self.sweep_k == 0 {
            return Err(Error::InvalidParameter("counts must be positive".into()));
        }
        if self.curve_s > self.curve_n {
            return Err(Error::InvalidParameter(format!(
                "curve_s={} exceeds curve N={}",
                self.curve_s, self.curve_n
            )));
        }
        for &s in &self.sweep_s_values {
            if s > self.sweep_n {
                return Err(Error::InvalidParameter(format!(
                    "sweep s={s} exceeds N={}",
                    self.sweep_n
                )));
            }
        }
        if let Some(inputs) = &self.curve_inputs {
            if inputs.len() != self.curve_k {
                return Err(Error::InvalidParameter(format!(
                    "{} curve inputs for K={}",
                    inputs.len(),
                    self.curve_k
                )));
            }
        }
        if self.sweep_trials == 0 || self.sweep_s_values.is_empty() {
            return Err(Error::InvalidParameter("empty sweep".into()));
        }
        Ok(())
    }
}

/// One decoded curve sample.
#[derive(Clone, Copy, Debug)]
pub struct CurvePoint {
    pub x: f64,
    pub exact: f64,
    pub approx: f64,
    pub abs_err: f64,
}

#[derive(Clone, Debug)]
pub struct NonPolyResult {
    pub curve: Vec<CurvePoint>,
    pub stats: Vec<ErrorStats>,
}

/// Case-2 experiment: decode `f = x sin x` on a fixed input grid under one
/// straggler draw (the curve), and sweep mean relative error over straggler
/// counts with uniformly drawn inputs.
pub fn run_nonpoly_experiment(cfg: &NonPolyConfig) -> Result<NonPolyResult> {
    cfg.validate()?;
    let registry = FunctionRegistry::standard();
    let f = FunctionSpec::xsinx();

    // Curve part.
    let inputs: Vec<f64> = cfg.curve_inputs.clone().unwrap_or_else(|| {
        (0..cfg.curve_k)
            .map(|i| -12.0 + 24.0 * i as f64 / (cfg.curve_k - 1).max(1) as f64)
            .collect()
    });
    let prep = PreparedFunction::build(
        &inputs,
        &f,
        &registry,
        NodeFamily::ChebyshevPair,
        cfg.curve_n,
    )?;
    let pattern = sample_stragglers(
        cfg.curve_n,
        cfg.curve_s,
        StragglerModel::UniformRandom,
        splitmix(cfg.master_seed ^ LANE_CURVE),
    )?;
    let mut down = vec![false; cfg.curve_n + 1];
    for &w in pattern.indices() {
        down[w] = true;
    }
    let pairs: Vec<(f64, Array2<f64>)> = prep
        .worker_values
        .iter()
        .enumerate()
        .filter(|(w, v)| !down[*w] && v.is_some())
        .map(|(w, v)| (prep.worker_z[w], v.clone().unwrap()))
        .collect();
    let decoded = decode_pairs(&pairs, &prep.alphas)?;
    let curve = inputs
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let exact = x * x.sin();
            let approx = decoded[j][(0, 0)];
            CurvePoint {
                x,
                exact,
                approx,
                abs_err: (approx - exact).abs(),
            }
        })
        .collect();

    // Sweep part (single function, inputs drawn once).
    let mut rng = substream(cfg.master_seed, LANE_SWEEP_INPUT, 0, 0);
    let sweep_inputs: Vec<f64> = (0..cfg.sweep_k)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let sweep_prep = PreparedFunction::build(
        &sweep_inputs,
        &f,
        &registry,
        NodeFamily::ChebyshevPair,
        cfg.sweep_n,
    )?;
    let s_max = *cfg.sweep_s_values.iter().max().unwrap();
    let trial_errs: Vec<Vec<f64>> = (0..cfg.sweep_trials)
        .into_par_iter()
        .map(|sidx| -> Result<Vec<f64>> {
            let mut rng_s = substream(cfg.master_seed, LANE_STRAGGLER, 0, sidx as u64);
            let prefix = draw_distinct(&mut rng_s, cfg.sweep_n, s_max);
            cfg.sweep_s_values
                .iter()
                .map(|&s| sweep_prep.trial_error(&prefix[..s]))
                .collect()
        })
        .collect::<Result<_>>()?;
    let stats = cfg
        .sweep_s_values
        .iter()
        .enumerate()
        .map(|(si, &s)| {
            let draws: Vec<f64> = trial_errs.iter().map(|t| t[si]).collect();
            ErrorStats::from_trials(s, std::slice::from_ref(&draws))
        })
        .collect();

    Ok(NonPolyResult { curve, stats })
}

/// Least-squares non-decreasing fit (pool adjacent violators).
pub fn isotonic_fit(values: &[f64]) -> Vec<f64> {
    // (mean, count) blocks
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            blocks.pop();
            let n = na + nb;
            blocks.push(((a * na as f64 + b * nb as f64) / n as f64, n));
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (v, n) in blocks {
        out.extend(std::iter::repeat_n(v, n));
    }
    out
}
