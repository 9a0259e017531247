//! Conditioning and accuracy diagnostics: Lebesgue functions and constants,
//! well-spaced-points constants, worst-case straggler patterns, mesh
//! parameters, and the closed-form error bound for the alternating-sign
//! rational interpolant on surviving Chebyshev abscissae.

use std::f64::consts::PI;

use crate::interpolants::{basis_all, Scheme};
use crate::pointsets::{NodeSet, COINCIDENCE_TOL};
use crate::{Error, Result};

/// Result of a grid maximization of the Lebesgue function.
#[derive(Clone, Debug)]
pub struct LebesgueReport {
    /// Estimated Lebesgue constant (max of the Lebesgue function on the grid).
    pub constant_estimate: f64,
    /// Grid point attaining the maximum.
    pub argmax_x: f64,
    /// Number of grid points evaluated.
    pub grid_size: usize,
    /// Closed-form bound attached by the caller, if any.
    pub theoretical_bound: Option<f64>,
}

impl LebesgueReport {
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.theoretical_bound = Some(bound);
        self
    }
}

/// Grid resolution for Lebesgue maximization: cosine-distributed interior
/// samples per inter-node interval, plus each interval midpoint. The Lebesgue
/// function is smooth between nodes and peaks mid-interval, so per-interval
/// sampling converges quickly.
#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    pub samples_per_interval: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            samples_per_interval: 64,
        }
    }
}

impl GridSpec {
    pub fn new(samples_per_interval: usize) -> Result<Self> {
        if samples_per_interval < 10 {
            return Err(Error::InvalidParameter(format!(
                "need >= 10 samples per interval, got {samples_per_interval}"
            )));
        }
        Ok(GridSpec {
            samples_per_interval,
        })
    }

    /// All evaluation points for a node set, interval by interval, ascending.
    /// Cosine samples land strictly inside each interval; the midpoint is
    /// added and exact duplicates (odd sample counts hit the midpoint) are
    /// dropped.
    pub fn points(&self, nodes: &NodeSet) -> Vec<f64> {
        let m = self.samples_per_interval;
        let pts = nodes.points();
        let mut out = Vec::with_capacity(pts.len().saturating_sub(1) * (m + 1));
        let mut cell = Vec::with_capacity(m + 1);
        for w in pts.windows(2) {
            let (c, r) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            cell.clear();
            cell.extend((0..m).map(|j| c + r * ((2 * j + 1) as f64 * PI / (2.0 * m as f64)).cos()));
            cell.push(c);
            cell.sort_by(|a, b| a.partial_cmp(b).unwrap());
            cell.dedup();
            out.extend_from_slice(&cell);
        }
        out
    }
}

/// Lebesgue function `sum_i |l_i(x)|` of a scheme's basis at `x`; equals 1 at
/// nodes.
pub fn lebesgue_function(scheme: &Scheme, nodes: &NodeSet, x: f64) -> Result<f64> {
    if let Scheme::Berrut = scheme {
        return Ok(berrut_lebesgue_at(nodes, x));
    }
    Ok(basis_all(scheme, nodes, x)?.iter().map(|b| b.abs()).sum())
}

/// Allocation-free Lebesgue function for the alternating-sign scheme.
fn berrut_lebesgue_at(nodes: &NodeSet, x: f64) -> f64 {
    let pts = nodes.points();
    let mut sum_abs = 0.0;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for &xi in pts {
        let d = x - xi;
        if d.abs() <= COINCIDENCE_TOL * xi.abs().max(1.0) {
            return 1.0;
        }
        let t = sign / d;
        sum_abs += t.abs();
        sum += t;
        sign = -sign;
    }
    sum_abs / sum.abs()
}

/// Maximize the Lebesgue function over the composite grid.
pub fn lebesgue_constant(
    scheme: &Scheme,
    nodes: &NodeSet,
    grid: &GridSpec,
) -> Result<LebesgueReport> {
    if nodes.len() < 2 {
        return Err(Error::TooFewNodes {
            needed: 2,
            got: nodes.len(),
        });
    }
    let xs = grid.points(nodes);
    let mut best = 1.0;
    let mut argmax = nodes.points()[0];
    for &x in &xs {
        let v = lebesgue_function(scheme, nodes, x)?;
        if v > best {
            best = v;
            argmax = x;
        }
    }
    Ok(LebesgueReport {
        constant_estimate: best,
        argmax_x: argmax,
        grid_size: xs.len(),
        theoretical_bound: None,
    })
}

/// Closed-form Lebesgue bound for the alternating-sign interpolant on any
/// `N + 1 - s` survivors of the `N + 1` cosine-spaced worker abscissae:
/// `((s+1)(s+3)pi^2/4 + 1) * (1 + pi^2 (s+1) ln(N - s))`.
pub fn theoretical_lebesgue_bound(n: usize, s: usize) -> Result<f64> {
    if s + 2 >= n {
        return Err(Error::OutOfRegime(format!(
            "need s < N - 2, got s={s}, N={n}"
        )));
    }
    let sf = s as f64;
    let r = (sf + 1.0) * (sf + 3.0) * PI * PI / 4.0;
    let c2 = PI * PI * (sf + 1.0);
    Ok((r + 1.0) * (1.0 + c2 * ((n - s) as f64).ln()))
}

/// The `(C, R)` well-spacedness pair guaranteed for any survivor set with
/// `s` stragglers: `C = pi^2 (s+1)/2`, `R = (s+1)(s+3) pi^2 / 4`.
pub fn guaranteed_well_spaced_pair(s: usize) -> (f64, f64) {
    let sf = s as f64;
    (
        PI * PI * (sf + 1.0) / 2.0,
        (sf + 1.0) * (sf + 3.0) * PI * PI / 4.0,
    )
}

/// Measured well-spacedness constants of a node set.
#[derive(Clone, Debug)]
pub struct WellSpacedReport {
    /// Minimal `C` satisfying both one-sided gap conditions.
    pub c_min: f64,
    /// Minimal `R` satisfying the adjacent-gap-ratio condition.
    pub r_min: f64,
    /// A `(C, R)` pair checked against the measured minima, with the verdict.
    pub tested_pair: Option<(f64, f64, bool)>,
}

impl WellSpacedReport {
    /// Record whether the given pair dominates the measured constants.
    pub fn test_pair(mut self, c: f64, r: f64) -> Self {
        self.tested_pair = Some((c, r, c >= self.c_min && r >= self.r_min));
        self
    }

    pub fn dominated_by(&self, c: f64, r: f64) -> bool {
        c >= self.c_min && r >= self.r_min
    }
}

/// Exhaustive sweep of the three gap-ratio conditions. O(n^2); fine at desk
/// scale.
pub fn well_spaced_constants(nodes: &NodeSet) -> Result<WellSpacedReport> {
    let pts = nodes.points();
    let n1 = pts.len();
    if n1 < 3 {
        return Err(Error::TooFewNodes { needed: 3, got: n1 });
    }
    let mut c_min = 1.0f64;
    for k in 0..n1 - 1 {
        let gap = pts[k + 1] - pts[k];
        for j in 0..=k {
            let lhs = gap / (pts[k + 1] - pts[j]);
            c_min = c_min.max(lhs * (k + 1 - j) as f64);
        }
        for j in k + 1..n1 {
            let lhs = gap / (pts[j] - pts[k]);
            c_min = c_min.max(lhs * (j - k) as f64);
        }
    }
    let mut r_min = 1.0f64;
    for k in 1..n1 - 1 {
        let ratio = (pts[k + 1] - pts[k]) / (pts[k] - pts[k - 1]);
        r_min = r_min.max(ratio.max(1.0 / ratio));
    }
    Ok(WellSpacedReport {
        c_min,
        r_min,
        tested_pair: None,
    })
}

/// How a straggler pattern was produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PatternModel {
    UniformRandom { seed: u64 },
    WorstCaseConsecutive { kbar: usize },
    Explicit,
}

/// A set of worker indices declared non-responding, out of workers `0..=n`.
#[derive(Clone, Debug)]
pub struct StragglerPattern {
    n: usize,
    /// Sorted straggler indices.
    indices: Vec<usize>,
    model: PatternModel,
}

impl StragglerPattern {
    pub fn explicit(n: usize, indices: Vec<usize>) -> Result<Self> {
        Self::with_model(n, indices, PatternModel::Explicit)
    }

    pub fn with_model(n: usize, mut indices: Vec<usize>, model: PatternModel) -> Result<Self> {
        indices.sort_unstable();
        for pair in indices.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::InvalidParameter(format!(
                    "duplicate straggler index {}",
                    pair[0]
                )));
            }
        }
        if let Some(&max) = indices.last() {
            if max > n {
                return Err(Error::IndexOutOfRange {
                    index: max,
                    len: n + 1,
                });
            }
        }
        Ok(StragglerPattern { n, indices, model })
    }

    /// Largest worker index (there are `n + 1` workers).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stragglers.
    pub fn s(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn model(&self) -> &PatternModel {
        &self.model
    }

    pub fn is_straggler(&self, worker: usize) -> bool {
        self.indices.binary_search(&worker).is_ok()
    }

    /// Sorted surviving worker indices.
    pub fn survivors(&self) -> Vec<usize> {
        (0..=self.n).filter(|w| !self.is_straggler(*w)).collect()
    }
}

/// The straggler pattern that maximizes the survivor-set Lebesgue constant:
/// the `s` removed workers are consecutive, `kbar+1 ..= kbar+s`, so survivors
/// are `{0..=kbar} U {kbar+s+1..=n}`.
pub fn worst_case_pattern(n: usize, s: usize, kbar: usize) -> Result<StragglerPattern> {
    if s > n {
        return Err(Error::InvalidParameter(format!("s={s} exceeds N={n}")));
    }
    if kbar + s + 1 > n {
        return Err(Error::IndexOutOfRange {
            index: kbar,
            len: n - s, // valid kbar range is 0..=n-s-1
        });
    }
    let indices: Vec<usize> = (kbar + 1..=kbar + s).collect();
    StragglerPattern::with_model(n, indices, PatternModel::WorstCaseConsecutive { kbar })
}

/// Survivor abscissae of a pattern as an ascending node set on `[-1, 1]`.
pub fn survivor_nodes(pattern: &StragglerPattern) -> Result<NodeSet> {
    NodeSet::from_workers(pattern.n(), &pattern.survivors())
}

/// Mesh parameters of an ordered node set.
#[derive(Clone, Copy, Debug)]
pub struct MeshParams {
    /// Largest adjacent gap.
    pub h: f64,
    /// Local mesh ratio: max over interior nodes of the smaller adjacent-gap
    /// ratio (`min` of left and right where both exist). Zero when there is no
    /// interior node.
    pub lambda: f64,
}

pub fn mesh_params(nodes: &NodeSet) -> Result<MeshParams> {
    let pts = nodes.points();
    let n1 = pts.len();
    if n1 < 2 {
        return Err(Error::TooFewNodes { needed: 2, got: n1 });
    }
    let h = pts.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
    let mut lambda = 0.0f64;
    for i in 1..n1 - 1 {
        let left = (pts[i + 1] - pts[i]) / (pts[i] - pts[i - 1]);
        let ratio = if i + 2 < n1 {
            left.min((pts[i + 1] - pts[i]) / (pts[i + 2] - pts[i + 1]))
        } else {
            left
        };
        lambda = lambda.max(ratio);
    }
    Ok(MeshParams { h, lambda })
}

/// Closed-form decode error bound for `s` stragglers out of `N + 1` workers
/// on cosine-spaced abscissae, for a decode target with max-norm derivative
/// bounds `norm_g1 = ||g'||` and `norm_g2 = ||g''||` on the interval:
///
/// `2 (1 + R) sin((s+1) pi / (2N)) * ||g''||` when `N - s` is odd, with the
/// extra `+ ||g'||` term when `N - s` is even; `R = (s+1)(s+3) pi^2 / 4`.
pub fn error_bound(n: usize, s: usize, norm_g1: f64, norm_g2: f64) -> Result<f64> {
    if s + 2 >= n {
        return Err(Error::OutOfRegime(format!(
            "need s < N - 2, got s={s}, N={n}"
        )));
    }
    if norm_g1 < 0.0 || norm_g2 < 0.0 {
        return Err(Error::InvalidParameter(
            "derivative norms must be nonnegative".into(),
        ));
    }
    let sf = s as f64;
    let r = (sf + 1.0) * (sf + 3.0) * PI * PI / 4.0;
    let scale = 2.0 * (1.0 + r) * ((sf + 1.0) * PI / (2.0 * n as f64)).sin();
    let norms = if (n - s) % 2 == 1 {
        norm_g2
    } else {
        norm_g2 + norm_g1
    };
    Ok(scale * norms)
}

/// Max-norm estimates of `||g'||` and `||g''||` on `[a, b]` by central finite
/// differences on a 4001-point grid. Modest accuracy by design; used for bound
/// checks.
pub fn derivative_norms(g: impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    const POINTS: usize = 4001;
    let h = (b - a) / (POINTS - 1) as f64;
    let values: Vec<f64> = (0..POINTS).map(|i| g(a + h * i as f64)).collect();
    let mut d1 = 0.0f64;
    let mut d2 = 0.0f64;
    for i in 1..POINTS - 1 {
        d1 = d1.max(((values[i + 1] - values[i - 1]) / (2.0 * h)).abs());
        d2 = d2.max(((values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h)).abs());
    }
    (d1, d2)
}
