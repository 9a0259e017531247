//! The coded-computing protocol: encode `K` data matrices into `N + 1` coded
//! shares, and decode any survivor subset's worker results back into
//! approximations of `f(X_0..X_{K-1})`.
//!
//! Encoding forms the rational combination
//! `u(z) = sum_i l_i(z) X_i` with alternating-sign barycentric basis `l_i`
//! anchored at Chebyshev points of the first kind, so `u(alpha_j) = X_j`
//! exactly. Worker `i` receives `u(z_i)` with `z_i = cos(i pi / N)`. Decoding
//! interpolates the survivor results with the same alternating-sign rational
//! form (ascending abscissae, signs by sorted position) and reads off the
//! values at the `alpha_j`. Any nonempty survivor set decodes; there is no
//! recovery threshold.
//!
//! The exact polynomial-coded baseline ([`lcc_roundtrip`]) is included for
//! contrast: it fails hard below its recovery threshold and its
//! Vandermonde-solve decode variant is numerically unstable on equidistant
//! abscissae.

use std::io::{Read, Write};

use ndarray::Array2;

use crate::diagnostics::StragglerPattern;
use crate::interpolants::{Interpolant, SampleSet, Scheme};
use crate::pointsets::{weights_general, worker_abscissa, NodeKind, NodeSet};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

/// Immutable encoder over `K` same-shape data matrices.
#[derive(Clone, Debug)]
pub struct Encoder {
    alphas: NodeSet,
    /// Samples paired with ascending `alphas`; data index `j` sits at
    /// ascending position `K - 1 - j` (the anchor family descends with `j`).
    interp: Interpolant,
}

impl Encoder {
    /// Encoder anchored at the `K` Chebyshev points of the first kind.
    pub fn new(data: Vec<Array2<f64>>) -> Result<Self> {
        let k = data.len();
        if k == 0 {
            return Err(Error::EmptyInput("encoder data"));
        }
        Self::with_alphas(data, NodeSet::chebyshev_first(k)?)
    }

    /// Encoder anchored at caller-chosen abscissae (one per data matrix).
    /// Used for node-family comparisons; the standard construction is
    /// [`Encoder::new`].
    pub fn with_alphas(data: Vec<Array2<f64>>, alphas: NodeSet) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyInput("encoder data"));
        }
        if alphas.len() != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} anchors for {} data matrices",
                alphas.len(),
                data.len()
            )));
        }
        let mut ascending = data;
        ascending.reverse();
        let samples = SampleSet::from_matrices(ascending)?;
        let interp = Interpolant::new(alphas.clone(), samples, Scheme::Berrut)?;
        Ok(Encoder { alphas, interp })
    }

    pub fn k(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &NodeSet {
        &self.alphas
    }

    /// Anchor abscissa of data index `j` (`alpha_j`, descending in `j`).
    pub fn alpha_of(&self, j: usize) -> f64 {
        self.alphas.points()[self.k() - 1 - j]
    }

    /// Data matrix `j` in original order.
    pub fn data_at(&self, j: usize) -> &Array2<f64> {
        &self.interp.samples().values()[self.k() - 1 - j]
    }

    pub fn shape(&self) -> (usize, usize) {
        self.interp.samples().shape()
    }

    /// The coded combination `u(z)`; `u(alpha_j) = X_j` exactly.
    pub fn evaluate(&self, z: f64) -> Result<Array2<f64>> {
        self.interp.eval(z)
    }

    /// Coded share for every worker `0..=n`, worker `i` at `cos(i pi / n)`.
    pub fn encode_shares(&self, n: usize) -> Result<Vec<CodedShare>> {
        if n == 0 {
            return Err(Error::InvalidParameter("need n >= 1 (n+1 workers)".into()));
        }
        (0..=n)
            .map(|i| {
                let z = worker_abscissa(n, i);
                Ok(CodedShare {
                    worker: i,
                    z,
                    payload: self.evaluate(z)?,
                })
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Shares and the flat binary format
// ---------------------------------------------------------------------------

/// One worker's coded input (or, symmetrically, its computed result).
#[derive(Clone, Debug)]
pub struct CodedShare {
    pub worker: usize,
    pub z: f64,
    pub payload: Array2<f64>,
}

impl CodedShare {
    /// Serialize as flat binary, little-endian: `worker: u32`, `z: f64`,
    /// `rows: u32`, `cols: u32`, then row-major `f64` payload.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let (rows, cols) = self.payload.dim();
        w.write_all(&(self.worker as u32).to_le_bytes())?;
        w.write_all(&self.z.to_le_bytes())?;
        w.write_all(&(rows as u32).to_le_bytes())?;
        w.write_all(&(cols as u32).to_le_bytes())?;
        for row in self.payload.rows() {
            for &v in row {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let worker = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let z = f64::from_le_bytes(b8);
        if !z.is_finite() {
            return Err(Error::MalformedFile("non-finite share abscissa".into()));
        }
        r.read_exact(&mut b4)?;
        let rows = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let cols = u32::from_le_bytes(b4) as usize;
        if rows == 0 || cols == 0 || rows.saturating_mul(cols) > (1 << 28) {
            return Err(Error::MalformedFile(format!(
                "implausible share shape {rows}x{cols}"
            )));
        }
        let mut payload = Array2::zeros((rows, cols));
        for i in 0..rows {
            for j in 0..cols {
                r.read_exact(&mut b8)?;
                let v = f64::from_le_bytes(b8);
                if !v.is_finite() {
                    return Err(Error::MalformedFile(format!(
                        "non-finite payload entry ({i},{j})"
                    )));
                }
                payload[(i, j)] = v;
            }
        }
        Ok(CodedShare { worker, z, payload })
    }
}

// ---------------------------------------------------------------------------
// Decode
// ---------------------------------------------------------------------------

/// Survivor results ready for decoding. Construction sorts by worker index,
/// so decode output does not depend on arrival order.
#[derive(Clone, Debug)]
pub struct DecodeInput {
    n: usize,
    /// Sorted survivor worker indices.
    survivors: Vec<usize>,
    /// Results aligned with `survivors`.
    results: Vec<Array2<f64>>,
}

impl DecodeInput {
    pub fn new(n: usize, survivors: Vec<usize>, results: Vec<Array2<f64>>) -> Result<Self> {
        if survivors.is_empty() {
            return Err(Error::EmptyInput("survivor set"));
        }
        if survivors.len() != results.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} survivors but {} results",
                survivors.len(),
                results.len()
            )));
        }
        let shape = results[0].dim();
        if results.iter().any(|r| r.dim() != shape) {
            return Err(Error::ShapeMismatch("survivor result shapes differ".into()));
        }
        let mut paired: Vec<(usize, Array2<f64>)> = survivors.into_iter().zip(results).collect();
        paired.sort_by_key(|(w, _)| *w);
        for pair in paired.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidParameter(format!(
                    "duplicate survivor index {}",
                    pair[0].0
                )));
            }
        }
        if let Some((w, _)) = paired.last() {
            if *w > n {
                return Err(Error::IndexOutOfRange {
                    index: *w,
                    len: n + 1,
                });
            }
        }
        let (survivors, results) = paired.into_iter().unzip();
        Ok(DecodeInput {
            n,
            survivors,
            results,
        })
    }

    /// Build from executed shares (results carry the worker index).
    pub fn from_shares(n: usize, shares: Vec<CodedShare>) -> Result<Self> {
        let (survivors, results) = shares.into_iter().map(|s| (s.worker, s.payload)).unzip();
        Self::new(n, survivors, results)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn survivors(&self) -> &[usize] {
        &self.survivors
    }

    pub fn results(&self) -> &[Array2<f64>] {
        &self.results
    }
}

/// Rational interpolant over the survivor abscissae, as an [`Interpolant`]
/// (ascending nodes, alternating signs by sorted position).
pub fn survivor_interpolant(input: &DecodeInput) -> Result<Interpolant> {
    // Worker index ascending means abscissa descending; reverse both.
    let nodes: Vec<f64> = input
        .survivors
        .iter()
        .rev()
        .map(|&w| worker_abscissa(input.n, w))
        .collect();
    let values: Vec<Array2<f64>> = input.results.iter().rev().cloned().collect();
    let node_set = NodeSet::custom(nodes, (-1.0, 1.0))?;
    Interpolant::new(node_set, SampleSet::from_matrices(values)?, Scheme::Berrut)
}

/// Decode the survivor results into the `K` outputs `r(alpha_0..alpha_{K-1})`
/// (original data order). An anchor coinciding with a survivor abscissa
/// returns that worker's result exactly. O(|F|) per output per matrix entry.
pub fn decode(input: &DecodeInput, alphas: &NodeSet) -> Result<Vec<Array2<f64>>> {
    let r = survivor_interpolant(input)?;
    eval_at_anchors(&r, alphas)
}

/// Decode from explicit `(abscissa, result)` pairs instead of worker indices.
/// This is the same rational reconstruction as [`decode`]; it exists so
/// experiments can swap in non-cosine worker abscissae.
pub fn decode_pairs(pairs: &[(f64, Array2<f64>)], alphas: &NodeSet) -> Result<Vec<Array2<f64>>> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("survivor set"));
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let nodes: Vec<f64> = sorted.iter().map(|(z, _)| *z).collect();
    let values: Vec<Array2<f64>> = sorted.into_iter().map(|(_, v)| v).collect();
    let node_set = NodeSet::custom(nodes, (-1.0, 1.0))?;
    let r = Interpolant::new(node_set, SampleSet::from_matrices(values)?, Scheme::Berrut)?;
    eval_at_anchors(&r, alphas)
}

fn eval_at_anchors(r: &Interpolant, alphas: &NodeSet) -> Result<Vec<Array2<f64>>> {
    let k = alphas.len();
    (0..k).map(|j| r.eval(alphas.points()[k - 1 - j])).collect()
}

// ---------------------------------------------------------------------------
// Exact polynomial-coded baseline
// ---------------------------------------------------------------------------

/// Decode route for the polynomial-coded baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LccDecodeMethod {
    /// Barycentric interpolation of `g`: the numerically sane route.
    Barycentric,
    /// Solve the Vandermonde system for monomial coefficients, then evaluate.
    /// Kept to demonstrate the instability of the textbook decode.
    VandermondeSolve,
}

#[derive(Clone, Copy, Debug)]
pub struct LccConfig {
    /// Anchor family for the data interpolation (`ChebyshevFirst` or
    /// `Equidistant`).
    pub encode_kind: NodeKind,
    /// Worker abscissa family (`ChebyshevSecond` or `Equidistant`).
    pub worker_kind: NodeKind,
    pub decode: LccDecodeMethod,
}

impl Default for LccConfig {
    fn default() -> Self {
        LccConfig {
            encode_kind: NodeKind::ChebyshevFirst,
            worker_kind: NodeKind::ChebyshevSecond,
            decode: LccDecodeMethod::Barycentric,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LccOutcome {
    /// Recovered `p(X_j)` in data order.
    pub outputs: Vec<Array2<f64>>,
    /// Conditioning proxy of the decode system: max/min barycentric weight
    /// magnitude over the decode abscissae.
    pub weight_ratio: f64,
    /// The recovery threshold `(K-1) deg(p) + 1` that was enforced.
    pub threshold: usize,
}

fn family_nodes(kind: NodeKind, count: usize) -> Result<NodeSet> {
    match kind {
        NodeKind::ChebyshevFirst => NodeSet::chebyshev_first(count),
        NodeKind::ChebyshevSecond => NodeSet::chebyshev_second(count - 1),
        NodeKind::Equidistant => {
            if count == 1 {
                NodeSet::custom(vec![0.0], (-1.0, 1.0))
            } else {
                NodeSet::equidistant(count - 1, -1.0, 1.0)
            }
        }
        NodeKind::Custom => Err(Error::UnsupportedKind("custom")),
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// The polynomial-coded roundtrip: interpolate the data with a degree-`K-1`
/// polynomial `u`, evaluate `g = p(u)` at the worker abscissae, interpolate
/// `g` from at least `(K-1) deg(p) + 1` survivor results, and read off
/// `g(alpha_j) = p(X_j)`. `coeffs` are the polynomial `p` in ascending degree
/// order, applied entrywise.
///
/// Unlike [`decode`], this fails with [`Error::RecoveryThreshold`] when too
/// few results survive.
pub fn lcc_roundtrip(
    data: &[Array2<f64>],
    coeffs: &[f64],
    n: usize,
    pattern: &StragglerPattern,
    config: &LccConfig,
) -> Result<LccOutcome> {
    let k = data.len();
    if k == 0 {
        return Err(Error::EmptyInput("data"));
    }
    if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter(
            "polynomial coefficients must be nonempty and finite".into(),
        ));
    }
    if pattern.n() != n {
        return Err(Error::InvalidParameter(format!(
            "pattern is over N={} but n={n}",
            pattern.n()
        )));
    }
    let deg = coeffs.len() - 1;
    let threshold = (k - 1) * deg + 1;

    let alphas = family_nodes(config.encode_kind, k)?;
    let alpha_of = |j: usize| alphas.points()[k - 1 - j];

    // Degree K-1 data polynomial in barycentric form.
    let mut ascending = data.to_vec();
    ascending.reverse();
    let u = Interpolant::new(
        alphas.clone(),
        SampleSet::from_matrices(ascending)?,
        Scheme::BarycentricPoly,
    )?;

    let betas = family_nodes(config.worker_kind, n + 1)?;
    // Worker i maps to descending position for the cosine family (matching
    // the rational scheme) and ascending position for equidistant.
    let beta_of = |i: usize| match config.worker_kind {
        NodeKind::ChebyshevSecond => betas.points()[n - i],
        _ => betas.points()[i],
    };

    let survivors = pattern.survivors();
    if survivors.len() < threshold {
        return Err(Error::RecoveryThreshold {
            needed: threshold,
            got: survivors.len(),
        });
    }

    let apply_poly = |m: &Array2<f64>| m.mapv(|v| horner(coeffs, v));
    let mut pairs: Vec<(f64, Array2<f64>)> = survivors
        .iter()
        .map(|&i| Ok((beta_of(i), apply_poly(&u.eval(beta_of(i))?))))
        .collect::<Result<_>>()?;
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    match config.decode {
        LccDecodeMethod::Barycentric => {
            let nodes: Vec<f64> = pairs.iter().map(|(b, _)| *b).collect();
            let values: Vec<Array2<f64>> = pairs.into_iter().map(|(_, v)| v).collect();
            let node_set = NodeSet::custom(nodes, (-1.0, 1.0))?;
            let weights = weights_general(&node_set)?;
            let ratio = weight_ratio(weights.weights());
            let g = Interpolant::new(
                node_set,
                SampleSet::from_matrices(values)?,
                Scheme::BarycentricPoly,
            )?;
            let outputs = (0..k).map(|j| g.eval(alpha_of(j))).collect::<Result<_>>()?;
            Ok(LccOutcome {
                outputs,
                weight_ratio: ratio,
                threshold,
            })
        }
        LccDecodeMethod::VandermondeSolve => {
            // Square system over the first `threshold` survivors.
            pairs.truncate(threshold);
            let t = threshold;
            let nodes: Vec<f64> = pairs.iter().map(|(b, _)| *b).collect();
            let node_set = NodeSet::custom(nodes.clone(), (-1.0, 1.0))?;
            let ratio = weight_ratio(weights_general(&node_set)?.weights());
            let shape = pairs[0].1.dim();
            let mut vander = vec![0.0f64; t * t];
            for (row, &b) in nodes.iter().enumerate() {
                let mut p = 1.0;
                for col in 0..t {
                    vander[row * t + col] = p;
                    p *= b;
                }
            }
            // One RHS per matrix entry.
            let mut rhs: Vec<Vec<f64>> = (0..shape.0 * shape.1)
                .map(|e| {
                    pairs
                        .iter()
                        .map(|(_, m)| m[(e / shape.1, e % shape.1)])
                        .collect()
                })
                .collect();
            solve_multi(&mut vander, t, &mut rhs)?;
            let outputs = (0..k)
                .map(|j| {
                    let a = alpha_of(j);
                    Array2::from_shape_fn(shape, |(r, c)| {
                        let coef = &rhs[r * shape.1 + c];
                        coef.iter().rev().fold(0.0, |acc, &v| acc * a + v)
                    })
                })
                .collect();
            Ok(LccOutcome {
                outputs,
                weight_ratio: ratio,
                threshold,
            })
        }
    }
}

fn weight_ratio(weights: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &w in weights {
        lo = lo.min(w.abs());
        hi = hi.max(w.abs());
    }
    hi / lo
}

/// Gaussian elimination with partial pivoting, shared coefficient matrix and
/// several right-hand sides. `a` is row-major `t x t` and is destroyed.
fn solve_multi(a: &mut [f64], t: usize, rhs: &mut [Vec<f64>]) -> Result<()> {
    for col in 0..t {
        let mut piv = col;
        let mut best = a[col * t + col].abs();
        for row in col + 1..t {
            let v = a[row * t + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 {
            return Err(Error::DegenerateNodes("singular decode system".into()));
        }
        if piv != col {
            for j in 0..t {
                a.swap(col * t + j, piv * t + j);
            }
            for r in rhs.iter_mut() {
                r.swap(col, piv);
            }
        }
        let d = a[col * t + col];
        for row in col + 1..t {
            let factor = a[row * t + col] / d;
            if factor == 0.0 {
                continue;
            }
            for j in col..t {
                a[row * t + j] -= factor * a[col * t + j];
            }
            for r in rhs.iter_mut() {
                r[row] -= factor * r[col];
            }
        }
    }
    for r in rhs.iter_mut() {
        for col in (0..t).rev() {
            let mut v = r[col];
            for j in col + 1..t {
                v -= a[col * t + j] * r[j];
            }
            r[col] = v / a[col * t + col];
        }
    }
    Ok(())
}
