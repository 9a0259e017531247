//! Interpolation node families and barycentric weights.
//!
//! Nodes are always stored strictly ascending. Cosine-spaced families are
//! generated through an equivalent sine form so that symmetric points come out
//! as exact floating-point negatives of each other and an even-count midpoint
//! is exactly zero.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Two nodes closer than this fraction of the interval span are rejected as
/// duplicates.
pub const DUPLICATE_TOL: f64 = 1e-12;

/// Evaluation points within `1e-13 * max(1, |x_i|)` of a node are treated as
/// the node itself (interpolation condition applies exactly).
pub const COINCIDENCE_TOL: f64 = 1e-13;

/// Provenance tag for a node set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    ChebyshevFirst,
    ChebyshevSecond,
    Equidistant,
    Custom,
}

impl NodeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeKind::ChebyshevFirst => "chebyshev-first",
            NodeKind::ChebyshevSecond => "chebyshev-second",
            NodeKind::Equidistant => "equidistant",
            NodeKind::Custom => "custom",
        }
    }
}

/// An ordered set of distinct interpolation abscissae on an interval.
#[derive(Clone, Debug)]
pub struct NodeSet {
    points: Vec<f64>,
    interval: (f64, f64),
    kind: NodeKind,
}

/// Abscissa assigned to worker `i` out of `n + 1` workers: `cos(i*pi/n)`,
/// computed as `sin((n-2i)*pi/(2n))` so that mirrored indices give exact
/// negatives.
pub fn worker_abscissa(n: usize, i: usize) -> f64 {
    debug_assert!(n >= 1 && i <= n);
    let num = n as i64 - 2 * i as i64;
    (num as f64 * PI / (2.0 * n as f64)).sin()
}

impl NodeSet {
    /// `k` Chebyshev points of the first kind, `cos((2j+1)*pi/(2k))`, sorted
    /// ascending. These are the encoding anchors of the coded-computing
    /// scheme; they lie strictly inside `(-1, 1)`.
    pub fn chebyshev_first(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "chebyshev_first needs k >= 1".into(),
            ));
        }
        // cos((2j+1)pi/2k) = sin((k-2j-1)pi/2k); ascending index p = k-1-j.
        let points = (0..k)
            .map(|p| {
                let num = 2 * p as i64 + 1 - k as i64;
                (num as f64 * PI / (2.0 * k as f64)).sin()
            })
            .collect();
        Ok(NodeSet {
            points,
            interval: (-1.0, 1.0),
            kind: NodeKind::ChebyshevFirst,
        })
    }

    /// The `n + 1` Chebyshev points of the second kind, `cos(i*pi/n)`, sorted
    /// ascending. These are the worker abscissae.
    pub fn chebyshev_second(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "chebyshev_second needs n >= 1".into(),
            ));
        }
        // Ascending index j corresponds to worker index n - j.
        let points = (0..=n).map(|j| worker_abscissa(n, n - j)).collect();
        Ok(NodeSet {
            points,
            interval: (-1.0, 1.0),
            kind: NodeKind::ChebyshevSecond,
        })
    }

    /// `n + 1` evenly spaced points from `a` to `b` inclusive.
    pub fn equidistant(n: usize, a: f64, b: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("equidistant needs n >= 1".into()));
        }
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidInterval { a, b });
        }
        let points = (0..=n)
            .map(|i| {
                if i == 0 {
                    a
                } else if i == n {
                    b
                } else {
                    a + (b - a) * (i as f64 / n as f64)
                }
            })
            .collect();
        Ok(NodeSet {
            points,
            interval: (a, b),
            kind: NodeKind::Equidistant,
        })
    }

    /// A caller-supplied node set. Points must be strictly ascending (gaps
    /// above `DUPLICATE_TOL` times the interval span) and lie within the
    /// interval.
    pub fn custom(points: Vec<f64>, interval: (f64, f64)) -> Result<Self> {
        let (a, b) = interval;
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidInterval { a, b });
        }
        if points.is_empty() {
            return Err(Error::EmptyInput("custom node set"));
        }
        let span = b - a;
        for (i, &p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFiniteInput(format!("node {i}")));
            }
            if p < a || p > b {
                return Err(Error::DegenerateNodes(format!(
                    "node {i} = {p} outside [{a}, {b}]"
                )));
            }
            if i > 0 && p - points[i - 1] < DUPLICATE_TOL * span {
                return Err(Error::DegenerateNodes(format!(
                    "nodes {} and {i} closer than {:e} * span",
                    i - 1,
                    DUPLICATE_TOL
                )));
            }
        }
        Ok(NodeSet {
            points,
            interval,
            kind: NodeKind::Custom,
        })
    }

    /// Node set formed by the abscissae of the given worker indices (distinct,
    /// each `<= n`), sorted ascending on `[-1, 1]`.
    pub fn from_workers(n: usize, workers: &[usize]) -> Result<Self> {
        if workers.is_empty() {
            return Err(Error::EmptyInput("worker index set"));
        }
        let mut sorted: Vec<usize> = workers.to_vec();
        sorted.sort_unstable();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::InvalidParameter(format!(
                    "duplicate worker index {}",
                    pair[0]
                )));
            }
        }
        if *sorted.last().unwrap() > n {
            return Err(Error::IndexOutOfRange {
                index: *sorted.last().unwrap(),
                len: n + 1,
            });
        }
        // Worker index ascending means abscissa descending.
        let points = sorted
            .iter()
            .rev()
            .map(|&i| worker_abscissa(n, i))
            .collect();
        Ok(NodeSet {
            points,
            interval: (-1.0, 1.0),
            kind: NodeKind::Custom,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn span(&self) -> f64 {
        self.interval.1 - self.interval.0
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    /// Index of the node that `x` coincides with (within `COINCIDENCE_TOL`),
    /// if any.
    pub fn coincident_index(&self, x: f64) -> Option<usize> {
        let pts = &self.points;
        let i = pts.partition_point(|&p| p < x);
        for cand in [i.wrapping_sub(1), i] {
            if let Some(&p) = pts.get(cand) {
                if (x - p).abs() <= COINCIDENCE_TOL * p.abs().max(1.0) {
                    return Some(cand);
                }
            }
        }
        None
    }
}

/// Barycentric weights, one per node, defined up to a single global nonzero
/// factor (any common factor cancels between numerator and denominator of the
/// barycentric form, so each constructor is free to normalize).
#[derive(Clone, Debug)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyInput("weight vector"));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w == 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "weight {i} must be finite and nonzero, got {w}"
                )));
            }
        }
        Ok(WeightVector { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// General barycentric weights `w_i = 1 / prod_{k != i} (x_i - x_k)`.
///
/// Each factor is divided by the interval span and the running product is
/// renormalized by powers of two, so intermediate values stay representable;
/// the result is scaled so the largest magnitude is 1 (the dropped common
/// factor is irrelevant in barycentric evaluation).
pub fn weights_general(nodes: &NodeSet) -> Result<WeightVector> {
    let pts = nodes.points();
    let n = pts.len();
    if n == 1 {
        return WeightVector::new(vec![1.0]);
    }
    let span = nodes.span();
    const BLOCK: f64 = 1.3407807929942597e154; // 2^512
    const INV_BLOCK: f64 = 7.458340731200207e-155; // 2^-512

    // For each node: sign, mantissa in (2^-512, 1], and count of 2^-512 blocks
    // factored out of the product of span-scaled gaps.
    let mut sign = vec![1.0f64; n];
    let mut log2_mag = vec![0.0f64; n]; // log2 of |w_i| (up to the common span factor)
    for i in 0..n {
        let mut s = 1.0f64;
        let mut mant = 1.0f64;
        let mut blocks = 0i64;
        for k in 0..n {
            if k == i {
                continue;
            }
            let f = (pts[i] - pts[k]) / span;
            if f < 0.0 {
                s = -s;
            }
            mant *= f.abs();
            if mant < INV_BLOCK {
                mant *= BLOCK;
                blocks += 1;
            }
        }
        if mant == 0.0 {
            return Err(Error::DegenerateNodes(
                "weight product underflowed to zero".into(),
            ));
        }
        sign[i] = s;
        // |w_i| = (1/mant) * 2^(512*blocks)
        log2_mag[i] = 512.0 * blocks as f64 - mant.log2();
    }
    let max_log = log2_mag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = (0..n)
        .map(|i| sign[i] * (log2_mag[i] - max_log).exp2())
        .collect();
    if weights.contains(&0.0) {
        return Err(Error::DegenerateNodes(
            "weight dynamic range exceeds f64".into(),
        ));
    }
    WeightVector::new(weights)
}

/// Closed-form barycentric weights for the three standard families with
/// `n + 1` nodes (`n` is the polynomial degree).
///
/// Weights are listed in ascending node order with sign `(-1)^position`; this
/// differs from the descending-order closed forms by at most a global sign,
/// which cancels in evaluation. Equidistant binomial weights are normalized by
/// their maximum (computed in log space) so they stay representable for large
/// `n`.
pub fn weights_explicit(kind: NodeKind, n: usize) -> Result<WeightVector> {
    let count = n + 1;
    let sign = |p: usize| if p.is_multiple_of(2) { 1.0 } else { -1.0 };
    let weights: Vec<f64> = match kind {
        NodeKind::ChebyshevFirst => (0..count)
            .map(|p| {
                // Node at ascending position p is cos((2(n-p)+1)pi/(2n+2));
                // its weight magnitude is the matching sine.
                let j = n - p;
                sign(p) * ((2 * j + 1) as f64 * PI / (2.0 * count as f64)).sin()
            })
            .collect(),
        NodeKind::ChebyshevSecond => (0..count)
            .map(|p| {
                let delta = if p == 0 || p == n { 0.5 } else { 1.0 };
                sign(p) * delta
            })
            .collect(),
        NodeKind::Equidistant => {
            // ln binom(n, p) via the ratio recurrence, normalized by the max.
            let mut ln_binom = vec![0.0f64; count];
            for p in 1..count {
                ln_binom[p] = ln_binom[p - 1] + ((n - p + 1) as f64 / p as f64).ln();
            }
            let max = ln_binom.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (0..count)
                .map(|p| sign(p) * (ln_binom[p] - max).exp())
                .collect()
        }
        NodeKind::Custom => return Err(Error::UnsupportedKind("custom")),
    };
    WeightVector::new(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SQRT2_OVER_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn chebyshev_first_small_cases() {
        let k1 = NodeSet::chebyshev_first(1).unwrap();
        assert_eq!(k1.points(), &[0.0]);

        let k2 = NodeSet::chebyshev_first(2).unwrap();
        assert_close(k2.points()[0], -SQRT2_OVER_2, 1e-15);
        assert_close(k2.points()[1], SQRT2_OVER_2, 1e-15);

        let k4 = NodeSet::chebyshev_first(4).unwrap();
        let expect = [
            -(7.0 * PI / 8.0).cos().abs(),
            -(5.0 * PI / 8.0).cos().abs(),
            (3.0 * PI / 8.0).cos(),
            (PI / 8.0).cos(),
        ];
        for (p, e) in k4.points().iter().zip(expect) {
            assert_close(*p, e, 1e-15);
        }
        assert_close(k4.points()[3], 0.92388, 1e-5);
        assert_close(k4.points()[2], 0.38268, 1e-5);
    }

    #[test]
    fn chebyshev_first_rejects_zero() {
        assert!(matches!(
            NodeSet::chebyshev_first(0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn chebyshev_second_small_cases() {
        let n1 = NodeSet::chebyshev_second(1).unwrap();
        assert_eq!(n1.points(), &[-1.0, 1.0]);

        let n2 = NodeSet::chebyshev_second(2).unwrap();
        assert_eq!(n2.points(), &[-1.0, 0.0, 1.0]);

        let n4 = NodeSet::chebyshev_second(4).unwrap();
        assert_eq!(n4.len(), 5);
        assert_close(n4.points()[1], -SQRT2_OVER_2, 1e-15);
        assert_eq!(n4.points()[2], 0.0);
    }

    #[test]
    fn chebyshev_second_symmetry_is_exact() {
        for n in [1usize, 2, 7, 40, 131] {
            let ns = NodeSet::chebyshev_second(n).unwrap();
            let pts = ns.points();
            for i in 0..=n {
                assert!(
                    (pts[i] + pts[n - i]).abs() <= 1e-15,
                    "n={n} i={i}: {} vs {}",
                    pts[i],
                    pts[n - i]
                );
            }
        }
    }

    #[test]
    fn chebyshev_second_rejects_zero() {
        assert!(NodeSet::chebyshev_second(0).is_err());
    }

    #[test]
    fn equidistant_small_cases() {
        let e = NodeSet::equidistant(2, -1.0, 1.0).unwrap();
        assert_eq!(e.points(), &[-1.0, 0.0, 1.0]);
        let e = NodeSet::equidistant(1, 0.0, 1.0).unwrap();
        assert_eq!(e.points(), &[0.0, 1.0]);
        let e = NodeSet::equidistant(4, -1.0, 1.0).unwrap();
        assert_eq!(e.points(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn equidistant_rejects_bad_interval() {
        assert!(matches!(
            NodeSet::equidistant(3, 1.0, 1.0),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(NodeSet::equidistant(3, 2.0, -1.0).is_err());
    }

    #[test]
    fn custom_rejects_duplicates() {
        let err = NodeSet::custom(vec![0.0, 0.0, 1.0], (-1.0, 1.0));
        assert!(matches!(err, Err(Error::DegenerateNodes(_))));
        let err = NodeSet::custom(vec![0.0, 1e-15, 1.0], (-1.0, 1.0));
        assert!(matches!(err, Err(Error::DegenerateNodes(_))));
    }

    #[test]
    fn custom_rejects_out_of_interval() {
        assert!(NodeSet::custom(vec![0.0, 2.0], (-1.0, 1.0)).is_err());
    }

    #[test]
    fn from_workers_orders_descending_indices_ascending() {
        let ns = NodeSet::from_workers(4, &[0, 2, 4]).unwrap();
        // workers 0, 2, 4 have abscissae 1, 0, -1
        assert_eq!(ns.points(), &[-1.0, 0.0, 1.0]);
        assert!(NodeSet::from_workers(4, &[1, 1]).is_err());
        assert!(NodeSet::from_workers(4, &[5]).is_err());
    }

    #[test]
    fn coincidence_detection() {
        let ns = NodeSet::chebyshev_second(4).unwrap();
        assert_eq!(ns.coincident_index(0.0), Some(2));
        assert_eq!(ns.coincident_index(1.0 - 1e-14), Some(4));
        assert_eq!(ns.coincident_index(0.5), None);
    }

    #[test]
    fn weights_general_hand_cases() {
        let ns = NodeSet::custom(vec![-1.0, 0.0, 1.0], (-1.0, 1.0)).unwrap();
        let w = weights_general(&ns).unwrap();
        // 1/prod gives {1/2, -1, 1/2}; normalization by the max keeps it.
        assert_close(w.weights()[0], 0.5, 1e-12);
        assert_close(w.weights()[1], -1.0, 1e-12);
        assert_close(w.weights()[2], 0.5, 1e-12);

        let ns = NodeSet::custom(vec![0.0, 1.0], (0.0, 1.0)).unwrap();
        let w = weights_general(&ns).unwrap();
        assert_close(w.weights()[0], -1.0, 1e-12);
        assert_close(w.weights()[1], 1.0, 1e-12);
    }

    #[test]
    fn weights_general_two_nodes_antisymmetric() {
        for (a, b) in [(-0.3, 0.9), (2.0, 7.5), (-5.0, -1.0)] {
            let ns = NodeSet::custom(vec![a, b], (a, b)).unwrap();
            let w = weights_general(&ns).unwrap();
            assert_close(w.weights()[0], -w.weights()[1], 1e-15);
        }
    }

    #[test]
    fn weights_explicit_hand_cases() {
        let w = weights_explicit(NodeKind::ChebyshevSecond, 2).unwrap();
        assert_eq!(w.weights(), &[0.5, -1.0, 0.5]);

        let w = weights_explicit(NodeKind::Equidistant, 2).unwrap();
        // proportional to {1, -2, 1}
        let r = w.weights()[1] / w.weights()[0];
        assert_close(r, -2.0, 1e-12);
        let r = w.weights()[2] / w.weights()[0];
        assert_close(r, 1.0, 1e-12);

        let w = weights_explicit(NodeKind::ChebyshevFirst, 1).unwrap();
        assert_close(w.weights()[0], SQRT2_OVER_2, 1e-15);
        assert_close(w.weights()[1], -SQRT2_OVER_2, 1e-15);
    }

    #[test]
    fn weights_explicit_rejects_custom() {
        assert!(matches!(
            weights_explicit(NodeKind::Custom, 3),
            Err(Error::UnsupportedKind(_))
        ));
    }

    #[test]
    fn equidistant_weights_stay_representable_for_large_n() {
        let w = weights_explicit(NodeKind::Equidistant, 300).unwrap();
        for &v in w.weights() {
            assert!(v.is_finite() && v != 0.0 && v.abs() <= 1.0);
        }
    }

    #[test]
    fn explicit_and_general_weights_agree_up_to_scalar() {
        for n in 1..=20usize {
            for kind in [NodeKind::ChebyshevSecond, NodeKind::Equidistant] {
                let nodes = match kind {
                    NodeKind::ChebyshevSecond => NodeSet::chebyshev_second(n).unwrap(),
                    _ => NodeSet::equidistant(n, -1.0, 1.0).unwrap(),
                };
                let wg = weights_general(&nodes).unwrap();
                let we = weights_explicit(kind, n).unwrap();
                let r0 = we.weights()[0] / wg.weights()[0];
                for (a, b) in we.weights().iter().zip(wg.weights()) {
                    let r = a / b;
                    assert!(
                        ((r - r0) / r0).abs() <= 1e-9,
                        "{kind:?} n={n}: ratio {r} vs {r0}"
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn general_weight_signs_alternate(raw in proptest::collection::vec(-1.0f64..1.0, 2..30)) {
            let mut pts = raw.clone();
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            pts.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            prop_assume!(pts.len() >= 2);
            let ns = NodeSet::custom(pts, (-1.0, 1.0)).unwrap();
            let w = weights_general(&ns).unwrap();
            for pair in w.weights().windows(2) {
                prop_assert!(pair[0] * pair[1] < 0.0, "signs must alternate: {pair:?}");
            }
        }
    }
}
