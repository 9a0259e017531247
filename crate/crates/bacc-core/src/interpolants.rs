//! Interpolant evaluation for scalar- and matrix-valued samples.
//!
//! Four schemes share one contract: given nodes `x_i` and samples `f_i`, the
//! interpolant reproduces `f_i` at `x_i` and is evaluable at any real point.
//! All barycentric variants run in O(n) per point per matrix entry; the direct
//! Lagrange product form is kept as the O(n^2) baseline.

use ndarray::Array2;

use crate::pointsets::{weights_general, NodeSet, WeightVector};
use crate::{Error, Result};

/// Interpolation scheme.
#[derive(Clone, Debug)]
pub enum Scheme {
    /// Direct evaluation of the Lagrange basis products, O(n^2) per point.
    LagrangeDirect,
    /// Barycentric form of the same polynomial, weights
    /// `1/prod_{k != i}(x_i - x_k)` up to a common factor.
    BarycentricPoly,
    /// Barycentric rational interpolant with caller-chosen nonzero weights.
    BarycentricRational(WeightVector),
    /// Alternating-sign rational interpolant (`u_i = (-1)^i` by ascending
    /// node position): pole-free on the whole real line for any node set.
    Berrut,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::LagrangeDirect => "lagrange-direct",
            Scheme::BarycentricPoly => "barycentric-poly",
            Scheme::BarycentricRational(_) => "barycentric-rational",
            Scheme::Berrut => "berrut",
        }
    }
}

/// Matrix-valued samples aligned index-for-index with a node set. Scalars are
/// 1x1 matrices.
#[derive(Clone, Debug)]
pub struct SampleSet {
    values: Vec<Array2<f64>>,
}

impl SampleSet {
    pub fn from_matrices(values: Vec<Array2<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("sample set"));
        }
        let shape = values[0].dim();
        for (i, v) in values.iter().enumerate() {
            if v.dim() != shape {
                return Err(Error::ShapeMismatch(format!(
                    "sample {i} is {:?}, expected {:?}",
                    v.dim(),
                    shape
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteInput(format!("sample {i}")));
            }
        }
        Ok(SampleSet { values })
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_matrices(
            values
                .iter()
                .map(|&v| Array2::from_elem((1, 1), v))
                .collect(),
        )
    }

    pub fn values(&self) -> &[Array2<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values[0].dim()
    }
}

/// Nodes + samples + scheme, immutable after construction; `eval` is pure.
#[derive(Clone, Debug)]
pub struct Interpolant {
    nodes: NodeSet,
    samples: SampleSet,
    scheme: Scheme,
    /// Effective barycentric weights; `None` for the direct Lagrange path.
    weights: Option<Vec<f64>>,
}

fn alternating_signs(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect()
}

fn effective_weights(scheme: &Scheme, nodes: &NodeSet) -> Result<Option<Vec<f64>>> {
    match scheme {
        Scheme::LagrangeDirect => Ok(None),
        Scheme::BarycentricPoly => Ok(Some(weights_general(nodes)?.weights().to_vec())),
        Scheme::BarycentricRational(w) => {
            if w.len() != nodes.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} weights for {} nodes",
                    w.len(),
                    nodes.len()
                )));
            }
            Ok(Some(w.weights().to_vec()))
        }
        Scheme::Berrut => Ok(Some(alternating_signs(nodes.len()))),
    }
}

impl Interpolant {
    pub fn new(nodes: NodeSet, samples: SampleSet, scheme: Scheme) -> Result<Self> {
        if nodes.len() != samples.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} nodes but {} samples",
                nodes.len(),
                samples.len()
            )));
        }
        let weights = effective_weights(&scheme, &nodes)?;
        Ok(Interpolant {
            nodes,
            samples,
            scheme,
            weights,
        })
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    /// Value of the interpolant at `x`. Points within the coincidence
    /// tolerance of a node return that node's sample exactly.
    pub fn eval(&self, x: f64) -> Result<Array2<f64>> {
        if !x.is_finite() {
            return Err(Error::NonFiniteInput(format!("evaluation point {x}")));
        }
        if let Some(i) = self.nodes.coincident_index(x) {
            return Ok(self.samples.values()[i].clone());
        }
        let coeffs = match &self.weights {
            Some(w) => barycentric_basis_at(self.nodes.points(), w, x),
            None => lagrange_basis_at(self.nodes.points(), x),
        };
        let mut acc = Array2::<f64>::zeros(self.samples.shape());
        for (c, v) in coeffs.iter().zip(self.samples.values()) {
            acc.scaled_add(*c, v);
        }
        Ok(acc)
    }

    /// Scalar convenience for 1x1 samples.
    pub fn eval_scalar(&self, x: f64) -> Result<f64> {
        if self.samples.shape() != (1, 1) {
            return Err(Error::ShapeMismatch(format!(
                "eval_scalar needs 1x1 samples, got {:?}",
                self.samples.shape()
            )));
        }
        Ok(self.eval(x)?[(0, 0)])
    }
}

/// Basis coefficients `w_i/(x - x_i) / sum_j w_j/(x - x_j)` at an off-node
/// point.
fn barycentric_basis_at(pts: &[f64], weights: &[f64], x: f64) -> Vec<f64> {
    let mut terms: Vec<f64> = pts
        .iter()
        .zip(weights)
        .map(|(&xi, &wi)| wi / (x - xi))
        .collect();
    let denom: f64 = terms.iter().sum();
    for t in terms.iter_mut() {
        *t /= denom;
    }
    terms
}

/// Direct Lagrange cardinal values `prod_{k != i} (x - x_k)/(x_i - x_k)`.
fn lagrange_basis_at(pts: &[f64], x: f64) -> Vec<f64> {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let mut num = 1.0;
            let mut den = 1.0;
            for k in 0..n {
                if k != i {
                    num *= x - pts[k];
                    den *= pts[i] - pts[k];
                }
            }
            num / den
        })
        .collect()
}

/// All cardinal basis values of a scheme at `x` (exact 0/1 pattern at nodes).
pub fn basis_all(scheme: &Scheme, nodes: &NodeSet, x: f64) -> Result<Vec<f64>> {
    if !x.is_finite() {
        return Err(Error::NonFiniteInput(format!("evaluation point {x}")));
    }
    if let Some(i) = nodes.coincident_index(x) {
        let mut out = vec![0.0; nodes.len()];
        out[i] = 1.0;
        return Ok(out);
    }
    Ok(match effective_weights(scheme, nodes)? {
        Some(w) => barycentric_basis_at(nodes.points(), &w, x),
        None => lagrange_basis_at(nodes.points(), x),
    })
}

/// Cardinal value of basis function `i` at `x`.
pub fn basis(scheme: &Scheme, nodes: &NodeSet, i: usize, x: f64) -> Result<f64> {
    if i >= nodes.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: nodes.len(),
        });
    }
    Ok(basis_all(scheme, nodes, x)?[i])
}

/// The alternating-sign denominator `sum_j (-1)^j / (x - x_j)` over ascending
/// nodes. Its node-count-degree polynomial numerator has no real root, so this
/// sum is nonzero at every off-node real point.
pub fn berrut_denominator(nodes: &NodeSet, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFiniteInput(format!("evaluation point {x}")));
    }
    if let Some(index) = nodes.coincident_index(x) {
        return Err(Error::NodeCoincidence { x, index });
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for &xi in nodes.points() {
        sum += sign / (x - xi);
        sign = -sign;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn scalar_interp(nodes: Vec<f64>, vals: &[f64], scheme: Scheme) -> Interpolant {
        let (a, b) = (
            nodes.first().copied().unwrap().min(-1.0),
            nodes.last().copied().unwrap().max(1.0),
        );
        let ns = NodeSet::custom(nodes, (a, b)).unwrap();
        Interpolant::new(ns, SampleSet::from_scalars(vals).unwrap(), scheme).unwrap()
    }

    #[test]
    fn berrut_hand_value() {
        // nodes {-1,0,1}, values {1,0,1}: numerator 1/1.5 - 0 + 1/(-0.5),
        // denominator 1/1.5 - 1/0.5 + 1/(-0.5) => 0.4
        let p = scalar_interp(vec![-1.0, 0.0, 1.0], &[1.0, 0.0, 1.0], Scheme::Berrut);
        let v = p.eval_scalar(0.5).unwrap();
        assert!((v - 0.4).abs() <= 1e-15, "{v}");
    }

    #[test]
    fn constant_samples_reproduced_by_all_schemes() {
        let nodes = vec![-0.9, -0.3, 0.2, 0.7, 1.0];
        let vals = [3.25; 5];
        let w = WeightVector::new(vec![0.3, -1.2, 2.0, -0.5, 0.8]).unwrap();
        for scheme in [
            Scheme::LagrangeDirect,
            Scheme::BarycentricPoly,
            Scheme::BarycentricRational(w),
            Scheme::Berrut,
        ] {
            let p = scalar_interp(nodes.clone(), &vals, scheme);
            for x in [-0.75, 0.05, 0.44, 0.99] {
                let v = p.eval_scalar(x).unwrap();
                assert!((v - 3.25).abs() <= 1e-12, "{}: {v}", p.scheme().name());
            }
        }
    }

    #[test]
    fn eval_at_node_returns_sample_exactly() {
        let nodes = vec![-1.0, -0.2, 0.5, 1.0];
        let vals = [2.0, -7.0, 0.25, 9.0];
        for scheme in [
            Scheme::LagrangeDirect,
            Scheme::Berrut,
            Scheme::BarycentricPoly,
        ] {
            let p = scalar_interp(nodes.clone(), &vals, scheme);
            for (x, v) in nodes.iter().zip(vals) {
                assert_eq!(p.eval_scalar(*x).unwrap(), v);
            }
        }
    }

    #[test]
    fn eval_rejects_non_finite_point() {
        let p = scalar_interp(vec![-1.0, 1.0], &[0.0, 1.0], Scheme::Berrut);
        assert!(matches!(p.eval(f64::NAN), Err(Error::NonFiniteInput(_))));
        assert!(p.eval(f64::INFINITY).is_err());
    }

    #[test]
    fn berrut_denominator_hand_values() {
        let ns = NodeSet::custom(vec![-1.0, 0.0, 1.0], (-1.0, 1.0)).unwrap();
        let d = berrut_denominator(&ns, 0.5).unwrap();
        assert!((d - (-10.0 / 3.0)).abs() <= 1e-14, "{d}");
        let d = berrut_denominator(&ns, 2.0).unwrap();
        assert!((d - 5.0 / 6.0).abs() <= 1e-14, "{d}");

        let ns2 = NodeSet::custom(vec![-1.0, 1.0], (-1.0, 1.0)).unwrap();
        let d = berrut_denominator(&ns2, 0.0).unwrap();
        assert!((d - 2.0).abs() <= 1e-15);
    }

    #[test]
    fn berrut_denominator_rejects_node_point() {
        let ns = NodeSet::custom(vec![-1.0, 0.0, 1.0], (-1.0, 1.0)).unwrap();
        assert!(matches!(
            berrut_denominator(&ns, 1.0),
            Err(Error::NodeCoincidence { .. })
        ));
    }

    #[test]
    fn basis_cardinality_and_hand_value() {
        let ns = NodeSet::custom(vec![-1.0, 0.0, 1.0], (-1.0, 1.0)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let b = basis(&Scheme::Berrut, &ns, i, ns.points()[j]).unwrap();
                assert_eq!(b, if i == j { 1.0 } else { 0.0 });
            }
        }
        let b = basis(&Scheme::Berrut, &ns, 0, 0.5).unwrap();
        assert!((b - (-0.2)).abs() <= 1e-15, "{b}");
        assert!(basis(&Scheme::Berrut, &ns, 3, 0.5).is_err());
    }

    #[test]
    fn partition_of_unity_all_schemes() {
        let mut rng = StdRng::seed_from_u64(11);
        let nodes = NodeSet::chebyshev_second(12).unwrap();
        let w = WeightVector::new((0..13).map(|i| 0.2 + (i as f64 % 3.0)).collect()).unwrap();
        for scheme in [
            Scheme::LagrangeDirect,
            Scheme::BarycentricPoly,
            Scheme::BarycentricRational(w),
            Scheme::Berrut,
        ] {
            for _ in 0..201 {
                let x: f64 = rng.random_range(-1.0..1.0);
                let total: f64 = basis_all(&scheme, &nodes, x).unwrap().iter().sum();
                assert!(
                    (total - 1.0).abs() <= 1e-10,
                    "{} at {x}: {total}",
                    scheme.name()
                );
            }
        }
    }

    #[test]
    fn berrut_equals_rational_with_alternating_weights_bitwise() {
        let nodes = NodeSet::chebyshev_second(9).unwrap();
        let vals: Vec<f64> = (0..10).map(|i| ((i * 7 + 3) % 5) as f64 - 2.0).collect();
        let signs: Vec<f64> = (0..10)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let a = Interpolant::new(
            nodes.clone(),
            SampleSet::from_scalars(&vals).unwrap(),
            Scheme::Berrut,
        )
        .unwrap();
        let b = Interpolant::new(
            nodes,
            SampleSet::from_scalars(&vals).unwrap(),
            Scheme::BarycentricRational(WeightVector::new(signs).unwrap()),
        )
        .unwrap();
        for k in 0..50 {
            let x = -0.995 + 0.04 * k as f64;
            assert_eq!(a.eval_scalar(x).unwrap(), b.eval_scalar(x).unwrap());
        }
    }

    #[test]
    fn lagrange_direct_matches_barycentric_poly() {
        let mut rng = StdRng::seed_from_u64(4);
        for n in [2usize, 5, 10] {
            let nodes = NodeSet::chebyshev_second(n).unwrap();
            let vals: Vec<f64> = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lag = Interpolant::new(
                nodes.clone(),
                SampleSet::from_scalars(&vals).unwrap(),
                Scheme::LagrangeDirect,
            )
            .unwrap();
            let bar = Interpolant::new(
                nodes,
                SampleSet::from_scalars(&vals).unwrap(),
                Scheme::BarycentricPoly,
            )
            .unwrap();
            for k in 0..40 {
                let x = -0.98 + 0.05 * k as f64;
                let a = lag.eval_scalar(x).unwrap();
                let b = bar.eval_scalar(x).unwrap();
                assert!(
                    (a - b).abs() <= 1e-8 * a.abs().max(1.0),
                    "n={n} x={x}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn matrix_eval_is_entrywise_scalar_eval() {
        let mut rng = StdRng::seed_from_u64(99);
        let nodes = NodeSet::chebyshev_second(6).unwrap();
        let mats: Vec<Array2<f64>> = (0..7)
            .map(|_| Array2::from_shape_fn((2, 3), |_| rng.random_range(-2.0..2.0)))
            .collect();
        let m = Interpolant::new(
            nodes.clone(),
            SampleSet::from_matrices(mats.clone()).unwrap(),
            Scheme::Berrut,
        )
        .unwrap();
        for x in [-0.77, 0.13, 0.52] {
            let got = m.eval(x).unwrap();
            for r in 0..2 {
                for c in 0..3 {
                    let scalars: Vec<f64> = mats.iter().map(|v| v[(r, c)]).collect();
                    let s = Interpolant::new(
                        nodes.clone(),
                        SampleSet::from_scalars(&scalars).unwrap(),
                        Scheme::Berrut,
                    )
                    .unwrap();
                    let want = s.eval_scalar(x).unwrap();
                    assert!(
                        (got[(r, c)] - want).abs() <= 1e-12,
                        "entry ({r},{c}) at {x}"
                    );
                }
            }
        }
    }

    #[test]
    fn no_pole_on_random_node_sets_quick() {
        let mut rng = StdRng::seed_from_u64(2024);
        for _ in 0..10 {
            let n = rng.random_range(2..=50);
            let mut pts: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            pts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            let ns = NodeSet::custom(pts, (-1.0, 1.0)).unwrap();
            for k in 0..500 {
                let x = -1.0 + 2.0 * k as f64 / 499.0;
                match berrut_denominator(&ns, x) {
                    Ok(d) => assert!(d != 0.0 && !d.is_nan()),
                    Err(Error::NodeCoincidence { .. }) => {}
                    Err(e) => panic!("unexpected error: {e}"),
                }
            }
        }
    }

    #[test]
    fn rational_scheme_rejects_mismatched_weights() {
        let nodes = NodeSet::chebyshev_second(4).unwrap();
        let w = WeightVector::new(vec![1.0, -1.0]).unwrap();
        let r = Interpolant::new(
            nodes,
            SampleSet::from_scalars(&[0.0; 5]).unwrap(),
            Scheme::BarycentricRational(w),
        );
        assert!(matches!(r, Err(Error::ShapeMismatch(_))));
    }
}
