//! Local holonomy at a zero-section point: curvature operators over all
//! basis 2-planes as skew matrices in the weighted orthonormal split frame,
//! and the dimension of their Lie-algebra span by bracket closure.
//!
//! Rank decisions use singular values with a relative cutoff of 1e-8; the
//! closure report carries the smallest retained and largest discarded
//! values so borderline cases stay auditable.

use nalgebra::{DMatrix, DVector};

use crate::bundle::{lambda2_bundle, lambda2_frame_matrices, BundleSign};
use crate::chart::{model_chart, BaseChart, ChartKind};
use crate::curvature::ZeroSectionData;
use crate::par;
use crate::scenario::Scene;
use crate::total::SplitVector;
use crate::weights::WeightProfile;
use crate::{Error, Result};

const RANK_CUTOFF_REL: f64 = 1e-8;

/// Element of the orthogonal Lie algebra at a zero-section point, in the
/// weighted orthonormal split frame.
#[derive(Debug, Clone)]
pub struct SkewOperator {
    pub matrix: DMatrix<f64>,
}

impl SkewOperator {
    pub fn skew_residual(&self) -> f64 {
        crate::numerics::max_abs(&(&self.matrix + self.matrix.transpose()))
    }

    fn bracket(&self, other: &SkewOperator) -> DMatrix<f64> {
        &self.matrix * &other.matrix - &other.matrix * &self.matrix
    }
}

#[derive(Debug, Clone)]
pub struct HolonomyResult {
    pub dimension: usize,
    /// Orthonormal basis of the closure under the trace inner product.
    pub basis: Vec<SkewOperator>,
    pub closure_rounds: usize,
    pub classification: String,
    pub smallest_retained_sv: f64,
    pub largest_discarded_sv: f64,
}

impl HolonomyResult {
    /// Ratio between the smallest retained and largest discarded singular
    /// value; infinite when nothing was discarded.
    pub fn singular_value_margin(&self) -> f64 {
        if self.largest_discarded_sv == 0.0 {
            f64::INFINITY
        } else {
            self.smallest_retained_sv / self.largest_discarded_sv
        }
    }
}

/// Curvature generators `R(b_P, b_Q)` over all unweighted split-frame
/// 2-planes: m(m-1)/2 horizontal pairs, m k mixed pairs, k(k-1)/2 vertical
/// pairs. Matrices are expressed in the weighted orthonormal frame.
pub fn curvature_generators(scene: &Scene, x: &[f64]) -> Result<Vec<SkewOperator>> {
    let data = ZeroSectionData::new(scene, x)?;
    let (m, k) = (scene.m(), scene.k());
    let frame = scene.chart.frame(x);
    let basis = split_frame_basis(&frame, m, k);
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for p in 0..m {
        for q in (p + 1)..m {
            pairs.push((p, q));
        }
    }
    for p in 0..m {
        for alpha in 0..k {
            pairs.push((p, m + alpha));
        }
    }
    for alpha in 0..k {
        for beta in (alpha + 1)..k {
            pairs.push((m + alpha, m + beta));
        }
    }
    let gens = par::map_batch(&pairs, |(p, q)| {
        generator_for(&data, &basis, scene, &basis[*p], &basis[*q])
    });
    Ok(gens)
}

fn split_frame_basis(frame: &DMatrix<f64>, m: usize, k: usize) -> Vec<SplitVector> {
    (0..m + k)
        .map(|a| {
            if a < m {
                SplitVector::horizontal(frame.column(a).clone_owned(), k)
            } else {
                let mut v = DVector::zeros(k);
                v[a - m] = 1.0;
                SplitVector::vertical(m, v)
            }
        })
        .collect()
}

/// Operator matrix of `R(X, Y)` in the weighted orthonormal frame:
/// `M_AB = R(X, Y, E_B, E_A) / (w_A w_B)` with `w = e^{phi1}` or
/// `e^{phi2}` per block.
fn generator_for(
    data: &ZeroSectionData,
    basis: &[SplitVector],
    scene: &Scene,
    x: &SplitVector,
    y: &SplitVector,
) -> SkewOperator {
    let (m, k) = (scene.m(), scene.k());
    let n = m + k;
    let e1s = data.e1.sqrt();
    let e2s = data.e2.sqrt();
    let weight = |a: usize| if a < m { e1s } else { e2s };
    let mut mat = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let v = data.value(x, y, &basis[b], &basis[a]) / (weight(a) * weight(b));
            mat[(a, b)] = v;
        }
    }
    SkewOperator { matrix: mat }
}

fn vectorize(ops: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n2 = ops[0].nrows() * ops[0].ncols();
    let mut stacked = DMatrix::zeros(ops.len(), n2);
    for (r, op) in ops.iter().enumerate() {
        for (c, v) in op.iter().enumerate() {
            stacked[(r, c)] = *v;
        }
    }
    stacked
}

/// Rank and orthonormal row-space basis of a stack of vectorized operators.
///
/// Rank and basis come from Householder QR with column pivoting of the
/// transpose (backward stable; the pivoted R diagonal is the standard
/// rank-revealing singular-value estimate, non-increasing by construction).
/// The retained singular values for the margin report are then recomputed
/// exactly on the projected block, whose Gram matrix is far from the noise
/// floor once the null space is gone.
fn svd_span(stacked: &DMatrix<f64>) -> (usize, Vec<DVector<f64>>, f64, f64) {
    let at = stacked.transpose();
    let qr = at.col_piv_qr();
    let q = qr.q();
    let r = qr.r();
    let kmax = q.ncols().min(r.nrows());
    let diag: Vec<f64> = (0..kmax).map(|i| r[(i, i)].abs()).collect();
    let dmax = diag.iter().fold(0.0_f64, |a, &b| a.max(b));
    if dmax == 0.0 {
        return (0, Vec::new(), 0.0, 0.0);
    }
    let cutoff = RANK_CUTOFF_REL * dmax;
    let rank = diag.iter().take_while(|&&d| d >= cutoff).count();
    let largest_drop = diag.iter().skip(rank).fold(0.0_f64, |a, &b| a.max(b));
    let basis: Vec<DVector<f64>> = (0..rank).map(|c| q.column(c).clone_owned()).collect();

    // exact nonzero singular values: eigenvalues of the projected Gram
    let mut coeffs = DMatrix::<f64>::zeros(stacked.nrows(), rank);
    for (c, b) in basis.iter().enumerate() {
        let col = stacked * b;
        coeffs.set_column(c, &col);
    }
    let gram = coeffs.transpose() * &coeffs;
    let eig = gram.symmetric_eigen();
    let smallest_kept = eig
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b.max(0.0).sqrt()));
    (rank, basis, smallest_kept, largest_drop)
}

/// Dimension of the linear span of a set of operators (no brackets).
pub fn span_dimension(ops: &[SkewOperator]) -> usize {
    if ops.is_empty() {
        return 0;
    }
    let mats: Vec<DMatrix<f64>> = ops.iter().map(|o| o.matrix.clone()).collect();
    svd_span(&vectorize(&mats)).0
}

/// Bracket-close the span of the generators and classify by dimension.
pub fn lie_closure(generators: &[SkewOperator]) -> Result<HolonomyResult> {
    if generators.is_empty() {
        return Err(Error::InvalidParameter("need at least one generator".into()));
    }
    let n = generators[0].matrix.nrows();
    for g in generators {
        if g.skew_residual() > 1e-12 * crate::numerics::max_abs(&g.matrix).max(1.0) {
            return Err(Error::Numerical(format!(
                "generator not skew (residual {})",
                g.skew_residual()
            )));
        }
    }
    let max_dim = n * (n - 1) / 2;
    let mats: Vec<DMatrix<f64>> = generators.iter().map(|g| g.matrix.clone()).collect();
    let (mut rank, mut basis_vecs, mut smallest, mut largest) = svd_span(&vectorize(&mats));
    if rank == 0 {
        return Ok(HolonomyResult {
            dimension: 0,
            basis: Vec::new(),
            closure_rounds: 0,
            classification: classify(n, 0),
            smallest_retained_sv: smallest.max(0.0),
            largest_discarded_sv: largest,
        });
    }
    let mut rounds = 0;
    loop {
        rounds += 1;
        if rounds > max_dim + 1 {
            return Err(Error::Numerical(format!(
                "bracket closure failed to stabilize after {rounds} rounds"
            )));
        }
        let basis_mats: Vec<SkewOperator> = basis_vecs
            .iter()
            .map(|v| SkewOperator { matrix: devectorize(v, n) })
            .collect();
        // all pairwise brackets of the current basis
        let mut pairs = Vec::new();
        for i in 0..basis_mats.len() {
            for j in (i + 1)..basis_mats.len() {
                pairs.push((i, j));
            }
        }
        let brackets: Vec<DMatrix<f64>> = par::map_batch(&pairs, |(i, j)| {
            basis_mats[*i].bracket(&basis_mats[*j])
        });
        let mut all: Vec<DMatrix<f64>> =
            basis_mats.iter().map(|b| b.matrix.clone()).collect();
        all.extend(brackets);
        let (new_rank, new_basis, small, large) = svd_span(&vectorize(&all));
        let grew = new_rank > rank;
        rank = new_rank;
        basis_vecs = new_basis;
        smallest = small;
        largest = large;
        if !grew {
            break;
        }
    }
    let basis: Vec<SkewOperator> = basis_vecs
        .iter()
        .map(|v| SkewOperator { matrix: devectorize(v, n) })
        .collect();
    let classification = classify(n, rank);
    Ok(HolonomyResult {
        dimension: rank,
        basis,
        closure_rounds: rounds,
        classification,
        smallest_retained_sv: smallest,
        largest_discarded_sv: largest,
    })
}

fn devectorize(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    // inverse of vectorize: nalgebra iterates matrices column-major
    let mut m = DMatrix::zeros(n, n);
    for (c, val) in v.iter().enumerate() {
        m[(c % n, c / n)] = *val;
    }
    m
}

fn classify(n: usize, dim: usize) -> String {
    if dim == n * (n - 1) / 2 {
        format!("so({n})")
    } else if n == 7 && dim == 14 {
        "g2-dimension".into()
    } else if n == 7 && dim == 3 {
        "su(2)-dimension".into()
    } else {
        format!("dim={dim}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum G2Base {
    Sphere4,
    Hyperbolic4,
}

/// Holonomy report for the G2 scenarios, with the proof-decomposition
/// subspace dimensions and the Gram ranks of the four mixed families.
#[derive(Debug, Clone)]
pub struct G2Report {
    pub holonomy: HolonomyResult,
    /// (bundle-chirality diagonal, opposite-chirality diagonal, mixed)
    pub subspace_dims: (usize, usize, usize),
    /// Rank of the 3x3 Gram matrix of each mixed generator family.
    pub family_ranks: Vec<usize>,
    pub s: f64,
}

/// Proof-decomposition report for a Lambda^2 scene at a zero-section point:
/// the spans of the bundle-chirality diagonal operators (lifted 2-vectors
/// plus vertical pairs), the opposite-chirality diagonal operators, and the
/// mixed operators, with the Gram ranks of the mixed families.
pub fn lambda2_subspaces(
    scene: &Scene,
    sign: BundleSign,
    x: &[f64],
) -> Result<((usize, usize, usize), Vec<usize>)> {
    let data = ZeroSectionData::new(scene, x)?;
    let (m, k) = (scene.m(), scene.k());
    if m != 4 || k != 3 {
        return Err(Error::InvalidParameter(
            "subspace report needs a lambda2 scenario (m = 4, k = 3)".into(),
        ));
    }
    let frame = scene.chart.frame(x);
    let basis = split_frame_basis(&frame, m, k);
    let gen = |p: usize, q: usize| generator_for(&data, &basis, scene, &basis[p], &basis[q]);

    let two_vector_ops = |sig: BundleSign| -> Vec<SkewOperator> {
        let mats = lambda2_frame_matrices(sig);
        mats.iter()
            .map(|mat| {
                // R applied to the lifted 2-vector: sum of simple-pair
                // generators weighted by the 2-form coefficients
                let n = m + k;
                let mut acc = DMatrix::zeros(n, n);
                for a in 0..4 {
                    for b in (a + 1)..4 {
                        if mat[(a, b)] != 0.0 {
                            acc += gen(a, b).matrix * mat[(a, b)];
                        }
                    }
                }
                SkewOperator { matrix: acc }
            })
            .collect()
    };
    let opposite = match sign {
        BundleSign::Plus => BundleSign::Minus,
        BundleSign::Minus => BundleSign::Plus,
    };
    // bundle-chirality 2-vectors plus the vertical pair operators
    let mut diag_own = two_vector_ops(sign);
    for alpha in 0..k {
        for beta in (alpha + 1)..k {
            diag_own.push(gen(m + alpha, m + beta));
        }
    }
    let diag_opp = two_vector_ops(opposite);
    let mixed: Vec<SkewOperator> = (0..m)
        .flat_map(|a| (0..k).map(move |i| (a, i)))
        .map(|(a, i)| gen(a, m + i))
        .collect();

    let dims = (
        span_dimension(&diag_own),
        span_dimension(&diag_opp),
        span_dimension(&mixed),
    );
    let family_ranks = mixed_family_ranks(&mixed, m, k);
    Ok((dims, family_ranks))
}

/// Build the Bryant-Salamon scene on `Lambda^2_- T* S^4` (s > 0) or
/// `Lambda^2_+ T* H^4` (s < 0, inside the disk bundle) and run the closure
/// at the chart origin.
pub fn g2_scenario(base: G2Base, c0: f64, c1: f64) -> Result<G2Report> {
    let (chart, sign) = match base {
        G2Base::Sphere4 => (model_chart(ChartKind::Sphere { curv: 1.0 }, 4)?, BundleSign::Minus),
        G2Base::Hyperbolic4 => {
            (model_chart(ChartKind::Hyperbolic { curv: 1.0 }, 4)?, BundleSign::Plus)
        }
    };
    let x = chart.origin();
    let s = chart.scalar(&x) / 12.0;
    let bundle = lambda2_bundle(&chart, sign)?;
    let weights = WeightProfile::bryant_salamon(c0, c1, s)?;
    let scene = Scene::new(chart, bundle, weights);

    let generators = curvature_generators(&scene, &x)?;
    let holonomy = lie_closure(&generators)?;
    let (subspace_dims, family_ranks) = lambda2_subspaces(&scene, sign, &x)?;

    Ok(G2Report { holonomy, subspace_dims, family_ranks, s })
}

fn mixed_family_ranks(mixed: &[SkewOperator], m: usize, k: usize) -> Vec<usize> {
    let tol = 1e-10;
    let support = |op: &SkewOperator| -> Vec<(usize, usize)> {
        let mut s = Vec::new();
        for a in 0..m {
            for i in 0..k {
                if op.matrix[(a, m + i)].abs() > tol {
                    s.push((a, i));
                }
            }
        }
        s
    };
    let mut families: Vec<(Vec<(usize, usize)>, Vec<usize>)> = Vec::new();
    for (idx, op) in mixed.iter().enumerate() {
        let sup = support(op);
        match families.iter_mut().find(|(fs, _)| *fs == sup) {
            Some((_, members)) => members.push(idx),
            None => families.push((sup, vec![idx])),
        }
    }
    families
        .iter()
        .map(|(_, members)| {
            let ops: Vec<SkewOperator> = members.iter().map(|&i| mixed[i].clone()).collect();
            // Gram-matrix rank equals the span dimension of the family
            let mats: Vec<DMatrix<f64>> = ops.iter().map(|o| o.matrix.clone()).collect();
            let stacked = vectorize(&mats);
            let gram = &stacked * stacked.transpose();
            let eig = gram.symmetric_eigen();
            let max_e = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
            eig.eigenvalues
                .iter()
                .filter(|&&e| e.abs() > RANK_CUTOFF_REL * max_e)
                .count()
        })
        .collect()
}

/// Flat-bundle holonomy scenario over a given chart.
pub fn flat_holonomy_scenario(
    chart: &BaseChart,
    k: usize,
    weights: &WeightProfile,
) -> Result<HolonomyResult> {
    let bundle = crate::bundle::trivial_bundle(chart, k)?;
    let scene = Scene::new(chart.clone(), bundle, weights.clone());
    let x = scene.chart.origin();
    let generators = curvature_generators(&scene, &x)?;
    lie_closure(&generators)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::trivial_bundle;
    use crate::numerics::max_abs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn elementary(n: usize, a: usize, b: usize) -> SkewOperator {
        let mut m = DMatrix::zeros(n, n);
        m[(a, b)] = 1.0;
        m[(b, a)] = -1.0;
        SkewOperator { matrix: m }
    }

    #[test]
    fn generators_vanish_on_fully_flat_data() {
        let chart = model_chart(ChartKind::Flat, 2).unwrap();
        let bundle = trivial_bundle(&chart, 2).unwrap();
        let scene = Scene::new(chart, bundle, WeightProfile::constant(0.1, -0.3));
        let gens = curvature_generators(&scene, &scene.chart.origin()).unwrap();
        assert_eq!(gens.len(), 6);
        for g in gens {
            assert!(max_abs(&g.matrix) < 1e-14);
        }
    }

    #[test]
    fn flat_bundle_mixed_generators_are_elementary_pattern() {
        // phi1'(0) != 0: the mixed generator for (d_i, e_alpha) is
        // proportional to the elementary matrix pairing slot i with slot
        // m + alpha
        let chart = model_chart(ChartKind::Flat, 2).unwrap();
        let bundle = trivial_bundle(&chart, 2).unwrap();
        let scene = Scene::new(chart, bundle, WeightProfile::poly(vec![0.0, 1.0], vec![0.0]));
        let gens = curvature_generators(&scene, &scene.chart.origin()).unwrap();
        // ordering: (0,1), (0,2), (0,3), (1,2), (1,3), (2,3)
        let mixed_idx = [1usize, 2, 3, 4];
        let pairs = [(0usize, 2usize), (0, 3), (1, 2), (1, 3)];
        for (&gi, &(a, b)) in mixed_idx.iter().zip(&pairs) {
            let g = &gens[gi].matrix;
            let scale = g[(a, b)];
            assert!(scale.abs() > 1e-12, "nonzero mixed generator");
            let expect = elementary(4, a, b).matrix * scale;
            assert!(max_abs(&(g.clone() - expect)) < 1e-12);
        }
        // horizontal and vertical pair generators vanish (flat base/bundle)
        assert!(max_abs(&gens[0].matrix) < 1e-14);
        assert!(max_abs(&gens[5].matrix) < 1e-14);
    }

    #[test]
    fn closure_of_single_rotation_is_one_dimensional() {
        let g = elementary(3, 0, 1);
        let res = lie_closure(&[g]).unwrap();
        assert_eq!(res.dimension, 1);
        assert_eq!(res.classification, "dim=1");
    }

    #[test]
    fn closure_recovers_so3_so3_inside_so4() {
        // seed with two generators of each chirality; brackets fill in the
        // missing third of each so(3) factor
        let mats = crate::bundle::lambda2_frame_matrices(BundleSign::Plus);
        let mats_m = crate::bundle::lambda2_frame_matrices(BundleSign::Minus);
        let gens = vec![
            SkewOperator { matrix: mats[0].clone() },
            SkewOperator { matrix: mats[1].clone() },
            SkewOperator { matrix: mats_m[0].clone() },
            SkewOperator { matrix: mats_m[1].clone() },
        ];
        let res = lie_closure(&gens).unwrap();
        assert_eq!(res.dimension, 6);
        assert_eq!(res.classification, "so(4)");

        // independent span oracle: the six explicit basis matrices
        let mut all: Vec<SkewOperator> = mats
            .iter()
            .chain(mats_m.iter())
            .map(|m| SkewOperator { matrix: m.clone() })
            .collect();
        assert_eq!(span_dimension(&all), 6);
        all.extend(res.basis.iter().cloned());
        assert_eq!(span_dimension(&all), 6, "closure basis lies in the span");
    }

    #[test]
    fn closure_is_idempotent_under_saturation() {
        let mats = crate::bundle::lambda2_frame_matrices(BundleSign::Plus);
        let gens: Vec<SkewOperator> = mats[..2]
            .iter()
            .map(|m| SkewOperator { matrix: m.clone() })
            .collect();
        let first = lie_closure(&gens).unwrap();
        let second = lie_closure(&first.basis).unwrap();
        assert_eq!(first.dimension, second.dimension);
        // saturated: all brackets stay in the span
        assert_eq!(second.closure_rounds, 1);
    }

    #[test]
    fn closure_dimension_invariant_under_conjugation() {
        let scene_dim = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // random orthogonal matrix from QR of a random matrix
        let a = DMatrix::from_fn(scene_dim, scene_dim, |_, _| rng.random_range(-1.0..1.0));
        let qr = a.qr();
        let q = qr.q();
        let mats = crate::bundle::lambda2_frame_matrices(BundleSign::Minus);
        let gens: Vec<SkewOperator> =
            mats.iter().map(|m| SkewOperator { matrix: m.clone() }).collect();
        let conj: Vec<SkewOperator> = mats
            .iter()
            .map(|m| SkewOperator { matrix: &q * m * q.transpose() })
            .collect();
        let d1 = lie_closure(&gens).unwrap().dimension;
        let d2 = lie_closure(&conj).unwrap().dimension;
        assert_eq!(d1, d2);
    }

    #[test]
    fn flat_case_full_orthogonal_algebra() {
        // m = 2, k = 2, phi1'(0) != 0: hol = o(4), dimension 6
        let chart = model_chart(ChartKind::Flat, 2).unwrap();
        let w = WeightProfile::poly(vec![0.0, 1.0], vec![0.0]);
        let res = flat_holonomy_scenario(&chart, 2, &w).unwrap();
        assert_eq!(res.dimension, 6);
        assert_eq!(res.classification, "so(4)");
        assert!(res.singular_value_margin() > 1e4);
    }

    #[test]
    fn flat_case_constant_weights_trivial_holonomy() {
        let chart = model_chart(ChartKind::Flat, 3).unwrap();
        let w = WeightProfile::constant(0.0, 0.0);
        let res = flat_holonomy_scenario(&chart, 2, &w).unwrap();
        assert_eq!(res.dimension, 0);
    }

    #[test]
    fn flat_case_vertical_only_weights() {
        // phi1 = 0, phi2' != 0 over sphere base: hol contains
        // hol^M + o(k); for m = 2, k = 2 that is at least 1 + 1 = 2
        let chart = model_chart(ChartKind::Sphere { curv: 1.0 }, 2).unwrap();
        let w = WeightProfile::poly(vec![0.0], vec![0.0, 1.0]);
        let res = flat_holonomy_scenario(&chart, 2, &w).unwrap();
        assert!(res.dimension >= 2, "dimension {} >= 2", res.dimension);
    }

    #[test]
    fn generators_are_skew_to_machine_precision() {
        let rep = g2_scenario(G2Base::Sphere4, 1.0, 1.0).unwrap();
        for b in &rep.holonomy.basis {
            assert!(b.skew_residual() < 1e-12);
        }
        let chart = model_chart(ChartKind::Sphere { curv: 1.0 }, 4).unwrap();
        let bundle = lambda2_bundle(&chart, BundleSign::Minus).unwrap();
        let scene = Scene::new(chart, bundle, WeightProfile::bryant_salamon(1.0, 1.0, 1.0).unwrap());
        let gens = curvature_generators(&scene, &scene.chart.origin()).unwrap();
        assert_eq!(gens.len(), 21);
        for g in &gens {
            assert!(g.skew_residual() < 1e-12);
        }
    }

    #[test]
    fn g2_dimension_for_both_branches() {
        let s4 = g2_scenario(G2Base::Sphere4, 1.0, 1.0).unwrap();
        assert_eq!(s4.holonomy.dimension, 14);
        assert_eq!(s4.holonomy.classification, "g2-dimension");
        assert!(s4.holonomy.singular_value_margin() > 1e4);
        assert!((s4.s - 1.0).abs() < 1e-10);

        let h4 = g2_scenario(G2Base::Hyperbolic4, 1.0, 2.0).unwrap();
        assert_eq!(h4.holonomy.dimension, 14);
        assert_eq!(h4.holonomy.classification, "g2-dimension");
        assert!((h4.s + 1.0).abs() < 1e-10);
    }

    #[test]
    fn g2_dimension_stable_over_random_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let c0 = rng.random_range(0.5..2.0);
            let c1 = rng.random_range(0.5..2.0);
            let rep = g2_scenario(G2Base::Sphere4, c0, c1).unwrap();
            assert_eq!(rep.holonomy.dimension, 14, "c0={c0}, c1={c1}");
        }
    }

    #[test]
    fn g2_proof_subspace_dimensions() {
        for base in [G2Base::Sphere4, G2Base::Hyperbolic4] {
            let rep = match base {
                G2Base::Sphere4 => g2_scenario(base, 1.0, 1.0).unwrap(),
                G2Base::Hyperbolic4 => g2_scenario(base, 1.0, 2.0).unwrap(),
            };
            assert_eq!(rep.subspace_dims, (3, 3, 8), "{base:?}");
            assert_eq!(rep.family_ranks.len(), 4, "{base:?}: four mixed families");
            for r in &rep.family_ranks {
                assert_eq!(*r, 2, "{base:?}: family rank");
            }
        }
    }

    #[test]
    fn g2_diagonal_block_identity() {
        // the horizontal block of the e_k-type generator equals s times the
        // lifted 2-form matrix (the operator-orientation form of
        // R^M(e_k) = -s e^k)
        let chart = model_chart(ChartKind::Sphere { curv: 1.0 }, 4).unwrap();
        let x = chart.origin();
        let s = chart.scalar(&x) / 12.0;
        let bundle = lambda2_bundle(&chart, BundleSign::Minus).unwrap();
        let scene = Scene::new(
            chart,
            bundle,
            WeightProfile::bryant_salamon(1.0, 1.0, 1.0).unwrap(),
        );
        let data = ZeroSectionData::new(&scene, &x).unwrap();
        let frame = scene.chart.frame(&x);
        let basis = split_frame_basis(&frame, 4, 3);
        let mats = lambda2_frame_matrices(BundleSign::Minus);
        for (kk, mat) in mats.iter().enumerate() {
            let mut acc = DMatrix::<f64>::zeros(7, 7);
            for a in 0..4 {
                for b in (a + 1)..4 {
                    if mat[(a, b)] != 0.0 {
                        let g = generator_for(&data, &basis, &scene, &basis[a], &basis[b]);
                        acc += g.matrix * mat[(a, b)];
                    }
                }
            }
            let block = acc.view((0, 0), (4, 4)).clone_owned();
            // weights cancel in the horizontal block: e^{2 phi1} / e^{2 phi1}
            let expect = mat * s;
            assert!(
                max_abs(&(block - expect)) < 1e-8,
                "e_{} horizontal block",
                kk + 1
            );
        }
    }

    #[test]
    fn g2_mixed_generator_matches_paper_combination() {
        // The mixed generator R(e_4, pi* e^1) is a combination of exactly
        // three V_{alpha i} = e^alpha /\ theta^i with coefficient pattern
        // (2, -/+1, +/-1) on (V_41, V_72, V_63); minus bundle takes
        // (2, +1, -1). In the weighted orthonormal frame the closed form is
        //   -(c0 s / (2 sqrt(c1))) (2 V_41 + V_72 - V_63),
        // from a e^{phi1-phi2} on the first slot and
        // (1/2) e^{phi2-phi1} rho-values on the other two.
        let c0 = 1.3_f64;
        let c1 = 0.8_f64;
        let s = 1.0_f64;
        let rep_scene = {
            let chart = model_chart(ChartKind::Sphere { curv: 1.0 }, 4).unwrap();
            let bundle = lambda2_bundle(&chart, BundleSign::Minus).unwrap();
            Scene::new(chart, bundle, WeightProfile::bryant_salamon(c0, c1, s).unwrap())
        };
        let x = rep_scene.chart.origin();
        let data = ZeroSectionData::new(&rep_scene, &x).unwrap();
        let frame = rep_scene.chart.frame(&x);
        let basis = split_frame_basis(&frame, 4, 3);
        // (e_4, pi* e^1) is the pair (slot 0, slot 4 + 0)
        let g = generator_for(&data, &basis, &rep_scene, &basis[0], &basis[4]);
        let factor = -c0 * s / (2.0 * c1.sqrt());
        // V_{alpha i} as elementary mixed matrices; paper indices
        // V_41 -> slots (0, e^1), V_72 -> (3, e^2), V_63 -> (2, e^3)
        let v = |a: usize, i: usize| -> DMatrix<f64> {
            let mut m = DMatrix::zeros(7, 7);
            m[(a, 4 + i)] = 1.0;
            m[(4 + i, a)] = -1.0;
            m
        };
        let expect = (v(0, 0) * 2.0 + v(3, 1) - v(2, 2)) * factor;
        assert!(
            max_abs(&(g.matrix.clone() - expect.clone())) < 1e-10,
            "mixed generator:\n{:.4}\nexpected\n{:.4}",
            g.matrix,
            expect
        );
    }
}
