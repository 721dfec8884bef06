//! Random instances: posets, decomposable and perturbed subspace families,
//! and isometry diagrams built from them.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::diagram::IsometryDiagram;
use crate::error::Result;
use crate::interaction::SubspaceFamily;
use crate::linalg::{AmbientSpace, Subspace};
use crate::poset::Poset;
use crate::tolerance::Tolerance;

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `n × k` matrix with orthonormal columns, Haar distributed.
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> DMatrix<f64> {
    assert!(k <= n);
    if k == 0 {
        return DMatrix::zeros(n, 0);
    }
    let qr = gaussian_matrix(rng, n, n).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q.columns(0, k).into_owned();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Symmetric positive-definite matrix with spectrum in `[1, cond]`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, n: usize, cond: f64) -> DMatrix<f64> {
    let q = random_orthonormal(rng, n, n);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.gen_range(1.0..=cond)));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Random order on `n` elements labelled `p0, p1, ...`: each pair `i < j`
/// is related with probability `density`, then closed transitively.
pub fn random_poset<R: Rng + ?Sized>(rng: &mut R, n: usize, density: f64) -> Poset {
    let labels = (0..n).map(|i| format!("p{i}")).collect();
    let mut rel = Vec::new();
    for j in 0..n {
        for i in 0..j {
            if rng.gen_bool(density) {
                rel.push((i, j));
            }
        }
    }
    Poset::from_relation(labels, &rel).expect("relation follows index order")
}

/// Piece dimensions in `0..=max_piece` with total at most `budget`.
pub fn random_piece_dims<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_piece: usize,
    budget: usize,
) -> Vec<usize> {
    let mut left = budget;
    (0..n)
        .map(|_| {
            let k = rng.gen_range(0..=max_piece.min(left));
            left -= k;
            k
        })
        .collect()
}

/// Generating data of a synthesized family: the intended pieces `S_c` (the
/// top piece, `(Σ H_a)^⊥`, is not included).
#[derive(Debug, Clone)]
pub struct Synthesized {
    pub family: SubspaceFamily,
    pub pieces: Vec<Subspace>,
}

fn blocks(q: &DMatrix<f64>, dims: &[usize]) -> Vec<DMatrix<f64>> {
    let mut off = 0;
    dims.iter()
        .map(|&k| {
            let b = q.columns(off, k).into_owned();
            off += k;
            b
        })
        .collect()
}

fn stack(poset: &Poset, blocks: &[DMatrix<f64>], a: usize, rows: usize) -> DMatrix<f64> {
    let below: Vec<usize> = (0..poset.len()).filter(|&c| poset.leq(c, a)).collect();
    let cols: usize = below.iter().map(|&c| blocks[c].ncols()).sum();
    let mut m = DMatrix::zeros(rows, cols);
    let mut off = 0;
    for c in below {
        let k = blocks[c].ncols();
        m.columns_mut(off, k).copy_from(&blocks[c]);
        off += k;
    }
    m
}

/// `H_a = ⊕_{c≤a} S_c` for mutually orthogonal random pieces of the given
/// dimensions. Requires `Σ dims ≤ ambient.dim()`.
pub fn decomposable_family<R: Rng + ?Sized>(
    rng: &mut R,
    poset: &Poset,
    ambient: &Arc<AmbientSpace>,
    dims: &[usize],
) -> Result<Synthesized> {
    let n = ambient.dim();
    let total: usize = dims.iter().sum();
    let q = random_orthonormal(rng, n, total);
    let bl = blocks(&q, dims);
    let pieces = bl.iter().map(|b| Subspace::from_white(ambient, b)).collect();
    let spaces = (0..poset.len())
        .map(|a| Subspace::from_white(ambient, &stack(poset, &bl, a, n)))
        .collect();
    let family = SubspaceFamily::new(poset.clone(), Arc::clone(ambient), spaces)?;
    Ok(Synthesized { family, pieces })
}

/// Like [`decomposable_family`] but every piece generator is moved by
/// `eps` times a Gaussian matrix, which generally destroys orthogonality
/// while keeping the family increasing.
pub fn perturbed_family<R: Rng + ?Sized>(
    rng: &mut R,
    poset: &Poset,
    ambient: &Arc<AmbientSpace>,
    dims: &[usize],
    eps: f64,
) -> Result<SubspaceFamily> {
    let n = ambient.dim();
    let total: usize = dims.iter().sum();
    let q = random_orthonormal(rng, n, total) + gaussian_matrix(rng, n, total) * eps;
    let bl = blocks(&q, dims);
    let spaces = (0..poset.len())
        .map(|a| Subspace::span(ambient, &ambient.unwhiten(&stack(poset, &bl, a, n))))
        .collect::<Result<Vec<_>>>()?;
    SubspaceFamily::new(poset.clone(), Arc::clone(ambient), spaces)
}

/// The diagram `a ↦ H_a` with the inclusions, written in randomly rotated
/// orthonormal frames of each `H_a`. When the poset has a greatest element
/// it is decomposable exactly when the family is; otherwise pairs without a
/// common upper bound impose no condition on the diagram.
pub fn diagram_from_family<R: Rng + ?Sized>(
    rng: &mut R,
    fam: &SubspaceFamily,
    tol: Tolerance,
) -> Result<IsometryDiagram> {
    let p = fam.poset();
    let frames: Vec<DMatrix<f64>> = fam
        .spaces()
        .iter()
        .map(|s| {
            let r = random_orthonormal(rng, s.dim(), s.dim());
            s.white_basis() * r
        })
        .collect();
    let dims = frames.iter().map(|f| f.ncols()).collect();
    let edges = p
        .covers()
        .into_iter()
        .map(|(b, a)| ((b, a), frames[a].transpose() * &frames[b]))
        .collect();
    IsometryDiagram::new(p.clone(), dims, edges, tol)
}

/// A decomposable diagram with `G(a) = ⊕_{c≤a} R^{k_c}` in random
/// coordinates. Returns the diagram; the generating piece dimensions are
/// `dims`.
pub fn direct_sum_diagram<R: Rng + ?Sized>(
    rng: &mut R,
    poset: &Poset,
    dims: &[usize],
    tol: Tolerance,
) -> Result<IsometryDiagram> {
    let total: usize = dims.iter().sum();
    let amb = AmbientSpace::euclidean(total, tol);
    let fam = decomposable_family(rng, poset, &amb, dims)?.family;
    diagram_from_family(rng, &fam, tol)
}
