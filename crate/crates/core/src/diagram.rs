//! Diagrams of isometries: functors `G: A → IHilb` over a finite poset.
//!
//! Each node `a` carries the fiber `R^{d_a}` with its canonical inner product
//! and each pair `b ≤ a` an isometry `G^b_a` (a `d_a × d_b` matrix with
//! orthonormal columns). Inside the fiber over `α` the images
//! `L(α, a) = im G^a_α`, `a ≤ α`, form an increasing family of subspaces,
//! the *left coupling*. The diagram is decomposable exactly when every such
//! family satisfies the intersection property, and the decomposition is
//! assembled from the pieces found fiber by fiber.
//!
//! A diagram is not in general a family of subspaces of one space, and the
//! naive colimit construction does not repair this: quotienting `⊕ G(a)` by
//! the relations `G^b_a(v)·a − v·b` shrinks norms. For the constant diagram
//! `R → R` on a two-element chain the induced map has norm `1/√2`:
//!
//! ```
//! use std::sync::Arc;
//! use nalgebra::{DMatrix, DVector};
//! use idecomp_core::{AmbientSpace, Subspace, Tolerance};
//!
//! // ⊕ G(a) = R ⊕ R, coordinates (v_0, v_1); the relation is (−v, v).
//! let sum = AmbientSpace::euclidean(2, Tolerance::default());
//! let relations = Subspace::span(&sum, &DMatrix::from_column_slice(2, 1, &[-1.0, 1.0])).unwrap();
//! let quotient = relations.complement().projector();
//! let v = DVector::from_column_slice(&[1.0, 0.0]);
//! let image = quotient.as_operator().apply(&v);
//! assert!((image.norm() - 0.5f64.sqrt()).abs() < 1e-12);
//! assert!(image.norm() < v.norm());
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::interaction::{self, DecompositionFailure, IntersectionReport, SubspaceFamily, Witness};
use crate::linalg::{join, op_norm, AmbientSpace, Subspace};
use crate::poset::{LowerSet, Poset};
use crate::tolerance::Tolerance;

/// Deviations measured while validating a diagram.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ValidationReport {
    pub max_isometry_deviation: f64,
    pub max_commutation_deviation: f64,
}

#[derive(Debug, Clone)]
pub struct IsometryDiagram {
    poset: Poset,
    dims: Vec<usize>,
    fibers: Vec<Arc<AmbientSpace>>,
    // (b, a) ↦ G^b_a for every b ≤ a, identities included.
    maps: BTreeMap<(usize, usize), DMatrix<f64>>,
    tol: Tolerance,
    validation: ValidationReport,
}

fn isometry_deviation(m: &DMatrix<f64>) -> f64 {
    op_norm(&(m.transpose() * m - DMatrix::identity(m.ncols(), m.ncols())))
}

impl IsometryDiagram {
    /// Builds and validates a diagram. `edges` must contain every covering
    /// pair `(b, a)`; other pairs `b < a` may be given and are then checked
    /// against the composites.
    pub fn new(
        poset: Poset,
        dims: Vec<usize>,
        edges: Vec<((usize, usize), DMatrix<f64>)>,
        tol: Tolerance,
    ) -> Result<Self> {
        let n = poset.len();
        if dims.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: dims.len(),
            });
        }
        let name = |b: usize, a: usize| format!("{}<{}", poset.label(b), poset.label(a));
        let mut report = ValidationReport::default();
        let mut given = BTreeMap::new();
        for ((b, a), m) in edges {
            if a >= n || b >= n {
                return Err(Error::UnknownElement(format!("#{}", a.max(b))));
            }
            if !poset.lt(b, a) {
                return Err(Error::Invalid(format!(
                    "map given for `{}` but the pair is not strictly ordered",
                    name(b, a)
                )));
            }
            if dims[b] > dims[a] {
                return Err(Error::DecreasingDims(name(b, a)));
            }
            if m.nrows() != dims[a] || m.ncols() != dims[b] {
                return Err(Error::DimensionMismatch {
                    expected: dims[a] * dims[b],
                    found: m.nrows() * m.ncols(),
                });
            }
            let dev = isometry_deviation(&m);
            report.max_isometry_deviation = report.max_isometry_deviation.max(dev);
            if !(dev <= tol.tol_orth) {
                return Err(Error::NotIsometry {
                    edge: name(b, a),
                    deviation: dev,
                });
            }
            given.insert((b, a), m);
        }

        let mut maps = BTreeMap::new();
        for a in poset.linear_extension() {
            maps.insert((a, a), DMatrix::identity(dims[a], dims[a]));
            let covers = poset.lower_covers(a);
            for &c in &covers {
                let m = given
                    .get(&(c, a))
                    .ok_or_else(|| Error::MissingEdge(name(c, a)))?;
                maps.insert((c, a), m.clone());
            }
            for b in poset.strictly_below(a) {
                if covers.contains(&b) {
                    continue;
                }
                // Every path b → a passes through some lower cover c of a;
                // those composites must agree.
                let mut first: Option<(usize, DMatrix<f64>)> = None;
                for &c in covers.iter().filter(|&&c| poset.lt(b, c)) {
                    let comp = &maps[&(c, a)] * &maps[&(b, c)];
                    match &first {
                        None => first = Some((c, comp)),
                        Some((c0, m0)) => {
                            let dev = op_norm(&(&comp - m0));
                            report.max_commutation_deviation =
                                report.max_commutation_deviation.max(dev);
                            if !(dev <= tol.tol_eq) {
                                return Err(Error::NotFunctorial {
                                    square: format!(
                                        "{b} < {c0} < {a} vs {b} < {c} < {a}",
                                        b = poset.label(b),
                                        c0 = poset.label(*c0),
                                        c = poset.label(c),
                                        a = poset.label(a)
                                    ),
                                    deviation: dev,
                                });
                            }
                        }
                    }
                }
                let (_, comp) = first.expect("b < a has a lower cover of a above it");
                if let Some(m) = given.get(&(b, a)) {
                    let dev = op_norm(&(m - &comp));
                    report.max_commutation_deviation = report.max_commutation_deviation.max(dev);
                    if !(dev <= tol.tol_eq) {
                        return Err(Error::NotFunctorial {
                            square: format!("given {} vs composite", name(b, a)),
                            deviation: dev,
                        });
                    }
                }
                maps.insert((b, a), comp);
            }
        }
        let fibers = dims.iter().map(|&d| AmbientSpace::euclidean(d, tol)).collect();
        Ok(Self {
            poset,
            dims,
            fibers,
            maps,
            tol,
            validation: report,
        })
    }

    pub fn poset(&self) -> &Poset {
        &self.poset
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn tol(&self) -> &Tolerance {
        &self.tol
    }

    pub fn fiber(&self, a: usize) -> &Arc<AmbientSpace> {
        &self.fibers[a]
    }

    /// `G^b_a`; panics unless `b ≤ a`.
    pub fn map(&self, b: usize, a: usize) -> &DMatrix<f64> {
        &self.maps[&(b, a)]
    }

    pub fn validation(&self) -> ValidationReport {
        self.validation
    }
}

/// `L(α, a) = im G^a_α` for every `a ≤ α`.
#[derive(Debug, Clone)]
pub struct LeftCoupling<'d> {
    diagram: &'d IsometryDiagram,
    images: BTreeMap<(usize, usize), Subspace>,
}

pub fn left_coupling(d: &IsometryDiagram) -> LeftCoupling<'_> {
    let p = d.poset();
    let mut images = BTreeMap::new();
    for alpha in 0..p.len() {
        for a in (0..p.len()).filter(|&a| p.leq(a, alpha)) {
            let s = Subspace::span(d.fiber(alpha), d.map(a, alpha)).expect("shape checked");
            images.insert((alpha, a), s);
        }
    }
    LeftCoupling { diagram: d, images }
}

impl<'d> LeftCoupling<'d> {
    pub fn diagram(&self) -> &'d IsometryDiagram {
        self.diagram
    }

    /// `L(α, a)`; panics unless `a ≤ α`.
    pub fn image(&self, alpha: usize, a: usize) -> &Subspace {
        &self.images[&(alpha, a)]
    }

    /// The family `(L(α, a), a ≤ α)` inside the fiber over `α`, indexed by
    /// the sub-poset `α̂`. Also returns the element list of `α̂`.
    pub fn fiber_family(&self, alpha: usize) -> (SubspaceFamily, Vec<usize>) {
        let p = self.diagram.poset();
        let elems: Vec<usize> = (0..p.len()).filter(|&a| p.leq(a, alpha)).collect();
        let spaces = elems.iter().map(|&a| self.image(alpha, a).clone()).collect();
        let fam = SubspaceFamily::new(
            p.restrict(&elems),
            Arc::clone(self.diagram.fiber(alpha)),
            spaces,
        )
        .expect("images of a functor are nested");
        (fam, elems)
    }

    /// Largest failure of `G^β_α` to map `L(β, a)` isometrically onto
    /// `L(α, a)`, over all `a ≤ β ≤ α`. Zero for any valid diagram.
    pub fn connecting_map_deviation(&self) -> f64 {
        let d = self.diagram;
        let p = d.poset();
        let mut worst: f64 = 0.0;
        for alpha in 0..p.len() {
            for beta in (0..p.len()).filter(|&b| p.leq(b, alpha)) {
                let g = d.map(beta, alpha);
                for a in (0..p.len()).filter(|&a| p.leq(a, beta)) {
                    let src = self.image(beta, a);
                    let dst = self.image(alpha, a);
                    let mapped = Subspace::span(d.fiber(alpha), &(g * src.white_basis()))
                        .expect("shape checked");
                    let gap = if mapped.dim() == dst.dim() {
                        mapped.distance(dst).expect("same fiber")
                    } else {
                        1.0
                    };
                    worst = worst.max(gap);
                }
            }
        }
        worst
    }
}

/// `Ĝ(α, B) = ⋁_{b∈B} L(α, b)` on `A₂`, computed on demand.
#[derive(Debug, Clone, Copy)]
pub struct A2Extension<'c, 'd> {
    coupling: &'c LeftCoupling<'d>,
}

pub fn extend_a2<'c, 'd>(lc: &'c LeftCoupling<'d>) -> A2Extension<'c, 'd> {
    A2Extension { coupling: lc }
}

impl A2Extension<'_, '_> {
    pub fn ghat(&self, alpha: usize, set: &LowerSet) -> Result<Subspace> {
        let d = self.coupling.diagram;
        let p = d.poset();
        LowerSet::new(p, set.iter())?;
        let hat = p.lower_set(alpha)?;
        if !set.is_subset(&hat) {
            return Err(Error::NotBelow(p.label(alpha).to_owned()));
        }
        join(d.fiber(alpha), set.iter().map(|b| self.coupling.image(alpha, b)))
    }

    /// Deviation of `G^β_α` from mapping `Ĝ(β, B)` onto `Ĝ(α, B)`.
    pub fn restriction_deviation(&self, beta: usize, alpha: usize, set: &LowerSet) -> Result<f64> {
        let d = self.coupling.diagram;
        if !d.poset().leq(beta, alpha) {
            return Err(Error::NotBelow(d.poset().label(alpha).to_owned()));
        }
        let src = self.ghat(beta, set)?;
        let dst = self.ghat(alpha, set)?;
        let mapped = Subspace::span(d.fiber(alpha), &(d.map(beta, alpha) * src.white_basis()))?;
        Ok(if mapped.dim() == dst.dim() {
            mapped.distance(&dst)?
        } else {
            1.0
        })
    }
}

/// Evaluates `π^α(â ∩ b̂) = π^α(â) π^α(b̂)` for every `α` and every pair
/// `a, b ≤ α`.
pub fn check_intersection_property_functor(d: &IsometryDiagram) -> IntersectionReport {
    let lc = left_coupling(d);
    let ext = extend_a2(&lc);
    let p = d.poset();
    let mut gaps = Vec::new();
    for alpha in 0..p.len() {
        let below: Vec<usize> = (0..p.len()).filter(|&a| p.leq(a, alpha)).collect();
        for (i, &a) in below.iter().enumerate() {
            for &b in &below[i + 1..] {
                let meet = p
                    .lower_set(a)
                    .expect("in range")
                    .intersection(&p.lower_set(b).expect("in range"));
                let lhs = ext.ghat(alpha, &meet).expect("meet lies below alpha").projector();
                let pa = lc.image(alpha, a).projector();
                let pb = lc.image(alpha, b).projector();
                let rhs = pa.as_operator().compose(pb.as_operator());
                gaps.push(Witness {
                    alpha: Some(alpha),
                    a,
                    b,
                    gap: lhs.as_operator().distance(&rhs),
                });
            }
        }
    }
    IntersectionReport::from_gaps(gaps, d.tol().tol_proj)
}

/// The pieces `S_c(α, ·) = L(α, c) ∩ (Σ_{d<c} L(α, d))^⊥` over `A₁`.
#[derive(Debug, Clone)]
pub struct Predecomposition {
    // (α, c) ↦ S_c(α, a) for any a with c ≤ a ≤ α; the piece does not depend on a.
    pieces: BTreeMap<(usize, usize), Subspace>,
    fibers: Vec<Arc<AmbientSpace>>,
    poset: Poset,
    /// Largest deviation of `S_c^{βb}_{αa} s_c(β,b) = s_c(α,a) L^{βb}_{αa}`
    /// over all squares.
    pub naturality_gap: f64,
    /// Same, restricted to squares with `c ≤ b`.
    pub naturality_gap_supported: f64,
}

impl Predecomposition {
    /// `S_c(α, a)`; the zero subspace unless `c ≤ a ≤ α`.
    pub fn piece(&self, c: usize, alpha: usize, a: usize) -> Subspace {
        if self.poset.leq(c, a) && self.poset.leq(a, alpha) {
            self.pieces[&(alpha, c)].clone()
        } else {
            Subspace::zero(&self.fibers[alpha])
        }
    }

    /// `V_c(a) = S_c(a, a)`.
    pub fn diagonal(&self, c: usize, a: usize) -> Subspace {
        self.piece(c, a, a)
    }

    /// `s_c(α, a)` as a `d_α × d_α` projector matrix (defined on `L(α, a)`).
    pub fn projection(&self, c: usize, alpha: usize, a: usize) -> DMatrix<f64> {
        self.piece(c, alpha, a).projector().matrix()
    }
}

pub fn predecomposition(d: &IsometryDiagram) -> Predecomposition {
    let lc = left_coupling(d);
    let p = d.poset();
    let n = p.len();
    let mut pieces = BTreeMap::new();
    for alpha in 0..n {
        for c in (0..n).filter(|&c| p.leq(c, alpha)) {
            let lower = join(
                d.fiber(alpha),
                p.strictly_below(c).into_iter().map(|e| lc.image(alpha, e)),
            )
            .expect("same fiber");
            let s = lc
                .image(alpha, c)
                .intersect(&lower.complement())
                .expect("same fiber");
            pieces.insert((alpha, c), s);
        }
    }
    let mut pre = Predecomposition {
        pieces,
        fibers: d.fibers.clone(),
        poset: p.clone(),
        naturality_gap: 0.0,
        naturality_gap_supported: 0.0,
    };
    for alpha in 0..n {
        for beta in (0..n).filter(|&b| p.leq(b, alpha)) {
            let g = d.map(beta, alpha);
            for a in (0..n).filter(|&a| p.leq(a, alpha)) {
                for b in (0..n).filter(|&b| p.leq(b, a) && p.leq(b, beta)) {
                    let dom = lc.image(beta, b).white_basis();
                    for c in (0..n).filter(|&c| p.leq(c, a)) {
                        let lhs = g * pre.projection(c, beta, b) * dom;
                        let rhs = pre.projection(c, alpha, a) * g * dom;
                        let gap = op_norm(&(lhs - rhs));
                        pre.naturality_gap = pre.naturality_gap.max(gap);
                        if p.leq(c, b) {
                            pre.naturality_gap_supported = pre.naturality_gap_supported.max(gap);
                        }
                    }
                }
            }
        }
    }
    pre
}

/// A verified decomposition of a diagram: one piece `V_c(c)` per node and
/// natural isometric isomorphisms `φ_a: G(a) → ⊕_{c≤a} V_c(c)`.
#[derive(Debug, Clone)]
pub struct FunctorDecomposition {
    pub poset: Poset,
    /// Orthonormal frame of `V_c(c)` inside `G(c)`, one per node.
    pub piece_frames: Vec<DMatrix<f64>>,
    /// `φ_a`, rows grouped by `c ≤ a` in index order.
    pub phi: Vec<DMatrix<f64>>,
    pub max_orthogonality_deviation: f64,
    pub max_naturality_deviation: f64,
}

impl FunctorDecomposition {
    pub fn piece_dims(&self) -> Vec<usize> {
        self.piece_frames.iter().map(|f| f.ncols()).collect()
    }

    /// Offset of each piece in the total space `⊕_c V_c(c)`.
    fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.piece_frames.len());
        let mut acc = 0;
        for f in &self.piece_frames {
            off.push(acc);
            acc += f.ncols();
        }
        off
    }

    pub fn total_dim(&self) -> usize {
        self.piece_dims().iter().sum()
    }

    /// Isometric embedding `G(a) → ⊕_c V_c(c)`, `J_a φ_a`.
    pub fn embedding(&self, a: usize) -> DMatrix<f64> {
        let off = self.offsets();
        let dims = self.piece_dims();
        let phi = &self.phi[a];
        let mut out = DMatrix::zeros(self.total_dim(), phi.ncols());
        let mut row = 0;
        for c in (0..self.poset.len()).filter(|&c| self.poset.leq(c, a)) {
            out.rows_mut(off[c], dims[c])
                .copy_from(&phi.rows(row, dims[c]));
            row += dims[c];
        }
        out
    }
}

#[derive(Debug, Clone)]
pub enum FunctorFailureReason {
    /// The left-coupling family over `alpha` is not decomposable.
    Fiber {
        alpha: usize,
        failure: Box<DecompositionFailure>,
    },
    /// Pieces do not transport along the diagram.
    PieceTransport { c: usize, a: usize, gap: f64 },
    NotIsometric { a: usize, deviation: f64 },
    NotNatural { b: usize, a: usize, deviation: f64 },
}

#[derive(Debug, Clone)]
pub struct FunctorFailure {
    pub report: IntersectionReport,
    pub reason: FunctorFailureReason,
}

/// Decomposes the diagram fiber by fiber and assembles natural isometric
/// isomorphisms from the diagonal pieces.
pub fn decompose_functor(
    d: &IsometryDiagram,
) -> std::result::Result<FunctorDecomposition, FunctorFailure> {
    let fail = |reason| {
        Err(FunctorFailure {
            report: check_intersection_property_functor(d),
            reason,
        })
    };
    let p = d.poset();
    let n = p.len();
    let tol = d.tol();
    let lc = left_coupling(d);
    let mut fiber_pieces: Vec<Vec<Subspace>> = Vec::with_capacity(n);
    for alpha in p.linear_extension() {
        let (fam, elems) = lc.fiber_family(alpha);
        match interaction::decompose(&fam) {
            Ok(dec) => {
                let mut by_node = vec![Subspace::zero(d.fiber(alpha)); n];
                for (i, &e) in elems.iter().enumerate() {
                    by_node[e] = dec.pieces[i].clone();
                }
                fiber_pieces.push(by_node);
            }
            Err(f) => {
                return fail(FunctorFailureReason::Fiber {
                    alpha,
                    failure: Box::new(f),
                })
            }
        }
    }
    // fiber_pieces follows linear-extension order; re-index by node.
    let order = p.linear_extension();
    let mut pieces_at: Vec<Vec<Subspace>> = vec![Vec::new(); n];
    for (i, alpha) in order.into_iter().enumerate() {
        pieces_at[alpha] = std::mem::take(&mut fiber_pieces[i]);
    }

    let frames: Vec<DMatrix<f64>> = (0..n).map(|c| pieces_at[c][c].white_basis().clone()).collect();

    // V_c(a) must be the transport of V_c(c).
    for a in 0..n {
        for c in (0..n).filter(|&c| p.leq(c, a)) {
            let moved = Subspace::span(d.fiber(a), &(d.map(c, a) * &frames[c])).expect("shape");
            let gap = if moved.dim() == pieces_at[a][c].dim() {
                moved.distance(&pieces_at[a][c]).expect("same fiber")
            } else {
                1.0
            };
            if !(gap <= tol.tol_eq) {
                return fail(FunctorFailureReason::PieceTransport { c, a, gap });
            }
        }
    }

    let mut phi = Vec::with_capacity(n);
    let mut max_orth: f64 = 0.0;
    for a in 0..n {
        let blocks: Vec<DMatrix<f64>> = (0..n)
            .filter(|&c| p.leq(c, a))
            .map(|c| (d.map(c, a) * &frames[c]).transpose())
            .collect();
        let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
        if rows != d.dims()[a] {
            return fail(FunctorFailureReason::NotIsometric {
                a,
                deviation: 1.0,
            });
        }
        let mut m = DMatrix::zeros(rows, d.dims()[a]);
        let mut r = 0;
        for b in blocks {
            m.rows_mut(r, b.nrows()).copy_from(&b);
            r += b.nrows();
        }
        let dev = op_norm(&(m.transpose() * &m - DMatrix::identity(rows, rows)))
            .max(op_norm(&(&m * m.transpose() - DMatrix::identity(rows, rows))));
        max_orth = max_orth.max(dev);
        if !(dev <= tol.tol_orth) {
            return fail(FunctorFailureReason::NotIsometric { a, deviation: dev });
        }
        phi.push(m);
    }
    let mut fd = FunctorDecomposition {
        poset: p.clone(),
        piece_frames: frames,
        phi,
        max_orthogonality_deviation: max_orth,
        max_naturality_deviation: 0.0,
    };
    // Naturality: J_a φ_a G^b_a = J_b φ_b.
    let emb: Vec<DMatrix<f64>> = (0..n).map(|a| fd.embedding(a)).collect();
    for a in 0..n {
        for b in p.strictly_below(a) {
            let dev = op_norm(&(&emb[a] * d.map(b, a) - &emb[b]));
            fd.max_naturality_deviation = fd.max_naturality_deviation.max(dev);
            if !(dev <= tol.tol_eq) {
                return fail(FunctorFailureReason::NotNatural { b, a, deviation: dev });
            }
        }
    }
    Ok(fd)
}

/// The block-coordinate family realising a decomposed diagram inside one
/// space: node `a` maps to the coordinate blocks of the pieces `c ≤ a`.
pub fn embed_into_ambient(fd: &FunctorDecomposition, tol: Tolerance) -> SubspaceFamily {
    let total = fd.total_dim();
    let amb = AmbientSpace::euclidean(total, tol);
    let spaces = (0..fd.poset.len())
        .map(|a| {
            let e = fd.embedding(a);
            Subspace::span(&amb, &e).expect("shape")
        })
        .collect();
    SubspaceFamily::new(fd.poset.clone(), amb, spaces).expect("blocks are nested")
}
