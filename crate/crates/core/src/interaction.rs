//! Interaction decomposition of an increasing family of subspaces.
//!
//! For a family `(H_a, a ∈ A)` the candidate pieces are
//! `S_a = H_a ∩ (Σ_{b<a} H_b)^⊥`, plus `S_1 = (Σ_a H_a)^⊥` for the adjoined
//! top of `A⁺`. These pieces always recover each `H_a` as a sum; the family
//! is decomposable exactly when they are also mutually orthogonal, which in
//! turn is equivalent to `π(â ∩ b̂) = π_a π_b` for all `a, b`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{join, AmbientSpace, Operator, Projector, Subspace};
use crate::poset::{LowerSet, Poset, PosetPlus};

/// An increasing map `a ↦ H_a` from a poset into the subspaces of one
/// ambient space.
#[derive(Debug, Clone)]
pub struct SubspaceFamily {
    poset: Poset,
    ambient: Arc<AmbientSpace>,
    spaces: Vec<Subspace>,
}

impl SubspaceFamily {
    /// Validates that every space lives in `ambient` and that `b ≤ a`
    /// implies `H_b ⊆ H_a`.
    pub fn new(poset: Poset, ambient: Arc<AmbientSpace>, spaces: Vec<Subspace>) -> Result<Self> {
        if spaces.len() != poset.len() {
            return Err(Error::DimensionMismatch {
                expected: poset.len(),
                found: spaces.len(),
            });
        }
        if spaces.iter().any(|s| !ambient.same(s.ambient())) {
            return Err(Error::AmbientMismatch);
        }
        for a in 0..poset.len() {
            for b in poset.strictly_below(a) {
                if !spaces[a].contains(&spaces[b])? {
                    return Err(Error::NotMonotone {
                        lower: poset.label(b).to_owned(),
                        upper: poset.label(a).to_owned(),
                    });
                }
            }
        }
        Ok(Self {
            poset,
            ambient,
            spaces,
        })
    }

    /// `H_a` = span of the columns of `generators[a]`.
    pub fn from_generators(
        poset: Poset,
        ambient: Arc<AmbientSpace>,
        generators: &[DMatrix<f64>],
    ) -> Result<Self> {
        let spaces = generators
            .iter()
            .map(|g| Subspace::span(&ambient, g))
            .collect::<Result<Vec<_>>>()?;
        Self::new(poset, ambient, spaces)
    }

    pub fn poset(&self) -> &Poset {
        &self.poset
    }

    pub fn ambient(&self) -> &Arc<AmbientSpace> {
        &self.ambient
    }

    pub fn space(&self, a: usize) -> &Subspace {
        &self.spaces[a]
    }

    pub fn spaces(&self) -> &[Subspace] {
        &self.spaces
    }

    /// `H(B) = Σ_{b∈B} H_b`.
    pub fn span_of_lowerset(&self, set: &LowerSet) -> Result<Subspace> {
        LowerSet::new(&self.poset, set.iter())?;
        join(&self.ambient, set.iter().map(|b| &self.spaces[b]))
    }

    /// `π(B)`, the orthogonal projector onto `H(B)`; zero for `B = ∅`.
    pub fn pi_of_lowerset(&self, set: &LowerSet) -> Result<Projector> {
        Ok(self.span_of_lowerset(set)?.projector())
    }

    fn pi(&self, a: usize) -> Projector {
        self.spaces[a].projector()
    }
}

/// One failing pair of the intersection property. `alpha` is set for
/// isometry diagrams, where the check runs inside the fiber over `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub alpha: Option<usize>,
    pub a: usize,
    pub b: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionReport {
    pub holds: bool,
    /// Largest gap over all pairs, failing or not.
    pub max_gap: f64,
    /// Failing pairs, largest gap first.
    pub witnesses: Vec<Witness>,
}

impl IntersectionReport {
    pub(crate) fn from_gaps(gaps: Vec<Witness>, tol: f64) -> Self {
        let max_gap = gaps.iter().map(|w| w.gap).fold(0.0, f64::max);
        let mut witnesses: Vec<Witness> = gaps.into_iter().filter(|w| !(w.gap <= tol)).collect();
        witnesses.sort_by(|x, y| {
            y.gap
                .total_cmp(&x.gap)
                .then((x.alpha, x.a, x.b).cmp(&(y.alpha, y.a, y.b)))
        });
        Self {
            holds: witnesses.is_empty(),
            max_gap,
            witnesses,
        }
    }
}

/// Evaluates `π(â ∩ b̂) = π_a π_b` on every unordered pair.
pub fn check_intersection_property(fam: &SubspaceFamily) -> IntersectionReport {
    let p = fam.poset();
    let n = p.len();
    let pis: Vec<Projector> = (0..n).map(|a| fam.pi(a)).collect();
    let hats: Vec<LowerSet> = (0..n).map(|a| p.lower_set(a).expect("in range")).collect();
    let mut gaps = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let meet = hats[a].intersection(&hats[b]);
            let lhs = fam
                .pi_of_lowerset(&meet)
                .expect("intersection of lower sets is a lower set");
            let rhs = pis[a].as_operator().compose(pis[b].as_operator());
            gaps.push(Witness {
                alpha: None,
                a,
                b,
                gap: lhs.as_operator().distance(&rhs),
            });
        }
    }
    IntersectionReport::from_gaps(gaps, fam.ambient().tol().tol_proj)
}

/// Checks `π_a π_b = π_{a∧b}` on a meet semi-lattice.
pub fn meet_semilattice_shortcut(fam: &SubspaceFamily) -> Result<IntersectionReport> {
    let p = fam.poset();
    let n = p.len();
    let meets = p.meet_table().ok_or(Error::NotMeetSemilattice)?;
    let pis: Vec<Projector> = (0..n).map(|a| fam.pi(a)).collect();
    let mut gaps = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let rhs = pis[a].as_operator().compose(pis[b].as_operator());
            gaps.push(Witness {
                alpha: None,
                a,
                b,
                gap: pis[meets[a * n + b]].as_operator().distance(&rhs),
            });
        }
    }
    Ok(IntersectionReport::from_gaps(gaps, fam.ambient().tol().tol_proj))
}

/// `S_a = H_a ∩ (Σ_{b<a} H_b)^⊥` for every `a`, followed by
/// `S_1 = (Σ_a H_a)^⊥` at index `poset.len()`.
pub fn interaction_subspaces(fam: &SubspaceFamily) -> Vec<Subspace> {
    let p = fam.poset();
    let n = p.len();
    let mut pieces = Vec::with_capacity(n + 1);
    for a in 0..n {
        let below = p.strictly_below(a);
        if below.is_empty() {
            pieces.push(fam.spaces[a].clone());
            continue;
        }
        let lower = join(fam.ambient(), below.iter().map(|&b| &fam.spaces[b]))
            .expect("family shares one ambient");
        let piece = fam.spaces[a]
            .intersect(&lower.complement())
            .expect("family shares one ambient");
        pieces.push(piece);
    }
    let all = join(fam.ambient(), fam.spaces.iter()).expect("family shares one ambient");
    pieces.push(all.complement());
    pieces
}

/// Orthogonal projectors `s_a^⊥` onto the candidate pieces, over `A⁺`.
pub fn interaction_projectors(fam: &SubspaceFamily) -> Vec<Projector> {
    interaction_subspaces(fam)
        .iter()
        .map(Subspace::projector)
        .collect()
}

/// A verified interaction decomposition over `A⁺`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub poset_plus: PosetPlus,
    pub pieces: Vec<Subspace>,
    pub projectors: Vec<Projector>,
    /// Largest `‖s_a^⊥ s_b^⊥‖` over distinct pairs.
    pub max_overlap: f64,
    /// Largest `‖P(⊕_{b≤a} S_b) − π_a‖`.
    pub max_reconstruction_gap: f64,
}

impl Decomposition {
    pub fn piece(&self, a: usize) -> &Subspace {
        &self.pieces[a]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.pieces.iter().map(Subspace::dim).collect()
    }

    /// `⊕_{b≤a} S_b`, with `a` an index of `A⁺`.
    pub fn reconstruct(&self, a: usize) -> Subspace {
        let ext = &self.poset_plus.extended;
        let amb = self.pieces[0].ambient();
        join(
            amb,
            (0..ext.len())
                .filter(|&b| ext.leq(b, a))
                .map(|b| &self.pieces[b]),
        )
        .expect("pieces share one ambient")
    }
}

/// Why the candidate pieces fail to decompose the family.
#[derive(Debug, Clone, PartialEq)]
pub enum FailureReason {
    /// Two pieces below the failing element are not orthogonal.
    Overlap { b: usize, c: usize, gap: f64 },
    /// The pieces below the failing element do not sum to `H_a`.
    Reconstruction { gap: f64, dims: usize, expected: usize },
}

#[derive(Debug, Clone)]
pub struct DecompositionFailure {
    pub report: IntersectionReport,
    /// The candidate pieces over `A⁺`; not mutually orthogonal.
    pub pieces: Vec<Subspace>,
    /// First element of `A⁺`, in linear-extension order, where
    /// `H_a = ⊕_{b≤a} S_b` fails as an orthogonal sum.
    pub first_failure: usize,
    pub reason: FailureReason,
}

/// Builds the candidate pieces and verifies, element by element along a
/// linear extension of `A⁺`, that the pieces below each element are mutually
/// orthogonal and sum to its space.
pub fn decompose(fam: &SubspaceFamily) -> std::result::Result<Decomposition, DecompositionFailure> {
    let plus = fam.poset().extend_plus();
    let pieces = interaction_subspaces(fam);
    let amb = Arc::clone(fam.ambient());
    let tol = *amb.tol();
    let ext = &plus.extended;
    let m = ext.len();
    let full = Subspace::full(&amb);
    let target = |a: usize| if a == plus.top { &full } else { &fam.spaces[a] };

    let mut checked = vec![false; m * m];
    let mut max_overlap: f64 = 0.0;
    let mut max_recon: f64 = 0.0;
    let mut failure = None;
    'outer: for a in ext.linear_extension() {
        let below: Vec<usize> = (0..m).filter(|&b| ext.leq(b, a)).collect();
        for (i, &b) in below.iter().enumerate() {
            for &c in &below[i + 1..] {
                if checked[b * m + c] {
                    continue;
                }
                checked[b * m + c] = true;
                let gap = pieces[b].overlap(&pieces[c]).expect("same ambient");
                max_overlap = max_overlap.max(gap);
                if !(gap <= tol.tol_proj) {
                    failure = Some((a, FailureReason::Overlap { b, c, gap }));
                    break 'outer;
                }
            }
        }
        let rebuilt = join(&amb, below.iter().map(|&b| &pieces[b])).expect("same ambient");
        let dims: usize = below.iter().map(|&b| pieces[b].dim()).sum();
        let gap = rebuilt.distance(target(a)).expect("same ambient");
        max_recon = max_recon.max(gap);
        if !(gap <= tol.tol_eq) || dims != target(a).dim() {
            failure = Some((
                a,
                FailureReason::Reconstruction {
                    gap,
                    dims,
                    expected: target(a).dim(),
                },
            ));
            break;
        }
    }
    match failure {
        None => {
            let projectors = pieces.iter().map(Subspace::projector).collect();
            Ok(Decomposition {
                poset_plus: plus,
                pieces,
                projectors,
                max_overlap,
                max_reconstruction_gap: max_recon,
            })
        }
        Some((first_failure, reason)) => Err(DecompositionFailure {
            report: check_intersection_property(fam),
            pieces,
            first_failure,
            reason,
        }),
    }
}

/// `s_a = Σ_{b≤a} μ(a, b) π_b` over `A⁺` (with `π_1 = id`). These are plain
/// linear maps; they are projectors when the family is decomposable.
pub fn mobius_projections(fam: &SubspaceFamily) -> Vec<Operator> {
    let plus = fam.poset().extend_plus();
    let ext = &plus.extended;
    let mu = ext.mobius();
    let amb = fam.ambient();
    let pis: Vec<Operator> = (0..ext.len())
        .map(|a| {
            if a == plus.top {
                Operator::identity(amb)
            } else {
                fam.pi(a).into_operator()
            }
        })
        .collect();
    (0..ext.len())
        .map(|a| {
            (0..ext.len())
                .filter(|&b| ext.leq(b, a))
                .fold(Operator::zero(amb), |acc, b| {
                    acc.add(&pis[b].scale(mu.get(a, b) as f64))
                })
        })
        .collect()
}

/// Side-by-side comparison of the Möbius maps `s_a` and the orthogonal
/// projectors `s_a^⊥`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionComparison {
    /// `max_a ‖s_a − s_a^⊥‖` over `A⁺`.
    pub max_difference: f64,
    /// `‖Σ_a s_a − id‖`.
    pub mobius_sum_gap: f64,
    /// `‖Σ_a s_a^⊥ − id‖`.
    pub orthogonal_sum_gap: f64,
}

pub fn compare_projections(fam: &SubspaceFamily) -> ProjectionComparison {
    let amb = fam.ambient();
    let mob = mobius_projections(fam);
    let orth = interaction_projectors(fam);
    let max_difference = mob
        .iter()
        .zip(&orth)
        .map(|(s, t)| s.distance(t.as_operator()))
        .fold(0.0, f64::max);
    let id = Operator::identity(amb);
    let msum = mob.iter().fold(Operator::zero(amb), |acc, s| acc.add(s));
    let osum = orth
        .iter()
        .fold(Operator::zero(amb), |acc, s| acc.add(s.as_operator()));
    ProjectionComparison {
        max_difference,
        mobius_sum_gap: msum.distance(&id),
        orthogonal_sum_gap: osum.distance(&id),
    }
}
