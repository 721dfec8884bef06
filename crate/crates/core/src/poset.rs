//! Finite posets and the combinatorics the decomposition theorems quantify
//! over: principal lower sets, the lower-set lattice, the Möbius function,
//! meets, and the extended posets `A⁺`, `A₁`, `A₂`.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite partial order. Elements are addressed by dense indices `0..len()`
/// and carry string labels.
///
/// The order is stored as its reflexive-transitive closure, so `leq` is a
/// table lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poset {
    labels: Vec<String>,
    leq: Vec<bool>,
}

impl Poset {
    /// Builds a poset from any acyclic relation `less` of pairs `(b, a)`
    /// meaning `b < a`. The reflexive-transitive closure is taken; cycles are
    /// rejected.
    pub fn from_relation(labels: Vec<String>, less: &[(usize, usize)]) -> Result<Self> {
        let n = labels.len();
        let mut seen = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if seen.insert(l.as_str(), i).is_some() {
                return Err(Error::DuplicateElement(l.clone()));
            }
        }
        let mut leq = vec![false; n * n];
        for i in 0..n {
            leq[i * n + i] = true;
        }
        for &(b, a) in less {
            if b >= n {
                return Err(Error::UnknownElement(format!("#{b}")));
            }
            if a >= n {
                return Err(Error::UnknownElement(format!("#{a}")));
            }
            if a == b {
                return Err(Error::Cycle(labels[a].clone(), labels[b].clone()));
            }
            leq[b * n + a] = true;
        }
        // Warshall closure.
        for k in 0..n {
            for i in 0..n {
                if leq[i * n + k] {
                    for j in 0..n {
                        if leq[k * n + j] {
                            leq[i * n + j] = true;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if leq[i * n + j] && leq[j * n + i] {
                    return Err(Error::Cycle(labels[i].clone(), labels[j].clone()));
                }
            }
        }
        Ok(Self { labels, leq })
    }

    /// Builds a poset from labelled pairs `(b, a)` meaning `b < a`.
    pub fn from_covers<S: AsRef<str>>(elements: &[S], covers: &[(S, S)]) -> Result<Self> {
        let labels: Vec<String> = elements.iter().map(|s| s.as_ref().to_owned()).collect();
        let index: HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let lookup = |s: &S| {
            index
                .get(s.as_ref())
                .copied()
                .ok_or_else(|| Error::UnknownElement(s.as_ref().to_owned()))
        };
        let pairs = covers
            .iter()
            .map(|(b, a)| Ok((lookup(b)?, lookup(a)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_relation(labels, &pairs)
    }

    /// The chain `0 < 1 < … < n-1`, labelled by the integers.
    pub fn chain(n: usize) -> Self {
        let labels = (0..n).map(|i| i.to_string()).collect();
        let less: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_relation(labels, &less).expect("a chain is acyclic")
    }

    pub fn antichain<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        Self::from_relation(labels.iter().map(|s| s.as_ref().to_owned()).collect(), &[])
    }

    /// The power set of `items` ordered by inclusion. The element with index
    /// `m` is the subset whose bitmask is `m`; labels look like `{x,y}`.
    pub fn power_set<S: AsRef<str>>(items: &[S]) -> Result<Self> {
        let k = items.len();
        if k > 16 {
            return Err(Error::Invalid(format!(
                "power set of {k} items is too large"
            )));
        }
        let n = 1usize << k;
        let labels = (0..n).map(|m| subset_label(items, m)).collect::<Vec<_>>();
        let mut leq = vec![false; n * n];
        for a in 0..n {
            for b in 0..n {
                leq[a * n + b] = a & !b == 0;
            }
        }
        let mut seen = BTreeSet::new();
        for it in items {
            if !seen.insert(it.as_ref()) {
                return Err(Error::DuplicateElement(it.as_ref().to_owned()));
            }
        }
        Ok(Self { labels, leq })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownElement(label.to_owned()))
    }

    /// `b ≤ a`.
    #[inline]
    pub fn leq(&self, b: usize, a: usize) -> bool {
        self.leq[b * self.len() + a]
    }

    /// `b < a`.
    #[inline]
    pub fn lt(&self, b: usize, a: usize) -> bool {
        b != a && self.leq(b, a)
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        self.leq(a, b) || self.leq(b, a)
    }

    fn check(&self, a: usize) -> Result<()> {
        if a < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownElement(format!("#{a}")))
        }
    }

    /// The principal lower set `â = {b : b ≤ a}`.
    pub fn lower_set(&self, a: usize) -> Result<LowerSet> {
        self.check(a)?;
        Ok(LowerSet {
            members: (0..self.len()).filter(|&b| self.leq(b, a)).collect(),
        })
    }

    /// Elements strictly below `a`, in index order.
    pub fn strictly_below(&self, a: usize) -> Vec<usize> {
        (0..self.len()).filter(|&b| self.lt(b, a)).collect()
    }

    /// Covering pairs `(b, a)`: `b < a` with nothing strictly between.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in self.lower_covers(a) {
                out.push((b, a));
            }
        }
        out
    }

    /// Elements covered by `a`.
    pub fn lower_covers(&self, a: usize) -> Vec<usize> {
        let n = self.len();
        (0..n)
            .filter(|&b| self.lt(b, a) && !(0..n).any(|c| self.lt(b, c) && self.lt(c, a)))
            .collect()
    }

    pub fn maximal_elements(&self) -> Vec<usize> {
        let n = self.len();
        (0..n).filter(|&a| !(0..n).any(|c| self.lt(a, c))).collect()
    }

    /// A topological order: `b < a` implies `b` comes first. Ties are broken
    /// by label, lexicographically.
    pub fn linear_extension(&self) -> Vec<usize> {
        let n = self.len();
        let mut indegree: Vec<usize> = (0..n).map(|a| self.strictly_below(a).len()).collect();
        let mut heap: BinaryHeap<Reverse<(&str, usize)>> = (0..n)
            .filter(|&a| indegree[a] == 0)
            .map(|a| Reverse((self.labels[a].as_str(), a)))
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse((_, b))) = heap.pop() {
            order.push(b);
            for a in 0..n {
                if self.lt(b, a) {
                    indegree[a] -= 1;
                    if indegree[a] == 0 {
                        heap.push(Reverse((self.labels[a].as_str(), a)));
                    }
                }
            }
        }
        order
    }

    /// The Möbius function of the incidence algebra, over exact integers.
    pub fn mobius(&self) -> MobiusTable {
        let n = self.len();
        let order = self.linear_extension();
        let mut mu = vec![0i64; n * n];
        for a in 0..n {
            mu[a * n + a] = 1;
            // Walk downwards so every c above b is already known.
            for &b in order.iter().rev() {
                if !self.lt(b, a) {
                    continue;
                }
                let s: i64 = (0..n)
                    .filter(|&c| self.lt(b, c) && self.leq(c, a))
                    .map(|c| mu[a * n + c])
                    .sum();
                mu[a * n + b] = -s;
            }
        }
        MobiusTable { n, mu }
    }

    /// Greatest lower bound of `a` and `b`, if it exists.
    pub fn meet(&self, a: usize, b: usize) -> Option<usize> {
        let n = self.len();
        let common: Vec<usize> = (0..n)
            .filter(|&c| self.leq(c, a) && self.leq(c, b))
            .collect();
        common
            .iter()
            .copied()
            .find(|&d| common.iter().all(|&c| self.leq(c, d)))
    }

    /// The full meet table (`table[a * n + b] = a ∧ b`) when every pair has a
    /// meet, `None` otherwise.
    pub fn meet_table(&self) -> Option<Vec<usize>> {
        let n = self.len();
        let mut table = vec![0; n * n];
        for a in 0..n {
            for b in a..n {
                let m = self.meet(a, b)?;
                table[a * n + b] = m;
                table[b * n + a] = m;
            }
        }
        Some(table)
    }

    pub fn is_meet_semilattice(&self) -> bool {
        self.meet_table().is_some()
    }

    /// All lower sets of the poset, or of the sub-poset `within` when given.
    /// Fails once more than `cap` sets would be produced.
    pub fn lower_sets(&self, within: Option<&LowerSet>, cap: usize) -> Result<Vec<LowerSet>> {
        let order: Vec<usize> = self
            .linear_extension()
            .into_iter()
            .filter(|a| within.is_none_or(|w| w.contains(*a)))
            .collect();
        let mut out = Vec::new();
        let mut current = BTreeSet::new();
        self.lower_sets_rec(&order, 0, &mut current, &mut out, cap)?;
        Ok(out)
    }

    fn lower_sets_rec(
        &self,
        order: &[usize],
        i: usize,
        current: &mut BTreeSet<usize>,
        out: &mut Vec<LowerSet>,
        cap: usize,
    ) -> Result<()> {
        if i == order.len() {
            if out.len() >= cap {
                return Err(Error::TooManyLowerSets { cap });
            }
            out.push(LowerSet {
                members: current.clone(),
            });
            return Ok(());
        }
        let a = order[i];
        self.lower_sets_rec(order, i + 1, current, out, cap)?;
        if self.strictly_below(a).iter().all(|b| current.contains(b)) {
            current.insert(a);
            self.lower_sets_rec(order, i + 1, current, out, cap)?;
            current.remove(&a);
        }
        Ok(())
    }

    /// The sub-poset on `elements`, in the given order.
    pub fn restrict(&self, elements: &[usize]) -> Poset {
        let m = elements.len();
        let mut leq = vec![false; m * m];
        for (i, &a) in elements.iter().enumerate() {
            for (j, &b) in elements.iter().enumerate() {
                leq[i * m + j] = self.leq(a, b);
            }
        }
        Poset {
            labels: elements.iter().map(|&a| self.labels[a].clone()).collect(),
            leq,
        }
    }

    /// `A⁺`: the poset with a fresh maximal element appended.
    pub fn extend_plus(&self) -> PosetPlus {
        let n = self.len();
        let mut top_label = String::from("1");
        while self.labels.contains(&top_label) {
            top_label.push('\'');
        }
        let mut labels = self.labels.clone();
        labels.push(top_label);
        let m = n + 1;
        let mut leq = vec![false; m * m];
        for a in 0..n {
            for b in 0..n {
                leq[a * m + b] = self.leq(a, b);
            }
            leq[a * m + n] = true;
        }
        leq[n * m + n] = true;
        PosetPlus {
            base: self.clone(),
            extended: Poset { labels, leq },
            top: n,
        }
    }

    /// `A₁ = {(α, a) : a ≤ α}` with the componentwise order.
    pub fn extend_a1(&self) -> PosetA1 {
        let n = self.len();
        let pairs = (0..n)
            .flat_map(|alpha| (0..n).filter(move |&a| self.leq(a, alpha)).map(move |a| (alpha, a)))
            .collect();
        PosetA1 {
            base: self.clone(),
            pairs,
        }
    }

    /// `A₂ = {(α, B) : B ∈ 𝒰(A), B ⊆ α̂}`. Fails when `𝒰(A)` has more than
    /// `cap` elements; the pairs themselves are produced lazily.
    pub fn extend_a2(&self, cap: usize) -> Result<PosetA2> {
        let total = self.lower_sets(None, cap)?.len();
        Ok(PosetA2 {
            base: self.clone(),
            lower_set_count: total,
        })
    }
}

fn subset_label<S: AsRef<str>>(items: &[S], mask: usize) -> String {
    let inner: Vec<&str> = items
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, s)| s.as_ref())
        .collect();
    format!("{{{}}}", inner.join(","))
}

/// `μ(a, b)` for `b ≤ a`; zero elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MobiusTable {
    n: usize,
    mu: Vec<i64>,
}

impl MobiusTable {
    pub fn get(&self, a: usize, b: usize) -> i64 {
        self.mu[a * self.n + b]
    }
}

/// A downward-closed set of elements of some poset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LowerSet {
    members: BTreeSet<usize>,
}

impl LowerSet {
    /// Validates downward closure against `poset`.
    pub fn new(poset: &Poset, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let members: BTreeSet<usize> = members.into_iter().collect();
        for &m in &members {
            poset.check(m)?;
            for b in poset.strictly_below(m) {
                if !members.contains(&b) {
                    return Err(Error::NotLowerSet {
                        member: poset.label(m).to_owned(),
                        missing: poset.label(b).to_owned(),
                    });
                }
            }
        }
        Ok(Self { members })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn contains(&self, a: usize) -> bool {
        self.members.contains(&a)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    /// Intersections of lower sets are lower sets.
    pub fn intersection(&self, other: &LowerSet) -> LowerSet {
        LowerSet {
            members: self.members.intersection(&other.members).copied().collect(),
        }
    }

    pub fn union(&self, other: &LowerSet) -> LowerSet {
        LowerSet {
            members: self.members.union(&other.members).copied().collect(),
        }
    }

    pub fn is_subset(&self, other: &LowerSet) -> bool {
        self.members.is_subset(&other.members)
    }
}

/// `A⁺`: the base poset with an adjoined top. Indices `0..base.len()` are
/// shared with the base; the top has index `base.len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosetPlus {
    pub base: Poset,
    pub extended: Poset,
    pub top: usize,
}

/// `A₁`: pairs `(α, a)` with `a ≤ α`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosetA1 {
    pub base: Poset,
    pub pairs: Vec<(usize, usize)>,
}

impl PosetA1 {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, alpha: usize, a: usize) -> bool {
        alpha < self.base.len() && a < self.base.len() && self.base.leq(a, alpha)
    }

    /// `(β, b) ≤ (α, a)` componentwise.
    pub fn leq(&self, (beta, b): (usize, usize), (alpha, a): (usize, usize)) -> bool {
        self.base.leq(beta, alpha) && self.base.leq(b, a)
    }
}

/// `A₂`: pairs `(α, B)` with `B` a lower set contained in `α̂`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosetA2 {
    pub base: Poset,
    lower_set_count: usize,
}

impl PosetA2 {
    /// `|𝒰(A)|`, counted when the extension was built.
    pub fn lower_set_count(&self) -> usize {
        self.lower_set_count
    }

    pub fn contains(&self, alpha: usize, set: &LowerSet) -> bool {
        self.base
            .lower_set(alpha)
            .map(|hat| set.is_subset(&hat))
            .unwrap_or(false)
    }

    /// `(β, B₁) ≤ (α, B)` iff `β ≤ α` and `B₁ ⊆ B`.
    pub fn leq(&self, beta: usize, b1: &LowerSet, alpha: usize, b: &LowerSet) -> bool {
        self.base.leq(beta, alpha) && b1.is_subset(b)
    }

    /// All pairs, grouped by `α` in linear-extension order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, LowerSet)> + '_ {
        self.base.linear_extension().into_iter().flat_map(move |alpha| {
            let hat = self.base.lower_set(alpha).expect("index in range");
            // Bounded by |𝒰(A)|, which was checked against the cap.
            let sets = self
                .base
                .lower_sets(Some(&hat), self.lower_set_count)
                .expect("sub-lattice no larger than the checked lattice");
            sets.into_iter().map(move |s| (alpha, s))
        })
    }
}

/// JSON form of a poset: explicit elements with covering pairs `[b, a]`
/// meaning `b < a`, or the power set of a list of items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PosetSpec {
    PowerSet {
        power_set_of: Vec<String>,
    },
    Explicit {
        elements: Vec<String>,
        #[serde(default)]
        covers: Vec<(String, String)>,
    },
}

impl PosetSpec {
    pub fn build(&self) -> Result<Poset> {
        match self {
            PosetSpec::PowerSet { power_set_of } => Poset::power_set(power_set_of),
            PosetSpec::Explicit { elements, covers } => Poset::from_covers(elements, covers),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn power2() -> Poset {
        Poset::power_set(&["1", "2"]).unwrap()
    }

    #[test]
    fn lower_set_of_chain_element() {
        let p = Poset::chain(3);
        let s = p.lower_set(1).unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn lower_set_in_antichain_is_singleton() {
        let p = Poset::antichain(&["x", "y"]).unwrap();
        assert_eq!(p.lower_set(0).unwrap().iter().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn lower_set_of_power_set_top_is_everything() {
        let p = power2();
        assert_eq!(p.lower_set(3).unwrap().len(), 4);
        assert_eq!(p.label(3), "{1,2}");
        assert_eq!(p.label(0), "{}");
    }

    #[test]
    fn unknown_element_is_an_error() {
        let p = Poset::chain(2);
        assert!(matches!(p.lower_set(5), Err(Error::UnknownElement(_))));
        assert!(matches!(p.index_of("zz"), Err(Error::UnknownElement(_))));
    }

    #[test]
    fn cycles_are_rejected() {
        let r = Poset::from_covers(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("c", "a")]);
        assert!(matches!(r, Err(Error::Cycle(_, _))));
        let r = Poset::from_covers(&["a"], &[("a", "a")]);
        assert!(matches!(r, Err(Error::Cycle(_, _))));
        let r = Poset::from_covers(&["a", "a"], &[]);
        assert!(matches!(r, Err(Error::DuplicateElement(_))));
    }

    #[test]
    fn mobius_of_power_set_is_signed_cardinality() {
        let p = power2();
        let mu = p.mobius();
        assert_eq!(mu.get(3, 0), 1);
        assert_eq!(mu.get(3, 1), -1);
        assert_eq!(mu.get(3, 2), -1);
        assert_eq!(mu.get(3, 3), 1);
        // Three items: μ(a, b) = (−1)^{|a∖b|}.
        let p = Poset::power_set(&["a", "b", "c"]).unwrap();
        let mu = p.mobius();
        for a in 0..8usize {
            for b in 0..8usize {
                if b & !a == 0 {
                    let sign = if (a & !b).count_ones() % 2 == 0 { 1 } else { -1 };
                    assert_eq!(mu.get(a, b), sign);
                }
            }
        }
    }

    #[test]
    fn mobius_of_chain() {
        let mu = Poset::chain(3).mobius();
        assert_eq!(mu.get(2, 2), 1);
        assert_eq!(mu.get(2, 1), -1);
        // Hand recursion: μ(2,0) = −(μ(2,1) + μ(2,2)) = 0.
        assert_eq!(mu.get(2, 0), 0);
    }

    #[test]
    fn meet_semilattice_detection() {
        let p = power2();
        let t = p.meet_table().unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(t[a * 4 + b], a & b);
            }
        }
        assert!(Poset::chain(4).is_meet_semilattice());
        assert_eq!(Poset::chain(4).meet(3, 1), Some(1));
        // Two incomparable minimal elements under a common top.
        let v = Poset::from_covers(&["0", "0'", "1"], &[("0", "1"), ("0'", "1")]).unwrap();
        assert!(!v.is_meet_semilattice());
        assert_eq!(v.meet(0, 1), None);
    }

    #[test]
    fn linear_extension_examples() {
        assert_eq!(Poset::chain(3).linear_extension(), vec![0, 1, 2]);
        assert_eq!(Poset::antichain(&["y", "x"]).unwrap().linear_extension(), vec![1, 0]);
        let ord = power2().linear_extension();
        assert_eq!(ord[0], 0);
        assert_eq!(ord[3], 3);
    }

    #[test]
    fn a1_of_two_chain() {
        let a1 = Poset::chain(2).extend_a1();
        let mut pairs = a1.pairs.clone();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 0), (1, 0), (1, 1)]);
        assert!(a1.leq((0, 0), (1, 1)));
        assert!(!a1.leq((1, 1), (1, 0)));
    }

    #[test]
    fn plus_of_singleton() {
        let p = Poset::antichain(&["x"]).unwrap().extend_plus();
        assert_eq!(p.extended.len(), 2);
        assert!(p.extended.leq(0, p.top));
        assert_eq!(p.extended.label(p.top), "1");
        let q = Poset::antichain(&["1"]).unwrap().extend_plus();
        assert_eq!(q.extended.label(q.top), "1'");
    }

    #[test]
    fn a2_of_two_chain() {
        let a2 = Poset::chain(2).extend_a2(4096).unwrap();
        assert_eq!(a2.lower_set_count(), 3);
        let mut got: Vec<(usize, Vec<usize>)> =
            a2.pairs().map(|(a, s)| (a, s.iter().collect())).collect();
        got.sort();
        assert_eq!(
            got,
            vec![
                (0, vec![]),
                (0, vec![0]),
                (1, vec![]),
                (1, vec![0]),
                (1, vec![0, 1])
            ]
        );
    }

    #[test]
    fn lower_set_cap_is_enforced() {
        let p = Poset::antichain(&["a", "b", "c", "d"]).unwrap();
        assert_eq!(p.lower_sets(None, 16).unwrap().len(), 16);
        assert!(matches!(p.extend_a2(15), Err(Error::TooManyLowerSets { cap: 15 })));
    }

    #[test]
    fn lower_set_validation() {
        let p = Poset::chain(3);
        assert!(LowerSet::new(&p, [0, 1]).is_ok());
        assert!(matches!(LowerSet::new(&p, [1]), Err(Error::NotLowerSet { .. })));
    }

    #[test]
    fn poset_spec_json() {
        let s: PosetSpec =
            serde_json::from_str(r#"{"elements":["a","b"],"covers":[["a","b"]]}"#).unwrap();
        let p = s.build().unwrap();
        assert!(p.lt(0, 1));
        let s: PosetSpec = serde_json::from_str(r#"{"power_set_of":["i","j"]}"#).unwrap();
        assert_eq!(s.build().unwrap().len(), 4);
    }

    fn arb_poset() -> impl Strategy<Value = Poset> {
        (1usize..=10).prop_flat_map(|n| {
            proptest::collection::vec(proptest::bool::weighted(0.3), n * n).prop_map(move |bits| {
                let labels = (0..n).map(|i| format!("e{i}")).collect();
                let less: Vec<_> = (0..n)
                    .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                    .filter(|&(i, j)| bits[i * n + j])
                    .collect();
                Poset::from_relation(labels, &less).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn mobius_inversion_round_trip(p in arb_poset(), seed in proptest::collection::vec(-50i64..50, 10)) {
            let n = p.len();
            let f: Vec<i64> = (0..n).map(|i| seed[i]).collect();
            let g: Vec<i64> = (0..n).map(|a| (0..n).filter(|&b| p.leq(b, a)).map(|b| f[b]).sum()).collect();
            let mu = p.mobius();
            for a in 0..n {
                let back: i64 = (0..n).filter(|&b| p.leq(b, a)).map(|b| mu.get(a, b) * g[b]).sum();
                prop_assert_eq!(back, f[a]);
            }
        }

        #[test]
        fn mobius_defining_sums_vanish(p in arb_poset()) {
            let n = p.len();
            let mu = p.mobius();
            for a in 0..n {
                prop_assert_eq!(mu.get(a, a), 1);
                for b in 0..n {
                    if p.lt(b, a) {
                        let s: i64 = (0..n).filter(|&c| p.leq(b, c) && p.leq(c, a)).map(|c| mu.get(a, c)).sum();
                        prop_assert_eq!(s, 0);
                    }
                }
            }
        }

        #[test]
        fn linear_extension_respects_order(p in arb_poset()) {
            let ord = p.linear_extension();
            prop_assert_eq!(ord.len(), p.len());
            for i in 0..ord.len() {
                for j in (i + 1)..ord.len() {
                    prop_assert!(!p.lt(ord[j], ord[i]));
                }
            }
        }

        #[test]
        fn principal_lower_set_is_smallest(p in arb_poset()) {
            let all = p.lower_sets(None, 1 << 12).unwrap();
            for a in 0..p.len() {
                let hat = p.lower_set(a).unwrap();
                prop_assert!(LowerSet::new(&p, hat.iter()).is_ok());
                for s in all.iter().filter(|s| s.contains(a)) {
                    prop_assert!(hat.is_subset(s));
                }
            }
        }
    }

    #[test]
    fn power_sets_are_meet_semilattices_with_intersection() {
        for k in 0..=4 {
            let items: Vec<String> = (0..k).map(|i| i.to_string()).collect();
            let p = Poset::power_set(&items).unwrap();
            let n = p.len();
            let t = p.meet_table().unwrap();
            for a in 0..n {
                for b in 0..n {
                    assert_eq!(t[a * n + b], a & b);
                    let inter = p.lower_set(a).unwrap().intersection(&p.lower_set(b).unwrap());
                    assert_eq!(inter, p.lower_set(a & b).unwrap());
                }
            }
        }
    }
}
