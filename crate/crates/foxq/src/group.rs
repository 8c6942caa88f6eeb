//! Finite groups as validated multiplication tables, semidirect products,
//! subgroup closures, descending central-type series, and their abelian
//! layer quotients.
//!
//! Elements are indices into the multiplication table; the identity is
//! always index 0. Everything is enumerated (orders stay small, at most a
//! couple of hundred), so validation is done exhaustively rather than
//! trusted.

use crate::abelian::FgAbGroup;
use crate::matrix::IntMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use std::collections::BTreeMap;
use thiserror::Error;

/// A group element: an index into the multiplication table.
pub type Elt = usize;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("invalid multiplication table: {reason}")]
    InvalidTable { reason: String },
    #[error("action of element {t} is not an automorphism of the kernel group")]
    NotAutomorphism { t: Elt },
    #[error("action is not a homomorphism: action({t1} * {t2}) differs from action({t1}) after action({t2})")]
    NotActionHom { t1: Elt, t2: Elt },
    #[error("no witness expressing the element as a product of at most {budget} commutators from the pool")]
    NoWitness { budget: usize },
    #[error("quotient is ill defined: {reason}")]
    QuotientIllDefined { reason: String },
}

/// A finite group given by its full multiplication table. Index 0 is the
/// identity; the table is validated on construction.
#[derive(Clone)]
pub struct FiniteGroup {
    order: usize,
    table: Vec<Elt>,
    inv: Vec<Elt>,
    name: String,
}

impl std::fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FiniteGroup({}, order {})", self.name, self.order)
    }
}

impl FiniteGroup {
    /// Validate and wrap a multiplication table (`table[a * order + b] = a*b`).
    pub fn new(order: usize, table: Vec<Elt>, name: impl Into<String>) -> Result<Self, GroupError> {
        if order == 0 || table.len() != order * order {
            return Err(GroupError::InvalidTable {
                reason: format!("table has {} entries, expected {}", table.len(), order * order),
            });
        }
        if table.iter().any(|&x| x >= order) {
            return Err(GroupError::InvalidTable { reason: "entry out of range".into() });
        }
        let at = |a: Elt, b: Elt| table[a * order + b];
        // Identity at index 0.
        for a in 0..order {
            if at(0, a) != a || at(a, 0) != a {
                return Err(GroupError::InvalidTable {
                    reason: "element 0 is not a two-sided identity".into(),
                });
            }
        }
        // Latin square (cancellation).
        for a in 0..order {
            let mut seen_row = vec![false; order];
            let mut seen_col = vec![false; order];
            for b in 0..order {
                if seen_row[at(a, b)] || seen_col[at(b, a)] {
                    return Err(GroupError::InvalidTable {
                        reason: format!("row or column {a} is not a permutation"),
                    });
                }
                seen_row[at(a, b)] = true;
                seen_col[at(b, a)] = true;
            }
        }
        // Associativity.
        for a in 0..order {
            for b in 0..order {
                let ab = at(a, b);
                for c in 0..order {
                    if at(ab, c) != at(a, at(b, c)) {
                        return Err(GroupError::InvalidTable {
                            reason: format!("associativity fails at ({a}, {b}, {c})"),
                        });
                    }
                }
            }
        }
        // Inverses.
        let mut inv = vec![0; order];
        for a in 0..order {
            match (0..order).find(|&b| at(a, b) == 0 && at(b, a) == 0) {
                Some(b) => inv[a] = b,
                None => {
                    return Err(GroupError::InvalidTable {
                        reason: format!("element {a} has no inverse"),
                    })
                }
            }
        }
        Ok(FiniteGroup { order, table, inv, name: name.into() })
    }

    /// The cyclic group of order `n` (element `k` is the `k`-th power).
    pub fn cyclic(n: usize) -> Self {
        let mut table = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                table[a * n + b] = (a + b) % n;
            }
        }
        FiniteGroup::new(n, table, format!("C{n}")).expect("cyclic table is valid")
    }

    /// Direct product, elements indexed `a + b * |A|`.
    pub fn direct_product(a: &FiniteGroup, b: &FiniteGroup) -> Self {
        let n = a.order * b.order;
        let mut table = vec![0; n * n];
        for x1 in 0..a.order {
            for y1 in 0..b.order {
                for x2 in 0..a.order {
                    for y2 in 0..b.order {
                        let p = x1 + y1 * a.order;
                        let q = x2 + y2 * a.order;
                        table[p * n + q] = a.mul(x1, x2) + b.mul(y1, y2) * a.order;
                    }
                }
            }
        }
        FiniteGroup::new(n, table, format!("{}x{}", a.name, b.name))
            .expect("product table is valid")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn id(&self) -> Elt {
        0
    }

    pub fn mul(&self, a: Elt, b: Elt) -> Elt {
        self.table[a * self.order + b]
    }

    pub fn inv(&self, a: Elt) -> Elt {
        self.inv[a]
    }

    /// `a^k` for an arbitrary integer exponent.
    pub fn pow(&self, a: Elt, k: &BigInt) -> Elt {
        let e = self.element_order(a);
        let k = k.mod_floor(&BigInt::from(e));
        let mut k = u64::try_from(&k).expect("reduced exponent fits");
        let mut base = a;
        let mut acc = 0;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    pub fn pow_i64(&self, a: Elt, k: i64) -> Elt {
        self.pow(a, &BigInt::from(k))
    }

    pub fn element_order(&self, a: Elt) -> usize {
        let mut x = a;
        let mut n = 1;
        while x != 0 {
            x = self.mul(x, a);
            n += 1;
        }
        n
    }

    /// Commutator `[a, b] = a b a^{-1} b^{-1}`.
    pub fn commutator(&self, a: Elt, b: Elt) -> Elt {
        self.mul(self.mul(a, b), self.mul(self.inv(a), self.inv(b)))
    }

    pub fn conjugate(&self, a: Elt, by: Elt) -> Elt {
        self.mul(self.mul(self.inv(by), a), by)
    }
}

/// A subgroup, stored as a sorted element list (always containing 0).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Subgroup {
    elements: Vec<Elt>,
}

impl Subgroup {
    pub fn trivial() -> Self {
        Subgroup { elements: vec![0] }
    }

    pub fn whole(g: &FiniteGroup) -> Self {
        Subgroup { elements: (0..g.order()).collect() }
    }

    pub fn elements(&self) -> &[Elt] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, e: Elt) -> bool {
        self.elements.binary_search(&e).is_ok()
    }

    pub fn is_subset_of(&self, other: &Subgroup) -> bool {
        self.elements.iter().all(|&e| other.contains(e))
    }

    pub fn is_normal_in(&self, g: &FiniteGroup, ambient: &Subgroup) -> bool {
        ambient
            .elements
            .iter()
            .all(|&x| self.elements.iter().all(|&h| self.contains(g.conjugate(h, x))))
    }
}

/// Closure of a generating set under multiplication (breadth first, so the
/// result is deterministic).
pub fn subgroup_closure(g: &FiniteGroup, generators: &[Elt]) -> Subgroup {
    let mut in_set = vec![false; g.order()];
    in_set[0] = true;
    let mut frontier: Vec<Elt> = vec![0];
    let mut gens: Vec<Elt> = generators.to_vec();
    gens.sort_unstable();
    gens.dedup();
    while let Some(x) = frontier.pop() {
        for &s in &gens {
            for y in [g.mul(x, s), g.mul(x, g.inv(s))] {
                if !in_set[y] {
                    in_set[y] = true;
                    frontier.push(y);
                }
            }
        }
    }
    let elements: Vec<Elt> = (0..g.order()).filter(|&e| in_set[e]).collect();
    Subgroup { elements }
}

/// The subgroup generated by all commutators `[a, b]`, `a` in `a_set`, `b`
/// in `b_set`.
pub fn commutator_subgroup(g: &FiniteGroup, a_set: &Subgroup, b_set: &Subgroup) -> Subgroup {
    let mut gens = Vec::new();
    for &a in a_set.elements() {
        for &b in b_set.elements() {
            gens.push(g.commutator(a, b));
        }
    }
    subgroup_closure(g, &gens)
}

/// The kind of descending series to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesKind {
    /// Lower central series of the start subgroup: `K_{i+1} = [K_i, K]`.
    LowerCentral,
    /// Relative series `N_{i+1} = [N_i, G]` inside the ambient group.
    RelativeLowerCentral,
}

/// A descending chain `H_1 >= H_2 >= ...` with the N-series law
/// `[H_i, H_j] <= H_{i+j}` verified. Indices past the end refer to the
/// stable term (the chain is always computed until it stabilizes).
#[derive(Clone, Debug)]
pub struct NSeriesChain {
    terms: Vec<Subgroup>,
    stable_at: usize,
}

impl NSeriesChain {
    /// Wrap and verify an explicit chain whose last term is stable (i.e. the
    /// chain has stopped descending).
    pub fn new(g: &FiniteGroup, terms: Vec<Subgroup>) -> Result<Self, GroupError> {
        if terms.is_empty() {
            return Err(GroupError::QuotientIllDefined { reason: "empty chain".into() });
        }
        for w in terms.windows(2) {
            if !w[1].is_subset_of(&w[0]) {
                return Err(GroupError::QuotientIllDefined {
                    reason: "chain is not descending".into(),
                });
            }
        }
        let stable_at = terms
            .windows(2)
            .position(|w| w[0] == w[1])
            .map(|p| p + 1)
            .unwrap_or(terms.len());
        let chain = NSeriesChain { terms, stable_at };
        // N-series law on all stored indices; by stability this covers all
        // indices.
        for i in 1..=chain.terms.len() {
            for j in 1..=chain.terms.len() {
                let comm = commutator_subgroup(g, chain.term(i), chain.term(j));
                if !comm.is_subset_of(chain.term(i + j)) {
                    return Err(GroupError::QuotientIllDefined {
                        reason: format!("[H_{i}, H_{j}] is not contained in H_{}", i + j),
                    });
                }
            }
        }
        Ok(chain)
    }

    /// 1-based access; indices beyond the chain return the stable term.
    pub fn term(&self, i: usize) -> &Subgroup {
        assert!(i >= 1, "series indices are 1-based");
        let idx = (i - 1).min(self.terms.len() - 1);
        &self.terms[idx]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn stable_at(&self) -> usize {
        self.stable_at
    }

    /// Does the chain eventually reach the trivial subgroup?
    pub fn reaches_trivial(&self) -> bool {
        self.terms.last().unwrap().len() == 1
    }
}

/// Compute a descending series until stabilization (and at least
/// `min_terms` terms are addressable via the stable-term convention).
pub fn series(
    g: &FiniteGroup,
    kind: SeriesKind,
    start: &Subgroup,
    min_terms: usize,
) -> Result<NSeriesChain, GroupError> {
    let mut terms = vec![start.clone()];
    loop {
        let last = terms.last().unwrap();
        let next = match kind {
            SeriesKind::LowerCentral => commutator_subgroup(g, last, start),
            SeriesKind::RelativeLowerCentral => {
                commutator_subgroup(g, last, &Subgroup::whole(g))
            }
        };
        let done = &next == last;
        terms.push(next);
        if done && terms.len() >= min_terms.max(2) {
            break;
        }
    }
    NSeriesChain::new(g, terms)
}

/// An abelian layer `H_i / H_{i+1}` of a chain, presented with one generator
/// per coset.
#[derive(Clone)]
pub struct LayerQuotient {
    pub group: FgAbGroup,
    /// Representative element of each coset (coset 0 is the subgroup itself).
    pub reps: Vec<Elt>,
    coset_of: BTreeMap<Elt, usize>,
}

impl LayerQuotient {
    /// The coset presentation of `upper / lower`.
    pub fn new(g: &FiniteGroup, upper: &Subgroup, lower: &Subgroup) -> Result<Self, GroupError> {
        if !lower.is_subset_of(upper) {
            return Err(GroupError::QuotientIllDefined {
                reason: "denominator is not contained in numerator".into(),
            });
        }
        if !lower.is_normal_in(g, upper) {
            return Err(GroupError::QuotientIllDefined {
                reason: "denominator is not normal in numerator".into(),
            });
        }
        // Partition into cosets x * lower, smallest representative first.
        let mut coset_of: BTreeMap<Elt, usize> = BTreeMap::new();
        let mut reps: Vec<Elt> = Vec::new();
        for &x in upper.elements() {
            if coset_of.contains_key(&x) {
                continue;
            }
            let idx = reps.len();
            reps.push(x);
            for &h in lower.elements() {
                coset_of.insert(g.mul(x, h), idx);
            }
        }
        // Abelian presentation: e_a + e_b - e_{ab} for all coset pairs. The
        // quotient of consecutive N-series terms is abelian, so this is a
        // faithful presentation; if it were not abelian the relations would
        // simply collapse further and the layer checks downstream would fail.
        let k = reps.len();
        let mut rows: Vec<Vec<BigInt>> = Vec::new();
        for (a, &ra) in reps.iter().enumerate() {
            for (b, &rb) in reps.iter().enumerate() {
                let ab = coset_of[&g.mul(ra, rb)];
                let mut r = vec![BigInt::zero(); k];
                r[a] += 1;
                r[b] += 1;
                r[ab] -= 1;
                rows.push(r);
            }
        }
        let group = FgAbGroup::new(k, IntMatrix::from_rows(&rows, k));
        Ok(LayerQuotient { group, reps, coset_of })
    }

    /// The class of a group element (must lie in the numerator subgroup).
    pub fn class_of(&self, e: Elt) -> Vec<BigInt> {
        let idx = *self
            .coset_of
            .get(&e)
            .expect("element lies in the numerator of the layer");
        self.group.reduce(&self.group.gen_elt(idx))
    }

    /// A group element representing an integer combination of cosets: the
    /// product of coset representatives raised to the given exponents.
    pub fn lift(&self, g: &FiniteGroup, coeffs: &[BigInt]) -> Elt {
        assert_eq!(coeffs.len(), self.reps.len());
        let mut acc = g.id();
        for (rep, c) in self.reps.iter().zip(coeffs) {
            if !c.is_zero() {
                acc = g.mul(acc, g.pow(*rep, c));
            }
        }
        acc
    }
}

/// Data describing a semidirect product `N x| T`: the factors and, for each
/// element of `T`, a permutation of `N` giving its action.
pub struct SemidirectData {
    pub n: FiniteGroup,
    pub t: FiniteGroup,
    /// `action[t][n]` is the image of `n` under the action of `t`.
    pub action: Vec<Vec<Elt>>,
}

/// A constructed semidirect product with its distinguished factors.
#[derive(Debug)]
pub struct SemidirectGroup {
    pub group: FiniteGroup,
    pub n_order: usize,
    pub t_order: usize,
}

impl SemidirectGroup {
    /// Embedding of the kernel factor: `n -> (n, 1)`.
    pub fn embed_n(&self, n: Elt) -> Elt {
        n
    }

    /// Embedding of the complement factor: `t -> (1, t)`.
    pub fn embed_t(&self, t: Elt) -> Elt {
        t * self.n_order
    }

    /// The kernel factor as a subgroup of the product.
    pub fn n_subgroup(&self) -> Subgroup {
        Subgroup { elements: (0..self.n_order).collect() }
    }

    /// The complement factor as a subgroup of the product.
    pub fn t_subgroup(&self) -> Subgroup {
        let mut elements: Vec<Elt> = (0..self.t_order).map(|t| t * self.n_order).collect();
        elements.sort_unstable();
        Subgroup { elements }
    }
}

/// Build the semidirect product, validating that every action map is an
/// automorphism of `N` and that the action is a homomorphism `T -> Aut(N)`.
pub fn semidirect_product(data: &SemidirectData) -> Result<SemidirectGroup, GroupError> {
    let (n, t) = (&data.n, &data.t);
    if data.action.len() != t.order() {
        return Err(GroupError::InvalidTable {
            reason: "one action permutation per element of T required".into(),
        });
    }
    for (te, phi) in data.action.iter().enumerate() {
        if phi.len() != n.order() {
            return Err(GroupError::NotAutomorphism { t: te });
        }
        let mut seen = vec![false; n.order()];
        for &img in phi {
            if img >= n.order() || seen[img] {
                return Err(GroupError::NotAutomorphism { t: te });
            }
            seen[img] = true;
        }
        for a in 0..n.order() {
            for b in 0..n.order() {
                if phi[n.mul(a, b)] != n.mul(phi[a], phi[b]) {
                    return Err(GroupError::NotAutomorphism { t: te });
                }
            }
        }
    }
    if data.action[t.id()] != (0..n.order()).collect::<Vec<_>>() {
        return Err(GroupError::NotActionHom { t1: t.id(), t2: t.id() });
    }
    for t1 in 0..t.order() {
        for t2 in 0..t.order() {
            let composite = &data.action[t.mul(t1, t2)];
            for a in 0..n.order() {
                // Left action: (t1 t2) . a = t1 . (t2 . a).
                if composite[a] != data.action[t1][data.action[t2][a]] {
                    return Err(GroupError::NotActionHom { t1, t2 });
                }
            }
        }
    }
    let size = n.order() * t.order();
    let idx = |ne: Elt, te: Elt| ne + te * n.order();
    let mut table = vec![0; size * size];
    for n1 in 0..n.order() {
        for t1 in 0..t.order() {
            for n2 in 0..n.order() {
                for t2 in 0..t.order() {
                    // (n1, t1)(n2, t2) = (n1 * (t1 . n2), t1 t2).
                    let prod_n = n.mul(n1, data.action[t1][n2]);
                    let prod_t = t.mul(t1, t2);
                    table[idx(n1, t1) * size + idx(n2, t2)] = idx(prod_n, prod_t);
                }
            }
        }
    }
    let group = FiniteGroup::new(size, table, format!("{}:{}", n.name(), t.name()))?;
    Ok(SemidirectGroup { group, n_order: n.order(), t_order: t.order() })
}

/// Express `target` as a product of at most `budget` commutators `[a, b]`
/// with `a` from `pool_a` and `b` from `pool_b`.
///
/// Breadth-first search by number of factors, visiting pools in index order,
/// so the returned witness is minimal in length and lexicographically first
/// among minimal ones.
pub fn commutator_witness(
    g: &FiniteGroup,
    target: Elt,
    pool_a: &[Elt],
    pool_b: &[Elt],
    budget: usize,
) -> Result<Vec<(Elt, Elt)>, GroupError> {
    if target == g.id() {
        return Ok(Vec::new());
    }
    let mut parent: BTreeMap<Elt, (Elt, (Elt, Elt))> = BTreeMap::new();
    let mut frontier = vec![g.id()];
    for _ in 0..budget {
        let mut next = Vec::new();
        for &x in &frontier {
            for &a in pool_a {
                for &b in pool_b {
                    let y = g.mul(x, g.commutator(a, b));
                    if y != g.id() && !parent.contains_key(&y) {
                        parent.insert(y, (x, (a, b)));
                        if y == target {
                            let mut path = Vec::new();
                            let mut cur = target;
                            while cur != g.id() {
                                let (prev, pair) = parent[&cur];
                                path.push(pair);
                                cur = prev;
                            }
                            path.reverse();
                            return Ok(path);
                        }
                        next.push(y);
                    }
                }
            }
        }
        frontier = next;
    }
    Err(GroupError::NoWitness { budget })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// S3 as C3 x| C2 with the inversion action.
    pub fn s3() -> SemidirectGroup {
        let n = FiniteGroup::cyclic(3);
        let t = FiniteGroup::cyclic(2);
        let action = vec![vec![0, 1, 2], vec![0, 2, 1]];
        semidirect_product(&SemidirectData { n, t, action }).unwrap()
    }

    #[test]
    fn cyclic_group_is_valid() {
        let g = FiniteGroup::cyclic(6);
        assert_eq!(g.order(), 6);
        assert_eq!(g.element_order(1), 6);
        assert_eq!(g.pow_i64(1, -1), 5);
    }

    #[test]
    fn bad_table_rejected() {
        // Identity missing.
        let res = FiniteGroup::new(2, vec![1, 0, 0, 1], "bad");
        assert!(matches!(res, Err(GroupError::InvalidTable { .. })));
    }

    #[test]
    fn semidirect_s3() {
        let sd = s3();
        let g = &sd.group;
        assert_eq!(g.order(), 6);
        // A transposition and a 3-cycle do not commute.
        let r = sd.embed_n(1);
        let s = sd.embed_t(1);
        assert_ne!(g.mul(r, s), g.mul(s, r));
        assert_eq!(g.element_order(s), 2);
        assert_eq!(g.element_order(r), 3);
    }

    #[test]
    fn invalid_action_rejected() {
        let n = FiniteGroup::cyclic(3);
        let t = FiniteGroup::cyclic(2);
        // Not an automorphism (swaps identity).
        let action = vec![vec![0, 1, 2], vec![1, 0, 2]];
        let res = semidirect_product(&SemidirectData { n, t, action });
        assert!(matches!(res, Err(GroupError::NotAutomorphism { .. })));

        let n = FiniteGroup::cyclic(5);
        let t = FiniteGroup::cyclic(2);
        // x -> x^2 is an automorphism of C5 but has order 4, not 2.
        let action = vec![vec![0, 1, 2, 3, 4], vec![0, 2, 4, 1, 3]];
        let res = semidirect_product(&SemidirectData { n, t, action });
        assert!(matches!(res, Err(GroupError::NotActionHom { .. })));
    }

    #[test]
    fn lower_central_series_of_s3() {
        let sd = s3();
        let g = &sd.group;
        let chain = series(g, SeriesKind::LowerCentral, &Subgroup::whole(g), 4).unwrap();
        // gamma_2(S3) = A3 = C3, stable from there on.
        assert_eq!(chain.term(1).len(), 6);
        assert_eq!(chain.term(2).len(), 3);
        assert_eq!(chain.term(3).len(), 3);
        assert_eq!(chain.term(10).len(), 3);
        assert!(!chain.reaches_trivial());
    }

    #[test]
    fn relative_series_in_s3() {
        let sd = s3();
        let g = &sd.group;
        let chain = series(g, SeriesKind::RelativeLowerCentral, &sd.n_subgroup(), 4).unwrap();
        // [C3, S3] = C3: the chain is constant.
        assert_eq!(chain.term(1).len(), 3);
        assert_eq!(chain.term(2).len(), 3);
        assert_eq!(chain.stable_at(), 1);
    }

    #[test]
    fn layer_quotient_of_d4() {
        // D4 = C4 x| C2 with inversion.
        let n = FiniteGroup::cyclic(4);
        let t = FiniteGroup::cyclic(2);
        let action = vec![vec![0, 1, 2, 3], vec![0, 3, 2, 1]];
        let sd = semidirect_product(&SemidirectData { n, t, action }).unwrap();
        let g = &sd.group;
        let chain = series(g, SeriesKind::LowerCentral, &Subgroup::whole(g), 4).unwrap();
        // D4 / [D4, D4] = Z/2 + Z/2.
        let layer = LayerQuotient::new(g, chain.term(1), chain.term(2)).unwrap();
        let (tors, free) = layer.group.invariant_factors();
        assert_eq!(free, 0);
        assert_eq!(tors, vec![BigInt::from(2), BigInt::from(2)]);
        // The layer class of a product is the sum of classes.
        let a = sd.embed_n(1);
        let b = sd.embed_t(1);
        let sum: Vec<BigInt> = layer
            .class_of(a)
            .iter()
            .zip(layer.class_of(b).iter())
            .map(|(x, y)| x + y)
            .collect();
        assert_eq!(layer.group.reduce(&sum), layer.class_of(g.mul(a, b)));
    }

    #[test]
    fn witness_search_in_s3() {
        let sd = s3();
        let g = &sd.group;
        let all: Vec<Elt> = (0..g.order()).collect();
        // The 3-cycle r = [s, sr] is a single commutator in S3.
        let r = sd.embed_n(1);
        let w = commutator_witness(g, r, &all, &all, 3).unwrap();
        assert_eq!(w.len(), 1);
        let mut acc = g.id();
        for (a, b) in w {
            acc = g.mul(acc, g.commutator(a, b));
        }
        assert_eq!(acc, r);
        // Nothing in C6 is a commutator.
        let c6 = FiniteGroup::cyclic(6);
        let all6: Vec<Elt> = (0..6).collect();
        assert!(matches!(
            commutator_witness(&c6, 1, &all6, &all6, 3),
            Err(GroupError::NoWitness { .. })
        ));
    }
}
