//! Integral group rings, lattices of ideals, filtrations, and the direct
//! lattice oracle for filtration quotients.
//!
//! A ring element is a coefficient vector indexed by group elements; an
//! ideal (or any subgroup of the additive group of the ring) is a lattice in
//! `Z^{|G|}` stored by its canonical Hermite-normal-form basis. Products of
//! ideals, filtration powers and quotients are computed directly from these
//! lattices. This is the "slow but obviously correct" side of every
//! verification: no structure theory, just exhaustive generation and exact
//! linear algebra.

use crate::abelian::{AbHom, AbelianError, FgAbGroup};
use crate::group::{Elt, FiniteGroup, NSeriesChain, Subgroup};
use crate::matrix::{row_hnf, solve_hnf, IntMatrix};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GroupRingError {
    #[error("lattice quotient is not nested: the denominator is not contained in the numerator")]
    NotNested,
    #[error("splitting identity fails: {identity}")]
    SplitFails { identity: String },
}

/// The integral group ring of a finite group; provides arithmetic on
/// coefficient vectors indexed by group elements.
pub struct GroupRing<'g> {
    pub g: &'g FiniteGroup,
}

impl<'g> GroupRing<'g> {
    pub fn new(g: &'g FiniteGroup) -> Self {
        GroupRing { g }
    }

    pub fn dim(&self) -> usize {
        self.g.order()
    }

    pub fn zero(&self) -> Vec<BigInt> {
        vec![BigInt::zero(); self.dim()]
    }

    /// The basis element `g` as a ring element.
    pub fn elt(&self, x: Elt) -> Vec<BigInt> {
        let mut v = self.zero();
        v[x] = BigInt::one();
        v
    }

    pub fn one(&self) -> Vec<BigInt> {
        self.elt(self.g.id())
    }

    /// `x - 1`, the augmentation-ideal generator attached to `x`.
    pub fn aug_gen(&self, x: Elt) -> Vec<BigInt> {
        let mut v = self.zero();
        v[x] += 1;
        v[self.g.id()] -= 1;
        v
    }

    /// Convolution product in the group ring.
    pub fn multiply(&self, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        let mut out = self.zero();
        for (x, ax) in a.iter().enumerate() {
            if ax.is_zero() {
                continue;
            }
            for (y, by) in b.iter().enumerate() {
                if by.is_zero() {
                    continue;
                }
                out[self.g.mul(x, y)] += ax * by;
            }
        }
        out
    }

    /// Product of a list of `(x_i - 1)` factors.
    pub fn aug_product(&self, xs: &[Elt]) -> Vec<BigInt> {
        let mut acc = self.one();
        for &x in xs {
            acc = self.multiply(&acc, &self.aug_gen(x));
        }
        acc
    }

    /// The conjugation anti-automorphism: `g -> g^{-1}` extended linearly.
    pub fn star(&self, a: &[BigInt]) -> Vec<BigInt> {
        let mut out = self.zero();
        for (x, ax) in a.iter().enumerate() {
            out[self.g.inv(x)] = ax.clone();
        }
        out
    }

    pub fn augmentation(&self, a: &[BigInt]) -> BigInt {
        a.iter().sum()
    }
}

/// A sublattice of `Z^{|G|}`, stored by its HNF basis (canonical: two
/// lattices are equal exactly when the stored bases are identical).
#[derive(Clone, PartialEq, Eq)]
pub struct Lattice {
    dim: usize,
    basis: IntMatrix,
}

impl std::fmt::Debug for Lattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Lattice(rank {} in Z^{})", self.rank(), self.dim)
    }
}

impl Lattice {
    pub fn zero(dim: usize) -> Self {
        Lattice { dim, basis: IntMatrix::zeros(0, dim) }
    }

    pub fn full(dim: usize) -> Self {
        Lattice { dim, basis: IntMatrix::identity(dim) }
    }

    pub fn from_generators(dim: usize, generators: &[Vec<BigInt>]) -> Self {
        Lattice { dim, basis: row_hnf(&IntMatrix::from_rows(generators, dim)) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &IntMatrix {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis_vectors(&self) -> Vec<Vec<BigInt>> {
        (0..self.basis.rows()).map(|i| self.basis.row(i)).collect()
    }

    pub fn contains(&self, v: &[BigInt]) -> bool {
        solve_hnf(&self.basis, v).is_some()
    }

    pub fn is_subset_of(&self, other: &Lattice) -> bool {
        (0..self.basis.rows()).all(|i| other.contains(&self.basis.row(i)))
    }

    pub fn add(&self, other: &Lattice) -> Lattice {
        assert_eq!(self.dim, other.dim);
        Lattice { dim: self.dim, basis: row_hnf(&self.basis.vstack(&other.basis)) }
    }

    /// Sum of several lattices.
    pub fn sum(dim: usize, parts: &[&Lattice]) -> Lattice {
        let mut rows = Vec::new();
        for p in parts {
            assert_eq!(p.dim, dim);
            rows.extend(p.basis_vectors());
        }
        Lattice::from_generators(dim, &rows)
    }

    /// Lattice generated by all pairwise products of basis vectors.
    pub fn product(&self, other: &Lattice, ring: &GroupRing) -> Lattice {
        assert_eq!(self.dim, other.dim);
        let mut rows = Vec::new();
        for i in 0..self.basis.rows() {
            let a = self.basis.row(i);
            for j in 0..other.basis.rows() {
                rows.push(ring.multiply(&a, &other.basis.row(j)));
            }
        }
        Lattice::from_generators(self.dim, &rows)
    }

    /// Image under the conjugation anti-automorphism.
    pub fn star(&self, ring: &GroupRing) -> Lattice {
        let rows: Vec<Vec<BigInt>> = self.basis_vectors().iter().map(|v| ring.star(v)).collect();
        Lattice::from_generators(self.dim, &rows)
    }
}

/// The lattice spanned by the elements of a subgroup (the group ring of the
/// subgroup inside the ambient ring).
pub fn subgroup_span(ring: &GroupRing, h: &Subgroup) -> Lattice {
    let rows: Vec<Vec<BigInt>> = h.elements().iter().map(|&x| ring.elt(x)).collect();
    Lattice::from_generators(ring.dim(), &rows)
}

/// The augmentation ideal of a subgroup inside the ambient group ring:
/// the span of `h - 1` for `h` in the subgroup.
pub fn aug_ideal(ring: &GroupRing, h: &Subgroup) -> Lattice {
    let rows: Vec<Vec<BigInt>> = h.elements().iter().map(|&x| ring.aug_gen(x)).collect();
    Lattice::from_generators(ring.dim(), &rows)
}

/// The filtration of ideal powers attached to an N-series: entry `n` is the
/// subgroup generated by products `(a_1 - 1)...(a_r - 1)` with `a_i` in term
/// `k_i` of the chain and total weight at least `n`. Entry 0 is the span of
/// the chain's top subgroup (the whole ring when the chain starts at `G`).
///
/// Computed by the recursion `I^n = sum_w J_w * I^{n-w}` where `J_w` is the
/// augmentation ideal of the `w`-th chain term: every weighted product
/// splits off its first factor.
pub fn filtration(ring: &GroupRing, chain: &NSeriesChain, depth: usize) -> Vec<Lattice> {
    let dim = ring.dim();
    let j: Vec<Lattice> = (1..=depth).map(|w| aug_ideal(ring, chain.term(w))).collect();
    let mut powers = vec![subgroup_span(ring, chain.term(1))];
    for n in 1..=depth {
        let mut acc = Lattice::zero(dim);
        for w in 1..=n {
            acc = acc.add(&j[w - 1].product(&powers[n - w], ring));
        }
        powers.push(acc);
    }
    powers
}

/// A quotient of nested lattices as a finitely generated abelian group,
/// presented on the basis of the numerator.
pub struct LatticeQuotient {
    pub group: FgAbGroup,
    pub sup: Lattice,
    pub sub: Lattice,
}

pub fn quotient_group(sup: &Lattice, sub: &Lattice) -> Result<LatticeQuotient, GroupRingError> {
    if !sub.is_subset_of(sup) {
        return Err(GroupRingError::NotNested);
    }
    let rel_rows: Vec<Vec<BigInt>> = sub
        .basis_vectors()
        .iter()
        .map(|v| solve_hnf(sup.basis(), v).expect("nested lattice"))
        .collect();
    let group = FgAbGroup::new(sup.rank(), IntMatrix::from_rows(&rel_rows, sup.rank()));
    Ok(LatticeQuotient { group, sup: sup.clone(), sub: sub.clone() })
}

impl LatticeQuotient {
    /// The class of an ambient vector (which must lie in the numerator).
    pub fn class_of(&self, v: &[BigInt]) -> Vec<BigInt> {
        let c = solve_hnf(self.sup.basis(), v).expect("vector lies in the numerator lattice");
        self.group.reduce(&c)
    }

    /// An ambient representative of a class.
    pub fn lift(&self, coords: &[BigInt]) -> Vec<BigInt> {
        self.sup.basis().apply_row(coords)
    }

    /// The homomorphism induced by an ambient-linear map sending the
    /// numerator into `other`'s numerator and the denominator into `other`'s
    /// denominator (checked through well-definedness of the result).
    pub fn induced_map(
        &self,
        other: &LatticeQuotient,
        f: impl Fn(&[BigInt]) -> Vec<BigInt>,
    ) -> Result<AbHom, AbelianError> {
        let images: Vec<Vec<BigInt>> = (0..self.group.gens())
            .map(|i| {
                let v = self.sup.basis().row(i);
                other.class_of(&f(&v))
            })
            .collect();
        AbHom::from_gen_images(self.group.clone(), other.group.clone(), &images)
    }

    /// The map induced by the identity on the ambient ring (for nested or
    /// refined filtrations).
    pub fn comparison_map(&self, other: &LatticeQuotient) -> Result<AbHom, AbelianError> {
        self.induced_map(other, |v| v.to_vec())
    }
}

/// Check that `whole` is the *direct* sum of the given sublattices: the sum
/// must equal `whole`, and since sublattices of `Z^n` are free, directness
/// is exactly additivity of ranks.
pub fn direct_sum_check(whole: &Lattice, parts: &[&Lattice]) -> bool {
    let sum = Lattice::sum(whole.dim(), parts);
    sum == *whole && parts.iter().map(|p| p.rank()).sum::<usize>() == whole.rank()
}

/// Which relative augmentation ideal a filtration quotient refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdealSide {
    G,
    N,
    T,
}

/// All filtration lattices of a semidirect product `G = N x| T` up to a
/// given depth, inside the single ambient ring `Z(G)`:
///
/// * `ig[n]`: powers of the augmentation ideal of `G`;
/// * `it[n]`, `i_n[n]`: powers for the factors `T` and `N` (index 0 is the
///   span of the factor's group elements);
/// * `lambda[n]`: the filtration of `Z(N)` from the relative series
///   `N_(i+1) = [N_(i), G]`;
/// * `kappa`, `kappa_star`, `gamma_star`: the mixed sums
///   `K_n = sum_{i=1}^{n-1} lambda_{n-i} it_i`,
///   `K*_n = sum_{i=1}^{n} lambda_{n-i} it_i`,
///   `G*_n = sum_{i=0}^{n-1} it_{n-i} lambda_i`.
pub struct FiltrationTable<'g> {
    pub sd: &'g crate::group::SemidirectGroup,
    pub ring: GroupRing<'g>,
    pub depth: usize,
    pub gamma_g: NSeriesChain,
    pub gamma_t: NSeriesChain,
    pub gamma_n: NSeriesChain,
    pub tahara: NSeriesChain,
    pub ig: Vec<Lattice>,
    pub it: Vec<Lattice>,
    pub i_n: Vec<Lattice>,
    pub lambda: Vec<Lattice>,
    pub kappa: Vec<Lattice>,
    pub kappa_star: Vec<Lattice>,
    pub gamma_star: Vec<Lattice>,
}

impl<'g> FiltrationTable<'g> {
    pub fn new(sd: &'g crate::group::SemidirectGroup, depth: usize) -> Self {
        use crate::group::{series, SeriesKind};
        let g = &sd.group;
        let ring = GroupRing::new(g);
        let whole = Subgroup::whole(g);
        let gamma_g = series(g, SeriesKind::LowerCentral, &whole, depth + 1).unwrap();
        let gamma_t = series(g, SeriesKind::LowerCentral, &sd.t_subgroup(), depth + 1).unwrap();
        let gamma_n = series(g, SeriesKind::LowerCentral, &sd.n_subgroup(), depth + 1).unwrap();
        let tahara = series(g, SeriesKind::RelativeLowerCentral, &sd.n_subgroup(), depth + 1).unwrap();
        let ig = filtration(&ring, &gamma_g, depth);
        let it = filtration(&ring, &gamma_t, depth);
        let i_n = filtration(&ring, &gamma_n, depth);
        let lambda = filtration(&ring, &tahara, depth);
        let dim = ring.dim();
        let mut kappa = Vec::with_capacity(depth + 1);
        let mut kappa_star = Vec::with_capacity(depth + 1);
        let mut gamma_star = Vec::with_capacity(depth + 1);
        for n in 0..=depth {
            let mut k = Lattice::zero(dim);
            for i in 1..n {
                k = k.add(&lambda[n - i].product(&it[i], &ring));
            }
            kappa.push(k);
            let mut ks = Lattice::zero(dim);
            for i in 1..=n {
                ks = ks.add(&lambda[n - i].product(&it[i], &ring));
            }
            kappa_star.push(ks);
            let mut gs = Lattice::zero(dim);
            for i in 0..n {
                gs = gs.add(&it[n - i].product(&lambda[i], &ring));
            }
            gamma_star.push(gs);
        }
        FiltrationTable {
            sd,
            ring,
            depth,
            gamma_g,
            gamma_t,
            gamma_n,
            tahara,
            ig,
            it,
            i_n,
            lambda,
            kappa,
            kappa_star,
            gamma_star,
        }
    }

    /// The augmentation ideal `I(N)` (equals `lambda[1]` as a lattice, but
    /// kept separate conceptually: it does not depend on the relative series).
    pub fn i_n1(&self) -> &Lattice {
        &self.i_n[1]
    }

    /// `I^n(G) I(H)` for `H = G, N, T`.
    pub fn power_times_ideal(&self, side: IdealSide, n: usize) -> Lattice {
        match side {
            IdealSide::G => self.ig[n].clone(),
            IdealSide::N => self.ig[n].product(&self.i_n[1], &self.ring),
            IdealSide::T => self.ig[n].product(&self.it[1], &self.ring),
        }
    }

    /// Direct lattice computation of the filtration quotient
    /// `I^{n-1}(G) I(H) / I^n(G) I(H)` (with `I^n(G) = I^n(G) I(G)` when
    /// `H = G`).
    pub fn fox_quotient(&self, side: IdealSide, n: usize) -> LatticeQuotient {
        assert!(n >= 1, "filtration quotients start at n = 1");
        match side {
            IdealSide::G => assert!(n + 1 <= self.depth, "depth too small"),
            _ => assert!(n <= self.depth, "depth too small"),
        }
        let (sup, sub) = match side {
            IdealSide::G => (self.ig[n].clone(), self.ig[n + 1].clone()),
            _ => (self.power_times_ideal(side, n - 1), self.power_times_ideal(side, n)),
        };
        quotient_group(&sup, &sub).expect("filtration lattices are nested")
    }

    /// The mixed filtration `F^n = sum_{j>=1} P_g[n-j] * P_h[j]` of a pair
    /// of filtrations (ambient-side powers and subgroup-side powers).
    pub fn mixed(&self, powers_g: &[Lattice], powers_h: &[Lattice], n: usize) -> Lattice {
        let mut acc = Lattice::zero(self.ring.dim());
        for j in 1..=n {
            acc = acc.add(&powers_g[n - j].product(&powers_h[j], &self.ring));
        }
        acc
    }

    /// `K_n` for an arbitrary descending filtration `delta` of `Z(N)`
    /// (indexed so that `delta[i]` is the `i`-th term, `i >= 1`).
    pub fn kappa_of(&self, delta: &[Lattice], n: usize) -> Lattice {
        let mut acc = Lattice::zero(self.ring.dim());
        for i in 1..n {
            acc = acc.add(&delta[n - i].product(&self.it[i], &self.ring));
        }
        acc
    }

    /// The filtration `delta = lambda` (index 0 is the span of `Z(N)`).
    pub fn delta_lambda(&self) -> Vec<Lattice> {
        self.lambda.clone()
    }

    /// The filtration `delta_i = I(N) * lambda_{i-1}` (so `delta_1 = I(N)`).
    pub fn delta_inl(&self) -> Vec<Lattice> {
        let mut out = vec![self.lambda[0].clone()];
        for i in 1..=self.depth {
            out.push(self.i_n[1].product(&self.lambda[i - 1], &self.ring));
        }
        out
    }

    /// The six direct-sum splitting identities of the filtration lattices at
    /// level `n`, plus the conjugation identity
    /// `(I(N) K*_n)^star = G*_n I(N)`.
    pub fn split_check(&self, n: usize) -> Result<(), GroupRingError> {
        assert!(n + 1 <= self.depth, "depth too small for split check");
        let ring = &self.ring;
        let fail = |id: &str| GroupRingError::SplitFails { identity: id.to_string() };
        let i_n1 = &self.i_n[1];
        let i_t1 = &self.it[1];
        // (1) I(G) = I(N) + I(T) + I(N)I(T), directly.
        let nt = i_n1.product(i_t1, ring);
        if !direct_sum_check(&self.ig[1], &[i_n1, i_t1, &nt]) {
            return Err(fail("I(G) = I(N) (+) I(T) (+) I(N)I(T)"));
        }
        // (2) the mirrored version.
        let tn = i_t1.product(i_n1, ring);
        if !direct_sum_check(&self.ig[1], &[i_t1, i_n1, &tn]) {
            return Err(fail("I(G) = I(T) (+) I(N) (+) I(T)I(N)"));
        }
        // (3) I^n(G) = Lambda_n (+) I^n(T) (+) K_n. At n = 1 the sum K_1 is
        // empty and the statement degenerates; identity (1) is its n = 1
        // form, with I(N)I(T) as the mixed summand.
        if n >= 2
            && !direct_sum_check(&self.ig[n], &[&self.lambda[n], &self.it[n], &self.kappa[n]])
        {
            return Err(fail("I^n(G) = Lambda_n (+) I^n(T) (+) K_n"));
        }
        // (4) I^n(G)I(T) = I^{n+1}(T) (+) K_{n+1}.
        let gt = self.ig[n].product(i_t1, ring);
        if !direct_sum_check(&gt, &[&self.it[n + 1], &self.kappa[n + 1]]) {
            return Err(fail("I^n(G)I(T) = I^{n+1}(T) (+) K_{n+1}"));
        }
        // (5) I^n(G)I(N) = Lambda_n I(N) (+) G*_n I(N).
        let gn = self.ig[n].product(i_n1, ring);
        let ln = self.lambda[n].product(i_n1, ring);
        let gsn = self.gamma_star[n].product(i_n1, ring);
        if !direct_sum_check(&gn, &[&ln, &gsn]) {
            return Err(fail("I^n(G)I(N) = Lambda_n I(N) (+) G*_n I(N)"));
        }
        // (6) I(N)I^n(G) = I(N)Lambda_n (+) I(N)K*_n.
        let ng = i_n1.product(&self.ig[n], ring);
        let nl = i_n1.product(&self.lambda[n], ring);
        let nks = i_n1.product(&self.kappa_star[n], ring);
        if !direct_sum_check(&ng, &[&nl, &nks]) {
            return Err(fail("I(N)I^n(G) = I(N)Lambda_n (+) I(N)K*_n"));
        }
        // Conjugation carries I(N)K*_n onto G*_n I(N).
        if nks.star(ring) != gsn {
            return Err(fail("(I(N)K*_n)^star = G*_n I(N)"));
        }
        Ok(())
    }

    /// The splitting of a product against the ideal of a complement:
    /// multiplication `I(N) (x) J -> I(N)J` is injective (ranks multiply),
    /// and `I(N)J / I(N)I(T)J = I(N) (x) (J / I(T)J)` via the map taking a
    /// product back to the tensor of its factors. Checked for `J = I^i(T)`.
    pub fn lemsplit_check(&self, i: usize) -> Result<(), GroupRingError> {
        use crate::abelian::{AbHom, FgAbGroup, TensorGroup};
        let ring = &self.ring;
        let fail = |id: &str| GroupRingError::SplitFails { identity: id.to_string() };
        let i_n1 = &self.i_n[1];
        let j = &self.it[i];
        let nj = i_n1.product(j, ring);
        if nj.rank() != i_n1.rank() * j.rank() {
            return Err(fail("multiplication I(N) (x) J -> I(N)J is not injective"));
        }
        let ntj = i_n1.product(&self.it[1], ring).product(j, ring);
        let quot = quotient_group(&nj, &ntj)?;
        // Target: I(N) (x) J/I(T)J, with I(N) free on its basis.
        let tj = self.it[1].product(j, ring);
        let jq = quotient_group(j, &tj)?;
        let free_n = FgAbGroup::free(i_n1.rank());
        let tens = TensorGroup::new(&free_n, &jq.group);
        // The product basis {b_x * b_y} is a basis of I(N)J, so each
        // generator of the quotient has unique product coordinates.
        let mut prod_rows = Vec::new();
        for x in i_n1.basis_vectors() {
            for y in j.basis_vectors() {
                prod_rows.push(ring.multiply(&x, &y));
            }
        }
        let prod_basis = IntMatrix::from_rows(&prod_rows, ring.dim());
        let jr = j.rank();
        let images: Vec<Vec<BigInt>> = (0..quot.group.gens())
            .map(|k| {
                let v = quot.sup.basis().row(k);
                let coords = crate::matrix::express_in_rows(&prod_basis, &v)
                    .expect("numerator lies in the span of the product basis");
                let mut out = tens.group.zero();
                for (idx, c) in coords.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let (x, y) = (idx / jr, idx % jr);
                    let t = tens.pure(&free_n.gen_elt(x), &jq.group.gen_elt(y));
                    for (o, ti) in out.iter_mut().zip(&t) {
                        *o += c * ti;
                    }
                }
                tens.group.reduce(&out)
            })
            .collect();
        let s = AbHom::from_gen_images(quot.group.clone(), tens.group.clone(), &images)
            .map_err(|_| fail("splitting map is not well defined on the quotient"))?;
        if !s.is_iso() {
            return Err(fail("I(N)J/I(N)I(T)J = I(N) (x) J/I(T)J"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{semidirect_product, series, SemidirectData, SemidirectGroup, SeriesKind};

    fn s3() -> SemidirectGroup {
        let n = FiniteGroup::cyclic(3);
        let t = FiniteGroup::cyclic(2);
        let action = vec![vec![0, 1, 2], vec![0, 2, 1]];
        semidirect_product(&SemidirectData { n, t, action }).unwrap()
    }

    #[test]
    fn augmentation_ideal_has_corank_one() {
        let g = FiniteGroup::cyclic(6);
        let ring = GroupRing::new(&g);
        let i1 = aug_ideal(&ring, &Subgroup::whole(&g));
        assert_eq!(i1.rank(), 5);
        let prod = i1.product(&i1, &ring);
        assert!(prod.is_subset_of(&i1));
    }

    #[test]
    fn fox_quotients_of_cyclic_groups() {
        // Q_n(C_m) = Z/m for every n >= 1.
        for m in [2usize, 4, 6] {
            let g = FiniteGroup::cyclic(m);
            let ring = GroupRing::new(&g);
            let chain = series(&g, SeriesKind::LowerCentral, &Subgroup::whole(&g), 5).unwrap();
            let powers = filtration(&ring, &chain, 4);
            for n in 1..=3 {
                let q = quotient_group(&powers[n], &powers[n + 1]).unwrap();
                let (tors, free) = q.group.invariant_factors();
                assert_eq!(free, 0, "Q_{n}(C{m}) must be finite");
                assert_eq!(tors, vec![BigInt::from(m)], "Q_{n}(C{m})");
            }
        }
    }

    #[test]
    fn first_quotient_is_abelianization() {
        // I(G)/I^2(G) = G^ab; for S3 that is Z/2.
        let sd = s3();
        let g = &sd.group;
        let ring = GroupRing::new(g);
        let chain = series(g, SeriesKind::LowerCentral, &Subgroup::whole(g), 3).unwrap();
        let powers = filtration(&ring, &chain, 2);
        let q = quotient_group(&powers[1], &powers[2]).unwrap();
        assert_eq!(q.group.invariant_factors(), (vec![BigInt::from(2)], 0));
    }

    #[test]
    fn splitting_of_the_augmentation_ideal() {
        let sd = s3();
        let g = &sd.group;
        let ring = GroupRing::new(g);
        let whole = aug_ideal(&ring, &Subgroup::whole(g));
        let i_n = aug_ideal(&ring, &sd.n_subgroup());
        let i_t = aug_ideal(&ring, &sd.t_subgroup());
        let nt = i_n.product(&i_t, &ring);
        let tn = i_t.product(&i_n, &ring);
        assert!(direct_sum_check(&whole, &[&i_n, &i_t, &nt]));
        assert!(direct_sum_check(&whole, &[&i_t, &i_n, &tn]));
    }

    #[test]
    fn star_is_an_involution_and_antihomomorphism() {
        let sd = s3();
        let g = &sd.group;
        let ring = GroupRing::new(g);
        let a = ring.aug_gen(1);
        let b = ring.aug_gen(4);
        assert_eq!(ring.star(&ring.star(&a)), a);
        assert_eq!(
            ring.star(&ring.multiply(&a, &b)),
            ring.multiply(&ring.star(&b), &ring.star(&a))
        );
    }

    #[test]
    fn filtration_table_splits_for_small_corpus() {
        for name in ["C6", "S3", "D4"] {
            let sd = crate::corpus::build(name).unwrap();
            let table = FiltrationTable::new(&sd, 4);
            for n in 1..=3 {
                table.split_check(n).unwrap_or_else(|e| panic!("{name}, n={n}: {e}"));
            }
            for i in 1..=3 {
                table.lemsplit_check(i).unwrap_or_else(|e| panic!("{name}, i={i}: {e}"));
            }
        }
    }

    #[test]
    fn quotient_identities_from_splitting() {
        // Q_2(S3) = Lambda_2/Lambda_3 (+) Q_2(T) (+) K_2/K_3 as invariant
        // factors.
        let sd = crate::corpus::build("S3").unwrap();
        let table = FiltrationTable::new(&sd, 4);
        let q2 = table.fox_quotient(IdealSide::G, 2);
        let lam = quotient_group(&table.lambda[2], &table.lambda[3]).unwrap();
        let qt = quotient_group(&table.it[2], &table.it[3]).unwrap();
        let kap = quotient_group(&table.kappa[2], &table.kappa[3]).unwrap();
        let mut orders: Vec<BigInt> = Vec::new();
        for part in [&lam, &qt, &kap] {
            orders.extend(part.group.invariant_factors().0);
        }
        let combined = crate::abelian::reference::invariant_factors_of_cyclics(&orders);
        assert_eq!(q2.group.invariant_factors().0, combined);
    }

    #[test]
    fn non_nested_quotient_rejected() {
        let g = FiniteGroup::cyclic(4);
        let ring = GroupRing::new(&g);
        let chain = series(&g, SeriesKind::LowerCentral, &Subgroup::whole(&g), 3).unwrap();
        let powers = filtration(&ring, &chain, 2);
        assert!(matches!(
            quotient_group(&powers[2], &powers[1]),
            Err(GroupRingError::NotNested)
        ));
    }
}
