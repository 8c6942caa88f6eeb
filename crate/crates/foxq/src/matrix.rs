//! Dense integer matrices with exact normal forms.
//!
//! Everything downstream (abelian group presentations, group-ring lattices,
//! enveloping-algebra components) reduces to integer linear algebra, so this
//! module provides the two workhorses once and for all:
//!
//! * row-style Hermite normal form (HNF), optionally with the unimodular
//!   transform, used for lattice canonicalisation and membership tests;
//! * Smith normal form (SNF) with all four transform matrices, used for
//!   invariant factors and changes of generating sets.
//!
//! Entries are [`BigInt`]: the inputs here are small but HNF/SNF intermediate
//! entries can grow well past machine words, and exactness is the whole point.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// A dense `rows x cols` matrix over the integers, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl std::fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "IntMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    /// Build a matrix from explicit rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<BigInt>], cols: usize) -> Self {
        let mut m = IntMatrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "row length mismatch");
            for (j, v) in r.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    /// Convenience constructor from machine integers (tests, small data).
    pub fn from_i64(rows: &[&[i64]], cols: usize) -> Self {
        let rows: Vec<Vec<BigInt>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        IntMatrix::from_rows(&rows, cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<BigInt> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn row_slice(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn row_is_zero(&self, i: usize) -> bool {
        self.row_slice(i).iter().all(|x| x.is_zero())
    }

    /// Stack `self` on top of `other` (column counts must agree).
    pub fn vstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut m = IntMatrix::zeros(self.rows + other.rows, self.cols);
        m.data[..self.data.len()].clone_from_slice(&self.data);
        m.data[self.data.len()..].clone_from_slice(&other.data);
        m
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut m = IntMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(j, i, self.get(i, j).clone());
            }
        }
        m
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut m = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = m.get(i, j) + a * b;
                    m.set(i, j, cur);
                }
            }
        }
        m
    }

    /// Row vector times matrix: `x * self` where `x` has length `rows`.
    pub fn apply_row(&self, x: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(x.len(), self.rows, "apply_row length mismatch");
        let mut out = vec![BigInt::zero(); self.cols];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for j in 0..self.cols {
                let b = self.get(i, j);
                if !b.is_zero() {
                    out[j] += xi * b;
                }
            }
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -self.get(i, j).clone();
            self.set(i, j, v);
        }
    }

    /// row[dst] += q * row[src]
    fn add_mul_row(&mut self, dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = self.get(dst, j) + q * self.get(src, j);
            self.set(dst, j, v);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = -self.get(i, j).clone();
            self.set(i, j, v);
        }
    }

    /// col[dst] += q * col[src]
    fn add_mul_col(&mut self, dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = self.get(i, dst) + q * self.get(i, src);
            self.set(i, dst, v);
        }
    }

    /// Remove all-zero rows (used after HNF, where they sink to the bottom).
    pub fn drop_zero_rows(&self) -> IntMatrix {
        let rows: Vec<Vec<BigInt>> = (0..self.rows)
            .filter(|&i| !self.row_is_zero(i))
            .map(|i| self.row(i))
            .collect();
        IntMatrix::from_rows(&rows, self.cols)
    }
}

/// Result of a row-style Hermite normal form computation.
///
/// `h` satisfies `u * m = h`, with `u` unimodular. Zero rows of `h` (if any)
/// are at the bottom; pivots are positive and entries above each pivot are
/// reduced into `[0, pivot)`.
pub struct HnfResult {
    pub h: IntMatrix,
    pub u: IntMatrix,
}

/// Row HNF with unimodular transform.
pub fn row_hnf_with_transform(m: &IntMatrix) -> HnfResult {
    let mut h = m.clone();
    let mut u = IntMatrix::identity(m.rows());
    let (rows, cols) = (h.rows(), h.cols());
    let mut r = 0; // next pivot row
    for c in 0..cols {
        if r >= rows {
            break;
        }
        // Clear column c below row r by repeated division steps.
        loop {
            // Find the row >= r with the smallest nonzero |entry| in column c.
            let mut best: Option<usize> = None;
            for i in r..rows {
                if h.get(i, c).is_zero() {
                    continue;
                }
                match best {
                    None => best = Some(i),
                    Some(b) => {
                        if h.get(i, c).abs() < h.get(b, c).abs() {
                            best = Some(i);
                        }
                    }
                }
            }
            let Some(b) = best else { break };
            h.swap_rows(r, b);
            u.swap_rows(r, b);
            let mut done = true;
            for i in (r + 1)..rows {
                if h.get(i, c).is_zero() {
                    continue;
                }
                let q = -div_floor_big(h.get(i, c), h.get(r, c));
                h.add_mul_row(i, r, &q);
                u.add_mul_row(i, r, &q);
                if !h.get(i, c).is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if h.get(r, c).is_zero() {
            continue; // no pivot in this column
        }
        if h.get(r, c).is_negative() {
            h.negate_row(r);
            u.negate_row(r);
        }
        // Reduce entries above the pivot into [0, pivot).
        for i in 0..r {
            let q = -div_floor_big(h.get(i, c), h.get(r, c));
            h.add_mul_row(i, r, &q);
            u.add_mul_row(i, r, &q);
        }
        r += 1;
    }
    HnfResult { h, u }
}

fn div_floor_big(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

/// Row HNF with zero rows dropped: the canonical basis of the row lattice.
pub fn row_hnf(m: &IntMatrix) -> IntMatrix {
    row_hnf_with_transform(m).h.drop_zero_rows()
}

/// Pivot columns of an HNF matrix (one per nonzero row).
pub fn hnf_pivots(h: &IntMatrix) -> Vec<usize> {
    let mut pivots = Vec::new();
    for i in 0..h.rows() {
        if let Some(j) = (0..h.cols()).find(|&j| !h.get(i, j).is_zero()) {
            pivots.push(j);
        }
    }
    pivots
}

/// Solve `x * h = v` exactly, where `h` is an HNF basis without zero rows.
///
/// Returns the unique coordinate vector if `v` lies in the row lattice.
pub fn solve_hnf(h: &IntMatrix, v: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(v.len(), h.cols(), "solve_hnf length mismatch");
    let pivots = hnf_pivots(h);
    let mut rem = v.to_vec();
    let mut coeffs = vec![BigInt::zero(); h.rows()];
    for (i, &p) in pivots.iter().enumerate() {
        let (q, r) = rem[p].div_rem(h.get(i, p));
        if !r.is_zero() {
            return None;
        }
        if !q.is_zero() {
            for j in 0..h.cols() {
                let d = h.get(i, j);
                if !d.is_zero() {
                    rem[j] -= &q * d;
                }
            }
        }
        coeffs[i] = q;
    }
    if rem.iter().all(|x| x.is_zero()) {
        Some(coeffs)
    } else {
        None
    }
}

/// Canonical residue of `v` modulo the row lattice of the HNF basis `h`:
/// each pivot coordinate is reduced into `[0, pivot)`.
pub fn reduce_mod_hnf(h: &IntMatrix, v: &[BigInt]) -> Vec<BigInt> {
    assert_eq!(v.len(), h.cols(), "reduce_mod_hnf length mismatch");
    let pivots = hnf_pivots(h);
    let mut rem = v.to_vec();
    for (i, &p) in pivots.iter().enumerate() {
        let q = div_floor_big(&rem[p], h.get(i, p));
        if !q.is_zero() {
            for j in 0..h.cols() {
                let d = h.get(i, j);
                if !d.is_zero() {
                    rem[j] -= &q * d;
                }
            }
        }
    }
    rem
}

/// Membership of `v` in the row lattice of an arbitrary matrix.
pub fn in_rowspace(m: &IntMatrix, v: &[BigInt]) -> bool {
    solve_hnf(&row_hnf(m), v).is_some()
}

/// Express `v` as an integer combination of the rows of `m`, if possible.
pub fn express_in_rows(m: &IntMatrix, v: &[BigInt]) -> Option<Vec<BigInt>> {
    let HnfResult { h, u } = row_hnf_with_transform(m);
    let nonzero = h.drop_zero_rows();
    let c = solve_hnf(&nonzero, v)?;
    // Pad coordinates with zeros for the dropped zero rows, then pull back
    // through the transform: v = c_pad * h = c_pad * u * m.
    let mut c_pad = vec![BigInt::zero(); h.rows()];
    let mut k = 0;
    for i in 0..h.rows() {
        if !h.row_is_zero(i) {
            c_pad[i] = c[k].clone();
            k += 1;
        }
    }
    Some(u.apply_row(&c_pad))
}

/// Basis of the left kernel `{ x : x * m = 0 }` as rows of a matrix.
pub fn left_kernel(m: &IntMatrix) -> IntMatrix {
    let HnfResult { h, u } = row_hnf_with_transform(m);
    let rows: Vec<Vec<BigInt>> = (0..h.rows())
        .filter(|&i| h.row_is_zero(i))
        .map(|i| u.row(i))
        .collect();
    row_hnf(&IntMatrix::from_rows(&rows, m.rows()))
}

/// Inverse of a unimodular matrix (its row HNF is the identity).
pub fn inverse_unimodular(m: &IntMatrix) -> IntMatrix {
    assert_eq!(m.rows(), m.cols(), "inverse of a non-square matrix");
    let HnfResult { h, u } = row_hnf_with_transform(m);
    assert!(h == IntMatrix::identity(m.rows()), "matrix is not unimodular");
    u
}

/// Result of a Smith normal form computation: `u * m * v = d` with `u`, `v`
/// unimodular and `d` diagonal with a divisibility chain `d_1 | d_2 | ...`.
pub struct SnfResult {
    pub d: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
    pub u_inv: IntMatrix,
    pub v_inv: IntMatrix,
}

impl SnfResult {
    /// The nonzero diagonal entries (all positive).
    pub fn diagonal(&self) -> Vec<BigInt> {
        let n = self.d.rows().min(self.d.cols());
        (0..n)
            .map(|i| self.d.get(i, i).clone())
            .filter(|x| !x.is_zero())
            .collect()
    }
}

/// Smith normal form with transforms, by repeated pivoting on the entry of
/// smallest absolute value (keeps intermediate growth down).
pub fn smith_normal_form(m: &IntMatrix) -> SnfResult {
    let mut d = m.clone();
    let (rows, cols) = (d.rows(), d.cols());
    let mut u = IntMatrix::identity(rows);
    let mut u_inv = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    let mut v_inv = IntMatrix::identity(cols);

    // Row op on d/u pairs with the inverse op mirrored on u_inv; likewise for
    // columns with v/v_inv. Invariant: u * m * v == d, u * u_inv == 1, etc.
    let n = rows.min(cols);
    let mut t = 0;
    while t < n {
        // Find a pivot: the nonzero entry of smallest absolute value in the
        // remaining block, scanning in a fixed order for determinism.
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if d.get(i, j).is_zero() {
                    continue;
                }
                match pivot {
                    None => pivot = Some((i, j)),
                    Some((pi, pj)) => {
                        if d.get(i, j).abs() < d.get(pi, pj).abs() {
                            pivot = Some((i, j));
                        }
                    }
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        u_inv.swap_cols(t, pi);
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);
        v_inv.swap_rows(t, pj);

        // Clear row t and column t; restart if a division leaves a remainder
        // smaller than the pivot (the new smaller entry becomes the pivot).
        let mut clean = true;
        for i in (t + 1)..rows {
            if d.get(i, t).is_zero() {
                continue;
            }
            let q = -d.get(i, t) / d.get(t, t);
            d.add_mul_row(i, t, &q);
            u.add_mul_row(i, t, &q);
            u_inv.add_mul_col(t, i, &(-&q));
            if !d.get(i, t).is_zero() {
                clean = false;
            }
        }
        if !clean {
            continue;
        }
        for j in (t + 1)..cols {
            if d.get(t, j).is_zero() {
                continue;
            }
            let q = -d.get(t, j) / d.get(t, t);
            d.add_mul_col(j, t, &q);
            v.add_mul_col(j, t, &q);
            v_inv.add_mul_row(t, j, &(-&q));
            if !d.get(t, j).is_zero() {
                clean = false;
            }
        }
        if !clean {
            continue;
        }
        // Divisibility: if some entry in the remaining block is not divisible
        // by the pivot, fold its row into row t and restart this step.
        let mut bad: Option<usize> = None;
        'outer: for i in (t + 1)..rows {
            for j in (t + 1)..cols {
                if !(d.get(i, j) % d.get(t, t)).is_zero() {
                    bad = Some(i);
                    break 'outer;
                }
            }
        }
        if let Some(i) = bad {
            let one = BigInt::one();
            d.add_mul_row(t, i, &one);
            u.add_mul_row(t, i, &one);
            u_inv.add_mul_col(i, t, &(-&one));
            continue;
        }
        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
            u_inv.negate_col(t);
        }
        t += 1;
    }
    SnfResult { d, u, v, u_inv, v_inv }
}

/// Extended gcd: returns `(g, x, y)` with `g = gcd(a, b) >= 0` and
/// `x*a + y*b = g`.
pub fn extended_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let e = a.extended_gcd(b);
    (e.gcd, e.x, e.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[test]
    fn hnf_of_simple_lattice() {
        let m = IntMatrix::from_i64(&[&[2, 4], &[4, 2]], 2);
        let h = row_hnf(&m);
        // Lattice spanned by (2,4),(4,2): HNF is [[2,4],[0,6]].
        assert_eq!(h, IntMatrix::from_i64(&[&[2, 4], &[0, 6]], 2));
    }

    #[test]
    fn hnf_transform_reproduces_input() {
        let m = IntMatrix::from_i64(&[&[6, 10, 15], &[10, 6, 4], &[0, 5, 5], &[6, 10, 15]], 3);
        let HnfResult { h, u } = row_hnf_with_transform(&m);
        assert_eq!(u.mul(&m), h);
        // u must be unimodular: its HNF is the identity.
        assert_eq!(row_hnf(&u), IntMatrix::identity(4));
    }

    #[test]
    fn solve_and_membership() {
        let m = IntMatrix::from_i64(&[&[2, 0, 1], &[0, 3, 1]], 3);
        let v = vec![big(2), big(3), big(2)];
        let coords = express_in_rows(&m, &v).unwrap();
        assert_eq!(m.apply_row(&coords), v);
        assert!(express_in_rows(&m, &[big(1), big(0), big(0)]).is_none());
    }

    #[test]
    fn snf_of_diag_like_matrix() {
        let m = IntMatrix::from_i64(&[&[2, 0], &[0, 3]], 2);
        let s = smith_normal_form(&m);
        assert_eq!(s.diagonal(), vec![big(1), big(6)]);
    }

    #[test]
    fn left_kernel_simple() {
        let m = IntMatrix::from_i64(&[&[1, 2], &[2, 4]], 2);
        let k = left_kernel(&m);
        assert_eq!(k.rows(), 1);
        let r = k.row(0);
        // Kernel generated by (2, -1) up to sign.
        let z: Vec<BigInt> = m.apply_row(&r);
        assert!(z.iter().all(|x| x.is_zero()));
    }

    proptest! {
        #[test]
        fn snf_invariants(entries in proptest::collection::vec(-9i64..10, 12)) {
            let rows: Vec<Vec<BigInt>> = entries.chunks(4)
                .map(|c| c.iter().map(|&x| BigInt::from(x)).collect())
                .collect();
            let m = IntMatrix::from_rows(&rows, 4);
            let s = smith_normal_form(&m);
            prop_assert_eq!(s.u.mul(&m).mul(&s.v), s.d.clone());
            prop_assert_eq!(s.u.mul(&s.u_inv), IntMatrix::identity(3));
            prop_assert_eq!(s.v.mul(&s.v_inv), IntMatrix::identity(4));
            // Diagonal divisibility chain.
            let diag = s.diagonal();
            for w in diag.windows(2) {
                prop_assert!((&w[1] % &w[0]).is_zero());
            }
            // Off-diagonal entries vanish.
            for i in 0..3 {
                for j in 0..4 {
                    if i != j {
                        prop_assert!(s.d.get(i, j).is_zero());
                    }
                }
            }
        }

        #[test]
        fn hnf_canonical_under_row_shuffle(entries in proptest::collection::vec(-9i64..10, 12), seed in 0usize..24) {
            let rows: Vec<Vec<BigInt>> = entries.chunks(4)
                .map(|c| c.iter().map(|&x| BigInt::from(x)).collect())
                .collect();
            let m = IntMatrix::from_rows(&rows, 4);
            // Permute rows and add a multiple of one row to another: the row
            // lattice is unchanged, so the HNF must be identical.
            let mut rows2 = rows.clone();
            rows2.rotate_left(seed % 3);
            let extra: Vec<BigInt> = rows2[0].iter().zip(&rows2[1])
                .map(|(a, b)| a + BigInt::from(3) * b).collect();
            rows2[0] = extra;
            let m2 = IntMatrix::from_rows(&rows2, 4);
            prop_assert_eq!(row_hnf(&m), row_hnf(&m2));
        }

        #[test]
        fn reduce_mod_hnf_is_canonical(entries in proptest::collection::vec(-9i64..10, 12), v in proptest::collection::vec(-20i64..20, 4)) {
            let rows: Vec<Vec<BigInt>> = entries.chunks(4)
                .map(|c| c.iter().map(|&x| BigInt::from(x)).collect())
                .collect();
            let h = row_hnf(&IntMatrix::from_rows(&rows, 4));
            let v: Vec<BigInt> = v.into_iter().map(BigInt::from).collect();
            let r = reduce_mod_hnf(&h, &v);
            // v - r lies in the lattice, and r is a fixed point of reduction.
            let diff: Vec<BigInt> = v.iter().zip(&r).map(|(a, b)| a - b).collect();
            prop_assert!(solve_hnf(&h, &diff).is_some());
            prop_assert_eq!(reduce_mod_hnf(&h, &r.clone()), r);
        }
    }
}
