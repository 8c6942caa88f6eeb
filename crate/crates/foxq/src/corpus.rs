//! Built-in corpus of semidirect products used by the verification suites.
//!
//! Each entry is a small group `N x| T` with `N` abelian, chosen to exercise
//! different phenomena: trivial actions (direct products), dihedral-type
//! inversion actions, a fixed-point-free action of odd order (`C7 x| C3`),
//! and the alternating group `A4 = V4 x| C3`.

use crate::group::{semidirect_product, FiniteGroup, SemidirectData, SemidirectGroup};

/// Names of the corpus groups, in the fixed order used by reports.
pub const CORPUS: &[&str] = &["C2", "C6", "S3", "D4", "A4", "C3xC4", "C7:C3"];

/// Build a corpus group by name.
pub fn build(name: &str) -> Option<SemidirectGroup> {
    let data = match name {
        // C2 as 1 x| C2: the degenerate kernel exercises empty filtrations.
        "C2" => SemidirectData {
            n: FiniteGroup::cyclic(1),
            t: FiniteGroup::cyclic(2),
            action: vec![vec![0], vec![0]],
        },
        "C6" => trivial_action(FiniteGroup::cyclic(3), FiniteGroup::cyclic(2)),
        "S3" => inversion_action(3),
        "D4" => inversion_action(4),
        "A4" => {
            // V4 x| C3; the 3-cycle permutes the involutions x -> y -> xy.
            let v4 = FiniteGroup::direct_product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(2));
            SemidirectData {
                n: v4,
                t: FiniteGroup::cyclic(3),
                action: vec![vec![0, 1, 2, 3], vec![0, 2, 3, 1], vec![0, 3, 1, 2]],
            }
        }
        "C3xC4" => trivial_action(FiniteGroup::cyclic(3), FiniteGroup::cyclic(4)),
        "C7:C3" => {
            // Action n -> n^2, of order 3 since 2^3 = 1 mod 7.
            let pow2 = |k: usize| (0..7).map(|n| n * k % 7).collect::<Vec<_>>();
            SemidirectData {
                n: FiniteGroup::cyclic(7),
                t: FiniteGroup::cyclic(3),
                action: vec![pow2(1), pow2(2), pow2(4)],
            }
        }
        _ => return None,
    };
    Some(semidirect_product(&data).expect("corpus actions are valid"))
}

fn trivial_action(n: FiniteGroup, t: FiniteGroup) -> SemidirectData {
    let id: Vec<usize> = (0..n.order()).collect();
    let action = vec![id; t.order()];
    SemidirectData { n, t, action }
}

fn inversion_action(m: usize) -> SemidirectData {
    let n = FiniteGroup::cyclic(m);
    let inv: Vec<usize> = (0..m).map(|k| (m - k) % m).collect();
    SemidirectData {
        n,
        t: FiniteGroup::cyclic(2),
        action: vec![(0..m).collect(), inv],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_orders() {
        let expect = [2usize, 6, 6, 8, 12, 12, 21];
        for (name, order) in CORPUS.iter().zip(expect) {
            let sd = build(name).unwrap();
            assert_eq!(sd.group.order(), order, "{name}");
        }
        assert!(build("nope").is_none());
    }

    #[test]
    fn a4_has_trivial_center_and_v4_derived() {
        let sd = build("A4").unwrap();
        let g = &sd.group;
        // The derived subgroup of A4 is V4 (order 4).
        let derived = crate::group::commutator_subgroup(
            g,
            &crate::group::Subgroup::whole(g),
            &crate::group::Subgroup::whole(g),
        );
        assert_eq!(derived.len(), 4);
    }

    #[test]
    fn c7c3_is_nonabelian_of_order_21() {
        let sd = build("C7:C3").unwrap();
        let g = &sd.group;
        let a = sd.embed_n(1);
        let b = sd.embed_t(1);
        assert_ne!(g.mul(a, b), g.mul(b, a));
    }
}
