//! Acceptance gate: one pass/fail line per criterion.
//!
//! Each criterion re-runs the relevant verification suites from scratch and
//! prints `criterion N (<name>): PASS/FAIL (<elapsed>)`; the test fails if
//! any criterion fails or exceeds its runtime budget.

use std::time::{Duration, Instant};

use num_bigint::BigInt;

use foxq::abelian::{
    reference, six_term, verify_six_term, AbHom, FgAbGroup, ShortExactSequence, Side,
    TensorGroup, TorGroup,
};
use foxq::cli::{run_suite, Suite};
use foxq::corpus;
use foxq::group::{semidirect_product, FiniteGroup, SemidirectData, SemidirectGroup};
use foxq::quotients::{self, DecompositionReport, Machine};

fn big(x: i64) -> BigInt {
    BigInt::from(x)
}

fn cyclic_as_semidirect(n: usize) -> SemidirectGroup {
    let data = SemidirectData {
        n: FiniteGroup::cyclic(1),
        t: FiniteGroup::cyclic(n),
        action: vec![vec![0]; n],
    };
    semidirect_product(&data).unwrap()
}

/// Run `f` on every corpus group, collecting all reports; any suite error
/// becomes a criterion failure message.
fn over_corpus(
    f: impl Fn(&Machine) -> Result<Vec<DecompositionReport>, quotients::QuotientsError>,
) -> Result<Vec<DecompositionReport>, String> {
    let mut out = Vec::new();
    for name in corpus::CORPUS {
        let sd = corpus::build(name).unwrap();
        let m = Machine::new(&sd).map_err(|e| format!("{name}: {e}"))?;
        let reps = f(&m).map_err(|e| format!("{name}: {e}"))?;
        if let Some(bad) = reps.iter().find(|r| !r.ok()) {
            return Err(format!("{name}: {} failed", bad.claim));
        }
        out.extend(reps);
    }
    Ok(out)
}

struct Criterion {
    number: usize,
    name: &'static str,
    budget: Duration,
    run: Box<dyn Fn() -> Result<(), String>>,
}

fn criterion_1() -> Result<(), String> {
    over_corpus(quotients::split_checks).map(|_| ())
}

fn criterion_2() -> Result<(), String> {
    over_corpus(quotients::theta_checks).map(|_| ())
}

fn criterion_3() -> Result<(), String> {
    over_corpus(quotients::q3_structure)?;
    // Degenerate sanity values on cyclic groups.
    for (n, expect) in [(2usize, 2i64), (4, 4)] {
        let sd = cyclic_as_semidirect(n);
        let m = Machine::new(&sd).map_err(|e| e.to_string())?;
        let reps = quotients::q3_structure(&m).map_err(|e| e.to_string())?;
        let q3 = reps
            .iter()
            .find(|r| r.claim == "q3:G")
            .ok_or_else(|| "missing q3:G record".to_string())?;
        if q3.oracle.torsion != vec![big(expect)] || q3.oracle.free_rank != 0 {
            return Err(format!("Q3(C{n}) != Z/{expect}"));
        }
    }
    Ok(())
}

fn criterion_4() -> Result<(), String> {
    over_corpus(quotients::q2_decomposition)?;
    over_corpus(quotients::fox3_structure)?;
    over_corpus(quotients::fox4_tower).map(|_| ())
}

fn criterion_5() -> Result<(), String> {
    over_corpus(quotients::connecting_tau_checks)?;
    over_corpus(quotients::kd_towers)?;
    over_corpus(quotients::mirror_checks).map(|_| ())
}

fn criterion_6() -> Result<(), String> {
    over_corpus(quotients::amalgam_checks).map(|_| ())
}

fn criterion_7() -> Result<(), String> {
    let reps = quotients::synthetic_free_checks().map_err(|e| e.to_string())?;
    if let Some(bad) = reps.iter().find(|r| !r.ok()) {
        return Err(format!("synthetic: {} failed", bad.claim));
    }
    let reps = over_corpus(quotients::torsionfree_checks)?;
    // The collapse theorem must actually fire on the coprime-order cases.
    if !reps.iter().any(|r| r.claim.starts_with("torkrit:")) {
        return Err("collapse hypothesis never held".into());
    }
    Ok(())
}

/// All invariant-factor chains `d_1 | d_2 | ...` with product at most
/// `max`, i.e. all finite abelian groups of order <= max.
fn abelian_groups_up_to(max: i64) -> Vec<Vec<BigInt>> {
    fn rec(max: i64, min_factor: i64, prefix: &mut Vec<i64>, out: &mut Vec<Vec<BigInt>>) {
        out.push(prefix.iter().map(|&d| BigInt::from(d)).collect());
        let used: i64 = prefix.iter().product();
        let mut d = min_factor;
        while used * d <= max {
            if prefix.last().is_none_or(|&last| d % last == 0) {
                prefix.push(d);
                rec(max, d, prefix, out);
                prefix.pop();
            }
            d += 1;
        }
    }
    let mut out = Vec::new();
    rec(max, 2, &mut Vec::new(), &mut out);
    out
}

fn criterion_8() -> Result<(), String> {
    // Tensor and Tor against the gcd rule for all abelian groups of order
    // <= 36.
    let groups = abelian_groups_up_to(36);
    for a in &groups {
        let ga = FgAbGroup::from_orders(a);
        for b in &groups {
            let gb = FgAbGroup::from_orders(b);
            let tens = TensorGroup::new(&ga, &gb);
            let (tors, free) = tens.group.invariant_factors();
            if free != 0 || tors != reference::tensor_invariants(a, b) {
                return Err(format!("tensor mismatch for {a:?} (x) {b:?}"));
            }
            let tor = TorGroup::new(&ga, &gb);
            let (tors, free) = tor.group.invariant_factors();
            if free != 0 || tors != reference::tor_invariants(a, b) {
                return Err(format!("Tor mismatch for {a:?}, {b:?}"));
            }
        }
    }
    // Six-term exactness on 100 deterministic pseudo-random short exact
    // sequences (subgroup inclusion and cokernel projection of a random
    // map into a random group).
    let mut state: u64 = 0x5eed_1234_abcd_0001;
    let mut rng = move |bound: u64| -> u64 {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 33) % bound
    };
    for case in 0..100 {
        let gens = 1 + rng(3) as usize;
        let orders: Vec<BigInt> = (0..gens).map(|_| big(2 + rng(11) as i64)).collect();
        let b = FgAbGroup::from_orders(&orders);
        let src = FgAbGroup::free(1 + rng(2) as usize);
        let images: Vec<Vec<BigInt>> = (0..src.gens())
            .map(|_| (0..b.gens()).map(|_| big(rng(13) as i64)).collect())
            .collect();
        let f = AbHom::from_gen_images(src, b.clone(), &images)
            .map_err(|e| format!("case {case}: {e}"))?;
        let (_, incl) = f.image();
        let (_, proj) = incl.cokernel();
        let ses = ShortExactSequence::new(incl, proj)
            .map_err(|e| format!("case {case}: {e}"))?;
        let d_orders: Vec<BigInt> = (0..1 + rng(2) as usize)
            .map(|_| big(2 + rng(11) as i64))
            .collect();
        let d = FgAbGroup::from_orders(&d_orders);
        let side = if case % 2 == 0 { Side::First } else { Side::Second };
        let maps = six_term(&ses, &d, side).map_err(|e| format!("case {case}: {e}"))?;
        if !verify_six_term(&maps) {
            return Err(format!("case {case}: six-term sequence not exact"));
        }
    }
    Ok(())
}

fn criterion_9() -> Result<(), String> {
    let full: Vec<Suite> = Suite::ALL.to_vec();
    for name in corpus::CORPUS {
        let sd = corpus::build(name).unwrap();
        let a = run_suite(&sd, name, 5, &full);
        let b = run_suite(&sd, name, 5, &full);
        if !a.all_pass() {
            return Err(format!("{name}: full suite has failures"));
        }
        let ja = serde_json::to_string(&a.without_timing()).unwrap();
        let jb = serde_json::to_string(&b.without_timing()).unwrap();
        if ja != jb {
            return Err(format!("{name}: reports differ between runs"));
        }
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: Vec<Criterion> = vec![
        Criterion {
            number: 1,
            name: "splitting identities",
            budget: Duration::from_secs(30),
            run: Box::new(criterion_1),
        },
        Criterion {
            number: 2,
            name: "word-map isomorphisms",
            budget: Duration::from_secs(60),
            run: Box::new(criterion_2),
        },
        Criterion {
            number: 3,
            name: "degree-3 cokernel structure",
            budget: Duration::from_secs(60),
            run: Box::new(criterion_3),
        },
        Criterion {
            number: 4,
            name: "degree 2-4 decompositions",
            budget: Duration::from_secs(300),
            run: Box::new(criterion_4),
        },
        Criterion {
            number: 5,
            name: "filtration towers and mirror",
            budget: Duration::from_secs(120),
            run: Box::new(criterion_5),
        },
        Criterion {
            number: 6,
            name: "amalgamated sequences",
            budget: Duration::from_secs(120),
            run: Box::new(criterion_6),
        },
        Criterion {
            number: 7,
            name: "free ranks and coprime collapse",
            budget: Duration::from_secs(30),
            run: Box::new(criterion_7),
        },
        Criterion {
            number: 8,
            name: "abelian calculus vs brute force",
            budget: Duration::from_secs(30),
            run: Box::new(criterion_8),
        },
        Criterion {
            number: 9,
            name: "determinism",
            budget: Duration::from_secs(600),
            run: Box::new(criterion_9),
        },
    ];

    let mut failures = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        match &result {
            Ok(()) if elapsed <= c.budget => {
                println!("criterion {} ({}): PASS ({elapsed:.2?})", c.number, c.name);
            }
            Ok(()) => {
                println!(
                    "criterion {} ({}): FAIL (over budget: {elapsed:.2?} > {:?})",
                    c.number, c.name, c.budget
                );
                failures.push(format!("criterion {} over budget", c.number));
            }
            Err(msg) => {
                println!("criterion {} ({}): FAIL ({msg}, {elapsed:.2?})", c.number, c.name);
                failures.push(format!("criterion {}: {msg}", c.number));
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
