//! Group-specification ingestion, suite orchestration and reporting for the
//! `foxq` command-line tool.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus;
use crate::group::{semidirect_product, Elt, FiniteGroup, SemidirectData, SemidirectGroup};
use crate::groupring::{FiltrationTable, IdealSide};
use crate::quotients::{
    self, DecompositionReport, GroupShape, Machine, QuotientsError, FILTRATION_DEPTH,
};

/// Version string embedded in every report.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("usage error: {0}")]
    Usage(String),
}

// ---------------------------------------------------------------------------
// Group specifications.
// ---------------------------------------------------------------------------

/// A group specification: either a raw multiplication table, or a
/// semidirect product `N x| T` with an explicit action.
#[derive(Clone, Debug, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    #[serde(flatten)]
    pub construction: Construction,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Construction {
    /// A full multiplication table with identity at index 0.
    Table { size: usize, table: Vec<Vec<usize>> },
    /// A semidirect product of two factors with an explicit action of `T`
    /// on `N`.
    Semidirect {
        #[serde(rename = "N")]
        n: FactorSpec,
        #[serde(rename = "T")]
        t: FactorSpec,
        action: ActionSpec,
    },
}

/// A factor group: an abelian group given by cyclic orders, or a raw table.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum FactorSpec {
    Abelian { orders: Vec<usize> },
    Table { size: usize, table: Vec<Vec<usize>> },
}

/// The action of `T` on `N`: one permutation of the elements of `N` per
/// element of `T` (in element order), or one exponent matrix per cyclic
/// generator of an abelian `T` acting on the cyclic generators of an
/// abelian `N`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ActionSpec {
    Permutations { permutations: Vec<Vec<usize>> },
    ExponentMatrices { exponents: Vec<Vec<Vec<i64>>> },
}

/// Read and validate a group specification from a JSON file.
pub fn parse_group_spec(path: &Path) -> Result<GroupSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let spec: GroupSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
    Ok(spec)
}

/// Build the (validated) semidirect product described by a specification.
/// All group laws are re-validated; violations name the offending law.
pub fn build_group(spec: &GroupSpec) -> Result<SemidirectGroup, CliError> {
    let data = match &spec.construction {
        Construction::Table { size, table } => {
            // A plain table is treated as `1 x| G`.
            let g = table_group(*size, table, &spec.name)?;
            SemidirectData {
                n: FiniteGroup::cyclic(1),
                t: g,
                action: vec![vec![0]; *size],
            }
        }
        Construction::Semidirect { n, t, action } => {
            let (ng, n_orders) = factor_group(n, "N")?;
            let (tg, t_orders) = factor_group(t, "T")?;
            let action = match action {
                ActionSpec::Permutations { permutations } => permutations.clone(),
                ActionSpec::ExponentMatrices { exponents } => {
                    let n_orders = n_orders.ok_or_else(|| {
                        CliError::InvalidGroup(
                            "exponent-matrix actions require N in abelian-orders form".into(),
                        )
                    })?;
                    let t_orders = t_orders.ok_or_else(|| {
                        CliError::InvalidGroup(
                            "exponent-matrix actions require T in abelian-orders form".into(),
                        )
                    })?;
                    exponent_action(&n_orders, &t_orders, exponents)?
                }
            };
            SemidirectData { n: ng, t: tg, action }
        }
    };
    semidirect_product(&data).map_err(|e| CliError::InvalidGroup(e.to_string()))
}

fn table_group(size: usize, rows: &[Vec<usize>], name: &str) -> Result<FiniteGroup, CliError> {
    if rows.len() != size || rows.iter().any(|r| r.len() != size) {
        return Err(CliError::InvalidGroup(format!(
            "table must be {size} rows of {size} entries"
        )));
    }
    let flat: Vec<Elt> = rows.iter().flatten().copied().collect();
    FiniteGroup::new(size, flat, name).map_err(|e| CliError::InvalidGroup(e.to_string()))
}

/// Build a factor group; for the abelian-orders form also return the orders
/// (the element indexing is mixed-radix over the given cyclic generators).
fn factor_group(
    spec: &FactorSpec,
    label: &str,
) -> Result<(FiniteGroup, Option<Vec<usize>>), CliError> {
    match spec {
        FactorSpec::Table { size, table } => {
            Ok((table_group(*size, table, label)?, None))
        }
        FactorSpec::Abelian { orders } => {
            if orders.iter().any(|&o| o == 0) {
                return Err(CliError::InvalidGroup(format!(
                    "{label}: cyclic orders must be positive"
                )));
            }
            let mut g = FiniteGroup::cyclic(*orders.first().unwrap_or(&1));
            for &o in orders.iter().skip(1) {
                g = FiniteGroup::direct_product(&g, &FiniteGroup::cyclic(o));
            }
            Ok((g, Some(orders.clone())))
        }
    }
}

/// Index of the element with the given digit vector in the mixed-radix
/// indexing of a direct product of cyclic groups (leftmost factor is the
/// most significant digit, matching iterated `direct_product`).
fn digits_to_index(orders: &[usize], digits: &[usize]) -> usize {
    let mut idx = 0;
    for (o, d) in orders.iter().zip(digits) {
        idx = idx * o + d % o;
    }
    idx
}

fn index_to_digits(orders: &[usize], mut idx: usize) -> Vec<usize> {
    let mut digits = vec![0usize; orders.len()];
    for i in (0..orders.len()).rev() {
        digits[i] = idx % orders[i];
        idx /= orders[i];
    }
    digits
}

/// Expand per-generator exponent matrices into per-element permutations of
/// `N`. Matrix `exponents[r]` describes the action of the `r`-th cyclic
/// generator of `T`: row `j` gives the exponents of the image of the `j`-th
/// generator of `N`.
fn exponent_action(
    n_orders: &[usize],
    t_orders: &[usize],
    exponents: &[Vec<Vec<i64>>],
) -> Result<Vec<Vec<Elt>>, CliError> {
    let k = n_orders.len();
    if exponents.len() != t_orders.len()
        || exponents.iter().any(|m| m.len() != k || m.iter().any(|r| r.len() != k))
    {
        return Err(CliError::InvalidGroup(format!(
            "expected one {k}x{k} exponent matrix per generator of T"
        )));
    }
    let n_order: usize = n_orders.iter().product();
    // The permutation of N induced by one application of matrix `mat`.
    let apply = |mat: &[Vec<i64>], e: Elt| -> Elt {
        let digits = index_to_digits(n_orders, e);
        let mut out = vec![0usize; k];
        for j in 0..k {
            for (i, oi) in n_orders.iter().enumerate() {
                let c = mat[j][i].rem_euclid(*oi as i64) as usize;
                out[i] = (out[i] + digits[j] * c) % oi;
            }
        }
        digits_to_index(n_orders, &out)
    };
    let t_order: usize = t_orders.iter().product();
    let mut action = Vec::with_capacity(t_order);
    for te in 0..t_order {
        let t_digits = index_to_digits(t_orders, te);
        let mut perm: Vec<Elt> = (0..n_order).collect();
        for (r, &d) in t_digits.iter().enumerate() {
            for _ in 0..d {
                perm = perm.iter().map(|&e| apply(&exponents[r], e)).collect();
            }
        }
        action.push(perm);
    }
    Ok(action)
}

// ---------------------------------------------------------------------------
// Suites and reports.
// ---------------------------------------------------------------------------

/// The verification suites selectable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Split,
    Theta,
    Q2,
    Q3,
    Q4,
    Towers,
    Amalgam,
    Mirror,
    Torsionfree,
    OracleOnly,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Split,
        Suite::Theta,
        Suite::Q2,
        Suite::Q3,
        Suite::Q4,
        Suite::Towers,
        Suite::Amalgam,
        Suite::Mirror,
        Suite::Torsionfree,
        Suite::OracleOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Split => "split",
            Suite::Theta => "theta",
            Suite::Q2 => "q2",
            Suite::Q3 => "q3",
            Suite::Q4 => "q4",
            Suite::Towers => "towers",
            Suite::Amalgam => "amalgam",
            Suite::Mirror => "mirror",
            Suite::Torsionfree => "torsionfree",
            Suite::OracleOnly => "oracle-only",
        }
    }

    /// The smallest `--max-degree` value for which the suite's claims are
    /// fully defined (the suites verify degrees up to this bound).
    fn required_degree(self) -> usize {
        match self {
            Suite::Theta | Suite::Q2 => 3,
            Suite::Q3 => 4,
            Suite::OracleOnly => 2,
            _ => 5,
        }
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown suite `{s}`")))
    }
}

/// Serialized form of a group shape: sorted invariant factors plus free
/// rank.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ShapeJson {
    pub torsion: Vec<u64>,
    pub free_rank: usize,
}

impl ShapeJson {
    fn of(shape: &GroupShape) -> ShapeJson {
        let mut torsion: Vec<u64> = shape
            .torsion
            .iter()
            .map(|t| t.to_u64().expect("invariant factor fits in u64"))
            .collect();
        torsion.sort_unstable();
        ShapeJson { torsion, free_rank: shape.free_rank }
    }
}

/// One check record of a run report.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct CheckRecord {
    pub claim: String,
    pub anchor: String,
    pub formula: Option<ShapeJson>,
    pub oracle: Option<ShapeJson>,
    pub mode: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_ms: u128,
}

/// A complete verification run. Two runs with identical inputs produce
/// identical reports except for the `wall_ms` fields.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool_version: String,
    pub group: String,
    pub max_degree: usize,
    pub exit_status_contract: String,
    pub checks: Vec<CheckRecord>,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != "fail" && c.status != "error")
    }

    /// The report with all timing fields cleared, for determinism
    /// comparisons.
    pub fn without_timing(&self) -> RunReport {
        let mut out = self.clone();
        for c in &mut out.checks {
            c.wall_ms = 0;
        }
        out
    }
}

fn record_from_report(rep: &DecompositionReport, anchor: &str, wall_ms: u128) -> CheckRecord {
    CheckRecord {
        claim: rep.claim.clone(),
        anchor: anchor.to_string(),
        formula: Some(ShapeJson::of(&rep.formula)),
        oracle: Some(ShapeJson::of(&rep.oracle)),
        mode: match rep.mode {
            quotients::ComparisonMode::ExplicitMap => "explicit-map".to_string(),
            quotients::ComparisonMode::InvariantFactorsOnly => {
                "invariant-factors-only".to_string()
            }
        },
        status: if rep.pass {
            "pass".to_string()
        } else if rep.advisory {
            "advisory".to_string()
        } else {
            "fail".to_string()
        },
        error: None,
        wall_ms,
    }
}

fn run_suite_checks(
    m: &Machine,
    suite: Suite,
) -> Result<Vec<DecompositionReport>, QuotientsError> {
    match suite {
        Suite::Split => quotients::split_checks(m),
        Suite::Theta => quotients::theta_checks(m),
        Suite::Q2 => quotients::q2_decomposition(m),
        Suite::Q3 => {
            let mut out = quotients::q3_structure(m)?;
            out.extend(quotients::fox3_structure(m)?);
            Ok(out)
        }
        Suite::Q4 => quotients::fox4_tower(m),
        Suite::Towers => {
            let mut out = quotients::connecting_tau_checks(m)?;
            out.extend(quotients::kd_towers(m)?);
            Ok(out)
        }
        Suite::Amalgam => quotients::amalgam_checks(m),
        Suite::Mirror => quotients::mirror_checks(m),
        Suite::Torsionfree => {
            let mut out = quotients::torsionfree_checks(m)?;
            out.extend(quotients::synthetic_free_checks()?);
            Ok(out)
        }
        Suite::OracleOnly => unreachable!("handled by the caller"),
    }
}

/// Oracle-only records: the invariant factors of the Fox quotients straight
/// from the lattice oracle, with no formula side.
fn oracle_only_records(m: &Machine, max_degree: usize, out: &mut Vec<CheckRecord>) {
    let start = Instant::now();
    let mut records = Vec::new();
    for side in [IdealSide::G, IdealSide::N, IdealSide::T] {
        let top = max_degree.min(FILTRATION_DEPTH) - 1;
        for n in 1..=top {
            let q = m.table.fox_quotient(side, n);
            let claim = match side {
                IdealSide::G => format!("oracle:Q{n}(G)"),
                IdealSide::N => format!("oracle:Q{n}(G,N)"),
                IdealSide::T => format!("oracle:Q{n}(G,T)"),
            };
            records.push(CheckRecord {
                claim,
                anchor: "oracle-only".to_string(),
                formula: None,
                oracle: Some(ShapeJson::of(&GroupShape::of(&q.group))),
                mode: "oracle-only".to_string(),
                status: "pass".to_string(),
                error: None,
                wall_ms: 0,
            });
        }
    }
    let wall = start.elapsed().as_millis();
    for mut r in records {
        r.wall_ms = wall;
        out.push(r);
    }
}

/// Run the requested suites on a validated group and assemble the report.
/// Per-suite errors are captured as `error` records and never abort the
/// sibling suites.
pub fn run_suite(
    sd: &SemidirectGroup,
    group_name: &str,
    max_degree: usize,
    suites: &[Suite],
) -> RunReport {
    let mut enabled: Vec<Suite> = if suites.is_empty() {
        Suite::ALL.to_vec()
    } else {
        suites.to_vec()
    };
    enabled.sort_unstable();
    enabled.dedup();

    let mut checks = Vec::new();
    let m = match Machine::new(sd) {
        Ok(m) => m,
        Err(e) => {
            checks.push(CheckRecord {
                claim: "machine".to_string(),
                anchor: "setup".to_string(),
                formula: None,
                oracle: None,
                mode: "suite".to_string(),
                status: "error".to_string(),
                error: Some(e.to_string()),
                wall_ms: 0,
            });
            return RunReport {
                tool_version: TOOL_VERSION.to_string(),
                group: group_name.to_string(),
                max_degree,
                exit_status_contract:
                    "0 = all pass, 1 = any check failed, 2 = usage/parse error".to_string(),
                checks,
            };
        }
    };
    for suite in enabled {
        if max_degree < suite.required_degree() {
            checks.push(CheckRecord {
                claim: suite.name().to_string(),
                anchor: suite.name().to_string(),
                formula: None,
                oracle: None,
                mode: "suite".to_string(),
                status: "skipped".to_string(),
                error: Some(format!(
                    "suite requires --max-degree >= {}",
                    suite.required_degree()
                )),
                wall_ms: 0,
            });
            continue;
        }
        if suite == Suite::OracleOnly {
            oracle_only_records(&m, max_degree, &mut checks);
            continue;
        }
        let start = Instant::now();
        match run_suite_checks(&m, suite) {
            Ok(reports) => {
                let wall = start.elapsed().as_millis();
                for rep in &reports {
                    checks.push(record_from_report(rep, suite.name(), wall));
                }
            }
            Err(e) => {
                checks.push(CheckRecord {
                    claim: suite.name().to_string(),
                    anchor: suite.name().to_string(),
                    formula: None,
                    oracle: None,
                    mode: "suite".to_string(),
                    status: "error".to_string(),
                    error: Some(e.to_string()),
                    wall_ms: start.elapsed().as_millis(),
                });
            }
        }
    }
    RunReport {
        tool_version: TOOL_VERSION.to_string(),
        group: group_name.to_string(),
        max_degree,
        exit_status_contract: "0 = all pass, 1 = any check failed, 2 = usage/parse error"
            .to_string(),
        checks,
    }
}

/// Serialize a report with stable field order.
pub fn emit_report(report: &RunReport, format: &str) -> Result<String, CliError> {
    match format {
        "json" => Ok(serde_json::to_string_pretty(report).expect("report serializes")),
        "table" => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "group {}  max-degree {}  tool {}",
                report.group, report.max_degree, report.tool_version
            );
            let _ = writeln!(
                out,
                "{:<34} {:<12} {:<24} {:<9} {:<22} {:<22} {:>8}",
                "claim", "anchor", "mode", "status", "formula", "oracle", "ms"
            );
            for c in &report.checks {
                let shape = |s: &Option<ShapeJson>| match s {
                    Some(s) => format!("{:?}+Z^{}", s.torsion, s.free_rank),
                    None => "-".to_string(),
                };
                let _ = writeln!(
                    out,
                    "{:<34} {:<12} {:<24} {:<9} {:<22} {:<22} {:>8}",
                    c.claim,
                    c.anchor,
                    c.mode,
                    c.status,
                    shape(&c.formula),
                    shape(&c.oracle),
                    c.wall_ms
                );
            }
            Ok(out)
        }
        other => Err(CliError::Usage(format!("unknown format `{other}`"))),
    }
}

/// The oracle query behind `foxq quotient`.
pub fn quotient_query(
    sd: &SemidirectGroup,
    group_name: &str,
    ideal: &str,
    n: usize,
) -> Result<String, CliError> {
    let side = match ideal {
        "G" => IdealSide::G,
        "N" => IdealSide::N,
        "T" => IdealSide::T,
        other => return Err(CliError::Usage(format!("unknown ideal `{other}` (use G, N or T)"))),
    };
    let max_n = FILTRATION_DEPTH - 1;
    if n == 0 || n > max_n {
        return Err(CliError::Usage(format!("--n must be between 1 and {max_n}")));
    }
    let table = FiltrationTable::new(sd, FILTRATION_DEPTH);
    let q = table.fox_quotient(side, n);
    let shape = ShapeJson::of(&GroupShape::of(&q.group));
    let mut doc = BTreeMap::new();
    doc.insert("group", serde_json::json!(group_name));
    doc.insert("ideal", serde_json::json!(ideal));
    doc.insert("n", serde_json::json!(n));
    doc.insert("torsion", serde_json::json!(shape.torsion));
    doc.insert("free_rank", serde_json::json!(shape.free_rank));
    Ok(serde_json::to_string_pretty(&doc).expect("query serializes"))
}

/// The listing behind `foxq corpus`.
pub fn corpus_listing() -> String {
    let mut out = String::new();
    for name in corpus::CORPUS {
        let sd = corpus::build(name).expect("corpus builds");
        let _ = writeln!(out, "{name}  order {}", sd.group.order());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s3_spec() -> GroupSpec {
        serde_json::from_str(
            r#"{
                "name": "S3",
                "type": "semidirect",
                "N": {"orders": [3]},
                "T": {"orders": [2]},
                "action": {"permutations": [[0, 1, 2], [0, 2, 1]]}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn s3_spec_builds_order_six() {
        let sd = build_group(&s3_spec()).unwrap();
        assert_eq!(sd.group.order(), 6);
        let a = sd.embed_n(1);
        let b = sd.embed_t(1);
        assert_ne!(sd.group.mul(a, b), sd.group.mul(b, a));
    }

    #[test]
    fn exponent_matrix_action_matches_permutations() {
        let spec: GroupSpec = serde_json::from_str(
            r#"{
                "name": "S3",
                "type": "semidirect",
                "N": {"orders": [3]},
                "T": {"orders": [2]},
                "action": {"exponents": [[[-1]]]}
            }"#,
        )
        .unwrap();
        let sd = build_group(&spec).unwrap();
        assert_eq!(sd.group.order(), 6);
        let ref_sd = build_group(&s3_spec()).unwrap();
        // Same multiplication table.
        for a in 0..6 {
            for b in 0..6 {
                assert_eq!(sd.group.mul(a, b), ref_sd.group.mul(a, b));
            }
        }
    }

    #[test]
    fn non_automorphism_action_is_rejected() {
        let spec: GroupSpec = serde_json::from_str(
            r#"{
                "name": "bad",
                "type": "semidirect",
                "N": {"orders": [4]},
                "T": {"orders": [2]},
                "action": {"permutations": [[0, 1, 2, 3], [0, 2, 1, 3]]}
            }"#,
        )
        .unwrap();
        let err = build_group(&spec).unwrap_err();
        assert!(matches!(err, CliError::InvalidGroup(_)), "{err}");
        assert!(err.to_string().contains("automorphism"), "{err}");
    }

    #[test]
    fn table_spec_of_c2_builds() {
        let spec: GroupSpec = serde_json::from_str(
            r#"{"name": "C2", "type": "table", "size": 2, "table": [[0, 1], [1, 0]]}"#,
        )
        .unwrap();
        let sd = build_group(&spec).unwrap();
        assert_eq!(sd.group.order(), 2);
    }

    #[test]
    fn invalid_table_names_the_law() {
        let spec: GroupSpec = serde_json::from_str(
            r#"{"name": "bad", "type": "table", "size": 2, "table": [[1, 0], [0, 1]]}"#,
        )
        .unwrap();
        let err = build_group(&spec).unwrap_err();
        assert!(err.to_string().contains("identity"), "{err}");
    }

    #[test]
    fn d4_q3_suite_report() {
        let sd = corpus::build("D4").unwrap();
        let report = run_suite(&sd, "D4", 4, &[Suite::Q3]);
        assert!(report.all_pass());
        assert!(report.checks.iter().any(|c| c.claim == "q3:G"));
        let q3g = report.checks.iter().find(|c| c.claim == "fox3:Q3(G)").unwrap();
        assert_eq!(q3g.formula, q3g.oracle);
    }

    #[test]
    fn skipped_suites_below_required_degree() {
        let sd = corpus::build("C2").unwrap();
        let report = run_suite(&sd, "C2", 2, &[Suite::Q4, Suite::OracleOnly]);
        assert!(report.checks.iter().any(|c| c.status == "skipped"));
        assert!(report.checks.iter().any(|c| c.anchor == "oracle-only"));
    }

    #[test]
    fn reports_are_deterministic_modulo_timing() {
        let sd = corpus::build("S3").unwrap();
        let a = run_suite(&sd, "S3", 5, &[Suite::Q2, Suite::Mirror]);
        let b = run_suite(&sd, "S3", 5, &[Suite::Q2, Suite::Mirror]);
        let ja = serde_json::to_string(&a.without_timing()).unwrap();
        let jb = serde_json::to_string(&b.without_timing()).unwrap();
        assert_eq!(ja, jb);
        assert!(a.all_pass());
    }
}
