//! Acceptance suite: one PASS/FAIL line per criterion. All comparisons are exact.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::*;
use modinv::gorenstein::is_palindromic;
use modinv::group::DEFAULT_CAP;
use modinv::invring::{certify_polynomial_ring, construct_tg_invariants, InvError, InvariantOracle};
use modinv::modstruct::{classify_case, Chapter};
use modinv::polyact::{act, subalgebra_degree_basis};
use modinv::report::{
    analyze_group, fuzz_campaign, Analysis, AnalysisOptions, FuzzConfig, FuzzSummary, GroupInput,
    DEFAULT_DEGREE_BOUND,
};

/// Seeded streams: (p, seed, instances). 500 instances in total.
const STREAMS: [(u32, u64, usize); 3] = [(2, 11, 170), (3, 12, 170), (5, 13, 160)];
const FUZZ_INSTANCES: usize = 500;
const FUZZ_TIME_LIMIT: Duration = Duration::from_secs(600);
const MIN_ORACLE_AGREEMENTS: usize = 50;
const HILBERT_DEGREES: u32 = 12;
const CHAPTERS: [Chapter; 6] = [Chapter::A, Chapter::B, Chapter::D, Chapter::E, Chapter::F, Chapter::G];

struct Campaign {
    summary: FuzzSummary,
    analyses: Vec<Analysis>,
    elapsed: Duration,
}

fn run_campaign() -> Campaign {
    let start = Instant::now();
    let mut summary = FuzzSummary::default();
    let mut analyses = Vec::new();
    for &(p, seed, count) in &STREAMS {
        let (s, a) = fuzz_campaign(&FuzzConfig::new(p, 1, count, seed)).expect("campaign runs");
        summary = summary.merge(&s);
        analyses.extend(a);
    }
    Campaign { summary, analyses, elapsed: start.elapsed() }
}

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn fuzz_all_gorenstein(c: &Campaign) -> Outcome {
    let total = c.analyses.len();
    let gor = c.analyses.iter().filter(|a| a.det.gorenstein() == Some(true)).count();
    let bad: Vec<usize> = (0..total).filter(|&i| c.analyses[i].det.gorenstein() != Some(true)).collect();
    check(
        total == FUZZ_INSTANCES && gor == total && c.elapsed < FUZZ_TIME_LIMIT,
        format!("{gor}/{total} Gorenstein by the det criterion in {:.1}s", c.elapsed.as_secs_f64()),
        format!("{gor}/{total} Gorenstein in {:.1}s; failing instances {bad:?}", c.elapsed.as_secs_f64()),
    )
}

fn oracle_agreement(c: &Campaign) -> Outcome {
    let s = &c.summary;
    let covered: BTreeSet<String> = s.oracle_by_chapter.keys().cloned().collect();
    let missing: Vec<String> =
        CHAPTERS.iter().map(|ch| ch.to_string()).filter(|ch| !covered.contains(ch)).collect();
    check(
        s.oracle_compared >= MIN_ORACLE_AGREEMENTS
            && s.oracle_agree == s.oracle_compared
            && missing.is_empty(),
        format!(
            "{}/{} oracle verdicts agree, per chapter {:?}",
            s.oracle_agree, s.oracle_compared, s.oracle_by_chapter
        ),
        format!(
            "{}/{} oracle verdicts agree, chapters without an oracle verdict {missing:?}",
            s.oracle_agree, s.oracle_compared
        ),
    )
}

fn formula_agreement(c: &Campaign) -> Outcome {
    let s = &c.summary;
    check(
        s.formula_compared > 0 && s.formula_agree == s.formula_compared,
        format!("{}/{} closed-form verdicts agree", s.formula_agree, s.formula_compared),
        format!("{}/{} closed-form verdicts agree", s.formula_agree, s.formula_compared),
    )
}

fn presentation_of(input: GroupInput) -> Result<(Option<Chapter>, String, Vec<u32>, Analysis), String> {
    let a = analyze_group(&input, &AnalysisOptions::default()).map_err(|e| e.to_string())?;
    let p = a.presentation.as_ref().ok_or("no presentation")?;
    Ok((a.chapter(), p.construction.tag().to_string(), p.degrees.clone(), a.clone()))
}

fn degree_tables() -> Outcome {
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for (p, s, q) in [(2, 1, 2u32), (3, 1, 3), (2, 2, 4)] {
        let f = gf(p, s);
        let want = vec![q + 1, q * q - q, 1];
        match presentation_of(GroupInput { generators: block_sl2_gens(&f, q), field: f }) {
            Ok((_, tag, d, _)) if tag == "plane-dickson" && d == want => rows.push(format!("SL2({q}) {d:?}")),
            other => failures.push(format!("SL2({q}): {:?}", other.map(|x| (x.1, x.2)))),
        }
    }
    for p in [2u32, 3] {
        let f = gf(p, 1);
        let want = vec![p * p, p, 1];
        match presentation_of(GroupInput { generators: u3_gens(&f), field: f }) {
            Ok((Some(Chapter::F), tag, d, _)) if tag == "unitriangular" && d == want => {
                rows.push(format!("U3({p}) {d:?}"))
            }
            other => failures.push(format!("U3({p}): {:?}", other.map(|x| (x.0, x.1, x.2)))),
        }
    }
    {
        let f = gf(3, 1);
        match presentation_of(GroupInput { generators: line_extension_gens(&f), field: f }) {
            Ok((Some(Chapter::E), tag, d, _)) if tag == "line-extension" && d == vec![12, 18, 1] => {
                rows.push(format!("line extension {d:?}"))
            }
            other => failures.push(format!("line extension: {:?}", other.map(|x| (x.0, x.1, x.2)))),
        }
    }
    for p in [2u32, 3, 5] {
        let f = gf(p, 1);
        let g = group(&f, &plane_fixer_gens(&f));
        let cls = classify_case(&g).unwrap();
        let t = g.reflection_subgroups().t.group;
        let fix_order = cls.planes.first().and_then(|w| t.fix_subgroup(w).ok()).map(|h| h.order());
        let pres = construct_tg_invariants(&t, &cls, DEFAULT_DEGREE_BOUND);
        match (cls.chapter, fix_order, pres) {
            (Chapter::G, Some(n), Ok(pres)) if pres.degrees[0] as usize == n && n == (p * p) as usize => {
                rows.push(format!("G p={p} deg {} = |Fix|", n))
            }
            (ch, n, pres) => failures.push(format!("G p={p}: {ch:?} {n:?} {:?}", pres.map(|x| x.degrees))),
        }
    }
    check(failures.is_empty(), rows.join("; "), failures.join("; "))
}

fn hilbert_golden() -> Outcome {
    let f = gf(2, 1);
    let mut failures = Vec::new();
    let cases = [
        ("U3(2)", u3_gens(&f), vec![1u32, 2, 4]),
        ("transvection", vec![modinv::linalg::Matrix::elementary(&f, 3, 0, 2, f.one())], vec![1, 1, 2]),
    ];
    for (name, gens, weights) in cases {
        let mut oracle = InvariantOracle::new(&group(&f, &gens));
        let dims: Vec<usize> = (0..=HILBERT_DEGREES).map(|d| oracle.dim(d)).collect();
        let want: Vec<usize> = (0..=HILBERT_DEGREES).map(|d| weighted_count(&weights, d)).collect();
        if dims != want {
            failures.push(format!("{name}: {dims:?} != {want:?}"));
        }
    }
    let mut oracle = InvariantOracle::new(&group(&f, &u3_gens(&f)));
    let head: Vec<usize> = (0..7).map(|d| oracle.dim(d)).collect();
    if head != [1, 1, 2, 2, 4, 4, 6] {
        failures.push(format!("U3(2) head {head:?}"));
    }
    check(
        failures.is_empty(),
        format!("degrees 0..={HILBERT_DEGREES} match for both groups"),
        failures.join("; "),
    )
}

fn negative_control_check() -> Outcome {
    let opts = AnalysisOptions { oracle: true, ..AnalysisOptions::default() };
    let a = analyze_group(&negative_control(), &opts).map_err(|e| e.to_string())?;
    let det = a.det.verdict().ok_or("no det verdict")?;
    let f = &a.input.field;
    let witness = det.witness.as_ref().ok_or("no witness")?;
    let oracle =
        a.oracle.verdict().ok_or_else(|| format!("no oracle verdict: {:?}", a.oracle.gorenstein()))?;
    let secondaries = oracle.secondary_degrees.clone().ok_or("no secondary degrees")?;
    let mut counts = vec![0i64; secondaries.iter().max().map_or(0, |&m| m as usize + 1)];
    for &s in &secondaries {
        counts[s as usize] += 1;
    }
    check(
        a.chapter() == Some(Chapter::A)
            && !det.gorenstein
            && witness.value != f.one()
            && !oracle.gorenstein
            && !is_palindromic(&counts),
        format!("det {} at {:?}; secondaries {secondaries:?}", f.fmt_elem(witness.value), witness.element),
        format!(
            "chapter {:?}, det verdict {}, oracle verdict {}",
            a.chapter(),
            det.gorenstein,
            oracle.gorenstein
        ),
    )
}

const REQUIRED_PROPERTIES: [&str; 7] = [
    "stable_lines_fixed_by_transvections",
    "transvection_subgroup_normal",
    "chapter_b_elementary_abelian",
    "fix_conjugation_formula",
    "dual_module_identities",
    "annihilator_sets_agree",
    "fixw_coefficients_invariant",
];

fn structure_properties(c: &Campaign) -> Outcome {
    let mut checks = 0;
    let mut seen = BTreeSet::new();
    for a in &c.analyses {
        for name in a.properties.keys() {
            checks += 1;
            seen.insert(*name);
        }
    }
    let missing: Vec<&str> = REQUIRED_PROPERTIES.iter().copied().filter(|n| !seen.contains(n)).collect();
    let failures = &c.summary.property_failures;
    check(
        failures.is_empty() && missing.is_empty(),
        format!("{checks} checks over {} instances, none failed", c.analyses.len()),
        format!("failures {failures:?}, never exercised {missing:?}"),
    )
}

fn certification_soundness(c: &Campaign) -> Outcome {
    let bound = DEFAULT_DEGREE_BOUND;
    let mut checked = 0;
    let mut failures = Vec::new();
    for (i, a) in c.analyses.iter().enumerate() {
        let g = a.input.closure(DEFAULT_CAP).map_err(|e| e.to_string())?;
        let Ok(cls) = classify_case(&g) else { continue };
        let t = g.reflection_subgroups().t.group;
        let pres = match construct_tg_invariants(&t, &cls, bound) {
            Ok(p) => p,
            Err(InvError::CertificationFailed { construction, detail }) => {
                failures.push(format!("#{i} {construction}: {detail}"));
                continue;
            }
            Err(_) => continue,
        };
        checked += 1;
        let tp = t.conjugate(&cls.adapted_basis);
        let cert = certify_polynomial_ring(&pres.gens, &tp, bound).map_err(|e| e.to_string())?;
        let product: usize = pres.degrees.iter().map(|&d| d as usize).product();
        let invariant = tp.generators().iter().all(|m| pres.gens.iter().all(|f| act(m, f).unwrap() == *f));
        let mut oracle = InvariantOracle::new(&tp);
        let dims_ok = (0..=bound).all(|d| {
            let want = weighted_count(&pres.degrees, d);
            oracle.dim(d) == want && subalgebra_degree_basis(&pres.gens, d).dim == want
        });
        if !(cert.passed && product == tp.order() && invariant && dims_ok) {
            failures.push(format!("#{i} {}: certificate {cert:?}", pres.construction.tag()));
        }
    }
    check(
        failures.is_empty() && checked > 0,
        format!("{checked} constructed presentations recertified to degree {bound}"),
        failures.join("; "),
    )
}

fn main() {
    let start = Instant::now();
    let campaign = run_campaign();
    let results: Vec<(&str, Outcome)> = vec![
        ("1 fuzzed reducible subgroups of SL(3, p) are Gorenstein", fuzz_all_gorenstein(&campaign)),
        ("2 palindrome oracle agreement", oracle_agreement(&campaign)),
        ("3 closed-form agreement", formula_agreement(&campaign)),
        ("4 degree tables", degree_tables()),
        ("5 Hilbert series golden values", hilbert_golden()),
        ("6 GF(4) negative control", negative_control_check()),
        ("7 structure properties", structure_properties(&campaign)),
        ("8 certification soundness", certification_soundness(&campaign)),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
