//! Group input files, the full analysis pipeline, and the seeded fuzz campaign.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gf::{Field, FieldError};
use crate::gorenstein::{
    chapter_formula, det_criterion, orbit_hsop, palindrome_oracle, GorError, GorensteinVerdict,
};
use crate::group::{closure, GroupError, MatrixGroup, DEFAULT_CAP};
use crate::invring::{construct_tg_invariants, search_tg_invariants, InvError, InvariantPresentation};
use crate::linalg::{LinalgError, Matrix};
use crate::modstruct::{classify_case, Chapter, ModuleClassification};
use crate::properties::{complement_determinant_identity, structure_checks, PropertyTable};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Degree bound used when neither the command line nor the environment sets one.
pub const DEFAULT_DEGREE_BOUND: u32 = 24;

/// Environment variable overriding the default degree bound.
pub const DEGREE_BOUND_ENV: &str = "MODINV_DEGREE_BOUND";

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed group file: {0}")]
    Format(String),
    #[error("gf: {0}")]
    Field(#[from] FieldError),
    #[error("linalg: {0}")]
    Matrix(#[from] LinalgError),
    #[error("group: {0}")]
    Group(#[from] GroupError),
}

/// A field together with generator matrices acting on row vectors from the right.
#[derive(Clone, Debug)]
pub struct GroupInput {
    pub field: Field,
    pub generators: Vec<Matrix>,
}

impl GroupInput {
    pub fn from_json(v: &serde_json::Value) -> Result<GroupInput, InputError> {
        let int = |key: &str| {
            v.get(key)
                .and_then(|x| x.as_u64())
                .map(|x| x as u32)
                .ok_or_else(|| InputError::Format(format!("missing integer field \"{key}\"")))
        };
        let p = int("p")?;
        let s = int("s")?;
        let field = match v.get("modulus") {
            None | Some(serde_json::Value::Null) => Field::new(p, s)?,
            Some(m) => {
                let coeffs: Vec<u32> = serde_json::from_value(m.clone())
                    .map_err(|_| InputError::Format("modulus must be a list of integers".into()))?;
                Field::with_modulus(p, s, &coeffs)?
            }
        };
        let gens = v
            .get("generators")
            .and_then(|g| g.as_array())
            .ok_or_else(|| InputError::Format("missing list \"generators\"".into()))?;
        let generators = gens.iter().map(|g| Matrix::from_json(&field, g)).collect::<Result<Vec<_>, _>>()?;
        for (i, g) in generators.iter().enumerate() {
            if g.rows() != 3 || g.cols() != 3 {
                return Err(
                    GroupError::DimMismatch { index: i, rows: g.rows(), cols: g.cols(), dim: 3 }.into()
                );
            }
        }
        Ok(GroupInput { field, generators })
    }

    pub fn load(path: &Path) -> Result<GroupInput, InputError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| InputError::Io { path: path.display().to_string(), source })?;
        GroupInput::from_json(&serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.field.p(),
            "s": self.field.s(),
            "modulus": self.field.modulus(),
            "convention": "coordinates (=row vectors) from the right",
            "generators": self.generators.iter().map(|g| g.to_json()).collect::<Vec<_>>(),
        })
    }

    pub fn closure(&self, cap: usize) -> Result<MatrixGroup, GroupError> {
        closure(&self.field, 3, &self.generators, cap)
    }
}

/// Knobs of one analysis.
#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub degree_bound: u32,
    pub oracle: bool,
    pub cap: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { degree_bound: DEFAULT_DEGREE_BOUND, oracle: false, cap: DEFAULT_CAP }
    }
}

/// Outcome of one verdict method: a verdict, or the reason there is none.
#[derive(Clone, Debug)]
pub enum MethodOutcome {
    Verdict(GorensteinVerdict),
    Unavailable(String),
}

impl MethodOutcome {
    pub fn verdict(&self) -> Option<&GorensteinVerdict> {
        match self {
            MethodOutcome::Verdict(v) => Some(v),
            MethodOutcome::Unavailable(_) => None,
        }
    }

    pub fn gorenstein(&self) -> Option<bool> {
        self.verdict().map(|v| v.gorenstein)
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            MethodOutcome::Verdict(v) => v.to_json(),
            MethodOutcome::Unavailable(reason) => serde_json::json!({ "unavailable": reason }),
        }
    }
}

fn outcome(r: Result<GorensteinVerdict, GorError>) -> MethodOutcome {
    match r {
        Ok(v) => MethodOutcome::Verdict(v),
        Err(e) => MethodOutcome::Unavailable(e.to_string()),
    }
}

/// Everything computed for one group.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub input: GroupInput,
    pub order: usize,
    pub t_order: usize,
    pub w_order: usize,
    pub special: bool,
    pub classification: Result<ModuleClassification, String>,
    pub presentation: Option<InvariantPresentation>,
    pub presentation_note: Option<String>,
    pub det: MethodOutcome,
    pub formula: MethodOutcome,
    pub oracle: MethodOutcome,
    pub properties: PropertyTable,
    pub degree_bound: u32,
    /// `(campaign seed, instance index)` for fuzz-generated inputs.
    pub seed: Option<(u64, usize)>,
    pub timing_ms: u128,
}

impl Analysis {
    pub fn chapter(&self) -> Option<Chapter> {
        self.classification.as_ref().ok().map(|c| c.chapter)
    }

    /// Verdicts of the methods that returned one, in the order det, formula, oracle.
    pub fn verdicts(&self) -> Vec<bool> {
        [&self.det, &self.formula, &self.oracle].iter().filter_map(|m| m.gorenstein()).collect()
    }

    /// True iff every pair of available verdicts coincides.
    pub fn methods_agree(&self) -> bool {
        let v = self.verdicts();
        v.windows(2).all(|w| w[0] == w[1])
    }

    /// The authoritative verdict.
    pub fn gorenstein(&self) -> Option<bool> {
        self.det.gorenstein().or(self.formula.gorenstein()).or(self.oracle.gorenstein())
    }

    /// 0 when analyzed consistently, 2 when the methods disagree.
    pub fn exit_code(&self) -> i32 {
        if self.methods_agree() {
            0
        } else {
            2
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let cls = match &self.classification {
            Ok(c) => c.to_json(),
            Err(e) => serde_json::json!({ "error": e }),
        };
        let pres = match &self.presentation {
            Some(p) => p.to_json(),
            None => serde_json::Value::Null,
        };
        serde_json::json!({
            "tool_version": VERSION,
            "input": self.input.to_json(),
            "seed": self.seed.map(|(s, i)| serde_json::json!({ "seed": s, "instance": i })),
            "degree_bound": self.degree_bound,
            "group_order": self.order,
            "transvection_subgroup_order": self.t_order,
            "reflection_subgroup_order": self.w_order,
            "special_linear": self.special,
            "classification": cls,
            "presentation": pres,
            "presentation_note": self.presentation_note,
            "verdicts": {
                "det_criterion": self.det.to_json(),
                "chapter_formula": self.formula.to_json(),
                "palindrome_oracle": self.oracle.to_json(),
            },
            "gorenstein": self.gorenstein(),
            "methods_agree": self.methods_agree(),
            "properties": self.properties,
            "timing_ms": self.timing_ms,
        })
    }
}

/// Invariant presentation: the explicit construction when it applies and certifies,
/// otherwise the degree-ascending search.
pub fn presentation_for(
    t: &MatrixGroup,
    cls: &ModuleClassification,
    bound: u32,
) -> (Option<InvariantPresentation>, Option<String>) {
    match construct_tg_invariants(t, cls, bound) {
        Ok(p) => (Some(p), None),
        Err(InvError::OutOfScope(c)) => (None, Some(format!("chapter {c} is out of scope"))),
        Err(e) => {
            let why = e.to_string();
            match search_tg_invariants(t, cls, bound, bound) {
                Ok(Some(p)) => {
                    (Some(p), Some(format!("construction unavailable ({why}); generators found by search")))
                }
                Ok(None) => (
                    None,
                    Some(format!(
                        "construction unavailable ({why}); search found no generators up to degree {bound}"
                    )),
                ),
                Err(e2) => (None, Some(format!("construction unavailable ({why}); search failed: {e2}"))),
            }
        }
    }
}

/// Run the pipeline on an already closed group.
pub fn analyze_closed(input: GroupInput, g: &MatrixGroup, opts: &AnalysisOptions) -> Analysis {
    let start = Instant::now();
    let refl = g.reflection_subgroups();
    let t = refl.t.group.clone();
    let special = g.is_special();
    let classification = classify_case(g).map_err(|e| format!("modstruct: {e}"));
    let mut a = Analysis {
        input,
        order: g.order(),
        t_order: refl.t.order(),
        w_order: refl.w.order(),
        special,
        classification,
        presentation: None,
        presentation_note: None,
        det: MethodOutcome::Unavailable("not computed".into()),
        formula: MethodOutcome::Unavailable("not computed".into()),
        oracle: MethodOutcome::Unavailable("not requested".into()),
        properties: PropertyTable::new(),
        degree_bound: opts.degree_bound,
        seed: None,
        timing_ms: 0,
    };
    if !special {
        a.det = MethodOutcome::Unavailable(GorError::NotSL.to_string());
        a.formula = MethodOutcome::Unavailable(GorError::NotSL.to_string());
        a.timing_ms = start.elapsed().as_millis();
        return a;
    }
    let Ok(cls) = a.classification.clone() else {
        a.timing_ms = start.elapsed().as_millis();
        return a;
    };
    a.properties = structure_checks(g, &t, &cls);
    let (pres, note) = presentation_for(&t, &cls, opts.degree_bound);
    a.presentation_note = note;
    let Some(pres) = pres else {
        a.det = MethodOutcome::Unavailable("no certified presentation".into());
        a.formula = MethodOutcome::Unavailable("no certified presentation".into());
        a.timing_ms = start.elapsed().as_millis();
        return a;
    };
    match det_criterion(g, &t, &pres) {
        Ok((v, actions)) => {
            a.properties
                .insert("mm2_degree_blocks", actions.iter().all(|x| x.respects_degrees(&pres.degrees)));
            if let Some(ok) = complement_determinant_identity(&actions, &cls, &pres) {
                a.properties.insert("complement_determinant_identity", ok);
            }
            a.det = MethodOutcome::Verdict(v);
        }
        Err(e) => a.det = MethodOutcome::Unavailable(e.to_string()),
    }
    a.formula = outcome(chapter_formula(g, &t, &cls, &pres));
    if opts.oracle {
        a.oracle = outcome(run_oracle(g, &t, &cls, &pres, opts.degree_bound));
    }
    a.presentation = Some(pres);
    a.timing_ms = start.elapsed().as_millis();
    a
}

/// Palindrome oracle over the coset-orbit products of the presentation generators.
pub fn run_oracle(
    g: &MatrixGroup,
    t: &MatrixGroup,
    cls: &ModuleClassification,
    pres: &InvariantPresentation,
    bound: u32,
) -> Result<GorensteinVerdict, GorError> {
    let reps: Vec<Matrix> = g.coset_reps(t)?.iter().map(|r| cls.adapted(r)).collect();
    let index = reps.len() as u32;
    let total: u32 = pres.degrees.iter().sum::<u32>() * index;
    if total > bound {
        return Err(GorError::Inconclusive(format!("coset-orbit hsop degree sum exceeds {bound}")));
    }
    let hsop = orbit_hsop(&reps, &pres.gens)?;
    palindrome_oracle(&g.conjugate(&cls.adapted_basis), &hsop, bound)
}

/// Close the input under multiplication and analyze it.
pub fn analyze_group(input: &GroupInput, opts: &AnalysisOptions) -> Result<Analysis, InputError> {
    let g = input.closure(opts.cap)?;
    Ok(analyze_closed(input.clone(), &g, opts))
}

/// Parameters of a fuzz campaign.
#[derive(Clone, Debug, Serialize)]
pub struct FuzzConfig {
    pub p: u32,
    pub s: u32,
    pub count: usize,
    pub seed: u64,
    pub max_order: usize,
    pub chapter: Option<Chapter>,
    pub degree_bound: u32,
    pub oracle: bool,
}

impl FuzzConfig {
    pub fn new(p: u32, s: u32, count: usize, seed: u64) -> FuzzConfig {
        FuzzConfig {
            p,
            s,
            count,
            seed,
            max_order: 2000,
            chapter: None,
            degree_bound: DEFAULT_DEGREE_BOUND,
            oracle: true,
        }
    }
}

fn random_elem(rng: &mut ChaCha8Rng, f: &Field) -> crate::gf::FieldElem {
    f.elem(rng.gen_range(0..f.q()))
}

fn random_nonzero(rng: &mut ChaCha8Rng, f: &Field) -> crate::gf::FieldElem {
    f.elem(rng.gen_range(1..f.q()))
}

fn random_invertible(rng: &mut ChaCha8Rng, f: &Field) -> Matrix {
    loop {
        let data = (0..9).map(|_| random_elem(rng, f)).collect();
        let m = Matrix::from_data(f, 3, 3, data);
        if m.inverse().is_some() {
            return m;
        }
    }
}

/// One generator of block-triangular shape with determinant 1. `line` selects the shape
/// stabilizing the last coordinate line, otherwise the plane of the last two coordinates.
/// Sparse draws make entries zero or one with probability one half each.
fn random_block_generator(rng: &mut ChaCha8Rng, f: &Field, line: bool) -> Matrix {
    let sparse = rng.gen_bool(0.5);
    loop {
        let mut m = Matrix::zeros(f, 3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let forced_zero = if line { i == 2 && j < 2 } else { j == 0 && i > 0 };
                if forced_zero {
                    continue;
                }
                let x = if !sparse {
                    random_elem(rng, f)
                } else if i == j {
                    if rng.gen_bool(0.5) {
                        f.one()
                    } else {
                        random_nonzero(rng, f)
                    }
                } else if rng.gen_bool(0.5) {
                    f.zero()
                } else {
                    random_nonzero(rng, f)
                };
                m.set(i, j, x);
            }
        }
        let Ok(d) = m.det() else { continue };
        if d.is_zero() {
            continue;
        }
        // the one-dimensional diagonal block absorbs the determinant
        let k = if line { 2 } else { 0 };
        m.set(k, k, f.div(m.get(k, k), d));
        return m;
    }
}

/// Draw one candidate generating set, conjugated by a random invertible matrix.
pub fn sample_generators(rng: &mut ChaCha8Rng, f: &Field) -> Vec<Matrix> {
    let line = rng.gen_bool(0.5);
    let n = rng.gen_range(1..=3);
    let gens: Vec<Matrix> = (0..n).map(|_| random_block_generator(rng, f, line)).collect();
    let p = random_invertible(rng, f);
    let pinv = p.inverse().unwrap();
    gens.iter().map(|g| p.mul(g).mul(&pinv)).collect()
}

/// Aggregated campaign results.
#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct FuzzSummary {
    pub instances: usize,
    pub discarded_draws: usize,
    pub gorenstein: usize,
    pub not_gorenstein: usize,
    pub no_verdict: usize,
    pub chapters: BTreeMap<String, usize>,
    pub constructions: BTreeMap<String, usize>,
    pub formula_compared: usize,
    pub formula_agree: usize,
    pub oracle_compared: usize,
    pub oracle_agree: usize,
    pub oracle_by_chapter: BTreeMap<String, usize>,
    pub property_failures: BTreeMap<String, usize>,
    pub flagged: Vec<usize>,
}

impl FuzzSummary {
    fn record(&mut self, index: usize, a: &Analysis) {
        self.instances += 1;
        let chapter = a.chapter().map_or("error".to_string(), |c| c.to_string());
        *self.chapters.entry(chapter.clone()).or_default() += 1;
        if let Some(p) = &a.presentation {
            *self.constructions.entry(p.construction.tag().to_string()).or_default() += 1;
        }
        match a.det.gorenstein() {
            Some(true) => self.gorenstein += 1,
            Some(false) => self.not_gorenstein += 1,
            None => self.no_verdict += 1,
        }
        let det = a.det.gorenstein();
        if let (Some(d), Some(f)) = (det, a.formula.gorenstein()) {
            self.formula_compared += 1;
            self.formula_agree += usize::from(d == f);
        }
        if let (Some(d), Some(o)) = (det, a.oracle.gorenstein()) {
            self.oracle_compared += 1;
            self.oracle_agree += usize::from(d == o);
            *self.oracle_by_chapter.entry(chapter).or_default() += 1;
        }
        for (name, ok) in &a.properties {
            if !ok {
                *self.property_failures.entry(name.to_string()).or_default() += 1;
            }
        }
        let prime_field_failure = a.input.field.s() == 1 && det != Some(true);
        if prime_field_failure || !a.methods_agree() || a.properties.values().any(|ok| !ok) {
            self.flagged.push(index);
        }
    }

    /// Combine summaries of disjoint instance sets.
    pub fn merge(mut self, other: &FuzzSummary) -> FuzzSummary {
        self.instances += other.instances;
        self.discarded_draws += other.discarded_draws;
        self.gorenstein += other.gorenstein;
        self.not_gorenstein += other.not_gorenstein;
        self.no_verdict += other.no_verdict;
        for (k, v) in &other.chapters {
            *self.chapters.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &other.constructions {
            *self.constructions.entry(k.clone()).or_default() += v;
        }
        self.formula_compared += other.formula_compared;
        self.formula_agree += other.formula_agree;
        self.oracle_compared += other.oracle_compared;
        self.oracle_agree += other.oracle_agree;
        for (k, v) in &other.oracle_by_chapter {
            *self.oracle_by_chapter.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &other.property_failures {
            *self.property_failures.entry(k.clone()).or_default() += v;
        }
        self.flagged.extend(other.flagged.iter().copied());
        self
    }
}

/// Groups drawn by a campaign, in stream order.
pub struct FuzzDraws {
    pub groups: Vec<(GroupInput, MatrixGroup)>,
    pub discarded: usize,
}

/// Draw `cfg.count` reducible subgroups of SL(3, q) with order at most `cfg.max_order`.
pub fn draw_instances(cfg: &FuzzConfig) -> Result<FuzzDraws, InputError> {
    let field = Field::new(cfg.p, cfg.s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut groups = Vec::with_capacity(cfg.count);
    let mut discarded = 0;
    while groups.len() < cfg.count {
        let gens = sample_generators(&mut rng, &field);
        let Ok(g) = closure(&field, 3, &gens, cfg.max_order) else {
            discarded += 1;
            continue;
        };
        let keep = g.is_special()
            && match classify_case(&g) {
                Ok(c) => {
                    c.chapter != Chapter::Irreducible && cfg.chapter.is_none_or(|want| want == c.chapter)
                }
                Err(_) => cfg.chapter.is_none(),
            };
        if !keep {
            discarded += 1;
            continue;
        }
        groups.push((GroupInput { field: field.clone(), generators: gens }, g));
    }
    Ok(FuzzDraws { groups, discarded })
}

/// Run a campaign: draw the seeded stream, analyze every instance on the worker pool,
/// and fold the results.
pub fn fuzz_campaign(cfg: &FuzzConfig) -> Result<(FuzzSummary, Vec<Analysis>), InputError> {
    let draws = draw_instances(cfg)?;
    let opts = AnalysisOptions { degree_bound: cfg.degree_bound, oracle: cfg.oracle, cap: cfg.max_order };
    let analyses: Vec<Analysis> = draws
        .groups
        .into_par_iter()
        .enumerate()
        .map(|(i, (input, g))| {
            let mut a = analyze_closed(input, &g, &opts);
            a.seed = Some((cfg.seed, i));
            a
        })
        .collect();
    let mut summary = FuzzSummary { discarded_draws: draws.discarded, ..FuzzSummary::default() };
    for (i, a) in analyses.iter().enumerate() {
        summary.record(i, a);
    }
    Ok((summary, analyses))
}

/// Write one report per instance plus the summary into `dir`.
pub fn write_report_dir(
    dir: &Path,
    cfg: &FuzzConfig,
    summary: &FuzzSummary,
    analyses: &[Analysis],
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (i, a) in analyses.iter().enumerate() {
        let path = dir.join(format!("instance-{:05}.json", i));
        std::fs::write(path, serde_json::to_string_pretty(&a.to_json())?)?;
    }
    let doc = serde_json::json!({ "tool_version": VERSION, "config": cfg, "summary": summary });
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&doc)?)
}
