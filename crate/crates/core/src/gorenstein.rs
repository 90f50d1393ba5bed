//! The Gorenstein decision: determinants of the coset action on m/m^2, closed-form
//! conditions per construction, and a Hilbert-series palindromy oracle.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gf::{Field, FieldElem};
use crate::group::{is_transvection, GroupError, MatrixGroup};
use crate::invring::{
    BlockKind, Construction, InvError, InvariantOracle, InvariantPresentation, ThirdGenerator,
};
use crate::linalg::{axpy, Matrix, Subspace};
use crate::modstruct::{Chapter, ModuleClassification};
use crate::polyact::{act, express_linear_part, DegreeSlice, Mono, Poly, PolyError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GorError {
    #[error("the invariant presentation is not certified")]
    PresentationUncertified,
    #[error("group is not contained in SL(V)")]
    NotSL,
    #[error("no closed form applies: {0}")]
    NoFormulaForCase(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("degree {degree} exceeds the configured bound {bound}")]
    BoundExceeded { degree: u32, bound: u32 },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Inv(#[from] InvError),
}

/// Which route produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DetCriterion,
    ChapterFormula,
    HilbertPalindrome,
}

/// A group element with the scalar that certifies a failure.
#[derive(Clone, Debug)]
pub struct Witness {
    pub element: Matrix,
    pub value: FieldElem,
}

#[derive(Clone, Debug)]
pub struct GorensteinVerdict {
    pub gorenstein: bool,
    pub method: Method,
    pub certificate: serde_json::Value,
    pub witness: Option<Witness>,
    pub secondary_degrees: Option<Vec<u32>>,
    pub caveats: Vec<String>,
}

impl GorensteinVerdict {
    pub fn to_json(&self) -> serde_json::Value {
        let witness = self.witness.as_ref().map(|w| {
            let f = w.element.field();
            serde_json::json!({ "element": w.element.to_json(), "value": f.to_json(w.value) })
        });
        serde_json::json!({
            "gorenstein": self.gorenstein,
            "method": self.method,
            "certificate": self.certificate,
            "witness": witness,
            "caveats": self.caveats,
        })
    }
}

/// The action of one coset representative on m/m^2.
#[derive(Clone, Debug)]
pub struct Mm2Action {
    pub rep: Matrix,
    /// Row i holds the coefficients of the image of generator i on the generators.
    pub matrix: Matrix,
    pub det: FieldElem,
}

impl Mm2Action {
    /// Entries between generators of different degrees vanish.
    pub fn respects_degrees(&self, degrees: &[u32]) -> bool {
        let n = degrees.len();
        (0..n).all(|i| (0..n).all(|j| degrees[i] == degrees[j] || self.matrix.get(i, j).is_zero()))
    }
}

/// Matrix of `g` (original coordinates) on m/m^2 of the presented invariant ring.
pub fn mm2_matrix(g: &Matrix, pres: &InvariantPresentation) -> Result<Mm2Action, GorError> {
    let p = &pres.basis;
    let ga = p.mul(g).mul(&p.inverse().expect("basis is invertible"));
    let field = g.field();
    let n = pres.gens.len();
    let mut rows = Vec::with_capacity(n);
    for f in &pres.gens {
        let img = act(&ga, f)?;
        rows.push(express_linear_part(&img, &pres.gens)?);
    }
    let matrix = Matrix::from_rows(field, &rows);
    let det = matrix.det().expect("square");
    Ok(Mm2Action { rep: g.clone(), matrix, det })
}

fn check_special(g: &MatrixGroup) -> Result<(), GorError> {
    if g.is_special() {
        Ok(())
    } else {
        Err(GorError::NotSL)
    }
}

/// Gorenstein iff every coset representative of G/T acts on m/m^2 with determinant 1.
pub fn det_criterion(
    g: &MatrixGroup,
    t: &MatrixGroup,
    pres: &InvariantPresentation,
) -> Result<(GorensteinVerdict, Vec<Mm2Action>), GorError> {
    if !pres.certificate.passed {
        return Err(GorError::PresentationUncertified);
    }
    check_special(g)?;
    let f = g.field();
    let reps = g.coset_reps(t)?;
    let actions: Vec<Mm2Action> =
        reps.par_iter().map(|r| mm2_matrix(r, pres)).collect::<Result<Vec<_>, _>>()?;
    let witness =
        actions.iter().find(|a| a.det != f.one()).map(|a| Witness { element: a.rep.clone(), value: a.det });
    let certificate = serde_json::json!({
        "cosets": actions.len(),
        "dets": actions.iter().map(|a| f.to_json(a.det)).collect::<Vec<_>>(),
        "all_dets_one": witness.is_none(),
    });
    let verdict = GorensteinVerdict {
        gorenstein: witness.is_none(),
        method: Method::DetCriterion,
        certificate,
        witness,
        secondary_degrees: None,
        caveats: pres.caveats.clone(),
    };
    Ok((verdict, actions))
}

/// One evaluated closed-form condition.
#[derive(Clone, Debug)]
pub struct FormulaValue {
    pub name: &'static str,
    pub holds: bool,
    pub value: FieldElem,
}

/// Coordinates of `v` in the basis given by `rows`.
fn coords_in(field: &Field, rows: &[Vec<FieldElem>], v: &[FieldElem]) -> Vec<FieldElem> {
    Matrix::from_rows(field, rows).inverse().expect("basis is independent").vec_mul(v)
}

/// A scalar `xi` with `m / xi` in the group, if one exists.
fn scalar_coset(k: &MatrixGroup, m: &Matrix) -> Option<FieldElem> {
    let f = m.field();
    f.elements().filter(|x| !x.is_zero()).find(|&x| k.contains(&m.scale(f.inv(x).unwrap())))
}

/// For a group conjugate to SL(2, q') and an element of its normalizer `m`, a scalar
/// `mu` with `m = mu * h` and `h` defined over GF(q') in a rational basis of the group.
fn subfield_scalar(k: &MatrixGroup, m: &Matrix, qp: u32) -> Option<FieldElem> {
    let f = m.field();
    let kexp = crate::group::p_exponent(qp as usize, f.p())?;
    let t = k.elements().iter().find(|g| is_transvection(g))?;
    let fixed = t.minus_identity().left_kernel().basis_vectors().remove(0);
    let line = Subspace::from_vectors(f, 2, std::slice::from_ref(&fixed));
    let moved = k.elements().iter().map(|g| g.vec_mul(&fixed)).find(|e| !line.contains(e))?;
    let b = Matrix::from_rows(f, &[fixed, moved]);
    let mb = b.mul(m).mul(&b.inverse()?);
    let y = mb.data().iter().copied().find(|x| !x.is_zero())?;
    let h = mb.scale(f.inv(y).unwrap());
    h.data().iter().all(|&x| f.in_subfield(x, kexp)).then_some(y)
}

fn one_of(field: &Field, name: &'static str, value: FieldElem) -> FormulaValue {
    FormulaValue { name, holds: value == field.one(), value }
}

/// Evaluate the closed-form condition of the presentation's construction at one element
/// `ga` given in the adapted basis.
pub fn formula_at(
    ga: &Matrix,
    tp: &MatrixGroup,
    chapter: Chapter,
    pres: &InvariantPresentation,
) -> Result<FormulaValue, GorError> {
    let f = ga.field();
    let p = f.p() as u64;
    match &pres.construction {
        Construction::Variables => Ok(one_of(f, "determinant", ga.det().unwrap())),
        Construction::FixedPlane { t, complement, plane } => {
            let q = p.pow(*t);
            if chapter == Chapter::B {
                // fixed vector of the plane inside span{w2, w1}
                let top = Subspace::from_vectors(
                    f,
                    3,
                    &[vec![f.one(), f.zero(), f.zero()], vec![f.zero(), f.one(), f.zero()]],
                );
                let f0 = plane.intersection(&top).basis_vectors();
                if let Some(v) = f0.first() {
                    if !v[0].is_zero() && !v[1].is_zero() {
                        let order = tp_coset_order(ga, tp);
                        let holds = (q - 1) % order == 0;
                        return Ok(FormulaValue {
                            name: "coset-order",
                            holds,
                            value: f.from_int(order as i64),
                        });
                    }
                }
            }
            let mut rows = vec![complement.clone()];
            rows.extend(plane.basis_vectors());
            let kappa = coords_in(f, &rows, &ga.vec_mul(complement))[0];
            let det_h = plane.restrict(ga).expect("plane is stable").det().unwrap();
            Ok(one_of(f, "fixed-plane-character", f.mul(f.pow(kappa, q), det_h)))
        }
        Construction::CommonCenter { center, complements, exponents } => {
            let rows = vec![complements[0].clone(), complements[1].clone(), center.clone()];
            let img_c = coords_in(f, &rows, &ga.vec_mul(center));
            if !img_c[0].is_zero() || !img_c[1].is_zero() {
                return Err(GorError::NoFormulaForCase("center line is not stable".into()));
            }
            let lambda = img_c[2];
            let mut nm = Matrix::zeros(f, 2, 2);
            for i in 0..2 {
                let c = coords_in(f, &rows, &ga.vec_mul(&complements[i]));
                for j in 0..2 {
                    if exponents[i] == exponents[j] {
                        nm.set(i, j, f.pow(c[j], p.pow(exponents[i])));
                    } else if !c[j].is_zero() {
                        return Err(GorError::NoFormulaForCase("complement lines are mixed".into()));
                    }
                }
            }
            Ok(one_of(f, "common-center-character", f.mul(nm.det().unwrap(), lambda)))
        }
        Construction::PlaneBlock { kind, plane, plane_group, third } => {
            let line_factor = match third {
                ThirdGenerator::FixedVector => f.one(),
                ThirdGenerator::PlaneFixer { t } => f.pow(ga.get(0, 0), p.pow(*t) - 1),
            };
            if chapter == Chapter::E {
                // u -> lambda^{-1} u, y -> y, v0 -> lambda v0
                let lambda = ga.get(2, 2);
                let value = f.mul(f.inv(lambda).unwrap(), lambda);
                return Ok(one_of(f, "line-character-cancels", value));
            }
            let gw =
                plane.restrict(ga).ok_or_else(|| GorError::NoFormulaForCase("plane is not stable".into()))?;
            let core = match kind {
                BlockKind::Dickson { subfield_order } => {
                    let qp = *subfield_order as u64;
                    let mu = subfield_scalar(plane_group, &gw, *subfield_order)
                        .ok_or_else(|| GorError::NoFormulaForCase("no subfield form".into()))?;
                    f.pow(mu, qp * qp - 1)
                }
                BlockKind::Monomial { d } => {
                    let xi = scalar_coset(plane_group, &gw).ok_or_else(|| {
                        GorError::NoFormulaForCase("element is not scalar times the group".into())
                    })?;
                    f.pow(xi, *d as u64)
                }
                BlockKind::Exceptional => {
                    scalar_coset(plane_group, &gw).ok_or_else(|| {
                        GorError::NoFormulaForCase("element is not scalar times the group".into())
                    })?;
                    f.pow(gw.det().unwrap(), 10)
                }
                BlockKind::Searched => {
                    return Err(GorError::NoFormulaForCase("searched plane generators".into()))
                }
            };
            Ok(one_of(f, "plane-scalar-character", f.mul(core, line_factor)))
        }
        Construction::Unitriangular => {
            let value = f.mul(f.mul(f.pow(ga.get(0, 0), p * p), f.pow(ga.get(1, 1), p)), ga.get(2, 2));
            Ok(one_of(f, "flag-character", value))
        }
        Construction::LineExtension => {
            let m = ga.submatrix(0, 2, 0, 2);
            Ok(one_of(f, "quotient-determinant", f.mul(m.det().unwrap(), ga.get(2, 2))))
        }
        Construction::Search => Err(GorError::NoFormulaForCase("searched generators".into())),
    }
}

fn tp_coset_order(ga: &Matrix, tp: &MatrixGroup) -> u64 {
    let mut x = ga.clone();
    let mut k = 1;
    while !tp.contains(&x) {
        x = x.mul(ga);
        k += 1;
    }
    k
}

/// Closed-form Gorenstein condition evaluated on every coset representative.
pub fn chapter_formula(
    g: &MatrixGroup,
    t: &MatrixGroup,
    cls: &ModuleClassification,
    pres: &InvariantPresentation,
) -> Result<GorensteinVerdict, GorError> {
    check_special(g)?;
    let f = g.field();
    let tp = t.conjugate(&cls.adapted_basis);
    let reps = g.coset_reps(t)?;
    let mut values = Vec::with_capacity(reps.len());
    for r in &reps {
        values.push(formula_at(&cls.adapted(r), &tp, cls.chapter, pres)?);
    }
    let failing = values.iter().position(|v| !v.holds);
    let name = values.first().map_or("none", |v| v.name);
    Ok(GorensteinVerdict {
        gorenstein: failing.is_none(),
        method: Method::ChapterFormula,
        certificate: serde_json::json!({
            "formula": name,
            "cosets": values.len(),
            "values": values.iter().map(|v| f.to_json(v.value)).collect::<Vec<_>>(),
        }),
        witness: failing.map(|i| Witness { element: reps[i].clone(), value: values[i].value }),
        secondary_degrees: None,
        caveats: pres.caveats.clone(),
    })
}

/// Invariant dimensions of `h` in degrees 0..=bound.
pub fn hilbert_truncation(h: &MatrixGroup, bound: u32, max_bound: u32) -> Result<Vec<usize>, GorError> {
    if bound > max_bound {
        return Err(GorError::BoundExceeded { degree: bound, bound: max_bound });
    }
    let mut oracle = InvariantOracle::new(h);
    Ok((0..=bound).map(|d| oracle.dim(d)).collect())
}

/// Outcome of an hsop test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HsopResult {
    pub is_hsop: bool,
    /// Degree at which the ideal slice was compared with the full slice.
    pub tested_degree: u32,
}

/// Homogeneous candidates form an hsop iff the ideal they generate contains every
/// monomial of degree `sum (e_i - 1) + 1`.
pub fn hsop_certify(cands: &[Poly], bound: u32) -> Result<HsopResult, GorError> {
    let Some(first) = cands.first() else { return Err(GorError::Inconclusive("no candidates".into())) };
    let f = first.field().clone();
    let n = first.nvars();
    let degs: Vec<u32> = cands
        .iter()
        .map(|c| c.homogeneous_degree().filter(|&d| d > 0))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| GorError::Inconclusive("candidates must be homogeneous of positive degree".into()))?;
    if cands.len() != n {
        return Ok(HsopResult { is_hsop: false, tested_degree: 0 });
    }
    let top: u32 = degs.iter().map(|d| d - 1).sum::<u32>() + 1;
    if top > bound {
        return Err(GorError::Inconclusive(format!("hsop test needs degree {top} > bound {bound}")));
    }
    let slice = DegreeSlice::new(n, top);
    let full = slice.dim();
    let mut rows: Vec<(usize, Vec<FieldElem>)> = Vec::new();
    'outer: for (c, &e) in cands.iter().zip(&degs) {
        let mult = DegreeSlice::new(n, top - e);
        for &m in &mult.monos {
            let prod = Poly::from_terms(&f, n, c.terms().iter().map(|&(x, y)| (x.mul(m), y)));
            let mut v = slice.to_vector(&prod);
            for (pc, row) in &rows {
                let k = v[*pc];
                if !k.is_zero() {
                    axpy(&f, &mut v, f.neg(k), row);
                }
            }
            if let Some(pc) = v.iter().position(|x| !x.is_zero()) {
                let inv = f.inv(v[pc]).unwrap();
                for x in v.iter_mut() {
                    *x = f.mul(*x, inv);
                }
                rows.push((pc, v));
                if rows.len() == full {
                    break 'outer;
                }
            }
        }
    }
    Ok(HsopResult { is_hsop: rows.len() == full, tested_degree: top })
}

/// Products of the distinct images of each generator under the coset representatives
/// (given in the presentation's basis); each product is invariant under the whole group.
pub fn orbit_hsop(reps_adapted: &[Matrix], gens: &[Poly]) -> Result<Vec<Poly>, GorError> {
    let mut out = Vec::with_capacity(gens.len());
    for f in gens {
        let mut images: Vec<Poly> = Vec::new();
        for r in reps_adapted {
            let img = act(r, f)?;
            if !images.contains(&img) {
                images.push(img);
            }
        }
        let mut prod = Poly::one(f.field(), f.nvars());
        for img in &images {
            prod = prod.mul(img);
        }
        out.push(prod);
    }
    Ok(out)
}

/// Secondary degree multiset from invariant dimensions and hsop degrees.
pub fn secondary_counts(dims: &[usize], hsop_degrees: &[u32]) -> Vec<i64> {
    let mut s: Vec<i64> = dims.iter().map(|&d| d as i64).collect();
    for &e in hsop_degrees {
        let e = e as usize;
        for k in (e..s.len()).rev() {
            s[k] -= s[k - e];
        }
    }
    s
}

/// True iff the multiset with `counts[k]` copies of k reads the same from both ends.
pub fn is_palindromic(counts: &[i64]) -> bool {
    let Some(top) = counts.iter().rposition(|&c| c != 0) else { return true };
    let Some(bottom) = counts.iter().position(|&c| c != 0) else { return true };
    (bottom..=top).all(|k| counts[k] == counts[top + bottom - k])
}

/// Gorenstein test through the Hilbert series of `S(V)^G` over the hsop `hsop`, where `g`
/// acts in the coordinates of the hsop.
pub fn palindrome_oracle(g: &MatrixGroup, hsop: &[Poly], bound: u32) -> Result<GorensteinVerdict, GorError> {
    let n = g.dim();
    let degs: Vec<u32> = hsop.iter().map(|h| h.homogeneous_degree().unwrap_or(0)).collect();
    let total: u32 = degs.iter().sum();
    if total > bound {
        return Err(GorError::Inconclusive(format!("hsop degree sum {total} exceeds bound {bound}")));
    }
    let check = hsop_certify(hsop, bound)?;
    if !check.is_hsop {
        return Err(GorError::Inconclusive("candidates do not form an hsop".into()));
    }
    let dims = hilbert_truncation(g, total, bound)?;
    let counts = secondary_counts(&dims, &degs);
    let expected: u64 = degs.iter().map(|&d| d as u64).product::<u64>() / g.order() as u64;
    let last = total as i64 - n as i64;
    let negative = counts.iter().any(|&c| c < 0);
    let tail = counts.iter().enumerate().any(|(k, &c)| k as i64 > last && c != 0);
    let sum: i64 = counts.iter().sum();
    if negative || tail || sum as u64 != expected {
        return Err(GorError::Inconclusive(format!(
            "secondary counts {counts:?} are inconsistent with {expected} secondaries"
        )));
    }
    let secondaries: Vec<u32> =
        counts.iter().enumerate().flat_map(|(k, &c)| std::iter::repeat_n(k as u32, c as usize)).collect();
    let gorenstein = is_palindromic(&counts);
    Ok(GorensteinVerdict {
        gorenstein,
        method: Method::HilbertPalindrome,
        certificate: serde_json::json!({
            "hsop_degrees": degs,
            "hsop_tested_degree": check.tested_degree,
            "secondary_degrees": secondaries,
            "num_secondaries": expected,
            "dims": dims,
        }),
        witness: None,
        secondary_degrees: Some(secondaries),
        caveats: vec![],
    })
}

/// Determinant of the m/m^2 action restricted to the generators other than the first
/// coordinate function, when that function is a generator.
pub fn complement_block_det(action: &Mm2Action, pres: &InvariantPresentation) -> Option<FieldElem> {
    let f = action.matrix.field();
    let x1 = Poly::from_terms(f, 3, [(Mono::var(0), f.one())]);
    let i = pres.gens.iter().position(|g| *g == x1)?;
    let keep: Vec<usize> = (0..pres.gens.len()).filter(|&j| j != i).collect();
    let rows: Vec<Vec<FieldElem>> =
        keep.iter().map(|&r| keep.iter().map(|&c| action.matrix.get(r, c)).collect()).collect();
    Matrix::from_rows(f, &rows).det().ok()
}
