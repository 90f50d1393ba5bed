//! Explicit generators for the invariant ring of the transvection subgroup, certified to
//! form a polynomial ring, with a degree-ascending search as fallback.
//!
//! All constructions work in the adapted basis of the classification: the polynomial
//! variables are the adapted basis vectors, and the subgroup is conjugated accordingly.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::gf::{Field, FieldElem};
use crate::group::{p_exponent, GroupError, MatrixGroup};
use crate::linalg::{axpy, Matrix, Subspace};
use crate::modstruct::{Chapter, ModuleClassification};
use crate::polyact::{
    act, subalgebra_degree_basis, subalgebra_rank, ActionTower, DegreeSlice, Poly, PolyError, PowerCache,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvError {
    #[error("the fixing subgroup is not elementary abelian of the required shape: {0}")]
    NotElementaryFixGroup(String),
    #[error("GF({0}) is not a subfield of the working field")]
    FieldTooSmall(u32),
    #[error("no explicit construction applies: {0}")]
    NoConstructionApplies(String),
    #[error("construction {construction} failed certification: {detail}")]
    CertificationFailed { construction: String, detail: String },
    #[error("chapter {0} is outside the scope of the invariant constructions")]
    OutOfScope(Chapter),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Evidence that a generator list presents the invariant ring as a polynomial ring.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub product_of_degrees: u64,
    pub group_order: u64,
    pub hilbert_match_bound: u32,
    /// Every generator is fixed by every generator of the subgroup.
    pub invariant: bool,
    /// The generated subalgebra has the dimensions of a polynomial ring up to the bound.
    pub independent: bool,
    /// First degree where subalgebra, invariant, or series dimensions disagree.
    pub first_mismatch: Option<u32>,
    pub passed: bool,
}

/// How the two-variable part of a plane construction was obtained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum BlockKind {
    /// The group is SL(2, q') for a subfield of order q'.
    Dickson { subfield_order: u32 },
    /// Dihedral of order 2d (d odd) in characteristic 2.
    Monomial { d: u32 },
    /// SL(2, 5) inside SL(2, 9), with the explicit degree 10 and 12 invariants.
    Exceptional,
    /// Any other two-dimensional group; generators found by search.
    Searched,
}

/// The third generator of a plane construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ThirdGenerator {
    /// An invariant vector outside the plane.
    FixedVector,
    /// The fixed-plane recursion for the pointwise stabilizer of the plane, of degree p^t.
    PlaneFixer { t: u32 },
}

/// Which construction produced a presentation, with the data the closed-form
/// Gorenstein conditions need.
#[derive(Clone, Debug)]
pub enum Construction {
    /// Trivial subgroup: the coordinate functions.
    Variables,
    /// The subgroup fixes a plane pointwise: the recursion invariant of degree p^t on a
    /// complement vector plus a basis of the plane.
    FixedPlane { t: u32, complement: Vec<FieldElem>, plane: Subspace },
    /// All displacements lie on one line: orbit products of two complement vectors and
    /// the center.
    CommonCenter { center: Vec<FieldElem>, complements: [Vec<FieldElem>; 2], exponents: [u32; 2] },
    /// Two-variable invariants of a stable plane plus a third generator.
    PlaneBlock { kind: BlockKind, plane: Subspace, plane_group: MatrixGroup, third: ThirdGenerator },
    /// Full unitriangular group over GF(p) in the flag basis.
    Unitriangular,
    /// Quotient action SL(2, p) with a kernel of order p^2 acting on the line.
    LineExtension,
    /// Degree-ascending search.
    Search,
}

impl Construction {
    pub fn tag(&self) -> &'static str {
        match self {
            Construction::Variables => "variables",
            Construction::FixedPlane { .. } => "fixed-plane",
            Construction::CommonCenter { .. } => "common-center",
            Construction::PlaneBlock { kind: BlockKind::Dickson { .. }, .. } => "plane-dickson",
            Construction::PlaneBlock { kind: BlockKind::Monomial { .. }, .. } => "plane-monomial",
            Construction::PlaneBlock { kind: BlockKind::Exceptional, .. } => "plane-exceptional",
            Construction::PlaneBlock { kind: BlockKind::Searched, .. } => "plane-search",
            Construction::Unitriangular => "unitriangular",
            Construction::LineExtension => "line-extension",
            Construction::Search => "search",
        }
    }
}

/// Generators of the invariant ring of a subgroup, in the coordinates of `basis`.
#[derive(Clone, Debug)]
pub struct InvariantPresentation {
    pub construction: Construction,
    pub gens: Vec<Poly>,
    pub degrees: Vec<u32>,
    pub subgroup_order: usize,
    /// Rows are the basis vectors whose coordinates the generators use.
    pub basis: Matrix,
    pub certificate: Certificate,
    pub caveats: Vec<String>,
}

impl InvariantPresentation {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "construction": self.construction.tag(),
            "generators": self.gens.iter().map(|g| g.to_json()).collect::<Vec<_>>(),
            "generators_text": self.gens.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
            "degrees": self.degrees,
            "subgroup_order": self.subgroup_order,
            "basis": self.basis.to_json(),
            "certificate": self.certificate,
            "caveats": self.caveats,
        })
    }
}

/// Cached per-degree invariant bases of one group.
pub struct InvariantOracle {
    field: Field,
    order: usize,
    gens: Vec<Matrix>,
    tower: ActionTower,
    bases: HashMap<u32, Vec<Poly>>,
}

impl InvariantOracle {
    pub fn new(h: &MatrixGroup) -> InvariantOracle {
        InvariantOracle {
            field: h.field().clone(),
            order: h.order(),
            gens: h.generators().to_vec(),
            tower: ActionTower::new(h.field(), h.dim(), h.generators()),
            bases: HashMap::new(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn generators(&self) -> &[Matrix] {
        &self.gens
    }

    /// Echelonized basis of the degree-`d` invariants.
    pub fn basis(&mut self, d: u32) -> Vec<Poly> {
        if let Some(b) = self.bases.get(&d) {
            return b.clone();
        }
        let rows = self.tower.fixed_space(d);
        let slice = self.tower.slice(d).clone();
        let polys: Vec<Poly> = rows.iter().map(|r| slice.from_vector(&self.field, r)).collect();
        self.bases.insert(d, polys.clone());
        polys
    }

    pub fn dim(&mut self, d: u32) -> usize {
        self.basis(d).len()
    }
}

/// Coefficients of `prod 1/(1 - t^{d_i})` up to `bound`.
pub fn poly_series(degrees: &[u32], bound: u32) -> Vec<u64> {
    let mut c = vec![0u64; bound as usize + 1];
    c[0] = 1;
    for &d in degrees {
        let d = d as usize;
        if d == 0 {
            continue;
        }
        for k in d..c.len() {
            c[k] += c[k - d];
        }
    }
    c
}

/// Vectors fixed by every element of the group.
pub fn common_fixed_space(h: &MatrixGroup) -> Subspace {
    let f = h.field();
    let mut space = Subspace::full(f, h.dim());
    for g in h.generators() {
        space = space.intersection(&g.minus_identity().left_kernel());
    }
    space
}

/// Span of all displacements `v g - v`.
pub fn displacement_span(h: &MatrixGroup) -> Subspace {
    let f = h.field();
    let mut rows = Vec::new();
    for g in h.generators() {
        let d = g.minus_identity();
        rows.extend((0..d.rows()).map(|i| d.row_vec(i)));
    }
    Subspace::from_vectors(f, h.dim(), &rows)
}

/// Product of the distinct images of the vector `u` (as a linear form) under the group.
pub fn orbit_product(h: &MatrixGroup, u: &[FieldElem]) -> Poly {
    let f = h.field();
    let mut seen: BTreeSet<Vec<u32>> = BTreeSet::new();
    let mut prod = Poly::one(f, h.dim());
    for g in h.elements() {
        let img = g.vec_mul(u);
        if seen.insert(img.iter().map(|x| x.index()).collect()) {
            prod = prod.mul(&Poly::linear_form(f, &img));
        }
    }
    prod
}

/// The invariant `z` with `S(V)^Fix = S(W)[z]` for a group fixing the hyperplane `w`
/// pointwise, built by the p-th power recursion over a minimal generating set.
pub fn fixw_invariant(fix: &MatrixGroup, w: &Subspace) -> Result<Poly, InvError> {
    let f = fix.field();
    let n = fix.dim();
    if w.dim() + 1 != n {
        return Err(InvError::NotElementaryFixGroup(format!("subspace has dimension {} in {}", w.dim(), n)));
    }
    let basis = w.basis_vectors();
    for g in fix.elements() {
        if basis.iter().any(|b| g.vec_mul(b) != *b) {
            return Err(InvError::NotElementaryFixGroup("an element moves the subspace".into()));
        }
    }
    let sigmas = fix.elementary_generators().map_err(|e| InvError::NotElementaryFixGroup(e.to_string()))?;
    let v = w.standard_complement().remove(0);
    let p = f.p();
    let mut z = Poly::linear_form(f, &v);
    for s in &sigmas {
        let delta = act(s, &z)?.sub(&z);
        z = z.pow(p).sub(&delta.pow(p - 1).mul(&z));
    }
    for g in fix.generators() {
        if act(g, &z)? != z {
            return Err(InvError::NotElementaryFixGroup("recursion output is not invariant".into()));
        }
    }
    Ok(z)
}

/// The coefficients `q_i` of `z = x_k^{p^t} + q_1 x_k^{p^{t-1}} + ... + q_t x_k`, where
/// `x_k` is the variable of the complement; `None` if `z` has another shape.
pub fn fixw_coefficients(z: &Poly, k: usize, p: u32, t: u32) -> Option<Vec<Poly>> {
    let f = z.field();
    let n = z.nvars();
    let mut qs = vec![Poly::zero(f, n); t as usize + 1];
    for &(m, c) in z.terms() {
        let e = m.exp(k);
        let i = (0..=t).find(|&i| p.pow(t - i) == e)?;
        let mut exps = m.exps(n);
        exps[k] = 0;
        let term = Poly::from_terms(f, n, [(crate::polyact::Mono::from_exps(&exps), c)]);
        qs[i as usize] = qs[i as usize].add(&term);
    }
    if qs[0] != Poly::one(f, n) {
        return None;
    }
    Some(qs.split_off(1))
}

/// Incremental row echelon form for membership tests.
struct Echelon {
    field: Field,
    rows: Vec<(usize, Vec<FieldElem>)>,
}

impl Echelon {
    fn new(field: &Field) -> Self {
        Echelon { field: field.clone(), rows: Vec::new() }
    }

    /// Insert a vector; true iff it was independent of the rows so far.
    fn insert(&mut self, v: &[FieldElem]) -> bool {
        let f = self.field.clone();
        let mut v = v.to_vec();
        for (pc, row) in &self.rows {
            let c = v[*pc];
            if !c.is_zero() {
                axpy(&f, &mut v, f.neg(c), row);
            }
        }
        let Some(pc) = v.iter().position(|x| !x.is_zero()) else { return false };
        let inv = f.inv(v[pc]).unwrap();
        for x in v.iter_mut() {
            *x = f.mul(*x, inv);
        }
        self.rows.push((pc, v));
        true
    }
}

fn degree_product(degs: &[u32]) -> u64 {
    degs.iter().map(|&d| d as u64).product()
}

/// Check a candidate generator list against the invariants of the oracle's group.
pub fn certify_with(
    oracle: &mut InvariantOracle,
    gens: &[Poly],
    bound: u32,
) -> Result<Certificate, InvError> {
    let mut invariant = true;
    for h in oracle.generators().to_vec() {
        for g in gens {
            if act(&h, g)? != *g {
                invariant = false;
            }
        }
    }
    let degs: Vec<u32> = gens.iter().map(|g| g.homogeneous_degree().unwrap_or(0)).collect();
    let product = degree_product(&degs);
    let order = oracle.order() as u64;
    let series = poly_series(&degs, bound);
    let mut cache = PowerCache::new(gens);
    let mut independent = true;
    let mut first_mismatch = None;
    if degs.contains(&0) {
        independent = false;
        first_mismatch = Some(0);
    } else {
        for d in 0..=bound {
            let sub = subalgebra_rank(&mut cache, &degs, d) as u64;
            if sub != series[d as usize] {
                independent = false;
                first_mismatch = Some(d);
                break;
            }
            if oracle.dim(d) as u64 != sub {
                first_mismatch = Some(d);
                break;
            }
        }
    }
    let passed = invariant && product == order && first_mismatch.is_none();
    Ok(Certificate {
        product_of_degrees: product,
        group_order: order,
        hilbert_match_bound: bound,
        invariant,
        independent,
        first_mismatch,
        passed,
    })
}

/// Certify generators for `h`: degree product equals the order and all slice dimensions
/// agree with a polynomial ring up to `bound`.
pub fn certify_polynomial_ring(gens: &[Poly], h: &MatrixGroup, bound: u32) -> Result<Certificate, InvError> {
    certify_with(&mut InvariantOracle::new(h), gens, bound)
}

/// Greedy degree-ascending generator search; `None` when more generators than variables
/// appear or `maxdeg` is reached first.
fn search_generators(oracle: &mut InvariantOracle, nvars: usize, maxdeg: u32) -> Option<Vec<Poly>> {
    let order = oracle.order() as u64;
    let mut gens: Vec<Poly> = Vec::new();
    for d in 1..=maxdeg {
        let degs: Vec<u32> = gens.iter().map(|g| g.homogeneous_degree().unwrap()).collect();
        if gens.len() == nvars && degree_product(&degs) == order {
            return Some(gens);
        }
        let inv = oracle.basis(d);
        if inv.is_empty() {
            continue;
        }
        let slice = DegreeSlice::new(nvars, d);
        let mut ech = Echelon::new(&oracle.field);
        if !gens.is_empty() {
            for b in subalgebra_degree_basis(&gens, d).basis {
                ech.insert(&slice.to_vector(&b));
            }
        }
        for f in inv {
            if ech.insert(&slice.to_vector(&f)) {
                gens.push(f);
            }
        }
        if gens.len() > nvars {
            return None;
        }
    }
    let degs: Vec<u32> = gens.iter().map(|g| g.homogeneous_degree().unwrap()).collect();
    (gens.len() == nvars && degree_product(&degs) == order).then_some(gens)
}

/// Search for generators of `S(V)^H` up to `maxdeg` and certify them to `bound`.
pub fn general_generator_search(
    h: &MatrixGroup,
    maxdeg: u32,
    bound: u32,
) -> Result<Option<InvariantPresentation>, InvError> {
    let mut oracle = InvariantOracle::new(h);
    let Some(gens) = search_generators(&mut oracle, h.dim(), maxdeg) else { return Ok(None) };
    let certificate = certify_with(&mut oracle, &gens, bound)?;
    if !certificate.passed {
        return Ok(None);
    }
    Ok(Some(InvariantPresentation {
        construction: Construction::Search,
        degrees: gens.iter().map(|g| g.homogeneous_degree().unwrap()).collect(),
        gens,
        subgroup_order: h.order(),
        basis: Matrix::identity(h.field(), h.dim()),
        certificate,
        caveats: vec![],
    }))
}

/// Two homogeneous polynomials in two variables are algebraically dependent iff suitable
/// powers of them are proportional.
fn dependent_pair(f1: &Poly, f2: &Poly) -> bool {
    let (d1, d2) = (f1.homogeneous_degree().unwrap(), f2.homogeneous_degree().unwrap());
    let g = crate::gf::gcd(d1 as u64, d2 as u64) as u32;
    let a = f1.pow(d2 / g);
    let b = f2.pow(d1 / g);
    let (Some((ma, ca)), Some((mb, cb))) = (a.leading(), b.leading()) else { return true };
    if ma != mb {
        return false;
    }
    let f = f1.field();
    a.scale(f.div(cb, ca)) == b
}

/// SL(2, q') inside GL(2, F): generated by the elementary matrices over the subfield.
fn sl2_subfield_group(field: &Field, qp: u32) -> Result<MatrixGroup, InvError> {
    let k = p_exponent(qp as usize, field.p()).filter(|&k| k >= 1 && field.s().is_multiple_of(k));
    let Some(k) = k else { return Err(InvError::FieldTooSmall(qp)) };
    let mut gens = Vec::new();
    for a in field.elements().filter(|&a| !a.is_zero() && field.in_subfield(a, k)) {
        gens.push(Matrix::elementary(field, 2, 0, 1, a));
        gens.push(Matrix::elementary(field, 2, 1, 0, a));
    }
    Ok(crate::group::closure(field, 2, &gens, crate::group::DEFAULT_CAP)?)
}

/// Generators of `S(W)^{SL(2, q)}` in two variables, found by brute force:
/// `(u, c)` with degrees `(q + 1, q^2 - q)`.
pub fn dickson_sl2(field: &Field, q: u32) -> Result<(Poly, Poly), InvError> {
    let group = sl2_subfield_group(field, q)?;
    let mut oracle = InvariantOracle::new(&group);
    let gens = search_generators(&mut oracle, 2, q * q)
        .ok_or_else(|| InvError::NoConstructionApplies(format!("no polynomial generators for SL(2,{q})")))?;
    let mut u = None;
    let mut c = None;
    for g in gens {
        match g.homogeneous_degree() {
            Some(d) if d == q + 1 => u = Some(g),
            Some(d) if d == q * q - q => c = Some(g),
            _ => {}
        }
    }
    match (u, c) {
        (Some(u), Some(c)) => Ok((u, c)),
        _ => Err(InvError::NoConstructionApplies(format!("unexpected degrees for SL(2,{q})"))),
    }
}

/// The explicit degree 10 and 12 invariants of SL(2, 5) inside SL(2, 9).
pub fn exceptional_invariants(field: &Field) -> (Poly, Poly) {
    let f10 = Poly::from_int_terms(field, 2, &[(1, &[9, 1]), (-1, &[1, 9])]);
    let f12 = Poly::from_int_terms(
        field,
        2,
        &[(1, &[12, 0]), (1, &[10, 2]), (-1, &[6, 6]), (1, &[2, 10]), (-1, &[0, 12])],
    );
    (f10, f12)
}

/// Subfield order q' with `|K| = q'(q'^2 - 1)`, if any.
fn sl2_subfield_order(field: &Field, order: usize) -> Option<u32> {
    (1..=field.s()).filter(|k| field.s().is_multiple_of(*k)).map(|k| field.p().pow(k)).find(|&qp| {
        let q = qp as usize;
        q * (q * q - 1) == order
    })
}

/// Two-variable invariant generators of an irreducible plane group.
fn plane_generators(k: &MatrixGroup) -> Result<(BlockKind, Vec<Poly>), InvError> {
    let field = k.field();
    let order = k.order();
    if field.p() == 3 && order == 120 && field.s().is_multiple_of(2) {
        let (f10, f12) = exceptional_invariants(field);
        let fixed = k.generators().iter().all(|g| {
            act(g, &f10).map(|x| x == f10).unwrap_or(false) && act(g, &f12).map(|x| x == f12).unwrap_or(false)
        });
        if fixed {
            return Ok((BlockKind::Exceptional, vec![f10, f12]));
        }
    }
    let kind = if let Some(qp) = sl2_subfield_order(field, order) {
        BlockKind::Dickson { subfield_order: qp }
    } else if field.p() == 2 && order.is_multiple_of(2) && (order / 2) % 2 == 1 {
        BlockKind::Monomial { d: (order / 2) as u32 }
    } else if field.p() == 3 && order == 120 {
        BlockKind::Exceptional
    } else {
        BlockKind::Searched
    };
    let mut oracle = InvariantOracle::new(k);
    let mut gens = search_generators(&mut oracle, 2, order as u32)
        .ok_or_else(|| InvError::NoConstructionApplies("plane group invariants are not polynomial".into()))?;
    if let BlockKind::Dickson { subfield_order } = kind {
        // the degree q' + 1 generator first, as in (u, c)
        if gens[1].homogeneous_degree() == Some(subfield_order + 1) {
            gens.swap(0, 1);
        }
    }
    if dependent_pair(&gens[0], &gens[1]) {
        return Err(InvError::NoConstructionApplies("plane generators are dependent".into()));
    }
    Ok((kind, gens))
}

/// Rewrite polynomials in the coordinates of `plane`'s canonical basis as polynomials on V.
fn embed_plane(polys: &[Poly], plane: &Subspace) -> Vec<Poly> {
    let f = plane.field();
    let images: Vec<Poly> = plane.basis_vectors().iter().map(|b| Poly::linear_form(f, b)).collect();
    polys.iter().map(|p| p.substitute(&images)).collect()
}

/// Decomposition of the displacement data along two complement lines, for a group whose
/// displacements all lie on the line spanned by `center`.
fn common_center(t: &MatrixGroup, center: &[FieldElem]) -> Option<([Vec<FieldElem>; 2], [u32; 2])> {
    let f = t.field();
    let n = t.dim();
    let line = Subspace::from_vectors(f, n, &[center.to_vec()]);
    let comp = line.standard_complement();
    let pc = center.iter().position(|x| !x.is_zero())?;
    let scale = f.inv(center[pc]).unwrap();
    let xs: Vec<(FieldElem, FieldElem)> = t
        .elements()
        .iter()
        .map(|g| {
            let coef = |c: &Vec<FieldElem>| {
                let img = g.vec_mul(c);
                f.mul(f.sub(img[pc], c[pc]), scale)
            };
            (coef(&comp[0]), coef(&comp[1]))
        })
        .collect();
    let mut points = vec![(f.one(), f.zero()), (f.zero(), f.one())];
    points.extend(f.elements().filter(|b| !b.is_zero()).map(|b| (f.one(), b)));
    let sizes: Vec<usize> = points
        .iter()
        .map(|&(a, b)| {
            let vals: BTreeSet<u32> =
                xs.iter().map(|&(x, y)| f.add(f.mul(a, x), f.mul(b, y)).index()).collect();
            vals.len()
        })
        .collect();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if sizes[i] * sizes[j] == t.order() {
                let vec_of = |(a, b): (FieldElem, FieldElem)| {
                    let mut v = vec![f.zero(); n];
                    axpy(f, &mut v, a, &comp[0]);
                    axpy(f, &mut v, b, &comp[1]);
                    v
                };
                let e1 = p_exponent(sizes[i], f.p())?;
                let e2 = p_exponent(sizes[j], f.p())?;
                return Some(([vec_of(points[i]), vec_of(points[j])], [e1, e2]));
            }
        }
    }
    None
}

/// Raw construction output before certification.
struct Candidate {
    construction: Construction,
    gens: Vec<Poly>,
}

fn unit_vector(f: &Field, n: usize, i: usize) -> Vec<FieldElem> {
    let mut v = vec![f.zero(); n];
    v[i] = f.one();
    v
}

/// `x^p - y^{p-1} x` for variables x, y.
fn line_orbit(f: &Field, x: usize, y: usize) -> Poly {
    let p = f.p();
    let xv = Poly::var(f, 3, x);
    let yv = Poly::var(f, 3, y);
    xv.pow(p).sub(&yv.pow(p - 1).mul(&xv))
}

fn plane_block(
    t: &MatrixGroup,
    plane: &Subspace,
    third: ThirdGenerator,
    third_poly: Poly,
) -> Result<Candidate, InvError> {
    let k = t.restriction(plane)?;
    let (kind, two) = plane_generators(&k)?;
    let mut gens = embed_plane(&two, plane);
    gens.push(third_poly);
    Ok(Candidate {
        construction: Construction::PlaneBlock { kind, plane: plane.clone(), plane_group: k, third },
        gens,
    })
}

fn build_candidate(t: &MatrixGroup, chapter: Chapter) -> Result<Candidate, InvError> {
    let f = t.field();
    let p = f.p();
    let n = t.dim();
    if t.is_trivial() {
        let gens = (0..n).map(|i| Poly::var(f, n, i)).collect();
        return Ok(Candidate { construction: Construction::Variables, gens });
    }
    let fixed = common_fixed_space(t);
    if fixed.dim() + 1 == n {
        let z = fixw_invariant(t, &fixed)?;
        let tt = p_exponent(t.order(), p)
            .ok_or_else(|| InvError::NotElementaryFixGroup("order is not a power of p".into()))?;
        let mut gens = vec![z];
        gens.extend(fixed.basis_vectors().iter().map(|b| Poly::linear_form(f, b)));
        let complement = fixed.standard_complement().remove(0);
        return Ok(Candidate {
            construction: Construction::FixedPlane { t: tt, complement, plane: fixed },
            gens,
        });
    }
    let disp = displacement_span(t);
    if disp.dim() == 1 {
        let center = disp.basis_vectors().remove(0);
        if let Some((complements, exponents)) = common_center(t, &center) {
            let gens = vec![
                orbit_product(t, &complements[0]),
                orbit_product(t, &complements[1]),
                Poly::linear_form(f, &center),
            ];
            return Ok(Candidate {
                construction: Construction::CommonCenter { center, complements, exponents },
                gens,
            });
        }
    }
    let w = Subspace::from_vectors(f, 3, &[unit_vector(f, 3, 1), unit_vector(f, 3, 2)]);
    match chapter {
        Chapter::A => plane_block(t, &w, ThirdGenerator::FixedVector, Poly::var(f, 3, 0)),
        Chapter::D => {
            let fix = t.fix_subgroup(&w)?.group;
            if fix.is_trivial() {
                return Err(InvError::NoConstructionApplies("the plane fixer is trivial".into()));
            }
            let tt = p_exponent(fix.order(), p).ok_or_else(|| {
                InvError::NotElementaryFixGroup("plane fixer order is not a power of p".into())
            })?;
            let z = fixw_invariant(&fix, &w)?;
            plane_block(t, &w, ThirdGenerator::PlaneFixer { t: tt }, z)
        }
        Chapter::E if f.s() == 1 => {
            // kernel of the action on V / line: top-left block is the identity
            let kernel: Vec<&Matrix> =
                t.elements().iter().filter(|g| g.submatrix(0, 2, 0, 2).is_identity()).collect();
            let q = p as usize;
            if kernel.len() == 1 {
                let line = Subspace::from_vectors(f, 3, &[unit_vector(f, 3, 2)]);
                let planes = crate::modstruct::stable_subspaces(t, 2);
                let u = planes
                    .into_iter()
                    .find(|pl| !pl.contains_subspace(&line))
                    .ok_or_else(|| InvError::NoConstructionApplies("no stable complement plane".into()))?;
                plane_block(t, &u, ThirdGenerator::FixedVector, Poly::var(f, 3, 2))
            } else if kernel.len() == q * q && t.order() == q * q * q * (q * q - 1) {
                let a = line_orbit(f, 0, 2);
                let b = line_orbit(f, 1, 2);
                let big_a = a.pow(p).mul(&b).sub(&b.pow(p).mul(&a));
                let num = a.pow(p * p).mul(&b).sub(&b.pow(p * p).mul(&a));
                let big_b = num
                    .div_exact(&big_a)
                    .ok_or_else(|| InvError::NoConstructionApplies("quotient is not exact".into()))?;
                Ok(Candidate {
                    construction: Construction::LineExtension,
                    gens: vec![big_a, big_b, Poly::var(f, 3, 2)],
                })
            } else {
                Err(InvError::NoConstructionApplies(format!("kernel of order {}", kernel.len())))
            }
        }
        Chapter::F if f.s() == 1 && t.order() == (p as usize).pow(3) => {
            let a = line_orbit(f, 0, 2);
            let b = line_orbit(f, 1, 2);
            let u = a.pow(p).sub(&b.pow(p - 1).mul(&a));
            Ok(Candidate { construction: Construction::Unitriangular, gens: vec![u, b, Poly::var(f, 3, 2)] })
        }
        _ => Err(InvError::NoConstructionApplies(format!("chapter {chapter} with |T| = {}", t.order()))),
    }
}

/// Caveats attached to every presentation of a chapter over the given field.
pub fn chapter_caveats(chapter: Chapter, field: &Field) -> Vec<String> {
    let mut caveats = Vec::new();
    if field.s() > 1 && matches!(chapter, Chapter::D | Chapter::E | Chapter::F) {
        caveats.push("outside the prime-field guarantees of the closed forms".to_string());
    }
    if field.s() > 1 && chapter == Chapter::D {
        caveats.push("plane-extension assumption unverified".to_string());
    }
    caveats
}

/// Build and certify explicit generators for `S(V)^T` in the adapted basis of `cls`;
/// `t` is the transvection subgroup in the original coordinates.
pub fn construct_tg_invariants(
    t: &MatrixGroup,
    cls: &ModuleClassification,
    bound: u32,
) -> Result<InvariantPresentation, InvError> {
    if cls.chapter == Chapter::Irreducible {
        return Err(InvError::OutOfScope(cls.chapter));
    }
    let tp = t.conjugate(&cls.adapted_basis);
    let cand = build_candidate(&tp, cls.chapter)?;
    let certificate = certify_polynomial_ring(&cand.gens, &tp, bound)?;
    if !certificate.passed {
        return Err(InvError::CertificationFailed {
            construction: cand.construction.tag().to_string(),
            detail: format!("{certificate:?}"),
        });
    }
    Ok(InvariantPresentation {
        degrees: cand.gens.iter().map(|g| g.homogeneous_degree().unwrap()).collect(),
        construction: cand.construction,
        gens: cand.gens,
        subgroup_order: tp.order(),
        basis: cls.adapted_basis.clone(),
        certificate,
        caveats: chapter_caveats(cls.chapter, t.field()),
    })
}

/// Search fallback in the adapted basis of `cls`.
pub fn search_tg_invariants(
    t: &MatrixGroup,
    cls: &ModuleClassification,
    maxdeg: u32,
    bound: u32,
) -> Result<Option<InvariantPresentation>, InvError> {
    let tp = t.conjugate(&cls.adapted_basis);
    Ok(general_generator_search(&tp, maxdeg, bound)?.map(|mut pres| {
        pres.basis = cls.adapted_basis.clone();
        pres.caveats = chapter_caveats(cls.chapter, t.field());
        pres
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::closure;
    use crate::modstruct::classify_case;

    fn gf(p: u32, s: u32) -> Field {
        Field::new(p, s).unwrap()
    }

    fn u3(f: &Field) -> MatrixGroup {
        let one = f.one();
        let gens = vec![
            Matrix::elementary(f, 3, 0, 1, one),
            Matrix::elementary(f, 3, 0, 2, one),
            Matrix::elementary(f, 3, 1, 2, one),
        ];
        closure(f, 3, &gens, 100_000).unwrap()
    }

    #[test]
    fn series_coefficients() {
        assert_eq!(poly_series(&[1, 1, 2], 5), vec![1, 2, 4, 6, 9, 12]);
        assert_eq!(poly_series(&[1, 2, 4], 6), vec![1, 1, 2, 2, 4, 4, 6]);
        assert_eq!(poly_series(&[1, 1, 1], 3), vec![1, 3, 6, 10]);
    }

    #[test]
    fn fixw_examples() {
        let f = gf(2, 1);
        let w = Subspace::from_vectors(&f, 3, &[unit_vector(&f, 3, 1), unit_vector(&f, 3, 2)]);
        let trivial = MatrixGroup::trivial(&f, 3);
        assert_eq!(fixw_invariant(&trivial, &w).unwrap(), Poly::var(&f, 3, 0));
        let sigma = Matrix::elementary(&f, 3, 0, 1, f.one());
        let h = closure(&f, 3, &[sigma], 10).unwrap();
        let z = fixw_invariant(&h, &w).unwrap();
        let x1 = Poly::var(&f, 3, 0);
        let x2 = Poly::var(&f, 3, 1);
        assert_eq!(z, x1.pow(2).add(&x2.mul(&x1)));
        // order 4: v -> v + w1, v -> v + w2
        let h4 = closure(
            &f,
            3,
            &[Matrix::elementary(&f, 3, 0, 1, f.one()), Matrix::elementary(&f, 3, 0, 2, f.one())],
            10,
        )
        .unwrap();
        let z4 = fixw_invariant(&h4, &w).unwrap();
        assert_eq!(z4.homogeneous_degree(), Some(4));
        for g in h4.elements() {
            assert_eq!(act(g, &z4).unwrap(), z4);
        }
        let qs = fixw_coefficients(&z4, 0, 2, 2).unwrap();
        assert_eq!(qs[0].homogeneous_degree(), Some(2));
        assert_eq!(qs[1].homogeneous_degree(), Some(3));
    }

    #[test]
    fn fixw_rejects_moving_elements() {
        let f = gf(2, 1);
        let w = Subspace::from_vectors(&f, 3, &[unit_vector(&f, 3, 1), unit_vector(&f, 3, 2)]);
        let h = closure(&f, 3, &[Matrix::elementary(&f, 3, 1, 2, f.one())], 10).unwrap();
        assert!(matches!(fixw_invariant(&h, &w), Err(InvError::NotElementaryFixGroup(_))));
    }

    #[test]
    fn dickson_degrees() {
        for (p, s, q) in [(2, 1, 2), (3, 1, 3), (2, 2, 4), (2, 2, 2)] {
            let f = gf(p, s);
            let (u, c) = dickson_sl2(&f, q).unwrap();
            assert_eq!(u.homogeneous_degree(), Some(q + 1));
            assert_eq!(c.homogeneous_degree(), Some(q * q - q));
            assert_eq!((q + 1) * (q * q - q), q * (q * q - 1));
        }
        let f = gf(2, 1);
        let (u, _) = dickson_sl2(&f, 2).unwrap();
        assert_eq!(u, Poly::from_int_terms(&f, 2, &[(1, &[2, 1]), (1, &[1, 2])]));
        assert_eq!(dickson_sl2(&gf(2, 1), 4).unwrap_err(), InvError::FieldTooSmall(4));
    }

    #[test]
    fn certification_examples() {
        let f = gf(2, 1);
        let trivial = MatrixGroup::trivial(&f, 3);
        let vars: Vec<Poly> = (0..3).map(|i| Poly::var(&f, 3, i)).collect();
        assert!(certify_polynomial_ring(&vars, &trivial, 6).unwrap().passed);
        let h = closure(&f, 3, &[Matrix::elementary(&f, 3, 0, 2, f.one())], 10).unwrap();
        let z = Poly::var(&f, 3, 0).pow(2).add(&Poly::var(&f, 3, 0).mul(&Poly::var(&f, 3, 2)));
        let good = vec![z, Poly::var(&f, 3, 1), Poly::var(&f, 3, 2)];
        let cert = certify_polynomial_ring(&good, &h, 5).unwrap();
        assert!(cert.passed, "{cert:?}");
        let x2 = Poly::var(&f, 3, 1);
        let x3 = Poly::var(&f, 3, 2);
        let bad = vec![x2.clone(), x3.clone(), x2.mul(&x3)];
        let cert = certify_polynomial_ring(&bad, &h, 5).unwrap();
        assert!(!cert.passed);
        assert!(!cert.independent);
        assert_eq!(cert.first_mismatch, Some(2));
    }

    #[test]
    fn search_examples() {
        let f = gf(3, 1);
        let trivial = MatrixGroup::trivial(&f, 3);
        let pres = general_generator_search(&trivial, 4, 6).unwrap().unwrap();
        assert_eq!(pres.degrees, vec![1, 1, 1]);
        let h = closure(&f, 3, &[Matrix::elementary(&f, 3, 0, 2, f.one())], 10).unwrap();
        let pres = general_generator_search(&h, 6, 8).unwrap().unwrap();
        let mut degs = pres.degrees.clone();
        degs.sort();
        assert_eq!(degs, vec![1, 1, 3]);
        assert!(general_generator_search(&h, 1, 8).unwrap().is_none());
    }

    #[test]
    fn unitriangular_presentation() {
        let f = gf(2, 1);
        let g = u3(&f);
        let cls = classify_case(&g).unwrap();
        let t = g.reflection_subgroups().t.group;
        let pres = construct_tg_invariants(&t, &cls, 12).unwrap();
        assert_eq!(pres.construction.tag(), "unitriangular");
        assert_eq!(pres.degrees, vec![4, 2, 1]);
        assert!(pres.certificate.passed);
    }

    #[test]
    fn block_sl2_presentation() {
        let f = gf(2, 1);
        let gens = vec![Matrix::elementary(&f, 3, 1, 2, f.one()), Matrix::elementary(&f, 3, 2, 1, f.one())];
        let g = closure(&f, 3, &gens, 100).unwrap();
        let cls = classify_case(&g).unwrap();
        let t = g.reflection_subgroups().t.group;
        let pres = construct_tg_invariants(&t, &cls, 10).unwrap();
        assert_eq!(pres.construction.tag(), "plane-dickson");
        assert_eq!(pres.degrees, vec![3, 2, 1]);
    }

    #[test]
    fn exceptional_invariants_are_fixed_by_their_stabilizer() {
        let f = gf(3, 2);
        let sl29 = sl2_subfield_group(&f, 9).unwrap();
        let (f10, f12) = exceptional_invariants(&f);
        let stab: Vec<Matrix> = sl29
            .elements()
            .iter()
            .filter(|g| act(g, &f10).unwrap() == f10 && act(g, &f12).unwrap() == f12)
            .cloned()
            .collect();
        assert_eq!(stab.len(), 120);
        let k = sl29.subgroup_generated_by(&stab);
        let (kind, gens) = plane_generators(&k).unwrap();
        assert_eq!(kind, BlockKind::Exceptional);
        assert_eq!(gens[0].homogeneous_degree(), Some(10));
    }
}
