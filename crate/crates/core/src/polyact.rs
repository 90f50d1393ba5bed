//! Graded polynomials over GF(p^s), the linear action on them, per-degree invariant
//! spaces, and subalgebra membership.
//!
//! Variables are the basis vectors of the module: `g` acts by
//! `x_i -> sum_j g[i][j] x_j`, extended multiplicatively. With this convention
//! `act(g, act(h, f)) = act(h * g, f)`, so `(g, h) -> h * g` is the composition that
//! makes `act` a left action; see [`compose`].

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::gf::{Field, FieldElem};
use crate::linalg::{axpy, rref_in_place, Matrix};

/// Maximum number of variables supported by the packed monomial encoding.
pub const MAX_VARS: usize = 5;
/// Maximum exponent of a single variable.
pub const MAX_EXP: u32 = (1 << BITS) - 1;
const BITS: u32 = 12;
const MASK: u64 = (1 << BITS) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("matrix is {rows}x{cols} but the polynomial has {nvars} variables")]
    DimMismatch { rows: usize, cols: usize, nvars: usize },
    #[error("degree {degree} exceeds the configured bound {bound}")]
    BoundExceeded { degree: u32, bound: u32 },
    #[error("polynomial is not in the subalgebra generated by the given generators")]
    NotInSubalgebra,
    #[error("linear part is not determined: the generators are dependent in degree {0}")]
    AmbiguousExpression(u32),
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
}

/// A monomial packed into 64 bits, 12 bits per variable, first variable most significant.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Mono(u64);

impl Mono {
    pub const ONE: Mono = Mono(0);

    fn shift(i: usize) -> u32 {
        BITS * (MAX_VARS as u32 - 1 - i as u32)
    }

    pub fn from_exps(e: &[u32]) -> Mono {
        assert!(e.len() <= MAX_VARS, "at most {MAX_VARS} variables");
        let mut v = 0u64;
        for (i, &x) in e.iter().enumerate() {
            assert!(x <= MAX_EXP, "exponent {x} too large");
            v |= (x as u64) << Self::shift(i);
        }
        Mono(v)
    }

    pub fn var(i: usize) -> Mono {
        Mono(1u64 << Self::shift(i))
    }

    #[inline]
    pub fn exp(self, i: usize) -> u32 {
        ((self.0 >> Self::shift(i)) & MASK) as u32
    }

    pub fn exps(self, nvars: usize) -> Vec<u32> {
        (0..nvars).map(|i| self.exp(i)).collect()
    }

    #[inline]
    pub fn degree(self) -> u32 {
        (0..MAX_VARS).map(|i| self.exp(i)).sum()
    }

    #[inline]
    pub fn mul(self, other: Mono) -> Mono {
        Mono(self.0 + other.0)
    }

    pub fn divides(self, other: Mono) -> bool {
        (0..MAX_VARS).all(|i| self.exp(i) <= other.exp(i))
    }

    pub fn div(self, other: Mono) -> Option<Mono> {
        other.divides(self).then(|| Mono(self.0 - other.0))
    }

    pub fn pow(self, k: u32) -> Mono {
        let e: Vec<u32> = (0..MAX_VARS).map(|i| self.exp(i) * k).collect();
        Mono::from_exps(&e)
    }
}

impl Ord for Mono {
    /// Graded lexicographic order.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then(self.0.cmp(&other.0))
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Homogeneity of a polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Homogeneity {
    Zero,
    Degree(u32),
    Mixed,
}

/// A polynomial in `nvars` variables; terms sorted by decreasing graded-lex order, no zero
/// coefficients.
#[derive(Clone)]
pub struct Poly {
    nvars: usize,
    terms: Vec<(Mono, FieldElem)>,
    field: Field,
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.terms == other.terms
    }
}

impl Eq for Poly {}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut vars = Vec::new();
                for i in 0..self.nvars {
                    match m.exp(i) {
                        0 => {}
                        1 => vars.push(format!("x{}", i + 1)),
                        e => vars.push(format!("x{}^{}", i + 1, e)),
                    }
                }
                let cs = self.field.fmt_elem(*c);
                match (vars.is_empty(), *c == self.field.one()) {
                    (true, _) => cs,
                    (false, true) => vars.join("*"),
                    (false, false) => format!("({cs})*{}", vars.join("*")),
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

fn sort_terms(terms: &mut [(Mono, FieldElem)]) {
    terms.sort_unstable_by(|a, b| b.0.cmp(&a.0));
}

impl Poly {
    pub fn zero(field: &Field, nvars: usize) -> Poly {
        assert!(nvars <= MAX_VARS);
        Poly { nvars, terms: vec![], field: field.clone() }
    }

    pub fn constant(field: &Field, nvars: usize, c: FieldElem) -> Poly {
        let mut p = Self::zero(field, nvars);
        if !c.is_zero() {
            p.terms.push((Mono::ONE, c));
        }
        p
    }

    pub fn one(field: &Field, nvars: usize) -> Poly {
        Self::constant(field, nvars, field.one())
    }

    /// The variable `x_i` (0-based).
    pub fn var(field: &Field, nvars: usize, i: usize) -> Poly {
        assert!(i < nvars);
        Poly { nvars, terms: vec![(Mono::var(i), field.one())], field: field.clone() }
    }

    /// The linear form `sum_i v_i x_i`.
    pub fn linear_form(field: &Field, v: &[FieldElem]) -> Poly {
        let mut terms: Vec<(Mono, FieldElem)> =
            v.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, &c)| (Mono::var(i), c)).collect();
        sort_terms(&mut terms);
        Poly { nvars: v.len(), terms, field: field.clone() }
    }

    /// Build from arbitrary (monomial, coefficient) pairs, combining duplicates.
    pub fn from_terms(
        field: &Field,
        nvars: usize,
        terms: impl IntoIterator<Item = (Mono, FieldElem)>,
    ) -> Poly {
        let mut acc: HashMap<Mono, FieldElem> = HashMap::new();
        for (m, c) in terms {
            let e = acc.entry(m).or_insert(field.zero());
            *e = field.add(*e, c);
        }
        let mut terms: Vec<(Mono, FieldElem)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        sort_terms(&mut terms);
        Poly { nvars, terms, field: field.clone() }
    }

    /// Build from integer coefficients and exponent vectors.
    pub fn from_int_terms(field: &Field, nvars: usize, terms: &[(i64, &[u32])]) -> Poly {
        Self::from_terms(field, nvars, terms.iter().map(|(c, e)| (Mono::from_exps(e), field.from_int(*c))))
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(Mono, FieldElem)] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: Mono) -> FieldElem {
        self.terms.iter().find(|(x, _)| *x == m).map_or(self.field.zero(), |t| t.1)
    }

    /// Leading term in graded-lex order.
    pub fn leading(&self) -> Option<(Mono, FieldElem)> {
        self.terms.first().copied()
    }

    pub fn homogeneity(&self) -> Homogeneity {
        let Some((m, _)) = self.terms.first() else { return Homogeneity::Zero };
        let d = m.degree();
        if self.terms.iter().all(|(x, _)| x.degree() == d) {
            Homogeneity::Degree(d)
        } else {
            Homogeneity::Mixed
        }
    }

    /// Degree of a nonzero homogeneous polynomial.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        match self.homogeneity() {
            Homogeneity::Degree(d) => Some(d),
            _ => None,
        }
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.iter().map(|(m, _)| m.degree()).max()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let f = &self.field;
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            let (a, b) = (self.terms[i], other.terms[j]);
            match a.0.cmp(&b.0) {
                Ordering::Greater => {
                    out.push(a);
                    i += 1;
                }
                Ordering::Less => {
                    out.push(b);
                    j += 1;
                }
                Ordering::Equal => {
                    let c = f.add(a.1, b.1);
                    if !c.is_zero() {
                        out.push((a.0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&other.terms[j..]);
        Poly { nvars: self.nvars, terms: out, field: f.clone() }
    }

    pub fn neg(&self) -> Poly {
        self.scale(self.field.neg(self.field.one()))
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: FieldElem) -> Poly {
        if c.is_zero() {
            return Poly::zero(&self.field, self.nvars);
        }
        let f = &self.field;
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|&(m, x)| (m, f.mul(x, c))).collect(),
            field: f.clone(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        if self.is_zero() || other.is_zero() {
            return Poly::zero(&self.field, self.nvars);
        }
        let f = &self.field;
        if self.terms.len() == 1 || other.terms.len() == 1 {
            let (single, many) = if self.terms.len() == 1 { (self, other) } else { (other, self) };
            let (m0, c0) = single.terms[0];
            // multiplying by a monomial preserves the term order
            return Poly {
                nvars: self.nvars,
                terms: many.terms.iter().map(|&(m, c)| (m.mul(m0), f.mul(c, c0))).collect(),
                field: f.clone(),
            };
        }
        let mut acc: HashMap<u64, FieldElem> =
            HashMap::with_capacity(self.terms.len() * other.terms.len() / 2 + 1);
        for &(ma, ca) in &self.terms {
            for &(mb, cb) in &other.terms {
                let e = acc.entry(ma.mul(mb).0).or_insert(f.zero());
                *e = f.add(*e, f.mul(ca, cb));
            }
        }
        let mut terms: Vec<(Mono, FieldElem)> =
            acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(m, c)| (Mono(m), c)).collect();
        sort_terms(&mut terms);
        Poly { nvars: self.nvars, terms, field: f.clone() }
    }

    /// The p-th power (additive in characteristic p).
    pub fn frobenius(&self) -> Poly {
        let f = &self.field;
        let p = f.p();
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|&(m, c)| (m.pow(p), f.frobenius(c))).collect(),
            field: f.clone(),
        }
    }

    /// `self^k`, splitting `k` into base-p digits so that p-th powers cost nothing.
    pub fn pow(&self, k: u32) -> Poly {
        let p = self.field.p();
        let mut result = Poly::one(&self.field, self.nvars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            let digit = k % p;
            for _ in 0..digit {
                result = result.mul(&base);
            }
            k /= p;
            if k > 0 {
                base = base.frobenius();
            }
        }
        result
    }

    /// Exact division; `None` when `divisor` does not divide `self`.
    pub fn div_exact(&self, divisor: &Poly) -> Option<Poly> {
        let (lm, lc) = divisor.leading()?;
        let f = &self.field;
        let lc_inv = f.inv(lc).unwrap();
        let mut rem = self.clone();
        let mut quot = Vec::new();
        while let Some((m, c)) = rem.leading() {
            let qm = m.div(lm)?;
            let qc = f.mul(c, lc_inv);
            quot.push((qm, qc));
            let term = Poly { nvars: self.nvars, terms: vec![(qm, qc)], field: f.clone() };
            rem = rem.sub(&term.mul(divisor));
        }
        let mut terms = quot;
        sort_terms(&mut terms);
        Some(Poly { nvars: self.nvars, terms, field: f.clone() })
    }

    /// Substitute `x_i -> images[i]`; the result lives in the variables of the images.
    pub fn substitute(&self, images: &[Poly]) -> Poly {
        assert_eq!(images.len(), self.nvars, "one image per variable");
        let Some(first) = images.first() else { return self.clone() };
        let out_vars = first.nvars;
        let mut memo = Substitution::new(&self.field, images, out_vars);
        let mut acc: HashMap<u64, FieldElem> = HashMap::new();
        let f = &self.field;
        for &(m, c) in &self.terms {
            let img = memo.image(m);
            for &(mm, cc) in &img.terms {
                let e = acc.entry(mm.0).or_insert(f.zero());
                *e = f.add(*e, f.mul(c, cc));
            }
        }
        let mut terms: Vec<(Mono, FieldElem)> =
            acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(m, c)| (Mono(m), c)).collect();
        sort_terms(&mut terms);
        Poly { nvars: out_vars, terms, field: f.clone() }
    }

    /// Lift into a ring with more variables (variables keep their indices).
    pub fn extend_vars(&self, nvars: usize) -> Poly {
        assert!(nvars >= self.nvars && nvars <= MAX_VARS);
        Poly { nvars, terms: self.terms.clone(), field: self.field.clone() }
    }

    /// Serialize as `[[exponents], coefficient]` pairs in decreasing graded-lex order.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.terms
                .iter()
                .map(|(m, c)| serde_json::json!([m.exps(self.nvars), self.field.to_json(*c)]))
                .collect(),
        )
    }
}

/// Memoized images of monomials under a substitution, using `x^(a + p b) = x^a (x^b)^p`.
struct Substitution<'a> {
    field: &'a Field,
    images: &'a [Poly],
    out_vars: usize,
    memo: HashMap<Mono, Poly>,
}

impl<'a> Substitution<'a> {
    fn new(field: &'a Field, images: &'a [Poly], out_vars: usize) -> Self {
        Substitution { field, images, out_vars, memo: HashMap::new() }
    }

    fn image(&mut self, m: Mono) -> Poly {
        if let Some(x) = self.memo.get(&m) {
            return x.clone();
        }
        let p = self.field.p();
        let n = self.images.len();
        let result = if m == Mono::ONE {
            Poly::one(self.field, self.out_vars)
        } else {
            let low: Vec<u32> = (0..n).map(|i| m.exp(i) % p).collect();
            let high: Vec<u32> = (0..n).map(|i| m.exp(i) / p).collect();
            if high.iter().any(|&x| x > 0) {
                let lo = self.image(Mono::from_exps(&low));
                let hi = self.image(Mono::from_exps(&high)).frobenius();
                lo.mul(&hi)
            } else {
                let i = (0..n).rev().find(|&i| low[i] > 0).unwrap();
                let mut rest = low.clone();
                rest[i] -= 1;
                let r = self.image(Mono::from_exps(&rest));
                r.mul(&self.images[i])
            }
        };
        self.memo.insert(m, result.clone());
        result
    }
}

/// Images of the variables under `g`: `x_i -> sum_j g[i][j] x_j`.
pub fn variable_images(g: &Matrix) -> Vec<Poly> {
    (0..g.rows()).map(|i| Poly::linear_form(g.field(), g.row(i))).collect()
}

/// The action of `g` on a polynomial.
pub fn act(g: &Matrix, f: &Poly) -> Result<Poly, PolyError> {
    if g.rows() != f.nvars || g.cols() != f.nvars {
        return Err(PolyError::DimMismatch { rows: g.rows(), cols: g.cols(), nvars: f.nvars });
    }
    Ok(f.substitute(&variable_images(g)))
}

/// The matrix `k` with `act(g, act(h, f)) = act(k, f)`.
pub fn compose(g: &Matrix, h: &Matrix) -> Matrix {
    h.mul(g)
}

/// All monomials of one degree, in decreasing lexicographic order.
#[derive(Clone, Debug)]
pub struct DegreeSlice {
    pub nvars: usize,
    pub degree: u32,
    pub monos: Vec<Mono>,
    index: HashMap<Mono, usize>,
}

fn compositions(nvars: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() + 1 == nvars {
        prefix.push(d);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for e in (0..=d).rev() {
        prefix.push(e);
        compositions(nvars, d - e, prefix, out);
        prefix.pop();
    }
}

/// Exponent vectors of length `n` summing to `d`, lexicographically decreasing.
pub fn exponent_vectors(n: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    if n == 0 {
        if d == 0 {
            out.push(vec![]);
        }
        return out;
    }
    compositions(n, d, &mut Vec::new(), &mut out);
    out
}

impl DegreeSlice {
    pub fn new(nvars: usize, degree: u32) -> DegreeSlice {
        let monos: Vec<Mono> = exponent_vectors(nvars, degree).iter().map(|e| Mono::from_exps(e)).collect();
        let index = monos.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        DegreeSlice { nvars, degree, monos, index }
    }

    pub fn dim(&self) -> usize {
        self.monos.len()
    }

    pub fn index_of(&self, m: Mono) -> Option<usize> {
        self.index.get(&m).copied()
    }

    /// Coordinates of a polynomial whose terms all have this degree.
    pub fn to_vector(&self, f: &Poly) -> Vec<FieldElem> {
        let mut v = vec![f.field.zero(); self.dim()];
        for &(m, c) in &f.terms {
            v[self.index[&m]] = c;
        }
        v
    }

    pub fn from_vector(&self, field: &Field, v: &[FieldElem]) -> Poly {
        let terms: Vec<(Mono, FieldElem)> =
            self.monos.iter().zip(v).filter(|(_, c)| !c.is_zero()).map(|(&m, &c)| (m, c)).collect();
        Poly { nvars: self.nvars, terms, field: field.clone() }
    }
}

/// Per-degree action matrices of a fixed list of matrices, built degree by degree.
pub struct ActionTower {
    field: Field,
    nvars: usize,
    gens: Vec<Matrix>,
    slices: Vec<DegreeSlice>,
    /// rho[d][k] is the row-major action matrix of gens[k] on slice d.
    rho: Vec<Vec<Vec<FieldElem>>>,
}

impl ActionTower {
    pub fn new(field: &Field, nvars: usize, gens: &[Matrix]) -> ActionTower {
        let slice0 = DegreeSlice::new(nvars, 0);
        let rho0 = gens.iter().map(|_| vec![field.one()]).collect();
        ActionTower {
            field: field.clone(),
            nvars,
            gens: gens.to_vec(),
            slices: vec![slice0],
            rho: vec![rho0],
        }
    }

    fn extend_to(&mut self, d: u32) {
        let f = self.field.clone();
        let n = self.nvars;
        while self.slices.len() <= d as usize {
            let prev_d = self.slices.len() - 1;
            let next = DegreeSlice::new(n, prev_d as u32 + 1);
            let prev = &self.slices[prev_d];
            let (np, nn) = (prev.dim(), next.dim());
            // position of m * x_j in the next slice, for every m in the previous one
            let up: Vec<Vec<usize>> = prev
                .monos
                .iter()
                .map(|&m| (0..n).map(|j| next.index_of(m.mul(Mono::var(j))).unwrap()).collect())
                .collect();
            let mut mats = Vec::with_capacity(self.gens.len());
            for (k, g) in self.gens.iter().enumerate() {
                let prev_rho = &self.rho[prev_d][k];
                let mut rho = vec![f.zero(); nn * nn];
                for (r, &m) in next.monos.iter().enumerate() {
                    // split off the last variable present: m = m' * x_i
                    let i = (0..n).rev().find(|&i| m.exp(i) > 0).unwrap();
                    let parent = prev.index_of(Mono(m.0 - Mono::var(i).0)).unwrap();
                    let prow = &prev_rho[parent * np..(parent + 1) * np];
                    let out = &mut rho[r * nn..(r + 1) * nn];
                    for (c, &x) in prow.iter().enumerate() {
                        if x.is_zero() {
                            continue;
                        }
                        for j in 0..n {
                            let gij = g.get(i, j);
                            if !gij.is_zero() {
                                let t = &mut out[up[c][j]];
                                *t = f.add(*t, f.mul(x, gij));
                            }
                        }
                    }
                }
                mats.push(rho);
            }
            self.slices.push(next);
            self.rho.push(mats);
        }
    }

    pub fn slice(&mut self, d: u32) -> &DegreeSlice {
        self.extend_to(d);
        &self.slices[d as usize]
    }

    /// Action matrix of generator `k` on slice `d`.
    pub fn matrix(&mut self, k: usize, d: u32) -> Matrix {
        self.extend_to(d);
        let nn = self.slices[d as usize].dim();
        Matrix::from_data(&self.field, nn, nn, self.rho[d as usize][k].clone())
    }

    /// Echelonized basis (as coordinate rows) of the common fixed space in degree `d`.
    pub fn fixed_space(&mut self, d: u32) -> Vec<Vec<FieldElem>> {
        self.extend_to(d);
        let f = self.field.clone();
        let nn = self.slices[d as usize].dim();
        // current fixed space, as rows; None means the whole slice
        let mut basis: Option<Vec<Vec<FieldElem>>> = None;
        for k in 0..self.gens.len() {
            let rho = &self.rho[d as usize][k];
            // M = K (rho - I), stored transposed: column a of M^T is row a of M
            let rows: Vec<Vec<FieldElem>> = match &basis {
                None => (0..nn)
                    .map(|r| {
                        let mut row = rho[r * nn..(r + 1) * nn].to_vec();
                        row[r] = f.sub(row[r], f.one());
                        row
                    })
                    .collect(),
                Some(b) => b
                    .iter()
                    .map(|v| {
                        let mut row = vec![f.zero(); nn];
                        for (r, &c) in v.iter().enumerate() {
                            if !c.is_zero() {
                                axpy(&f, &mut row, c, &rho[r * nn..(r + 1) * nn]);
                            }
                        }
                        axpy(&f, &mut row, f.neg(f.one()), v);
                        row
                    })
                    .collect(),
            };
            let kdim = rows.len();
            // left kernel of M: kernel of M^T (nn x kdim)
            let mut mt = vec![f.zero(); nn * kdim];
            for (a, row) in rows.iter().enumerate() {
                for (c, &x) in row.iter().enumerate() {
                    mt[c * kdim + a] = x;
                }
            }
            let piv = rref_in_place(&f, &mut mt, nn, kdim);
            let free: Vec<usize> = (0..kdim).filter(|c| !piv.contains(c)).collect();
            let mut new_basis = Vec::with_capacity(free.len());
            for &fc in &free {
                let mut a = vec![f.zero(); kdim];
                a[fc] = f.one();
                for (i, &pc) in piv.iter().enumerate() {
                    a[pc] = f.neg(mt[i * kdim + fc]);
                }
                let v = match &basis {
                    None => a,
                    Some(b) => {
                        let mut v = vec![f.zero(); nn];
                        for (j, &c) in a.iter().enumerate() {
                            axpy(&f, &mut v, c, &b[j]);
                        }
                        v
                    }
                };
                new_basis.push(v);
            }
            basis = Some(new_basis);
        }
        let basis = basis.unwrap_or_else(|| {
            (0..nn)
                .map(|i| {
                    let mut e = vec![f.zero(); nn];
                    e[i] = f.one();
                    e
                })
                .collect()
        });
        if basis.is_empty() {
            return basis;
        }
        let k = basis.len();
        let mut flat = basis.concat();
        let piv = rref_in_place(&f, &mut flat, k, nn);
        (0..piv.len()).map(|i| flat[i * nn..(i + 1) * nn].to_vec()).collect()
    }
}

/// Dimension and echelonized basis of the degree-`d` invariants of the group generated by
/// `gens` (generators suffice).
pub fn invariant_space(
    field: &Field,
    nvars: usize,
    gens: &[Matrix],
    d: u32,
    bound: u32,
) -> Result<(usize, Vec<Poly>), PolyError> {
    if d > bound {
        return Err(PolyError::BoundExceeded { degree: d, bound });
    }
    let mut tower = ActionTower::new(field, nvars, gens);
    let rows = tower.fixed_space(d);
    let slice = tower.slice(d).clone();
    let polys: Vec<Poly> = rows.iter().map(|r| slice.from_vector(field, r)).collect();
    Ok((polys.len(), polys))
}

/// Exponent tuples `e` with `sum e_i deg_i = d`, lexicographically decreasing.
pub fn weighted_exponents(degs: &[u32], d: u32) -> Vec<Vec<u32>> {
    fn rec(degs: &[u32], d: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if degs.is_empty() {
            if d == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        let w = degs[0];
        let max = if w == 0 { 0 } else { d / w };
        for e in (0..=max).rev() {
            prefix.push(e);
            rec(&degs[1..], d - e * w, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(degs, d, &mut Vec::new(), &mut out);
    out
}

/// Cached powers of a generator list, for building generator monomials.
pub struct PowerCache {
    gens: Vec<Poly>,
    powers: Vec<Vec<Poly>>,
}

impl PowerCache {
    pub fn new(gens: &[Poly]) -> PowerCache {
        let powers = gens.iter().map(|g| vec![Poly::one(g.field(), g.nvars())]).collect();
        PowerCache { gens: gens.to_vec(), powers }
    }

    pub fn power(&mut self, i: usize, e: u32) -> Poly {
        while self.powers[i].len() <= e as usize {
            let k = self.powers[i].len() as u32;
            let p = self.gens[i].field().p();
            // reuse Frobenius for exponents divisible by p
            let next = if k.is_multiple_of(p) {
                self.powers[i][(k / p) as usize].frobenius()
            } else {
                self.powers[i][(k - 1) as usize].mul(&self.gens[i])
            };
            self.powers[i].push(next);
        }
        self.powers[i][e as usize].clone()
    }

    pub fn product(&mut self, exps: &[u32]) -> Poly {
        let mut acc: Option<Poly> = None;
        for (i, &e) in exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let p = self.power(i, e);
            acc = Some(match acc {
                None => p,
                Some(a) => a.mul(&p),
            });
        }
        acc.unwrap_or_else(|| Poly::one(self.gens[0].field(), self.gens[0].nvars()))
    }
}

/// A linear combination of generator monomials (exponent tuple, coefficient).
pub type GenExpression = Vec<(Vec<u32>, FieldElem)>;

/// The degree-`d` slice of the subalgebra generated by `gens`.
#[derive(Clone, Debug)]
pub struct SubalgebraSlice {
    pub degree: u32,
    pub dim: usize,
    pub basis: Vec<Poly>,
    pub expressions: Vec<GenExpression>,
}

/// Local coordinates on the union of the supports of a set of polynomials.
fn local_coordinates(polys: &[&Poly]) -> (Vec<Mono>, HashMap<Mono, usize>) {
    let mut monos: Vec<Mono> = polys.iter().flat_map(|p| p.terms.iter().map(|t| t.0)).collect();
    monos.sort_unstable_by(|a, b| b.cmp(a));
    monos.dedup();
    let index = monos.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    (monos, index)
}

/// Span of all generator monomials of weighted degree `d`, echelonized, with the
/// expression of each basis element in generator monomials.
pub fn subalgebra_degree_basis(gens: &[Poly], d: u32) -> SubalgebraSlice {
    let degs: Vec<u32> =
        gens.iter().map(|g| g.homogeneous_degree().expect("homogeneous generators")).collect();
    let tuples = weighted_exponents(&degs, d);
    if gens.is_empty() || tuples.is_empty() {
        return SubalgebraSlice { degree: d, dim: 0, basis: vec![], expressions: vec![] };
    }
    let f = gens[0].field().clone();
    let nvars = gens[0].nvars();
    let mut cache = PowerCache::new(gens);
    let prods: Vec<Poly> = tuples.iter().map(|e| cache.product(e)).collect();
    let refs: Vec<&Poly> = prods.iter().collect();
    let (monos, index) = local_coordinates(&refs);
    let (k, l) = (prods.len(), monos.len());
    // rows: [coordinates | identity] to track expressions
    let w = l + k;
    let mut data = vec![f.zero(); k * w];
    for (r, pr) in prods.iter().enumerate() {
        for &(m, c) in &pr.terms {
            data[r * w + index[&m]] = c;
        }
        data[r * w + l + r] = f.one();
    }
    let piv = rref_in_place(&f, &mut data, k, w);
    let rank = piv.iter().filter(|&&c| c < l).count();
    let mut basis = Vec::with_capacity(rank);
    let mut expressions = Vec::with_capacity(rank);
    for r in 0..rank {
        let row = &data[r * w..(r + 1) * w];
        let terms: Vec<(Mono, FieldElem)> =
            monos.iter().zip(&row[..l]).filter(|(_, c)| !c.is_zero()).map(|(&m, &c)| (m, c)).collect();
        basis.push(Poly { nvars, terms, field: f.clone() });
        expressions.push(
            tuples
                .iter()
                .zip(&row[l..])
                .filter(|(_, c)| !c.is_zero())
                .map(|(e, &c)| (e.clone(), c))
                .collect(),
        );
    }
    SubalgebraSlice { degree: d, dim: rank, basis, expressions }
}

/// Dimension of the degree-`d` slice of the subalgebra generated by the cached generators.
pub fn subalgebra_rank(cache: &mut PowerCache, degs: &[u32], d: u32) -> usize {
    let tuples = weighted_exponents(degs, d);
    if tuples.is_empty() {
        return 0;
    }
    let prods: Vec<Poly> = tuples.iter().map(|e| cache.product(e)).collect();
    let f = prods[0].field().clone();
    let refs: Vec<&Poly> = prods.iter().collect();
    let (monos, index) = local_coordinates(&refs);
    let (k, l) = (prods.len(), monos.len());
    let mut data = vec![f.zero(); k * l];
    for (r, pr) in prods.iter().enumerate() {
        for &(m, c) in &pr.terms {
            data[r * l + index[&m]] = c;
        }
    }
    rref_in_place(&f, &mut data, k, l).len()
}

/// Coefficients `c_j` with `f = sum_{deg g_j = deg f} c_j g_j + (products of two or more
/// generators)`; entries for generators of other degrees are zero.
pub fn express_linear_part(f: &Poly, gens: &[Poly]) -> Result<Vec<FieldElem>, PolyError> {
    let field = f.field().clone();
    let d = match f.homogeneity() {
        Homogeneity::Zero => return Ok(vec![field.zero(); gens.len()]),
        Homogeneity::Degree(d) => d,
        Homogeneity::Mixed => return Err(PolyError::NotHomogeneous),
    };
    let degs: Vec<u32> =
        gens.iter().map(|g| g.homogeneous_degree().expect("homogeneous generators")).collect();
    let tuples = weighted_exponents(&degs, d);
    let mut cache = PowerCache::new(gens);
    let prods: Vec<Poly> = tuples.iter().map(|e| cache.product(e)).collect();
    let mut refs: Vec<&Poly> = prods.iter().collect();
    refs.push(f);
    let (monos, index) = local_coordinates(&refs);
    let (l, k) = (monos.len(), prods.len());
    // columns: one per generator monomial, then f
    let w = k + 1;
    let mut data = vec![field.zero(); l * w];
    for (c, pr) in prods.iter().enumerate() {
        for &(m, x) in &pr.terms {
            data[index[&m] * w + c] = x;
        }
    }
    for &(m, x) in &f.terms {
        data[index[&m] * w + k] = x;
    }
    let piv = rref_in_place(&field, &mut data, l, w);
    if piv.contains(&k) {
        return Err(PolyError::NotInSubalgebra);
    }
    let mut out = vec![field.zero(); gens.len()];
    for (j, deg) in degs.iter().enumerate() {
        if *deg != d {
            continue;
        }
        // the tuple that is the single generator j
        let col = tuples
            .iter()
            .position(|e| e.iter().enumerate().all(|(i, &x)| x == u32::from(i == j)))
            .expect("single generator tuple present");
        let Some(row) = piv.iter().position(|&pc| pc == col) else {
            return Err(PolyError::AmbiguousExpression(d));
        };
        // a free column with a nonzero entry in this row makes the coefficient ambiguous
        let ambiguous = (0..k).any(|c| !piv.contains(&c) && !data[row * w + c].is_zero());
        if ambiguous {
            return Err(PolyError::AmbiguousExpression(d));
        }
        out[j] = data[row * w + k];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(p: u32) -> Field {
        Field::new(p, 1).unwrap()
    }

    fn x(f: &Field, i: usize) -> Poly {
        Poly::var(f, 3, i)
    }

    #[test]
    fn act_identity_and_examples() {
        let f2 = gf(2);
        let sigma = Matrix::elementary(&f2, 3, 0, 2, f2.one());
        let x1sq = x(&f2, 0).pow(2);
        assert_eq!(act(&Matrix::identity(&f2, 3), &x1sq).unwrap(), x1sq);
        assert_eq!(act(&sigma, &x1sq).unwrap(), x1sq.add(&x(&f2, 2).pow(2)));
        let f3 = gf(3);
        let sigma = Matrix::elementary(&f3, 3, 0, 2, f3.one());
        let x1 = x(&f3, 0);
        let x3 = x(&f3, 2);
        let expect = x1.pow(2).add(&x1.mul(&x3).scale(f3.from_int(2))).add(&x3.pow(2));
        assert_eq!(act(&sigma, &x1.pow(2)).unwrap(), expect);
        let bad = Matrix::identity(&f3, 2);
        assert!(act(&bad, &x1).is_err());
    }

    #[test]
    fn composition_convention() {
        let f = gf(3);
        let g = Matrix::from_ints(&f, &[&[1, 2, 0], &[0, 1, 1], &[1, 0, 1]]);
        let h = Matrix::from_ints(&f, &[&[2, 0, 1], &[1, 1, 0], &[0, 0, 1]]);
        let p = x(&f, 0).mul(&x(&f, 1)).add(&x(&f, 2).pow(3));
        let lhs = act(&g, &act(&h, &p).unwrap()).unwrap();
        assert_eq!(lhs, act(&compose(&g, &h), &p).unwrap());
        assert_eq!(compose(&g, &h), h.mul(&g));
    }

    #[test]
    fn pow_and_frobenius_agree_with_repeated_multiplication() {
        let f = Field::new(3, 2).unwrap();
        let a = f.elem(4);
        let p = Poly::linear_form(&f, &[f.one(), a, f.zero()]).add(&Poly::var(&f, 3, 2).pow(2));
        let mut naive = Poly::one(&f, 3);
        for k in 0..11u32 {
            assert_eq!(p.pow(k), naive, "power {k}");
            naive = naive.mul(&p);
        }
    }

    #[test]
    fn exact_division() {
        let f = gf(5);
        let a = x(&f, 0).add(&x(&f, 1).scale(f.from_int(2)));
        let b = x(&f, 2).pow(3).sub(&x(&f, 0).mul(&x(&f, 1)).mul(&x(&f, 2)));
        let prod = a.mul(&b);
        assert_eq!(prod.div_exact(&a).unwrap(), b);
        assert!(prod.add(&Poly::one(&f, 3)).div_exact(&a).is_none());
    }

    #[test]
    fn slice_dimensions() {
        for d in 0..10u32 {
            let s = DegreeSlice::new(3, d);
            assert_eq!(s.dim() as u32, (d + 1) * (d + 2) / 2);
        }
        assert_eq!(DegreeSlice::new(3, 24).dim(), 325);
    }

    #[test]
    fn tower_matches_act() {
        let f = Field::new(2, 2).unwrap();
        let g = Matrix::from_rows(
            &f,
            &[
                vec![f.one(), f.elem(2), f.zero()],
                vec![f.zero(), f.elem(3), f.one()],
                vec![f.one(), f.zero(), f.elem(2)],
            ],
        );
        let mut tower = ActionTower::new(&f, 3, std::slice::from_ref(&g));
        for d in 0..6u32 {
            let rho = tower.matrix(0, d);
            let slice = tower.slice(d).clone();
            for (r, &m) in slice.monos.iter().enumerate() {
                let mp = Poly { nvars: 3, terms: vec![(m, f.one())], field: f.clone() };
                let img = act(&g, &mp).unwrap();
                assert_eq!(slice.to_vector(&img), rho.row_vec(r));
            }
        }
    }

    #[test]
    fn invariant_space_examples() {
        let f = gf(2);
        assert_eq!(invariant_space(&f, 3, &[], 2, 24).unwrap().0, 6);
        let sigma = Matrix::elementary(&f, 3, 0, 2, f.one());
        let (d1, _) = invariant_space(&f, 3, std::slice::from_ref(&sigma), 1, 24).unwrap();
        assert_eq!(d1, 2);
        let (d2, basis) = invariant_space(&f, 3, std::slice::from_ref(&sigma), 2, 24).unwrap();
        assert_eq!(d2, 4);
        let target = x(&f, 0).pow(2).add(&x(&f, 0).mul(&x(&f, 2)));
        let mut span = basis.clone();
        span.push(target);
        let s = DegreeSlice::new(3, 2);
        let rows: Vec<Vec<FieldElem>> = span.iter().map(|p| s.to_vector(p)).collect();
        assert_eq!(Matrix::from_rows(&f, &rows).rank(), 4);
        assert!(matches!(invariant_space(&f, 3, &[sigma], 30, 24), Err(PolyError::BoundExceeded { .. })));
    }

    #[test]
    fn redundant_generators_do_not_change_invariants() {
        let f = gf(3);
        let a = Matrix::elementary(&f, 3, 0, 1, f.one());
        let b = Matrix::elementary(&f, 3, 1, 2, f.one());
        for d in 0..7u32 {
            let (x1, _) = invariant_space(&f, 3, &[a.clone(), b.clone()], d, 24).unwrap();
            let (x2, _) =
                invariant_space(&f, 3, &[a.clone(), b.clone(), a.mul(&b), b.mul(&a)], d, 24).unwrap();
            assert_eq!(x1, x2);
        }
    }

    #[test]
    fn subalgebra_examples() {
        let f = gf(2);
        let vars: Vec<Poly> = (0..3).map(|i| x(&f, i)).collect();
        for d in 0..5u32 {
            assert_eq!(subalgebra_degree_basis(&vars, d).dim, DegreeSlice::new(3, d).dim());
        }
        let z = x(&f, 0).pow(2).add(&x(&f, 0).mul(&x(&f, 2)));
        let gens = vec![x(&f, 1), x(&f, 2), z.clone()];
        assert_eq!(subalgebra_degree_basis(&gens, 2).dim, 4);
        let dup = vec![x(&f, 1), x(&f, 2), z.clone(), z];
        assert_eq!(subalgebra_degree_basis(&dup, 2).dim, 4);
    }

    #[test]
    fn linear_part_examples() {
        let f = gf(5);
        let g1 = x(&f, 0).pow(2).add(&x(&f, 1).mul(&x(&f, 2)).scale(f.from_int(3)));
        let g2 = x(&f, 1);
        let g3 = x(&f, 2);
        let gens = vec![g1.clone(), g2.clone(), g3.clone()];
        assert_eq!(express_linear_part(&g1, &gens).unwrap(), vec![f.one(), f.zero(), f.zero()]);
        let pure = g2.mul(&g3);
        assert_eq!(express_linear_part(&pure, &gens).unwrap(), vec![f.zero(); 3]);
        let mixed = g1.scale(f.from_int(2)).add(&g2.mul(&g3));
        assert_eq!(express_linear_part(&mixed, &gens).unwrap()[0], f.from_int(2));
        let outside = x(&f, 0).mul(&x(&f, 1));
        assert_eq!(express_linear_part(&outside, &gens).unwrap_err(), PolyError::NotInSubalgebra);
        // dependent generators: g1 and g1 + g2 g3 share a linear part direction
        let dep = vec![g1.clone(), g1.add(&g2.mul(&g3)), g2, g3];
        assert_eq!(express_linear_part(&g1, &dep).unwrap_err(), PolyError::AmbiguousExpression(2));
    }
}
