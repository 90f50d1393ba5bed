//! Submodule structure of V = F^3 under a matrix group and the case split by
//! stable lines and planes.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::gf::{Field, FieldElem};
use crate::group::MatrixGroup;
use crate::linalg::{Matrix, Subspace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModError {
    #[error("generator {0} does not have determinant 1")]
    NotSL(usize),
    #[error("classification needs a 3-dimensional module, got dimension {0}")]
    WrongDimension(usize),
    #[error("subspace is not stable under the group")]
    NotStable,
    #[error("no row of the case table matches: {0}")]
    ClassificationAnomaly(String),
}

/// The case label of a module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Chapter {
    A,
    B,
    D,
    E,
    F,
    G,
    Irreducible,
}

impl fmt::Display for Chapter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Chapter::A => "A",
            Chapter::B => "B",
            Chapter::D => "D",
            Chapter::E => "E",
            Chapter::F => "F",
            Chapter::G => "G",
            Chapter::Irreducible => "IRREDUCIBLE",
        };
        f.write_str(s)
    }
}

/// Outcome of the case split together with its witnesses.
#[derive(Clone, Debug)]
pub struct ModuleClassification {
    pub chapter: Chapter,
    pub lines: Vec<Subspace>,
    pub planes: Vec<Subspace>,
    pub decomposition: Option<(Subspace, Subspace)>,
    /// Rows are the adapted basis vectors; the matrix of g in this basis is `P g P^{-1}`.
    pub adapted_basis: Matrix,
}

impl ModuleClassification {
    /// Matrix of `g` in the adapted basis.
    pub fn adapted(&self, g: &Matrix) -> Matrix {
        let p = &self.adapted_basis;
        p.mul(g).mul(&p.inverse().expect("adapted basis is invertible"))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "chapter": self.chapter.to_string(),
            "lines": self.lines.iter().map(|l| l.to_json()).collect::<Vec<_>>(),
            "planes": self.planes.iter().map(|l| l.to_json()).collect::<Vec<_>>(),
            "decomposition": self.decomposition.as_ref().map(|(l, w)| serde_json::json!({
                "line": l.to_json(), "plane": w.to_json()
            })),
            "adapted_basis": self.adapted_basis.to_json(),
        })
    }
}

fn generators_or_identity(g: &MatrixGroup) -> Vec<Matrix> {
    if g.generators().is_empty() {
        vec![Matrix::identity(g.field(), g.dim())]
    } else {
        g.generators().to_vec()
    }
}

/// All normalized nonzero vectors (first nonzero coordinate 1) of a subspace, as lines.
fn lines_in(space: &Subspace) -> Vec<Subspace> {
    let f = space.field();
    let k = space.dim();
    let q = f.q() as usize;
    let basis = space.basis_vectors();
    let mut out = Vec::new();
    // coordinate vectors whose first nonzero entry is 1
    for lead in 0..k {
        let tail = k - lead - 1;
        let count = q.pow(tail as u32);
        for idx in 0..count {
            let mut c = vec![f.zero(); k];
            c[lead] = f.one();
            let mut x = idx;
            for j in 0..tail {
                c[lead + 1 + j] = f.elem((x % q) as u32);
                x /= q;
            }
            let mut v = vec![f.zero(); space.ambient_dim()];
            for (ci, b) in c.iter().zip(&basis) {
                crate::linalg::axpy(f, &mut v, *ci, b);
            }
            out.push(Subspace::from_vectors(f, space.ambient_dim(), &[v]));
        }
    }
    out
}

/// All stable lines, found by intersecting eigenspaces of the generators.
fn stable_lines(g: &MatrixGroup) -> Vec<Subspace> {
    let f = g.field();
    let n = g.dim();
    let mut candidates = vec![Subspace::full(f, n)];
    for gen in generators_or_identity(g) {
        let mut next = Vec::new();
        for lam in f.elements().filter(|x| !x.is_zero()) {
            let shifted = gen.sub(&Matrix::identity(f, n).scale(lam));
            if !shifted.det().unwrap().is_zero() {
                continue;
            }
            let eig = shifted.left_kernel();
            for c in &candidates {
                let e = c.intersection(&eig);
                if e.dim() > 0 {
                    next.push(e);
                }
            }
        }
        candidates = next;
    }
    let mut lines: Vec<Subspace> = candidates.iter().flat_map(lines_in).collect();
    lines.sort_by(|a, b| a.canonical_cmp(b));
    lines.dedup();
    lines
}

/// All stable subspaces of dimension `d` (1 or 2) of a 3-dimensional module; planes are
/// the annihilators of stable lines of the dual group.
pub fn stable_subspaces(g: &MatrixGroup, d: usize) -> Vec<Subspace> {
    assert!(d == 1 || d == 2, "only lines and planes are enumerated");
    if d == 1 {
        return stable_lines(g);
    }
    let dual = g.dual_group();
    let mut planes: Vec<Subspace> = stable_lines(&dual).iter().map(|l| l.perp()).collect();
    planes.sort_by(|a, b| a.canonical_cmp(b));
    planes
}

/// First canonical basis vector of `space` outside `avoid`.
fn vector_outside(space: &Subspace, avoid: &Subspace) -> Vec<FieldElem> {
    space
        .basis_vectors()
        .into_iter()
        .find(|v| !avoid.contains(v))
        .expect("space is not contained in the avoided subspace")
}

/// Case split of a 3-dimensional module over a group inside SL(3).
pub fn classify_case(g: &MatrixGroup) -> Result<ModuleClassification, ModError> {
    if g.dim() != 3 {
        return Err(ModError::WrongDimension(g.dim()));
    }
    let f = g.field();
    for (i, m) in g.generators().iter().enumerate() {
        if m.det().unwrap() != f.one() {
            return Err(ModError::NotSL(i));
        }
    }
    let lines = stable_subspaces(g, 1);
    let planes = stable_subspaces(g, 2);
    let basis = |rows: Vec<Vec<FieldElem>>| Matrix::from_rows(f, &rows);

    if lines.is_empty() && planes.is_empty() {
        return Ok(ModuleClassification {
            chapter: Chapter::Irreducible,
            lines,
            planes,
            decomposition: None,
            adapted_basis: Matrix::identity(f, 3),
        });
    }
    for l in &lines {
        for w in &planes {
            if !w.contains_subspace(l) {
                let mut rows = l.basis_vectors();
                rows.extend(w.basis_vectors());
                return Ok(ModuleClassification {
                    chapter: Chapter::A,
                    decomposition: Some((l.clone(), w.clone())),
                    adapted_basis: basis(rows),
                    lines,
                    planes,
                });
            }
        }
    }
    let (nl, np) = (lines.len(), planes.len());
    let (chapter, rows) = if nl >= 2 && np >= 2 {
        return Err(ModError::ClassificationAnomaly(format!(
            "indecomposable with {nl} stable lines and {np} stable planes"
        )));
    } else if nl >= 2 {
        // all stable lines lie in the plane they span; basis {v, w1, w2}
        let w = lines[0].sum(&lines[1]);
        let v = w.standard_complement().remove(0);
        (Chapter::G, vec![v, lines[0].basis_vectors().remove(0), lines[1].basis_vectors().remove(0)])
    } else if np >= 2 {
        // basis {w2, w1, v} with span{w2, v} and span{w1, v} stable
        let l0 = planes[0].intersection(&planes[1]);
        if l0.dim() != 1 {
            return Err(ModError::ClassificationAnomaly("two stable planes meet in a non-line".into()));
        }
        let w2 = vector_outside(&planes[0], &l0);
        let w1 = vector_outside(&planes[1], &l0);
        (Chapter::B, vec![w2, w1, l0.basis_vectors().remove(0)])
    } else if np == 1 && nl == 0 {
        // basis {v, w2, w1} with W = span{w2, w1}
        let w = &planes[0];
        let v = w.standard_complement().remove(0);
        let mut rows = vec![v];
        rows.extend(w.basis_vectors());
        (Chapter::D, rows)
    } else if nl == 1 && np == 0 {
        // basis {w1, w2, v0}
        let mut rows = lines[0].standard_complement();
        rows.extend(lines[0].basis_vectors());
        (Chapter::E, rows)
    } else if nl == 1 && np == 1 {
        // basis {w2, w1, v0}: upper triangular action
        let w1 = vector_outside(&planes[0], &lines[0]);
        let w2 = planes[0].standard_complement().remove(0);
        (Chapter::F, vec![w2, w1, lines[0].basis_vectors().remove(0)])
    } else {
        return Err(ModError::ClassificationAnomaly(format!(
            "indecomposable with {nl} stable lines and {np} stable planes"
        )));
    };
    Ok(ModuleClassification { chapter, lines, planes, decomposition: None, adapted_basis: basis(rows) })
}

/// The annihilator of a stable subspace inside V* with the dual action restricted to it.
#[derive(Clone, Debug)]
pub struct PerpModule {
    pub perp: Subspace,
    /// Matrix of the dual action on `perp` (canonical basis), one per group element.
    pub action: Vec<Matrix>,
}

/// `W^perp` together with the restricted contragredient action.
pub fn perp_module(g: &MatrixGroup, w: &Subspace) -> Result<PerpModule, ModError> {
    if !g.elements().iter().all(|m| w.is_stable(m)) {
        return Err(ModError::NotStable);
    }
    let perp = w.perp();
    let dual = g.dual_group();
    let action = dual
        .elements()
        .iter()
        .map(|d| perp.restrict(d).expect("annihilator of a stable subspace is stable"))
        .collect();
    Ok(PerpModule { perp, action })
}

/// Matrix of `g` on V/W in the basis of classes of `complement`.
pub fn quotient_matrix(g: &Matrix, w: &Subspace, complement: &[Vec<FieldElem>]) -> Matrix {
    let f = g.field();
    let mut rows = complement.to_vec();
    rows.extend(w.basis_vectors());
    let b = Matrix::from_rows(f, &rows);
    let k = complement.len();
    b.mul(g).mul(&b.inverse().unwrap()).submatrix(0, k, 0, k)
}

/// The contragredient of a matrix under the right action: `(m^{-1})^T`.
pub fn dual_matrix(m: &Matrix) -> Matrix {
    m.inverse().expect("invertible").transpose()
}

/// Pairing matrix `B_ij = u_i . f_j` between vectors and functionals.
pub fn pairing(f: &Field, us: &[Vec<FieldElem>], fs: &[Vec<FieldElem>]) -> Matrix {
    let rows: Vec<Vec<FieldElem>> = us
        .iter()
        .map(|u| {
            fs.iter()
                .map(|c| u.iter().zip(c).fold(f.zero(), |acc, (&a, &b)| f.add(acc, f.mul(a, b))))
                .collect()
        })
        .collect();
    Matrix::from_rows(f, &rows)
}

/// Checks `V/W ~ (W^perp)^*`: with `B` the pairing between complement vectors and the
/// annihilator basis, every element satisfies `Q(g) = B dual(R(g)) B^{-1}`.
pub fn check_quotient_double_dual(g: &MatrixGroup, w: &Subspace) -> Result<bool, ModError> {
    let pm = perp_module(g, w)?;
    if pm.perp.dim() == 0 {
        return Ok(true);
    }
    let f = g.field();
    let comp = w.standard_complement();
    let b = pairing(f, &comp, &pm.perp.basis_vectors());
    let binv = b.inverse().ok_or(ModError::NotStable)?;
    Ok(g.elements()
        .iter()
        .zip(&pm.action)
        .all(|(m, r)| quotient_matrix(m, w, &comp) == b.mul(&dual_matrix(r)).mul(&binv)))
}

/// Checks `V*/W^perp ~ W^*`: with `C` the pairing between a basis of W and complement
/// functionals, the quotient dual action equals `C^T dual(g|W) (C^T)^{-1}`.
pub fn check_dual_quotient_restriction(g: &MatrixGroup, w: &Subspace) -> Result<bool, ModError> {
    if !g.elements().iter().all(|m| w.is_stable(m)) {
        return Err(ModError::NotStable);
    }
    if w.dim() == 0 {
        return Ok(true);
    }
    let f = g.field();
    let perp = w.perp();
    let fcomp = perp.standard_complement();
    let c = pairing(f, &w.basis_vectors(), &fcomp);
    let ct = c.transpose();
    let ctinv = ct.inverse().ok_or(ModError::NotStable)?;
    let dual = g.dual_group();
    Ok(g.elements().iter().zip(dual.elements()).all(|(m, d)| {
        let a = w.restrict(m).unwrap();
        quotient_matrix(d, &perp, &fcomp) == ct.mul(&dual_matrix(&a)).mul(&ctinv)
    }))
}

/// The two annihilator sets: `{g : (g - I)V in W}` and `{g : g acts trivially on W^perp}`,
/// returned as index lists into the element list.
pub fn annihilator_sets(g: &MatrixGroup, w: &Subspace) -> (Vec<usize>, Vec<usize>) {
    let perp = w.perp();
    let dual = g.dual_group();
    let first = g
        .elements()
        .iter()
        .enumerate()
        .filter(|(_, m)| {
            let d = m.minus_identity();
            (0..d.rows()).all(|i| w.contains(d.row(i)))
        })
        .map(|(i, _)| i)
        .collect();
    let second = dual
        .elements()
        .iter()
        .enumerate()
        .filter(|(_, d)| perp.basis_vectors().iter().all(|v| d.vec_mul(v) == *v))
        .map(|(i, _)| i)
        .collect();
    (first, second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{closure, DEFAULT_CAP};

    fn gf(p: u32) -> Field {
        Field::new(p, 1).unwrap()
    }

    fn u3(f: &Field) -> MatrixGroup {
        closure(
            f,
            3,
            &[
                Matrix::elementary(f, 3, 0, 1, f.one()),
                Matrix::elementary(f, 3, 0, 2, f.one()),
                Matrix::elementary(f, 3, 1, 2, f.one()),
            ],
            DEFAULT_CAP,
        )
        .unwrap()
    }

    #[test]
    fn trivial_group_has_all_lines() {
        for p in [2u32, 3] {
            let f = gf(p);
            let g = MatrixGroup::trivial(&f, 3);
            let q = p as usize;
            assert_eq!(stable_subspaces(&g, 1).len(), q * q + q + 1);
            assert_eq!(stable_subspaces(&g, 2).len(), q * q + q + 1);
        }
    }

    #[test]
    fn unitriangular_has_one_line_one_plane() {
        let f = gf(2);
        let g = u3(&f);
        // exhaustive oracle: scan all 7 lines and 7 planes directly
        let all: Vec<Vec<FieldElem>> =
            (1u32..8).map(|b| (0..3).map(|k| f.elem((b >> k) & 1)).collect()).collect();
        let lines: Vec<_> = all
            .iter()
            .filter(|v| {
                g.elements().iter().all(|m| Subspace::from_vectors(&f, 3, &[v.to_vec()]).is_stable(m))
            })
            .collect();
        assert_eq!(lines.len(), 1);
        assert_eq!(stable_subspaces(&g, 1).len(), 1);
        assert_eq!(stable_subspaces(&g, 2).len(), 1);
        let cls = classify_case(&g).unwrap();
        assert_eq!(cls.chapter, Chapter::F);
        // adapted basis makes every element upper triangular
        for m in g.elements() {
            let a = cls.adapted(m);
            assert!(a.get(1, 0).is_zero() && a.get(2, 0).is_zero() && a.get(2, 1).is_zero());
        }
    }

    #[test]
    fn block_sl2_is_chapter_a() {
        let f = gf(2);
        let g = closure(
            &f,
            3,
            &[Matrix::elementary(&f, 3, 1, 2, f.one()), Matrix::elementary(&f, 3, 2, 1, f.one())],
            DEFAULT_CAP,
        )
        .unwrap();
        let cls = classify_case(&g).unwrap();
        assert_eq!(cls.chapter, Chapter::A);
        assert_eq!(cls.lines.len(), 1);
        assert_eq!(cls.planes.len(), 1);
    }

    /// Number of stable lines found by scanning every normalized vector of F_p^3.
    fn scan_lines(f: &Field, g: &MatrixGroup) -> usize {
        let p = f.p();
        let mut count = 0;
        for idx in 1..p * p * p {
            let v: Vec<FieldElem> = (0..3).map(|k| f.elem((idx / p.pow(k)) % p)).collect();
            if v.iter().find(|x| !x.is_zero()) != Some(&f.one()) {
                continue;
            }
            let line = Subspace::from_vectors(f, 3, &[v]);
            if g.generators().iter().all(|m| line.is_stable(m)) {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn single_transvection_is_decomposable() {
        // v -> v + w1 + w2 with w1, w2 fixed: Fw1 and span{v, w1 + w2} are complementary
        // stable subspaces, so the decomposable row of the table applies
        let f = gf(3);
        let g = closure(&f, 3, &[Matrix::from_ints(&f, &[&[1, 1, 1], &[0, 1, 0], &[0, 0, 1]])], DEFAULT_CAP)
            .unwrap();
        let cls = classify_case(&g).unwrap();
        assert_eq!(cls.chapter, Chapter::A);
        assert_eq!(scan_lines(&f, &g), cls.lines.len());
    }

    #[test]
    fn chapter_g_example() {
        // v -> v + w1 and v -> v + w2: the only stable plane is span{w1, w2}
        let f = gf(3);
        let g = closure(
            &f,
            3,
            &[
                Matrix::from_ints(&f, &[&[1, 1, 0], &[0, 1, 0], &[0, 0, 1]]),
                Matrix::from_ints(&f, &[&[1, 0, 1], &[0, 1, 0], &[0, 0, 1]]),
            ],
            DEFAULT_CAP,
        )
        .unwrap();
        let cls = classify_case(&g).unwrap();
        assert_eq!(cls.chapter, Chapter::G);
        assert_eq!(scan_lines(&f, &g), cls.lines.len());
        assert_eq!(cls.lines.len(), 4);
        assert_eq!(cls.planes.len(), 1);
    }

    #[test]
    fn not_sl_rejected() {
        let f = gf(3);
        let g =
            closure(&f, 3, &[Matrix::diagonal(&f, &[f.from_int(2), f.one(), f.one()])], DEFAULT_CAP).unwrap();
        assert_eq!(classify_case(&g).unwrap_err(), ModError::NotSL(0));
    }

    #[test]
    fn perp_examples() {
        let f = gf(2);
        let g = u3(&f);
        let pm = perp_module(&g, &Subspace::zero(&f, 3)).unwrap();
        assert_eq!(pm.perp.dim(), 3);
        let pm = perp_module(&g, &Subspace::full(&f, 3)).unwrap();
        assert_eq!(pm.perp.dim(), 0);
        let plane = stable_subspaces(&g, 2).remove(0);
        let pm = perp_module(&g, &plane).unwrap();
        let dual_lines = stable_subspaces(&g.dual_group(), 1);
        assert_eq!(dual_lines, vec![pm.perp.clone()]);
        assert!(check_quotient_double_dual(&g, &plane).unwrap());
        assert!(check_dual_quotient_restriction(&g, &plane).unwrap());
        let (a, b) = annihilator_sets(&g, &plane);
        assert_eq!(a, b);
    }
}
