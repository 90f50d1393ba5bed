//! Structural identities checked on analyzed groups. Each check returns `None` when it
//! does not apply to the instance.

use std::collections::BTreeMap;

use crate::gorenstein::Mm2Action;
use crate::group::{is_transvection, p_exponent, MatrixGroup};
use crate::invring::{fixw_coefficients, fixw_invariant, InvariantPresentation};
use crate::linalg::{Matrix, Subspace};
use crate::modstruct::{
    annihilator_sets, check_dual_quotient_restriction, check_quotient_double_dual, Chapter,
    ModuleClassification,
};
use crate::polyact::act;

/// Named outcomes; a missing key means the check did not apply.
pub type PropertyTable = BTreeMap<&'static str, bool>;

/// Every transvection of `g` fixes every stable line pointwise.
pub fn transvections_fix_stable_lines(g: &MatrixGroup, cls: &ModuleClassification) -> bool {
    g.elements()
        .iter()
        .filter(|m| is_transvection(m))
        .all(|m| cls.lines.iter().all(|l| l.basis_vectors().iter().all(|v| m.vec_mul(v) == *v)))
}

/// The transvection subgroup is normal in `g`.
pub fn transvection_subgroup_is_normal(g: &MatrixGroup, t: &MatrixGroup) -> bool {
    g.normalizes(t)
}

/// All elements commute and have order dividing p.
pub fn is_elementary_abelian(t: &MatrixGroup) -> bool {
    let p = t.field().p() as u64;
    t.is_abelian() && t.elements().iter().all(|m| m.pow(p).is_identity())
}

/// Basis rows `(complement, plane basis)` for a plane.
fn plane_adapted_basis(w: &Subspace) -> Matrix {
    let mut rows = w.standard_complement();
    rows.extend(w.basis_vectors());
    Matrix::from_rows(w.field(), &rows)
}

/// For a stable plane `w`: conjugating a pointwise fixer with top row `(1, alpha)` by a
/// transvection `s` gives top row `(1, alpha * s|W)`, in the basis (complement, plane).
pub fn fix_conjugation_formula(g: &MatrixGroup, w: &Subspace) -> Option<bool> {
    let fix = g.fix_subgroup(w).ok()?.group;
    let b = plane_adapted_basis(w);
    let binv = b.inverse()?;
    let adapt = |m: &Matrix| b.mul(m).mul(&binv);
    let f = g.field();
    let hs: Vec<Matrix> = fix.elements().iter().map(adapt).filter(|h| h.get(0, 0) == f.one()).collect();
    let ok = g.elements().iter().filter(|s| is_transvection(s)).all(|s| {
        let sa = adapt(s);
        let sinv = sa.inverse().unwrap();
        let sw = sa.submatrix(1, 3, 1, 3);
        hs.iter().all(|h| {
            let c = sinv.mul(h).mul(&sa);
            let img = sw.vec_mul(&[h.get(0, 1), h.get(0, 2)]);
            c.row_vec(0) == [f.one(), img[0], img[1]]
        })
    });
    Some(ok)
}

/// The coefficients of the fixed-plane recursion invariant are invariant under the
/// transvection subgroup acting on the plane.
pub fn fixw_coefficients_invariant(t: &MatrixGroup, w: &Subspace) -> Option<bool> {
    let b = plane_adapted_basis(w);
    let tp = t.conjugate(&b);
    let f = t.field();
    let wp =
        Subspace::from_vectors(f, 3, &[vec![f.zero(), f.one(), f.zero()], vec![f.zero(), f.zero(), f.one()]]);
    let fix = tp.fix_subgroup(&wp).ok()?.group;
    if fix.is_trivial() {
        return None;
    }
    let exp = p_exponent(fix.order(), f.p())?;
    let z = fixw_invariant(&fix, &wp).ok()?;
    let Some(qs) = fixw_coefficients(&z, 0, f.p(), exp) else { return Some(false) };
    Some(tp.generators().iter().all(|g| qs.iter().all(|q| act(g, q).is_ok_and(|img| img == *q))))
}

/// Quotient block determinant times the line character equals det(g) = 1 for every
/// element, in the adapted basis of a module with one stable line.
pub fn quotient_block_determinant(g: &MatrixGroup, cls: &ModuleClassification) -> bool {
    let f = g.field();
    g.elements().iter().all(|m| {
        let a = cls.adapted(m);
        let q = a.submatrix(0, 2, 0, 2).det().unwrap();
        q == f.inv(a.get(2, 2)).unwrap() && f.mul(q, a.get(2, 2)) == a.det().unwrap()
    })
}

/// Determinant on m/m^2 without the first coordinate generator equals det(g|W), for a
/// decomposable module whose presentation keeps the first coordinate as a generator.
pub fn complement_determinant_identity(
    actions: &[Mm2Action],
    cls: &ModuleClassification,
    pres: &InvariantPresentation,
) -> Option<bool> {
    if cls.chapter != Chapter::A {
        return None;
    }
    let mut ok = true;
    for a in actions {
        let block = crate::gorenstein::complement_block_det(a, pres)?;
        let ga = cls.adapted(&a.rep);
        let det_w = ga.submatrix(1, 3, 1, 3).det().unwrap();
        let f = ga.field();
        // equality of the two determinants is equivalent to det = 1 on m/m^2
        ok &= (block == det_w) == (a.det == f.one());
    }
    Some(ok)
}

/// Run every applicable structural check.
pub fn structure_checks(g: &MatrixGroup, t: &MatrixGroup, cls: &ModuleClassification) -> PropertyTable {
    let mut out = PropertyTable::new();
    out.insert("stable_lines_fixed_by_transvections", transvections_fix_stable_lines(g, cls));
    out.insert("transvection_subgroup_normal", transvection_subgroup_is_normal(g, t));
    if cls.chapter == Chapter::B {
        out.insert("chapter_b_elementary_abelian", is_elementary_abelian(t));
    }
    if cls.chapter == Chapter::E {
        out.insert("quotient_block_determinant", quotient_block_determinant(g, cls));
    }
    let mut subspaces: Vec<&Subspace> = cls.lines.iter().collect();
    subspaces.extend(cls.planes.iter());
    let mut dual_ok = true;
    let mut ann_ok = true;
    for w in &subspaces {
        dual_ok &= check_quotient_double_dual(g, w).unwrap_or(false);
        dual_ok &= check_dual_quotient_restriction(g, w).unwrap_or(false);
        let (a, b) = annihilator_sets(g, w);
        ann_ok &= a == b;
    }
    if !subspaces.is_empty() {
        out.insert("dual_module_identities", dual_ok);
        out.insert("annihilator_sets_agree", ann_ok);
    }
    let mut conj = None;
    let mut coeffs = None;
    for w in &cls.planes {
        if let Some(ok) = fix_conjugation_formula(g, w) {
            conj = Some(conj.unwrap_or(true) && ok);
        }
        if let Some(ok) = fixw_coefficients_invariant(t, w) {
            coeffs = Some(coeffs.unwrap_or(true) && ok);
        }
    }
    if let Some(ok) = conj {
        out.insert("fix_conjugation_formula", ok);
    }
    if let Some(ok) = coeffs {
        out.insert("fixw_coefficients_invariant", ok);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Field;
    use crate::group::closure;
    use crate::modstruct::classify_case;

    #[test]
    fn u3_structure() {
        let f = Field::new(2, 1).unwrap();
        let gens: Vec<Matrix> =
            [(0, 1), (0, 2), (1, 2)].iter().map(|&(i, j)| Matrix::elementary(&f, 3, i, j, f.one())).collect();
        let g = closure(&f, 3, &gens, 1000).unwrap();
        let t = g.reflection_subgroups().t.group;
        let cls = classify_case(&g).unwrap();
        let table = structure_checks(&g, &t, &cls);
        assert!(table.values().all(|&ok| ok), "{table:?}");
        assert!(table.contains_key("fix_conjugation_formula"));
        assert!(table.contains_key("fixw_coefficients_invariant"));
    }

    #[test]
    fn chapter_b_is_elementary() {
        // two transvections with the common center w1: every plane through w1 is stable
        let f = Field::new(3, 1).unwrap();
        let gens = [Matrix::elementary(&f, 3, 0, 1, f.one()), Matrix::elementary(&f, 3, 2, 1, f.one())];
        let g = closure(&f, 3, &gens, 100).unwrap();
        let cls = classify_case(&g).unwrap();
        let t = g.reflection_subgroups().t.group;
        assert_eq!(cls.chapter, Chapter::B);
        let table = structure_checks(&g, &t, &cls);
        assert_eq!(table.get("chapter_b_elementary_abelian"), Some(&true));
        assert!(table.values().all(|&ok| ok), "{table:?}");
    }
}
