//! Group fixtures and independent reference computations shared by the test targets.
#![allow(dead_code)]

use modinv::gf::Field;
use modinv::group::{closure, MatrixGroup};
use modinv::linalg::Matrix;
use modinv::report::GroupInput;

pub fn gf(p: u32, s: u32) -> Field {
    Field::new(p, s).unwrap()
}

pub fn group(f: &Field, gens: &[Matrix]) -> MatrixGroup {
    closure(f, 3, gens, 50_000).unwrap()
}

/// Upper unitriangular matrices over the prime field.
pub fn u3_gens(f: &Field) -> Vec<Matrix> {
    [(0, 1), (0, 2), (1, 2)].iter().map(|&(i, j)| Matrix::elementary(f, 3, i, j, f.one())).collect()
}

/// `1 (+) SL(2, q)` acting on the last two coordinates, `q` a subfield order of `f`.
pub fn block_sl2_gens(f: &Field, q: u32) -> Vec<Matrix> {
    let k = (1..=f.s()).find(|&k| f.p().pow(k) == q).expect("subfield order");
    let mut gens = Vec::new();
    for a in f.elements().filter(|&a| !a.is_zero() && f.in_subfield(a, k)) {
        gens.push(Matrix::elementary(f, 3, 1, 2, a));
        gens.push(Matrix::elementary(f, 3, 2, 1, a));
    }
    gens
}

/// SL(2, p) on the first two coordinates together with both shears into the last one:
/// order p^3 (p^2 - 1), a single stable line, no stable plane.
pub fn line_extension_gens(f: &Field) -> Vec<Matrix> {
    let one = f.one();
    vec![
        Matrix::elementary(f, 3, 0, 1, one),
        Matrix::elementary(f, 3, 1, 0, one),
        Matrix::elementary(f, 3, 0, 2, one),
        Matrix::elementary(f, 3, 1, 2, one),
    ]
}

/// `v -> v + w1`, `v -> v + w2`: fixes the plane of the last two coordinates pointwise,
/// with exactly that plane stable and every line inside it stable.
pub fn plane_fixer_gens(f: &Field) -> Vec<Matrix> {
    vec![Matrix::elementary(f, 3, 0, 1, f.one()), Matrix::elementary(f, 3, 0, 2, f.one())]
}

/// The decomposable GF(4) group generated by a transvection of the plane and the scalar
/// matrix `a I` with `a` of order 3.
pub fn negative_control() -> GroupInput {
    let f = gf(2, 2);
    let a = f.primitive_element();
    GroupInput {
        generators: vec![Matrix::elementary(&f, 3, 1, 2, f.one()), Matrix::diagonal(&f, &[a, a, a])],
        field: f,
    }
}

/// Number of `e` with `sum w_i e_i = d`: the coefficient of `t^d` in `prod 1/(1 - t^{w_i})`.
pub fn weighted_count(weights: &[u32], d: u32) -> usize {
    match weights.split_first() {
        None => usize::from(d == 0),
        Some((&w, rest)) => (0..=d / w).map(|k| weighted_count(rest, d - k * w)).sum(),
    }
}
