//! Enumerated finite matrix groups and their structural subgroups.

use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::gf::{Field, FieldElem};
use crate::linalg::{Matrix, Subspace};

/// Default bound on the number of enumerated elements.
pub const DEFAULT_CAP: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("closure exceeded the cap after {0} elements")]
    CapExceeded(usize),
    #[error("generator {0} is singular")]
    Singular(usize),
    #[error("generator {index} is {rows}x{cols}, expected {dim}x{dim}")]
    DimMismatch { index: usize, rows: usize, cols: usize, dim: usize },
    #[error("subgroup is not normal")]
    NotNormal,
    #[error("subspace is not stable under the group")]
    NotStable,
    #[error("subgroup is not an elementary abelian group of the required shape")]
    NotElementary,
}

/// A finite matrix group with its full element list.
#[derive(Clone)]
pub struct MatrixGroup {
    field: Field,
    dim: usize,
    generators: Vec<Matrix>,
    elements: Vec<Matrix>,
    index: HashMap<Matrix, usize>,
}

impl std::fmt::Debug for MatrixGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MatrixGroup(order {}, gens {:?})", self.order(), self.generators)
    }
}

/// A subgroup together with its normality flag relative to the parent it was cut from.
#[derive(Clone, Debug)]
pub struct SubgroupHandle {
    pub group: MatrixGroup,
    pub is_normal: bool,
}

impl SubgroupHandle {
    pub fn order(&self) -> usize {
        self.group.order()
    }
}

/// The transvection subgroup T(G) and the pseudo-reflection subgroup W(G).
#[derive(Clone, Debug)]
pub struct ReflectionSubgroups {
    pub t: SubgroupHandle,
    pub w: SubgroupHandle,
    pub t_equals_w: bool,
}

/// Breadth-first closure of `generators`, failing once more than `cap` elements appear.
pub fn closure(
    field: &Field,
    dim: usize,
    generators: &[Matrix],
    cap: usize,
) -> Result<MatrixGroup, GroupError> {
    for (i, g) in generators.iter().enumerate() {
        if g.rows() != dim || g.cols() != dim {
            return Err(GroupError::DimMismatch { index: i, rows: g.rows(), cols: g.cols(), dim });
        }
        if g.det().map(|d| d.is_zero()).unwrap_or(true) {
            return Err(GroupError::Singular(i));
        }
    }
    let id = Matrix::identity(field, dim);
    let mut elements = vec![id.clone()];
    let mut index = HashMap::new();
    index.insert(id, 0usize);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for g in generators {
            let y = elements[i].mul(g);
            if !index.contains_key(&y) {
                if elements.len() >= cap {
                    return Err(GroupError::CapExceeded(elements.len()));
                }
                index.insert(y.clone(), elements.len());
                queue.push_back(elements.len());
                elements.push(y);
            }
        }
    }
    Ok(MatrixGroup { field: field.clone(), dim, generators: generators.to_vec(), elements, index })
}

/// True iff `g - I` has rank one and squares to zero.
pub fn is_transvection(g: &Matrix) -> bool {
    let d = g.minus_identity();
    d.rank() == 1 && d.mul(&d).is_zero()
}

/// True iff `g - I` has rank one.
pub fn is_pseudo_reflection(g: &Matrix) -> bool {
    g.minus_identity().rank() == 1
}

impl MatrixGroup {
    /// Assemble a group from an already closed element list (first element must be I).
    fn from_parts(field: &Field, dim: usize, generators: Vec<Matrix>, elements: Vec<Matrix>) -> Self {
        let index = elements.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        MatrixGroup { field: field.clone(), dim, generators, elements, index }
    }

    pub fn trivial(field: &Field, dim: usize) -> Self {
        Self::from_parts(field, dim, vec![], vec![Matrix::identity(field, dim)])
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> &[Matrix] {
        &self.generators
    }

    pub fn elements(&self) -> &[Matrix] {
        &self.elements
    }

    pub fn contains(&self, g: &Matrix) -> bool {
        self.index.contains_key(g)
    }

    pub fn index_of(&self, g: &Matrix) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }

    /// Every generator has determinant one.
    pub fn is_special(&self) -> bool {
        self.generators.iter().all(|g| g.det().map(|d| d == self.field.one()).unwrap_or(false))
    }

    /// All elements commute pairwise.
    pub fn is_abelian(&self) -> bool {
        let gens = if self.generators.is_empty() { &self.elements } else { &self.generators };
        gens.iter().all(|a| gens.iter().all(|b| a.mul(b) == b.mul(a)))
    }

    /// Subgroup generated by a subset of this group's elements; the generating list is
    /// thinned greedily so that each kept element enlarges the subgroup.
    pub fn subgroup_generated_by(&self, candidates: &[Matrix]) -> MatrixGroup {
        let mut gens: Vec<Matrix> = Vec::new();
        let mut current = MatrixGroup::trivial(&self.field, self.dim);
        for c in candidates {
            if !current.contains(c) {
                gens.push(c.clone());
                current = current.extend_with(c);
            }
        }
        current.generators = gens;
        current
    }

    /// Closure of this group together with one more element (subgroups of a finite group
    /// never exceed the parent, so no cap is needed).
    fn extend_with(&self, g: &Matrix) -> MatrixGroup {
        let mut elements = self.elements.clone();
        let mut index = self.index.clone();
        let mut gens = self.generators.clone();
        gens.push(g.clone());
        let mut queue: VecDeque<usize> = (0..elements.len()).collect();
        while let Some(i) = queue.pop_front() {
            for h in &gens {
                let y = elements[i].mul(h);
                if !index.contains_key(&y) {
                    index.insert(y.clone(), elements.len());
                    queue.push_back(elements.len());
                    elements.push(y);
                }
            }
        }
        MatrixGroup { field: self.field.clone(), dim: self.dim, generators: gens, elements, index }
    }

    /// Subgroup consisting of the listed elements (must already be closed).
    fn subset_group(&self, members: Vec<Matrix>) -> MatrixGroup {
        let gens = MatrixGroup::from_parts(&self.field, self.dim, vec![], members.clone()).thin_generators();
        MatrixGroup::from_parts(&self.field, self.dim, gens, members)
    }

    /// Greedy generating set drawn from the element list in order.
    fn thin_generators(&self) -> Vec<Matrix> {
        self.subgroup_generated_by(&self.elements[1..]).generators
    }

    /// Whether `sub` (a subgroup of self) is normalized by every generator.
    pub fn normalizes(&self, sub: &MatrixGroup) -> bool {
        let gens = if self.generators.is_empty() { &self.elements } else { &self.generators };
        let sub_gens = if sub.generators.is_empty() { &sub.elements } else { &sub.generators };
        gens.iter().all(|g| {
            let gi = g.inverse().unwrap();
            sub_gens.iter().all(|n| sub.contains(&gi.mul(n).mul(g)))
        })
    }

    /// T(G) and W(G), each closed from the scanned elements.
    pub fn reflection_subgroups(&self) -> ReflectionSubgroups {
        let transvections: Vec<Matrix> =
            self.elements.iter().filter(|g| is_transvection(g)).cloned().collect();
        let pseudo: Vec<Matrix> = self.elements.iter().filter(|g| is_pseudo_reflection(g)).cloned().collect();
        let t = self.subgroup_generated_by(&transvections);
        let w = self.subgroup_generated_by(&pseudo);
        let t_equals_w = t.order() == w.order();
        let t_normal = self.normalizes(&t);
        let w_normal = self.normalizes(&w);
        ReflectionSubgroups {
            t: SubgroupHandle { group: t, is_normal: t_normal },
            w: SubgroupHandle { group: w, is_normal: w_normal },
            t_equals_w,
        }
    }

    /// Elements acting trivially on the stable subspace `w`.
    pub fn fix_subgroup(&self, w: &Subspace) -> Result<SubgroupHandle, GroupError> {
        let gens = if self.generators.is_empty() { &self.elements } else { &self.generators };
        if !gens.iter().all(|g| w.is_stable(g)) {
            return Err(GroupError::NotStable);
        }
        let basis = w.basis_vectors();
        let members: Vec<Matrix> =
            self.elements.iter().filter(|g| basis.iter().all(|b| g.vec_mul(b) == *b)).cloned().collect();
        Ok(SubgroupHandle { group: self.subset_group(members), is_normal: true })
    }

    /// One representative per coset of the normal subgroup `n`: the earliest element in
    /// enumeration order.
    pub fn coset_reps(&self, n: &MatrixGroup) -> Result<Vec<Matrix>, GroupError> {
        if !self.normalizes(n) {
            return Err(GroupError::NotNormal);
        }
        let mut covered: HashSet<usize> = HashSet::new();
        let mut reps = Vec::new();
        for (i, g) in self.elements.iter().enumerate() {
            if covered.contains(&i) {
                continue;
            }
            reps.push(g.clone());
            for h in n.elements() {
                if let Some(j) = self.index_of(&g.mul(h)) {
                    covered.insert(j);
                }
            }
        }
        Ok(reps)
    }

    /// Order of the coset `g N` in the quotient by the normal subgroup `n`.
    pub fn coset_order(&self, g: &Matrix, n: &MatrixGroup) -> u64 {
        let mut x = g.clone();
        let mut k = 1;
        while !n.contains(&x) {
            x = x.mul(g);
            k += 1;
        }
        k
    }

    /// The contragredient group: `g` maps to `(g^{-1})^T`, element order preserved.
    pub fn dual_group(&self) -> MatrixGroup {
        let dual = |g: &Matrix| g.inverse().expect("group elements are invertible").transpose();
        MatrixGroup::from_parts(
            &self.field,
            self.dim,
            self.generators.iter().map(dual).collect(),
            self.elements.iter().map(dual).collect(),
        )
    }

    /// Conjugate every element: `g -> P g P^{-1}` (the matrix of g in the basis given by the
    /// rows of `p`).
    pub fn conjugate(&self, p: &Matrix) -> MatrixGroup {
        let pinv = p.inverse().expect("change of basis must be invertible");
        let conj = |g: &Matrix| p.mul(g).mul(&pinv);
        MatrixGroup::from_parts(
            &self.field,
            self.dim,
            self.generators.iter().map(conj).collect(),
            self.elements.iter().map(conj).collect(),
        )
    }

    /// Image of the group acting on a stable subspace, in the subspace's canonical basis.
    pub fn restriction(&self, w: &Subspace) -> Result<MatrixGroup, GroupError> {
        let gens: Option<Vec<Matrix>> = self.generators.iter().map(|g| w.restrict(g)).collect();
        let gens = gens.ok_or(GroupError::NotStable)?;
        closure(&self.field, w.dim(), &gens, usize::MAX)
    }

    /// Image of the group acting on the quotient by a stable subspace, in the basis given
    /// by `complement` (vectors whose classes form a basis of V/W).
    pub fn quotient_action(
        &self,
        w: &Subspace,
        complement: &[Vec<FieldElem>],
    ) -> Result<MatrixGroup, GroupError> {
        let f = &self.field;
        let mut rows = complement.to_vec();
        rows.extend(w.basis_vectors());
        let basis = Matrix::from_rows(f, &rows);
        let binv = basis.inverse().ok_or(GroupError::NotStable)?;
        let k = complement.len();
        let quot = |g: &Matrix| -> Option<Matrix> {
            if !w.is_stable(g) {
                return None;
            }
            let a = basis.mul(g).mul(&binv);
            Some(a.submatrix(0, k, 0, k))
        };
        let gens: Option<Vec<Matrix>> = self.generators.iter().map(quot).collect();
        closure(f, k, &gens.ok_or(GroupError::NotStable)?, usize::MAX)
    }

    /// Minimal generating set of an elementary abelian group on which `g -> g - I` is
    /// additive: echelonize the displacement matrices over GF(p) and keep the elements
    /// whose displacement enlarges the span.
    pub fn elementary_generators(&self) -> Result<Vec<Matrix>, GroupError> {
        let f = &self.field;
        let id = Matrix::identity(f, self.dim);
        let disp: Vec<Matrix> = self.elements.iter().map(|g| g.sub(&id)).collect();
        for a in &disp {
            for b in &disp {
                if !a.mul(b).is_zero() {
                    return Err(GroupError::NotElementary);
                }
            }
        }
        let flatten = |m: &Matrix| -> Vec<FieldElem> {
            m.data().iter().flat_map(|&x| f.coeffs(x)).map(FieldElem).collect()
        };
        let prime = Field::new(f.p(), 1).expect("prime field");
        let mut chosen = Vec::new();
        let mut span: Vec<Vec<FieldElem>> = Vec::new();
        for (g, d) in self.elements.iter().zip(&disp) {
            if d.is_zero() {
                continue;
            }
            let v = flatten(d);
            let mut trial = span.clone();
            trial.push(v);
            if Matrix::from_rows(&prime, &trial).rank() == trial.len() {
                span = trial;
                chosen.push(g.clone());
            }
        }
        let order = (f.p() as usize).pow(chosen.len() as u32);
        if order != self.order() {
            return Err(GroupError::NotElementary);
        }
        Ok(chosen)
    }
}

/// `Some(t)` when `n = p^t`.
pub fn p_exponent(n: usize, p: u32) -> Option<u32> {
    let mut t = 0;
    let mut m = n;
    while m > 1 {
        if !m.is_multiple_of(p as usize) {
            return None;
        }
        m /= p as usize;
        t += 1;
    }
    Some(t)
}
