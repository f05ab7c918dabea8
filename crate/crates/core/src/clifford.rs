//! Clifford gate sets as signed permutations of the Pauli basis.
//!
//! # Overview
//!
//! Conjugation by a Clifford unitary sends every non-identity Pauli string
//! to another non-identity string up to a sign, so an element is stored as a
//! permutation of the `4^n - 1` non-identity basis indices together with one
//! sign per index. Composition and inversion are permutation algebra, and
//! the transfer matrix of an element is the corresponding signed
//! permutation matrix, which is real orthogonal.
//!
//! Groups are materialized explicitly: the one-qubit group (order 24) and
//! the two-qubit group (order 11520) by breadth-first closure over standard
//! generators, and the product gate sets used by simultaneous benchmarking
//! by tensoring one-qubit elements. Each group is built once per process and
//! shared behind an [`Arc`].

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix};
use crate::liouville::{ptm_from_unitary, LiouvilleVector, Ptm};
use crate::pauli::{hilbert_dim, pauli_dim};

/// One element of a Clifford gate set, acting on Pauli indices.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CliffordElement {
    n: usize,
    /// Image of non-identity index `j + 1` is `perm[j] + 1`.
    perm: Vec<u16>,
    /// Sign picked up by non-identity index `j + 1`.
    signs: Vec<i8>,
}

impl CliffordElement {
    /// The identity element on `n` qubits.
    pub fn identity(n: usize) -> Self {
        let len = pauli_dim(n) - 1;
        Self {
            n,
            perm: (0..len as u16).collect(),
            signs: vec![1; len],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// Image `(index, sign)` of a Pauli basis index under conjugation.
    pub fn image(&self, index: usize) -> (usize, i8) {
        if index == 0 {
            (0, 1)
        } else {
            (self.perm[index - 1] as usize + 1, self.signs[index - 1])
        }
    }

    /// Composition `self . other`, applying `other` first.
    pub fn compose(&self, other: &CliffordElement) -> CliffordElement {
        debug_assert_eq!(self.n, other.n);
        let len = self.perm.len();
        let mut perm = vec![0u16; len];
        let mut signs = vec![1i8; len];
        for j in 0..len {
            let mid = other.perm[j] as usize;
            perm[j] = self.perm[mid];
            signs[j] = other.signs[j] * self.signs[mid];
        }
        CliffordElement {
            n: self.n,
            perm,
            signs,
        }
    }

    /// Inverse element.
    pub fn inverse(&self) -> CliffordElement {
        let len = self.perm.len();
        let mut perm = vec![0u16; len];
        let mut signs = vec![1i8; len];
        for j in 0..len {
            let img = self.perm[j] as usize;
            perm[img] = j as u16;
            signs[img] = self.signs[j];
        }
        CliffordElement {
            n: self.n,
            perm,
            signs,
        }
    }

    /// Tensor product, with `self` on the leftmost (lowest-index) qubits.
    pub fn tensor(&self, other: &CliffordElement) -> CliffordElement {
        let n = self.n + other.n;
        let da = pauli_dim(self.n);
        let len = pauli_dim(n) - 1;
        let mut perm = vec![0u16; len];
        let mut signs = vec![1i8; len];
        for j in 1..=len {
            let (ja, jb) = (j % da, j / da);
            let (ia, sa) = self.image(ja);
            let (ib, sb) = other.image(jb);
            let img = ia + da * ib;
            perm[j - 1] = (img - 1) as u16;
            signs[j - 1] = sa * sb;
        }
        CliffordElement { n, perm, signs }
    }

    /// Extracts the signed permutation action of a unitary by conjugating
    /// each basis element numerically.
    pub fn from_unitary(u: &ComplexMatrix) -> Result<CliffordElement> {
        let ptm = ptm_from_unitary(u)?;
        Self::from_ptm(&ptm)
    }

    /// Reads a signed permutation off a transfer matrix, validating that
    /// every column holds a single `+-1` entry and the rest vanish.
    pub fn from_ptm(ptm: &Ptm) -> Result<CliffordElement> {
        let n = ptm.n_qubits();
        let dim = pauli_dim(n);
        let tol = 1e-9;
        let mut perm = vec![0u16; dim - 1];
        let mut signs = vec![1i8; dim - 1];
        let mut seen = vec![false; dim];
        for j in 0..dim {
            let mut hit: Option<(usize, i8)> = None;
            for i in 0..dim {
                let x = ptm.mat[(i, j)];
                if x.abs() > 0.5 {
                    if (x.abs() - 1.0).abs() > tol || hit.is_some() {
                        return Err(Error::NotSignedPermutation { column: j });
                    }
                    hit = Some((i, if x > 0.0 { 1 } else { -1 }));
                } else if x.abs() > tol {
                    return Err(Error::NotSignedPermutation { column: j });
                }
            }
            let (i, s) = hit.ok_or(Error::NotSignedPermutation { column: j })?;
            if seen[i] || (j == 0) != (i == 0) || (j == 0 && s < 0) {
                return Err(Error::NotSignedPermutation { column: j });
            }
            seen[i] = true;
            if j > 0 {
                perm[j - 1] = (i - 1) as u16;
                signs[j - 1] = s;
            }
        }
        Ok(CliffordElement { n, perm, signs })
    }

    /// Transfer matrix of the element.
    pub fn ptm(&self) -> Ptm {
        let dim = pauli_dim(self.n);
        let mut mat = nalgebra::DMatrix::zeros(dim, dim);
        mat[(0, 0)] = 1.0;
        for j in 1..dim {
            let (i, s) = self.image(j);
            mat[(i, j)] = s as f64;
        }
        Ptm::new(self.n, mat).expect("dimensions are consistent")
    }

    /// Applies the element's transfer matrix to a Liouville vector through
    /// the permutation, without materializing the matrix.
    pub fn apply_liouville(&self, v: &LiouvilleVector) -> LiouvilleVector {
        let dim = pauli_dim(self.n);
        let mut out = LiouvilleVector::zeros(self.n);
        for j in 0..dim {
            let (i, s) = self.image(j);
            out.coeffs[i] += s as f64 * v.coeffs[j];
        }
        out
    }

    /// Conjugation `R_g^T M R_g` of a transfer matrix, computed entrywise
    /// through the permutation instead of dense products.
    pub fn conjugate_ptm(&self, m: &Ptm) -> Ptm {
        let dim = pauli_dim(self.n);
        let mut out = nalgebra::DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let (ci, si) = self.image(i);
            for j in 0..dim {
                let (cj, sj) = self.image(j);
                out[(i, j)] = (si * sj) as f64 * m.mat[(ci, cj)];
            }
        }
        Ptm::new(self.n, out).expect("dimensions are consistent")
    }

    fn key(&self) -> (Vec<u16>, Vec<i8>) {
        (self.perm.clone(), self.signs.clone())
    }
}

impl fmt::Debug for CliffordElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CliffordElement(n={}, perm={:?})", self.n, self.perm)
    }
}

/// Supported gate set groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// Full one-qubit Clifford group, order 24.
    C1,
    /// Full two-qubit Clifford group, order 11520.
    C2,
    /// One-qubit Cliffords on qubit 0, identity on qubit 1.
    C1xI,
    /// Identity on qubit 0, one-qubit Cliffords on qubit 1.
    IxC1,
    /// Independent one-qubit Cliffords on both qubits, order 576.
    C1xC1,
    /// Independent one-qubit Cliffords on `k` qubits.
    C1Power(usize),
}

impl GroupKind {
    pub fn n_qubits(&self) -> usize {
        match self {
            GroupKind::C1 => 1,
            GroupKind::C2 | GroupKind::C1xI | GroupKind::IxC1 | GroupKind::C1xC1 => 2,
            GroupKind::C1Power(k) => *k,
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::C1 => write!(f, "C1"),
            GroupKind::C2 => write!(f, "C2"),
            GroupKind::C1xI => write!(f, "C1xI"),
            GroupKind::IxC1 => write!(f, "IxC1"),
            GroupKind::C1xC1 => write!(f, "C1xC1"),
            GroupKind::C1Power(k) => write!(f, "C1^{k}"),
        }
    }
}

/// A fully materialized gate set with constant-time element lookup.
pub struct GateSetGroup {
    kind: GroupKind,
    n: usize,
    elements: Vec<CliffordElement>,
    index: HashMap<(Vec<u16>, Vec<i8>), usize>,
}

/// Largest supported tensor power of the one-qubit group.
const MAX_C1_POWER: usize = 3;

fn group_cache() -> &'static Mutex<HashMap<GroupKind, Arc<GateSetGroup>>> {
    static CACHE: OnceLock<Mutex<HashMap<GroupKind, Arc<GateSetGroup>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl GateSetGroup {
    /// Returns the group for a kind, generating and caching it on first use.
    pub fn generate(kind: GroupKind) -> Result<Arc<GateSetGroup>> {
        if let Some(g) = group_cache().lock().unwrap().get(&kind) {
            return Ok(g.clone());
        }
        let built = Arc::new(Self::build(kind)?);
        group_cache()
            .lock()
            .unwrap()
            .entry(kind)
            .or_insert_with(|| built.clone());
        Ok(built)
    }

    fn build(kind: GroupKind) -> Result<GateSetGroup> {
        let elements = match kind {
            GroupKind::C1 => closure_from_generators(&[hadamard_element(), phase_element()], 100)?,
            GroupKind::C2 => {
                let h = CliffordElement::from_unitary(&hadamard_matrix())?;
                let s = CliffordElement::from_unitary(&phase_matrix())?;
                let id1 = CliffordElement::identity(1);
                let gens = vec![
                    h.tensor(&id1),
                    id1.tensor(&h),
                    s.tensor(&id1),
                    id1.tensor(&s),
                    CliffordElement::from_unitary(&cnot_matrix())?,
                ];
                closure_from_generators(&gens, 20_000)?
            }
            GroupKind::C1xI => {
                let c1 = GateSetGroup::generate(GroupKind::C1)?;
                let id1 = CliffordElement::identity(1);
                c1.elements.iter().map(|e| e.tensor(&id1)).collect()
            }
            GroupKind::IxC1 => {
                let c1 = GateSetGroup::generate(GroupKind::C1)?;
                let id1 = CliffordElement::identity(1);
                c1.elements.iter().map(|e| id1.tensor(e)).collect()
            }
            GroupKind::C1xC1 => Self::build_c1_power(2)?,
            GroupKind::C1Power(k) => Self::build_c1_power(k)?,
        };
        let index = elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.key(), i))
            .collect();
        Ok(GateSetGroup {
            kind,
            n: kind.n_qubits(),
            elements,
            index,
        })
    }

    fn build_c1_power(k: usize) -> Result<Vec<CliffordElement>> {
        if k == 0 || k > MAX_C1_POWER {
            return Err(Error::UnsupportedGroup {
                kind: format!("C1^{k}"),
            });
        }
        let c1 = GateSetGroup::generate(GroupKind::C1)?;
        let mut acc: Vec<CliffordElement> = c1.elements.clone();
        for _ in 1..k {
            let mut next = Vec::with_capacity(acc.len() * 24);
            for a in &acc {
                for b in &c1.elements {
                    next.push(a.tensor(b));
                }
            }
            acc = next;
        }
        Ok(acc)
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[CliffordElement] {
        &self.elements
    }

    pub fn element(&self, id: usize) -> Result<&CliffordElement> {
        self.elements.get(id).ok_or(Error::ElementOutOfRange {
            index: id,
            order: self.order(),
        })
    }

    /// Index of an element within the group, if it belongs to it.
    pub fn id_of(&self, element: &CliffordElement) -> Option<usize> {
        self.index.get(&element.key()).copied()
    }

    /// Draws `m >= 1` element indices uniformly at random.
    pub fn sample_indices<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<Vec<usize>> {
        if m == 0 {
            return Err(Error::ZeroLength);
        }
        Ok((0..m).map(|_| rng.random_range(0..self.order())).collect())
    }

    /// Inverse of the composite of a gate index sequence applied left to
    /// right, i.e. of `C[ids[m-1]] . ... . C[ids[0]]`.
    pub fn sequence_inverse(&self, ids: &[usize]) -> Result<CliffordElement> {
        if ids.is_empty() {
            return Err(Error::EmptySequence);
        }
        let mut total = self.element(ids[0])?.clone();
        for &id in &ids[1..] {
            total = self.element(id)?.compose(&total);
        }
        Ok(total.inverse())
    }
}

/// Breadth-first closure of a generator set, up to `limit` elements.
pub fn closure_from_generators(
    generators: &[CliffordElement],
    limit: usize,
) -> Result<Vec<CliffordElement>> {
    let n = generators
        .first()
        .map(|g| g.n_qubits())
        .ok_or(Error::EmptyKraus)?;
    let identity = CliffordElement::identity(n);
    let mut elements = vec![identity.clone()];
    let mut seen: HashMap<(Vec<u16>, Vec<i8>), ()> = HashMap::new();
    seen.insert(identity.key(), ());
    let mut frontier = 0usize;
    while frontier < elements.len() {
        let current = elements[frontier].clone();
        frontier += 1;
        for g in generators {
            let next = g.compose(&current);
            if seen.insert(next.key(), ()).is_none() {
                elements.push(next);
                if elements.len() > limit {
                    return Err(Error::ClosureLimitExceeded { limit });
                }
            }
        }
    }
    Ok(elements)
}

/// Hadamard gate matrix.
pub fn hadamard_matrix() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)],
    )
}

/// Phase gate matrix `diag(1, i)`.
pub fn phase_matrix() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)],
    )
}

/// Controlled-NOT with qubit 0 as control.
pub fn cnot_matrix() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = c(1.0, 0.0);
    m[(2, 3)] = c(1.0, 0.0);
    m[(3, 2)] = c(1.0, 0.0);
    m
}

fn hadamard_element() -> CliffordElement {
    CliffordElement::from_unitary(&hadamard_matrix()).expect("Hadamard is Clifford")
}

fn phase_element() -> CliffordElement {
    CliffordElement::from_unitary(&phase_matrix()).expect("phase gate is Clifford")
}

/// One physical rotation in a one-qubit Clifford decomposition: the axis
/// (`'x'` or `'y'`) and the angle in quarter turns (`+-1` for half-pi
/// rotations, `2` for a pi rotation).
pub type Rotation = (char, i8);

/// Decompositions of the 24 one-qubit Cliffords into x and y rotations,
/// listed in application order (leftmost acts first). The identity is the
/// empty word; it still occupies one gate slot in the average below.
pub const C1_DECOMPOSITIONS: [&[Rotation]; 24] = [
    &[],
    &[('y', 1), ('x', 1)],
    &[('x', -1), ('y', -1)],
    &[('x', 2)],
    &[('y', -1), ('x', -1)],
    &[('x', 1), ('y', -1)],
    &[('y', 2)],
    &[('y', -1), ('x', 1)],
    &[('x', 1), ('y', 1)],
    &[('x', 2), ('y', 2)],
    &[('y', 1), ('x', -1)],
    &[('x', -1), ('y', 1)],
    &[('y', 1), ('x', 2)],
    &[('x', -1)],
    &[('x', 1), ('y', -1), ('x', -1)],
    &[('y', -1)],
    &[('x', 1)],
    &[('x', 1), ('y', 1), ('x', 1)],
    &[('y', -1), ('x', 2)],
    &[('x', 1), ('y', 2)],
    &[('x', 1), ('y', -1), ('x', 1)],
    &[('y', 1)],
    &[('x', -1), ('y', 2)],
    &[('x', 1), ('y', 1), ('x', -1)],
];

/// Rotation matrix `exp(-i (turns * pi/2) P / 2)` about the x or y axis.
pub fn rotation_matrix(rotation: Rotation) -> ComplexMatrix {
    let (axis, turns) = rotation;
    let theta = f64::from(turns) * std::f64::consts::FRAC_PI_2;
    let (cos, sin) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    match axis {
        'x' => ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(cos, 0.0), c(0.0, -sin), c(0.0, -sin), c(cos, 0.0)],
        ),
        'y' => ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(cos, 0.0), c(-sin, 0.0), c(sin, 0.0), c(cos, 0.0)],
        ),
        _ => panic!("unsupported rotation axis {axis}"),
    }
}

/// Unitary of the one-qubit Clifford with table index `1..=24`, assembled
/// from its rotation word.
pub fn c1_unitary(index: usize) -> Result<ComplexMatrix> {
    if index == 0 || index > 24 {
        return Err(Error::ElementOutOfRange {
            index,
            order: 24,
        });
    }
    let mut u = ComplexMatrix::identity(2, 2);
    for &rot in C1_DECOMPOSITIONS[index - 1] {
        u = rotation_matrix(rot) * u;
    }
    Ok(u)
}

/// Average number of physical rotations per one-qubit Clifford, with the
/// identity counting as a single idle slot.
pub fn average_rotations_per_c1() -> f64 {
    let total: usize = C1_DECOMPOSITIONS
        .iter()
        .map(|word| word.len().max(1))
        .sum();
    total as f64 / C1_DECOMPOSITIONS.len() as f64
}

/// Hilbert space dimension of the register a group acts on.
pub fn group_hilbert_dim(kind: GroupKind) -> usize {
    hilbert_dim(kind.n_qubits())
}
