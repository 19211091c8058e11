//! Truncated two-mode Fock space tensored with `N` two-level atoms.
//!
//! Basis ordering is fixed:
//!
//! ```text
//! index = ((n_a · (n_max_b + 1) + n_b) · 2^N) + atomic_index
//! ```
//!
//! where `atomic_index` is little-endian over atoms, bit `i` set when atom `i`
//! is in `|e⟩`. Single-atom matrices are written in the `{|g⟩, |e⟩}` basis.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

pub const DEFAULT_DIM_CAP: usize = 4096;

/// Poisson tail mass above which a coherent-state truncation is rejected.
pub const TRUNCATION_ERROR_TAIL: f64 = 1e-4;
/// Poisson tail mass above which a coherent-state truncation triggers a warning.
pub const TRUNCATION_WARN_TAIL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    n_max_a: usize,
    n_max_b: usize,
    n_atoms: usize,
}

impl HilbertSpace {
    pub fn new(n_max_a: usize, n_max_b: usize, n_atoms: usize) -> Result<Self> {
        Self::with_cap(n_max_a, n_max_b, n_atoms, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(n_max_a: usize, n_max_b: usize, n_atoms: usize, cap: usize) -> Result<Self> {
        let atomic = 1usize
            .checked_shl(n_atoms as u32)
            .filter(|_| n_atoms < usize::BITS as usize)
            .ok_or(Error::DimensionCap { dim: usize::MAX, cap })?;
        let dim = (n_max_a + 1)
            .checked_mul(n_max_b + 1)
            .and_then(|d| d.checked_mul(atomic))
            .ok_or(Error::DimensionCap { dim: usize::MAX, cap })?;
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        Ok(Self { n_max_a, n_max_b, n_atoms })
    }

    pub fn n_max_a(&self) -> usize {
        self.n_max_a
    }

    pub fn n_max_b(&self) -> usize {
        self.n_max_b
    }

    pub fn n_max(&self, mode: Mode) -> usize {
        match mode {
            Mode::A => self.n_max_a,
            Mode::B => self.n_max_b,
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn field_dim(&self) -> usize {
        (self.n_max_a + 1) * (self.n_max_b + 1)
    }

    pub fn atomic_dim(&self) -> usize {
        1 << self.n_atoms
    }

    pub fn total_dim(&self) -> usize {
        self.field_dim() * self.atomic_dim()
    }

    /// The same field cutoffs without atoms.
    pub fn field_space(&self) -> HilbertSpace {
        HilbertSpace { n_atoms: 0, ..*self }
    }

    pub fn index(&self, n_a: usize, n_b: usize, atomic: usize) -> usize {
        debug_assert!(n_a <= self.n_max_a && n_b <= self.n_max_b && atomic < self.atomic_dim());
        (n_a * (self.n_max_b + 1) + n_b) * self.atomic_dim() + atomic
    }

    /// Inverse of [`HilbertSpace::index`]: `(n_a, n_b, atomic_index)`.
    pub fn decompose(&self, index: usize) -> (usize, usize, usize) {
        let atomic = index % self.atomic_dim();
        let field = index / self.atomic_dim();
        (field / (self.n_max_b + 1), field % (self.n_max_b + 1), atomic)
    }
}

/// Checked constructor taking signed arguments, for callers that parse
/// untrusted input.
pub fn make_space(n_max_a: i64, n_max_b: i64, n_atoms: i64) -> Result<HilbertSpace> {
    let to_usize = |v: i64, name| usize::try_from(v).map_err(|_| Error::NegativeArg(name));
    HilbertSpace::new(
        to_usize(n_max_a, "n_max_a")?,
        to_usize(n_max_b, "n_max_b")?,
        to_usize(n_atoms, "n_atoms")?,
    )
}

/// A dense operator on a [`HilbertSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(space: HilbertSpace, matrix: DMatrix<C64>) -> Result<Self> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        Self { space, matrix: DMatrix::zeros(d, d) }
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        Self { space, matrix: DMatrix::identity(d, d) }
    }

    /// `field ⊗ atoms`, with `field` on the two-mode factor and `atoms` on
    /// the `2^N` atomic factor.
    pub fn from_factors(space: HilbertSpace, field: &DMatrix<C64>, atoms: &DMatrix<C64>) -> Self {
        assert_eq!(field.nrows(), space.field_dim());
        assert_eq!(atoms.nrows(), space.atomic_dim());
        Self { space, matrix: field.kronecker(atoms) }
    }

    /// Field operator tensored with the atomic identity.
    pub fn from_field(space: HilbertSpace, field: &DMatrix<C64>) -> Self {
        let d = space.atomic_dim();
        Self::from_factors(space, field, &DMatrix::identity(d, d))
    }

    /// Atomic operator tensored with the field identity.
    pub fn from_atoms(space: HilbertSpace, atoms: &DMatrix<C64>) -> Self {
        let d = space.field_dim();
        Self::from_factors(space, &DMatrix::identity(d, d), atoms)
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space, matrix: self.matrix.adjoint() }
    }

    /// Largest entry of `|H − H†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut err = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                err = err.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        err
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let d = self.dim();
        let prod = self.matrix.adjoint() * &self.matrix;
        (prod - DMatrix::<C64>::identity(d, d)).camax() <= tol
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        let m = &self.matrix * &other.matrix - &other.matrix * &self.matrix;
        Ok(Self { space: self.space, matrix: m })
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if self.space != psi.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(StateVector { space: self.space, amps: &self.matrix * &psi.amps })
    }

    /// `⟨ψ|O|ψ⟩`.
    pub fn expectation(&self, psi: &StateVector) -> Result<C64> {
        let o_psi = self.apply(psi)?;
        Ok(psi.amps.dotc(&o_psi.amps))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { space: self.space, matrix: &self.matrix * c }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Operator::identity(self.space);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr<&Operator> for &Operator {
            type Output = Operator;
            fn $f(self, rhs: &Operator) -> Operator {
                assert_eq!(self.space, rhs.space, "operators on different spaces");
                Operator { space: self.space, matrix: &self.matrix $op &rhs.matrix }
            }
        }
        impl $tr<Operator> for Operator {
            type Output = Operator;
            fn $f(self, rhs: Operator) -> Operator {
                &self $op &rhs
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, c: C64) -> Operator {
        self.scale(c)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, c: f64) -> Operator {
        self.scale(C64::from(c))
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(self, c: f64) -> Operator {
        self.scale(C64::from(c))
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(C64::from(-1.0))
    }
}

/// A pure state on a [`HilbertSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: HilbertSpace,
    amps: DVector<C64>,
}

impl StateVector {
    /// Wraps raw amplitudes without normalizing them.
    pub fn from_amplitudes(space: HilbertSpace, amps: DVector<C64>) -> Result<Self> {
        if amps.len() != space.total_dim() {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { space, amps })
    }

    pub fn basis(space: HilbertSpace, index: usize) -> Result<Self> {
        let d = space.total_dim();
        if index >= d {
            return Err(Error::IndexOutOfRange { index, len: d });
        }
        let mut amps = DVector::zeros(d);
        amps[index] = C64::from(1.0);
        Ok(Self { space, amps })
    }

    pub fn fock(space: HilbertSpace, n_a: usize, n_b: usize, atomic: usize) -> Result<Self> {
        if n_a > space.n_max_a {
            return Err(Error::IndexOutOfRange { index: n_a, len: space.n_max_a + 1 });
        }
        if n_b > space.n_max_b {
            return Err(Error::IndexOutOfRange { index: n_b, len: space.n_max_b + 1 });
        }
        if atomic >= space.atomic_dim() {
            return Err(Error::IndexOutOfRange { index: atomic, len: space.atomic_dim() });
        }
        Self::basis(space, space.index(n_a, n_b, atomic))
    }

    /// `|a⟩ ⊗ |b⟩ ⊗ |atoms⟩` from per-factor amplitude lists, normalized.
    pub fn product(space: HilbertSpace, mode_a: &[C64], mode_b: &[C64], atoms: &[C64]) -> Result<Self> {
        if mode_a.len() != space.n_max_a + 1
            || mode_b.len() != space.n_max_b + 1
            || atoms.len() != space.atomic_dim()
        {
            return Err(Error::SpaceMismatch);
        }
        let mut amps = DVector::zeros(space.total_dim());
        let mut k = 0;
        for &ca in mode_a {
            for &cb in mode_b {
                let cab = ca * cb;
                for &cs in atoms {
                    amps[k] = cab * cs;
                    k += 1;
                }
            }
        }
        let mut psi = Self { space, amps };
        psi.normalize();
        Ok(psi)
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `|‖ψ‖ − 1|`.
    pub fn norm_deviation(&self) -> f64 {
        (self.norm() - 1.0).abs()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amps /= C64::from(n);
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { space: self.space, amps: &self.amps * c }
    }
}

/// A density matrix on a single-mode or full space, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates trace (1e-10) and Hermiticity (1e-12).
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidArgument("density matrix must be square and non-empty".into()));
        }
        let rho = Self { matrix };
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("density matrix trace {tr} != 1")));
        }
        let herm = (&rho.matrix - rho.matrix.adjoint()).camax();
        if herm > 1e-12 {
            return Err(Error::NotHermitian(herm));
        }
        Ok(rho)
    }

    /// Trusted constructor for internally generated matrices.
    pub(crate) fn new_unchecked(matrix: DMatrix<C64>) -> Self {
        Self { matrix }
    }

    pub fn from_pure(amps: &DVector<C64>) -> Self {
        let n = amps.norm();
        let v = amps / C64::from(n);
        Self { matrix: &v * v.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ_ij |ρ_ij|² for Hermitian ρ.
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.matrix.clone().symmetric_eigen();
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }
}

/// Single-mode lowering operator on `{|0⟩ … |n_max⟩}`.
pub fn ladder(n_max: usize) -> DMatrix<C64> {
    let d = n_max + 1;
    let mut m = DMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = C64::from((n as f64).sqrt());
    }
    m
}

/// Lowering operator of `mode` on the two-mode factor only.
pub fn field_annihilator(space: HilbertSpace, mode: Mode) -> DMatrix<C64> {
    let ia = DMatrix::identity(space.n_max_a + 1, space.n_max_a + 1);
    let ib = DMatrix::identity(space.n_max_b + 1, space.n_max_b + 1);
    match mode {
        Mode::A => ladder(space.n_max_a).kronecker(&ib),
        Mode::B => ia.kronecker(&ladder(space.n_max_b)),
    }
}

pub fn annihilator(space: HilbertSpace, mode: Mode) -> Operator {
    Operator::from_field(space, &field_annihilator(space, mode))
}

pub fn creator(space: HilbertSpace, mode: Mode) -> Operator {
    annihilator(space, mode).adjoint()
}

pub fn number(space: HilbertSpace, mode: Mode) -> Operator {
    let a = field_annihilator(space, mode);
    Operator::from_field(space, &(a.adjoint() * a))
}

/// `a†a + b†b`.
pub fn total_number(space: HilbertSpace) -> Operator {
    &number(space, Mode::A) + &number(space, Mode::B)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomicKind {
    /// `|e⟩⟨e| − |g⟩⟨g|`
    SigmaZ,
    /// `|e⟩⟨g|`
    SigmaEg,
    /// `|g⟩⟨e|`
    SigmaGe,
    /// `|e⟩⟨e|`
    SigmaEe,
    /// `|g⟩⟨g|`
    SigmaGg,
    /// `|+⟩⟨−|`
    SigmaPm,
    /// `|−⟩⟨+|`
    SigmaMp,
    /// `|+⟩⟨+|`
    SigmaPp,
    /// `|−⟩⟨−|`
    SigmaMm,
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// `|+⟩` and `|−⟩` as `(g, e)` amplitudes.
pub fn plus_amplitudes() -> [C64; 2] {
    [C64::from(FRAC_1_SQRT_2), C64::from(FRAC_1_SQRT_2)]
}

pub fn minus_amplitudes() -> [C64; 2] {
    [C64::from(-FRAC_1_SQRT_2), C64::from(FRAC_1_SQRT_2)]
}

fn outer2(ket: [C64; 2], bra: [C64; 2]) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |i, j| ket[i] * bra[j].conj())
}

/// 2×2 matrix of a single-atom operator in the `{|g⟩, |e⟩}` basis.
pub fn qubit_matrix(kind: AtomicKind) -> DMatrix<C64> {
    let g = [C64::from(1.0), C64::from(0.0)];
    let e = [C64::from(0.0), C64::from(1.0)];
    let p = plus_amplitudes();
    let m = minus_amplitudes();
    match kind {
        AtomicKind::SigmaZ => outer2(e, e) - outer2(g, g),
        AtomicKind::SigmaEg => outer2(e, g),
        AtomicKind::SigmaGe => outer2(g, e),
        AtomicKind::SigmaEe => outer2(e, e),
        AtomicKind::SigmaGg => outer2(g, g),
        AtomicKind::SigmaPm => outer2(p, m),
        AtomicKind::SigmaMp => outer2(m, p),
        AtomicKind::SigmaPp => outer2(p, p),
        AtomicKind::SigmaMm => outer2(m, m),
    }
}

/// Embeds a 2×2 matrix on atom `atom_index` into the `2^N` atomic factor.
pub fn embed_qubit(n_atoms: usize, single: &DMatrix<C64>, atom_index: usize) -> DMatrix<C64> {
    // Little-endian index: atom 0 is the least significant (rightmost) factor.
    let left = 1usize << (n_atoms - 1 - atom_index);
    let right = 1usize << atom_index;
    DMatrix::<C64>::identity(left, left)
        .kronecker(single)
        .kronecker(&DMatrix::<C64>::identity(right, right))
}

pub fn atomic_op(space: HilbertSpace, kind: AtomicKind, atom_index: usize) -> Result<Operator> {
    if atom_index >= space.n_atoms {
        return Err(Error::IndexOutOfRange { index: atom_index, len: space.n_atoms });
    }
    let m = embed_qubit(space.n_atoms, &qubit_matrix(kind), atom_index);
    Ok(Operator::from_atoms(space, &m))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CollectiveKind {
    /// `Σ |e_i⟩⟨g_i|`
    JPlus,
    /// `Σ |g_i⟩⟨e_i|`
    JMinus,
    /// `Σ (|e_i⟩⟨e_i| − |g_i⟩⟨g_i|)`, eigenvalues `−N … N` in steps of 2.
    Jz,
    /// `Σ |+_i⟩⟨−_i| e^{i2Ωt}`
    JtPlus { omega: f64, t: f64 },
    /// `Σ |−_i⟩⟨+_i| e^{−i2Ωt}`
    JtMinus { omega: f64, t: f64 },
    /// `Σ (|+_i⟩⟨+_i| − |−_i⟩⟨−_i|)`
    JtZ,
}

/// Collective operator on the `2^N` atomic factor only.
pub fn collective_matrix(n_atoms: usize, kind: CollectiveKind) -> Result<DMatrix<C64>> {
    if n_atoms == 0 {
        return Err(Error::NoAtoms);
    }
    let (single, phase) = match kind {
        CollectiveKind::JPlus => (qubit_matrix(AtomicKind::SigmaEg), C64::from(1.0)),
        CollectiveKind::JMinus => (qubit_matrix(AtomicKind::SigmaGe), C64::from(1.0)),
        CollectiveKind::Jz => (qubit_matrix(AtomicKind::SigmaZ), C64::from(1.0)),
        CollectiveKind::JtPlus { omega, t } => {
            (qubit_matrix(AtomicKind::SigmaPm), C64::from_polar(1.0, 2.0 * omega * t))
        }
        CollectiveKind::JtMinus { omega, t } => {
            (qubit_matrix(AtomicKind::SigmaMp), C64::from_polar(1.0, -2.0 * omega * t))
        }
        CollectiveKind::JtZ => (
            qubit_matrix(AtomicKind::SigmaPp) - qubit_matrix(AtomicKind::SigmaMm),
            C64::from(1.0),
        ),
    };
    let d = 1 << n_atoms;
    let mut m = DMatrix::zeros(d, d);
    for i in 0..n_atoms {
        m += embed_qubit(n_atoms, &single, i);
    }
    Ok(m * phase)
}

pub fn collective_op(space: HilbertSpace, kind: CollectiveKind) -> Result<Operator> {
    Ok(Operator::from_atoms(space, &collective_matrix(space.n_atoms, kind)?))
}

/// Product state of the atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AtomicState {
    Ground,
    Excited,
    Plus,
    Minus,
    /// Per-atom `(g, e)` amplitudes, atom 0 first.
    PerAtom(Vec<[C64; 2]>),
}

impl AtomicState {
    /// Amplitudes on the `2^N` atomic factor.
    pub fn amplitudes(&self, n_atoms: usize) -> Result<Vec<C64>> {
        let per_atom: Vec<[C64; 2]> = match self {
            AtomicState::Ground => vec![[C64::from(1.0), C64::from(0.0)]; n_atoms],
            AtomicState::Excited => vec![[C64::from(0.0), C64::from(1.0)]; n_atoms],
            AtomicState::Plus => vec![plus_amplitudes(); n_atoms],
            AtomicState::Minus => vec![minus_amplitudes(); n_atoms],
            AtomicState::PerAtom(v) => {
                if v.len() != n_atoms {
                    return Err(Error::AtomCountMismatch { expected: n_atoms, found: v.len() });
                }
                v.clone()
            }
        };
        let d = 1usize << n_atoms;
        let mut out = vec![C64::from(1.0); d];
        for (idx, amp) in out.iter_mut().enumerate() {
            for (i, atom) in per_atom.iter().enumerate() {
                *amp *= atom[(idx >> i) & 1];
            }
        }
        let norm: f64 = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("atomic state has zero norm".into()));
        }
        Ok(out.into_iter().map(|z| z / norm).collect())
    }
}

/// `P(n > n_max)` for a Poisson distribution of the given mean.
pub fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    // Walk the pmf in log space up to n_max + 1, then sum the tail until the
    // terms stop contributing.
    let mut log_p = -mean;
    for n in 1..=n_max + 1 {
        log_p += mean.ln() - (n as f64).ln();
    }
    let mut term = log_p.exp();
    let mut tail = 0.0;
    let mut n = n_max + 1;
    loop {
        tail += term;
        n += 1;
        term *= mean / n as f64;
        if term < tail * 1e-17 || term == 0.0 {
            break;
        }
    }
    tail.min(1.0)
}

/// Smallest cutoff with Poisson tail below `1e-8`, plus a 10-level buffer.
pub fn auto_cutoff(mean: f64) -> usize {
    let mut n = 0;
    while poisson_tail(mean, n) >= TRUNCATION_WARN_TAIL {
        n += 1;
    }
    n + 10
}

/// Truncated coherent amplitudes `e^{−|α|²/2} αⁿ/√n!`, renormalized, along
/// with the discarded Poisson tail mass.
pub fn coherent_amplitudes(alpha: C64, n_max: usize) -> (Vec<C64>, f64) {
    let mut amps = Vec::with_capacity(n_max + 1);
    let mut c = C64::from((-alpha.norm_sqr() / 2.0).exp());
    amps.push(c);
    for n in 1..=n_max {
        c = c * alpha / (n as f64).sqrt();
        amps.push(c);
    }
    let tail = poisson_tail(alpha.norm_sqr(), n_max);
    let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (amps.into_iter().map(|z| z / norm).collect(), tail)
}

fn check_tail(tail: f64, n_max: usize) -> Result<()> {
    if tail > TRUNCATION_ERROR_TAIL {
        return Err(Error::Truncation { tail, n_max });
    }
    if tail > TRUNCATION_WARN_TAIL {
        log::warn!("coherent-state truncation at n_max = {n_max} discards Poisson tail {tail:e}");
    }
    Ok(())
}

/// Truncated single-mode coherent state with the tail checks applied.
pub fn coherent_mode(alpha: C64, n_max: usize) -> Result<Vec<C64>> {
    let (amps, tail) = coherent_amplitudes(alpha, n_max);
    check_tail(tail, n_max)?;
    Ok(amps)
}

/// `|α⟩ ⊗ |β⟩ ⊗ |atoms⟩`.
pub fn coherent_state(space: HilbertSpace, alpha: C64, beta: C64, atomic: &AtomicState) -> Result<StateVector> {
    let a = coherent_mode(alpha, space.n_max_a)?;
    let b = coherent_mode(beta, space.n_max_b)?;
    let s = atomic.amplitudes(space.n_atoms)?;
    StateVector::product(space, &a, &b, &s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::from(re)
    }

    #[test]
    fn dimensions() {
        assert_eq!(HilbertSpace::new(3, 3, 1).unwrap().total_dim(), 32);
        assert_eq!(HilbertSpace::new(0, 0, 0).unwrap().total_dim(), 1);
        assert_eq!(HilbertSpace::new(20, 20, 0).unwrap().total_dim(), 441);
        assert!(HilbertSpace::new(63, 63, 0).is_ok());
        assert!(matches!(HilbertSpace::new(64, 63, 0), Err(Error::DimensionCap { .. })));
        assert!(matches!(make_space(-1, 2, 0), Err(Error::NegativeArg(_))));
    }

    #[test]
    fn index_roundtrip() {
        let s = HilbertSpace::new(2, 3, 2).unwrap();
        for i in 0..s.total_dim() {
            let (a, b, at) = s.decompose(i);
            assert_eq!(s.index(a, b, at), i);
        }
        assert_eq!(s.index(1, 2, 3), ((4 + 2) * 4) + 3);
    }

    #[test]
    fn ladder_action() {
        let s = HilbertSpace::new(2, 0, 0).unwrap();
        let a = annihilator(s, Mode::A);
        let m = a.matrix();
        assert_eq!(m[(0, 1)], c(1.0));
        assert_abs_diff_eq!(m[(1, 2)].re, 2f64.sqrt(), epsilon = 1e-15);
        assert!(m.column(0).iter().all(|z| *z == c(0.0)));
    }

    #[test]
    fn canonical_commutator_below_cutoff() {
        let s = HilbertSpace::new(4, 3, 1).unwrap();
        let a = annihilator(s, Mode::A);
        let comm = a.commutator(&a.adjoint()).unwrap();
        for i in 0..s.total_dim() {
            let (na, _, _) = s.decompose(i);
            let expected = if na < s.n_max_a() { 1.0 } else { -(s.n_max_a() as f64) };
            assert_abs_diff_eq!(comm.matrix()[(i, i)].re, expected, epsilon = 1e-12);
        }
        let b = annihilator(s, Mode::B);
        assert_eq!(a.commutator(&b.adjoint()).unwrap().norm(), 0.0);
    }

    #[test]
    fn single_atom_operators() {
        let s = HilbertSpace::new(0, 0, 1).unwrap();
        let sz = atomic_op(s, AtomicKind::SigmaZ, 0).unwrap();
        let g = StateVector::fock(s, 0, 0, 0).unwrap();
        let e = StateVector::fock(s, 0, 0, 1).unwrap();
        assert_eq!(sz.apply(&e).unwrap(), e);
        assert_eq!(sz.apply(&g).unwrap(), e.scale(c(0.0)) - g.clone());

        let plus = StateVector::product(s, &[c(1.0)], &[c(1.0)], &plus_amplitudes()).unwrap();
        let minus = StateVector::product(s, &[c(1.0)], &[c(1.0)], &minus_amplitudes()).unwrap();
        let spm = atomic_op(s, AtomicKind::SigmaPm, 0).unwrap();
        let out = spm.apply(&minus).unwrap();
        assert!((out.amplitudes() - plus.amplitudes()).norm() < 1e-15);
        assert!(spm.apply(&plus).unwrap().norm() < 1e-15);

        // σ_pp − σ_mm = σ_eg + σ_ge, checked against explicit 2×2 algebra.
        let lhs = qubit_matrix(AtomicKind::SigmaPp) - qubit_matrix(AtomicKind::SigmaMm);
        let sx = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        assert!((lhs - sx).camax() < 1e-15);

        assert!(matches!(atomic_op(s, AtomicKind::SigmaZ, 1), Err(Error::IndexOutOfRange { .. })));
    }

    impl std::ops::Sub for StateVector {
        type Output = StateVector;
        fn sub(self, rhs: StateVector) -> StateVector {
            StateVector { space: self.space, amps: self.amps - rhs.amps }
        }
    }

    #[test]
    fn collective_algebra() {
        for n in 1..=3 {
            let s = HilbertSpace::new(1, 0, n).unwrap();
            let jp = collective_op(s, CollectiveKind::JPlus).unwrap();
            let jm = collective_op(s, CollectiveKind::JMinus).unwrap();
            let jz = collective_op(s, CollectiveKind::Jz).unwrap();
            let c1 = jp.commutator(&jm).unwrap();
            assert!((c1 - jz.clone()).norm() < 1e-12);
            let c2 = jz.commutator(&jp).unwrap();
            assert!((c2 - &jp * 2.0).norm() < 1e-12);
            let c3 = jz.commutator(&jm).unwrap();
            assert!((c3 + &jm * 2.0).norm() < 1e-12);

            let plus = coherent_state(s, c(0.0), c(0.0), &AtomicState::Plus).unwrap();
            let jtz = collective_op(s, CollectiveKind::JtZ).unwrap();
            let out = jtz.apply(&plus).unwrap();
            assert!((out.amplitudes() - plus.amplitudes() * c(n as f64)).norm() < 1e-12);
        }
        let s = HilbertSpace::new(1, 1, 1).unwrap();
        assert_eq!(
            collective_op(s, CollectiveKind::JPlus).unwrap(),
            atomic_op(s, AtomicKind::SigmaEg, 0).unwrap()
        );
        assert_eq!(collective_op(HilbertSpace::new(1, 1, 0).unwrap(), CollectiveKind::Jz), Err(Error::NoAtoms));
    }

    #[test]
    fn coherent_states() {
        let s = HilbertSpace::new(3, 3, 1).unwrap();
        let vac = coherent_state(s, c(0.0), c(0.0), &AtomicState::Excited).unwrap();
        assert_eq!(vac, StateVector::fock(s, 0, 0, 1).unwrap());

        let s = HilbertSpace::new(20, 0, 0).unwrap();
        let psi = coherent_state(s, c(1.0), c(0.0), &AtomicState::Ground).unwrap();
        let n = number(s, Mode::A).expectation(&psi).unwrap();
        assert_abs_diff_eq!(n.re, 1.0, epsilon = 1e-8);
        assert!(psi.norm_deviation() < 1e-12);

        let s = HilbertSpace::new(10, 10, 0).unwrap();
        assert!(matches!(
            coherent_state(s, c(3.0), c(2.0), &AtomicState::Ground),
            Err(Error::Truncation { .. })
        ));
    }

    /// Independent tail oracle: sum the pmf with log-gamma weights.
    fn tail_oracle(mean: f64, n_max: usize) -> f64 {
        let mut head = 0.0;
        let mut log_fact = 0.0;
        for n in 0..=n_max {
            if n > 0 {
                log_fact += (n as f64).ln();
            }
            head += (n as f64 * mean.ln() - mean - log_fact).exp();
        }
        1.0 - head
    }

    #[test]
    fn poisson_tail_matches_oracle() {
        for &(mean, n) in &[(1.0, 3), (9.0, 12), (4.0, 8), (13.0, 20)] {
            let t = poisson_tail(mean, n);
            assert!((t - tail_oracle(mean, n)).abs() < 1e-12, "{mean} {n}");
        }
        // |α|² = 9: P(n > 29) = 2.77e-8, P(n > 30) = 7.93e-9.
        let first = (0..60).find(|&n| poisson_tail(9.0, n) < 1e-8).unwrap();
        assert_eq!(first, 30);
        assert!((poisson_tail(9.0, 30) - 7.931552243435675e-9).abs() < 1e-15);
        assert_eq!(auto_cutoff(9.0), 40);
    }

    #[test]
    fn atomic_state_normalized() {
        let amps = AtomicState::Plus.amplitudes(3).unwrap();
        assert!(amps.iter().all(|z| (z.re - (1.0f64 / 8.0).sqrt()).abs() < 1e-15));
        assert!(AtomicState::PerAtom(vec![plus_amplitudes()]).amplitudes(2).is_err());
    }
}
