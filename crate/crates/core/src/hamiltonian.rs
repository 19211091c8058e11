//! Hamiltonians of the driven bimodal cavity, exact and effective.
//!
//! Exact generators are interaction-picture Hamiltonians with explicit
//! `e^{±iΔt}` phases and are exposed both as [`TimeDependentHamiltonian`]s
//! and as snapshots `H(t)`. Effective generators are time independent except
//! for the rotating-frame ones, which carry `e^{±i2Ωt}`.
//!
//! The dispersive coupling is `χ = λ²/Δ` throughout. The beam-splitter
//! derivation also prints `χ ≡ λ²/ω` once; that variant is not used because
//! the expansion parameter of the dispersive step is `λ/Δ`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    collective_matrix, field_annihilator, qubit_matrix, AtomicKind, CollectiveKind, HilbertSpace, Mode, Operator,
};
use crate::C64;

/// Lab knobs, all angular frequencies in rad/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Atom–mode coupling, equal for both modes.
    pub lambda: f64,
    /// Detuning between atom and the (degenerate) cavity modes.
    pub delta: f64,
    /// Rabi frequency of the classical drive.
    pub omega_rabi: f64,
    pub n_atoms: usize,
    /// Level shift of the N-atom model; `None` means `2χ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl PhysicalParams {
    pub fn new(lambda: f64, delta: f64, omega_rabi: f64) -> Self {
        Self { lambda, delta, omega_rabi, n_atoms: 1, epsilon: None }
    }

    pub fn with_atoms(mut self, n_atoms: usize) -> Self {
        self.n_atoms = n_atoms;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    /// `χ = λ²/Δ`.
    pub fn chi(&self) -> Result<f64> {
        if self.delta == 0.0 {
            return Err(Error::ZeroDetuning);
        }
        Ok(self.lambda * self.lambda / self.delta)
    }

    /// `μ = χ²/(2Ω)`.
    pub fn mu(&self) -> Result<f64> {
        let chi = self.chi()?;
        if self.omega_rabi <= 0.0 {
            return Err(Error::ZeroDrive);
        }
        Ok(chi * chi / (2.0 * self.omega_rabi))
    }

    /// `ε`, defaulting to `2χ`, which cancels the collective Stark shift.
    pub fn epsilon(&self) -> Result<f64> {
        match self.epsilon {
            Some(e) => Ok(e),
            None => Ok(2.0 * self.chi()?),
        }
    }

    /// Fastest phase in the exact generators: `max(|Δ|, 2Ω)`.
    pub fn fast_frequency(&self) -> f64 {
        self.delta.abs().max(2.0 * self.omega_rabi.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub chi: f64,
    pub mu: f64,
    /// `π/χ`
    pub tau_chi: f64,
    /// `π/μ`
    pub tau_mu: f64,
}

/// `H(t) = H₀ + Σ_k (e^{iω_k t} M_k + e^{−iω_k t} M_k†)`.
#[derive(Clone, Debug)]
pub struct TimeDependentHamiltonian {
    pub(crate) static_part: Operator,
    pub(crate) oscillating: Vec<(f64, Operator)>,
    fast_frequency: f64,
}

impl TimeDependentHamiltonian {
    pub fn new(static_part: Operator, oscillating: Vec<(f64, Operator)>, fast_frequency: f64) -> Result<Self> {
        if !static_part.is_hermitian(1e-12 * (1.0 + static_part.matrix().camax())) {
            return Err(Error::NotHermitian(static_part.hermiticity_error()));
        }
        if oscillating.iter().any(|(_, m)| m.space() != static_part.space()) {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { static_part, oscillating, fast_frequency })
    }

    /// A constant generator wrapped as time dependent.
    pub fn constant(h: Operator, fast_frequency: f64) -> Result<Self> {
        Self::new(h, Vec::new(), fast_frequency)
    }

    pub fn space(&self) -> HilbertSpace {
        self.static_part.space()
    }

    /// Frequency that sets the default integration step.
    pub fn fast_frequency(&self) -> f64 {
        self.fast_frequency
    }

    pub fn static_part(&self) -> &Operator {
        &self.static_part
    }

    pub fn oscillating_terms(&self) -> &[(f64, Operator)] {
        &self.oscillating
    }

    /// Upper bound on `‖H(t)‖` over all `t`, from absolute row and column sums.
    pub fn norm_bound(&self) -> f64 {
        fn bound(m: &DMatrix<C64>) -> f64 {
            let rows = (0..m.nrows()).map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
            let cols = (0..m.ncols()).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
            (rows * cols).sqrt()
        }
        bound(self.static_part.matrix()) + self.oscillating.iter().map(|(_, m)| 2.0 * bound(m.matrix())).sum::<f64>()
    }

    pub fn at(&self, t: f64) -> Operator {
        let mut m = self.static_part.matrix().clone();
        for (omega, op) in &self.oscillating {
            let ph = C64::from_polar(1.0, omega * t);
            let om = op.matrix();
            m += om * ph + om.adjoint() * ph.conj();
        }
        Operator::from_matrix(self.static_part.space(), m).expect("same space")
    }
}

fn require_atoms(space: HilbertSpace, expected: usize) -> Result<()> {
    if space.n_atoms() != expected {
        return Err(Error::AtomCountMismatch { expected, found: space.n_atoms() });
    }
    Ok(())
}

fn require_some_atoms(space: HilbertSpace) -> Result<()> {
    if space.n_atoms() == 0 {
        return Err(Error::NoAtoms);
    }
    Ok(())
}

/// `a + b` on the field factor.
fn field_sum(space: HilbertSpace) -> DMatrix<C64> {
    field_annihilator(space, Mode::A) + field_annihilator(space, Mode::B)
}

/// `xy` skipping zero entries; field operators here have a few nonzeros per
/// column, and dense products dominate the cost at large cutoffs.
fn sparse_mul(x: &DMatrix<C64>, y: &DMatrix<C64>) -> DMatrix<C64> {
    let zero = C64::from(0.0);
    let cols: Vec<Vec<(usize, C64)>> = (0..x.ncols())
        .map(|k| x.column(k).iter().enumerate().filter(|(_, v)| **v != zero).map(|(i, v)| (i, *v)).collect())
        .collect();
    let mut out = DMatrix::zeros(x.nrows(), y.ncols());
    for j in 0..y.ncols() {
        for (k, ykj) in y.column(j).iter().enumerate() {
            if *ykj == zero {
                continue;
            }
            for (i, xik) in &cols[k] {
                out[(*i, j)] += xik * ykj;
            }
        }
    }
    out
}

/// `a†a + b†b + a†b + ab† (+1)` on the field factor.
pub fn field_o(space: HilbertSpace, include_identity: bool) -> DMatrix<C64> {
    let s = field_sum(space);
    let mut o = sparse_mul(&s.adjoint(), &s);
    if include_identity {
        let d = space.field_dim();
        o += DMatrix::<C64>::identity(d, d);
    }
    o
}

/// `O = a†a + b†b + a†b + ab† + 1`, or without the identity when
/// `include_identity` is false.
///
/// The identity term is needed for `V†OV = 2b†b + 1`; the N-atom model uses
/// the identity-free form.
pub fn op_o(space: HilbertSpace, include_identity: bool) -> Operator {
    Operator::from_field(space, &field_o(space, include_identity))
}

fn qubit(space: HilbertSpace, kind: AtomicKind) -> DMatrix<C64> {
    debug_assert_eq!(space.n_atoms(), 1);
    qubit_matrix(kind)
}

/// One-atom interaction-picture Hamiltonian
/// `λ(a+b)e^{iΔt}σ_eg + H.c. + Ω(σ_eg + σ_ge)`.
pub fn exact_interaction_td(space: HilbertSpace, params: &PhysicalParams) -> Result<TimeDependentHamiltonian> {
    require_atoms(space, 1)?;
    let sum = field_sum(space);
    let seg = qubit(space, AtomicKind::SigmaEg);
    let sge = qubit(space, AtomicKind::SigmaGe);
    let drive = Operator::from_atoms(space, &((&seg + &sge) * C64::from(params.omega_rabi)));
    let coupling = Operator::from_factors(space, &(sum * C64::from(params.lambda)), &seg);
    TimeDependentHamiltonian::new(drive, vec![(params.delta, coupling)], params.fast_frequency())
}

pub fn exact_interaction(space: HilbertSpace, params: &PhysicalParams, t: f64) -> Result<Operator> {
    Ok(exact_interaction_td(space, params)?.at(t))
}

/// N-atom interaction-picture Hamiltonian
/// `λ[(a+b)e^{−iΔt}J₊ + H.c.] + εJ₊J₋ + Ω(J₊ + J₋)`.
///
/// The phase convention is the opposite of [`exact_interaction`]: at `N = 1`
/// and `ε = 0` this equals `exact_interaction` with `Δ → −Δ`.
pub fn exact_n_atoms_td(space: HilbertSpace, params: &PhysicalParams) -> Result<TimeDependentHamiltonian> {
    require_some_atoms(space)?;
    let n = space.n_atoms();
    let jp = collective_matrix(n, CollectiveKind::JPlus)?;
    let jm = collective_matrix(n, CollectiveKind::JMinus)?;
    let eps = params.epsilon()?;
    let atoms = (&jp * &jm) * C64::from(eps) + (&jp + &jm) * C64::from(params.omega_rabi);
    let coupling = Operator::from_factors(space, &(field_sum(space) * C64::from(params.lambda)), &jp);
    TimeDependentHamiltonian::new(
        Operator::from_atoms(space, &atoms),
        vec![(-params.delta, coupling)],
        params.fast_frequency(),
    )
}

pub fn exact_n_atoms(space: HilbertSpace, params: &PhysicalParams, t: f64) -> Result<Operator> {
    Ok(exact_n_atoms_td(space, params)?.at(t))
}

/// `H_cef = Ω(σ_eg + σ_ge)`, or `Ω(J₊ + J₋)` for several atoms.
pub fn drive(space: HilbertSpace, params: &PhysicalParams) -> Result<Operator> {
    require_some_atoms(space)?;
    let n = space.n_atoms();
    let jx = collective_matrix(n, CollectiveKind::JPlus)? + collective_matrix(n, CollectiveKind::JMinus)?;
    Ok(Operator::from_atoms(space, &(jx * C64::from(params.omega_rabi))))
}

/// Dispersive one-atom Hamiltonian
/// `Ω(σ_eg + σ_ge) + χ(a†a + b†b + a†b + ab†)σ_z + 2χσ_ee`.
pub fn dispersive_one_atom(space: HilbertSpace, params: &PhysicalParams) -> Result<Operator> {
    require_atoms(space, 1)?;
    let chi = params.chi()?;
    let sz = qubit(space, AtomicKind::SigmaZ);
    let see = qubit(space, AtomicKind::SigmaEe);
    let h = &drive(space, params)?
        + &Operator::from_factors(space, &(field_o(space, false) * C64::from(chi)), &sz)
        + Operator::from_atoms(space, &(see * C64::from(2.0 * chi)));
    Ok(h)
}

/// `H_BS = χ(a†a + b†b + a†b + ab†)`, identity on atoms.
pub fn beam_splitter(space: HilbertSpace, params: &PhysicalParams) -> Result<Operator> {
    let chi = params.chi()?;
    Ok(Operator::from_field(space, &(field_o(space, false) * C64::from(chi))))
}

/// Rotating-frame one-atom Hamiltonian `χO(σ₊₋e^{i2Ωt} + H.c.)`.
pub fn rotating_frame_one_atom_td(space: HilbertSpace, params: &PhysicalParams) -> Result<TimeDependentHamiltonian> {
    require_atoms(space, 1)?;
    let chi = params.chi()?;
    let term = Operator::from_factors(
        space,
        &(field_o(space, true) * C64::from(chi)),
        &qubit(space, AtomicKind::SigmaPm),
    );
    TimeDependentHamiltonian::new(
        Operator::zeros(space),
        vec![(2.0 * params.omega_rabi, term)],
        2.0 * params.omega_rabi.abs(),
    )
}

pub fn rotating_frame_one_atom(space: HilbertSpace, params: &PhysicalParams, t: f64) -> Result<Operator> {
    Ok(rotating_frame_one_atom_td(space, params)?.at(t))
}

/// `H_NL = (χ²/2Ω) O² (σ₊₊ − σ₋₋)`.
pub fn nonlinear_one_atom(space: HilbertSpace, params: &PhysicalParams) -> Result<Operator> {
    require_atoms(space, 1)?;
    let mu = params.mu()?;
    let o = field_o(space, true);
    let sx = qubit(space, AtomicKind::SigmaPp) - qubit(space, AtomicKind::SigmaMm);
    Ok(Operator::from_factors(space, &(sparse_mul(&o, &o) * C64::from(mu)), &sx))
}

/// `H_QBS = μO²` on the field factors.
pub fn qbs(space: HilbertSpace, params: &PhysicalParams) -> Result<Operator> {
    aqbs_with(space, params, 1, true)
}

/// `H_AQBS = NμO²` on the field factors.
pub fn aqbs(space: HilbertSpace, params: &PhysicalParams, n: usize) -> Result<Operator> {
    aqbs_with(space, params, n, true)
}

pub fn aqbs_with(space: HilbertSpace, params: &PhysicalParams, n: usize, include_identity: bool) -> Result<Operator> {
    let mu = params.mu()?;
    let o = field_o(space, include_identity);
    Ok(Operator::from_field(space, &(sparse_mul(&o, &o) * C64::from(n as f64 * mu))))
}

/// Dispersive N-atom Hamiltonian `−2χ(a†a + b†b + ab† + a†b)J_z + Ω(J₊ + J₋)`,
/// with the reference coefficient. A direct second-order expansion of
/// [`exact_n_atoms`] with `ε = 2χ` gives `−χ` instead; the rotating-frame
/// form [`many_atom_rf`] is consistent with `−χ`.
pub fn dispersive_n_atoms(space: HilbertSpace, params: &PhysicalParams) -> Result<Operator> {
    require_some_atoms(space)?;
    let chi = params.chi()?;
    let jz = collective_matrix(space.n_atoms(), CollectiveKind::Jz)?;
    let coupling = Operator::from_factors(space, &(field_o(space, false) * C64::from(-2.0 * chi)), &jz);
    Ok(&coupling + &drive(space, params)?)
}

/// Rotating-frame N-atom Hamiltonian `−χ(a†a + b†b + ab† + a†b)(J̃₊(t) + J̃₋(t))`.
pub fn many_atom_rf_td(space: HilbertSpace, params: &PhysicalParams) -> Result<TimeDependentHamiltonian> {
    require_some_atoms(space)?;
    let chi = params.chi()?;
    let jt = collective_matrix(space.n_atoms(), CollectiveKind::JtPlus { omega: 0.0, t: 0.0 })?;
    let term = Operator::from_factors(space, &(field_o(space, false) * C64::from(-chi)), &jt);
    TimeDependentHamiltonian::new(
        Operator::zeros(space),
        vec![(2.0 * params.omega_rabi, term)],
        2.0 * params.omega_rabi.abs(),
    )
}

pub fn many_atom_rf(space: HilbertSpace, params: &PhysicalParams, t: f64) -> Result<Operator> {
    Ok(many_atom_rf_td(space, params)?.at(t))
}

/// `H_ma = μO²J̃_z`.
pub fn many_atom_effective(space: HilbertSpace, params: &PhysicalParams, include_identity: bool) -> Result<Operator> {
    require_some_atoms(space)?;
    let mu = params.mu()?;
    let o = field_o(space, include_identity);
    let jtz = collective_matrix(space.n_atoms(), CollectiveKind::JtZ)?;
    Ok(Operator::from_factors(space, &(sparse_mul(&o, &o) * C64::from(mu)), &jtz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{atomic_op, coherent_state, total_number, AtomicState, StateVector};
    use crate::spectral::Spectral;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn params() -> PhysicalParams {
        PhysicalParams::new(1.0, 12.5, 0.8)
    }

    fn c(x: f64) -> C64 {
        C64::from(x)
    }

    fn commutes(a: &Operator, b: &Operator, tol: f64) -> bool {
        a.commutator(b).unwrap().matrix().camax() < tol
    }

    #[test]
    fn everything_is_hermitian() {
        let s1 = HilbertSpace::new(3, 2, 1).unwrap();
        let s2 = HilbertSpace::new(2, 2, 2).unwrap();
        let p = params();
        for t in [0.0, 0.37, 5.1, -2.2] {
            for h in [
                exact_interaction(s1, &p, t).unwrap(),
                rotating_frame_one_atom(s1, &p, t).unwrap(),
                exact_n_atoms(s2, &p, t).unwrap(),
                many_atom_rf(s2, &p, t).unwrap(),
            ] {
                assert!(h.is_hermitian(1e-12));
            }
        }
        for h in [
            dispersive_one_atom(s1, &p).unwrap(),
            beam_splitter(s1, &p).unwrap(),
            nonlinear_one_atom(s1, &p).unwrap(),
            qbs(s1, &p).unwrap(),
            aqbs(s2, &p, 2).unwrap(),
            dispersive_n_atoms(s2, &p).unwrap(),
            many_atom_effective(s2, &p, true).unwrap(),
            op_o(s2, false),
        ] {
            assert!(h.is_hermitian(1e-12));
        }
    }

    #[test]
    fn exact_interaction_at_zero() {
        let s = HilbertSpace::new(2, 2, 1).unwrap();
        let p = PhysicalParams::new(0.7, 3.0, 0.0);
        let h = exact_interaction(s, &p, 0.0).unwrap();
        let a = crate::hilbert::annihilator(s, Mode::A) + crate::hilbert::annihilator(s, Mode::B);
        let seg = atomic_op(s, AtomicKind::SigmaEg, 0).unwrap();
        let x = &(&a * &seg) * 0.7;
        let expected = &x + &x.adjoint();
        assert!((h - expected).matrix().camax() < 1e-15);
    }

    #[test]
    fn excitation_conservation_depends_on_drive() {
        let s = HilbertSpace::new(3, 3, 1).unwrap();
        let n_exc = &total_number(s) + &atomic_op(s, AtomicKind::SigmaEe, 0).unwrap();
        let undriven = PhysicalParams::new(1.0, 5.0, 0.0);
        for t in [0.0, 0.3, 1.7] {
            assert!(commutes(&exact_interaction(s, &undriven, t).unwrap(), &n_exc, 1e-12));
        }
        let driven = PhysicalParams::new(1.0, 5.0, 0.5);
        assert!(exact_interaction(s, &driven, 0.3).unwrap().commutator(&n_exc).unwrap().norm() > 0.1);
    }

    #[test]
    fn n_atom_model_reduces_to_one_atom_with_flipped_detuning() {
        let s = HilbertSpace::new(2, 2, 1).unwrap();
        let p = params().with_epsilon(0.0);
        let flipped = PhysicalParams { delta: -p.delta, ..p };
        for t in [0.0, 0.11, 0.9, 3.3] {
            let a = exact_n_atoms(s, &p, t).unwrap();
            let b = exact_interaction(s, &flipped, t).unwrap();
            assert!((a - b).matrix().camax() < 1e-13);
        }
        assert!(matches!(exact_interaction(HilbertSpace::new(1, 1, 2).unwrap(), &p, 0.0), Err(Error::AtomCountMismatch { .. })));
    }

    #[test]
    fn epsilon_term_vanishes_on_ground() {
        let s = HilbertSpace::new(0, 0, 3).unwrap();
        let p = params();
        let h = exact_n_atoms(s, &PhysicalParams { omega_rabi: 0.0, ..p }, 0.4).unwrap();
        let g = coherent_state(s, c(0.0), c(0.0), &AtomicState::Ground).unwrap();
        assert!(h.apply(&g).unwrap().norm() < 1e-15);
    }

    #[test]
    fn dispersive_sectors() {
        let s = HilbertSpace::new(2, 2, 1).unwrap();
        let p = PhysicalParams::new(1.0, 4.0, 0.0);
        let chi = 0.25;
        let h = dispersive_one_atom(s, &p).unwrap();
        let o = field_o(s, false);
        for i in 0..s.field_dim() {
            for j in 0..s.field_dim() {
                let e_block = h.matrix()[(2 * i + 1, 2 * j + 1)];
                let g_block = h.matrix()[(2 * i, 2 * j)];
                let diag = if i == j { 2.0 * chi } else { 0.0 };
                assert!((e_block - o[(i, j)] * chi - diag).norm() < 1e-15);
                assert!((g_block + o[(i, j)] * chi).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn microwave_chi() {
        let two_pi = 2.0 * PI;
        let p = PhysicalParams::new(two_pi * 47e3, two_pi * 235e3, two_pi * 47e3);
        assert_relative_eq!(p.chi().unwrap(), two_pi * 9.4e3, max_relative = 1e-12);
        let opt = PhysicalParams::new(two_pi * 16e6, two_pi * 80e6, two_pi * 16e6);
        assert_relative_eq!(opt.mu().unwrap(), two_pi * 0.32e6, max_relative = 1e-12);
    }

    #[test]
    fn beam_splitter_one_photon_block() {
        let s = HilbertSpace::new(2, 2, 0).unwrap();
        let p = PhysicalParams::new(1.0, 2.0, 1.0);
        let h = beam_splitter(s, &p).unwrap();
        assert!(commutes(&h, &total_number(s), 1e-14));
        let (i10, i01) = (s.index(1, 0, 0), s.index(0, 1, 0));
        let block = DMatrix::from_fn(2, 2, |r, c| {
            let idx = [i10, i01];
            h.matrix()[(idx[r], idx[c])]
        });
        assert!((block.clone() - DMatrix::from_element(2, 2, c(0.5))).camax() < 1e-15);
        let ev = Spectral::new(&block).eigenvalues();
        assert!(ev[0].abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
        let vac = StateVector::fock(s, 0, 0, 0).unwrap();
        assert!(h.apply(&vac).unwrap().norm() < 1e-15);
    }

    #[test]
    fn rotating_frame_averages_to_zero() {
        let s = HilbertSpace::new(1, 1, 1).unwrap();
        let p = params();
        let h0 = rotating_frame_one_atom(s, &p, 0.0).unwrap();
        let o = op_o(s, true);
        let sx = atomic_op(s, AtomicKind::SigmaPm, 0).unwrap() + atomic_op(s, AtomicKind::SigmaMp, 0).unwrap();
        assert!((h0 - &(&o * &sx) * p.chi().unwrap()).matrix().camax() < 1e-14);

        // Midpoint quadrature over one period 2π/(2Ω).
        let period = PI / p.omega_rabi;
        let n = 400;
        let mut acc = DMatrix::<C64>::zeros(s.total_dim(), s.total_dim());
        for k in 0..n {
            let t = (k as f64 + 0.5) * period / n as f64;
            acc += rotating_frame_one_atom(s, &p, t).unwrap().matrix();
        }
        assert!((acc / c(n as f64)).camax() < 1e-12);
    }

    #[test]
    fn o_operator() {
        let s = HilbertSpace::new(3, 3, 0).unwrap();
        let vac = StateVector::fock(s, 0, 0, 0).unwrap();
        assert_eq!(op_o(s, true).apply(&vac).unwrap(), vac);
        assert!(op_o(s, false).apply(&vac).unwrap().norm() == 0.0);
        let (i10, i01) = (s.index(1, 0, 0), s.index(0, 1, 0));
        let o = op_o(s, true);
        let block = DMatrix::from_fn(2, 2, |r, cc| o.matrix()[([i10, i01][r], [i10, i01][cc])]);
        let ev = Spectral::new(&block).eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn nonlinear_sectors() {
        let s = HilbertSpace::new(2, 2, 1).unwrap();
        let p = params();
        let mu = p.mu().unwrap();
        let h = nonlinear_one_atom(s, &p).unwrap();
        assert!(commutes(&h, &total_number(s), 1e-13));
        let o2 = field_o(s, true).pow(2);
        let id = DMatrix::<C64>::identity(s.field_dim(), s.field_dim());
        for (amps, sign) in [(crate::hilbert::plus_amplitudes(), 1.0), (crate::hilbert::minus_amplitudes(), -1.0)] {
            let v = nalgebra::DVector::from_column_slice(&amps);
            let proj = &v * v.adjoint();
            let lhs = h.matrix() * id.kronecker(&proj);
            let rhs = o2.kronecker(&proj) * c(sign * mu);
            assert!((lhs - rhs).camax() < 1e-13);
        }
    }

    #[test]
    fn quadratic_forms_commute() {
        let s = HilbertSpace::new(3, 3, 0).unwrap();
        let p = params();
        let ops = [
            beam_splitter(s, &p).unwrap(),
            qbs(s, &p).unwrap(),
            aqbs(s, &p, 3).unwrap(),
            op_o(s, true),
        ];
        for a in &ops {
            for b in &ops {
                assert!(commutes(a, b, 1e-10));
            }
        }
        assert_eq!(aqbs(s, &p, 1).unwrap(), qbs(s, &p).unwrap());
        let e1 = Spectral::new(qbs(s, &p).unwrap().matrix()).eigenvalues();
        let e3 = Spectral::new(aqbs(s, &p, 3).unwrap().matrix()).eigenvalues();
        for (x, y) in e1.iter().zip(&e3) {
            assert_relative_eq!(3.0 * x, *y, max_relative = 1e-12);
        }
    }

    #[test]
    fn many_atom_effective_amplifies_on_plus_states() {
        let s = HilbertSpace::new(4, 4, 3).unwrap();
        let p = params().with_atoms(3);
        let h = many_atom_effective(s, &p, true).unwrap();
        let psi = coherent_state(s, C64::new(0.3, 0.1), c(-0.2), &AtomicState::Plus).unwrap();
        let lhs = h.apply(&psi).unwrap();
        let rhs = aqbs(s, &p, 3).unwrap().apply(&psi).unwrap();
        assert!((lhs.amplitudes() - rhs.amplitudes()).norm() < 1e-13);
    }

    #[test]
    fn n_atom_dispersive_at_one_atom() {
        let s = HilbertSpace::new(2, 2, 1).unwrap();
        let p = params();
        let chi = p.chi().unwrap();
        let h16 = dispersive_n_atoms(s, &p).unwrap();
        let sz = atomic_op(s, AtomicKind::SigmaZ, 0).unwrap();
        let sigma_z_term = &(&op_o(s, false) * &sz) * chi;
        let expected = &(&sigma_z_term * -2.0) + &drive(s, &p).unwrap();
        assert!((h16 - expected).matrix().camax() < 1e-14);
    }

    #[test]
    fn effective_parameter_identities() {
        let p = PhysicalParams::new(1.3, -7.1, 0.45);
        let chi = p.chi().unwrap();
        let mu = p.mu().unwrap();
        assert_relative_eq!(chi * p.delta, p.lambda * p.lambda, max_relative = 4.0 * f64::EPSILON);
        assert_relative_eq!(2.0 * p.omega_rabi * mu, chi * chi, max_relative = 4.0 * f64::EPSILON);
        assert_eq!(PhysicalParams::new(1.0, 0.0, 1.0).chi(), Err(Error::ZeroDetuning));
        assert_eq!(PhysicalParams::new(1.0, 1.0, 0.0).mu(), Err(Error::ZeroDrive));
        assert_relative_eq!(params().epsilon().unwrap(), 2.0 / 12.5);
    }
}
