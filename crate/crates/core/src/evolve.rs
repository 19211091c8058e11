//! State propagation.
//!
//! Static generators are exponentiated through their eigendecomposition.
//! Time-dependent generators are integrated with classic fixed-step RK4; the
//! default step resolves the fastest phase with 50 steps per period and is
//! shortened further when the generator norm would otherwise let the norm
//! drift past its budget.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hamiltonian::TimeDependentHamiltonian;
use crate::hilbert::{HilbertSpace, Operator, StateVector};
use crate::spectral::Spectral;
use crate::C64;

/// Norm drift above which a time-dependent run is rejected.
pub const NORM_DRIFT_TOL: f64 = 1e-6;

/// Steps per period of the fastest phase, the coarsest default.
pub const STEPS_PER_PERIOD: f64 = 50.0;

/// Compressed sparse rows.
#[derive(Clone, Debug)]
pub(crate) struct Csr {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl Csr {
    pub(crate) fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut indptr = Vec::with_capacity(m.nrows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != C64::from(0.0) {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { indptr, indices, values }
    }

    /// `y += c·A·x`
    pub(crate) fn mul_acc(&self, x: &[C64], y: &mut [C64], c: C64) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::from(0.0);
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yi += c * acc;
        }
    }
}

fn check_hermitian(h: &Operator) -> Result<()> {
    let scale = 1.0 + h.matrix().camax();
    let err = h.hermiticity_error();
    if err > 1e-12 * scale {
        return Err(Error::NotHermitian(err));
    }
    Ok(())
}

/// Cached eigendecomposition of a static Hermitian generator.
#[derive(Clone, Debug)]
pub struct StaticPropagator {
    space: HilbertSpace,
    spectral: Spectral,
}

impl StaticPropagator {
    pub fn new(h: &Operator) -> Result<Self> {
        check_hermitian(h)?;
        Ok(Self { space: h.space(), spectral: Spectral::new(h.matrix()) })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectral.eigenvalues()
    }

    /// `e^{−iHt}ψ`.
    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        if psi.space() != self.space {
            return Err(Error::SpaceMismatch);
        }
        StateVector::from_amplitudes(self.space, self.spectral.evolve(psi.amplitudes(), t))
    }

    /// The dense propagator `e^{−iHt}`.
    pub fn unitary(&self, t: f64) -> Operator {
        let m = self.spectral.matrix_fn(|e| C64::from_polar(1.0, -e * t));
        Operator::from_matrix(self.space, m).expect("same dimension")
    }
}

/// `e^{−iHt}ψ₀` by eigendecomposition.
pub fn propagate_static(h: &Operator, psi0: &StateVector, t: f64) -> Result<StateVector> {
    if h.space() != psi0.space() {
        return Err(Error::SpaceMismatch);
    }
    StaticPropagator::new(h)?.evolve(psi0, t)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOptions {
    /// Step size; `None` picks [`default_step`].
    pub dt: Option<f64>,
    /// Accept a step above the default bound, with a warning.
    pub allow_coarse_step: bool,
    /// Keep every `stride`-th state in a [`Trajectory`].
    pub stride: usize,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { dt: None, allow_coarse_step: false, stride: 1 }
    }
}

impl StepOptions {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt: Some(dt), ..Self::default() }
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }
}

/// Largest step accepted without override.
pub fn step_limit(fast_frequency: f64) -> f64 {
    if fast_frequency <= 0.0 {
        f64::INFINITY
    } else {
        2.0 * PI / fast_frequency / STEPS_PER_PERIOD
    }
}

/// Norm loss budget of a default-step run, well inside [`NORM_DRIFT_TOL`].
const DRIFT_BUDGET: f64 = 1e-7;

/// Step at which RK4 loses at most [`DRIFT_BUDGET`] of norm over `span`.
///
/// RK4 shrinks a component of frequency `E` by about `(Eh)⁶/144` per step,
/// so `n` steps cost `span·E⁶h⁵/144`.
pub fn accuracy_step(norm_bound: f64, span: f64) -> f64 {
    if norm_bound <= 0.0 || span <= 0.0 {
        return f64::INFINITY;
    }
    (144.0 * DRIFT_BUDGET / (span * norm_bound.powi(6))).powf(0.2)
}

/// Default step: the phase-resolution bound, tightened when the generator
/// norm and the run length call for it.
pub fn default_step(h: &TimeDependentHamiltonian, span: f64) -> f64 {
    step_limit(h.fast_frequency()).min(accuracy_step(h.norm_bound(), span))
}

fn resolve_dt(h: &TimeDependentHamiltonian, opts: &StepOptions, span: f64) -> Result<f64> {
    let limit = step_limit(h.fast_frequency());
    match opts.dt {
        None => {
            let dt = default_step(h, span);
            if dt.is_finite() {
                Ok(dt)
            } else {
                Ok(span.max(f64::MIN_POSITIVE))
            }
        }
        Some(dt) if !(dt > 0.0) || !dt.is_finite() => Err(Error::InvalidArgument(format!("step {dt} must be positive"))),
        Some(dt) if dt > limit => {
            if opts.allow_coarse_step {
                log::warn!("time step {dt:e} exceeds the default bound {limit:e}");
                Ok(dt)
            } else {
                Err(Error::StepTooLarge { dt, limit })
            }
        }
        Some(dt) => Ok(dt),
    }
}

/// Number of equal steps of size at most `dt` covering `span`.
fn step_count(span: f64, dt: f64) -> usize {
    ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Sparse RK4 integrator for `i dψ/dt = H(t)ψ`.
pub(crate) struct Rk4 {
    static_part: Csr,
    oscillating: Vec<(f64, Csr, Csr)>,
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl Rk4 {
    pub(crate) fn new(h: &TimeDependentHamiltonian) -> Self {
        let dim = h.space().total_dim();
        let oscillating = h
            .oscillating_terms()
            .iter()
            .map(|(w, m)| (*w, Csr::from_dense(m.matrix()), Csr::from_dense(&m.matrix().adjoint())))
            .collect();
        let z = vec![C64::from(0.0); dim];
        Self {
            static_part: Csr::from_dense(h.static_part().matrix()),
            oscillating,
            k: [z.clone(), z.clone(), z.clone(), z.clone()],
            tmp: z,
        }
    }

    /// `out = −iH(t)x`
    fn rhs(static_part: &Csr, osc: &[(f64, Csr, Csr)], t: f64, x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::from(0.0));
        let mi = C64::new(0.0, -1.0);
        static_part.mul_acc(x, out, mi);
        for (w, m, md) in osc {
            let ph = C64::from_polar(1.0, w * t);
            m.mul_acc(x, out, mi * ph);
            md.mul_acc(x, out, mi * ph.conj());
        }
    }

    pub(crate) fn step(&mut self, t: f64, h: f64, psi: &mut [C64]) {
        let (sp, osc) = (&self.static_part, &self.oscillating);
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        Self::rhs(sp, osc, t, psi, k1);
        for i in 0..psi.len() {
            tmp[i] = psi[i] + k1[i] * (h / 2.0);
        }
        Self::rhs(sp, osc, t + h / 2.0, tmp, k2);
        for i in 0..psi.len() {
            tmp[i] = psi[i] + k2[i] * (h / 2.0);
        }
        Self::rhs(sp, osc, t + h / 2.0, tmp, k3);
        for i in 0..psi.len() {
            tmp[i] = psi[i] + k3[i] * h;
        }
        Self::rhs(sp, osc, t + h, tmp, k4);
        for i in 0..psi.len() {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }
}

fn norm_deviation(psi: &[C64]) -> f64 {
    (psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs()
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// Largest `|‖ψ‖ − 1|` seen over the run.
    pub norm_drift: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Integrates from 0 to `t_final`, keeping every `stride`-th state.
pub fn propagate_timedep(
    h: &TimeDependentHamiltonian,
    psi0: &StateVector,
    t_final: f64,
    opts: &StepOptions,
) -> Result<Trajectory> {
    if h.space() != psi0.space() {
        return Err(Error::SpaceMismatch);
    }
    if !(t_final >= 0.0) {
        return Err(Error::NegativeArg("t_final"));
    }
    let space = psi0.space();
    let dt_max = resolve_dt(h, opts, t_final)?;
    let stride = opts.stride.max(1);
    let mut traj = Trajectory { times: vec![0.0], states: vec![psi0.clone()], norm_drift: 0.0 };
    if t_final == 0.0 {
        return Ok(traj);
    }
    let n = step_count(t_final, dt_max);
    let dt = t_final / n as f64;
    let mut rk = Rk4::new(h);
    let mut psi: Vec<C64> = psi0.amplitudes().iter().copied().collect();
    let mut drift: f64 = 0.0;
    for k in 0..n {
        rk.step(k as f64 * dt, dt, &mut psi);
        drift = drift.max(norm_deviation(&psi));
        if drift > NORM_DRIFT_TOL {
            return Err(Error::NormDrift(drift));
        }
        if (k + 1) % stride == 0 || k + 1 == n {
            traj.times.push((k + 1) as f64 * dt);
            traj.states.push(StateVector::from_amplitudes(space, DVector::from_column_slice(&psi))?);
        }
    }
    traj.norm_drift = drift;
    Ok(traj)
}

/// Integrates through the increasing sample times `times` and calls
/// `observe(t, ψ(t))` at each, landing exactly on every sample. Returns the
/// largest norm drift.
pub fn propagate_observed(
    h: &TimeDependentHamiltonian,
    psi0: &StateVector,
    times: &[f64],
    opts: &StepOptions,
    mut observe: impl FnMut(f64, &StateVector),
) -> Result<f64> {
    if h.space() != psi0.space() {
        return Err(Error::SpaceMismatch);
    }
    if times.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if times[0] < 0.0 {
        return Err(Error::NegativeArg("sample time"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("sample times must be strictly increasing".into()));
    }
    let space = psi0.space();
    let dt_max = resolve_dt(h, opts, times[times.len() - 1])?;
    let mut rk = Rk4::new(h);
    let mut psi: Vec<C64> = psi0.amplitudes().iter().copied().collect();
    let mut t = 0.0;
    let mut drift: f64 = 0.0;
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let n = step_count(span, dt_max);
            let dt = span / n as f64;
            for k in 0..n {
                rk.step(t + k as f64 * dt, dt, &mut psi);
            }
            drift = drift.max(norm_deviation(&psi));
            if drift > NORM_DRIFT_TOL {
                return Err(Error::NormDrift(drift));
            }
        }
        t = target;
        observe(t, &StateVector::from_amplitudes(space, DVector::from_column_slice(&psi))?);
    }
    Ok(drift)
}

/// Terminal state of a time-dependent run.
pub fn evolve_to(h: &TimeDependentHamiltonian, psi0: &StateVector, t: f64, opts: &StepOptions) -> Result<StateVector> {
    let mut out = None;
    propagate_observed(h, psi0, &[t], opts, |_, s| out = Some(s.clone()))?;
    Ok(out.expect("one sample"))
}

/// Generator of an effective model.
#[derive(Clone, Debug)]
pub enum Generator {
    Static(Operator),
    TimeDependent(TimeDependentHamiltonian),
}

/// Frame in which an effective generator acts.
#[derive(Clone, Debug)]
pub enum Frame {
    /// Same interaction picture as the exact dynamics.
    Interaction,
    /// Rotating with the classical drive `H_cef`: `ψ = e^{−iH_cef t}ψ_eff`.
    Rotating(Operator),
}

#[derive(Clone, Debug)]
pub struct EffectiveModel {
    pub generator: Generator,
    pub frame: Frame,
}

impl EffectiveModel {
    pub fn new(generator: Generator, frame: Frame) -> Self {
        Self { generator, frame }
    }

    pub fn space(&self) -> HilbertSpace {
        match &self.generator {
            Generator::Static(h) => h.space(),
            Generator::TimeDependent(h) => h.space(),
        }
    }

    /// Effective evolution at each of `times`, mapped back to the exact
    /// interaction picture.
    pub fn states(&self, psi0: &StateVector, times: &[f64], opts: &StepOptions) -> Result<Vec<StateVector>> {
        if psi0.space() != self.space() {
            return Err(Error::SpaceMismatch);
        }
        let mut raw = Vec::with_capacity(times.len());
        match &self.generator {
            Generator::Static(h) => {
                let p = StaticPropagator::new(h)?;
                for &t in times {
                    raw.push(p.evolve(psi0, t)?);
                }
            }
            Generator::TimeDependent(h) => {
                let opts = StepOptions { dt: None, ..*opts };
                propagate_observed(h, psi0, times, &opts, |_, s| raw.push(s.clone()))?;
            }
        }
        match &self.frame {
            Frame::Interaction => Ok(raw),
            Frame::Rotating(drive) => {
                if drive.space() != psi0.space() {
                    return Err(Error::SpaceMismatch);
                }
                let p = StaticPropagator::new(drive)?;
                raw.iter().zip(times).map(|(s, &t)| p.evolve(s, t)).collect()
            }
        }
    }
}

fn overlap_sq(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes().dotc(b.amplitudes()).norm_sqr()
}

/// `|⟨ψ_exact(t)|ψ_eff(t)⟩|²` at each sample time.
pub fn fidelity_curve(
    exact: &TimeDependentHamiltonian,
    effective: &EffectiveModel,
    psi0: &StateVector,
    times: &[f64],
    opts: &StepOptions,
) -> Result<Vec<f64>> {
    if exact.space() != effective.space() || exact.space() != psi0.space() {
        return Err(Error::SpaceMismatch);
    }
    let eff = effective.states(psi0, times, opts)?;
    let mut out = Vec::with_capacity(times.len());
    propagate_observed(exact, psi0, times, opts, |_, s| out.push(s.clone()))?;
    Ok(out.iter().zip(&eff).map(|(a, b)| overlap_sq(a, b).min(1.0)).collect())
}

/// `|⟨ψ_exact(t)|ψ_eff(t)⟩|²`.
pub fn fidelity_vs_effective(
    exact: &TimeDependentHamiltonian,
    effective: &EffectiveModel,
    psi0: &StateVector,
    t: f64,
    opts: &StepOptions,
) -> Result<f64> {
    Ok(fidelity_curve(exact, effective, psi0, &[t], opts)?[0])
}
