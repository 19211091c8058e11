//! Entangled coherent states generated by the quadratic beam splitter.
//!
//! `e^{−iμO²t} = V e^{−iμ(2b†b+1)²t} V†` with the 50/50 beam splitter
//! `V = e^{(π/4)(a†b − ab†)}`. `V†` maps `|α, β⟩` to
//! `|(α−β)/√2⟩ ⊗ |(α+β)/√2⟩`, so only mode B sees a Kerr phase. At
//! `t_g = (π/2μ)(r/s)` that phase is `e^{−iμt_g}·e^{−2πi(r/s)m(m+1)}`, which
//! splits the mode-B coherent state into finitely many packets weighted by
//! quadratic Gauss sums.
//!
//! Two points differ from the usual closed-form derivation and are fixed here
//! by the operator algebra: the Kerr-mode seed is `(α+β)/√2`, and the Gauss sums
//! that resolve `e^{−2πi(r/s)m²}` use the pair `(2r, s)` (reduced), not
//! `(r, s)`. That closed form is still available through
//! [`published_closed_form`] for comparison.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    coherent_amplitudes, ladder, poisson_tail, DensityMatrix, HilbertSpace, Mode, Operator,
    StateVector, TRUNCATION_ERROR_TAIL, TRUNCATION_WARN_TAIL,
};
use crate::spectral::Spectral;
use crate::C64;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn check_pair(r: u64, s: u64) -> Result<()> {
    if r == 0 || s == 0 {
        return Err(Error::InvalidArgument(format!("r = {r} and s = {s} must be positive")));
    }
    if gcd(r, s) != 1 {
        return Err(Error::NotCoprime { r, s });
    }
    Ok(())
}

/// Number of packets: `2s` when `r` and `s` are both odd, `s` otherwise.
pub fn packet_count(r: u64, s: u64) -> Result<usize> {
    check_pair(r, s)?;
    Ok(if r % 2 == 1 && s % 2 == 1 { 2 * s as usize } else { s as usize })
}

/// `a_p = (1/j) Σ_q e^{−iπ(r/s)q² + 2πi(p/j)q}` for `p = 0..j`.
pub fn gauss_coefficients(r: u64, s: u64) -> Result<Vec<C64>> {
    let j = packet_count(r, s)? as u64;
    // Phases reduced in integer arithmetic: π r q²/s mod 2π and 2π p q/j mod 2π.
    let quad: Vec<f64> = (0..j).map(|q| -PI * ((r * q % (2 * s)) * q % (2 * s)) as f64 / s as f64).collect();
    Ok((0..j)
        .map(|p| {
            let sum: C64 = (0..j)
                .map(|q| C64::from_polar(1.0, quad[q as usize] + 2.0 * PI * (p * q % j) as f64 / j as f64))
                .sum();
            sum / j as f64
        })
        .collect())
}

/// Rational evolution time `t_g = (π/2μ)(r/s)` and its packet count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcsSchedule {
    r: u64,
    s: u64,
    j: usize,
    t_g: f64,
    mu: f64,
}

impl EcsSchedule {
    pub fn new(r: u64, s: u64, mu: f64) -> Result<Self> {
        let j = packet_count(r, s)?;
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!("μ = {mu} must be positive")));
        }
        if !(is_prime(r) && is_prime(s)) {
            log::warn!("r = {r}, s = {s} are coprime but not both prime");
        }
        Ok(Self { r, s, j, t_g: PI / (2.0 * mu) * (r as f64 / s as f64), mu })
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn s(&self) -> u64 {
        self.s
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn t_g(&self) -> f64 {
        self.t_g
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `μt_g = (π/2)(r/s)`, without the rounding of `μ·t_g`.
    pub fn phase(&self) -> f64 {
        PI / 2.0 * (self.r as f64 / self.s as f64)
    }

    /// Reduced pair `(R, S)` with `R/S = 2r/s`.
    pub fn kerr_pair(&self) -> (u64, u64) {
        let g = gcd(2 * self.r, self.s);
        (2 * self.r / g, self.s / g)
    }
}

/// Packet weights `c_p` and labels `y_p` with
/// `e^{−iμ(2b†b+1)²t_g}|β_v⟩ = Σ_p c_p |y_p⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct KerrPackets {
    pub weights: Vec<C64>,
    pub labels: Vec<C64>,
    /// `θ_p` with `y_p = β_v e^{−2iθ_p}`.
    pub angles: Vec<f64>,
}

pub fn kerr_packets(beta_v: C64, schedule: &EcsSchedule) -> KerrPackets {
    let (rr, ss) = schedule.kerr_pair();
    let a = gauss_coefficients(rr, ss).expect("reduced pair is coprime");
    let jj = a.len();
    let phase = schedule.phase();
    let global = C64::from_polar(1.0, -phase);
    let angles: Vec<f64> = (0..jj).map(|p| 2.0 * phase + PI * p as f64 / jj as f64).collect();
    KerrPackets {
        weights: a.iter().map(|c| c * global).collect(),
        labels: angles.iter().map(|th| beta_v * C64::from_polar(1.0, -2.0 * th)).collect(),
        angles,
    }
}

/// `e^{−iμ(2m+1)²t}|β⟩` on one mode truncated at `n_max`.
pub fn kerr_phase_state(beta: C64, mu: f64, t: f64, n_max: usize) -> DVector<C64> {
    let (amps, _) = coherent_amplitudes(beta, n_max);
    DVector::from_iterator(
        n_max + 1,
        amps.iter().enumerate().map(|(m, c)| {
            let k = (2 * m + 1) as f64;
            c * C64::from_polar(1.0, -mu * k * k * t)
        }),
    )
}

/// `Σ_p c_p |y_p⟩` on one mode truncated at `n_max`.
pub fn kerr_packet_state(packets: &KerrPackets, n_max: usize) -> DVector<C64> {
    let mut out = DVector::zeros(n_max + 1);
    for (w, y) in packets.weights.iter().zip(&packets.labels) {
        out += DVector::from_vec(coherent_amplitudes(*y, n_max).0) * *w;
    }
    out
}

/// `ψ(t_g) = Σ_p c_p |α_f(p)⟩ ⊗ |β_f(p)⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcsDecomposition {
    pub amplitudes: Vec<C64>,
    pub alpha_f: Vec<C64>,
    pub beta_f: Vec<C64>,
    pub theta: Vec<f64>,
    /// Seed of the Kerr mode after `V†`.
    pub beta_v: C64,
    /// Mode-A amplitude after `V†`, untouched by the Kerr phase.
    pub x: C64,
}

impl EcsDecomposition {
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }
}

/// Exact packet decomposition of `e^{−iμO²t_g}|α, β⟩`.
pub fn ecs_decomposition(alpha: C64, beta: C64, schedule: &EcsSchedule) -> EcsDecomposition {
    let x = (alpha - beta) * FRAC_1_SQRT_2;
    let beta_v = (alpha + beta) * FRAC_1_SQRT_2;
    let k = kerr_packets(beta_v, schedule);
    EcsDecomposition {
        alpha_f: k.labels.iter().map(|y| (x + y) * FRAC_1_SQRT_2).collect(),
        beta_f: k.labels.iter().map(|y| (y - x) * FRAC_1_SQRT_2).collect(),
        amplitudes: k.weights,
        theta: k.angles,
        beta_v,
        x,
    }
}

/// The reference closed form: `a_p^{(r,s)}`, `θ_p = μt_g + πp/j` and
/// `α_f = 2e^{−iθ_p}[α sin θ_p − β cos θ_p]`,
/// `β_f = 2e^{−iθ_p}[α cos θ_p − β sin θ_p]`. Not asserted to be correct.
pub fn published_closed_form(alpha: C64, beta: C64, schedule: &EcsSchedule) -> EcsDecomposition {
    let a = gauss_coefficients(schedule.r, schedule.s).expect("schedule pair is coprime");
    let j = schedule.j as f64;
    let theta: Vec<f64> = (0..schedule.j).map(|p| schedule.phase() + PI * p as f64 / j).collect();
    let pre = |th: f64| C64::from_polar(2.0, -th);
    EcsDecomposition {
        alpha_f: theta.iter().map(|&th| pre(th) * (alpha * th.sin() - beta * th.cos())).collect(),
        beta_f: theta.iter().map(|&th| pre(th) * (alpha * th.cos() - beta * th.sin())).collect(),
        amplitudes: a,
        theta,
        beta_v: (beta - alpha) * FRAC_1_SQRT_2,
        x: (beta + alpha) * FRAC_1_SQRT_2,
    }
}

fn require_field_space(space: HilbertSpace) -> Result<()> {
    if space.n_atoms() != 0 {
        return Err(Error::AtomCountMismatch { expected: 0, found: space.n_atoms() });
    }
    Ok(())
}

/// Errors when a mode of mean photon number `mean` is poorly resolved.
fn check_tail(mean: f64, n_max: usize) -> Result<()> {
    let tail = poisson_tail(mean, n_max);
    if tail > TRUNCATION_ERROR_TAIL {
        return Err(Error::Truncation { tail, n_max });
    }
    if tail > TRUNCATION_WARN_TAIL {
        log::warn!("Poisson tail {tail:e} beyond n_max = {n_max}");
    }
    Ok(())
}

/// `Σ_p c_p |α_f(p)⟩ ⊗ |β_f(p)⟩` on a field-only space, unnormalized.
pub fn decomposition_state(space: HilbertSpace, d: &EcsDecomposition) -> Result<StateVector> {
    require_field_space(space)?;
    let mut amps = DVector::<C64>::zeros(space.total_dim());
    for ((c, a), b) in d.amplitudes.iter().zip(&d.alpha_f).zip(&d.beta_f) {
        let va = DVector::from_vec(coherent_amplitudes(*a, space.n_max_a()).0);
        let vb = DVector::from_vec(coherent_amplitudes(*b, space.n_max_b()).0);
        amps += va.kronecker(&vb) * *c;
    }
    StateVector::from_amplitudes(space, amps)
}

/// Hermitian generator `K = i(π/4)(a†b − ab†)` with `V = e^{−iK}`.
fn bs_generator(space: HilbertSpace) -> DMatrix<C64> {
    // Filled entry by entry; dense products of the ladder operators cost
    // seconds at the cutoffs used for phase-space pictures.
    let (na, nb) = (space.n_max_a() + 1, space.n_max_b() + 1);
    let w = C64::new(0.0, PI / 4.0);
    let mut g = DMatrix::zeros(na * nb, na * nb);
    for i in 0..na - 1 {
        for j in 1..nb {
            // a†b |i, j⟩ = √((i+1)j) |i+1, j−1⟩ and ab† is its adjoint.
            let amp = w * ((i + 1) as f64 * j as f64).sqrt();
            let (from, to) = (i * nb + j, (i + 1) * nb + j - 1);
            g[(to, from)] += amp;
            g[(from, to)] -= amp;
        }
    }
    g
}

/// `V = e^{(π/4)(a†b − ab†)}`, identity on atoms.
pub fn bs_unitary(space: HilbertSpace) -> Operator {
    let v = Spectral::new(&bs_generator(space)).matrix_fn(|e| C64::from_polar(1.0, -e));
    Operator::from_field(space, &v)
}

/// Single-mode displacement `D(γ) = e^{γa† − γ*a}` at cutoff `n_max`.
pub fn displacement_matrix(gamma: C64, n_max: usize) -> DMatrix<C64> {
    let a = ladder(n_max);
    // D = e^{−iG} with G = i(γa† − γ*a) Hermitian.
    let g = (a.adjoint() * gamma - &a * gamma.conj()) * C64::new(0.0, 1.0);
    Spectral::new(&g).matrix_fn(|e| C64::from_polar(1.0, -e))
}

/// `D(γ)` on one mode, identity elsewhere.
pub fn displacement(space: HilbertSpace, mode: Mode, gamma: C64) -> Operator {
    let d = displacement_matrix(gamma, space.n_max(mode));
    let field = match mode {
        Mode::A => d.kronecker(&DMatrix::identity(space.n_max_b() + 1, space.n_max_b() + 1)),
        Mode::B => DMatrix::identity(space.n_max_a() + 1, space.n_max_a() + 1).kronecker(&d),
    };
    Operator::from_field(space, &field)
}

/// `e^{−iμ(2b†b+1)²t}`, diagonal in the mode-B Fock basis.
pub fn kerr_mode_propagator(space: HilbertSpace, mu: f64, t: f64) -> Operator {
    let nb = space.n_max_b() + 1;
    let diag = DVector::from_fn(nb, |m, _| {
        let k = (2 * m + 1) as f64;
        C64::from_polar(1.0, -mu * k * k * t)
    });
    let field = DMatrix::identity(space.n_max_a() + 1, space.n_max_a() + 1).kronecker(&DMatrix::from_diagonal(&diag));
    Operator::from_field(space, &field)
}

/// `e^{−iμO²t_g}|α, β⟩` assembled in the beam-splitter frame and mapped back
/// with `V`, then normalized.
pub fn ecs_state(space: HilbertSpace, alpha: C64, beta: C64, schedule: &EcsSchedule) -> Result<StateVector> {
    require_field_space(space)?;
    let mean = alpha.norm_sqr() + beta.norm_sqr();
    check_tail(mean, space.n_max_a())?;
    check_tail(mean, space.n_max_b())?;
    let x = (alpha - beta) * FRAC_1_SQRT_2;
    let beta_v = (alpha + beta) * FRAC_1_SQRT_2;
    let mode_a = DVector::from_vec(coherent_amplitudes(x, space.n_max_a()).0);
    let mode_b = kerr_packet_state(&kerr_packets(beta_v, schedule), space.n_max_b());
    let rotated = mode_a.kronecker(&mode_b);
    let amps = Spectral::new(&bs_generator(space)).evolve(&rotated, 1.0);
    let mut psi = StateVector::from_amplitudes(space, amps)?;
    psi.normalize();
    Ok(psi)
}

/// Agreement of the reference closed form with the exact construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub packets: usize,
    /// `‖Σ_p a_p|α_f⟩|β_f⟩‖` before normalization.
    pub raw_norm: f64,
    /// Fidelity with the exact state; `None` when its labels do not
    /// fit in the truncation.
    pub fidelity: Option<f64>,
}

pub fn consistency_report(space: HilbertSpace, alpha: C64, beta: C64, schedule: &EcsSchedule) -> Result<ConsistencyReport> {
    let exact = ecs_state(space, alpha, beta, schedule)?;
    let reference = published_closed_form(alpha, beta, schedule);
    let fits = reference.alpha_f.iter().chain(&reference.beta_f).all(|z| {
        let n = space.n_max_a().min(space.n_max_b());
        poisson_tail(z.norm_sqr(), n) <= TRUNCATION_ERROR_TAIL
    });
    let state = decomposition_state(space, &reference)?;
    let raw_norm = state.norm();
    let fidelity = if fits && raw_norm > 0.0 {
        Some((exact.inner(&state)?.norm_sqr() / (raw_norm * raw_norm)).min(1.0))
    } else {
        None
    };
    Ok(ConsistencyReport { packets: reference.len(), raw_norm, fidelity })
}

/// Closed-form `ρ_a = Σ_{p,p′} c_p c*_{p′} ⟨β_f(p′)|β_f(p)⟩ |α_f(p)⟩⟨α_f(p′)|`
/// on mode A truncated at `n_max`, normalized to unit trace.
pub fn reduced_rho_a(d: &EcsDecomposition, n_max: usize) -> DensityMatrix {
    let vecs: Vec<DVector<C64>> = d.alpha_f.iter().map(|a| DVector::from_vec(coherent_amplitudes(*a, n_max).0)).collect();
    let mut rho = DMatrix::<C64>::zeros(n_max + 1, n_max + 1);
    for p in 0..d.len() {
        for q in 0..d.len() {
            let (b, bq) = (d.beta_f[p], d.beta_f[q]);
            let overlap = (C64::from(-(b.norm_sqr() + bq.norm_sqr()) / 2.0) + bq.conj() * b).exp();
            let w = d.amplitudes[p] * d.amplitudes[q].conj() * overlap;
            rho += &vecs[p] * vecs[q].adjoint() * w;
        }
    }
    let tr = rho.trace();
    rho /= tr;
    let herm = (&rho + rho.adjoint()) * C64::from(0.5);
    DensityMatrix::from_matrix(herm).expect("trace normalized")
}
