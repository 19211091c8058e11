//! Reduced states, linear entropy, fidelities and Wigner functions.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, HilbertSpace, Mode, StateVector};
use crate::spectral::Spectral;
use crate::C64;

/// Reduced density matrix of one mode of a pure state; the other mode and
/// all atoms are traced out.
pub fn partial_trace_state(psi: &StateVector, keep: Mode) -> Result<DensityMatrix> {
    let space = psi.space();
    let amps = psi.amplitudes();
    let (na, nb, nat) = (space.n_max_a() + 1, space.n_max_b() + 1, space.atomic_dim());
    let norm2 = amps.norm_squared();
    if norm2 == 0.0 {
        return Err(Error::InvalidArgument("zero state".into()));
    }
    let rho = match keep {
        Mode::A => {
            let m = DMatrix::from_fn(na, nb * nat, |i, k| amps[i * nb * nat + k]);
            &m * m.adjoint()
        }
        Mode::B => {
            let mut rho = DMatrix::<C64>::zeros(nb, nb);
            for ia in 0..na {
                let m = DMatrix::from_fn(nb, nat, |j, k| amps[(ia * nb + j) * nat + k]);
                rho += &m * m.adjoint();
            }
            rho
        }
    };
    Ok(DensityMatrix::new_unchecked(rho / C64::from(norm2)))
}

/// Reduced density matrix of one mode of a mixed state on `space`.
pub fn partial_trace(rho: &DensityMatrix, space: HilbertSpace, keep: Mode) -> Result<DensityMatrix> {
    if rho.dim() != space.total_dim() {
        return Err(Error::SpaceMismatch);
    }
    let (na, nb, nat) = (space.n_max_a() + 1, space.n_max_b() + 1, space.atomic_dim());
    let m = rho.matrix();
    let out = match keep {
        Mode::A => DMatrix::from_fn(na, na, |i, j| {
            (0..nb * nat).map(|k| m[(i * nb * nat + k, j * nb * nat + k)]).sum()
        }),
        Mode::B => DMatrix::from_fn(nb, nb, |i, j| {
            let mut acc = C64::from(0.0);
            for ia in 0..na {
                for k in 0..nat {
                    acc += m[((ia * nb + i) * nat + k, (ia * nb + j) * nat + k)];
                }
            }
            acc
        }),
    };
    Ok(DensityMatrix::new_unchecked(out))
}

/// `ξ = 1 − Tr ρ²`.
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    1.0 - rho.purity()
}

/// `Σ n ρ_nn` for a single-mode state.
pub fn mean_photon(rho: &DensityMatrix) -> f64 {
    (0..rho.dim()).map(|n| n as f64 * rho.matrix()[(n, n)].re).sum()
}

/// `|⟨x|y⟩|²` for normalized pure states.
pub fn fidelity_pure(x: &StateVector, y: &StateVector) -> Result<f64> {
    let ov = x.inner(y)?;
    Ok((ov.norm_sqr() / (x.norm() * y.norm()).powi(2)).min(1.0))
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn fidelity_pure_mixed(psi: &StateVector, rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != psi.amplitudes().len() {
        return Err(Error::SpaceMismatch);
    }
    let v = psi.amplitudes();
    Ok((v.dotc(&(rho.matrix() * v)).re / v.norm_squared()).clamp(0.0, 1.0))
}

fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::from(0.5)
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity_mixed(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::SpaceMismatch);
    }
    let sqrt_rho = Spectral::new(&hermitize(rho.matrix())).matrix_fn(|e| C64::from(e.max(0.0).sqrt()));
    let inner = hermitize(&(&sqrt_rho * sigma.matrix() * &sqrt_rho));
    let tr: f64 = Spectral::new(&inner).eigenvalues().iter().map(|e| e.max(0.0).sqrt()).sum();
    Ok((tr * tr).min(1.0))
}

/// Rectangular phase-space grid; `q = Re γ`, `p = Im γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nq: usize,
    pub np: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::square(8.0, 161)
    }
}

impl GridSpec {
    /// `[−half, half]²` with `n` points per axis.
    pub fn square(half: f64, n: usize) -> Self {
        Self { q_min: -half, q_max: half, p_min: -half, p_max: half, nq: n, np: n }
    }

    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![min];
        }
        (0..n).map(|k| min + (max - min) * k as f64 / (n - 1) as f64).collect()
    }

    fn step(min: f64, max: f64, n: usize) -> f64 {
        if n > 1 {
            (max - min) / (n - 1) as f64
        } else {
            0.0
        }
    }
}

/// Standard deviation of a coherent state along either quadrature.
pub const COHERENT_SIGMA: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// `w[i][k]` is `W(q[i] + i p[k])`.
    pub w: Vec<Vec<f64>>,
    pub cell_area: f64,
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

impl WignerGrid {
    /// Riemann sum `Σ W · ΔqΔp`, reduced pairwise in a fixed order.
    pub fn normalization(&self) -> f64 {
        let flat: Vec<f64> = self.w.iter().flatten().copied().collect();
        pairwise_sum(&flat) * self.cell_area
    }

    pub fn max(&self) -> f64 {
        self.w.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.w.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `⟨m|D(β)|n⟩` for `m, n ≤ n_max`, row-major in `m`.
///
/// Uses `⟨n+k|D(β)|n⟩ = β^k e^{−|β|²/2} √(n!/(n+k)!) L_n^{(k)}(|β|²)` with the
/// associated Laguerre recurrence carried in the scaled variable, which stays
/// accurate far from the origin.
fn displacement_elements(beta: C64, n_max: usize, out: &mut [C64]) {
    let d = n_max + 1;
    let x = beta.norm_sqr();
    let flip = if x > 0.0 { -beta.conj() / beta } else { C64::from(0.0) };
    // Start value e^{−x/2}|β|^k/√k! in logs to avoid underflow of the prefactor.
    let mut log_h0 = -x / 2.0;
    let log_abs = if x > 0.0 { 0.5 * x.ln() } else { f64::NEG_INFINITY };
    let unit = if x > 0.0 { beta / beta.norm() } else { C64::from(1.0) };
    let mut phase = C64::from(1.0);
    for k in 0..d {
        if k > 0 {
            log_h0 += log_abs - 0.5 * (k as f64).ln();
            phase *= unit;
        }
        let kf = k as f64;
        let mut prev = 0.0;
        let mut cur = log_h0.exp();
        let mut lower_phase = if k == 0 { C64::from(1.0) } else { flip.powu(k as u32) };
        if k > 0 && x == 0.0 {
            lower_phase = C64::from(0.0);
        }
        for n in 0..d - k {
            let upper = phase * cur;
            out[(n + k) * d + n] = upper;
            if k > 0 {
                out[n * d + n + k] = upper * lower_phase;
            }
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 + kf - x) * cur - (nf * (nf + kf)).sqrt() * prev) / ((nf + 1.0) * (nf + 1.0 + kf)).sqrt();
            prev = cur;
            cur = next;
        }
    }
}

/// `W(γ) = (2/π) Σ_{n,m} ρ_{nm} (−1)^n ⟨m|D(2γ)|n⟩`, the displaced-parity
/// form. A coherent state `|α⟩` peaks at `γ = α` with height `2/π`.
pub fn wigner(rho: &DensityMatrix, spec: &GridSpec) -> Result<WignerGrid> {
    if spec.nq == 0 || spec.np == 0 {
        return Err(Error::EmptyGrid);
    }
    let (dq, dp) = (
        GridSpec::step(spec.q_min, spec.q_max, spec.nq),
        GridSpec::step(spec.p_min, spec.p_max, spec.np),
    );
    if dq > COHERENT_SIGMA / 4.0 || dp > COHERENT_SIGMA / 4.0 {
        log::warn!("Wigner grid too coarse: cell {dq}×{dp} exceeds σ/4 = {}", COHERENT_SIGMA / 4.0);
    }
    let q = GridSpec::axis(spec.q_min, spec.q_max, spec.nq);
    let p = GridSpec::axis(spec.p_min, spec.p_max, spec.np);
    let d = rho.dim();
    let n_max = d - 1;
    // ρ_{nm}(−1)^n laid out to match the displacement rows m.
    let signed: Vec<C64> = (0..d * d)
        .map(|k| {
            let (m, n) = (k / d, k % d);
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            rho.matrix()[(n, m)] * s
        })
        .collect();
    let w = q
        .par_iter()
        .map(|&qi| {
            let mut buf = vec![C64::from(0.0); d * d];
            p.iter()
                .map(|&pk| {
                    displacement_elements(C64::new(2.0 * qi, 2.0 * pk), n_max, &mut buf);
                    let s: f64 = buf.iter().zip(&signed).map(|(a, b)| (a * b).re).sum();
                    2.0 / PI * s
                })
                .collect()
        })
        .collect();
    Ok(WignerGrid { q, p, w, cell_area: dq * dp })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Packets {
    pub count: usize,
    /// `(q, p, W)` of each detected maximum.
    pub peaks: Vec<(f64, f64, f64)>,
}

/// Strict 8-neighbour local maxima of `W` with `W ≥ threshold·max W`.
pub fn detect_packets(grid: &WignerGrid, threshold_fraction: f64) -> Result<Packets> {
    let (nq, np) = (grid.q.len(), grid.p.len());
    if nq < 3 || np < 3 {
        return Err(Error::EmptyGrid);
    }
    let floor = threshold_fraction * grid.max();
    let mut peaks = Vec::new();
    for i in 1..nq - 1 {
        for k in 1..np - 1 {
            let v = grid.w[i][k];
            if v < floor {
                continue;
            }
            let is_max = (i - 1..=i + 1)
                .flat_map(|a| (k - 1..=k + 1).map(move |b| (a, b)))
                .filter(|&(a, b)| (a, b) != (i, k))
                .all(|(a, b)| grid.w[a][b] < v);
            if is_max {
                peaks.push((grid.q[i], grid.p[k], v));
            }
        }
    }
    Ok(Packets { count: peaks.len(), peaks })
}

/// First purification dip of a linear-entropy series.
///
/// The dip is the lowest sample of the first contiguous run in which `ξ`
/// falls below half of its running maximum; shallow ripples on the way up
/// are ignored. Returns `(t, ξ)`, or `None` if no dip completes inside the
/// series.
pub fn purification_time(times: &[f64], xi: &[f64]) -> Option<(f64, f64)> {
    let mut peak = 0.0f64;
    let mut best: Option<usize> = None;
    for (k, &x) in xi.iter().enumerate() {
        match best {
            None => {
                if peak > 1e-3 && x < 0.5 * peak {
                    best = Some(k);
                } else {
                    peak = peak.max(x);
                }
            }
            Some(b) => {
                if x >= 0.5 * peak {
                    return Some((times[b], xi[b]));
                }
                if x < xi[b] {
                    best = Some(k);
                }
            }
        }
    }
    match best {
        Some(b) if b + 1 < xi.len() => Some((times[b], xi[b])),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{coherent_state, AtomicState};
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn c(x: f64) -> C64 {
        C64::from(x)
    }

    fn single_mode(alpha: C64, n_max: usize) -> DensityMatrix {
        let s = HilbertSpace::new(n_max, 0, 0).unwrap();
        let psi = coherent_state(s, alpha, c(0.0), &AtomicState::Ground).unwrap();
        partial_trace_state(&psi, Mode::A).unwrap()
    }

    #[test]
    fn product_state_traces_pure() {
        let s = HilbertSpace::new(15, 15, 1).unwrap();
        let psi = coherent_state(s, C64::new(1.0, 0.5), c(-0.8), &AtomicState::Plus).unwrap();
        let rho = partial_trace_state(&psi, Mode::A).unwrap();
        assert!(rho.purity() > 1.0 - 1e-10);
        assert!((rho.trace() - c(1.0)).norm() < 1e-12);
        let full = DensityMatrix::from_pure(psi.amplitudes());
        let via_rho = partial_trace(&full, s, Mode::B).unwrap();
        let direct = partial_trace_state(&psi, Mode::B).unwrap();
        assert!((via_rho.matrix() - direct.matrix()).camax() < 1e-14);
    }

    #[test]
    fn single_excitation_bell_state() {
        let s = HilbertSpace::new(1, 1, 0).unwrap();
        let mut amps = DVector::<C64>::zeros(4);
        amps[s.index(1, 0, 0)] = c(0.5f64.sqrt());
        amps[s.index(0, 1, 0)] = c(0.5f64.sqrt());
        let psi = StateVector::from_amplitudes(s, amps).unwrap();
        let rho = partial_trace_state(&psi, Mode::A).unwrap();
        assert!((rho.matrix() - DMatrix::from_diagonal_element(2, 2, c(0.5))).camax() < 1e-15);
        assert_relative_eq!(linear_entropy(&rho), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_cases() {
        let s = HilbertSpace::new(30, 0, 0).unwrap();
        let (a, b) = (C64::new(1.1, -0.4), C64::new(0.3, 0.9));
        let x = coherent_state(s, a, c(0.0), &AtomicState::Ground).unwrap();
        let y = coherent_state(s, b, c(0.0), &AtomicState::Ground).unwrap();
        assert_relative_eq!(fidelity_pure(&x, &x).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(fidelity_pure(&x, &y).unwrap(), (-(a - b).norm_sqr()).exp(), epsilon = 1e-8);
        let f0 = StateVector::fock(s, 0, 0, 0).unwrap();
        let f1 = StateVector::fock(s, 1, 0, 0).unwrap();
        assert_eq!(fidelity_pure(&f0, &f1).unwrap(), 0.0);
        let (rx, ry) = (DensityMatrix::from_pure(x.amplitudes()), DensityMatrix::from_pure(y.amplitudes()));
        assert_relative_eq!(fidelity_mixed(&rx, &ry).unwrap(), fidelity_pure(&x, &y).unwrap(), epsilon = 1e-8);
        assert_relative_eq!(fidelity_pure_mixed(&x, &ry).unwrap(), fidelity_pure(&x, &y).unwrap(), epsilon = 1e-12);
        let mixed = DensityMatrix::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.5), c(0.5)]))).unwrap();
        assert_relative_eq!(fidelity_mixed(&mixed, &mixed).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn vacuum_wigner_peak() {
        let rho = single_mode(c(0.0), 10);
        let g = wigner(&rho, &GridSpec { q_min: 0.0, q_max: 0.0, p_min: 0.0, p_max: 0.0, nq: 1, np: 1 }).unwrap();
        assert_relative_eq!(g.w[0][0], 2.0 / PI, epsilon = 1e-14);
    }

    #[test]
    fn coherent_wigner_matches_gaussian() {
        // Amplitudes, not probabilities, set the truncation error here, so the
        // cutoff sits well above the usual one.
        let alpha = C64::new(3.0, 0.0);
        let rho = single_mode(alpha, 60);
        let g = wigner(&rho, &GridSpec::default()).unwrap();
        let mut worst: f64 = 0.0;
        for (i, q) in g.q.iter().enumerate() {
            for (k, p) in g.p.iter().enumerate() {
                let d2 = (q - alpha.re).powi(2) + (p - alpha.im).powi(2);
                worst = worst.max((g.w[i][k] - 2.0 / PI * (-2.0 * d2).exp()).abs());
            }
        }
        assert!(worst < 1e-9, "{worst}");
        let pk = detect_packets(&g, 0.1).unwrap();
        assert_eq!(pk.count, 1);
        assert_eq!((pk.peaks[0].0, pk.peaks[0].1), (3.0, 0.0));
        assert!((g.normalization() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn fock_wigner_is_negative_and_bounded() {
        let s = HilbertSpace::new(6, 0, 0).unwrap();
        let psi = StateVector::fock(s, 1, 0, 0).unwrap();
        let rho = partial_trace_state(&psi, Mode::A).unwrap();
        let g = wigner(&rho, &GridSpec::square(3.0, 61)).unwrap();
        assert_relative_eq!(g.w[30][30], -2.0 / PI, epsilon = 1e-12);
        assert!(g.min() >= -2.0 / PI - 1e-9 && g.max() <= 2.0 / PI + 1e-9);
    }

    #[test]
    fn packet_detection_needs_interior() {
        let g = WignerGrid { q: vec![0.0, 1.0], p: vec![0.0, 1.0], w: vec![vec![0.0; 2]; 2], cell_area: 1.0 };
        assert_eq!(detect_packets(&g, 0.1), Err(Error::EmptyGrid));
        assert!(matches!(wigner(&single_mode(c(0.0), 2), &GridSpec::square(1.0, 0)), Err(Error::EmptyGrid)));
    }

    #[test]
    fn purification_dip() {
        let t: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
        // Rise with a shallow ripple, then a deep dip near t = 2π/2 ≈ 3.14.
        let xi: Vec<f64> = t.iter().map(|x| 0.4 * (x * 1.0).sin().powi(2) + 0.01 * (x * 20.0).sin().abs()).collect();
        let (td, _) = purification_time(&t, &xi).unwrap();
        assert!((td - PI).abs() < 0.1, "{td}");
        assert_eq!(purification_time(&t[..40], &xi[..40]), None);
    }

    #[test]
    fn mean_photon_of_coherent() {
        assert_relative_eq!(mean_photon(&single_mode(C64::new(1.2, 0.5), 30)), 1.69, epsilon = 1e-9);
    }
}
