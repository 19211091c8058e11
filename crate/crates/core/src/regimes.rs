//! Effective couplings, validity margins and the experimental feasibility
//! table for microwave and optical setups.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ecs::EcsSchedule;
use crate::error::{Error, Result};
use crate::hamiltonian::{EffectiveParams, PhysicalParams};

/// Margin a `≪` condition must reach to pass.
pub const DEFAULT_MARGIN: f64 = 10.0;

/// `χ`, `μ` and the π-pulse times `π/χ`, `π/μ`.
pub fn effective_params(params: &PhysicalParams) -> Result<EffectiveParams> {
    let chi = params.chi()?;
    let mu = params.mu()?;
    Ok(EffectiveParams { chi, mu, tau_chi: PI / chi, tau_mu: PI / mu })
}

/// `t_g = (π/2μ)(r/s)` with its packet count.
pub fn schedule(r: u64, s: u64, mu: f64) -> Result<EcsSchedule> {
    EcsSchedule::new(r, s, mu)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Atom–field exchange is virtual.
    Dispersive,
    /// The drive dominates the dispersive shifts.
    Nonlinear,
    /// Dispersive regime for `N` atoms.
    NAtom,
}

/// One `lhs ≪ rhs` condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs/lhs`, infinite when `lhs = 0`.
    pub margin: f64,
    pub pass: bool,
}

impl Inequality {
    fn new(name: &str, lhs: f64, rhs: f64, threshold: f64) -> Self {
        let margin = if lhs == 0.0 { f64::INFINITY } else { rhs / lhs };
        Self { name: name.to_string(), lhs, rhs, margin, pass: margin >= threshold }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub stage: Stage,
    pub inequalities: Vec<Inequality>,
    pub n_bar_a: f64,
    pub n_bar_b: f64,
    pub threshold: f64,
}

impl RegimeReport {
    pub fn all_pass(&self) -> bool {
        self.inequalities.iter().all(|i| i.pass)
    }
}

pub fn check_regime(params: &PhysicalParams, n_bar_a: f64, n_bar_b: f64, stage: Stage) -> Result<RegimeReport> {
    check_regime_with(params, n_bar_a, n_bar_b, stage, DEFAULT_MARGIN)
}

pub fn check_regime_with(
    params: &PhysicalParams,
    n_bar_a: f64,
    n_bar_b: f64,
    stage: Stage,
    threshold: f64,
) -> Result<RegimeReport> {
    if n_bar_a < 0.0 || n_bar_b < 0.0 {
        return Err(Error::NegativeArg("mean photon number"));
    }
    let chi = params.chi()?.abs();
    let (lam, delta, om) = (params.lambda.abs(), params.delta.abs(), params.omega_rabi.abs());
    let mut out = Vec::new();
    let dispersive = |out: &mut Vec<Inequality>| {
        out.push(Inequality::new("Ω ≪ |Δ|", om, delta, threshold));
        out.push(Inequality::new("√n̄_a|λ| ≪ |Δ|", n_bar_a.sqrt() * lam, delta, threshold));
        out.push(Inequality::new("√n̄_b|λ| ≪ |Δ|", n_bar_b.sqrt() * lam, delta, threshold));
    };
    match stage {
        Stage::Dispersive => dispersive(&mut out),
        Stage::Nonlinear => {
            dispersive(&mut out);
            out.push(Inequality::new("n̄_aχ ≪ Ω", n_bar_a * chi, om, threshold));
            out.push(Inequality::new("n̄_bχ ≪ Ω", n_bar_b * chi, om, threshold));
            out.push(Inequality::new("n̄_a√(n̄_b+1)χ ≪ Ω", n_bar_a * (n_bar_b + 1.0).sqrt() * chi, om, threshold));
            out.push(Inequality::new("n̄_b√(n̄_a+1)χ ≪ Ω", n_bar_b * (n_bar_a + 1.0).sqrt() * chi, om, threshold));
        }
        Stage::NAtom => {
            if params.n_atoms == 0 {
                return Err(Error::NoAtoms);
            }
            let bound = delta / params.n_atoms as f64;
            out.push(Inequality::new("Ω ≪ |Δ|/N", om, bound, threshold));
            out.push(Inequality::new("√n̄_aλ ≪ |Δ|/N", n_bar_a.sqrt() * lam, bound, threshold));
            out.push(Inequality::new("√n̄_bλ ≪ |Δ|/N", n_bar_b.sqrt() * lam, bound, threshold));
        }
    }
    Ok(RegimeReport { stage, inequalities: out, n_bar_a, n_bar_b, threshold })
}

/// An experimental setup to tabulate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub name: String,
    pub params: PhysicalParams,
    /// `(r, s)` pairs whose generation times are tabulated.
    pub schedules: Vec<(u64, u64)>,
    /// Atomic decay time in seconds.
    pub atomic_decay: Option<f64>,
    /// Cavity-field decoherence time in seconds.
    pub cavity_decoherence: Option<f64>,
}

fn two_pi(hz: f64) -> f64 {
    2.0 * PI * hz
}

impl Setup {
    /// Rydberg atoms in a superconducting microwave cavity.
    pub fn microwave() -> Self {
        let lambda = two_pi(47e3);
        Self {
            name: "microwave".into(),
            params: PhysicalParams::new(lambda, two_pi(235e3), lambda),
            schedules: vec![(2, 11), (2, 3)],
            atomic_decay: Some(30e-3),
            cavity_decoherence: Some(0.13),
        }
    }

    /// Trapped atoms in a high-finesse optical cavity.
    pub fn optical() -> Self {
        let lambda = two_pi(16e6);
        Self {
            name: "optical".into(),
            params: PhysicalParams::new(lambda, two_pi(80e6), lambda),
            schedules: vec![(2, 5), (2, 11)],
            atomic_decay: Some(0.66e-6),
            cavity_decoherence: Some(0.33e-6),
        }
    }

    pub fn presets() -> Vec<Self> {
        vec![Self::microwave(), Self::optical()]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationTime {
    pub r: u64,
    pub s: u64,
    pub t_g: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityRow {
    pub setup: String,
    pub lambda: f64,
    pub delta: f64,
    pub omega_rabi: f64,
    pub chi: f64,
    pub mu: f64,
    pub tau_chi: f64,
    pub tau_mu: f64,
    pub t_g: Vec<GenerationTime>,
    pub atomic_decay: Option<f64>,
    pub cavity_decoherence: Option<f64>,
    /// Dispersive and nonlinear margins at one photon per mode.
    pub regime_pass: bool,
}

pub fn feasibility_row(setup: &Setup) -> Result<FeasibilityRow> {
    let eff = effective_params(&setup.params)?;
    let t_g = setup
        .schedules
        .iter()
        .map(|&(r, s)| schedule(r, s, eff.mu).map(|sch| GenerationTime { r, s, t_g: sch.t_g() }))
        .collect::<Result<Vec<_>>>()?;
    let regime = check_regime(&setup.params, 1.0, 1.0, Stage::Nonlinear)?;
    Ok(FeasibilityRow {
        setup: setup.name.clone(),
        lambda: setup.params.lambda,
        delta: setup.params.delta,
        omega_rabi: setup.params.omega_rabi,
        chi: eff.chi,
        mu: eff.mu,
        tau_chi: eff.tau_chi,
        tau_mu: eff.tau_mu,
        t_g,
        atomic_decay: setup.atomic_decay,
        cavity_decoherence: setup.cavity_decoherence,
        regime_pass: regime.all_pass(),
    })
}

pub fn feasibility_table(setups: &[Setup]) -> Result<Vec<FeasibilityRow>> {
    setups.iter().map(feasibility_row).collect()
}

/// Rounds to `digits` significant figures.
pub fn round_sig(x: f64, digits: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits as i32 - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

/// Whether `x` rounded to `digits` significant figures equals `quoted`.
pub fn matches_quoted(x: f64, quoted: f64, digits: u32) -> bool {
    let r = round_sig(x, digits);
    (r - quoted).abs() <= 1e-9 * quoted.abs()
}
