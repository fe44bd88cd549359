//! Driven steady state, voltage/current fluctuations, effective elements and
//! the noise figure, plus the grid sweep that ties them together.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::appendix_a::{
    AppendixAConstants, CapacitanceChain, EvaluationMode, ModePair, ReciprocalCaps,
    SteadyStateCoefficients,
};
use crate::error::{Error, Result};
use crate::fockspace::{FockState, OperatorSet};
use crate::params::CircuitParams;
use crate::units::{HBAR, K_B};

/// Default damping is this fraction of the mode frequency.
pub const DEFAULT_DAMPING_FRACTION: f64 = 1.0 / 50.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyState {
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub n1ph: f64,
    pub n2ph: f64,
    pub omega_in: f64,
    /// `|M·α − b| / |b|`, or `|M·α|` when the drive vanishes.
    pub residual: f64,
}

pub fn damping(p: &CircuitParams, modes: &ModePair) -> (f64, f64) {
    (
        p.kappa1.unwrap_or(modes.omega1 * DEFAULT_DAMPING_FRACTION),
        p.kappa2.unwrap_or(modes.omega2 * DEFAULT_DAMPING_FRACTION),
    )
}

/// Rotating-frame mean-field amplitudes:
///
/// `(i(ω̃₁ − ω_in) + κ₁/2)·α₁ + iΓ₁·α₂ = −i·E₁ω`, and symmetrically for mode 2,
/// with `ω̃₁ = ω₁(1 + A3)`, `Γ₁ = ω₂(A1 + A2)`, `ω̃₂ = ω₂(1 + B3)`,
/// `Γ₂ = ω₁(B1 + B2)`.
pub fn steady_state(
    coeffs: &SteadyStateCoefficients,
    modes: &ModePair,
    kappa1: f64,
    kappa2: f64,
    omega_in: f64,
) -> Result<SteadyState> {
    if !(kappa1 >= 0.0 && kappa2 >= 0.0 && omega_in.is_finite()) {
        return Err(Error::Response(format!(
            "damping must be non-negative (kappa1 = {kappa1:e}, kappa2 = {kappa2:e})"
        )));
    }
    let i = Complex64::i();
    let w1 = modes.omega1 * (Complex64::new(1.0, 0.0) + coeffs.a3);
    let w2 = modes.omega2 * (Complex64::new(1.0, 0.0) + coeffs.b3);
    let g1 = (coeffs.a1 + coeffs.a2) * modes.omega2;
    let g2 = (coeffs.b1 + coeffs.b2) * modes.omega1;

    let m11 = i * (w1 - omega_in) + kappa1 / 2.0;
    let m12 = i * g1;
    let m21 = i * g2;
    let m22 = i * (w2 - omega_in) + kappa2 / 2.0;
    let b1 = -i * coeffs.e1w;
    let b2 = -i * coeffs.e2w;

    let det = m11 * m22 - m12 * m21;
    let scale = (m11.norm() * m22.norm()).max(m12.norm() * m21.norm());
    if det.norm() <= 1e-14 * scale || det.norm() == 0.0 {
        return Err(Error::Response(format!("singular steady-state system at omega_in = {omega_in:e}")));
    }
    let alpha1 = (b1 * m22 - m12 * b2) / det;
    let alpha2 = (m11 * b2 - m21 * b1) / det;

    let r1 = m11 * alpha1 + m12 * alpha2 - b1;
    let r2 = m21 * alpha1 + m22 * alpha2 - b2;
    let drive = (b1.norm_sqr() + b2.norm_sqr()).sqrt();
    let res = (r1.norm_sqr() + r2.norm_sqr()).sqrt();
    let residual = if drive > 0.0 { res / drive } else { res };

    Ok(SteadyState {
        alpha1,
        alpha2,
        n1ph: alpha1.norm_sqr(),
        n2ph: alpha2.norm_sqr(),
        omega_in,
        residual,
    })
}

/// Bose–Einstein occupation at angular frequency `omega` and temperature `t`.
pub fn thermal_occupation(omega: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (K_B * t)).exp_m1()
}

/// Reciprocal effective capacitances (1/F) and inductances (1/H).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveElements {
    pub inv_c_q1: f64,
    pub inv_c_q12: f64,
    pub inv_c_q2: f64,
    pub inv_c_q21: f64,
    pub inv_l_g1: f64,
    pub inv_l_g12: f64,
    pub inv_l_d2: f64,
    pub inv_l_d21: f64,
    pub mode: EvaluationMode,
}

impl EffectiveElements {
    pub fn named(&self) -> [(&'static str, f64); 8] {
        [
            ("inv_C_Q1", self.inv_c_q1),
            ("inv_C_Q12", self.inv_c_q12),
            ("inv_C_Q2", self.inv_c_q2),
            ("inv_C_Q21", self.inv_c_q21),
            ("inv_L_g1", self.inv_l_g1),
            ("inv_L_g12", self.inv_l_g12),
            ("inv_L_d2", self.inv_l_d2),
            ("inv_L_d21", self.inv_l_d21),
        ]
    }
}

/// Charge and flux coefficients of one operator, split by mode.
#[derive(Clone, Copy, Debug, Default)]
struct Quadratures {
    q1: f64,
    phi1: f64,
    q2: f64,
    phi2: f64,
}

impl Quadratures {
    /// `(C_q1·c_Q1² + L1·c_ϕ1², C_q2·c_Q2² + L2·c_ϕ2²)`
    fn weights(&self, m: &ModePair) -> (f64, f64) {
        (
            m.c_q1 * self.q1 * self.q1 + m.l_g_eff * self.phi1 * self.phi1,
            m.c_q2 * self.q2 * self.q2 + m.l_d_eff * self.phi2 * self.phi2,
        )
    }
}

pub fn effective_elements(
    rc: &ReciprocalCaps,
    modes: &ModePair,
    g_m: f64,
    g_nl: f64,
    v_rf: f64,
    mode: EvaluationMode,
) -> EffectiveElements {
    match mode {
        EvaluationMode::Literal => literal_elements(rc, modes, g_m, g_nl, v_rf),
        EvaluationMode::Consistent => consistent_elements(rc, modes, g_m, g_nl, v_rf),
    }
}

fn literal_elements(rc: &ReciprocalCaps, m: &ModePair, g_m: f64, g_nl: f64, v_rf: f64) -> EffectiveElements {
    let (z1, z2, cq1, cq2) = (m.z1, m.z2, m.c_q1, m.c_q2);
    let nl = g_nl * v_rf;
    let sq = |x: f64| x * x;
    EffectiveElements {
        inv_c_q1: 2.0 * rc.r_q1 + sq(g_m) * sq(z1) * cq1 * sq(rc.r_q1p1),
        inv_c_q12: cq2 * sq(rc.r_q1q2) + sq(z2) * cq2 * sq(g_m * rc.r_q1p2 + nl * rc.rp_q1p2),
        inv_c_q2: 2.0 * rc.r_q2 + sq(z2) * cq2 * sq(g_m * rc.r_q2p2 - nl * rc.rp_q2p2),
        inv_c_q21: cq1 * sq(rc.r_q1q2) + sq(g_m) * sq(z1) * cq1 * sq(rc.r_q2p1),
        inv_l_g1: 1.0 / m.l_g_eff + sq(g_m) * cq1 * sq(rc.r_q1p1),
        inv_l_g12: sq(g_m) * cq2 * sq(rc.r_q2p1)
            + sq(z2) * cq2 * sq(sq(g_m) * rc.r_p1p2 / 2.0 + g_m * nl * rc.rp_p1p2),
        inv_l_d2: 1.0 / m.l_d_eff + cq2 * sq(g_m * rc.r_q2p2 - nl * rc.rp_q2p2),
        inv_l_d21: cq1 * sq(g_m * rc.r_q1p2 - nl * rc.rp_q1p2)
            + sq(z1) * cq1 * sq(g_m * rc.r_p1p2 - nl * rc.rp_p1p2),
        mode: EvaluationMode::Literal,
    }
}

fn consistent_elements(rc: &ReciprocalCaps, m: &ModePair, g_m: f64, g_nl: f64, v_rf: f64) -> EffectiveElements {
    let nl = g_nl * v_rf;
    let v1 = Quadratures {
        q1: 2.0 * rc.r_q1,
        phi1: g_m * rc.r_q2p1,
        q2: 2.0 * rc.r_q1q2,
        phi2: g_m * rc.r_q1p2 + nl * rc.rp_q1p2,
    };
    let v2 = Quadratures {
        q1: 2.0 * rc.r_q1q2,
        phi1: g_m * rc.r_q2p1,
        q2: 2.0 * rc.r_q2,
        phi2: g_m * rc.r_q2p2 + nl * rc.rp_q2p2,
    };
    // overall signs of the currents drop out of the squares
    let i1 = Quadratures {
        q1: g_m * rc.r_q1p1,
        phi1: 1.0 / m.l_g_eff,
        q2: g_m * rc.r_q2p1,
        phi2: g_m * g_m * rc.r_p1p2 + g_m * nl * rc.rp_p1p2,
    };
    let i2 = Quadratures {
        q1: g_m * rc.r_q1p2 + nl * rc.rp_q1p2,
        phi1: g_m * g_m * rc.r_p1p2 + g_m * nl * rc.rp_p1p2,
        q2: g_m * rc.r_q2p2 + nl * rc.rp_q2p2,
        phi2: 1.0 / m.l_d_eff,
    };
    let (c_q1, c_q12) = v1.weights(m);
    let (c_q21, c_q2) = v2.weights(m);
    let (l_g1, l_g12) = i1.weights(m);
    let (l_d21, l_d2) = i2.weights(m);
    EffectiveElements {
        inv_c_q1: c_q1,
        inv_c_q12: c_q12,
        inv_c_q2: c_q2,
        inv_c_q21: c_q21,
        inv_l_g1: l_g1,
        inv_l_g12: l_g12,
        inv_l_d2: l_d2,
        inv_l_d21: l_d21,
        mode: EvaluationMode::Consistent,
    }
}

/// Variances in V² and A².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluctuationSet {
    pub dv1sq: f64,
    pub dv2sq: f64,
    pub di1sq: f64,
    pub di2sq: f64,
}

impl FluctuationSet {
    pub fn as_array(&self) -> [f64; 4] {
        [self.dv1sq, self.dv2sq, self.di1sq, self.di2sq]
    }

    /// Largest relative difference over the four variances.
    pub fn max_rel_diff(&self, other: &FluctuationSet) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| {
                let s = a.abs().max(b.abs());
                if s == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / s
                }
            })
            .fold(0.0, f64::max)
    }
}

pub fn fluctuations(n1ph: f64, n2ph: f64, eff: &EffectiveElements, modes: &ModePair) -> Result<FluctuationSet> {
    if !(n1ph >= 0.0 && n2ph >= 0.0) {
        return Err(Error::Response(format!("negative photon number ({n1ph:e}, {n2ph:e})")));
    }
    let f1 = HBAR * modes.omega1 / 2.0 * (2.0 * n1ph + 1.0);
    let f2 = HBAR * modes.omega2 / 2.0 * (2.0 * n2ph + 1.0);
    Ok(FluctuationSet {
        dv1sq: f1 * eff.inv_c_q1 + f2 * eff.inv_c_q12,
        dv2sq: f1 * eff.inv_c_q21 + f2 * eff.inv_c_q2,
        di1sq: f1 * eff.inv_l_g1 + f2 * eff.inv_l_g12,
        di2sq: f1 * eff.inv_l_d21 + f2 * eff.inv_l_d2,
    })
}

/// Symmetrized matrix-element variances of the voltage and current
/// operators on a state, with the largest imaginary residual.
pub fn fluctuation_oracle(ops: &OperatorSet, state: &FockState) -> Result<(FluctuationSet, f64)> {
    if state.dim != ops.dim {
        return Err(Error::Response(format!("state dim {} vs operator dim {}", state.dim, ops.dim)));
    }
    // number states must stay clear of the truncation edge
    let dim = ops.dim;
    for (idx, amp) in state.vector.iter().enumerate() {
        let (j1, j2) = (idx / dim, idx % dim);
        if amp.norm() > 0.0 && (j1 + 4 > dim || j2 + 4 > dim) {
            return Err(Error::OutOfRange { state: (j1, j2), dim });
        }
    }
    let mut imag = 0.0f64;
    let v = &state.vector;
    let mut var = |x: &crate::fockspace::CMatrix| {
        let xv = x * v;
        let mean = v.dotc(&xv);
        let sq = v.dotc(&(x * &xv));
        let v = sq - mean * mean;
        imag = imag.max(v.im.abs());
        v.re
    };
    let set = FluctuationSet { dv1sq: var(&ops.v1), dv2sq: var(&ops.v2), di1sq: var(&ops.i1), di2sq: var(&ops.i2) };
    Ok((set, imag))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseFigure {
    pub nf: f64,
    pub nf_db: f64,
}

/// `nf = 1 + (4γg_m/R_s)·ΔV1²/ΔI2²`
pub fn noise_figure(fl: &FluctuationSet, gamma: f64, g_m: f64, r_s: f64) -> Result<NoiseFigure> {
    if !(fl.di2sq > 0.0) {
        return Err(Error::Response(format!("current variance dI2sq = {:e} is not positive", fl.di2sq)));
    }
    if !(r_s > 0.0) {
        return Err(Error::Response(format!("source resistance {r_s:e} is not positive")));
    }
    let nf = 1.0 + 4.0 * gamma * g_m / r_s * fl.dv1sq / fl.di2sq;
    Ok(NoiseFigure { nf, nf_db: 10.0 * nf.log10() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NfPoint {
    pub omega_in: f64,
    pub g_m: f64,
    pub n1ph: f64,
    pub n2ph: f64,
    pub fluct: FluctuationSet,
    pub nf: f64,
    pub nf_db: f64,
}

/// Sweep axes; `omega_in` in rad/s, `g_m` in S.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub win_min: f64,
    pub win_max: f64,
    pub win_steps: usize,
    pub gm_min: f64,
    pub gm_max: f64,
    pub gm_steps: usize,
}

impl Default for Grid {
    fn default() -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        Grid {
            win_min: two_pi * 1e9,
            win_max: two_pi * 20e9,
            win_steps: 60,
            gm_min: 0.05,
            gm_max: 0.5,
            gm_steps: 30,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| if k == n - 1 { hi } else { lo + step * k as f64 }).collect()
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if self.win_steps < 2 || self.gm_steps < 2 {
            return Err(Error::Response("grid steps must be >= 2".into()));
        }
        let ok = |lo: f64, hi: f64| lo > 0.0 && hi > lo && hi.is_finite();
        if !ok(self.win_min, self.win_max) {
            return Err(Error::Response(format!(
                "omega_in range [{:e}, {:e}] must be positive and increasing",
                self.win_min, self.win_max
            )));
        }
        if !ok(self.gm_min, self.gm_max) {
            return Err(Error::Response(format!(
                "g_m range [{:e}, {:e}] must be positive and increasing",
                self.gm_min, self.gm_max
            )));
        }
        Ok(())
    }

    pub fn omega_values(&self) -> Vec<f64> {
        linspace(self.win_min, self.win_max, self.win_steps)
    }

    pub fn gm_values(&self) -> Vec<f64> {
        linspace(self.gm_min, self.gm_max, self.gm_steps)
    }

    pub fn len(&self) -> usize {
        self.win_steps * self.gm_steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepOptions {
    /// Add the Bose–Einstein occupation at the physical temperature.
    pub thermal: bool,
}

/// One grid row; failures keep their place with the message as status.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub omega_in: f64,
    pub g_m: f64,
    pub outcome: std::result::Result<NfPoint, String>,
}

/// Full pipeline at one `(ω_in, g_m)` given the constants at that `g_m`.
pub fn evaluate_point(
    k: &AppendixAConstants,
    p: &CircuitParams,
    omega_in: f64,
    options: SweepOptions,
) -> Result<NfPoint> {
    let (kappa1, kappa2) = damping(p, &k.modes);
    let ss = steady_state(&k.coeffs, &k.modes, kappa1, kappa2, omega_in)?;
    let (mut n1, mut n2) = (ss.n1ph, ss.n2ph);
    if options.thermal {
        n1 += thermal_occupation(k.modes.omega1, p.t_c);
        n2 += thermal_occupation(k.modes.omega2, p.t_c);
    }
    let eff = effective_elements(k.rc(), &k.modes, k.g_m, k.g_nl(), k.v_rf, k.mode());
    let fluct = fluctuations(n1, n2, &eff, &k.modes)?;
    let nf = noise_figure(&fluct, p.gamma, k.g_m, p.r_s)?;
    Ok(NfPoint { omega_in, g_m: k.g_m, n1ph: n1, n2ph: n2, fluct, nf: nf.nf, nf_db: nf.nf_db })
}

/// Rows ordered with `ω_in` outer and `g_m` inner, independent of thread
/// scheduling.
pub fn sweep(p: &CircuitParams, grid: &Grid, mode: EvaluationMode, options: SweepOptions) -> Result<Vec<SweepRow>> {
    grid.validate()?;
    let chain = CapacitanceChain::new(p, mode)?;
    let gms = grid.gm_values();
    let omegas = grid.omega_values();
    let per_gm: Vec<std::result::Result<AppendixAConstants, String>> = gms
        .par_iter()
        .map(|&g| AppendixAConstants::at(&chain, p, g).map_err(|e| e.to_string()))
        .collect();
    let n_gm = gms.len();
    let rows = (0..omegas.len() * n_gm)
        .into_par_iter()
        .map(|idx| {
            let (w, g) = (omegas[idx / n_gm], gms[idx % n_gm]);
            let outcome = match &per_gm[idx % n_gm] {
                Ok(k) => evaluate_point(k, p, w, options).map_err(|e| e.to_string()),
                Err(e) => Err(e.clone()),
            };
            SweepRow { omega_in: w, g_m: g, outcome }
        })
        .collect();
    Ok(rows)
}

pub const CSV_HEADER: &str = "omega_in,g_m,n1ph,n2ph,dV1sq,dV2sq,dI1sq,dI2sq,nf,nf_db,status";

/// CSV text with LF line endings and shortest round-trip floats.
pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let line = match &r.outcome {
            Ok(pt) => format!(
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},ok",
                r.omega_in,
                r.g_m,
                pt.n1ph,
                pt.n2ph,
                pt.fluct.dv1sq,
                pt.fluct.dv2sq,
                pt.fluct.di1sq,
                pt.fluct.di2sq,
                pt.nf,
                pt.nf_db
            ),
            Err(msg) => {
                let clean: String = msg.chars().map(|c| if c == ',' || c == '\n' { ';' } else { c }).collect();
                format!("{:e},{:e},NaN,NaN,NaN,NaN,NaN,NaN,NaN,NaN,error: {clean}", r.omega_in, r.g_m)
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}
