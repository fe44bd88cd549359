//! Named invariant checks over the whole pipeline, run by `qlna validate`.

use num_complex::Complex64;

use crate::appendix_a::{AppendixAConstants, EvaluationMode, SteadyStateCoefficients};
use crate::error::Result;
use crate::fockspace::{
    basis_pair, build_h0, build_hp, commutator, max_abs, max_abs_within, CMatrix,
    FockState, HamiltonianVariant, OperatorSet,
};
use crate::params::{unit_audit, CircuitParams};
use crate::response::{
    damping, effective_elements, fluctuation_oracle, fluctuations, steady_state, sweep, Grid,
    SweepOptions,
};
use crate::spectra::{
    diagonal_energies, exact_spectrum, first_order_state, level_shifts, relative_lambda,
    richardson_ratios, MixingScope,
};
use crate::units::HBAR;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Informational; never fails the run.
    Report,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Report => "REPORT",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

fn check(name: &'static str, ok: bool, detail: String) -> Check {
    Check { name, status: if ok { Status::Pass } else { Status::Fail }, detail }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.status != Status::Fail)
}

/// Fixed-width table, one check per line.
pub fn render_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        out.push_str(&format!("{:<6} {:<width$}  {}\n", c.status.as_str(), c.name, c.detail));
    }
    out
}

pub fn decoupled(p: &CircuitParams) -> CircuitParams {
    CircuitParams { l_ov: 0.0, g_m: 0.0, v_rf: 0.0, ..p.clone() }
}

/// `‖M·M⁻¹ − I‖_max` of the capacitance matrix.
pub fn inverse_defect(k: &AppendixAConstants) -> f64 {
    let m = k.chain.cap_matrix.as_array();
    let inv = k.chain.inverse.as_array();
    let mut worst = 0.0f64;
    for r in 0..2 {
        for c in 0..2 {
            let v: f64 = (0..2).map(|s| m[r][s] * inv[s][c]).sum();
            let id = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((v - id).abs());
        }
    }
    worst
}

/// `(‖[ϕ₁,Q₁] − iħ‖, ‖[ϕ₂,Q₂] − iħ‖, ‖[ϕ₁,Q₂]‖)` on the truncation-safe block.
pub fn commutator_defects(ops: &OperatorSet) -> (f64, f64, f64) {
    let dim = ops.dim;
    let target = CMatrix::identity(dim * dim, dim * dim) * Complex64::new(0.0, HBAR);
    let d1 = max_abs_within(&(commutator(&ops.phi1, &ops.q1) - &target), dim, dim - 2, dim - 1);
    let d2 = max_abs_within(&(commutator(&ops.phi2, &ops.q2) - &target), dim, dim - 1, dim - 2);
    (d1, d2, max_abs(&commutator(&ops.phi1, &ops.q2)))
}

/// Worst relative gap between exact eigenvalues and ladder sums for
/// `n + m ≤ max_sum` in the decoupled limit.
pub fn decoupled_spectrum_error(p: &CircuitParams, dim: usize, max_sum: usize) -> Result<f64> {
    let k = AppendixAConstants::evaluate(&decoupled(p), EvaluationMode::Consistent)?;
    let h0 = build_h0(&k, dim)?;
    let levels = exact_spectrum(&h0, &CMatrix::zeros(dim * dim, dim * dim), 0.0)?;
    let states: Vec<(usize, usize)> =
        (0..=max_sum).flat_map(|n| (0..=max_sum - n).map(move |m| (n, m))).collect();
    let vals = levels.labelled(&states, dim);
    let mut worst = 0.0f64;
    for (&(n, m), e) in states.iter().zip(vals) {
        let want = HBAR * k.modes.omega1 * (n as f64 + 0.5) + HBAR * k.modes.omega2 * (m as f64 + 0.5);
        worst = worst.max((e - Complex64::new(want, 0.0)).norm() / want);
    }
    Ok(worst)
}

/// Entries of `hp` violating `Δj1 ∈ {0,±2}`, `Δj2 ∈ {±1,±3}`.
pub fn stated_rule_violations(hp: &CMatrix, dim: usize) -> usize {
    count_entries(hp, dim, |d1, d2| matches!(d1, 0 | 2 | -2) && matches!(d2, 1 | -1 | 3 | -3))
}

/// Entries of `hp` violating odd total parity with `|Δj1| ≤ 2`, `|Δj2| ≤ 3`.
pub fn parity_rule_violations(hp: &CMatrix, dim: usize) -> usize {
    count_entries(hp, dim, |d1, d2| (d1 + d2).rem_euclid(2) == 1 && d1.abs() <= 2 && d2.abs() <= 3)
}

fn count_entries(hp: &CMatrix, dim: usize, allowed: impl Fn(i64, i64) -> bool) -> usize {
    let mut bad = 0;
    for r in 0..dim * dim {
        for c in 0..dim * dim {
            if hp[(r, c)].norm() == 0.0 {
                continue;
            }
            let (i1, i2) = basis_pair(r, dim);
            let (j1, j2) = basis_pair(c, dim);
            if !allowed(i1 as i64 - j1 as i64, i2 as i64 - j2 as i64) {
                bad += 1;
            }
        }
    }
    bad
}

/// Richardson ratios of the `(0,0)` level shift at `V_rf = 0`, for the
/// relative strengths `1e-4, 2e-4, 4e-4`.
pub fn quadratic_onset(p: &CircuitParams, dim: usize) -> Result<Vec<f64>> {
    let k = AppendixAConstants::evaluate(&CircuitParams { v_rf: 0.0, ..p.clone() }, EvaluationMode::Consistent)?;
    let h0 = build_h0(&k, dim)?;
    let hp = build_hp(&k, dim)?;
    let lambdas: Vec<f64> = [1e-4, 2e-4, 4e-4].iter().map(|r| relative_lambda(&h0, &hp, *r)).collect();
    Ok(richardson_ratios(&level_shifts(&h0, &hp, 0, 0, &lambdas)?))
}

/// Worst oracle disagreement over `(j1, j2) ∈ {0,1,2}²`.
pub fn oracle_disagreement(p: &CircuitParams, mode: EvaluationMode, dim: usize) -> Result<f64> {
    let k = AppendixAConstants::evaluate(p, EvaluationMode::Consistent)?;
    let ops = OperatorSet::build(&k, dim, HamiltonianVariant::Literal)?;
    let eff = effective_elements(k.rc(), &k.modes, k.g_m, k.g_nl(), k.v_rf, mode);
    let mut worst = 0.0f64;
    for j1 in 0..3 {
        for j2 in 0..3 {
            let closed = fluctuations(j1 as f64, j2 as f64, &eff, &k.modes)?;
            let (oracle, _) = fluctuation_oracle(&ops, &FockState::number(j1, j2, dim)?)?;
            worst = worst.max(closed.max_rel_diff(&oracle));
        }
    }
    Ok(worst)
}

/// Largest relative change of diagonal energies, oracle variances and
/// first-order amplitudes between `dim` and `dim + 4`.
pub fn truncation_drift(p: &CircuitParams, dim: usize) -> Result<f64> {
    let k = AppendixAConstants::evaluate(p, EvaluationMode::Consistent)?;
    let a = OperatorSet::build(&k, dim, HamiltonianVariant::Literal)?;
    let b = OperatorSet::build(&k, dim + 4, HamiltonianVariant::Literal)?;
    let rel = |x: Complex64, y: Complex64| {
        let s = x.norm().max(y.norm());
        if s == 0.0 {
            0.0
        } else {
            (x - y).norm() / s
        }
    };
    let top = dim / 2 - 2;
    let mut worst = 0.0f64;
    for j1 in 0..=top {
        for j2 in 0..=top {
            worst = worst.max(rel(diagonal_energies(&a.h0, j1, j2)?, diagonal_energies(&b.h0, j1, j2)?));
            let (fa, _) = fluctuation_oracle(&a, &FockState::number(j1, j2, dim)?)?;
            let (fb, _) = fluctuation_oracle(&b, &FockState::number(j1, j2, dim + 4)?)?;
            worst = worst.max(fa.max_rel_diff(&fb));
            let sa = first_order_state(&a.h0, &a.hp, j1, j2, MixingScope::Full)?;
            let sb = first_order_state(&b.h0, &b.hp, j1, j2, MixingScope::Full)?;
            if sa.amplitudes.keys().ne(sb.amplitudes.keys()) {
                return Ok(f64::INFINITY);
            }
            for (key, va) in &sa.amplitudes {
                worst = worst.max(rel(*va, sb.amplitudes[key]));
            }
        }
    }
    Ok(worst)
}

/// Peak position error (in grid steps) and half-width ratio of a single
/// driven, damped, uncoupled mode.
pub fn lorentzian_check(p: &CircuitParams) -> Result<(usize, f64)> {
    let k = AppendixAConstants::evaluate(&decoupled(p), EvaluationMode::Consistent)?;
    let (kappa, _) = damping(p, &k.modes);
    let zero = Complex64::new(0.0, 0.0);
    let coeffs = SteadyStateCoefficients {
        a1: zero, a2: zero, a3: zero, b1: zero, b2: zero, b3: zero,
        e1w: Complex64::new(1e9, 0.0),
        e2w: zero,
    };
    let w0 = k.modes.omega1;
    let steps = 4001;
    let span = 10.0 * kappa;
    let grid: Vec<f64> = (0..steps).map(|i| w0 - span / 2.0 + span * i as f64 / (steps - 1) as f64).collect();
    let n: Vec<f64> = grid
        .iter()
        .map(|&w| steady_state(&coeffs, &k.modes, kappa, kappa, w).map(|s| s.n1ph))
        .collect::<Result<_>>()?;
    let (imax, nmax) = n.iter().enumerate().fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let centre = (steps - 1) / 2;
    let above: Vec<f64> = grid.iter().zip(&n).filter(|(_, &v)| v >= nmax / 2.0).map(|(w, _)| *w).collect();
    let fwhm = above.last().unwrap_or(&0.0) - above.first().unwrap_or(&0.0);
    Ok((imax.abs_diff(centre), fwhm / kappa))
}

/// Runs every invariant on the given configuration.
pub fn run_all(p: &CircuitParams) -> Vec<Check> {
    let mut out = Vec::new();
    macro_rules! attempt {
        ($name:expr, $body:expr) => {
            match (|| -> Result<Check> { $body })() {
                Ok(c) => out.push(c),
                Err(e) => out.push(Check { name: $name, status: Status::Fail, detail: e.to_string() }),
            }
        };
    }

    attempt!("cap_matrix_inverse", {
        let k = AppendixAConstants::evaluate(p, EvaluationMode::Consistent)?;
        let d = inverse_defect(&k);
        Ok(check("cap_matrix_inverse", d <= 1e-12, format!("max|M·M^-1 - I| = {d:.3e}")))
    });
    attempt!("inverse_symmetry", {
        let k = AppendixAConstants::evaluate(p, EvaluationMode::Consistent)?;
        let inv = &k.chain.inverse;
        Ok(check("inverse_symmetry", inv.c12 == inv.c21, format!("C12 = {:e}, C21 = {:e}", inv.c12, inv.c21)))
    });
    attempt!("unit_audit", {
        let audit = unit_audit();
        let bad: Vec<&str> = audit.iter().filter(|u| !u.passes()).map(|u| u.name).collect();
        let flagged = audit.iter().filter(|u| u.known_mismatch).count();
        Ok(check("unit_audit", bad.is_empty(), format!("{} entries, {flagged} known mismatch, failing: {bad:?}", audit.len())))
    });
    attempt!("decoupling_constants", {
        let k = AppendixAConstants::evaluate(&decoupled(p), EvaluationMode::Consistent)?;
        let rc = k.rc();
        let cross = [rc.r_q1q2, rc.r_q1p2, rc.r_q2p1, rc.r_p1p2];
        let coeffs = k.coeffs.named().iter().all(|(_, v)| v.norm() == 0.0);
        let ok = cross.iter().all(|v| *v == 0.0) && coeffs;
        Ok(check("decoupling_constants", ok, format!("cross = {cross:?}, coefficients zero = {coeffs}")))
    });
    attempt!("canonical_commutators", {
        let k = AppendixAConstants::evaluate(p, EvaluationMode::Consistent)?;
        let ops = OperatorSet::build(&k, 16, HamiltonianVariant::Literal)?;
        let (d1, d2, d12) = commutator_defects(&ops);
        let ok = d1 <= 1e-12 * HBAR && d2 <= 1e-12 * HBAR && d12 == 0.0;
        Ok(check(
            "canonical_commutators",
            ok,
            format!("mode1 {:.2e} hbar, mode2 {:.2e} hbar, cross {d12:e}", d1 / HBAR, d2 / HBAR),
        ))
    });
    attempt!("decoupled_spectrum", {
        let e = decoupled_spectrum_error(p, 16, 8)?;
        Ok(check("decoupled_spectrum", e <= 1e-9, format!("worst relative error {e:.3e} (n+m <= 8, dim 16)")))
    });
    attempt!("hp_diagonal_zero", {
        let k = AppendixAConstants::evaluate(p, EvaluationMode::Consistent)?;
        let hp = build_hp(&k, 12)?;
        let d = (0..144).map(|i| hp[(i, i)].norm()).fold(0.0, f64::max);
        Ok(check("hp_diagonal_zero", d == 0.0, format!("max|diag| = {d:e}")))
    });
    attempt!("hp_selection_rule_stated", {
        let k = AppendixAConstants::evaluate(p, EvaluationMode::Consistent)?;
        let n = stated_rule_violations(&build_hp(&k, 12)?, 12);
        Ok(check("hp_selection_rule_stated", n == 0, format!("{n} entries outside dj1 in {{0,+-2}}, dj2 in {{+-1,+-3}}")))
    });
    attempt!("hp_parity_odd", {
        let k = AppendixAConstants::evaluate(p, EvaluationMode::Consistent)?;
        let n = parity_rule_violations(&build_hp(&k, 12)?, 12);
        Ok(check("hp_parity_odd", n == 0, format!("{n} entries with even dj1+dj2")))
    });
    attempt!("quadratic_onset", {
        let r = quadratic_onset(p, 12)?;
        let ok = r.iter().all(|x| (x - 4.0).abs() <= 0.5);
        Ok(check("quadratic_onset", ok, format!("Richardson ratios {r:.4?}")))
    });
    attempt!("state_mixing", {
        let k = AppendixAConstants::evaluate(p, EvaluationMode::Consistent)?;
        let h0 = build_h0(&k, 16)?;
        let hp = build_hp(&k, 16)?;
        let a = first_order_state(&h0, &hp, 0, 0, MixingScope::SecondModeOnly)?.second_mode_keys();
        let b = first_order_state(&h0, &hp, 0, 3, MixingScope::SecondModeOnly)?.second_mode_keys();
        let ok = a == [1, 3] && b == [0, 2, 4, 6];
        Ok(check("state_mixing", ok, format!("|0> -> {a:?}, |3> -> {b:?}")))
    });
    attempt!("fluctuation_oracle", {
        let d = oracle_disagreement(p, EvaluationMode::Consistent, 12)?;
        Ok(check("fluctuation_oracle", d <= 1e-10, format!("worst relative gap {d:.3e}")))
    });
    attempt!("fluctuation_literal_delta", {
        let d = oracle_disagreement(p, EvaluationMode::Literal, 12)?;
        Ok(Check { name: "fluctuation_literal_delta", status: Status::Report, detail: format!("worst relative gap {d:.3e}") })
    });
    attempt!("vacuum_zero_point", {
        let k = AppendixAConstants::evaluate(&decoupled(p), EvaluationMode::Consistent)?;
        let eff = effective_elements(k.rc(), &k.modes, 0.0, k.g_nl(), 0.0, EvaluationMode::Consistent);
        let got = fluctuations(0.0, 0.0, &eff, &k.modes)?.dv1sq;
        let want = HBAR * k.modes.omega1 / (2.0 * k.modes.c_q1);
        let e = (got - want).abs() / want;
        Ok(check("vacuum_zero_point", e <= 1e-12, format!("relative error {e:.3e}")))
    });
    attempt!("photon_zero_law", {
        let q = CircuitParams { v_rf: 0.0, ..p.clone() };
        let k = AppendixAConstants::evaluate(&q, EvaluationMode::Consistent)?;
        let (k1, k2) = damping(&q, &k.modes);
        let ss = steady_state(&k.coeffs, &k.modes, k1, k2, k.modes.omega1 + k.modes.omega2)?;
        Ok(check("photon_zero_law", ss.n1ph == 0.0 && ss.n2ph == 0.0, format!("n = ({:e}, {:e})", ss.n1ph, ss.n2ph)))
    });
    attempt!("steady_state_residual", {
        let k = AppendixAConstants::evaluate(p, EvaluationMode::Consistent)?;
        let (k1, k2) = damping(p, &k.modes);
        let mut worst = 0.0f64;
        for w in Grid::default().omega_values() {
            worst = worst.max(steady_state(&k.coeffs, &k.modes, k1, k2, w)?.residual);
        }
        Ok(check("steady_state_residual", worst <= 1e-12, format!("worst residual {worst:.3e}")))
    });
    attempt!("lorentzian_limit", {
        let (off, ratio) = lorentzian_check(p)?;
        Ok(check("lorentzian_limit", off <= 1 && (ratio - 1.0).abs() <= 0.1, format!("peak offset {off} steps, width/kappa {ratio:.4}")))
    });
    attempt!("nf_at_least_one", {
        let rows = sweep(p, &Grid::default(), EvaluationMode::Consistent, SweepOptions::default())?;
        let bad = rows.iter().filter(|r| !matches!(&r.outcome, Ok(pt) if pt.nf >= 1.0)).count();
        Ok(check("nf_at_least_one", bad == 0, format!("{bad} of {} grid points below 1 or failed", rows.len())))
    });
    attempt!("truncation_convergence", {
        let mut worst = 0.0f64;
        for dim in [12, 16] {
            worst = worst.max(truncation_drift(p, dim)?);
        }
        Ok(check("truncation_convergence", worst < 1e-6, format!("worst drift {worst:.3e} over dim 12 -> 16 -> 20")))
    });
    attempt!("v1_commutator_residual", {
        let k = AppendixAConstants::evaluate(p, EvaluationMode::Consistent)?;
        let ops = OperatorSet::build(&k, 12, HamiltonianVariant::Literal)?;
        Ok(Check {
            name: "v1_commutator_residual",
            status: Status::Report,
            detail: format!("max|[phi1,H0]/(i hbar) - V1| / max|V1| = {:.3e}", ops.v1_commutator_residual()),
        })
    });
    out
}
