use proptest::prelude::*;
use qlna_core::appendix_a::{AppendixAConstants, EvaluationMode};
use qlna_core::fockspace::{build_hp, FockState, HamiltonianVariant, OperatorSet};
use qlna_core::params::{load_config, CircuitParams};
use qlna_core::response::{
    damping, effective_elements, fluctuation_oracle, fluctuations, noise_figure, render_csv, steady_state, sweep,
    FluctuationSet, Grid, SweepOptions, CSV_HEADER,
};
use qlna_core::spectra::literal_energies;
use qlna_core::validate::{inverse_defect, parity_rule_violations};

fn fixture_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/table1.cfg")
}

fn params() -> impl Strategy<Value = CircuitParams> {
    (100e-6..600e-6f64, 0.0..10e-6f64, 0.5e-12..5e-12f64, 0.02..0.4f64, 1e-5..1e-3f64).prop_map(
        |(w, l_ov, c_in, g_m, v_rf)| CircuitParams { w, l_ov, c_in, g_m, v_rf, ..CircuitParams::table1() },
    )
}

fn constants(p: &CircuitParams, mode: EvaluationMode) -> AppendixAConstants {
    AppendixAConstants::evaluate(p, mode).unwrap()
}

#[test]
fn fixture_file_matches_builtin_table() {
    let p = load_config(fixture_path()).unwrap();
    let q = CircuitParams::table1();
    assert_eq!(p.to_config_string(), q.to_config_string());
}

#[test]
fn small_sweep_from_fixture_file() {
    let p = load_config(fixture_path()).unwrap();
    let grid = Grid { win_steps: 4, gm_steps: 3, ..Grid::default() };
    let rows = sweep(&p, &grid, EvaluationMode::Consistent, SweepOptions::default()).unwrap();
    let csv = render_csv(&rows);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 12);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",ok")));
}

#[test]
fn thermal_occupation_only_adds_photons() {
    let p = CircuitParams::table1();
    let grid = Grid { win_steps: 5, gm_steps: 2, ..Grid::default() };
    let cold = sweep(&p, &grid, EvaluationMode::Consistent, SweepOptions { thermal: false }).unwrap();
    let warm = sweep(&p, &grid, EvaluationMode::Consistent, SweepOptions { thermal: true }).unwrap();
    for (c, w) in cold.iter().zip(&warm) {
        let (c, w) = (c.outcome.as_ref().unwrap(), w.outcome.as_ref().unwrap());
        assert!(w.n1ph > c.n1ph && w.n2ph > c.n2ph);
        assert!(w.fluct.dv1sq >= c.fluct.dv1sq);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn inverse_identity_holds(p in params()) {
        prop_assert!(inverse_defect(&constants(&p, EvaluationMode::Consistent)) <= 1e-12);
    }

    #[test]
    fn steady_state_solves_its_system(p in params(), w in 2e9..2e11f64) {
        let k = constants(&p, EvaluationMode::Consistent);
        let (k1, k2) = damping(&p, &k.modes);
        let ss = steady_state(&k.coeffs, &k.modes, k1, k2, w).unwrap();
        prop_assert!(ss.residual <= 1e-10, "residual {:e}", ss.residual);
        prop_assert!(ss.n1ph >= 0.0 && ss.n2ph >= 0.0);
    }

    #[test]
    fn noise_figure_never_below_one(
        v1 in 0.0..1e-3f64, v2 in 0.0..1e-3f64, i1 in 1e-12..1e-3f64, i2 in 1e-12..1e-3f64, g_m in 0.0..1.0f64
    ) {
        let fl = FluctuationSet { dv1sq: v1, dv2sq: v2, di1sq: i1, di2sq: i2 };
        let nf = noise_figure(&fl, 2.0 / 3.0, g_m, 50.0).unwrap();
        prop_assert!(nf.nf >= 1.0);
        prop_assert!((nf.nf_db - 10.0 * nf.nf.log10()).abs() <= 1e-12);
    }

    #[test]
    fn fluctuations_grow_with_photons(p in params(), n1 in 0.0..50.0f64, n2 in 0.0..50.0f64, dn in 0.1..10.0f64) {
        for mode in [EvaluationMode::Consistent, EvaluationMode::Literal] {
            let k = constants(&p, mode);
            let eff = effective_elements(k.rc(), &k.modes, k.g_m, k.g_nl(), k.v_rf, mode);
            let base = fluctuations(n1, n2, &eff, &k.modes).unwrap();
            let more1 = fluctuations(n1 + dn, n2, &eff, &k.modes).unwrap();
            let more2 = fluctuations(n1, n2 + dn, &eff, &k.modes).unwrap();
            for (a, b) in base.as_array().iter().zip(more1.as_array()) {
                prop_assert!(b >= *a);
            }
            for (a, b) in base.as_array().iter().zip(more2.as_array()) {
                prop_assert!(b >= *a);
            }
        }
    }

    #[test]
    fn literal_single_mode_energy_ignores_drive(p in params(), j1 in 0usize..6, j2 in 0usize..6) {
        let k = constants(&p, EvaluationMode::Consistent);
        let q = CircuitParams { v_rf: 0.0, ..p.clone() };
        let k0 = constants(&q, EvaluationMode::Consistent);
        prop_assert_eq!(literal_energies(j1, j2, &k).0.energy, literal_energies(j1, j2, &k0).0.energy);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn oracle_agrees_with_closed_form(p in params(), j1 in 0usize..3, j2 in 0usize..3) {
        let k = constants(&p, EvaluationMode::Consistent);
        let ops = OperatorSet::build(&k, 10, HamiltonianVariant::Literal).unwrap();
        let eff = effective_elements(k.rc(), &k.modes, k.g_m, k.g_nl(), k.v_rf, EvaluationMode::Consistent);
        let closed = fluctuations(j1 as f64, j2 as f64, &eff, &k.modes).unwrap();
        let (oracle, imag) = fluctuation_oracle(&ops, &FockState::number(j1, j2, 10).unwrap()).unwrap();
        prop_assert!(closed.max_rel_diff(&oracle) <= 1e-10);
        let scale = oracle.as_array().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(imag <= 1e-10 * scale);
    }

    #[test]
    fn hp_obeys_parity_rule(p in params()) {
        let k = constants(&p, EvaluationMode::Consistent);
        let hp = build_hp(&k, 8).unwrap();
        prop_assert_eq!(parity_rule_violations(&hp, 8), 0);
        for i in 0..64 {
            prop_assert_eq!(hp[(i, i)].norm(), 0.0);
        }
    }
}
