use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use qlna_core::appendix_a::AppendixAConstants;
use qlna_core::fockspace::{HamiltonianVariant, OperatorSet};
use qlna_core::params::{load_config, CircuitParams};
use qlna_core::response::{effective_elements, render_csv, sweep, SweepOptions};
use qlna_core::spectra::{first_order_state, spectrum_report, MixingScope};
use qlna_core::units::Dim;
use qlna_core::{validate, EvaluationMode};

use crate::cli::{CommonArgs, DeriveArgs, PerturbArgs, ScopeArg, SweepArgs};
use crate::output::{manifest_path, sibling_path, write_atomic, Manifest};

pub enum Failure {
    /// Exit code 1.
    Compute(String),
    /// Exit code 3.
    Validation,
}

impl From<qlna_core::Error> for Failure {
    fn from(e: qlna_core::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Compute(format!("io: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn load(common: &CommonArgs) -> Result<(CircuitParams, EvaluationMode), Failure> {
    let p = load_config(&common.config)
        .map_err(|e| Failure::Compute(format!("{}: {e}", common.config.display())))?;
    Ok((p, common.mode.into()))
}

/// Writes `csv` to `out` (with its manifest) or to stdout.
fn emit(out: Option<&Path>, csv: &str, manifest: impl FnOnce() -> Manifest) -> Outcome {
    match out {
        Some(path) => {
            write_atomic(path, csv)?;
            write_atomic(&manifest_path(path), &manifest().render())?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn manifest(
    command: &'static str,
    common: &CommonArgs,
    p: &CircuitParams,
    parameters: Vec<(String, String)>,
    started: Instant,
) -> Manifest {
    Manifest {
        command,
        mode: EvaluationMode::from(common.mode).to_string(),
        config_path: common.config.display().to_string(),
        config_echo: p.to_config_string(),
        parameters,
        elapsed_ms: started.elapsed().as_millis(),
    }
}

struct Rows {
    mode: String,
    text: String,
}

impl Rows {
    fn new(mode: EvaluationMode) -> Self {
        Rows { mode: mode.to_string(), text: "name,value_re,value_im,units,mode\n".into() }
    }

    fn real(&mut self, name: &str, v: f64, units: &str) {
        let _ = writeln!(self.text, "{name},{v:e},0e0,{units},{}", self.mode);
    }

    fn complex(&mut self, name: &str, v: Complex64, units: &str) {
        let _ = writeln!(self.text, "{name},{:e},{:e},{units},{}", v.re, v.im, self.mode);
    }
}

pub fn derive(args: &DeriveArgs) -> Outcome {
    let started = Instant::now();
    let (p, mode) = load(&args.common)?;
    let k = AppendixAConstants::evaluate(&p, mode)?;
    let c = &k.chain;
    let f = Dim::FARAD.label();
    let inv_f = Dim::FARAD.recip().label();
    let mut rows = Rows::new(mode);

    rows.real("C_ox_area", c.caps.c_ox_area, &(Dim::FARAD / (Dim::METRE * Dim::METRE)).label());
    rows.real("C_gs", c.caps.c_gs, &f);
    rows.real("C_gd", c.caps.c_gd, &f);
    rows.real("g_m3L", c.nl.g_m3l, "A/V^2");
    rows.real("g_NL", c.nl.g_nl, "A/V^2");
    rows.real("C_N", c.nl.c_n, &f);
    rows.real("M00", c.cap_matrix.m00(), &f);
    rows.real("M01", c.cap_matrix.m01(), &f);
    rows.real("M11", c.cap_matrix.m11(), &f);
    rows.real("C11", c.inverse.c11, &inv_f);
    rows.real("C12", c.inverse.c12, &inv_f);
    rows.real("C21", c.inverse.c21, &inv_f);
    rows.real("C22", c.inverse.c22, &inv_f);
    rows.real("det_C", c.inverse.det_c, "F^2");
    rows.real("C_inv", c.inverse.c_inv, "1/F^2");
    for (name, v) in c.rc.named() {
        rows.real(name, v, &inv_f);
    }
    let d = &k.drive;
    for (name, v) in [
        ("P11", d.p11), ("P12", d.p12), ("P21", d.p21), ("P22", d.p22),
        ("Q11", d.q11), ("Q12", d.q12), ("Q13", d.q13),
        ("Q21", d.q21), ("Q22", d.q22), ("Q23", d.q23),
        ("P1", d.p1), ("P2", d.p2), ("G1", d.g1), ("G2", d.g2),
    ] {
        rows.real(name, v, "1");
    }
    rows.real("I_s_bar", k.i_s_bar, "A");
    rows.real("I_d_bar", k.i_d_bar, "A");
    match k.drive_with_bias(&p) {
        Ok(b) => {
            rows.real("P1_with_bias", b.p1, "1");
            rows.real("P2_with_bias", b.p2, "1");
        }
        Err(e) => eprintln!("note: {e}"),
    }
    let m = &k.modes;
    rows.real("omega1", m.omega1, "rad/s");
    rows.real("omega2", m.omega2, "rad/s");
    rows.real("Z1", m.z1, "ohm");
    rows.real("Z2", m.z2, "ohm");
    rows.real("L_g_eff", m.l_g_eff, "H");
    rows.real("L_d_eff", m.l_d_eff, "H");
    rows.real("C_q1", m.c_q1, &f);
    rows.real("C_q2", m.c_q2, &f);
    for (name, v) in k.coeffs.named() {
        let units = if name.starts_with('E') { "1/s" } else { "1" };
        rows.complex(name, v, units);
    }
    let eff = effective_elements(k.rc(), m, k.g_m, k.g_nl(), k.v_rf, mode);
    for (name, v) in eff.named() {
        rows.real(name, v, if name.contains("_L_") { "1/H" } else { "1/F" });
    }
    rows.real("delta_C11_rel", k.delta.c11_rel, "1");
    rows.real("delta_C12_rel", k.delta.c12_rel, "1");
    rows.real("delta_C22_rel", k.delta.c22_rel, "1");
    rows.real("primed_duplicate", if k.delta.primed_duplicate { 1.0 } else { 0.0 }, "1");

    emit(args.out.as_deref(), &rows.text, || {
        manifest("derive", &args.common, &p, vec![], started)
    })
}

pub fn modes(args: &CommonArgs) -> Outcome {
    let (p, mode) = load(args)?;
    let m = AppendixAConstants::evaluate(&p, mode)?.modes;
    let two_pi = 2.0 * std::f64::consts::PI;
    println!("{:<10} {:>24} {:>24}", "quantity", "rad/s", "Hz");
    for (name, w) in [("omega1", m.omega1), ("omega2", m.omega2), ("omega1+2", m.omega1 + m.omega2)] {
        println!("{name:<10} {w:>24e} {:>24e}", w / two_pi);
    }
    println!("{:<10} {:>24} ", "quantity", "ohm");
    println!("{:<10} {:>24e}", "Z1", m.z1);
    println!("{:<10} {:>24e}", "Z2", m.z2);
    Ok(())
}

pub fn perturb(args: &PerturbArgs) -> Outcome {
    let started = Instant::now();
    let (p, mode) = load(&args.common)?;
    let dim = args.dim.unwrap_or(p.fock_dim);
    let k = AppendixAConstants::evaluate(&p, mode)?;
    let variant = if args.hermitized { HamiltonianVariant::Hermitized } else { HamiltonianVariant::Literal };
    let ops = OperatorSet::build(&k, dim, variant)?;
    let scope = match args.scope {
        ScopeArg::Full => MixingScope::Full,
        ScopeArg::SecondMode => MixingScope::SecondModeOnly,
    };
    let state = first_order_state(&ops.h0, &ops.hp, args.j1, args.j2, scope)?;

    let mut states = String::from("key,amplitude_re,amplitude_im\n");
    for ((a, b), c) in &state.amplitudes {
        let _ = writeln!(states, "{a}:{b},{:e},{:e}", c.re, c.im);
    }

    let report = spectrum_report(&k, &ops, args.lambda, dim / 2 - 2)?;
    let mut spectrum = String::from("state,literal_re,literal_im,numeric_re,numeric_im,exact_re,exact_im\n");
    for r in &report.rows {
        let _ = writeln!(
            spectrum,
            "{}:{},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.state.0, r.state.1, r.literal.re, r.literal.im, r.numeric.re, r.numeric.im, r.exact.re, r.exact.im
        );
    }

    match args.out.as_deref() {
        Some(path) => {
            let params = vec![
                ("j1".to_string(), args.j1.to_string()),
                ("j2".to_string(), args.j2.to_string()),
                ("dim".to_string(), dim.to_string()),
                ("scope".to_string(), format!("{:?}", args.scope)),
                ("lambda".to_string(), format!("{:e}", args.lambda)),
                ("hermitized".to_string(), args.hermitized.to_string()),
            ];
            write_atomic(path, &states)?;
            write_atomic(&sibling_path(path, "spectrum.csv"), &spectrum)?;
            write_atomic(&manifest_path(path), &manifest("perturb", &args.common, &p, params, started).render())?;
        }
        None => {
            print!("{states}");
            println!();
            print!("{spectrum}");
        }
    }
    Ok(())
}

pub fn sweep_cmd(verb: &'static str, args: &SweepArgs) -> Outcome {
    let started = Instant::now();
    let (p, mode) = load(&args.common)?;
    let grid = args.grid();
    let rows = sweep(&p, &grid, mode, SweepOptions { thermal: args.thermal })?;
    let csv = render_csv(&rows);
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} of {} grid points failed; see the status column", rows.len());
    }
    emit(args.out.as_deref(), &csv, || {
        let params = vec![
            ("win_min".into(), format!("{:e}", grid.win_min)),
            ("win_max".into(), format!("{:e}", grid.win_max)),
            ("win_steps".into(), grid.win_steps.to_string()),
            ("gm_min".into(), format!("{:e}", grid.gm_min)),
            ("gm_max".into(), format!("{:e}", grid.gm_max)),
            ("gm_steps".into(), grid.gm_steps.to_string()),
            ("thermal".into(), args.thermal.to_string()),
            ("rows".into(), rows.len().to_string()),
        ];
        manifest(verb, &args.common, &p, params, started)
    })
}

pub fn validate_cmd(args: &CommonArgs) -> Outcome {
    let (p, _) = load(args)?;
    let checks = validate::run_all(&p);
    print!("{}", validate::render_table(&checks));
    if validate::all_pass(&checks) {
        Ok(())
    } else {
        Err(Failure::Validation)
    }
}
