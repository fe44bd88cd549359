//! Circuit-quantization constants: the capacitance matrix and its inverse,
//! the reciprocal capacitances of the quadratic Hamiltonian, the drive
//! constants, the oscillator modes and the steady-state coupling
//! coefficients.
//!
//! Two evaluation modes exist. [`EvaluationMode::Consistent`] uses the exact
//! inverse of the capacitance matrix. [`EvaluationMode::Literal`] reproduces
//! the printed closed form of the inverse, whose `C22` numerator and
//! determinant carry `C_d` where the exact inverse has `C_gs`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{
    bias_noise_currents, derive_device_caps, derive_nonlinearity, CircuitParams, DeviceCaps,
    Nonlinearity,
};
use crate::units::HBAR;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EvaluationMode {
    Literal,
    #[default]
    Consistent,
}

impl EvaluationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvaluationMode::Literal => "literal",
            EvaluationMode::Consistent => "consistent",
        }
    }
}

impl fmt::Display for EvaluationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvaluationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(EvaluationMode::Literal),
            "consistent" => Ok(EvaluationMode::Consistent),
            other => Err(Error::InvalidMode(format!(
                "unknown evaluation mode `{other}` (expected literal|consistent)"
            ))),
        }
    }
}

/// Symmetric matrix mapping node-flux rates to loop charges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapMatrix {
    pub c_in: f64,
    pub c_gs: f64,
    pub c_gd: f64,
    pub c_d: f64,
    pub c_n: f64,
}

impl CapMatrix {
    pub fn m00(&self) -> f64 {
        self.c_in + self.c_gd + self.c_gs + self.c_n
    }

    pub fn m01(&self) -> f64 {
        -self.c_gd
    }

    pub fn m11(&self) -> f64 {
        self.c_d + self.c_gd
    }

    pub fn as_array(&self) -> [[f64; 2]; 2] {
        [[self.m00(), self.m01()], [self.m01(), self.m11()]]
    }

    pub fn det(&self) -> f64 {
        self.m00() * self.m11() - self.m01() * self.m01()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let (a, b, d) = (self.m00(), self.m01(), self.m11());
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean - radius, mean + radius)
    }
}

pub fn assemble_cap_matrix(caps: &DeviceCaps, c_in: f64, c_d: f64, c_n: f64) -> Result<CapMatrix> {
    let m = CapMatrix { c_in, c_gs: caps.c_gs, c_gd: caps.c_gd, c_d, c_n };
    for v in [c_in, c_d, c_n, caps.c_gs, caps.c_gd] {
        if !v.is_finite() {
            return Err(Error::InvalidMode("non-finite capacitance".into()));
        }
    }
    let (lo, hi) = m.eigenvalues();
    if lo <= 0.0 {
        return Err(Error::NotPositiveDefinite(lo, hi));
    }
    Ok(m)
}

/// Entries of the inverse capacitance matrix (1/F).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseCapMatrix {
    pub c11: f64,
    pub c12: f64,
    pub c21: f64,
    pub c22: f64,
    /// Determinant of the capacitance matrix itself.
    pub det_c: f64,
    /// Denominator actually used for the entries (equals `det_c` in
    /// consistent mode).
    pub c_inv: f64,
    pub mode: EvaluationMode,
}

impl InverseCapMatrix {
    pub fn as_array(&self) -> [[f64; 2]; 2] {
        [[self.c11, self.c12], [self.c21, self.c22]]
    }
}

pub fn invert_cap_matrix(m: &CapMatrix, mode: EvaluationMode) -> Result<InverseCapMatrix> {
    let det_c = m.det();
    if !(det_c > 0.0) {
        return Err(Error::SingularMatrix(det_c));
    }
    let (c22_num, c_inv) = match mode {
        EvaluationMode::Consistent => (m.m00(), det_c),
        EvaluationMode::Literal => {
            let top = m.c_in + m.c_n + m.c_d + m.c_gd;
            (top, top * m.m11() - m.c_gd * m.c_gd)
        }
    };
    if !(c_inv > 0.0) {
        return Err(Error::SingularMatrix(c_inv));
    }
    let c12 = m.c_gd / c_inv;
    Ok(InverseCapMatrix {
        c11: m.m11() / c_inv,
        c12,
        c21: c12,
        c22: c22_num / c_inv,
        det_c,
        c_inv,
        mode,
    })
}

/// Reciprocal capacitances `r_X = 1/(2·C_X)` of the quadratic Hamiltonian.
///
/// `rp_*` are the primed constants of the nonlinear terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReciprocalCaps {
    pub r_q1: f64,
    pub r_q2: f64,
    pub r_q1q2: f64,
    pub r_p1: f64,
    pub r_p2: f64,
    pub r_q1p1: f64,
    pub r_q2p2: f64,
    pub r_q1p2: f64,
    pub r_p1p2: f64,
    pub r_q2p1: f64,
    pub rp_p1p2: f64,
    pub rp_q1p2: f64,
    pub rp_q2p2: f64,
}

impl ReciprocalCaps {
    /// `(name, value)` for every constant, in declaration order.
    pub fn named(&self) -> [(&'static str, f64); 13] {
        [
            ("r_Cq1", self.r_q1),
            ("r_Cq2", self.r_q2),
            ("r_Cq1q2", self.r_q1q2),
            ("r_Cp1", self.r_p1),
            ("r_Cp2", self.r_p2),
            ("r_Cq1p1", self.r_q1p1),
            ("r_Cq2p2", self.r_q2p2),
            ("r_Cq1p2", self.r_q1p2),
            ("r_Cp1p2", self.r_p1p2),
            ("r_Cq2p1", self.r_q2p1),
            ("r_C'p1p2", self.rp_p1p2),
            ("r_C'q1p2", self.rp_q1p2),
            ("r_C'q2p2", self.rp_q2p2),
        ]
    }
}

pub fn reciprocal_constants(inv: &InverseCapMatrix, caps: &DeviceCaps, c_in: f64, c_d: f64) -> ReciprocalCaps {
    let InverseCapMatrix { c11, c12, c21, c22, .. } = *inv;
    let c_gd = caps.c_gd;
    // gate-side and drain-side capacitance sums
    let s1 = c_in + caps.c_gs + c_gd;
    let s2 = c_d + c_gd;
    ReciprocalCaps {
        r_q1: c11 * c11 * s1 / 2.0 + c21 * c21 * s2 / 2.0 - c_gd * c21 * c11,
        r_q2: c12 * c12 * s1 / 2.0 + c22 * c22 * s2 / 2.0 - c_gd * c12 * c22,
        r_q1q2: 2.0 * c12 * c11 * s1 / 2.0 + 2.0 * c22 * c21 * s2 / 2.0
            - c_gd * (c11 * c22 + c21 * c12),
        r_p1: c11 * c11 * s1 / 2.0,
        r_p2: c22 * c22 * s2 / 2.0,
        r_q1p1: 2.0 * c11 * c11 * s1 / 2.0 + c_gd * c21 * c11,
        r_q2p2: -2.0 * c22 * c21 * s2 / 2.0 + c_gd * c22 * c21,
        r_q1p2: -2.0 * c21 * c21 * s2 / 2.0 + c_gd * c11 * c12,
        r_p1p2: -c_gd * c11 * c12,
        r_q2p1: 2.0 * c11 * c12 * s1 / 2.0 + c_gd * c22 * c11,
        rp_p1p2: -2.0 * c11 * c11 * c_in,
        // printed with the same right-hand side as rp_p1p2
        rp_q1p2: -2.0 * c11 * c11 * c_in,
        rp_q2p2: -2.0 * c11 * c12 * c_in,
    }
}

/// Dimensionless drive constants multiplying the RF amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveConsts {
    pub p11: f64,
    pub p12: f64,
    pub p21: f64,
    pub p22: f64,
    pub q11: f64,
    pub q12: f64,
    pub q13: f64,
    pub q21: f64,
    pub q22: f64,
    pub q23: f64,
    pub p1: f64,
    pub p2: f64,
    pub g1: f64,
    pub g2: f64,
}

/// Drive constants. The bias/noise currents enter `P1`, `P2` divided by
/// `g_m·V_rf`, so that product must be nonzero whenever they are.
pub fn drive_constants(
    inv: &InverseCapMatrix,
    caps: &DeviceCaps,
    c_in: f64,
    c_d: f64,
    g_m: f64,
    v_rf: f64,
    i_s_bar: f64,
    i_d_bar: f64,
) -> Result<DriveConsts> {
    let InverseCapMatrix { c11, c12, c21, c22, .. } = *inv;
    let c_gd = caps.c_gd;
    let s1 = c_in + caps.c_gs + c_gd;
    let s2 = c_d + c_gd;

    let p11 = 2.0 * (-2.0 * c11 * c11 * c_in * s1 / 2.0);
    let p12 = 2.0 * (c_gd * c21 * c11 * c_in);
    let p21 = 2.0 * (-2.0 * c21 * c21 * c_in * s2 / 2.0);
    let p22 = 2.0 * (c_gd * c21 * c11 * c_in);
    let q11 = 2.0 * (-2.0 * c11 * c11 * c_in * s1 / 2.0);
    let q21 = 2.0 * (-2.0 * c11 * c12 * c_in * s1 / 2.0);
    let q12 = 2.0 * (2.0 * c21 * c21 * c_in * s2 / 2.0);
    let q22 = 2.0 * (2.0 * c21 * c22 * c_in * s2 / 2.0);
    let q13 = 2.0 * (-c_gd * c21 * c11 * c_in);
    let q23 = 2.0 * (-c_gd * c22 * c11 * c_in);

    let drive = g_m * v_rf;
    let bias_term = |current: f64| -> Result<f64> {
        if current == 0.0 {
            Ok(0.0)
        } else if drive == 0.0 {
            Err(Error::DegenerateDrive("g_m·V_rf"))
        } else {
            Ok(current / drive)
        }
    };

    Ok(DriveConsts {
        p11,
        p12,
        p21,
        p22,
        q11,
        q12,
        q13,
        q21,
        q22,
        q23,
        p1: p11 + p12 - bias_term(i_s_bar)?,
        p2: p21 + p22 - bias_term(i_d_bar)?,
        g1: q11 + q12 + q13,
        g2: q21 + q22 + q23,
    })
}

/// Oscillator modes with the transconductance-corrected inductances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModePair {
    pub omega1: f64,
    pub omega2: f64,
    pub z1: f64,
    pub z2: f64,
    pub l_g_eff: f64,
    pub l_d_eff: f64,
    pub c_q1: f64,
    pub c_q2: f64,
}

pub fn mode_parameters(rc: &ReciprocalCaps, l_g: f64, l_d: f64, g_m: f64) -> Result<ModePair> {
    if !(rc.r_q1 > 0.0 && rc.r_q2 > 0.0) {
        return Err(Error::InvalidMode(format!(
            "non-positive mode capacitance (r_Cq1 = {:e}, r_Cq2 = {:e})",
            rc.r_q1, rc.r_q2
        )));
    }
    let inv_lg = 1.0 / l_g + g_m * g_m * (2.0 * rc.r_p1);
    let inv_ld = 1.0 / l_d + g_m * g_m * (2.0 * rc.r_p2);
    if !(inv_lg > 0.0 && inv_ld > 0.0) {
        return Err(Error::InvalidMode("non-positive effective inductance".into()));
    }
    let (l_g_eff, l_d_eff) = (1.0 / inv_lg, 1.0 / inv_ld);
    let c_q1 = 1.0 / (2.0 * rc.r_q1);
    let c_q2 = 1.0 / (2.0 * rc.r_q2);
    Ok(ModePair {
        omega1: 1.0 / (l_g_eff * c_q1).sqrt(),
        omega2: 1.0 / (l_d_eff * c_q2).sqrt(),
        z1: (l_g_eff / c_q1).sqrt(),
        z2: (l_d_eff / c_q2).sqrt(),
        l_g_eff,
        l_d_eff,
        c_q1,
        c_q2,
    })
}

/// Coupling, self-shift and drive coefficients of the mean-field equations.
///
/// `a*`/`b*` are dimensionless (rates divided by a mode frequency);
/// `e1w`/`e2w` are drive rates (1/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyStateCoefficients {
    pub a1: Complex64,
    pub a2: Complex64,
    pub a3: Complex64,
    pub b1: Complex64,
    pub b2: Complex64,
    pub b3: Complex64,
    pub e1w: Complex64,
    pub e2w: Complex64,
}

impl SteadyStateCoefficients {
    pub fn named(&self) -> [(&'static str, Complex64); 8] {
        [
            ("A1", self.a1),
            ("A2", self.a2),
            ("A3", self.a3),
            ("B1", self.b1),
            ("B2", self.b2),
            ("B3", self.b3),
            ("E1w", self.e1w),
            ("E2w", self.e2w),
        ]
    }
}

/// Scalar inputs to [`steady_coefficients`] besides the constants.
#[derive(Clone, Copy, Debug)]
pub struct DriveInputs {
    pub g_m: f64,
    pub g_nl: f64,
    pub v_rf: f64,
    pub c11: f64,
    pub c_in: f64,
}

pub fn steady_coefficients(
    rc: &ReciprocalCaps,
    modes: &ModePair,
    drive: &DriveConsts,
    input: DriveInputs,
) -> SteadyStateCoefficients {
    let DriveInputs { g_m, g_nl, v_rf, c11, c_in } = input;
    let i = Complex64::i();
    let re = |x: f64| Complex64::new(x, 0.0);
    let (z1, z2) = (modes.z1, modes.z2);
    let sqrt_z1z2 = (z1 * z2).sqrt();
    let z2_over_z1 = (z2 / z1).sqrt();
    let nl_v = g_nl * v_rf;
    // 1/(4C_X) = r_X/2
    let q = |r: f64| r / 2.0;

    let a1 = (-i * q(rc.r_q1q2) / sqrt_z1z2 - re(g_m * q(rc.r_q2p1))) / modes.omega2;
    let a3 = re(g_m * q(rc.r_q1p1)) / modes.omega1;
    let a2 = (-i * g_m * g_m * q(rc.r_p1p2) * sqrt_z1z2
        + re(g_m * q(rc.r_q1p2) * z2_over_z1)
        - i * g_m * nl_v * q(rc.rp_p1p2) * sqrt_z1z2
        + re(nl_v * q(rc.rp_q1p2) * z2_over_z1))
        / modes.omega2;
    let b1 = (-i * q(rc.r_q1q2) / sqrt_z1z2
        - re(g_m * q(rc.r_q1p2) * z2_over_z1)
        - re(nl_v * q(rc.rp_q1p2) * z2_over_z1))
        / modes.omega1;
    let b3 = re(g_m * q(rc.r_q2p2) + nl_v * q(rc.rp_q2p2)) / modes.omega2;
    let b2 = (-i * g_m * g_m * q(rc.r_p1p2) * sqrt_z1z2 + re(g_m * q(rc.r_q2p1))
        - i * g_m * nl_v * q(rc.rp_p1p2) * sqrt_z1z2)
        / modes.omega1;

    let e1w = re(drive.g1 * v_rf / 2.0 * (1.0 / (2.0 * z1 * HBAR)).sqrt())
        - i * (drive.p1 * g_m * v_rf / 2.0) * (z1 / (2.0 * HBAR)).sqrt();
    let e2w = re(drive.g2 * v_rf / 2.0 * (1.0 / (2.0 * z2 * HBAR)).sqrt())
        - i * (drive.p2 * g_m * v_rf / 2.0) * (z2 / (2.0 * HBAR)).sqrt()
        - i * (c11 * c11 * c_in * c_in * g_nl * v_rf * v_rf) * (z2 / (2.0 * HBAR)).sqrt();

    SteadyStateCoefficients { a1, a2, a3, b1, b2, b3, e1w, e2w }
}

/// Operating-point-independent part of the constant chain: device
/// capacitances, nonlinearity, capacitance matrix, its inverse and the
/// reciprocal capacitances. None of these depend on `g_m`, `V_rf` or `ω_in`.
#[derive(Clone, Copy, Debug)]
pub struct CapacitanceChain {
    pub mode: EvaluationMode,
    pub caps: DeviceCaps,
    pub nl: Nonlinearity,
    pub cap_matrix: CapMatrix,
    pub inverse: InverseCapMatrix,
    pub rc: ReciprocalCaps,
}

impl CapacitanceChain {
    pub fn new(p: &CircuitParams, mode: EvaluationMode) -> Result<Self> {
        let caps = derive_device_caps(p);
        let nl = derive_nonlinearity(p);
        let cap_matrix = assemble_cap_matrix(&caps, p.c_in, p.c_d, nl.c_n)?;
        let inverse = invert_cap_matrix(&cap_matrix, mode)?;
        let rc = reciprocal_constants(&inverse, &caps, p.c_in, p.c_d);
        Ok(CapacitanceChain { mode, caps, nl, cap_matrix, inverse, rc })
    }
}

/// Literal-versus-consistent comparison of the inverse capacitance matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaReport {
    /// `|C11_lit − C11_con| / |C11_con|`
    pub c11_rel: f64,
    pub c12_rel: f64,
    pub c22_rel: f64,
    /// The primed `p1p2` and `q1p2` constants share one printed formula.
    pub primed_duplicate: bool,
}

pub fn delta_report(cap_matrix: &CapMatrix) -> Result<DeltaReport> {
    let lit = invert_cap_matrix(cap_matrix, EvaluationMode::Literal)?;
    let con = invert_cap_matrix(cap_matrix, EvaluationMode::Consistent)?;
    let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() };
    Ok(DeltaReport {
        c11_rel: rel(lit.c11, con.c11),
        c12_rel: rel(lit.c12, con.c12),
        c22_rel: rel(lit.c22, con.c22),
        primed_duplicate: true,
    })
}

/// Every constant for one operating point.
#[derive(Clone, Copy, Debug)]
pub struct AppendixAConstants {
    pub chain: CapacitanceChain,
    /// RF-proportional drive constants used by the dynamics (static bias and
    /// noise currents excluded).
    pub drive: DriveConsts,
    pub modes: ModePair,
    pub coeffs: SteadyStateCoefficients,
    pub delta: DeltaReport,
    pub g_m: f64,
    pub v_rf: f64,
    pub i_s_bar: f64,
    pub i_d_bar: f64,
}

impl AppendixAConstants {
    /// Evaluates the chain at the config's own `g_m`.
    pub fn evaluate(p: &CircuitParams, mode: EvaluationMode) -> Result<Self> {
        let chain = CapacitanceChain::new(p, mode)?;
        Self::at(&chain, p, p.g_m)
    }

    /// Evaluates the `g_m`-dependent part on top of a precomputed chain.
    pub fn at(chain: &CapacitanceChain, p: &CircuitParams, g_m: f64) -> Result<Self> {
        let CapacitanceChain { caps, nl, inverse, rc, .. } = *chain;
        let (i_s_bar, i_d_bar) = bias_noise_currents(&CircuitParams { g_m, ..p.clone() });
        let drive = drive_constants(&inverse, &caps, p.c_in, p.c_d, g_m, p.v_rf, 0.0, 0.0)?;
        let modes = mode_parameters(&rc, p.l_g, p.l_d, g_m)?;
        let coeffs = steady_coefficients(
            &rc,
            &modes,
            &drive,
            DriveInputs { g_m, g_nl: nl.g_nl, v_rf: p.v_rf, c11: inverse.c11, c_in: p.c_in },
        );
        let delta = delta_report(&chain.cap_matrix)?;
        let out = AppendixAConstants {
            chain: *chain,
            drive,
            modes,
            coeffs,
            delta,
            g_m,
            v_rf: p.v_rf,
            i_s_bar,
            i_d_bar,
        };
        if !out.all_finite() {
            return Err(Error::InvalidMode("non-finite constant".into()));
        }
        Ok(out)
    }

    /// Drive constants including the bias/noise currents.
    pub fn drive_with_bias(&self, p: &CircuitParams) -> Result<DriveConsts> {
        let c = &self.chain;
        drive_constants(
            &c.inverse,
            &c.caps,
            p.c_in,
            p.c_d,
            self.g_m,
            self.v_rf,
            self.i_s_bar,
            self.i_d_bar,
        )
    }

    pub fn mode(&self) -> EvaluationMode {
        self.chain.mode
    }

    pub fn rc(&self) -> &ReciprocalCaps {
        &self.chain.rc
    }

    pub fn g_nl(&self) -> f64 {
        self.chain.nl.g_nl
    }

    fn all_finite(&self) -> bool {
        let m = &self.modes;
        let reals = self
            .chain
            .rc
            .named()
            .iter()
            .map(|(_, v)| *v)
            .chain([m.omega1, m.omega2, m.z1, m.z2, m.l_g_eff, m.l_d_eff])
            .chain([self.drive.p1, self.drive.p2, self.drive.g1, self.drive.g2])
            .collect::<Vec<_>>();
        reals.iter().all(|v| v.is_finite())
            && self.coeffs.named().iter().all(|(_, c)| c.re.is_finite() && c.im.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> CircuitParams {
        CircuitParams::table1()
    }

    fn decoupled() -> CircuitParams {
        CircuitParams { l_ov: 0.0, g_m: 0.0, v_rf: 0.0, ..fixture() }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn cap_matrix_entries() {
        let p = fixture();
        let caps = derive_device_caps(&p);
        let m = assemble_cap_matrix(&caps, p.c_in, p.c_d, 0.0).unwrap();
        assert!(rel(m.m00(), 4.045e-12) < 1e-3);
        assert_eq!(m.m00(), p.c_in + caps.c_gd + caps.c_gs);

        let with_cn = assemble_cap_matrix(&caps, p.c_in, p.c_d, 8.9e-13).unwrap();
        assert!((with_cn.m00() - m.m00() - 8.9e-13).abs() < 1e-27);

        let no_gd = DeviceCaps { c_gd: 0.0, ..caps };
        let m = assemble_cap_matrix(&no_gd, p.c_in, p.c_d, 0.0).unwrap();
        assert_eq!(m.m01(), 0.0);
    }

    #[test]
    fn pathological_nonlinear_capacitance_is_rejected() {
        let p = fixture();
        let caps = derive_device_caps(&p);
        match assemble_cap_matrix(&caps, p.c_in, p.c_d, -1e-10) {
            Err(Error::NotPositiveDefinite(lo, _)) => assert!(lo < 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn consistent_inverse_matches_cofactor_formula() {
        let p = fixture();
        let caps = derive_device_caps(&p);
        let m = assemble_cap_matrix(&caps, p.c_in, p.c_d, 0.0).unwrap();
        let inv = invert_cap_matrix(&m, EvaluationMode::Consistent).unwrap();
        // 2×2 cofactor inverse written out independently
        let a = p.c_in + caps.c_gd + caps.c_gs;
        let d = p.c_d + caps.c_gd;
        let det = a * d - caps.c_gd * caps.c_gd;
        assert!(rel(inv.c11, d / det) < 1e-14);
        assert!(rel(inv.c22, a / det) < 1e-14);
        assert!(rel(inv.c12, caps.c_gd / det) < 1e-14);
        assert_eq!(inv.c12, inv.c21);

        let mm = m.as_array();
        let ii = inv.as_array();
        let scale = ii.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
        for r in 0..2 {
            for c in 0..2 {
                let v = mm[r][0] * ii[0][c] + mm[r][1] * ii[1][c];
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((v - want).abs() <= 1e-12 * scale.max(1.0), "{r}{c}: {v}");
            }
        }
    }

    #[test]
    fn literal_inverse_uses_printed_denominator() {
        let p = fixture();
        let caps = derive_device_caps(&p);
        let m = assemble_cap_matrix(&caps, p.c_in, p.c_d, 0.0).unwrap();
        let inv = invert_cap_matrix(&m, EvaluationMode::Literal).unwrap();
        let top = p.c_in + p.c_d + caps.c_gd;
        let c_inv = top * (p.c_d + caps.c_gd) - caps.c_gd * caps.c_gd;
        assert!(rel(inv.c_inv, c_inv) < 1e-14);
        assert!(rel(inv.c11, (p.c_d + caps.c_gd) / c_inv) < 1e-14);
        assert!(rel(inv.c22, top / c_inv) < 1e-14);
        assert_eq!(inv.c12, inv.c21);
        assert_eq!(inv.det_c, m.det());

        let delta = delta_report(&m).unwrap();
        assert!(delta.c11_rel > 0.0 && delta.c11_rel.is_finite());
        assert!(delta.primed_duplicate);
    }

    #[test]
    fn reciprocal_constants_vanish_without_gate_drain_overlap() {
        let chain = CapacitanceChain::new(&decoupled(), EvaluationMode::Consistent).unwrap();
        let rc = chain.rc;
        assert_eq!(rc.r_q1q2, 0.0);
        assert_eq!(rc.r_p1p2, 0.0);
        assert_eq!(rc.r_q1p2, 0.0);
        assert_eq!(rc.r_q2p1, 0.0);
        assert_eq!(rc.r_q2p2, 0.0);
        assert_eq!(rc.rp_q2p2, 0.0);
        assert!(rc.r_q1 > 0.0 && rc.r_q2 > 0.0);
    }

    #[test]
    fn reciprocal_constants_are_homogeneous() {
        let p = fixture();
        let scaled = CircuitParams {
            c_in: 2.0 * p.c_in,
            c_d: 2.0 * p.c_d,
            // doubles C_gs and C_gd
            t_sio2: p.t_sio2 / 2.0,
            ..p.clone()
        };
        for mode in [EvaluationMode::Consistent, EvaluationMode::Literal] {
            let a = CapacitanceChain::new(&p, mode).unwrap().rc.named();
            let b = CapacitanceChain::new(&scaled, mode).unwrap().rc.named();
            for ((name, x), (_, y)) in a.iter().zip(b.iter()) {
                assert!((y - x / 2.0).abs() <= 1e-13 * x.abs(), "{name}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn consistent_mode_diagonal_constants_are_the_inverse_entries() {
        // With C_N = 0 the quadratic form C·M·C collapses to C.
        let chain = CapacitanceChain::new(&fixture(), EvaluationMode::Consistent).unwrap();
        let inv = chain.inverse;
        assert!(rel(chain.rc.r_q1, inv.c11 / 2.0) < 1e-12);
        assert!(rel(chain.rc.r_q2, inv.c22 / 2.0) < 1e-12);
        assert!(rel(chain.rc.r_q1q2, inv.c12) < 1e-12);
    }

    #[test]
    fn drive_constant_reductions() {
        let p = fixture();
        let chain = CapacitanceChain::new(&p, EvaluationMode::Consistent).unwrap();
        let d = drive_constants(&chain.inverse, &chain.caps, p.c_in, p.c_d, 0.1, 3e-4, 0.0, 0.0)
            .unwrap();
        assert_eq!(d.p1, d.p11 + d.p12);
        assert_eq!(d.p2, d.p21 + d.p22);
        assert_eq!(d.g1, d.q11 + d.q12 + d.q13);

        let chain0 = CapacitanceChain::new(&decoupled(), EvaluationMode::Consistent).unwrap();
        let d0 =
            drive_constants(&chain0.inverse, &chain0.caps, p.c_in, p.c_d, 0.1, 3e-4, 0.0, 0.0)
                .unwrap();
        assert_eq!((d0.p12, d0.p22, d0.q13, d0.q23), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn degenerate_drive_with_bias_currents_is_an_error() {
        let p = fixture();
        let chain = CapacitanceChain::new(&p, EvaluationMode::Consistent).unwrap();
        let err =
            drive_constants(&chain.inverse, &chain.caps, p.c_in, p.c_d, 0.1, 0.0, 1e-10, 0.0)
                .unwrap_err();
        assert!(err.to_string().contains("g_m·V_rf"));
        let ok = drive_constants(&chain.inverse, &chain.caps, p.c_in, p.c_d, 0.1, 3e-4, 1e-10, 0.0)
            .unwrap();
        assert!(rel(ok.p11 + ok.p12 - ok.p1, 1e-10 / (0.1 * 3e-4)) < 1e-9);
    }

    #[test]
    fn mode_scaling() {
        let p = fixture();
        let chain = CapacitanceChain::new(&p, EvaluationMode::Consistent).unwrap();
        let m0 = mode_parameters(&chain.rc, p.l_g, p.l_d, 0.0).unwrap();
        assert_eq!(m0.l_g_eff, p.l_g);
        assert!(rel(m0.omega1, 1.0 / (p.l_g * m0.c_q1).sqrt()) < 1e-15);
        let m4 = mode_parameters(&chain.rc, 4.0 * p.l_g, p.l_d, 0.0).unwrap();
        assert!(rel(m4.omega1, m0.omega1 / 2.0) < 1e-14);
        assert!(rel(m0.z1 * m0.z1, m0.l_g_eff / m0.c_q1) < 1e-14);

        let m = mode_parameters(&chain.rc, p.l_g, p.l_d, 0.1).unwrap();
        assert!(m.l_g_eff < p.l_g && m.omega1 > m0.omega1);
    }

    #[test]
    fn coefficients_vanish_in_decoupled_limit() {
        let k = AppendixAConstants::evaluate(&decoupled(), EvaluationMode::Consistent).unwrap();
        for (name, c) in k.coeffs.named() {
            assert_eq!(c, Complex64::new(0.0, 0.0), "{name}");
        }
    }

    #[test]
    fn drive_amplitudes_vanish_without_rf() {
        let p = CircuitParams { v_rf: 0.0, ..fixture() };
        let k = AppendixAConstants::evaluate(&p, EvaluationMode::Consistent).unwrap();
        assert_eq!(k.coeffs.e1w, Complex64::new(0.0, 0.0));
        assert_eq!(k.coeffs.e2w, Complex64::new(0.0, 0.0));
        assert!(k.coeffs.a3.re > 0.0);
    }

    #[test]
    fn inputs_perturbed_by_1e9_move_outputs_by_at_most_1e6() {
        let p = fixture();
        let base = AppendixAConstants::evaluate(&p, EvaluationMode::Consistent).unwrap();
        let bumps: Vec<CircuitParams> = vec![
            CircuitParams { c_in: p.c_in * (1.0 + 1e-9), ..p.clone() },
            CircuitParams { c_d: p.c_d * (1.0 + 1e-9), ..p.clone() },
            CircuitParams { l_ov: p.l_ov * (1.0 + 1e-9), ..p.clone() },
            CircuitParams { g_m: p.g_m * (1.0 + 1e-9), ..p.clone() },
            CircuitParams { v_rf: p.v_rf * (1.0 + 1e-9), ..p.clone() },
            CircuitParams { l_g: p.l_g * (1.0 + 1e-9), ..p.clone() },
        ];
        for q in bumps {
            let k = AppendixAConstants::evaluate(&q, EvaluationMode::Consistent).unwrap();
            // r_Cq1p2 cancels to rounding level in consistent mode; measure
            // it against the family scale
            let family = base.rc().named().iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()));
            for ((name, a), (_, b)) in base.rc().named().iter().zip(k.rc().named().iter()) {
                let scale = a.abs().max(1e-9 * family);
                assert!((a - b).abs() / scale <= 1e-6, "{name}");
            }
            for ((name, a), (_, b)) in base.coeffs.named().iter().zip(k.coeffs.named().iter()) {
                let scale = a.norm().max(1e-300);
                assert!((a - b).norm() / scale <= 1e-6, "{name}");
            }
        }
    }

    /// Values from an independent 40-digit evaluation of the fixture chain.
    #[test]
    #[allow(clippy::excessive_precision)]
    fn golden_fixture_values() {
        let p = fixture();
        let k = AppendixAConstants::evaluate(&p, EvaluationMode::Consistent).unwrap();
        let inv = k.chain.inverse;
        assert!(rel(inv.c11, 2.599_649_960_884_140e11) < 1e-12);
        assert!(rel(inv.c12, 1.986_136_086_100_295e11) < 1e-12);
        assert!(rel(inv.c22, 3.101_724_159_550_574e12) < 1e-12);

        let rc = k.rc();
        let golden = [
            (rc.r_q1, 129_982_498_044.207_01),
            (rc.r_q2, 1_550_862_079_775.286_8),
            (rc.r_q1q2, 198_613_608_610.029_53),
            (rc.r_p1, 136_668_530_517.747),
            (rc.r_p2, 1_630_635_236_803.187_6),
            (rc.r_q1p1, 286_709_125_982.573_98),
            (rc.r_q2p2, -49_283_570_259.300_032),
            (rc.r_p1p2, -13_372_064_947.079_984),
            (rc.r_q2p1, 417_659_768_630.203_34),
            (rc.rp_p1p2, -243_294_477_088.496_81),
            (rc.rp_q1p2, -243_294_477_088.496_81),
            (rc.rp_q2p2, -185_877_309_547.483_63),
        ];
        for (got, want) in golden {
            assert!(rel(got, want) < 1e-11, "{got} vs {want}");
        }
        // exact cancellation in consistent mode
        assert!(rc.r_q1p2.abs() < 1e-3);

        assert!(rel(k.drive.p1, -0.935_873_985_918_290_46) < 1e-11);
        assert!(rel(k.drive.g1, -0.984_013_419_727_778_4) < 1e-11);
        assert!(rel(k.drive.g2, -0.751_787_583_534_366_01) < 1e-11);
        assert!(k.drive.p2.abs() < 1e-12);

        let m = k.modes;
        assert!(rel(m.omega1, 30_450_257_417.129_544) < 1e-12);
        assert!(rel(m.omega2, 323_141_744_421.337_91) < 1e-12);
        assert!(rel(m.z1, 8.537_366_122_303_216_6) < 1e-12);
        assert!(rel(m.z2, 9.598_648_930_688_134_4) < 1e-12);

        let c = k.coeffs;
        let golden = [
            (c.a1, Complex64::new(-0.064_624_855_166_596_073, -0.033_948_370_585_089_788)),
            (c.a2, Complex64::new(-2.993_736_370_755_686_8e-5, 0.001_898_578_661_297_288_9)),
            (c.a3, Complex64::new(0.470_782_762_285_103_21, 0.0)),
            (c.b1, Complex64::new(3.176_988_555_240_896_6e-4, -0.360_264_136_386_472_37)),
            (c.b2, Complex64::new(0.685_806_630_316_452_17, 0.020_147_942_006_809_09)),
            (c.b3, Complex64::new(-0.007_647_259_924_582_667_6, 0.0)),
            (c.e1w, Complex64::new(-3_478_381_790_727.518_6, 2_824_343_464_691.166_4)),
            (c.e2w, Complex64::new(-2_506_272_423_717.761_5, -1_051_015_820.904_321_2)),
        ];
        for (got, want) in golden {
            assert!((got - want).norm() < 1e-10 * want.norm(), "{got} vs {want}");
        }

        let m0 = AppendixAConstants::evaluate(&CircuitParams { g_m: 0.0, ..p }, EvaluationMode::Consistent)
            .unwrap()
            .modes;
        assert!(rel(m0.omega1, 14_718_610_557.397_903) < 1e-12);
        assert!(rel(m0.omega2, 57_139_940_492.854_204) < 1e-12);
        assert!(rel(m0.z1, 17.662_332_668_877_484) < 1e-12);
        assert!(rel(m0.z2, 54.282_943_468_211_494) < 1e-12);
    }

    #[test]
    fn golden_literal_inverse() {
        let k = AppendixAConstants::evaluate(&fixture(), EvaluationMode::Literal).unwrap();
        assert!(rel(k.chain.inverse.c11, 5.151_664_730_978_248e11) < 1e-12);
        assert!(rel(k.chain.inverse.c22, 3.250_684_768_273_738e12) < 1e-12);
    }

    #[test]
    fn mode_names_parse() {
        assert_eq!("literal".parse::<EvaluationMode>().unwrap(), EvaluationMode::Literal);
        assert_eq!("consistent".parse::<EvaluationMode>().unwrap(), EvaluationMode::Consistent);
        assert!("exact".parse::<EvaluationMode>().is_err());
    }
}
