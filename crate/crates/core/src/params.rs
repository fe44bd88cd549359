//! Circuit and device parameters, the `key = value` config format, and the
//! quantities derived directly from them (MOS capacitances, the expanded
//! drain-current nonlinearity, bias/noise current sources).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::units::{Dim, EPS0, EPS_R_SIO2, K_B};

/// Raw physical and circuit inputs, SI units throughout.
///
/// `kappa1`, `kappa2` and `omega_in` are optional: when absent they are
/// resolved after the oscillator modes are known (`ω_k/50` for the damping
/// rates, `ω₁+ω₂` for the drive frequency).
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitParams {
    pub w: f64,
    pub l_t: f64,
    pub t_sio2: f64,
    pub l_ov: f64,
    pub t_c: f64,
    pub gamma: f64,
    pub c_f: f64,
    pub c_in: f64,
    pub c_d: f64,
    pub l_g: f64,
    pub l_d: f64,
    pub g_m: f64,
    pub g_m2: f64,
    pub g_m3: f64,
    pub v_rf: f64,
    pub omega_in: Option<f64>,
    pub r_s: f64,
    pub phi1dc_rate: f64,
    pub phi2dc: f64,
    pub i_s0: f64,
    pub i_d0: f64,
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    pub fock_dim: usize,
    /// Config keys that were absent and took their default.
    pub defaulted: Vec<&'static str>,
}

/// Keys that must be present in a config file.
pub const REQUIRED_KEYS: [&str; 13] = [
    "W", "L_t", "t_SiO2", "L_ov", "T_c", "gamma", "C_f", "C_in", "C_d", "L_g", "L_d", "g_m2",
    "g_m3",
];

/// Optional keys and their defaults (`None` means "resolved from the modes").
pub const DEFAULTS: [(&str, Option<f64>); 11] = [
    ("g_m", Some(0.1)),
    ("V_rf", Some(3e-4)),
    ("omega_in", None),
    ("R_s", Some(50.0)),
    ("phi1dc_rate", Some(0.0)),
    ("phi2dc", Some(0.0)),
    ("I_s0", Some(0.0)),
    ("I_d0", Some(0.0)),
    ("kappa1", None),
    ("kappa2", None),
    ("fock_dim", Some(16.0)),
];

const TABLE1: &str = include_str!("../fixtures/table1.cfg");

impl CircuitParams {
    /// The shipped reference device.
    pub fn table1() -> Self {
        parse_config(TABLE1).expect("shipped fixture parses")
    }

    /// Text of the shipped fixture file.
    pub fn table1_text() -> &'static str {
        TABLE1
    }

    pub fn validate(&self) -> Result<()> {
        let strictly_positive = [
            ("W", self.w),
            ("L_t", self.l_t),
            ("t_SiO2", self.t_sio2),
            ("T_c", self.t_c),
            ("C_f", self.c_f),
            ("C_in", self.c_in),
            ("C_d", self.c_d),
            ("L_g", self.l_g),
            ("L_d", self.l_d),
            ("R_s", self.r_s),
        ];
        for (name, v) in strictly_positive {
            if !v.is_finite() {
                return Err(Error::InvalidParam(format!("{name} must be finite")));
            }
            if v <= 0.0 {
                return Err(Error::InvalidParam(format!("{name} must be positive")));
            }
        }
        // zero overlap (and hence C_gd = 0) is the decoupling limit
        let non_negative = [
            ("L_ov", Some(self.l_ov)),
            ("g_m", Some(self.g_m)),
            ("V_rf", Some(self.v_rf)),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
        ];
        for (name, v) in non_negative {
            let Some(v) = v else { continue };
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParam(format!("{name} must be non-negative")));
            }
        }
        for (name, v) in [
            ("g_m2", self.g_m2),
            ("g_m3", self.g_m3),
            ("phi1dc_rate", self.phi1dc_rate),
            ("phi2dc", self.phi2dc),
            ("I_s0", self.i_s0),
            ("I_d0", self.i_d0),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParam(format!("{name} must be finite")));
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= 2.0) {
            return Err(Error::InvalidParam("gamma must lie in (0, 2]".into()));
        }
        if let Some(w) = self.omega_in {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidParam("omega_in must be positive".into()));
            }
        }
        if self.fock_dim < 4 {
            return Err(Error::InvalidParam("fock_dim must be at least 4".into()));
        }
        Ok(())
    }

    /// Whether `key` took its default value.
    pub fn is_defaulted(&self, key: &str) -> bool {
        self.defaulted.contains(&key)
    }

    /// `key = value` lines that reproduce these parameters (defaulted
    /// optional keys are written as comments).
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.entries() {
            let line = match value {
                Some(v) => format!("{key} = {v:e}"),
                None => format!("# {key} = (derived)"),
            };
            if self.is_defaulted(key) && value.is_some() {
                out.push_str(&format!("{line}  # default\n"));
            } else {
                out.push_str(&line);
                out.push('\n');
            }
        }
        out
    }

    fn entries(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("W", Some(self.w)),
            ("L_t", Some(self.l_t)),
            ("t_SiO2", Some(self.t_sio2)),
            ("L_ov", Some(self.l_ov)),
            ("T_c", Some(self.t_c)),
            ("gamma", Some(self.gamma)),
            ("C_f", Some(self.c_f)),
            ("C_in", Some(self.c_in)),
            ("C_d", Some(self.c_d)),
            ("L_g", Some(self.l_g)),
            ("L_d", Some(self.l_d)),
            ("g_m", Some(self.g_m)),
            ("g_m2", Some(self.g_m2)),
            ("g_m3", Some(self.g_m3)),
            ("V_rf", Some(self.v_rf)),
            ("omega_in", self.omega_in),
            ("R_s", Some(self.r_s)),
            ("phi1dc_rate", Some(self.phi1dc_rate)),
            ("phi2dc", Some(self.phi2dc)),
            ("I_s0", Some(self.i_s0)),
            ("I_d0", Some(self.i_d0)),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("fock_dim", Some(self.fock_dim as f64)),
        ]
    }
}

impl fmt::Display for CircuitParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_config_string())
    }
}

/// Reads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<CircuitParams> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Parses `key = value` text. `#` starts a comment; keys are case-sensitive
/// and must be one of [`REQUIRED_KEYS`] or the keys in [`DEFAULTS`].
pub fn parse_config(text: &str) -> Result<CircuitParams> {
    let mut values: BTreeMap<&str, f64> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let canonical = REQUIRED_KEYS
            .iter()
            .copied()
            .chain(DEFAULTS.iter().map(|(k, _)| *k))
            .find(|k| *k == key)
            .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
        let parsed: f64 = value
            .parse()
            .map_err(|_| Error::Config(format!("{key}: malformed number `{value}`")))?;
        if values.insert(canonical, parsed).is_some() {
            return Err(Error::Config(format!("{key}: duplicate key")));
        }
    }

    for key in REQUIRED_KEYS {
        if !values.contains_key(key) {
            return Err(Error::Config(format!("missing required key `{key}`")));
        }
    }
    let mut defaulted = Vec::new();
    for (key, default) in DEFAULTS {
        if values.contains_key(key) {
            continue;
        }
        defaulted.push(key);
        if let Some(v) = default {
            values.insert(key, v);
        }
    }

    let fock = values["fock_dim"];
    if fock.fract() != 0.0 || fock < 0.0 {
        return Err(Error::Config(format!("fock_dim: `{fock}` is not a non-negative integer")));
    }

    let p = CircuitParams {
        w: values["W"],
        l_t: values["L_t"],
        t_sio2: values["t_SiO2"],
        l_ov: values["L_ov"],
        t_c: values["T_c"],
        gamma: values["gamma"],
        c_f: values["C_f"],
        c_in: values["C_in"],
        c_d: values["C_d"],
        l_g: values["L_g"],
        l_d: values["L_d"],
        g_m: values["g_m"],
        g_m2: values["g_m2"],
        g_m3: values["g_m3"],
        v_rf: values["V_rf"],
        omega_in: values.get("omega_in").copied(),
        r_s: values["R_s"],
        phi1dc_rate: values["phi1dc_rate"],
        phi2dc: values["phi2dc"],
        i_s0: values["I_s0"],
        i_d0: values["I_d0"],
        kappa1: values.get("kappa1").copied(),
        kappa2: values.get("kappa2").copied(),
        fock_dim: fock as usize,
        defaulted,
    };
    p.validate()?;
    Ok(p)
}

/// Gate-source and gate-drain capacitances from the channel geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviceCaps {
    pub c_gs: f64,
    pub c_gd: f64,
    /// Oxide capacitance per unit area.
    pub c_ox_area: f64,
}

/// Long-channel parallel-plate model: `C_ox = ε₀ε_r/t`, `C_gd = W·L_ov·C_ox`,
/// `C_gs = (2/3)·W·L_t·C_ox + W·L_ov·C_ox`.
pub fn derive_device_caps(p: &CircuitParams) -> DeviceCaps {
    let c_ox_area = EPS0 * EPS_R_SIO2 / p.t_sio2;
    let c_gd = p.w * p.l_ov * c_ox_area;
    let c_gs = 2.0 / 3.0 * p.w * p.l_t * c_ox_area + c_gd;
    DeviceCaps { c_gs, c_gd, c_ox_area }
}

/// Small-signal nonlinearity constants of the expanded drain current.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nonlinearity {
    /// Third-order term linearised at the bias slope (A/V²).
    pub g_m3l: f64,
    /// `g_m2 + 2·g_m3L`, the prefactor of every nonlinear Hamiltonian term.
    pub g_nl: f64,
    /// Nonlinear capacitance `(2·g_m2 + 3·g_m3L)·ϕ₂,dc`.
    pub c_n: f64,
}

pub fn derive_nonlinearity(p: &CircuitParams) -> Nonlinearity {
    let g_m3l = p.g_m3 * p.phi1dc_rate;
    Nonlinearity {
        g_m3l,
        g_nl: p.g_m2 + 2.0 * g_m3l,
        c_n: (2.0 * p.g_m2 + 3.0 * g_m3l) * p.phi2dc,
    }
}

/// Source and drain current sources: DC bias plus the rms thermal noise
/// amplitude, `Ī_s = Ī_s0 + √(4kTR_s)` and `Ī_d = Ī_d0 + √(4kTγg_m)`.
///
/// The source term is dimensionally A·Ω rather than A; it is kept as written
/// in the circuit model. The noise figure uses `4kTR_s` directly and does not
/// depend on it.
pub fn bias_noise_currents(p: &CircuitParams) -> (f64, f64) {
    let i_s = p.i_s0 + (4.0 * K_B * p.t_c * p.r_s).sqrt();
    let i_d = p.i_d0 + (4.0 * K_B * p.t_c * p.gamma * p.g_m).sqrt();
    (i_s, i_d)
}

/// One row of the dimensional audit: a derived quantity, the dimension its
/// formula produces from its inputs, and the dimension it is declared with.
#[derive(Clone, Debug)]
pub struct UnitCheck {
    pub name: &'static str,
    pub computed: Dim,
    pub declared: Dim,
    /// The formula is implemented as written even though its dimensions do
    /// not match (the source-noise current).
    pub known_mismatch: bool,
}

impl UnitCheck {
    fn new(name: &'static str, computed: Dim, declared: Dim) -> Self {
        UnitCheck { name, computed, declared, known_mismatch: false }
    }

    pub fn passes(&self) -> bool {
        (self.computed == self.declared) != self.known_mismatch
    }
}

/// Dimensional audit of every quantity this module derives.
pub fn unit_audit() -> Vec<UnitCheck> {
    let m = Dim::METRE;
    let f = Dim::FARAD;
    let v = Dim::VOLT;
    let a = Dim::AMPERE;
    let wb = Dim::WEBER;
    // ε₀ is F/m, ε_r dimensionless
    let c_ox = (f / m) / m;
    let g_m2 = a / (v * v);
    let g_m3 = a / (v * v * v);
    // noise powers are spectral densities, A²/Hz
    let a2_per_hz = a * a * Dim::SECOND;
    vec![
        UnitCheck::new("C_ox_area", c_ox, f / (m * m)),
        UnitCheck::new("C_gd", m * m * c_ox, f),
        UnitCheck::new("C_gs", m * m * c_ox, f),
        // ϕ̇₁ at bias is a voltage
        UnitCheck::new("g_m3L", g_m3 * v, g_m2),
        UnitCheck::new("g_NL", g_m2, g_m2),
        // A/V² · Wb = A·s/V = F
        UnitCheck::new("C_N", g_m2 * wb, f),
        UnitCheck::new("I_d_bar^2", Dim::JOULE * Dim::SIEMENS, a2_per_hz),
        UnitCheck {
            known_mismatch: true,
            ..UnitCheck::new("I_s_bar^2", Dim::JOULE * Dim::OHM, a2_per_hz)
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn fixture_values() {
        let p = CircuitParams::table1();
        assert_eq!(p.l_g, 1.2e-9);
        assert_eq!(p.c_in, 1.8e-12);
        assert!((p.gamma - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.t_c, 4.0);
        assert_eq!(p.fock_dim, 16);
        assert!(p.is_defaulted("kappa1"));
        assert!(!p.is_defaulted("g_m"));
        assert_eq!(p.kappa1, None);
    }

    #[test]
    fn negative_inductance_is_named() {
        let text = CircuitParams::table1_text().replace("L_g     = 1.2e-9", "L_g = -1e-9");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("L_g must be positive"), "{err}");
    }

    #[test]
    fn missing_and_malformed_keys() {
        let text = CircuitParams::table1_text().replace("C_d     = 0.08e-12", "");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("C_d"), "{err}");

        let text = CircuitParams::table1_text().replace("0.08e-12", "0.08pF");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("C_d") && err.contains("malformed"), "{err}");

        let err = parse_config("bogus = 1").unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn gamma_and_fock_dim_ranges() {
        let text = CircuitParams::table1_text().replace("0.6666666666666666", "2.5");
        assert!(parse_config(&text).is_err());
        let text = CircuitParams::table1_text().replace("fock_dim = 16", "fock_dim = 3");
        assert!(parse_config(&text).unwrap_err().to_string().contains("fock_dim"));
    }

    #[test]
    fn config_round_trips_through_text() {
        let p = CircuitParams::table1();
        let q = parse_config(&p.to_config_string()).unwrap();
        assert_eq!(p.w, q.w);
        assert_eq!(p.gamma, q.gamma);
        assert_eq!(p.fock_dim, q.fock_dim);
        assert_eq!(q.omega_in, None);
    }

    #[test]
    fn device_caps_on_fixture() {
        let caps = derive_device_caps(&CircuitParams::table1());
        // hand evaluation: 8.8541878128e-12 * 3.9 / 200e-9
        assert!(rel(caps.c_ox_area, 1.726_566_623_5e-4) < 1e-9);
        assert!(rel(caps.c_gd, 300e-6 * 5e-6 * 1.726_566_623_5e-4) < 1e-9);
        assert!(rel(caps.c_gd, 2.590e-13) < 1e-3);
        assert!(rel(caps.c_gs, 1.986e-12) < 1e-3);
        assert!(caps.c_gd <= caps.c_gs);
    }

    #[test]
    fn device_caps_scaling() {
        let p = CircuitParams::table1();
        let base = derive_device_caps(&p);

        let thick = derive_device_caps(&CircuitParams { t_sio2: p.t_sio2 * 10.0, ..p.clone() });
        assert!(rel(thick.c_gs * 10.0, base.c_gs) < 1e-14);
        assert!(rel(thick.c_gd * 10.0, base.c_gd) < 1e-14);

        let wide = derive_device_caps(&CircuitParams { w: p.w * 2.0, ..p.clone() });
        assert!(rel(wide.c_gs, 2.0 * base.c_gs) < 1e-14);
        assert!(rel(wide.c_gd, 2.0 * base.c_gd) < 1e-14);

        let no_overlap = derive_device_caps(&CircuitParams { l_ov: 0.0, ..p.clone() });
        assert_eq!(no_overlap.c_gd, 0.0);
        assert_eq!(no_overlap.c_gs, 2.0 / 3.0 * p.w * p.l_t * base.c_ox_area);
    }

    #[test]
    fn nonlinearity_products() {
        let p = CircuitParams::table1();
        let nl = derive_nonlinearity(&p);
        assert_eq!(nl.g_m3l, 0.0);
        assert_eq!(nl.g_nl, p.g_m2);
        assert_eq!(nl.c_n, 2.0 * p.g_m2 * p.phi2dc);

        let q = CircuitParams { phi1dc_rate: 0.1, phi2dc: 1e-12, ..p };
        let nl = derive_nonlinearity(&q);
        assert!((nl.g_m3l - 0.13).abs() < 1e-15);
        assert!((nl.g_nl - 0.51).abs() < 1e-15);
        assert!(rel(nl.c_n, 8.9e-13) < 1e-12);
        assert!((nl.g_nl - q.g_m2 - 2.0 * nl.g_m3l).abs() <= f64::EPSILON);
    }

    #[test]
    fn bias_currents() {
        let p = CircuitParams { i_s0: 0.0, i_d0: 0.0, ..CircuitParams::table1() };
        let (i_s, _) = bias_noise_currents(&p);
        // sqrt(4 * 1.380649e-23 * 4 * 50)
        assert!(rel(i_s, 1.050_961_084e-10) < 1e-8);

        let cold = CircuitParams { t_c: 0.0, i_s0: 1e-3, i_d0: 2e-3, ..p.clone() };
        assert_eq!(bias_noise_currents(&cold), (1e-3, 2e-3));

        let off = CircuitParams { g_m: 0.0, ..p };
        assert_eq!(bias_noise_currents(&off).1, 0.0);
    }

    #[test]
    fn unit_audit_passes() {
        for check in unit_audit() {
            assert!(check.passes(), "{} : {} vs {}", check.name, check.computed, check.declared);
        }
    }
}
