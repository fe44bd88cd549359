//! Physical constants and a small SI dimension algebra used to audit the
//! derived quantities.

use std::fmt;
use std::ops::{Div, Mul};

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;
/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Relative permittivity of thermal SiO2.
pub const EPS_R_SIO2: f64 = 3.9;

/// Exponents of (m, kg, s, A).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dim(pub [i8; 4]);

impl Dim {
    pub const ONE: Dim = Dim([0, 0, 0, 0]);
    pub const METRE: Dim = Dim([1, 0, 0, 0]);
    pub const SECOND: Dim = Dim([0, 0, 1, 0]);
    pub const AMPERE: Dim = Dim([0, 0, 0, 1]);
    pub const JOULE: Dim = Dim([2, 1, -2, 0]);
    pub const VOLT: Dim = Dim([2, 1, -3, -1]);
    pub const OHM: Dim = Dim([2, 1, -3, -2]);
    pub const SIEMENS: Dim = Dim([-2, -1, 3, 2]);
    pub const FARAD: Dim = Dim([-2, -1, 4, 2]);
    pub const HENRY: Dim = Dim([2, 1, -2, -2]);
    pub const WEBER: Dim = Dim([2, 1, -2, -1]);
    pub const RAD_PER_S: Dim = Dim([0, 0, -1, 0]);

    pub fn powi(self, n: i8) -> Dim {
        let e = self.0;
        Dim([e[0] * n, e[1] * n, e[2] * n, e[3] * n])
    }

    /// Square root; `None` when any exponent is odd.
    pub fn sqrt(self) -> Option<Dim> {
        let e = self.0;
        if e.iter().any(|x| x % 2 != 0) {
            return None;
        }
        Some(Dim([e[0] / 2, e[1] / 2, e[2] / 2, e[3] / 2]))
    }

    pub fn recip(self) -> Dim {
        self.powi(-1)
    }

    /// Conventional unit label for the dimensions this crate emits.
    pub fn label(self) -> String {
        let named = [
            (Dim::ONE, "1"),
            (Dim::FARAD, "F"),
            (Dim::FARAD.recip(), "1/F"),
            (Dim::FARAD * Dim::FARAD, "F^2"),
            (Dim::FARAD / (Dim::METRE * Dim::METRE), "F/m^2"),
            (Dim::HENRY, "H"),
            (Dim::OHM, "ohm"),
            (Dim::SIEMENS, "S"),
            (Dim::VOLT, "V"),
            (Dim::AMPERE, "A"),
            (Dim::RAD_PER_S, "rad/s"),
            (Dim::JOULE, "J"),
            (Dim::AMPERE / (Dim::VOLT * Dim::VOLT), "A/V^2"),
            (Dim::VOLT * Dim::VOLT, "V^2"),
            (Dim::AMPERE * Dim::AMPERE, "A^2"),
        ];
        named
            .iter()
            .find(|(d, _)| *d == self)
            .map(|(_, s)| s.to_string())
            .unwrap_or_else(|| self.to_string())
    }
}

impl Mul for Dim {
    type Output = Dim;
    fn mul(self, rhs: Dim) -> Dim {
        let (a, b) = (self.0, rhs.0);
        Dim([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]])
    }
}

impl Div for Dim {
    type Output = Dim;
    fn div(self, rhs: Dim) -> Dim {
        self * rhs.recip()
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["m", "kg", "s", "A"];
        let mut first = true;
        for (n, e) in names.iter().zip(self.0) {
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("·")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{n}")?;
            } else {
                write!(f, "{n}^{e}")?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}
