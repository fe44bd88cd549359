//! Truncated two-mode Fock space: ladder operators, quadratures and the
//! dense matrices of the unperturbed Hamiltonian, the perturbation and the
//! voltage/current operators.
//!
//! Two-mode basis states are ordered with mode 1 varying slowest:
//! `|j1, j2⟩` sits at index `j1·dim + j2`. Every two-mode operator here is a
//! Kronecker product `X₁ ⊗ X₂` (or a sum of them) in that order.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::appendix_a::AppendixAConstants;
use crate::error::{Error, Result};
use crate::units::HBAR;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Annihilation operator of one mode truncated to `dim` levels.
#[derive(Clone, Debug)]
pub struct TruncatedMode {
    pub dim: usize,
    pub a: CMatrix,
}

impl TruncatedMode {
    pub fn adag(&self) -> CMatrix {
        self.a.adjoint()
    }

    pub fn number(&self) -> CMatrix {
        self.adag() * &self.a
    }

    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.dim, self.dim)
    }

    /// `a + a†`
    pub fn plus(&self) -> CMatrix {
        &self.a + self.adag()
    }

    /// `a − a†`
    pub fn minus(&self) -> CMatrix {
        &self.a - self.adag()
    }
}

pub fn ladder(dim: usize) -> Result<TruncatedMode> {
    if dim < 2 {
        return Err(Error::Fock(format!("ladder dimension must be at least 2, got {dim}")));
    }
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    Ok(TruncatedMode { dim, a })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    One,
    Two,
}

/// Kronecker product `op1 ⊗ op2` (mode 1 slowest).
pub fn kron2(op1: &CMatrix, op2: &CMatrix) -> CMatrix {
    op1.kronecker(op2)
}

/// Lifts a single-mode operator to the two-mode space.
pub fn embed(op: &CMatrix, which: Mode, dim: usize) -> Result<CMatrix> {
    if op.nrows() != dim || op.ncols() != dim {
        return Err(Error::Fock(format!(
            "operator is {}x{}, expected {dim}x{dim}",
            op.nrows(),
            op.ncols()
        )));
    }
    let id = CMatrix::identity(dim, dim);
    Ok(match which {
        Mode::One => kron2(op, &id),
        Mode::Two => kron2(&id, op),
    })
}

pub fn basis_index(j1: usize, j2: usize, dim: usize) -> usize {
    j1 * dim + j2
}

pub fn basis_pair(index: usize, dim: usize) -> (usize, usize) {
    (index / dim, index % dim)
}

/// A two-mode state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    pub dim: usize,
    pub vector: CVector,
}

impl FockState {
    /// Number state `|j1, j2⟩`.
    pub fn number(j1: usize, j2: usize, dim: usize) -> Result<Self> {
        if j1 >= dim || j2 >= dim {
            return Err(Error::Fock(format!("state ({j1}, {j2}) outside dim {dim}")));
        }
        let mut vector = CVector::zeros(dim * dim);
        vector[basis_index(j1, j2, dim)] = c(1.0);
        Ok(FockState { dim, vector })
    }

    pub fn norm(&self) -> f64 {
        self.vector.norm()
    }

    /// `⟨ψ|op|ψ⟩`
    pub fn expectation(&self, op: &CMatrix) -> Complex64 {
        (self.vector.adjoint() * op * &self.vector)[(0, 0)]
    }
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `(H + H†)/2`
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entry modulus of `m` restricted to basis states with both
/// occupations `≤ cap1`, `≤ cap2` respectively.
pub fn max_abs_within(m: &CMatrix, dim: usize, cap1: usize, cap2: usize) -> f64 {
    let keep: Vec<usize> = (0..dim * dim)
        .filter(|&k| {
            let (j1, j2) = basis_pair(k, dim);
            j1 <= cap1 && j2 <= cap2
        })
        .collect();
    let mut out = 0.0f64;
    for &r in &keep {
        for &col in &keep {
            out = out.max(m[(r, col)].norm());
        }
    }
    out
}

/// Which part of the unperturbed Hamiltonian a term belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermGroup {
    Linear,
    Nonlinear2,
}

#[derive(Clone, Debug)]
pub struct HamiltonianTerm {
    pub label: &'static str,
    pub group: TermGroup,
    pub matrix: CMatrix,
}

/// Single-mode building blocks for both modes.
struct Blocks {
    id: CMatrix,
    n: CMatrix,
    plus: CMatrix,
    minus: CMatrix,
}

impl Blocks {
    fn new(dim: usize) -> Result<Self> {
        let m = ladder(dim)?;
        Ok(Blocks { id: m.identity(), n: m.number(), plus: m.plus(), minus: m.minus() })
    }
}

/// Every term of the unperturbed Hamiltonian, with its coefficient applied.
/// Pure c-number terms are omitted; the zero-point halves are kept.
pub fn h0_terms(k: &AppendixAConstants, dim: usize) -> Result<Vec<HamiltonianTerm>> {
    let b = Blocks::new(dim)?;
    let rc = k.rc();
    let m = &k.modes;
    let (g_m, v_rf, g_nl) = (k.g_m, k.v_rf, k.g_nl());
    let (z1, z2) = (m.z1, m.z2);
    let c11 = k.chain.inverse.c11;
    let c_in = k.chain.cap_matrix.c_in;
    let d = &k.drive;

    let half = &b.id * c(0.5);
    let lin = |label, coeff: Complex64, x1: &CMatrix, x2: &CMatrix| HamiltonianTerm {
        label,
        group: TermGroup::Linear,
        matrix: kron2(x1, x2) * coeff,
    };
    let nl2 = |label, coeff: Complex64, x1: &CMatrix, x2: &CMatrix| HamiltonianTerm {
        label,
        group: TermGroup::Nonlinear2,
        matrix: kron2(x1, x2) * (coeff * g_nl),
    };
    let minus_plus1 = &b.minus * &b.plus;
    let minus_plus2 = minus_plus1.clone();

    Ok(vec![
        lin("osc1", c(HBAR * m.omega1), &(&b.n + &half), &b.id),
        lin("osc2", c(HBAR * m.omega2), &b.id, &(&b.n + &half)),
        lin("q1q2", c(-HBAR * rc.r_q1q2 / (2.0 * (z1 * z2).sqrt())), &b.minus, &b.minus),
        lin("q1p1", -I * (HBAR * g_m * rc.r_q1p1 / 2.0), &minus_plus1, &b.id),
        lin("q2p2", -I * (HBAR * g_m * rc.r_q2p2 / 2.0), &b.id, &minus_plus2),
        lin("q1p2", -I * (HBAR * g_m * rc.r_q1p2 / 2.0 * (z2 / z1).sqrt()), &b.minus, &b.plus),
        // printed with C_q1p2 in this slot
        lin("p1p2", c(HBAR * g_m * g_m * rc.r_q1p2 / 2.0 * (z1 * z2).sqrt()), &b.plus, &b.plus),
        lin("q2p1", -I * (HBAR * g_m * rc.r_q2p1 / 2.0), &b.plus, &b.minus),
        lin("drive_p1", c(d.p1 * v_rf * g_m / 2.0 * (HBAR * z1 / 2.0).sqrt()), &b.plus, &b.id),
        lin("drive_p2", c(d.p2 * v_rf * g_m / 2.0 * (HBAR * z2 / 2.0).sqrt()), &b.id, &b.plus),
        lin("drive_q1", -I * (d.g1 * v_rf * g_m / 2.0 * (HBAR / (2.0 * z1)).sqrt()), &b.minus, &b.id),
        lin("drive_q2", -I * (d.g2 * v_rf * g_m / 2.0 * (HBAR / (2.0 * z2)).sqrt()), &b.id, &b.minus),
        nl2("nl_p1p2", c(HBAR * g_m * v_rf * rc.rp_p1p2 / 2.0 * (z1 * z2).sqrt()), &b.plus, &b.plus),
        nl2(
            "nl_drive",
            c(c11 * c11 * c_in * c_in * v_rf * v_rf * (HBAR * z2 / 2.0).sqrt()),
            &b.id,
            &b.plus,
        ),
        nl2("nl_q1p2", -I * (HBAR * g_m * v_rf * rc.rp_q1p2 / 2.0 * (z2 / z1).sqrt()), &b.minus, &b.plus),
        nl2("nl_q2p2", -I * (HBAR * v_rf * rc.rp_q2p2 / 2.0), &b.id, &(&b.minus * &b.plus)),
    ])
}

fn sum_terms(terms: &[HamiltonianTerm], dim: usize) -> CMatrix {
    terms.iter().fold(CMatrix::zeros(dim * dim, dim * dim), |acc, t| acc + &t.matrix)
}

/// Unperturbed Hamiltonian (linear part plus the RF-dependent nonlinear part).
/// Not Hermitian in general.
pub fn build_h0(k: &AppendixAConstants, dim: usize) -> Result<CMatrix> {
    check_dim(dim)?;
    Ok(sum_terms(&h0_terms(k, dim)?, dim))
}

/// The six perturbation terms, each right-multiplied by `ϕ₂`.
pub fn hp_terms(k: &AppendixAConstants, dim: usize) -> Result<Vec<HamiltonianTerm>> {
    let b = Blocks::new(dim)?;
    let m = &k.modes;
    let (z1, z2, g_m) = (m.z1, m.z2, k.g_m);
    let inv = &k.chain.inverse;
    let (c11, c12) = (inv.c11, inv.c12);
    let phi2_scale = (HBAR * z2 / 2.0).sqrt();
    let pre = k.g_nl() * phi2_scale;

    let m2p2 = &b.minus * &b.plus;
    let term = |label, coeff: Complex64, x1: CMatrix, x2: CMatrix| HamiltonianTerm {
        label,
        group: TermGroup::Nonlinear2,
        matrix: kron2(&x1, &x2) * (coeff * pre),
    };
    Ok(vec![
        term("q1q1", c(-HBAR / (2.0 * z1) * c11 * c11), &b.minus * &b.minus, b.plus.clone()),
        term("q2q2", c(-HBAR / (2.0 * z2) * c12 * c12), b.id.clone(), &b.minus * &b.minus * &b.plus),
        term("p1p1", c(HBAR * z1 * g_m * g_m / 2.0 * c11 * c11), &b.plus * &b.plus, b.plus.clone()),
        term("q1q2", c(-HBAR / (2.0 * (z1 * z2).sqrt()) * 2.0 * c12 * c11), b.minus.clone(), m2p2.clone()),
        term("q1p1", -I * (HBAR / 2.0 * 2.0 * c11 * c11 * g_m), &b.minus * &b.plus, b.plus.clone()),
        term("q2p1", -I * (HBAR / 2.0 * 2.0 * c11 * c12 * g_m * (z1 / z2).sqrt()), b.plus.clone(), m2p2),
    ])
}

/// Cubic perturbation Hamiltonian.
pub fn build_hp(k: &AppendixAConstants, dim: usize) -> Result<CMatrix> {
    check_dim(dim)?;
    Ok(sum_terms(&hp_terms(k, dim)?, dim))
}

/// Voltage and current operators of both oscillators.
#[derive(Clone, Debug)]
pub struct ViOperators {
    pub v1: CMatrix,
    pub i1: CMatrix,
    pub v2: CMatrix,
    pub i2: CMatrix,
}

/// Two-mode quadrature matrices `(ϕ₁, Q₁, ϕ₂, Q₂)`.
pub fn quadratures(z1: f64, z2: f64, dim: usize) -> Result<[CMatrix; 4]> {
    let m = ladder(dim)?;
    let phi = |z: f64| m.plus() * c((HBAR * z / 2.0).sqrt());
    let q = |z: f64| m.minus() * (-I * (HBAR / (2.0 * z)).sqrt());
    Ok([
        embed(&phi(z1), Mode::One, dim)?,
        embed(&q(z1), Mode::One, dim)?,
        embed(&phi(z2), Mode::Two, dim)?,
        embed(&q(z2), Mode::Two, dim)?,
    ])
}

pub fn build_vi_operators(k: &AppendixAConstants, dim: usize) -> Result<ViOperators> {
    check_dim(dim)?;
    let rc = k.rc();
    let m = &k.modes;
    let (g_m, v_rf, g_n) = (k.g_m, k.v_rf, k.g_nl());
    let d = &k.drive;
    let [phi1, q1, phi2, q2] = quadratures(m.z1, m.z2, dim)?;
    let id = CMatrix::identity(dim * dim, dim * dim);
    let s = |x: f64| c(x);

    let v1 = &q1 * s(2.0 * rc.r_q1)
        + &q2 * s(2.0 * rc.r_q1q2)
        + &phi1 * s(g_m * rc.r_q2p1)
        + &phi2 * s(g_m * rc.r_q1p2)
        + &id * s(d.g1 * v_rf / 2.0)
        + &phi2 * s(v_rf * g_n * rc.rp_q1p2);
    let i1 = -(&phi1 * s(1.0 / m.l_g_eff)
        + &q1 * s(g_m * rc.r_q1p1)
        + &q2 * s(g_m * rc.r_q2p1)
        + &phi2 * s(g_m * g_m * rc.r_p1p2)
        + &id * s(d.p1 * g_m * v_rf / 2.0)
        + &phi2 * s(v_rf * g_m * g_n * rc.rp_p1p2));
    let v2 = &q2 * s(2.0 * rc.r_q2)
        + &q1 * s(2.0 * rc.r_q1q2)
        + &phi1 * s(g_m * rc.r_q2p1)
        + &phi2 * s(g_m * rc.r_q2p2)
        + &id * s(d.g2 * v_rf / 2.0)
        + &phi2 * s(v_rf * g_n * rc.rp_q2p2);
    let i2 = -(&phi2 * s(1.0 / m.l_d_eff)
        + &q2 * s(g_m * rc.r_q2p2)
        + &q1 * s(g_m * rc.r_q1p2)
        + &phi1 * s(g_m * g_m * rc.r_p1p2)
        + &id * s(d.p2 * g_m * v_rf / 2.0)
        + &phi1 * s(v_rf * g_m * g_n * rc.rp_p1p2)
        + &q1 * s(v_rf * g_n * rc.rp_q1p2)
        + &q2 * s(v_rf * g_n * rc.rp_q2p2));
    Ok(ViOperators { v1, i1, v2, i2 })
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 4 {
        return Err(Error::Fock(format!("two-mode dimension must be at least 4, got {dim}")));
    }
    Ok(())
}

/// Whether to use the Hamiltonian as written or its Hermitian part.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HamiltonianVariant {
    #[default]
    Literal,
    Hermitized,
}

/// Every two-mode operator for one operating point.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub dim: usize,
    pub a1: CMatrix,
    pub a2: CMatrix,
    pub phi1: CMatrix,
    pub q1: CMatrix,
    pub phi2: CMatrix,
    pub q2: CMatrix,
    pub h0: CMatrix,
    pub hp: CMatrix,
    pub v1: CMatrix,
    pub i1: CMatrix,
    pub v2: CMatrix,
    pub i2: CMatrix,
    pub hbar: f64,
    pub z1: f64,
    pub z2: f64,
}

impl OperatorSet {
    pub fn build(k: &AppendixAConstants, dim: usize, variant: HamiltonianVariant) -> Result<Self> {
        check_dim(dim)?;
        let m = ladder(dim)?;
        let [phi1, q1, phi2, q2] = quadratures(k.modes.z1, k.modes.z2, dim)?;
        let mut h0 = build_h0(k, dim)?;
        let mut hp = build_hp(k, dim)?;
        if variant == HamiltonianVariant::Hermitized {
            h0 = hermitize(&h0);
            hp = hermitize(&hp);
        }
        let ViOperators { v1, i1, v2, i2 } = build_vi_operators(k, dim)?;
        Ok(OperatorSet {
            dim,
            a1: embed(&m.a, Mode::One, dim)?,
            a2: embed(&m.a, Mode::Two, dim)?,
            phi1,
            q1,
            phi2,
            q2,
            h0,
            hp,
            v1,
            i1,
            v2,
            i2,
            hbar: HBAR,
            z1: k.modes.z1,
            z2: k.modes.z2,
        })
    }

    /// `‖H0 − H0†‖_max`
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.h0 - self.h0.adjoint()))
    }

    /// Largest deviation of `V1` from `[ϕ₁, H0]/(iħ)` over states whose
    /// occupations stay two levels below the truncation, relative to the
    /// largest `V1` entry on the same block.
    pub fn v1_commutator_residual(&self) -> f64 {
        let derived = commutator(&self.phi1, &self.h0) * (-I / self.hbar);
        let cap = self.dim - 3;
        let diff = max_abs_within(&(&derived - &self.v1), self.dim, cap, cap);
        diff / max_abs_within(&self.v1, self.dim, cap, cap)
    }
}
