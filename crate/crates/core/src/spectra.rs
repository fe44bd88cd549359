//! Oscillator energies, first-order perturbation of states, and an exact
//! diagonalization oracle for the perturbative claims.

use std::collections::BTreeMap;

use nalgebra::Schur;
use num_complex::Complex64;

use crate::appendix_a::AppendixAConstants;
use crate::error::{Error, Result};
use crate::fockspace::{basis_index, basis_pair, CMatrix, CVector, OperatorSet};
use crate::units::HBAR;

/// Levels closer than this are treated as degenerate.
pub const DEGENERACY_GUARD: f64 = 1e-30;

/// Eigensolver iteration cap passed to the Schur decomposition.
const SCHUR_MAX_ITER: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeEnergy {
    pub j: usize,
    pub energy: Complex64,
    pub mode: u8,
}

/// Single-mode energies as printed, including the `V_rf` term of mode 2.
pub fn literal_energies(j1: usize, j2: usize, k: &AppendixAConstants) -> (ModeEnergy, ModeEnergy) {
    let rc = k.rc();
    let (w1, w2) = (k.modes.omega1, k.modes.omega2);
    let (n1, n2) = (j1 as f64, j2 as f64);
    let e1 = Complex64::new(HBAR * w1 * (n1 + 0.5), -HBAR / 2.0 * k.g_m * rc.r_q1p1 * n1);
    let e2 = Complex64::new(
        HBAR * w2 * (n2 + 0.5),
        -HBAR / 2.0 * k.g_m * rc.r_q2p2 * n2 - HBAR / 2.0 * k.v_rf * rc.r_q2p2 * n2,
    );
    (
        ModeEnergy { j: j1, energy: e1, mode: 1 },
        ModeEnergy { j: j2, energy: e2, mode: 2 },
    )
}

fn check_margin(j1: usize, j2: usize, dim: usize) -> Result<()> {
    if dim < 4 || j1 > dim - 4 || j2 > dim - 4 {
        return Err(Error::OutOfRange { state: (j1, j2), dim });
    }
    Ok(())
}

fn dim_of(h: &CMatrix) -> usize {
    (h.nrows() as f64).sqrt().round() as usize
}

/// `⟨j1,j2|H0|j1,j2⟩`
pub fn diagonal_energies(h0: &CMatrix, j1: usize, j2: usize) -> Result<Complex64> {
    let dim = dim_of(h0);
    check_margin(j1, j2, dim)?;
    let i = basis_index(j1, j2, dim);
    Ok(h0[(i, i)])
}

/// `⟨j1,j2|Hp|j1,j2⟩`; zero by parity.
pub fn first_order_energy(hp: &CMatrix, j1: usize, j2: usize) -> Result<Complex64> {
    let dim = dim_of(hp);
    if j1 >= dim || j2 >= dim {
        return Err(Error::OutOfRange { state: (j1, j2), dim });
    }
    let i = basis_index(j1, j2, dim);
    Ok(hp[(i, i)])
}

/// Which basis states a first-order correction may populate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MixingScope {
    #[default]
    Full,
    /// Keep mode 1 frozen at its base occupation.
    SecondModeOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateCorrection {
    pub base: (usize, usize),
    pub amplitudes: BTreeMap<(usize, usize), Complex64>,
    /// `Σ|c_i|²`, the first-order norm excess.
    pub norm_correction: f64,
}

impl StateCorrection {
    /// Keys that leave mode 1 untouched, the only ones the closed-form
    /// mixing expression covers.
    pub fn printed_subset(&self) -> Vec<(usize, usize)> {
        self.amplitudes.keys().copied().filter(|k| k.0 == self.base.0).collect()
    }

    /// Mode-2 occupations reached with mode 1 at its base occupation.
    pub fn second_mode_keys(&self) -> Vec<usize> {
        self.printed_subset().into_iter().map(|k| k.1).collect()
    }
}

/// `c_i = ⟨i|Hp|j⟩ / (E_i − E_j)` with diagonal energies of `h0`.
pub fn first_order_state(
    h0: &CMatrix,
    hp: &CMatrix,
    j1: usize,
    j2: usize,
    scope: MixingScope,
) -> Result<StateCorrection> {
    let dim = dim_of(h0);
    check_margin(j1, j2, dim)?;
    let col = basis_index(j1, j2, dim);
    let e_base = h0[(col, col)];
    let mut amplitudes = BTreeMap::new();
    for row in 0..dim * dim {
        let elem = hp[(row, col)];
        if row == col || elem.norm() == 0.0 {
            continue;
        }
        let key = basis_pair(row, dim);
        if scope == MixingScope::SecondModeOnly && key.0 != j1 {
            continue;
        }
        let gap = h0[(row, row)] - e_base;
        if gap.norm() < DEGENERACY_GUARD {
            return Err(Error::DegenerateLevels { from: (j1, j2), to: key, gap: gap.norm() });
        }
        amplitudes.insert(key, elem / gap);
    }
    let norm_correction = amplitudes.values().map(|c| c.norm_sqr()).sum();
    Ok(StateCorrection { base: (j1, j2), amplitudes, norm_correction })
}

/// The closed-form mode-2 mixing coefficients (keys `j2±1`, `j2±3`), with
/// the same diagonal-energy denominators at fixed `j1`.
pub fn printed_mixing(
    h0: &CMatrix,
    k: &AppendixAConstants,
    j1: usize,
    j2: usize,
) -> Result<BTreeMap<usize, Complex64>> {
    let dim = dim_of(h0);
    check_margin(j1, j2, dim)?;
    let c12 = k.chain.inverse.c12;
    let pre = -HBAR / 2.0 * c12 * c12 * (HBAR / (2.0 * k.modes.z2)).sqrt();
    let e_base = h0[(basis_index(j1, j2, dim), basis_index(j1, j2, dim))];
    let n = j2 as f64;
    let mut out = BTreeMap::new();
    for (shift, weight) in [(-3i64, 1.0), (3, 1.0), (-1, 3.0 * n + 1.0), (1, 2.0 * n + 1.0)] {
        let target = j2 as i64 + shift;
        if target < 0 {
            continue;
        }
        let t = target as usize;
        let i = basis_index(j1, t, dim);
        let gap = h0[(i, i)] - e_base;
        if gap.norm() < DEGENERACY_GUARD {
            return Err(Error::DegenerateLevels { from: (j1, j2), to: (j1, t), gap: gap.norm() });
        }
        out.insert(t, Complex64::new(pre * weight, 0.0) / gap);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: Complex64,
    pub vector: CVector,
}

/// Right eigenpairs of a general complex matrix, sorted by real part.
pub fn eigen_decompose(h: &CMatrix) -> Result<Vec<Eigenpair>> {
    let n = h.nrows();
    if n == 0 || n != h.ncols() {
        return Err(Error::Eigen(format!("matrix is {}x{}", h.nrows(), h.ncols())));
    }
    let scale = crate::fockspace::max_abs(h).max(f64::MIN_POSITIVE);
    let scaled = h / Complex64::new(scale, 0.0);
    let schur = Schur::try_new(scaled, f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::Eigen(format!("Schur iteration did not converge for n = {n}")))?;
    let (q, t) = schur.unpack();
    let tiny = f64::EPSILON * t.iter().fold(0.0f64, |a, z| a.max(z.norm()));

    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = CVector::zeros(n);
        y[k] = Complex64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for l in j + 1..=k {
                s += t[(j, l)] * y[l];
            }
            let mut d = t[(j, j)] - lambda;
            if d.norm() < tiny {
                d = Complex64::new(tiny.max(f64::MIN_POSITIVE), 0.0);
            }
            y[j] = -s / d;
        }
        let mut v = &q * y;
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Eigen(format!("eigenvector {k} is not finite")));
        }
        v /= Complex64::new(norm, 0.0);
        pairs.push(Eigenpair { value: lambda * scale, vector: v });
    }
    pairs.sort_by(|a, b| a.value.re.total_cmp(&b.value.re));
    Ok(pairs)
}

fn overlap(a: &CVector, b: &CVector) -> f64 {
    a.dotc(b).norm()
}

/// For each reference vector, the index of the best-overlapping candidate.
/// Candidates are claimed greedily in order of decreasing overlap.
pub fn match_levels(reference: &[CVector], candidates: &[Eigenpair]) -> Vec<usize> {
    let mut scored = Vec::with_capacity(reference.len() * candidates.len());
    for (r, rv) in reference.iter().enumerate() {
        for (c, cand) in candidates.iter().enumerate() {
            scored.push((overlap(rv, &cand.vector), r, c));
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out = vec![usize::MAX; reference.len()];
    let mut taken = vec![false; candidates.len()];
    for (_, r, c) in scored {
        if out[r] == usize::MAX && !taken[c] {
            out[r] = c;
            taken[c] = true;
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct ExactSpectrum {
    /// Sorted by real part.
    pub pairs: Vec<Eigenpair>,
}

impl ExactSpectrum {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    /// Eigenvalue whose eigenvector overlaps most with `|j1, j2⟩`, among
    /// candidates not claimed by lower-indexed labels in `states`.
    pub fn labelled(&self, states: &[(usize, usize)], dim: usize) -> Vec<Complex64> {
        let refs: Vec<CVector> = states
            .iter()
            .map(|&(j1, j2)| {
                let mut v = CVector::zeros(dim * dim);
                v[basis_index(j1, j2, dim)] = Complex64::new(1.0, 0.0);
                v
            })
            .collect();
        match_levels(&refs, &self.pairs).into_iter().map(|i| self.pairs[i].value).collect()
    }
}

/// Eigenpairs of `H0 + λ·Hp`.
pub fn exact_spectrum(h0: &CMatrix, hp: &CMatrix, lambda: f64) -> Result<ExactSpectrum> {
    if h0.shape() != hp.shape() {
        return Err(Error::Eigen("H0 and Hp differ in shape".into()));
    }
    if h0.nrows() > 4096 {
        return Err(Error::Eigen(format!("dimension {} exceeds 4096", h0.nrows())));
    }
    let h = h0 + hp * Complex64::new(lambda, 0.0);
    Ok(ExactSpectrum { pairs: eigen_decompose(&h)? })
}

/// `λ` such that `λ·max|Hp| = relative·max|H0|`.
pub fn relative_lambda(h0: &CMatrix, hp: &CMatrix, relative: f64) -> f64 {
    use crate::fockspace::max_abs;
    relative * max_abs(h0) / max_abs(hp)
}

/// Shift of the level that continues the unperturbed eigenvector closest to
/// `|j1, j2⟩`, for each `λ`.
pub fn level_shifts(
    h0: &CMatrix,
    hp: &CMatrix,
    j1: usize,
    j2: usize,
    lambdas: &[f64],
) -> Result<Vec<Complex64>> {
    let dim = dim_of(h0);
    let base = exact_spectrum(h0, hp, 0.0)?;
    let idx = {
        let mut v = CVector::zeros(dim * dim);
        v[basis_index(j1, j2, dim)] = Complex64::new(1.0, 0.0);
        match_levels(&[v], &base.pairs)[0]
    };
    let reference = &base.pairs[idx];
    lambdas
        .iter()
        .map(|&l| {
            let s = exact_spectrum(h0, hp, l)?;
            let m = match_levels(std::slice::from_ref(&reference.vector), &s.pairs)[0];
            Ok(s.pairs[m].value - reference.value)
        })
        .collect()
}

/// Successive shift ratios `ΔE(λ_{k+1})/ΔE(λ_k)` by modulus.
pub fn richardson_ratios(shifts: &[Complex64]) -> Vec<f64> {
    shifts.windows(2).map(|w| w[1].norm() / w[0].norm()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelRow {
    pub state: (usize, usize),
    pub literal: Complex64,
    pub numeric: Complex64,
    pub exact: Complex64,
}

#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub rows: Vec<LevelRow>,
    pub exact_eigenvalues: Vec<Complex64>,
}

impl SpectrumReport {
    /// Largest `|literal − numeric|` over the reported levels.
    pub fn max_literal_delta(&self) -> f64 {
        self.rows.iter().map(|r| (r.literal - r.numeric).norm()).fold(0.0, f64::max)
    }
}

/// Literal, diagonal and exact energies of every level with `j1 + j2 ≤ max_sum`
/// inside the truncation margin.
pub fn spectrum_report(
    k: &AppendixAConstants,
    ops: &OperatorSet,
    lambda: f64,
    max_sum: usize,
) -> Result<SpectrumReport> {
    let dim = ops.dim;
    let exact = exact_spectrum(&ops.h0, &ops.hp, lambda)?;
    let states: Vec<(usize, usize)> = (0..=dim.saturating_sub(4))
        .flat_map(|a| (0..=dim.saturating_sub(4)).map(move |b| (a, b)))
        .filter(|&(a, b)| a + b <= max_sum)
        .collect();
    let exact_vals = exact.labelled(&states, dim);
    let rows = states
        .iter()
        .zip(exact_vals)
        .map(|(&(j1, j2), exact)| {
            let (e1, e2) = literal_energies(j1, j2, k);
            Ok(LevelRow {
                state: (j1, j2),
                literal: e1.energy + e2.energy,
                numeric: diagonal_energies(&ops.h0, j1, j2)?,
                exact,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumReport { rows, exact_eigenvalues: exact.eigenvalues() })
}
