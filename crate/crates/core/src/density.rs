//! Two-qubit density matrices in the basis |ee⟩, |eg⟩, |ge⟩, |gg⟩ and their
//! X-form / O-form components.
//!
//! Indices 0..4 of every array in this module follow that basis order, so
//! `elem(0, 3)` is ρ₁₄ and `elem(1, 2)` is ρ₂₃.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::concurrence::{self, MatrixType};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat4, C};

/// Validation tolerances for density matrices and X states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub herm: f64,
    pub trace: f64,
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm: 1e-10,
            trace: 1e-10,
            psd: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Tolerances {
            herm: tol,
            trace: tol,
            psd: tol,
        }
    }
}

/// A validated two-qubit density matrix.
///
/// Construction symmetrizes the input to (A + A†)/2 after the Hermiticity
/// check, so stored entries are exact conjugate pairs with a real diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct DensityMatrix4 {
    m: Mat4,
}

impl DensityMatrix4 {
    /// Validates and builds a density matrix from row-major entries.
    pub fn new(elems: [[C; 4]; 4], tol: &Tolerances) -> Result<Self> {
        let mut m = Mat4::zeros();
        for (i, row) in elems.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                m[(i, j)] = *z;
            }
        }
        Self::from_matrix(m, tol)
    }

    pub fn from_matrix(m: Mat4, tol: &Tolerances) -> Result<Self> {
        for i in 0..4 {
            for j in 0..4 {
                let z = m[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        let mut deviation = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                deviation = deviation.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if deviation > tol.herm {
            return Err(Error::NotHermitian {
                deviation,
                tol: tol.herm,
            });
        }
        let h = linalg::hermitian_part(&m);
        let trace: f64 = (0..4).map(|i| h[(i, i)].re).sum();
        if (trace - 1.0).abs() > tol.trace {
            return Err(Error::TraceNotOne {
                trace,
                deviation: (trace - 1.0).abs(),
                tol: tol.trace,
            });
        }
        let min_eigenvalue = linalg::hermitian_eigenvalues(&h)[0];
        if min_eigenvalue < -tol.psd {
            return Err(Error::NotPositive {
                min_eigenvalue,
                tol: tol.psd,
            });
        }
        Ok(DensityMatrix4 { m: h })
    }

    /// Skips validation; the caller guarantees a Hermitian matrix.
    pub(crate) fn from_matrix_unchecked(m: Mat4) -> Self {
        DensityMatrix4 { m }
    }

    pub fn maximally_mixed() -> Self {
        Self::from_matrix_unchecked(Mat4::identity() * C::new(0.25, 0.0))
    }

    /// (|ee⟩ + |gg⟩)/√2.
    pub fn bell_phi_plus() -> Self {
        XState::bell_phi_plus().to_density_unchecked()
    }

    /// (|eg⟩ + |ge⟩)/√2.
    pub fn bell_psi_plus() -> Self {
        XState::bell_psi_plus().to_density_unchecked()
    }

    /// |ψ⟩⟨ψ| for a normalized (or normalizable) state vector.
    pub fn pure(psi: [C; 4]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(Error::domain("state vector must be non-zero and finite"));
        }
        let mut m = Mat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = psi[i] * psi[j].conj() / norm2;
            }
        }
        Ok(Self::from_matrix_unchecked(linalg::hermitian_part(&m)))
    }

    /// |a⟩ ⊗ |b⟩ for single-qubit amplitudes in the (e, g) basis.
    pub fn product(a: [C; 2], b: [C; 2]) -> Result<Self> {
        Self::pure([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
    }

    pub fn elem(&self, i: usize, j: usize) -> C {
        self.m[(i, j)]
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.m
    }

    pub fn to_array(&self) -> [[C; 4]; 4] {
        let mut out = [[C::new(0.0, 0.0); 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, z) in row.iter_mut().enumerate() {
                *z = self.m[(i, j)];
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.m[(i, i)].re).sum()
    }

    /// tr(ρ²).
    pub fn purity(&self) -> f64 {
        (self.m * self.m).trace().re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        linalg::hermitian_eigenvalues(&self.m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Largest elementwise modulus of the difference.
    pub fn max_abs_diff(&self, other: &DensityMatrix4) -> f64 {
        linalg::max_abs(&(self.m - other.m))
    }
}

/// The X-shaped part of a two-qubit matrix: diagonal plus ρ₁₄ and ρ₂₃.
///
/// Fields are public plain data. Critical-boundary slices build X matrices
/// that need not be trace-normalized, so validation is explicit
/// ([`XState::new`], [`XState::validate`]) rather than enforced by the type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "XJson", into = "XJson")]
pub struct XState {
    pub d11: f64,
    pub d22: f64,
    pub d33: f64,
    pub d44: f64,
    pub c14: C,
    pub c23: C,
}

impl XState {
    pub fn new(d: [f64; 4], c14: C, c23: C, tol: &Tolerances) -> Result<Self> {
        let x = XState {
            d11: d[0],
            d22: d[1],
            d33: d[2],
            d44: d[3],
            c14,
            c23,
        };
        x.validate(tol)?;
        Ok(x)
    }

    /// Checks unit trace, non-negative populations and the two 2×2 block
    /// positivity conditions.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let reals = [self.d11, self.d22, self.d33, self.d44];
        let finite = reals.iter().all(|v| v.is_finite())
            && [self.c14, self.c23]
                .iter()
                .all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(Error::domain("X state has non-finite entries"));
        }
        let trace: f64 = reals.iter().sum();
        if (trace - 1.0).abs() > tol.trace {
            return Err(Error::TraceNotOne {
                trace,
                deviation: (trace - 1.0).abs(),
                tol: tol.trace,
            });
        }
        let min_pop = reals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_pop < -tol.psd {
            return Err(Error::NotPositive {
                min_eigenvalue: min_pop,
                tol: tol.psd,
            });
        }
        let slack_14 = self.d11 * self.d44 - self.c14.norm_sqr();
        let slack_23 = self.d22 * self.d33 - self.c23.norm_sqr();
        let worst = slack_14.min(slack_23);
        if worst < -tol.psd {
            return Err(Error::NotPositive {
                min_eigenvalue: worst,
                tol: tol.psd,
            });
        }
        Ok(())
    }

    pub fn bell_phi_plus() -> Self {
        XState {
            d11: 0.5,
            d22: 0.0,
            d33: 0.0,
            d44: 0.5,
            c14: C::new(0.5, 0.0),
            c23: C::new(0.0, 0.0),
        }
    }

    pub fn bell_psi_plus() -> Self {
        XState {
            d11: 0.0,
            d22: 0.5,
            d33: 0.5,
            d44: 0.0,
            c14: C::new(0.0, 0.0),
            c23: C::new(0.5, 0.0),
        }
    }

    pub fn maximally_mixed() -> Self {
        XState {
            d11: 0.25,
            d22: 0.25,
            d33: 0.25,
            d44: 0.25,
            c14: C::new(0.0, 0.0),
            c23: C::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> [f64; 4] {
        [self.d11, self.d22, self.d33, self.d44]
    }

    pub fn trace(&self) -> f64 {
        self.d11 + self.d22 + self.d33 + self.d44
    }

    /// The full 4×4 matrix with zero O-part, no validation.
    pub fn to_matrix(&self) -> Mat4 {
        let mut m = Mat4::zeros();
        m[(0, 0)] = C::new(self.d11, 0.0);
        m[(1, 1)] = C::new(self.d22, 0.0);
        m[(2, 2)] = C::new(self.d33, 0.0);
        m[(3, 3)] = C::new(self.d44, 0.0);
        m[(0, 3)] = self.c14;
        m[(3, 0)] = self.c14.conj();
        m[(1, 2)] = self.c23;
        m[(2, 1)] = self.c23.conj();
        m
    }

    /// Embeds into a validated [`DensityMatrix4`].
    pub fn to_density(&self, tol: &Tolerances) -> Result<DensityMatrix4> {
        DensityMatrix4::from_matrix(self.to_matrix(), tol)
    }

    pub(crate) fn to_density_unchecked(&self) -> DensityMatrix4 {
        DensityMatrix4::from_matrix_unchecked(self.to_matrix())
    }

    /// Largest elementwise difference (populations and coherence moduli of
    /// the difference).
    pub fn max_abs_diff(&self, other: &XState) -> f64 {
        [
            (self.d11 - other.d11).abs(),
            (self.d22 - other.d22).abs(),
            (self.d33 - other.d33).abs(),
            (self.d44 - other.d44).abs(),
            (self.c14 - other.c14).norm(),
            (self.c23 - other.c23).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// The O-shaped part: ρ₁₂, ρ₁₃, ρ₂₄, ρ₃₄ (lower triangle by conjugation).
/// Not a density matrix on its own.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OState {
    #[serde(with = "complex_json")]
    pub c12: C,
    #[serde(with = "complex_json")]
    pub c13: C,
    #[serde(with = "complex_json")]
    pub c24: C,
    #[serde(with = "complex_json")]
    pub c34: C,
}

impl OState {
    pub fn zero() -> Self {
        OState::default()
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == 0.0
    }

    pub fn max_abs(&self) -> f64 {
        [self.c12, self.c13, self.c24, self.c34]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn to_matrix(&self) -> Mat4 {
        let mut m = Mat4::zeros();
        for (i, j, z) in [
            (0, 1, self.c12),
            (0, 2, self.c13),
            (1, 3, self.c24),
            (2, 3, self.c34),
        ] {
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        m
    }

    pub fn max_abs_diff(&self, other: &OState) -> f64 {
        [
            self.c12 - other.c12,
            self.c13 - other.c13,
            self.c24 - other.c24,
            self.c34 - other.c34,
        ]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
    }
}

/// Splits ρ into its X-form and O-form components.
pub fn decompose(rho: &DensityMatrix4) -> (XState, OState) {
    let m = rho.matrix();
    let x = XState {
        d11: m[(0, 0)].re,
        d22: m[(1, 1)].re,
        d33: m[(2, 2)].re,
        d44: m[(3, 3)].re,
        c14: m[(0, 3)],
        c23: m[(1, 2)],
    };
    let o = OState {
        c12: m[(0, 1)],
        c13: m[(0, 2)],
        c24: m[(1, 3)],
        c34: m[(2, 3)],
    };
    (x, o)
}

/// Inverse of [`decompose`]; validates the combined matrix.
pub fn recompose(x: &XState, o: &OState, tol: &Tolerances) -> Result<DensityMatrix4> {
    DensityMatrix4::from_matrix(x.to_matrix() + o.to_matrix(), tol)
}

/// Ginibre-induced random state: G G† / tr(G G†) with G a 4×rank complex
/// Gaussian matrix. Deterministic for a fixed seed.
pub fn random_density(seed: u64, rank: usize) -> Result<DensityMatrix4> {
    if !(1..=4).contains(&rank) {
        return Err(Error::domain(format!("rank must be in 1..=4, got {rank}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = [[C::new(0.0, 0.0); 4]; 4];
    for row in g.iter_mut() {
        for z in row.iter_mut().take(rank) {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z = C::new(re, im);
        }
    }
    let mut m = Mat4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] = (0..rank).map(|k| g[i][k] * g[j][k].conj()).sum();
        }
    }
    let tr = m.trace().re;
    let m = linalg::hermitian_part(&(m / C::new(tr, 0.0)));
    Ok(DensityMatrix4::from_matrix_unchecked(m))
}

/// Random valid X state of the requested type, by rejection sampling:
/// populations uniform on the simplex, coherences at a uniform fraction of
/// their positivity bound with uniform phases. The dominant Q is positive.
pub fn random_x_state(seed: u64, kind: MatrixType) -> Result<XState> {
    if kind == MatrixType::Separable {
        return Err(Error::domain("random_x_state needs Phi or Psi"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let x = sample_x(&mut rng);
        if concurrence::classify(&x) == kind {
            return Ok(x);
        }
    }
}

pub(crate) fn sample_x<R: Rng>(rng: &mut R) -> XState {
    let mut d = [0.0f64; 4];
    for v in d.iter_mut() {
        *v = rng.sample(Exp1);
    }
    let sum: f64 = d.iter().sum();
    for v in d.iter_mut() {
        *v /= sum;
    }
    let u14: f64 = rng.random();
    let u23: f64 = rng.random();
    let ph14: f64 = rng.random::<f64>() * TAU;
    let ph23: f64 = rng.random::<f64>() * TAU;
    XState {
        d11: d[0],
        d22: d[1],
        d33: d[2],
        d44: d[3],
        c14: C::from_polar(u14 * (d[0] * d[3]).sqrt(), ph14),
        c23: C::from_polar(u23 * (d[1] * d[2]).sqrt(), ph23),
    }
}

/// Werner family w|Φ⁺⟩⟨Φ⁺| + (1 − w)·1/4.
pub fn werner_state(w: f64) -> Result<XState> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::domain(format!("Werner weight must be in [0, 1], got {w}")));
    }
    Ok(XState {
        d11: (1.0 + w) / 4.0,
        d22: (1.0 - w) / 4.0,
        d33: (1.0 - w) / 4.0,
        d44: (1.0 + w) / 4.0,
        c14: C::new(w / 2.0, 0.0),
        c23: C::new(0.0, 0.0),
    })
}

/// Parses a state file: either the full-matrix form `{"re": .., "im": ..}`
/// or the named X-form fields. Both re-validate.
pub fn parse_state_json(text: &str) -> Result<DensityMatrix4> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let is_full = value.get("re").is_some();
    if is_full {
        serde_json::from_value::<DensityMatrix4>(value).map_err(|e| Error::Parse(e.to_string()))
    } else {
        let x: XState = serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
        x.to_density(&Tolerances::default())
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    re: [[f64; 4]; 4],
    im: [[f64; 4]; 4],
}

impl TryFrom<MatrixJson> for DensityMatrix4 {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let mut elems = [[C::new(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            for k in 0..4 {
                elems[i][k] = C::new(j.re[i][k], j.im[i][k]);
            }
        }
        DensityMatrix4::new(elems, &Tolerances::default())
    }
}

impl From<DensityMatrix4> for MatrixJson {
    fn from(rho: DensityMatrix4) -> Self {
        let mut re = [[0.0; 4]; 4];
        let mut im = [[0.0; 4]; 4];
        for i in 0..4 {
            for k in 0..4 {
                re[i][k] = rho.m[(i, k)].re;
                im[i][k] = rho.m[(i, k)].im;
            }
        }
        MatrixJson { re, im }
    }
}

#[derive(Serialize, Deserialize)]
struct XJson {
    d11: f64,
    d22: f64,
    d33: f64,
    d44: f64,
    #[serde(with = "complex_json")]
    c14: C,
    #[serde(with = "complex_json")]
    c23: C,
}

impl TryFrom<XJson> for XState {
    type Error = Error;

    fn try_from(j: XJson) -> Result<Self> {
        XState::new([j.d11, j.d22, j.d33, j.d44], j.c14, j.c23, &Tolerances::default())
    }
}

impl From<XState> for XJson {
    fn from(x: XState) -> Self {
        XJson {
            d11: x.d11,
            d22: x.d22,
            d33: x.d33,
            d44: x.d44,
            c14: x.c14,
            c23: x.c23,
        }
    }
}

/// `{"re": .., "im": ..}` encoding for complex numbers.
pub(crate) mod complex_json {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::C;

    #[derive(Serialize, Deserialize)]
    struct Parts {
        re: f64,
        #[serde(default)]
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &C, s: S) -> Result<S::Ok, S::Error> {
        Parts { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C, D::Error> {
        let p = Parts::deserialize(d)?;
        Ok(C::new(p.re, p.im))
    }
}
