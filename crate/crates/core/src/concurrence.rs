//! Concurrence: the Wootters formula for general states and the closed
//! forms Q_Φ, Q_Ψ for X states.

use serde::{Deserialize, Serialize};

use crate::channels::{evolve_x, ChannelKind, ChannelSpec};
use crate::density::{DensityMatrix4, XState};
use crate::linalg::{self, Mat4, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatrixType {
    Phi,
    Psi,
    Separable,
}

impl std::fmt::Display for MatrixType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MatrixType::Phi => "phi",
            MatrixType::Psi => "psi",
            MatrixType::Separable => "separable",
        })
    }
}

impl std::str::FromStr for MatrixType {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phi" => Ok(MatrixType::Phi),
            "psi" => Ok(MatrixType::Psi),
            "separable" => Ok(MatrixType::Separable),
            other => Err(crate::Error::Parse(format!("unknown matrix type '{other}'"))),
        }
    }
}

/// x₁₄ = √(d11·d44), x₂₃ = √(d22·d33), y₁₄ = d11 + d44, y₂₃ = d22 + d33.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XDerived {
    pub x14: f64,
    pub x23: f64,
    pub y14: f64,
    pub y23: f64,
}

impl XDerived {
    pub fn of(x: &XState) -> Self {
        XDerived {
            x14: (x.d11 * x.d44).max(0.0).sqrt(),
            x23: (x.d22 * x.d33).max(0.0).sqrt(),
            y14: x.d11 + x.d44,
            y23: x.d22 + x.d33,
        }
    }
}

pub fn q_phi(x: &XState) -> f64 {
    2.0 * (x.c14.norm() - (x.d22 * x.d33).max(0.0).sqrt())
}

pub fn q_psi(x: &XState) -> f64 {
    2.0 * (x.c23.norm() - (x.d11 * x.d44).max(0.0).sqrt())
}

pub fn concurrence_x(x: &XState) -> f64 {
    q_phi(x).max(q_psi(x)).max(0.0)
}

pub fn classify(x: &XState) -> MatrixType {
    let (qf, qs) = (q_phi(x), q_psi(x));
    if qf >= qs && qf > 0.0 {
        MatrixType::Phi
    } else if qs > qf && qs > 0.0 {
        MatrixType::Psi
    } else {
        MatrixType::Separable
    }
}

/// The Q value that governs `kind` (Q_Φ for Phi, Q_Ψ for Psi).
pub fn q_of(kind: MatrixType, x: &XState) -> f64 {
    match kind {
        MatrixType::Psi => q_psi(x),
        _ => q_phi(x),
    }
}

/// Δ = d11·(d11·p_a·p_b + d22·p_a + d33·p_b).
pub fn delta(x: &XState, p_a: f64, p_b: f64) -> f64 {
    x.d11 * (x.d11 * p_a * p_b + x.d22 * p_a + x.d33 * p_b)
}

/// Q_Φ after the channel, from the channel-specific closed form.
pub fn q_phi_t(x: &XState, spec: &ChannelSpec) -> f64 {
    let s = (spec.q_a() * spec.q_b()).sqrt();
    match spec.kind {
        ChannelKind::AmplitudeDamping => {
            let inner = delta(x, spec.p_a, spec.p_b) + x.d22 * x.d33;
            2.0 * s * (x.c14.norm() - inner.max(0.0).sqrt())
        }
        ChannelKind::PhaseDamping => 2.0 * (x.c14.norm() * s - (x.d22 * x.d33).max(0.0).sqrt()),
        ChannelKind::Depolarizing => q_phi(&evolve_x(x, spec)),
    }
}

/// Q_Ψ after the channel, from the channel-specific closed form.
pub fn q_psi_t(x: &XState, spec: &ChannelSpec) -> f64 {
    let s = (spec.q_a() * spec.q_b()).sqrt();
    match spec.kind {
        ChannelKind::AmplitudeDamping => {
            let inner = delta(x, spec.p_a, spec.p_b) + x.d11 * x.d44;
            2.0 * s * (x.c23.norm() - inner.max(0.0).sqrt())
        }
        ChannelKind::PhaseDamping => 2.0 * (x.c23.norm() * s - (x.d11 * x.d44).max(0.0).sqrt()),
        ChannelKind::Depolarizing => q_psi(&evolve_x(x, spec)),
    }
}

pub fn q_t(kind: MatrixType, x: &XState, spec: &ChannelSpec) -> f64 {
    match kind {
        MatrixType::Psi => q_psi_t(x, spec),
        _ => q_phi_t(x, spec),
    }
}

/// Square roots of the eigenvalues of ρ·ρ̃, descending.
///
/// With ρ = A·A†, these are the singular values of Aᵀ·(σy⊗σy)·A, which
/// avoids the defective non-Hermitian product for low-rank states.
pub fn wootters_lambdas(rho: &DensityMatrix4) -> [f64; 4] {
    let (vals, vecs) = linalg::hermitian_eigen(rho.matrix());
    let mut a = Mat4::zeros();
    for k in 0..4 {
        if vals[k] > 1e-15 {
            let s = C::new(vals[k].sqrt(), 0.0);
            a.set_column(k, &(vecs.column(k) * s));
        }
    }
    let tau = a.transpose() * linalg::spin_flip() * a;
    let sv = tau.singular_values();
    let mut out = [sv[0], sv[1], sv[2], sv[3]];
    out.sort_by(|x, y| y.total_cmp(x));
    out
}

/// λ₁ − λ₂ − λ₃ − λ₄ without clamping.
pub fn wootters_signed(rho: &DensityMatrix4) -> f64 {
    let l = wootters_lambdas(rho);
    l[0] - l[1] - l[2] - l[3]
}

pub fn wootters(rho: &DensityMatrix4) -> f64 {
    wootters_signed(rho).clamp(0.0, 1.0)
}
