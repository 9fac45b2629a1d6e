//! Critical boundaries of the phase diagrams: physical bounds, CD-free,
//! CD-tolerable and TD-tolerable values on one-parameter slices of X states.
//!
//! Every threshold op takes channel probabilities at the protection time τ,
//! not rates. A returned `f64::INFINITY` means the constraint never binds
//! (every coordinate is on the tolerable side).
//!
//! Coordinates: D = d11 on Φ slices and on the phase-damping Ψ slice,
//! S = d22 = d33 on the other Ψ slices. Tolerable means coord ≤ boundary,
//! except on the depolarizing Φ slice where the no-go set is an interval.

use serde::{Deserialize, Serialize};

use crate::channels::{depol_coeffs, ChannelKind, DecaySchedule};
use crate::concurrence::{classify, q_of, q_phi, q_psi, MatrixType};
use crate::density::XState;
use crate::error::{Error, Result};
use crate::linalg::C;
use crate::roots;

/// Returned where the constraint disappears.
pub const UNBOUNDED: f64 = f64::INFINITY;

fn check_q(q: f64) -> Result<()> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::domain(format!("Q must be finite and non-negative, got {q}")));
    }
    Ok(())
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::domain(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

fn check_ctv(c_tv: f64) -> Result<()> {
    if !(0.0..1.0).contains(&c_tv) {
        return Err(Error::domain(format!("C_tv must lie in [0, 1), got {c_tv}")));
    }
    Ok(())
}

/// δ = C_tv/√(q_a q_b).
fn shift(c_tv: f64, s: f64) -> Result<f64> {
    if c_tv == 0.0 {
        Ok(0.0)
    } else if s == 0.0 {
        Err(Error::EmptyRegion(
            "concurrence is zero at tau, so no threshold C_tv > 0 is reachable".into(),
        ))
    } else {
        Ok(c_tv / s)
    }
}

fn empty_if_negative(v: f64, what: &str) -> Result<()> {
    if v < 0.0 {
        return Err(Error::EmptyRegion(format!(
            "{what}: the shift exceeds the available coherence"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Amplitude damping, Φ slice: (d22, d33) fixed, D = d11 scanned.

/// Physical range of D on the slice.
pub fn ad_phi_bounds(q: f64, d22: f64, d33: f64) -> Result<(f64, f64)> {
    check_q(q)?;
    let y23 = d22 + d33;
    let x23 = (d22 * d33).sqrt();
    let w = 1.0 - y23;
    let c = q + 2.0 * x23;
    let disc = (w - c) * (w + c);
    if disc < 0.0 || w < 0.0 {
        return Err(Error::UnphysicalSlice {
            q,
            q_max: (w - 2.0 * x23).max(0.0),
        });
    }
    let r = disc.sqrt();
    // smaller root in product form
    let hi = 0.5 * (w + r);
    let lo = if hi > 0.0 { c * c / (4.0 * hi) } else { 0.0 };
    Ok((lo, hi))
}

/// Largest Q the slice admits, 1 − y23 − 2x23.
pub fn ad_phi_q_max(d22: f64, d33: f64) -> f64 {
    1.0 - d22 - d33 - 2.0 * (d22 * d33).sqrt()
}

/// D below which Q_Φ(t) ≥ 0 for all p_a, p_b.
pub fn ad_phi_cd_free(q: f64, d22: f64, d33: f64) -> f64 {
    let y23 = d22 + d33;
    let x23 = (d22 * d33).sqrt();
    let arg = y23 * y23 + q * q + 4.0 * x23 * q;
    // rationalized (√arg − y23)/2
    let den = arg.sqrt() + y23;
    if den == 0.0 {
        0.0
    } else {
        (q * q + 4.0 * x23 * q) / (2.0 * den)
    }
}

/// Root in D of p_a p_b D² + (d22 p_a + d33 p_b) D = K.
fn ad_phi_solve(k: f64, d22: f64, d33: f64, pa: f64, pb: f64) -> Result<f64> {
    if pa == 0.0 && pb == 0.0 {
        return if k >= 0.0 {
            Ok(UNBOUNDED)
        } else {
            Err(Error::EmptyRegion("target above the initial concurrence".into()))
        };
    }
    if pa == 0.0 || pb == 0.0 {
        return Err(Error::SingularChannel(
            "amplitude damping on one qubit only has no closed-form boundary; use the oracle".into(),
        ));
    }
    let a = pa * pb;
    let b = d22 * pa + d33 * pb;
    let disc = b * b + 4.0 * a * k;
    if disc < 0.0 {
        return Err(Error::EmptyRegion("no non-negative D reaches the target".into()));
    }
    let den = b + disc.sqrt();
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * k / den)
}

/// D at which t_CD = τ.
pub fn ad_phi_cd_tol(q: f64, d22: f64, d33: f64, pa: f64, pb: f64) -> Result<f64> {
    ad_phi_td_tol(q, d22, d33, pa, pb, 0.0)
}

/// D at which Q_Φ(τ) = C_tv.
pub fn ad_phi_td_tol(q: f64, d22: f64, d33: f64, pa: f64, pb: f64, c_tv: f64) -> Result<f64> {
    check_q(q)?;
    check_unit("p_a", pa)?;
    check_unit("p_b", pb)?;
    check_ctv(c_tv)?;
    let x23 = (d22 * d33).sqrt();
    let delta = shift(c_tv, ((1.0 - pa) * (1.0 - pb)).sqrt())?;
    let half = 0.5 * (q - delta) + x23;
    empty_if_negative(q + 2.0 * x23 - delta, "amplitude Phi TD")?;
    // K = half² − x23², factored
    let k = (half - x23) * (half + x23);
    ad_phi_solve(k, d22, d33, pa, pb)
}

/// The Q at which the CD-free line meets the lower physical bound, found
/// numerically. `None` if they do not meet below the slice's Q_max.
pub fn ad_phi_free_min_crossing(d22: f64, d33: f64) -> Option<f64> {
    let q_max = ad_phi_q_max(d22, d33);
    if q_max <= 0.0 {
        return None;
    }
    let gap = |q: f64| match ad_phi_bounds(q, d22, d33) {
        Ok((lo, _)) => ad_phi_cd_free(q, d22, d33) - lo,
        Err(_) => f64::NAN,
    };
    if gap(0.0) >= 0.0 {
        return Some(0.0);
    }
    roots::first_crossing(gap, 0.0, q_max, 2000, 1e-14).ok()
}

/// CD onset time for equal amplitude-damping rates.
///
/// With u = e^(γt) the condition Q_Φ(t) = 0 reads
/// A·u² − (2d11² + d11·y23)·u + d11² = 0, A = d11² + d11·y23 + d22·d33 − |c14|².
/// A ≤ 0 means the state never reaches CD (`None`).
pub fn ad_cd_time_symmetric(x: &XState, gamma: f64) -> Result<Option<f64>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::domain(format!("gamma must be positive, got {gamma}")));
    }
    if crate::concurrence::classify(x) != MatrixType::Phi {
        return Err(Error::domain("symmetric CD time needs a Phi-type state"));
    }
    let y23 = x.d22 + x.d33;
    let a = x.d11 * x.d11 + x.d11 * y23 + x.d22 * x.d33 - x.c14.norm_sqr();
    if a <= 0.0 {
        return Ok(None);
    }
    let b = 2.0 * x.d11 * x.d11 + x.d11 * y23;
    let c = x.d11 * x.d11;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::Numerical("negative discriminant in CD-time quadratic".into()));
    }
    let u = (b + disc.sqrt()) / (2.0 * a);
    Ok(Some(u.ln().max(0.0) / gamma))
}

// ---------------------------------------------------------------------------
// Amplitude damping, Ψ slice: (d11, d44) fixed, S = d22 = d33 scanned.

/// Lower physical bound Q/2 + √(d11 d44).
pub fn ad_psi_min(q: f64, d11: f64, d44: f64) -> Result<f64> {
    check_q(q)?;
    let x14 = (d11 * d44).sqrt();
    let s = 0.5 * q + x14;
    if s > 0.5 {
        return Err(Error::UnphysicalSlice {
            q,
            q_max: (1.0 - 2.0 * x14).max(0.0),
        });
    }
    Ok(s)
}

/// CD-free S for trace-normalized states (d44 = 1 − d11 − 2S).
pub fn ad_psi_cd_free(q: f64, d11: f64) -> f64 {
    if d11 <= 0.0 {
        return UNBOUNDED;
    }
    (4.0 * q * d11.sqrt() - q * q - 4.0 * d11 * d11) / (8.0 * d11)
}

/// CD-free S with d44 held fixed: the tolerable value at p_a = p_b = 1.
pub fn ad_psi_cd_free_fixed(q: f64, d11: f64, d44: f64) -> f64 {
    if d11 <= 0.0 {
        return UNBOUNDED;
    }
    let x14 = (d11 * d44).sqrt();
    (q * q + 4.0 * q * x14 - 4.0 * d11 * d11) / (8.0 * d11)
}

pub fn ad_psi_cd_tol(q: f64, d11: f64, d44: f64, pa: f64, pb: f64) -> Result<f64> {
    ad_psi_td_tol(q, d11, d44, pa, pb, 0.0)
}

pub fn ad_psi_td_tol(q: f64, d11: f64, d44: f64, pa: f64, pb: f64, c_tv: f64) -> Result<f64> {
    check_q(q)?;
    check_unit("p_a", pa)?;
    check_unit("p_b", pb)?;
    check_ctv(c_tv)?;
    let x14 = (d11 * d44).sqrt();
    let delta = shift(c_tv, ((1.0 - pa) * (1.0 - pb)).sqrt())?;
    let m = q + 2.0 * x14 - delta;
    empty_if_negative(m, "amplitude Psi TD")?;
    if d11 == 0.0 || pa + pb == 0.0 {
        return Ok(UNBOUNDED);
    }
    Ok(((m - 2.0 * x14) * (m + 2.0 * x14) - 4.0 * d11 * d11 * pa * pb) / (4.0 * d11 * (pa + pb)))
}

// ---------------------------------------------------------------------------
// Phase damping.

/// (0, (1 − Q)/4) for the Φ slice d11 = d44 = 1/2 − S.
pub fn pd_phi_bounds(q: f64) -> Result<(f64, f64)> {
    check_q(q)?;
    if q > 1.0 {
        return Err(Error::UnphysicalSlice { q, q_max: 1.0 });
    }
    Ok((0.0, (1.0 - q) / 4.0))
}

/// The CD-free set is the line S = 0.
pub fn pd_phi_cd_free() -> f64 {
    0.0
}

pub fn pd_phi_cd_tol(q: f64, qa: f64, qb: f64) -> Result<f64> {
    pd_phi_td_tol(q, qa, qb, 0.0)
}

pub fn pd_phi_td_tol(q: f64, qa: f64, qb: f64, c_tv: f64) -> Result<f64> {
    check_q(q)?;
    check_unit("q_a", qa)?;
    check_unit("q_b", qb)?;
    check_ctv(c_tv)?;
    let s = (qa * qb).sqrt();
    let delta = shift(c_tv, s)?;
    empty_if_negative(q - delta, "phase Phi TD")?;
    if s >= 1.0 {
        return Ok(UNBOUNDED);
    }
    Ok((q - delta) * s / (2.0 * (1.0 - s)))
}

/// CD onset from √(q_a q_b) = x23/|c14| (Φ) or x14/|c23| (Ψ).
pub fn pd_cd_time(x: &XState, sched: &DecaySchedule) -> Result<Option<f64>> {
    let ratio = match crate::concurrence::classify(x) {
        MatrixType::Phi => (x.d22 * x.d33).sqrt() / x.c14.norm(),
        MatrixType::Psi => (x.d11 * x.d44).sqrt() / x.c23.norm(),
        MatrixType::Separable => {
            return Err(Error::SeparableInput {
                q_phi: crate::concurrence::q_phi(x),
                q_psi: crate::concurrence::q_psi(x),
            })
        }
    };
    if ratio == 0.0 {
        return Ok(None);
    }
    Ok(Some(-2.0 * ratio.ln() / (sched.gamma_a + sched.gamma_b)))
}

/// (0, (√(1 − Q) − √d44)²) for the Ψ slice with d22 = d33 = (1 − D − d44)/2.
pub fn pd_psi_bounds(q: f64, d44: f64) -> Result<(f64, f64)> {
    check_q(q)?;
    check_unit("d44", d44)?;
    if q > 1.0 - d44 {
        return Err(Error::UnphysicalSlice {
            q,
            q_max: 1.0 - d44,
        });
    }
    let r = (1.0 - q).sqrt() - d44.sqrt();
    Ok((0.0, r * r))
}

/// CD-free set of the phase-damping Ψ slice: the line D = 0, or all D when
/// d44 = 0.
pub fn pd_psi_cd_free(d44: f64) -> f64 {
    if d44 == 0.0 {
        UNBOUNDED
    } else {
        0.0
    }
}

pub fn pd_psi_cd_tol(q: f64, d44: f64, qa: f64, qb: f64) -> Result<f64> {
    pd_psi_td_tol(q, d44, qa, qb, 0.0)
}

pub fn pd_psi_td_tol(q: f64, d44: f64, qa: f64, qb: f64, c_tv: f64) -> Result<f64> {
    check_q(q)?;
    check_unit("d44", d44)?;
    check_unit("q_a", qa)?;
    check_unit("q_b", qb)?;
    check_ctv(c_tv)?;
    let s = (qa * qb).sqrt();
    let delta = shift(c_tv, s)?;
    let m = q - delta;
    empty_if_negative(m, "phase Psi TD")?;
    if d44 == 0.0 || s >= 1.0 {
        return Ok(UNBOUNDED);
    }
    let r = m * s / (2.0 * (1.0 - s));
    Ok(r * r / d44)
}

// ---------------------------------------------------------------------------
// Depolarization.

/// Both roots of the depolarizing Φ boundary. D ≤ `lower` or D ≥ `upper` is
/// tolerable; both are +∞ when every D is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootPair {
    pub lower: f64,
    pub upper: f64,
}

/// Roots in D of ρ22(τ)·ρ33(τ) = T on the depolarizing Φ slice.
pub fn dp_phi_roots(q: f64, d22: f64, d33: f64, pa: f64, pb: f64, c_tv: f64) -> Result<RootPair> {
    check_q(q)?;
    check_unit("p_a", pa)?;
    check_unit("p_b", pb)?;
    check_ctv(c_tv)?;
    let f = depol_coeffs(pa, pb);
    let x23 = (d22 * d33).sqrt();
    let w = 1.0 - d22 - d33;
    let amp = (0.5 * q + x23) * f.f0.abs() - 0.5 * c_tv;
    if amp < 0.0 {
        return Err(Error::EmptyRegion(
            "depolarized coherence is below C_tv for every D".into(),
        ));
    }
    let t = amp * amp;
    let e = f.f2 - f.f3;
    let alpha = d22 * f.f4 + d33 * f.f1 + f.f2 * w;
    let beta = d22 * f.f1 + d33 * f.f4 + f.f3 * w;
    let all = RootPair {
        lower: UNBOUNDED,
        upper: UNBOUNDED,
    };
    if e == 0.0 {
        // ρ22(τ)ρ33(τ) = αβ for every D
        return if alpha * beta <= t {
            Ok(all)
        } else {
            Err(Error::NoSolution)
        };
    }
    let s = alpha + beta;
    let red = (s - 2.0 * t.sqrt()) * (s + 2.0 * t.sqrt());
    if red < 0.0 {
        return Ok(all);
    }
    let (a, b, c) = (e * e, -e * (alpha - beta), t - alpha * beta);
    match roots::quadratic_with_disc(a, b, c, e * e * red) {
        Some((lower, upper)) => Ok(RootPair { lower, upper }),
        None => Ok(all),
    }
}

/// Smallest D at which Q_Φ(τ) = 0.
pub fn dp_phi_cd_tol(q: f64, d22: f64, d33: f64, pa: f64, pb: f64) -> Result<f64> {
    Ok(dp_phi_roots(q, d22, d33, pa, pb, 0.0)?.lower)
}

/// Smallest D at which Q_Φ(τ) = C_tv.
pub fn dp_phi_td_tol(q: f64, d22: f64, d33: f64, pa: f64, pb: f64, c_tv: f64) -> Result<f64> {
    Ok(dp_phi_roots(q, d22, d33, pa, pb, c_tv)?.lower)
}

pub fn dp_psi_cd_tol(q: f64, d11: f64, d44: f64, pa: f64, pb: f64) -> Result<f64> {
    dp_psi_td_tol(q, d11, d44, pa, pb, 0.0)
}

/// S solving λS² + μS + ν = 0 with ν = ξ − χ.
pub fn dp_psi_td_tol(q: f64, d11: f64, d44: f64, pa: f64, pb: f64, c_tv: f64) -> Result<f64> {
    check_q(q)?;
    check_unit("p_a", pa)?;
    check_unit("p_b", pb)?;
    check_ctv(c_tv)?;
    let f = depol_coeffs(pa, pb);
    let x14 = (d11 * d44).sqrt();
    let amp = (0.5 * q + x14) * f.f0.abs() - 0.5 * c_tv;
    if amp < 0.0 {
        return Err(Error::EmptyRegion(
            "depolarized coherence is below C_tv for every S".into(),
        ));
    }
    let chi = amp * amp;
    let g = f.f2 + f.f3;
    let lambda = g * g;
    let mu = (d11 + d44) * (f.f1 + f.f4) * g;
    let xi = (d11 * f.f1 + d44 * f.f4) * (d11 * f.f4 + d44 * f.f1);
    let nu = xi - chi;
    if lambda == 0.0 {
        return if nu <= 0.0 {
            Ok(UNBOUNDED)
        } else {
            Err(Error::NoSolution)
        };
    }
    let disc = mu * mu - 4.0 * lambda * nu;
    if disc < 0.0 {
        return Err(Error::NoSolution);
    }
    let den = mu + disc.sqrt();
    if den > 0.0 {
        Ok(-2.0 * nu / den)
    } else {
        Ok((-mu + disc.sqrt()) / (2.0 * lambda))
    }
}

/// Depolarization has no CD-free region for either matrix type.
pub fn dp_cd_free_exists(_mtype: MatrixType) -> bool {
    false
}

// ---------------------------------------------------------------------------
// Slices and classification.

/// Scanned coordinate of a slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coord {
    D,
    S,
}

/// One horizontal line of a phase diagram: fixed Q and fixed elements,
/// with D or S free.
///
/// `fixed` holds (d22, d33) on amplitude/depolarizing Φ slices, (d11, d44)
/// on amplitude/depolarizing Ψ slices, (d44, unused) on the phase Ψ slice
/// and is unused on the phase Φ slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceParams {
    pub channel: ChannelKind,
    pub mtype: MatrixType,
    pub q: f64,
    pub fixed: (f64, f64),
    pub p_a: f64,
    pub p_b: f64,
    pub c_tv: f64,
}

impl SliceParams {
    pub fn new(
        channel: ChannelKind,
        mtype: MatrixType,
        q: f64,
        fixed: (f64, f64),
        p_a: f64,
        p_b: f64,
        c_tv: f64,
    ) -> Result<Self> {
        if mtype == MatrixType::Separable {
            return Err(Error::domain("slices are defined for Phi or Psi matrices"));
        }
        check_q(q)?;
        check_unit("p_a", p_a)?;
        check_unit("p_b", p_b)?;
        check_ctv(c_tv)?;
        for (name, v) in [("fixed.0", fixed.0), ("fixed.1", fixed.1)] {
            check_unit(name, v)?;
        }
        Ok(SliceParams {
            channel,
            mtype,
            q,
            fixed,
            p_a,
            p_b,
            c_tv,
        })
    }

    /// Slice at protection time τ under an exponential schedule.
    pub fn at_time(
        channel: ChannelKind,
        mtype: MatrixType,
        q: f64,
        fixed: (f64, f64),
        sched: &DecaySchedule,
        tau: f64,
        c_tv: f64,
    ) -> Result<Self> {
        let spec = sched.at_time(channel, tau)?;
        Self::new(channel, mtype, q, fixed, spec.p_a, spec.p_b, c_tv)
    }

    pub fn coord(&self) -> Coord {
        match (self.channel, self.mtype) {
            (ChannelKind::PhaseDamping, MatrixType::Phi) => Coord::S,
            (ChannelKind::PhaseDamping, _) => Coord::D,
            (_, MatrixType::Phi) => Coord::D,
            _ => Coord::S,
        }
    }

    /// The X matrix at a coordinate of this slice. Its governing Q equals
    /// `self.q` everywhere; positivity holds only inside the physical range.
    pub fn state_at(&self, coord: f64) -> XState {
        let z = C::new(0.0, 0.0);
        let q = self.q;
        let (f0, f1) = self.fixed;
        match (self.channel, self.mtype) {
            (ChannelKind::PhaseDamping, MatrixType::Phi) => {
                let s = coord;
                XState {
                    d11: 0.5 - s,
                    d22: s,
                    d33: s,
                    d44: 0.5 - s,
                    c14: C::new(0.5 * q + s, 0.0),
                    c23: z,
                }
            }
            (ChannelKind::PhaseDamping, _) => {
                let (d, d44) = (coord, f0);
                let s = 0.5 * (1.0 - d - d44);
                XState {
                    d11: d,
                    d22: s,
                    d33: s,
                    d44,
                    c14: z,
                    c23: C::new(0.5 * q + (d * d44).max(0.0).sqrt(), 0.0),
                }
            }
            (_, MatrixType::Phi) => {
                let (d22, d33) = (f0, f1);
                XState {
                    d11: coord,
                    d22,
                    d33,
                    d44: 1.0 - d22 - d33 - coord,
                    c14: C::new(0.5 * q + (d22 * d33).sqrt(), 0.0),
                    c23: z,
                }
            }
            _ => {
                let (d11, d44) = (f0, f1);
                XState {
                    d11,
                    d22: coord,
                    d33: coord,
                    d44,
                    c14: z,
                    c23: C::new(0.5 * q + (d11 * d44).sqrt(), 0.0),
                }
            }
        }
    }
}

/// A critical value as computed and clamped to the physical range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    #[serde(with = "inf_json")]
    pub raw: f64,
    pub clamped: f64,
}

impl Threshold {
    fn new(raw: f64, lo: f64, hi: f64) -> Self {
        Threshold {
            raw,
            clamped: raw.clamp(lo, hi),
        }
    }
}

/// All boundaries of one slice. `None` marks an empty region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalSet {
    pub coord: Coord,
    pub phys_lo: f64,
    pub phys_hi: f64,
    pub cd_free: Option<Threshold>,
    pub cd_tol: Option<Threshold>,
    /// Start of the upper tolerable interval (depolarizing Φ only).
    pub cd_tol_upper: Option<Threshold>,
    pub td_tol: Option<Threshold>,
    pub td_tol_upper: Option<Threshold>,
}

impl CriticalSet {
    fn tolerable(lower: Option<Threshold>, upper: Option<Threshold>, coord: f64) -> bool {
        let below = lower.is_some_and(|t| coord <= t.raw);
        let above = upper.is_some_and(|t| t.raw.is_finite() && coord >= t.raw);
        below || above
    }

    pub fn cd_tolerable(&self, coord: f64) -> bool {
        Self::tolerable(self.cd_tol, self.cd_tol_upper, coord)
    }

    pub fn td_tolerable(&self, coord: f64) -> bool {
        Self::tolerable(self.td_tol, self.td_tol_upper, coord)
    }

    pub fn cd_free_at(&self, coord: f64) -> bool {
        self.cd_free.is_some_and(|t| coord <= t.raw)
    }

    pub fn is_physical(&self, coord: f64) -> bool {
        coord >= self.phys_lo && coord <= self.phys_hi
    }
}

fn keep_empty(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::EmptyRegion(_)) | Err(Error::NoSolution) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Physical range of the slice coordinate.
pub fn physical_bounds(slice: &SliceParams) -> Result<(f64, f64)> {
    let (f0, f1) = slice.fixed;
    match (slice.channel, slice.mtype) {
        (ChannelKind::PhaseDamping, MatrixType::Phi) => pd_phi_bounds(slice.q),
        (ChannelKind::PhaseDamping, _) => pd_psi_bounds(slice.q, f0),
        (_, MatrixType::Phi) => ad_phi_bounds(slice.q, f0, f1),
        _ => Ok((ad_psi_min(slice.q, f0, f1)?, 0.5)),
    }
}

/// Evaluates every boundary of a slice.
pub fn critical_set(slice: &SliceParams) -> Result<CriticalSet> {
    let (lo, hi) = physical_bounds(slice)?;
    let (f0, f1) = slice.fixed;
    let (q, pa, pb, c) = (slice.q, slice.p_a, slice.p_b, slice.c_tv);
    let (qa, qb) = (1.0 - pa, 1.0 - pb);
    // a boundary below the physical range leaves its side empty
    let th = |v: Option<f64>| v.filter(|r| *r >= lo).map(|r| Threshold::new(r, lo, hi));
    let mut set = CriticalSet {
        coord: slice.coord(),
        phys_lo: lo,
        phys_hi: hi,
        cd_free: None,
        cd_tol: None,
        cd_tol_upper: None,
        td_tol: None,
        td_tol_upper: None,
    };
    match (slice.channel, slice.mtype) {
        (ChannelKind::AmplitudeDamping, MatrixType::Phi) => {
            set.cd_free = th(Some(ad_phi_cd_free(q, f0, f1)));
            set.cd_tol = th(keep_empty(ad_phi_cd_tol(q, f0, f1, pa, pb))?);
            set.td_tol = th(keep_empty(ad_phi_td_tol(q, f0, f1, pa, pb, c))?);
        }
        (ChannelKind::AmplitudeDamping, _) => {
            set.cd_free = th(Some(ad_psi_cd_free_fixed(q, f0, f1)));
            set.cd_tol = th(keep_empty(ad_psi_cd_tol(q, f0, f1, pa, pb))?);
            set.td_tol = th(keep_empty(ad_psi_td_tol(q, f0, f1, pa, pb, c))?);
        }
        (ChannelKind::PhaseDamping, MatrixType::Phi) => {
            set.cd_free = th(Some(pd_phi_cd_free()));
            set.cd_tol = th(keep_empty(pd_phi_cd_tol(q, qa, qb))?);
            set.td_tol = th(keep_empty(pd_phi_td_tol(q, qa, qb, c))?);
        }
        (ChannelKind::PhaseDamping, _) => {
            set.cd_free = th(Some(pd_psi_cd_free(f0)));
            set.cd_tol = th(keep_empty(pd_psi_cd_tol(q, f0, qa, qb))?);
            set.td_tol = th(keep_empty(pd_psi_td_tol(q, f0, qa, qb, c))?);
        }
        (ChannelKind::Depolarizing, MatrixType::Phi) => {
            let pair = |ctv| match dp_phi_roots(q, f0, f1, pa, pb, ctv) {
                Ok(r) => Ok((Some(r.lower), Some(r.upper))),
                Err(Error::EmptyRegion(_)) | Err(Error::NoSolution) => Ok((None, None)),
                Err(e) => Err(e),
            };
            let (cl, cu) = pair(0.0)?;
            let (tl, tu) = pair(c)?;
            // D ≥ upper is tolerable, so an upper root below the range covers all of it
            let th_up = |v: Option<f64>| v.map(|r| Threshold::new(r, lo, hi));
            set.cd_tol = th(cl);
            set.cd_tol_upper = th_up(cu);
            set.td_tol = th(tl);
            set.td_tol_upper = th_up(tu);
        }
        (ChannelKind::Depolarizing, _) => {
            set.cd_tol = th(keep_empty(dp_psi_cd_tol(q, f0, f1, pa, pb))?);
            set.td_tol = th(keep_empty(dp_psi_td_tol(q, f0, f1, pa, pb, c))?);
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CdPhase {
    Free,
    Tolerable,
    NoGo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TdPhase {
    Tolerable,
    NoGo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseLabel {
    pub cd: CdPhase,
    pub td: TdPhase,
    pub optimal_robust: bool,
    pub physical: bool,
}

impl PhaseLabel {
    pub fn unphysical() -> Self {
        PhaseLabel {
            cd: CdPhase::NoGo,
            td: TdPhase::NoGo,
            optimal_robust: false,
            physical: false,
        }
    }

    /// Short code: cd letter (F/T/N) then td letter (T/N).
    pub fn code(&self) -> &'static str {
        match (self.cd, self.td) {
            (CdPhase::Free, TdPhase::Tolerable) => "FT",
            (CdPhase::Free, TdPhase::NoGo) => "FN",
            (CdPhase::Tolerable, TdPhase::Tolerable) => "TT",
            (CdPhase::Tolerable, TdPhase::NoGo) => "TN",
            (CdPhase::NoGo, TdPhase::Tolerable) => "NT",
            (CdPhase::NoGo, TdPhase::NoGo) => "NN",
        }
    }
}

/// Labels a coordinate against precomputed boundaries.
pub fn label_with(set: &CriticalSet, coord: f64) -> PhaseLabel {
    let cd = if set.cd_free_at(coord) {
        CdPhase::Free
    } else if set.cd_tolerable(coord) {
        CdPhase::Tolerable
    } else {
        CdPhase::NoGo
    };
    let td = if set.td_tolerable(coord) {
        TdPhase::Tolerable
    } else {
        TdPhase::NoGo
    };
    PhaseLabel {
        cd,
        td,
        optimal_robust: cd != CdPhase::NoGo && td == TdPhase::Tolerable,
        physical: set.is_physical(coord),
    }
}

pub fn classify_point(slice: &SliceParams, coord: f64) -> Result<PhaseLabel> {
    match critical_set(slice) {
        Ok(set) => Ok(label_with(&set, coord)),
        Err(Error::UnphysicalSlice { .. }) => Ok(PhaseLabel::unphysical()),
        Err(e) => Err(e),
    }
}

/// A state placed on its slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Located {
    pub slice: SliceParams,
    pub coord: f64,
    /// Whether the state obeys the slice's symmetry convention (d22 = d33
    /// on Ψ slices, d11 = d44 and d22 = d33 on the phase Φ slice). Slice
    /// boundaries only describe conforming states.
    pub conforms: bool,
}

/// Finds the slice through an X state for the given channel parameters.
pub fn locate(x: &XState, channel: ChannelKind, p_a: f64, p_b: f64, c_tv: f64) -> Result<Located> {
    let mtype = classify(x);
    if mtype == MatrixType::Separable {
        return Err(Error::SeparableInput {
            q_phi: q_phi(x),
            q_psi: q_psi(x),
        });
    }
    let q = q_of(mtype, x);
    let eq = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let (fixed, coord, conforms) = match (channel, mtype) {
        (ChannelKind::PhaseDamping, MatrixType::Phi) => ((0.0, 0.0), x.d22, eq(x.d22, x.d33) && eq(x.d11, x.d44)),
        (ChannelKind::PhaseDamping, _) => ((x.d44, 0.0), x.d11, eq(x.d22, x.d33)),
        (_, MatrixType::Phi) => ((x.d22, x.d33), x.d11, true),
        _ => ((x.d11, x.d44), x.d22, eq(x.d22, x.d33)),
    };
    Ok(Located {
        slice: SliceParams::new(channel, mtype, q.min(1.0), fixed, p_a, p_b, c_tv)?,
        coord,
        conforms,
    })
}

/// Serializes +∞ as the string "inf" so JSON `null` keeps meaning "undefined".
mod inf_json {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(de::Error::custom(format!("expected number or \"inf\", got {s}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::ChannelSpec;
    use crate::concurrence::{q_of, q_t};
    use crate::density::{werner_state, Tolerances};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ad_phi_bounds_examples() {
        let (lo, hi) = ad_phi_bounds(1.0, 0.0, 0.0).unwrap();
        assert!(close(lo, 0.5, 1e-15) && close(hi, 0.5, 1e-15));
        assert_eq!(ad_phi_bounds(0.0, 0.0, 0.0).unwrap(), (0.0, 1.0));
        let q_max = ad_phi_q_max(0.05, 0.05);
        assert!(matches!(
            ad_phi_bounds(q_max + 1e-6, 0.05, 0.05),
            Err(Error::UnphysicalSlice { .. })
        ));
    }

    #[test]
    fn ad_phi_free_examples() {
        for q in [0.0, 0.2, 0.7, 1.0] {
            assert!(close(ad_phi_cd_free(q, 0.0, 0.0), q / 2.0, 1e-16));
        }
    }

    #[test]
    fn ad_phi_tol_reductions() {
        let (q, d22, d33) = (0.4, 0.05, 0.05);
        let full = ad_phi_cd_tol(q, d22, d33, 1.0, 1.0).unwrap();
        assert!(close(full, ad_phi_cd_free(q, d22, d33), 1e-12));
        let p = 0.3;
        assert!(close(ad_phi_cd_tol(q, 0.0, 0.0, p, p).unwrap(), q / (2.0 * p), 1e-15));
        assert!(matches!(
            ad_phi_cd_tol(q, d22, d33, 0.0, 0.4),
            Err(Error::SingularChannel(_))
        ));
        assert_eq!(ad_phi_cd_tol(q, d22, d33, 0.0, 0.0).unwrap(), UNBOUNDED);
        assert!(matches!(
            ad_phi_td_tol(0.1, 0.0, 0.0, 0.5, 0.5, 0.2),
            Err(Error::EmptyRegion(_))
        ));
    }

    #[test]
    fn ad_cd_time_examples() {
        let bell = XState::bell_phi_plus();
        assert_eq!(ad_cd_time_symmetric(&bell, 1.0).unwrap(), None);
        let w = werner_state(0.5).unwrap();
        let t = ad_cd_time_symmetric(&w, 1.0).unwrap().unwrap();
        // u = 3/2 for w = 1/2
        assert!(close(t, 1.5f64.ln(), 1e-14));
        let spec = DecaySchedule::new(1.0, 1.0)
            .unwrap()
            .at_time(ChannelKind::AmplitudeDamping, t)
            .unwrap();
        assert!(crate::concurrence::q_phi_t(&w, &spec).abs() < 1e-14);
        assert!(ad_cd_time_symmetric(&XState::bell_psi_plus(), 1.0).is_err());
        let no_d11 = XState {
            d11: 0.0,
            d22: 0.1,
            d33: 0.1,
            d44: 0.8,
            c14: C::new(0.0, 0.0),
            c23: C::new(0.0, 0.0),
        };
        assert!(ad_cd_time_symmetric(&no_d11, 1.0).is_err());
    }

    #[test]
    fn ad_psi_examples() {
        assert_eq!(ad_psi_min(1.0, 0.0, 0.0).unwrap(), 0.5);
        assert_eq!(ad_psi_min(0.0, 1.0 / 16.0, 1.0 / 16.0).unwrap(), 1.0 / 16.0);
        assert!(close(ad_psi_min(0.8, 0.04, 0.04).unwrap(), 0.44, 1e-15));
        assert!(ad_psi_min(0.95, 0.04, 0.04).is_err());
        assert!(close(ad_psi_cd_free(0.0, 0.2), -0.1, 1e-16));
        assert_eq!(ad_psi_cd_free(0.3, 0.0), UNBOUNDED);
        let (q, d11, pa, pb) = (0.5, 0.1, 0.3, 0.6);
        let expect = q * q / (4.0 * d11 * (pa + pb)) - d11 * pa * pb / (pa + pb);
        assert!(close(ad_psi_cd_tol(q, d11, 0.0, pa, pb).unwrap(), expect, 1e-15));
        let m = 0.4;
        let x14 = (0.1f64 * 0.2).sqrt();
        let s = ad_psi_td_tol(m - 2.0 * x14 + 0.0, 0.1, 0.2, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(s, UNBOUNDED);
    }

    #[test]
    fn ad_psi_free_identity_under_normalization() {
        // the printed normalized form equals the fixed form when d44 = 1 − d11 − 2S_f
        // valid where Q ≤ 2√d11
        for (q, d11) in [(0.2, 0.04), (0.3, 0.09), (0.1, 0.05), (0.4, 0.2)] {
            let sf = ad_psi_cd_free(q, d11);
            assert!(sf >= 0.0);
            let d44 = 1.0 - d11 - 2.0 * sf;
            let fixed = ad_psi_cd_tol(q, d11, d44, 1.0, 1.0).unwrap();
            assert!(close(fixed, sf, 1e-12), "{q} {d11}: {fixed} vs {sf}");
        }
    }

    #[test]
    fn ad_psi_td_at_full_shift() {
        let (q, d11, d44, pa, pb): (f64, f64, f64, f64, f64) = (0.5, 0.04, 0.09, 0.4, 0.3);
        let x14 = (d11 * d44).sqrt();
        let s = ((1.0 - pa) * (1.0 - pb)).sqrt();
        let c_tv = (q + 2.0 * x14) * s;
        let v = ad_psi_td_tol(q, d11, d44, pa, pb, c_tv).unwrap();
        let expect = (-4.0 * x14 * x14 - 4.0 * d11 * d11 * pa * pb) / (4.0 * d11 * (pa + pb));
        assert!(close(v, expect, 1e-12));
        assert!(v <= 0.0);
    }

    #[test]
    fn pd_examples() {
        assert_eq!(pd_phi_bounds(1.0).unwrap(), (0.0, 0.0));
        assert_eq!(pd_phi_bounds(0.0).unwrap(), (0.0, 0.25));
        assert_eq!(pd_phi_bounds(0.5).unwrap(), (0.0, 0.125));
        assert_eq!(pd_phi_cd_free(), 0.0);
        let e = (-1.0f64).exp();
        let v = pd_phi_cd_tol(0.5, e, e).unwrap();
        assert!(close(v, 0.5 * e / (2.0 * (1.0 - e)), 1e-15));
        assert!(close(v, 0.1454942, 1e-7));
        assert_eq!(pd_phi_cd_tol(0.5, 1.0, 1.0).unwrap(), UNBOUNDED);
        assert!(pd_psi_bounds(0.9, 0.1).unwrap().1 < 1e-30);
        let (_, dm) = pd_psi_bounds(0.0, 0.1).unwrap();
        assert!(close(dm, (1.0 - 0.1f64.sqrt()).powi(2), 1e-15));
        assert!(close(pd_psi_bounds(0.5, 0.0).unwrap().1, 0.5, 1e-15));
        assert!(pd_psi_bounds(0.95, 0.1).is_err());
        assert_eq!(pd_psi_cd_tol(0.0, 0.1, 0.5, 0.5).unwrap(), 0.0);
        assert_eq!(pd_psi_cd_tol(0.5, 0.0, 0.5, 0.5).unwrap(), UNBOUNDED);
    }

    #[test]
    fn pd_cd_time_examples() {
        let sched = DecaySchedule::new(1.0, 2.0).unwrap();
        assert_eq!(pd_cd_time(&XState::bell_phi_plus(), &sched).unwrap(), None);
        let edge = XState {
            d11: 0.3,
            d22: 0.2,
            d33: 0.2,
            d44: 0.3,
            c14: C::new(0.2 + 1e-12, 0.0),
            c23: C::new(0.0, 0.0),
        };
        let t = pd_cd_time(&edge, &sched).unwrap().unwrap();
        assert!(t > 0.0 && t < 1e-11);
        assert!(matches!(
            pd_cd_time(&XState::maximally_mixed(), &sched),
            Err(Error::SeparableInput { .. })
        ));
    }

    #[test]
    fn dp_examples() {
        assert_eq!(dp_phi_cd_tol(0.5, 0.05, 0.05, 0.0, 0.0).unwrap(), UNBOUNDED);
        assert_eq!(dp_psi_cd_tol(0.5, 0.05, 0.05, 0.0, 0.0).unwrap(), UNBOUNDED);
        assert!(!dp_cd_free_exists(MatrixType::Phi));
        assert!(!dp_cd_free_exists(MatrixType::Psi));
        let spec = ChannelSpec::new(ChannelKind::Depolarizing, 0.75, 0.75).unwrap();
        let x = werner_state(0.9).unwrap();
        assert!(crate::concurrence::concurrence_x(&crate::channels::evolve_x(&x, &spec)) < 1e-15);
    }

    #[test]
    fn classify_point_examples() {
        let bell = SliceParams::new(
            ChannelKind::AmplitudeDamping,
            MatrixType::Phi,
            1.0,
            (0.0, 0.0),
            0.4,
            0.4,
            0.1,
        )
        .unwrap();
        let l = classify_point(&bell, 0.5).unwrap();
        assert_eq!(l.cd, CdPhase::Free);
        assert!(l.physical);
        let l = classify_point(&bell, 0.6).unwrap();
        assert!(!l.physical);
        let over = SliceParams { q: 1.2, ..bell };
        assert!(!classify_point(&over, 0.5).unwrap().physical);
    }

    #[test]
    fn threshold_json_keeps_null_and_inf_apart() {
        let set = CriticalSet {
            coord: Coord::D,
            phys_lo: 0.0,
            phys_hi: 1.0,
            cd_free: None,
            cd_tol: Some(Threshold::new(UNBOUNDED, 0.0, 1.0)),
            cd_tol_upper: None,
            td_tol: Some(Threshold::new(0.25, 0.0, 1.0)),
            td_tol_upper: None,
        };
        let text = serde_json::to_string(&set).unwrap();
        assert!(text.contains("\"cd_free\":null"));
        assert!(text.contains("\"raw\":\"inf\""));
        let back: CriticalSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, set);
    }

    fn slice_strategy() -> impl Strategy<Value = (SliceParams, f64)> {
        (
            0usize..3,
            prop::bool::ANY,
            0.0f64..1.0,
            0.0f64..0.2,
            0.0f64..0.2,
            0.02f64..0.98,
            0.02f64..0.98,
            0.0f64..0.3,
            0.0f64..1.0,
        )
            .prop_filter_map("unphysical slice", |(k, phi, qf, a, b, pa, pb, ctv, u)| {
                let channel = ChannelKind::ALL[k];
                let mtype = if phi { MatrixType::Phi } else { MatrixType::Psi };
                let (pa, pb) = if channel == ChannelKind::Depolarizing {
                    (0.75 * pa, 0.75 * pb)
                } else {
                    (pa, pb)
                };
                let probe = SliceParams::new(channel, mtype, 0.0, (a, b), pa, pb, ctv).ok()?;
                let q_max = match (channel, mtype) {
                    (ChannelKind::PhaseDamping, MatrixType::Phi) => 1.0,
                    (ChannelKind::PhaseDamping, _) => 1.0 - a,
                    (_, MatrixType::Phi) => ad_phi_q_max(a, b),
                    _ => 1.0 - 2.0 * (a * b).sqrt(),
                };
                let slice = SliceParams { q: qf * q_max, ..probe };
                let (lo, hi) = physical_bounds(&slice).ok()?;
                Some((slice, lo + u * (hi - lo)))
            })
    }

    fn spec_of(slice: &SliceParams) -> ChannelSpec {
        ChannelSpec::new(slice.channel, slice.p_a, slice.p_b).unwrap()
    }

    #[test]
    fn dp_phi_upper_root_below_range_covers_slice() {
        let slice = SliceParams::new(
            ChannelKind::Depolarizing,
            MatrixType::Phi,
            0.8009372251744421,
            (0.17006724678600746, 0.0),
            0.12724773076401408,
            0.2646614859262506,
            0.1100177277956364,
        )
        .unwrap();
        let set = critical_set(&slice).unwrap();
        let up = set.td_tol_upper.unwrap();
        assert!(up.raw < set.phys_lo);
        assert_eq!(up.clamped, set.phys_lo);
        for c in [set.phys_lo, 0.5 * (set.phys_lo + set.phys_hi), set.phys_hi] {
            assert!(q_t(MatrixType::Phi, &slice.state_at(c), &spec_of(&slice)) > slice.c_tv);
            assert!(set.td_tolerable(c));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn slice_states_carry_q((slice, coord) in slice_strategy()) {
            let x = slice.state_at(coord);
            prop_assert!((q_of(slice.mtype, &x) - slice.q).abs() < 1e-12);
            prop_assert!(x.to_density(&Tolerances::uniform(1e-9)).is_ok() || slice.mtype == MatrixType::Psi);
        }

        #[test]
        fn boundaries_hit_their_targets((slice, _c) in slice_strategy()) {
            let set = critical_set(&slice).unwrap();
            let spec = spec_of(&slice);
            for (t, target) in [
                (set.cd_tol, 0.0),
                (set.cd_tol_upper, 0.0),
                (set.td_tol, slice.c_tv),
                (set.td_tol_upper, slice.c_tv),
            ] {
                if let Some(t) = t {
                    if t.raw.is_finite() {
                        let v = q_t(slice.mtype, &slice.state_at(t.raw), &spec);
                        prop_assert!((v - target).abs() < 1e-9, "{v} vs {target} at {}", t.raw);
                    }
                }
            }
        }

        #[test]
        fn zero_threshold_is_cd((slice, _c) in slice_strategy()) {
            let s0 = SliceParams { c_tv: 0.0, ..slice };
            let set = critical_set(&s0).unwrap();
            let (a, b) = (set.cd_tol.map(|t| t.raw), set.td_tol.map(|t| t.raw));
            match (a, b) {
                (Some(a), Some(b)) if a.is_finite() => prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs())),
                (a, b) => prop_assert_eq!(a, b),
            }
        }

        #[test]
        fn td_inside_cd((slice, _c) in slice_strategy()) {
            let set = critical_set(&slice).unwrap();
            if let (Some(cd), Some(td)) = (set.cd_tol, set.td_tol) {
                prop_assert!(td.raw <= cd.raw + 1e-12);
            }
            for i in 0..=200 {
                let c = set.phys_lo + (set.phys_hi - set.phys_lo) * i as f64 / 200.0;
                prop_assert!(!set.td_tolerable(c) || set.cd_tolerable(c), "coord {}", c);
            }
        }

        #[test]
        fn labels_agree_with_evolved_q((slice, coord) in slice_strategy()) {
            let set = critical_set(&slice).unwrap();
            let label = label_with(&set, coord);
            let v = q_t(slice.mtype, &slice.state_at(coord), &spec_of(&slice));
            // stay clear of the boundaries themselves
            if (v).abs() > 1e-9 {
                prop_assert_eq!(label.cd != CdPhase::NoGo, v > 0.0, "v = {}", v);
            }
            if (v - slice.c_tv).abs() > 1e-9 {
                prop_assert_eq!(label.td == TdPhase::Tolerable, v > slice.c_tv);
            }
        }

        #[test]
        fn amplitude_free_is_full_decay((slice, _c) in slice_strategy()) {
            if slice.channel != ChannelKind::AmplitudeDamping {
                return Ok(());
            }
            let (q, (a, b), pa, pb) = (slice.q, slice.fixed, slice.p_a, slice.p_b);
            let (free, full, tol) = if slice.mtype == MatrixType::Phi {
                (ad_phi_cd_free(q, a, b), ad_phi_cd_tol(q, a, b, 1.0, 1.0).unwrap(), ad_phi_cd_tol(q, a, b, pa, pb).unwrap())
            } else {
                (ad_psi_cd_free_fixed(q, a, b), ad_psi_cd_tol(q, a, b, 1.0, 1.0).unwrap(), ad_psi_cd_tol(q, a, b, pa, pb).unwrap())
            };
            prop_assert!(free == full || (free - full).abs() <= 1e-12 * (1.0 + free.abs()));
            // the free region sits inside the tolerable one at any τ
            prop_assert!(free <= tol + 1e-12);
        }

        #[test]
        fn thresholds_shrink_with_tau((slice, _c) in slice_strategy(), grow in 0.0f64..1.0) {
            let cap = if slice.channel == ChannelKind::Depolarizing { 0.75 } else { 1.0 };
            let later = SliceParams {
                p_a: slice.p_a + grow * (cap - slice.p_a),
                p_b: slice.p_b + grow * (cap - slice.p_b),
                ..slice
            };
            if slice.channel == ChannelKind::Depolarizing && slice.mtype == MatrixType::Phi {
                return Ok(());
            }
            let (a, b) = (critical_set(&slice).unwrap(), critical_set(&later).unwrap());
            for (x, y) in [(a.cd_tol, b.cd_tol), (a.td_tol, b.td_tol)] {
                match (x, y) {
                    (Some(x), Some(y)) => prop_assert!(y.raw <= x.raw + 1e-12 * (1.0 + x.raw.abs())),
                    (None, Some(_)) => prop_assert!(false, "region reappeared"),
                    _ => {}
                }
            }
        }
    }
}
