//! Local noise channels: Kraus operators, joint Kraus sums and the closed
//! X-form / O-form update rules.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::density::{DensityMatrix4, OState, XState};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Mat4, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelKind {
    #[serde(rename = "amplitude")]
    AmplitudeDamping,
    #[serde(rename = "phase")]
    PhaseDamping,
    #[serde(rename = "depolarizing")]
    Depolarizing,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 3] = [
        ChannelKind::AmplitudeDamping,
        ChannelKind::PhaseDamping,
        ChannelKind::Depolarizing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::AmplitudeDamping => "amplitude",
            ChannelKind::PhaseDamping => "phase",
            ChannelKind::Depolarizing => "depolarizing",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "amplitude" | "ad" | "amplitude-damping" => Ok(ChannelKind::AmplitudeDamping),
            "phase" | "pd" | "phase-damping" => Ok(ChannelKind::PhaseDamping),
            "depolarizing" | "dp" | "depolarization" => Ok(ChannelKind::Depolarizing),
            other => Err(Error::Parse(format!("unknown channel kind '{other}'"))),
        }
    }
}

/// One channel kind acting on both qubits with independent strengths.
/// For depolarization `p_a`, `p_b` are the rescaled probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecJson")]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub p_a: f64,
    pub p_b: f64,
    /// 1 − p, kept exact when the schedule knows it (e^(−γt) near full decay).
    #[serde(skip)]
    q: (f64, f64),
}

#[derive(Deserialize)]
struct SpecJson {
    kind: ChannelKind,
    p_a: f64,
    p_b: f64,
}

impl TryFrom<SpecJson> for ChannelSpec {
    type Error = Error;

    fn try_from(j: SpecJson) -> Result<Self> {
        ChannelSpec::new(j.kind, j.p_a, j.p_b)
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

impl ChannelSpec {
    pub fn new(kind: ChannelKind, p_a: f64, p_b: f64) -> Result<Self> {
        check_prob("p_a", p_a)?;
        check_prob("p_b", p_b)?;
        Ok(ChannelSpec {
            kind,
            p_a,
            p_b,
            q: (1.0 - p_a, 1.0 - p_b),
        })
    }

    /// Builds a joint spec from one (kind, p) per qubit. The kinds must match.
    pub fn from_local(a: (ChannelKind, f64), b: (ChannelKind, f64)) -> Result<Self> {
        if a.0 != b.0 {
            return Err(Error::MixedChannelKinds {
                a: a.0.to_string(),
                b: b.0.to_string(),
            });
        }
        Self::new(a.0, a.1, b.1)
    }

    pub fn identity(kind: ChannelKind) -> Self {
        ChannelSpec {
            kind,
            p_a: 0.0,
            p_b: 0.0,
            q: (1.0, 1.0),
        }
    }

    pub fn q_a(&self) -> f64 {
        self.q.0
    }

    pub fn q_b(&self) -> f64 {
        self.q.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleJson")]
pub struct DecaySchedule {
    pub gamma_a: f64,
    pub gamma_b: f64,
}

#[derive(Deserialize)]
struct ScheduleJson {
    gamma_a: f64,
    gamma_b: f64,
}

impl TryFrom<ScheduleJson> for DecaySchedule {
    type Error = Error;

    fn try_from(j: ScheduleJson) -> Result<Self> {
        DecaySchedule::new(j.gamma_a, j.gamma_b)
    }
}

impl DecaySchedule {
    pub fn new(gamma_a: f64, gamma_b: f64) -> Result<Self> {
        for (name, g) in [("gamma_a", gamma_a), ("gamma_b", gamma_b)] {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {g}")));
            }
        }
        Ok(DecaySchedule { gamma_a, gamma_b })
    }

    /// Channel at time `t`, applying the 3/4 rescale for depolarization.
    pub fn at_time(&self, kind: ChannelKind, t: f64) -> Result<ChannelSpec> {
        let (pa, pb) = p_of_t(self, t)?;
        if kind == ChannelKind::Depolarizing {
            return ChannelSpec::new(kind, 0.75 * pa, 0.75 * pb);
        }
        let mut spec = ChannelSpec::new(kind, pa, pb)?;
        spec.q = ((-self.gamma_a * t).exp(), (-self.gamma_b * t).exp());
        Ok(spec)
    }
}

/// Raw decay probabilities 1 − e^(−γt).
pub fn p_of_t(sched: &DecaySchedule, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    Ok((-(-sched.gamma_a * t).exp_m1(), -(-sched.gamma_b * t).exp_m1()))
}

/// Single-qubit Kraus operators in the (e, g) basis.
pub fn kraus_ops(kind: ChannelKind, p: f64) -> Result<Vec<Mat2>> {
    check_prob("p", p)?;
    Ok(kraus_pq(kind, p, 1.0 - p))
}

fn kraus_pq(kind: ChannelKind, p: f64, q: f64) -> Vec<Mat2> {
    let z = C::new(0.0, 0.0);
    let r = |v: f64| C::new(v, 0.0);
    match kind {
        ChannelKind::AmplitudeDamping => vec![
            Mat2::new(r(q.sqrt()), z, z, r(1.0)),
            Mat2::new(z, z, r(p.sqrt()), z),
        ],
        ChannelKind::PhaseDamping => vec![
            Mat2::new(r(1.0), z, z, r(q.sqrt())),
            Mat2::new(z, z, z, r(p.sqrt())),
        ],
        ChannelKind::Depolarizing => {
            let s = r((p / 3.0).sqrt());
            vec![
                Mat2::identity() * r(q.sqrt()),
                linalg::pauli_x() * s,
                linalg::pauli_y() * s,
                linalg::pauli_z() * s,
            ]
        }
    }
}

/// All tensor products K_m ⊗ K_n.
pub fn joint_kraus(spec: &ChannelSpec) -> Result<Vec<Mat4>> {
    let ka = kraus_pq(spec.kind, spec.p_a, spec.q_a());
    let kb = kraus_pq(spec.kind, spec.p_b, spec.q_b());
    let mut out = Vec::with_capacity(ka.len() * kb.len());
    for a in &ka {
        for b in &kb {
            out.push(linalg::kron(a, b));
        }
    }
    Ok(out)
}

/// Σ K ρ K† over the joint Kraus set. The result is re-validated.
pub fn apply_joint(rho: &DensityMatrix4, spec: &ChannelSpec) -> Result<DensityMatrix4> {
    let m = rho.matrix();
    let mut out = Mat4::zeros();
    for k in joint_kraus(spec)? {
        out += k * m * k.adjoint();
    }
    DensityMatrix4::from_matrix(out, &crate::density::Tolerances::default())
}

/// Depolarization coefficients f₀..f₈ for rescaled probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepolCoeffs {
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub f5: f64,
    pub f6: f64,
    pub f7: f64,
    pub f8: f64,
}

pub fn depol_coeffs(p_a: f64, p_b: f64) -> DepolCoeffs {
    let (qa, qb) = (1.0 - p_a, 1.0 - p_b);
    DepolCoeffs {
        f0: (qa - p_a / 3.0) * (qb - p_b / 3.0),
        f1: (1.0 + 2.0 * qa + 2.0 * qb + 4.0 * qa * qb) / 9.0,
        f2: (2.0 * p_b + 4.0 * qa * p_b) / 9.0,
        f3: (2.0 * p_a + 4.0 * p_a * qb) / 9.0,
        f4: 4.0 * p_a * p_b / 9.0,
        f5: qa * qb - qa * p_b / 3.0 + p_a * qb / 3.0 - p_a * p_b / 9.0,
        f6: 2.0 * p_a * qb / 3.0 - 2.0 * p_a * p_b / 9.0,
        f7: qa * qb + qa * p_b / 3.0 - p_a * qb / 3.0 - p_a * p_b / 9.0,
        f8: 2.0 * qa * p_b / 3.0 - 2.0 * p_a * p_b / 9.0,
    }
}

impl DepolCoeffs {
    /// Row-stochastic mixing of the populations.
    pub fn mix_diagonal(&self, d: [f64; 4]) -> [f64; 4] {
        let (f1, f2, f3, f4) = (self.f1, self.f2, self.f3, self.f4);
        [
            f1 * d[0] + f2 * d[1] + f3 * d[2] + f4 * d[3],
            f2 * d[0] + f1 * d[1] + f4 * d[2] + f3 * d[3],
            f3 * d[0] + f4 * d[1] + f1 * d[2] + f2 * d[3],
            f4 * d[0] + f3 * d[1] + f2 * d[2] + f1 * d[3],
        ]
    }
}

/// Closed-form X-state update.
pub fn evolve_x(x: &XState, spec: &ChannelSpec) -> XState {
    let (pa, pb) = (spec.p_a, spec.p_b);
    let (qa, qb) = (spec.q_a(), spec.q_b());
    match spec.kind {
        ChannelKind::AmplitudeDamping => {
            let s = (qa * qb).sqrt();
            XState {
                d11: x.d11 * qa * qb,
                d22: x.d11 * qa * pb + x.d22 * qa,
                d33: x.d11 * pa * qb + x.d33 * qb,
                d44: x.d11 * pa * pb + x.d22 * pa + x.d33 * pb + x.d44,
                c14: x.c14 * s,
                c23: x.c23 * s,
            }
        }
        ChannelKind::PhaseDamping => {
            let s = (qa * qb).sqrt();
            XState {
                c14: x.c14 * s,
                c23: x.c23 * s,
                ..*x
            }
        }
        ChannelKind::Depolarizing => {
            let f = depol_coeffs(pa, pb);
            let d = f.mix_diagonal(x.diagonal());
            XState {
                d11: d[0],
                d22: d[1],
                d33: d[2],
                d44: d[3],
                c14: x.c14 * f.f0,
                c23: x.c23 * f.f0,
            }
        }
    }
}

/// Closed-form O-state update.
pub fn evolve_o(o: &OState, spec: &ChannelSpec) -> OState {
    let (pa, pb) = (spec.p_a, spec.p_b);
    let (sa, sb) = (spec.q_a().sqrt(), spec.q_b().sqrt());
    match spec.kind {
        ChannelKind::AmplitudeDamping => OState {
            c12: o.c12 * (spec.q_a() * sb),
            c13: o.c13 * (spec.q_b() * sa),
            c24: o.c24 * sa + o.c13 * (pb * sa),
            c34: o.c34 * sb + o.c12 * (pa * sb),
        },
        ChannelKind::PhaseDamping => OState {
            c12: o.c12 * sb,
            c13: o.c13 * sa,
            c24: o.c24 * sa,
            c34: o.c34 * sb,
        },
        ChannelKind::Depolarizing => {
            let f = depol_coeffs(pa, pb);
            OState {
                c12: o.c12 * f.f5 + o.c34 * f.f6,
                c13: o.c13 * f.f7 + o.c24 * f.f8,
                c24: o.c13 * f.f8 + o.c24 * f.f7,
                c34: o.c12 * f.f6 + o.c34 * f.f5,
            }
        }
    }
}
