//! Brute-force cross-checks that never use the closed-form boundaries:
//! onset times from dense Kraus evolution, boundaries by bisection over a
//! slice coordinate, CD-free certification on a probability grid and the
//! X-part lower-bound audit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{evolve_x, joint_kraus, ChannelKind, ChannelSpec, DecaySchedule};
use crate::concurrence::{classify, concurrence_x, q_of, q_phi, q_psi, wootters, wootters_signed, MatrixType};
use crate::critical::{CdPhase, PhaseLabel, SliceParams, TdPhase};
use crate::density::{decompose, random_density, DensityMatrix4, XState};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat4};
use crate::roots;

/// Result of an onset search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetResult {
    /// First time the concurrence is at or below the target.
    pub time: Option<f64>,
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnsetOptions {
    /// Defaults to 50/min(γ).
    pub t_max: Option<f64>,
    /// Defaults to 1e-9/min(γ).
    pub time_tol: Option<f64>,
    pub grid: usize,
    /// How far below the target the signed value must fall, on the grid or
    /// in a parabolic dip between grid points, to count. Near rank-deficient
    /// states (the long-time tail) the Wootters value is only accurate to
    /// about √ε, so shallower excursions are noise.
    pub detect: f64,
}

impl Default for OnsetOptions {
    fn default() -> Self {
        OnsetOptions {
            t_max: None,
            time_tol: None,
            grid: 256,
            detect: 1e-8,
        }
    }
}

fn kraus_evolve(m: &Mat4, spec: &ChannelSpec) -> Result<DensityMatrix4> {
    let mut out = Mat4::zeros();
    for k in joint_kraus(spec)? {
        out += k * m * k.adjoint();
    }
    Ok(DensityMatrix4::from_matrix_unchecked(linalg::hermitian_part(&out)))
}

/// Signed Wootters value λ₁ − λ₂ − λ₃ − λ₄ of the state at time t.
pub fn signed_concurrence_at(rho0: &DensityMatrix4, kind: ChannelKind, sched: &DecaySchedule, t: f64) -> Result<f64> {
    let spec = sched.at_time(kind, t)?;
    Ok(wootters_signed(&kraus_evolve(rho0.matrix(), &spec)?))
}

/// Earliest time the concurrence falls to `target` (0 gives the CD time).
pub fn onset_time(
    rho0: &DensityMatrix4,
    kind: ChannelKind,
    sched: &DecaySchedule,
    target: f64,
    opts: &OnsetOptions,
) -> Result<OnsetResult> {
    if !(target >= 0.0 && target < 1.0) {
        return Err(Error::domain(format!("target must lie in [0, 1), got {target}")));
    }
    let g_min = sched.gamma_a.min(sched.gamma_b);
    let t_max = opts.t_max.unwrap_or(50.0 / g_min);
    let tol = opts.time_tol.unwrap_or(1e-9 / g_min);
    if !(t_max > 0.0) || !(tol > 0.0) {
        return Err(Error::domain("t_max and time_tol must be positive"));
    }
    let mut evals = 0usize;
    let mut g = |t: f64| -> Result<f64> {
        evals += 1;
        Ok(signed_concurrence_at(rho0, kind, sched, t)? - target)
    };
    if wootters(rho0) <= target {
        return Ok(OnsetResult {
            time: Some(0.0),
            bracket: (0.0, 0.0),
            evaluations: 1,
        });
    }
    let mut n = opts.grid.max(8);
    for attempt in 0..2 {
        let ts: Vec<f64> = (0..=n).map(|i| t_max * i as f64 / n as f64).collect();
        let mut vals = Vec::with_capacity(ts.len());
        let mut crossing = None;
        for (i, &t) in ts.iter().enumerate() {
            let v = g(t)?;
            vals.push(v);
            if v < -opts.detect {
                crossing = Some(i);
                break;
            }
        }
        let hidden = hidden_dip(&ts, &vals, opts.detect);
        match (crossing, hidden) {
            (Some(i), None) => {
                // last grid point still above the target
                let j = (0..i).rev().find(|&j| vals[j] > 0.0).unwrap_or(0);
                let mut lo = ts[j];
                let mut hi = ts[i];
                while hi - lo > tol {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if g(mid)? > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(OnsetResult {
                    time: Some(hi),
                    bracket: (lo, hi),
                    evaluations: evals,
                });
            }
            (None, None) => {
                return Ok(OnsetResult {
                    time: None,
                    bracket: (0.0, t_max),
                    evaluations: evals,
                })
            }
            (_, Some(near)) => {
                if attempt == 1 {
                    return Err(Error::BracketFailure { near });
                }
                n *= 4;
            }
        }
    }
    unreachable!("second attempt always returns")
}

/// A grid minimum whose parabolic interpolant dips below −detect before the
/// first detected crossing.
fn hidden_dip(ts: &[f64], vals: &[f64], detect: f64) -> Option<f64> {
    for i in 1..vals.len().saturating_sub(1) {
        let (a, b, c) = (vals[i - 1], vals[i], vals[i + 1]);
        if b < -detect || c < -detect {
            break;
        }
        if b < a && b <= c {
            let curv = a - 2.0 * b + c;
            if curv > 0.0 {
                let h = ts[i] - ts[i - 1];
                let shift = 0.5 * (a - c) / curv;
                let vmin = b - 0.25 * (a - c) * shift;
                if vmin < -detect {
                    return Some(ts[i] + shift * h);
                }
            }
        }
    }
    None
}

/// Q of the slice state at `coord`, evolved to the slice's τ by the X-form
/// update rules.
pub fn slice_q_at(slice: &SliceParams, coord: f64) -> Result<f64> {
    let spec = ChannelSpec::new(slice.channel, slice.p_a, slice.p_b)?;
    Ok(q_of(slice.mtype, &evolve_x(&slice.state_at(coord), &spec)))
}

/// Coordinate on [lo, hi] where the evolved Q equals `target`.
pub fn boundary_bisect(slice: &SliceParams, target: f64, lo: f64, hi: f64, coord_tol: f64) -> Result<f64> {
    let spec = ChannelSpec::new(slice.channel, slice.p_a, slice.p_b)?;
    let f = |c: f64| q_of(slice.mtype, &evolve_x(&slice.state_at(c), &spec)) - target;
    roots::bisect(f, lo, hi, coord_tol)
}

/// First coordinate on [lo, hi] where the evolved Q crosses `target`,
/// scanning `n` steps before bisecting.
pub fn boundary_scan(slice: &SliceParams, target: f64, lo: f64, hi: f64, n: usize, coord_tol: f64) -> Result<f64> {
    let spec = ChannelSpec::new(slice.channel, slice.p_a, slice.p_b)?;
    let f = |c: f64| q_of(slice.mtype, &evolve_x(&slice.state_at(c), &spec)) - target;
    roots::first_crossing(f, lo, hi, n, coord_tol)
}

/// Every coordinate on [lo, hi] where the evolved Q crosses `target`, one
/// per sign change on an `n`-step scan.
pub fn boundary_roots(slice: &SliceParams, target: f64, lo: f64, hi: f64, n: usize, coord_tol: f64) -> Result<Vec<f64>> {
    let spec = ChannelSpec::new(slice.channel, slice.p_a, slice.p_b)?;
    let f = |c: f64| q_of(slice.mtype, &evolve_x(&slice.state_at(c), &spec)) - target;
    let n = n.max(1);
    let at = |i: usize| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 };
    let mut out = Vec::new();
    let (mut x0, mut f0) = (lo, f(lo));
    if f0 == 0.0 {
        out.push(lo);
    }
    for i in 1..=n {
        let x1 = at(i);
        let f1 = f(x1);
        if f1 == 0.0 {
            out.push(x1);
        } else if f0 != 0.0 && f0.signum() != f1.signum() {
            out.push(roots::bisect(&f, x0, x1, coord_tol)?);
        }
        (x0, f0) = (x1, f1);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdFreeScan {
    pub cd_free: bool,
    pub already_separable: bool,
    /// Smallest Q/√(q_a q_b) seen on the grid.
    pub min_value: f64,
    pub argmin: (f64, f64),
}

/// Largest probability used for the p = 1 edge of the scan grid.
pub const EDGE_P: f64 = 1.0 - 1e-9;

/// Checks whether the state at `coord` keeps Q ≥ 0 for every (p_a, p_b) on
/// a `grid_n × grid_n` grid over [0, 1]².
///
/// Q is divided by √(q_a q_b), which does not change its sign but keeps the
/// amplitude-damping values from vanishing near p = 1.
pub fn cd_free_scan<F: Fn(f64) -> XState>(builder: F, coord: f64, kind: ChannelKind, grid_n: usize) -> Result<CdFreeScan> {
    if kind == ChannelKind::Depolarizing {
        return Err(Error::domain("CD-free scan covers amplitude and phase damping"));
    }
    let x = builder(coord);
    let mtype = classify(&x);
    if mtype == MatrixType::Separable {
        return Ok(CdFreeScan {
            cd_free: false,
            already_separable: true,
            min_value: q_phi(&x).max(q_psi(&x)),
            argmin: (0.0, 0.0),
        });
    }
    let n = grid_n.max(2);
    let p_at = |i: usize| {
        if i == n - 1 {
            EDGE_P
        } else {
            i as f64 / (n - 1) as f64
        }
    };
    let mut min_value = f64::INFINITY;
    let mut argmin = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let (pa, pb) = (p_at(i), p_at(j));
            let spec = ChannelSpec::new(kind, pa, pb)?;
            let s = ((1.0 - pa) * (1.0 - pb)).sqrt();
            let v = q_of(mtype, &evolve_x(&x, &spec)) / s;
            if v < min_value {
                min_value = v;
                argmin = (pa, pb);
            }
        }
    }
    Ok(CdFreeScan {
        cd_free: min_value >= -1e-12,
        already_separable: false,
        min_value,
        argmin,
    })
}

/// Labels a state from its own evolution at τ rather than from slice
/// boundaries: CD-free from the probability-grid scan, the other phases
/// from the signs of Q(τ) and C(τ) − C_tv.
pub fn label_by_evolution(x: &XState, spec: &ChannelSpec, c_tv: f64) -> Result<PhaseLabel> {
    let mtype = classify(x);
    if mtype == MatrixType::Separable {
        return Err(Error::SeparableInput {
            q_phi: q_phi(x),
            q_psi: q_psi(x),
        });
    }
    let free = match spec.kind {
        ChannelKind::Depolarizing => false,
        kind => cd_free_scan(|_| *x, 0.0, kind, 101)?.cd_free,
    };
    let xt = evolve_x(x, spec);
    let cd = if free {
        CdPhase::Free
    } else if q_phi(&xt).max(q_psi(&xt)) >= 0.0 {
        CdPhase::Tolerable
    } else {
        CdPhase::NoGo
    };
    let td = if concurrence_x(&xt) >= c_tv {
        TdPhase::Tolerable
    } else {
        TdPhase::NoGo
    };
    Ok(PhaseLabel {
        cd,
        td,
        optimal_robust: cd != CdPhase::NoGo && td == TdPhase::Tolerable,
        physical: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditViolation {
    pub index: u64,
    pub kind: ChannelKind,
    pub p_a: f64,
    pub p_b: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub samples: u64,
    pub evaluations: u64,
    pub violations: Vec<AuditViolation>,
    pub min_margin: f64,
    pub seed: u64,
}

/// Margin C[ρ(t)] − C[X(t)] for one state and channel.
pub fn lower_bound_margin(rho: &DensityMatrix4, spec: &ChannelSpec) -> Result<f64> {
    let full = wootters(&kraus_evolve(rho.matrix(), spec)?);
    let x = decompose(rho).0;
    Ok(full - concurrence_x(&evolve_x(&x, spec)))
}

fn audit_sample(seed: u64, index: u64) -> Result<Vec<(ChannelSpec, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let rank = rng.random_range(1..=4usize);
    let rho = random_density(rng.random(), rank)?;
    let sched = DecaySchedule::new(rng.random_range(0.1..3.0), rng.random_range(0.1..3.0))?;
    ChannelKind::ALL
        .iter()
        .map(|&kind| {
            let spec = sched.at_time(kind, rng.random_range(0.0..4.0))?;
            Ok((spec, lower_bound_margin(&rho, &spec)?))
        })
        .collect()
}

/// Samples random generic states, runs each through all three channels at
/// random times and checks that the X part never overstates the
/// concurrence of the full evolved state.
pub fn lower_bound_audit(n_samples: u64, seed: u64) -> Result<AuditReport> {
    let per_state: Vec<Vec<(ChannelSpec, f64)>> = (0..n_samples)
        .into_par_iter()
        .map(|i| audit_sample(seed, i))
        .collect::<Result<_>>()?;
    let mut min_margin = f64::INFINITY;
    let mut violations = Vec::new();
    for (index, runs) in per_state.iter().enumerate() {
        for &(spec, margin) in runs {
            min_margin = min_margin.min(margin);
            if margin < -1e-9 {
                violations.push(AuditViolation {
                    index: index as u64,
                    kind: spec.kind,
                    p_a: spec.p_a,
                    p_b: spec.p_b,
                    margin,
                });
            }
        }
    }
    Ok(AuditReport {
        samples: n_samples,
        evaluations: n_samples * ChannelKind::ALL.len() as u64,
        violations,
        min_margin,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::{ad_cd_time_symmetric, ad_phi_cd_free, pd_cd_time};
    use crate::density::{recompose, werner_state, OState, Tolerances};
    use crate::linalg::C;

    fn fine() -> OnsetOptions {
        OnsetOptions {
            time_tol: Some(1e-12),
            ..OnsetOptions::default()
        }
    }

    #[test]
    fn bell_never_disentangles_under_amplitude_damping() {
        let sched = DecaySchedule::new(1.0, 1.0).unwrap();
        let r = onset_time(&DensityMatrix4::bell_phi_plus(), ChannelKind::AmplitudeDamping, &sched, 0.0, &fine()).unwrap();
        assert_eq!(r.time, None);
    }

    #[test]
    fn separable_start_is_immediate() {
        let sched = DecaySchedule::new(1.0, 1.0).unwrap();
        let r = onset_time(&DensityMatrix4::maximally_mixed(), ChannelKind::PhaseDamping, &sched, 0.0, &fine()).unwrap();
        assert_eq!(r.time, Some(0.0));
    }

    #[test]
    fn werner_matches_closed_forms() {
        let w = werner_state(0.5).unwrap();
        let rho = w.to_density(&Tolerances::default()).unwrap();
        let sched = DecaySchedule::new(0.7, 0.7).unwrap();
        let pd = onset_time(&rho, ChannelKind::PhaseDamping, &sched, 0.0, &fine()).unwrap();
        let t_pd = pd_cd_time(&w, &sched).unwrap().unwrap();
        assert!((pd.time.unwrap() - t_pd).abs() < 1e-9 * t_pd);
        let ad = onset_time(&rho, ChannelKind::AmplitudeDamping, &sched, 0.0, &fine()).unwrap();
        let t_ad = ad_cd_time_symmetric(&w, 0.7).unwrap().unwrap();
        assert!((ad.time.unwrap() - t_ad).abs() < 1e-9 * t_ad);
        let (lo, hi) = ad.bracket;
        assert!(hi - lo <= 1e-12);
    }

    #[test]
    fn onset_is_monotone_in_target() {
        let rho = werner_state(0.8).unwrap().to_density(&Tolerances::default()).unwrap();
        let sched = DecaySchedule::new(1.0, 0.4).unwrap();
        for kind in [ChannelKind::AmplitudeDamping, ChannelKind::PhaseDamping] {
            let t0 = onset_time(&rho, kind, &sched, 0.0, &fine()).unwrap().time.unwrap();
            let t1 = onset_time(&rho, kind, &sched, 0.1, &fine()).unwrap().time.unwrap();
            assert!(t1 <= t0);
            let again = onset_time(&rho, kind, &sched, 0.1, &fine()).unwrap();
            assert_eq!(again.time, Some(t1));
        }
    }

    #[test]
    fn hidden_dip_detects_parabola_below_zero() {
        let ts: Vec<f64> = (0..5).map(|i| i as f64).collect();
        // samples of (t − 2)² − 0.01 at the grid are all positive except the vertex
        let vals = [1.0, 0.2, 0.05, 0.2, 1.0];
        assert!(hidden_dip(&ts, &vals, 1e-8).is_none());
        let vals = [1.0, 0.01, 0.01, 1.0, 2.0];
        assert!(hidden_dip(&ts, &vals, 1e-8).is_some());
        // round-off sized wiggles in the tail
        let vals = [8e-11, 1e-11, 6e-11, 5e-11, 0.0];
        assert!(hidden_dip(&ts, &vals, 1e-8).is_none());
    }

    #[test]
    fn boundary_bisect_errors_without_sign_change() {
        let slice = SliceParams::new(
            ChannelKind::AmplitudeDamping,
            MatrixType::Phi,
            1.0,
            (0.0, 0.0),
            0.5,
            0.5,
            0.0,
        )
        .unwrap();
        assert!(matches!(
            boundary_bisect(&slice, 0.0, 0.4, 0.5, 1e-12),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn cd_free_scan_examples() {
        let bell = |_c: f64| XState::bell_phi_plus();
        let r = cd_free_scan(bell, 0.0, ChannelKind::AmplitudeDamping, 51).unwrap();
        assert!(r.cd_free && !r.already_separable);
        let mixed = |_c: f64| XState::maximally_mixed();
        let r = cd_free_scan(mixed, 0.0, ChannelKind::AmplitudeDamping, 11).unwrap();
        assert!(!r.cd_free && r.already_separable);

        let (q, d22, d33) = (0.4, 0.05, 0.05);
        let slice = SliceParams::new(ChannelKind::AmplitudeDamping, MatrixType::Phi, q, (d22, d33), 0.5, 0.5, 0.0).unwrap();
        let df = ad_phi_cd_free(q, d22, d33);
        let at = |c: f64| slice.state_at(c);
        assert!(cd_free_scan(at, df - 1e-4, ChannelKind::AmplitudeDamping, 101).unwrap().cd_free);
        assert!(!cd_free_scan(at, df + 1e-4, ChannelKind::AmplitudeDamping, 101).unwrap().cd_free);
    }

    #[test]
    fn evolution_label_matches_slice_label() {
        use crate::critical::{classify_point, locate};
        let sched = DecaySchedule::new(1.0, 1.0).unwrap();
        for w in [0.5, 0.7, 0.9, 1.0] {
            let x = werner_state(w).unwrap();
            for kind in ChannelKind::ALL {
                let spec = sched.at_time(kind, 0.4).unwrap();
                let loc = locate(&x, kind, spec.p_a, spec.p_b, 0.1).unwrap();
                assert!(loc.conforms);
                let a = classify_point(&loc.slice, loc.coord).unwrap();
                let b = label_by_evolution(&x, &spec, 0.1).unwrap();
                assert_eq!((a.cd, a.td), (b.cd, b.td), "w={w} {kind}");
            }
        }
        let spec = sched.at_time(ChannelKind::PhaseDamping, 0.4).unwrap();
        assert!(matches!(
            label_by_evolution(&werner_state(0.3).unwrap(), &spec, 0.1),
            Err(Error::SeparableInput { .. })
        ));
    }

    #[test]
    fn audit_examples() {
        let report = lower_bound_audit(300, 7).unwrap();
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert_eq!(report, lower_bound_audit(300, 7).unwrap());

        let x = werner_state(0.6).unwrap();
        let rho = recompose(&x, &OState::zero(), &Tolerances::default()).unwrap();
        for kind in ChannelKind::ALL {
            let spec = ChannelSpec::new(kind, 0.3, 0.5).unwrap();
            assert!(lower_bound_margin(&rho, &spec).unwrap().abs() < 1e-10);
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let prod = DensityMatrix4::product([C::new(h, 0.0), C::new(h, 0.0)], [C::new(1.0, 0.0), C::new(0.0, 0.0)]).unwrap();
        let spec = ChannelSpec::new(ChannelKind::Depolarizing, 0.2, 0.4).unwrap();
        assert!(lower_bound_margin(&prod, &spec).unwrap().abs() < 1e-10);
    }
}
