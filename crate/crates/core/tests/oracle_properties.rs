use disent_core::channels::{ChannelKind, DecaySchedule};
use disent_core::concurrence::{q_of, MatrixType};
use disent_core::critical::{classify_point, physical_bounds, CdPhase, SliceParams, TdPhase};
use disent_core::density::{random_x_state, Tolerances};
use disent_core::oracle::{onset_time, slice_q_at, OnsetOptions};
use proptest::prelude::*;

fn opts() -> OnsetOptions {
    OnsetOptions {
        time_tol: Some(1e-12),
        ..OnsetOptions::default()
    }
}

fn kind_strategy() -> impl Strategy<Value = ChannelKind> {
    prop::sample::select(ChannelKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn threshold_onset_precedes_cd_onset(
        seed in any::<u64>(),
        phi in any::<bool>(),
        kind in kind_strategy(),
        ga in 0.2f64..3.0,
        gb in 0.2f64..3.0,
        c_tv in 0.01f64..0.5,
    ) {
        let mtype = if phi { MatrixType::Phi } else { MatrixType::Psi };
        let rho = random_x_state(seed, mtype).unwrap().to_density(&Tolerances::default()).unwrap();
        let sched = DecaySchedule::new(ga, gb).unwrap();
        let t0 = onset_time(&rho, kind, &sched, 0.0, &opts()).unwrap();
        let tv = onset_time(&rho, kind, &sched, c_tv, &opts()).unwrap();
        match (tv.time, t0.time) {
            (Some(a), Some(b)) => prop_assert!(a <= b + 1e-12),
            (_, None) => {}
            (None, Some(_)) => prop_assert!(false, "threshold never reached but CD occurs"),
        }
        let again = onset_time(&rho, kind, &sched, c_tv, &opts()).unwrap();
        prop_assert_eq!(again, tv);
    }

    #[test]
    fn labels_agree_with_oracle_onsets(
        kind in kind_strategy(),
        phi in any::<bool>(),
        a in 0.0f64..0.2,
        b in 0.0f64..0.2,
        qf in 0.05f64..0.95,
        u in 0.0f64..1.0,
        tau in 0.05f64..1.5,
        asym in any::<bool>(),
        c_tv in 0.01f64..0.3,
    ) {
        let mtype = if phi { MatrixType::Phi } else { MatrixType::Psi };
        let sched = if asym { DecaySchedule::new(5.0, 1.0).unwrap() } else { DecaySchedule::new(1.0, 1.0).unwrap() };
        let probe = SliceParams::at_time(kind, mtype, 0.0, (a, b), &sched, tau, c_tv).unwrap();
        let q_max = match (kind, mtype) {
            (ChannelKind::PhaseDamping, MatrixType::Phi) => 1.0,
            (ChannelKind::PhaseDamping, _) => 1.0 - a,
            (_, MatrixType::Phi) => disent_core::critical::ad_phi_q_max(a, b),
            _ => 1.0 - 2.0 * (a * b).sqrt(),
        };
        let slice = SliceParams { q: qf * q_max, ..probe };
        let (lo, hi) = physical_bounds(&slice).unwrap();
        let coord = lo + u * (hi - lo);
        // fixed-element Ψ slices are trace-normalized only on part of the line
        let Ok(rho) = slice.state_at(coord).to_density(&Tolerances::uniform(1e-9)) else {
            return Ok(());
        };
        prop_assume!(q_of(mtype, &slice.state_at(coord)) > 1e-9);
        let q_tau = slice_q_at(&slice, coord).unwrap();
        prop_assume!(q_tau.abs() > 1e-7 && (q_tau - c_tv).abs() > 1e-7);
        let label = classify_point(&slice, coord).unwrap();
        let t_cd = onset_time(&rho, kind, &sched, 0.0, &opts()).unwrap().time;
        let t_tv = onset_time(&rho, kind, &sched, c_tv, &opts()).unwrap().time;
        let cd_safe = t_cd.is_none_or(|t| t >= tau);
        let td_safe = t_tv.is_none_or(|t| t >= tau);
        prop_assert_eq!(label.cd != CdPhase::NoGo, cd_safe, "{:?} t_cd={:?}", label, t_cd);
        prop_assert_eq!(label.td == TdPhase::Tolerable, td_safe, "{:?} t_tv={:?}", label, t_tv);
        if label.cd == CdPhase::Free {
            prop_assert!(t_cd.is_none());
        }
    }
}
