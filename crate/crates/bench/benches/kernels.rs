use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use disent_core::channels::{evolve_x, ChannelKind, DecaySchedule};
use disent_core::concurrence::{wootters, MatrixType};
use disent_core::critical::{critical_set, SliceParams};
use disent_core::density::{random_density, random_x_state, Tolerances};
use disent_core::oracle::{onset_time, OnsetOptions};
use disent_core::sweep::{run_sweep, FigurePreset, SweepConfig};

fn kernels(c: &mut Criterion) {
    let sched = DecaySchedule::new(1.0, 0.5).unwrap();
    let x = random_x_state(7, MatrixType::Phi).unwrap();
    let rho = random_density(7, 4).unwrap();
    let x_rho = x.to_density(&Tolerances::default()).unwrap();

    for kind in ChannelKind::ALL {
        let spec = sched.at_time(kind, 0.4).unwrap();
        c.bench_function(&format!("evolve_x/{kind}"), |b| b.iter(|| evolve_x(black_box(&x), &spec)));
    }
    c.bench_function("wootters", |b| b.iter(|| wootters(black_box(&rho))));

    for kind in ChannelKind::ALL {
        let slice = SliceParams::at_time(kind, MatrixType::Phi, 0.6, (0.05, 0.05), &sched, 0.5, 0.1).unwrap();
        c.bench_function(&format!("critical_set/{kind}"), |b| {
            b.iter(|| critical_set(black_box(&slice)).unwrap())
        });
    }

    c.bench_function("onset_time/depolarizing", |b| {
        b.iter(|| onset_time(black_box(&x_rho), ChannelKind::Depolarizing, &sched, 0.0, &OnsetOptions::default()).unwrap())
    });

    let mut group = c.benchmark_group("run_sweep");
    group.sample_size(10);
    for p in [FigurePreset::Fig2, FigurePreset::Fig7] {
        let cfg = SweepConfig {
            q_steps: 41,
            coord_steps: 41,
            ..p.config()
        };
        group.bench_function(p.name(), |b| b.iter(|| run_sweep(black_box(&cfg)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
