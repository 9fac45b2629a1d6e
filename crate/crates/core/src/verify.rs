//! Self-verification suite: each check compares the closed forms with an
//! independent route (Kraus sums, Wootters, bisection, grid scans) on
//! seeded random samples and reports the worst error seen.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{apply_joint, evolve_o, evolve_x, ChannelKind, ChannelSpec, DecaySchedule};
use crate::concurrence::{concurrence_x, q_phi, wootters, MatrixType};
use crate::critical::{
    ad_cd_time_symmetric, ad_phi_cd_free, ad_phi_cd_tol, ad_phi_q_max, ad_psi_cd_free_fixed, ad_psi_cd_tol,
    classify_point, critical_set, pd_cd_time, physical_bounds, CdPhase, CriticalSet, SliceParams, TdPhase,
};
use crate::density::{decompose, random_density, random_x_state, recompose, werner_state, OState, Tolerances, XState};
use crate::error::{Error, Result};
use crate::oracle::{self, OnsetOptions};
use crate::sweep::{run_sweep, FigurePreset, SweepConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    EvolutionKraus,
    ConcurrenceOracle,
    BoundarySelfConsistency,
    BoundaryOracle,
    AmplitudeIdentities,
    CdFreeCertification,
    DepolarizationLimit,
    LowerBoundAudit,
    CdTimeOracle,
    FigureRegression,
    CounterIntuitiveWitness,
}

impl Criterion {
    pub const ALL: [Criterion; 11] = [
        Criterion::EvolutionKraus,
        Criterion::ConcurrenceOracle,
        Criterion::BoundarySelfConsistency,
        Criterion::BoundaryOracle,
        Criterion::AmplitudeIdentities,
        Criterion::CdFreeCertification,
        Criterion::DepolarizationLimit,
        Criterion::LowerBoundAudit,
        Criterion::CdTimeOracle,
        Criterion::FigureRegression,
        Criterion::CounterIntuitiveWitness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::EvolutionKraus => "evolution-kraus",
            Criterion::ConcurrenceOracle => "concurrence-oracle",
            Criterion::BoundarySelfConsistency => "boundary-self-consistency",
            Criterion::BoundaryOracle => "boundary-oracle",
            Criterion::AmplitudeIdentities => "amplitude-identities",
            Criterion::CdFreeCertification => "cd-free-certification",
            Criterion::DepolarizationLimit => "depolarization-limit",
            Criterion::LowerBoundAudit => "lower-bound-audit",
            Criterion::CdTimeOracle => "cd-time-oracle",
            Criterion::FigureRegression => "figure-regression",
            Criterion::CounterIntuitiveWitness => "counter-intuitive-witness",
        }
    }

    /// Default sample count.
    pub fn default_n(self) -> usize {
        match self {
            Criterion::EvolutionKraus
            | Criterion::ConcurrenceOracle
            | Criterion::DepolarizationLimit
            | Criterion::LowerBoundAudit => 1000,
            Criterion::BoundarySelfConsistency | Criterion::BoundaryOracle | Criterion::CdTimeOracle => 200,
            Criterion::AmplitudeIdentities => 500,
            Criterion::CdFreeCertification => 50,
            Criterion::FigureRegression => 201,
            Criterion::CounterIntuitiveWitness => 1,
        }
    }

    fn stream(self) -> u64 {
        Criterion::ALL.iter().position(|c| *c == self).unwrap() as u64
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown check '{s}'")))
    }
}

/// One measured quantity of a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub samples: usize,
    pub seconds: f64,
    pub parts: Vec<Part>,
    pub notes: Vec<String>,
}

impl CheckResult {
    pub fn summary(&self) -> String {
        let parts: Vec<String> = self
            .parts
            .iter()
            .map(|p| format!("{}={:.3e}/{:.1e}{}", p.name, p.value, p.tolerance, if p.passed { "" } else { "!" }))
            .collect();
        format!(
            "{} {} (n={}, {:.2}s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.seconds,
            parts.join(" ")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub n: Option<usize>,
    pub tol_scale: f64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Overrides every check's sample count (grid size for the figures).
    pub n: Option<usize>,
    /// Multiplies every numerical tolerance. Counts and timings are not scaled.
    pub tol_scale: f64,
    /// Wall-clock budgets are enforced when set.
    pub enforce_runtime: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 2024,
            n: None,
            tol_scale: 1.0,
            enforce_runtime: false,
        }
    }
}

struct Ctx {
    rng: ChaCha8Rng,
    n: usize,
    scale: f64,
    enforce_runtime: bool,
    parts: Vec<Part>,
    notes: Vec<String>,
}

impl Ctx {
    /// Numerical part: passes when value ≤ tol·scale.
    fn num(&mut self, name: &str, value: f64, tol: f64) {
        let tolerance = tol * self.scale;
        self.parts.push(Part {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        });
    }

    /// Count of failures: passes when zero.
    fn count(&mut self, name: &str, failures: usize) {
        self.parts.push(Part {
            name: name.into(),
            value: failures as f64,
            tolerance: 0.0,
            passed: failures == 0,
        });
    }

    fn holds(&mut self, name: &str, ok: bool) {
        self.count(name, usize::from(!ok));
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

/// Runs the selected checks. `n = Some(0)` yields an empty passing report.
pub fn run(criteria: &[Criterion], opts: &VerifyOptions) -> Result<Report> {
    let mut checks = Vec::new();
    if opts.n != Some(0) {
        for &c in criteria {
            checks.push(run_one(c, opts)?);
        }
    }
    Ok(Report {
        seed: opts.seed,
        n: opts.n,
        tol_scale: opts.tol_scale,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

pub fn run_one(c: Criterion, opts: &VerifyOptions) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(c.stream());
    let mut ctx = Ctx {
        rng,
        n: opts.n.unwrap_or(c.default_n()),
        scale: opts.tol_scale,
        enforce_runtime: opts.enforce_runtime,
        parts: Vec::new(),
        notes: Vec::new(),
    };
    let start = Instant::now();
    match c {
        Criterion::EvolutionKraus => evolution_kraus(&mut ctx)?,
        Criterion::ConcurrenceOracle => concurrence_oracle(&mut ctx)?,
        Criterion::BoundarySelfConsistency => boundary_self_consistency(&mut ctx)?,
        Criterion::BoundaryOracle => boundary_oracle(&mut ctx)?,
        Criterion::AmplitudeIdentities => amplitude_identities(&mut ctx)?,
        Criterion::CdFreeCertification => cd_free_certification(&mut ctx)?,
        Criterion::DepolarizationLimit => depolarization_limit(&mut ctx)?,
        Criterion::LowerBoundAudit => lower_bound_audit(&mut ctx, opts.seed)?,
        Criterion::CdTimeOracle => cd_time_oracle(&mut ctx)?,
        Criterion::FigureRegression => figure_regression(&mut ctx)?,
        Criterion::CounterIntuitiveWitness => counter_intuitive_witness(&mut ctx)?,
    }
    let seconds = start.elapsed().as_secs_f64();
    if let Some(budget) = runtime_budget(c) {
        if ctx.enforce_runtime {
            ctx.parts.push(Part {
                name: "seconds".into(),
                value: seconds,
                tolerance: budget,
                passed: seconds < budget,
            });
        }
    }
    Ok(CheckResult {
        name: c.name().into(),
        passed: ctx.parts.iter().all(|p| p.passed),
        samples: ctx.n,
        seconds,
        parts: ctx.parts,
        notes: ctx.notes,
    })
}

fn runtime_budget(c: Criterion) -> Option<f64> {
    match c {
        Criterion::EvolutionKraus => Some(5.0),
        Criterion::BoundaryOracle => Some(60.0),
        Criterion::FigureRegression => Some(120.0),
        _ => None,
    }
}

fn random_kind<R: Rng>(rng: &mut R) -> ChannelKind {
    ChannelKind::ALL[rng.random_range(0..3usize)]
}

/// A random generic state of random rank.
fn random_rho<R: Rng>(rng: &mut R) -> Result<crate::density::DensityMatrix4> {
    random_density(rng.random(), rng.random_range(1..=4usize))
}

/// A random X state: either sampled directly or cut from a generic state.
fn random_x<R: Rng>(rng: &mut R) -> Result<XState> {
    match rng.random_range(0..3u8) {
        0 => random_x_state(rng.random(), MatrixType::Phi),
        1 => random_x_state(rng.random(), MatrixType::Psi),
        _ => Ok(decompose(&random_rho(rng)?).0),
    }
}

fn evolution_kraus(ctx: &mut Ctx) -> Result<()> {
    let mut worst = 0.0f64;
    for _ in 0..ctx.n {
        let rho = random_rho(&mut ctx.rng)?;
        let spec = ChannelSpec::new(random_kind(&mut ctx.rng), ctx.rng.random(), ctx.rng.random())?;
        let (x, o) = decompose(&rho);
        let (xk, ok) = decompose(&apply_joint(&rho, &spec)?);
        worst = worst.max(evolve_x(&x, &spec).max_abs_diff(&xk));
        worst = worst.max(evolve_o(&o, &spec).max_abs_diff(&ok));
    }
    ctx.num("max_elem_diff", worst, 1e-12);
    Ok(())
}

fn concurrence_oracle(ctx: &mut Ctx) -> Result<()> {
    let tol = Tolerances::default();
    let mut worst = 0.0f64;
    for _ in 0..ctx.n {
        let x = random_x(&mut ctx.rng)?;
        worst = worst.max((concurrence_x(&x) - wootters(&x.to_density(&tol)?)).abs());
    }
    ctx.num("x_vs_wootters", worst, 1e-10);
    let mut werner = 0.0f64;
    for i in 0..=100 {
        let w = i as f64 / 100.0;
        let x = werner_state(w)?;
        let exact = (1.5 * w - 0.5).max(0.0);
        werner = werner.max((concurrence_x(&x) - exact).abs());
        werner = werner.max((wootters(&x.to_density(&tol)?) - exact).abs());
    }
    ctx.num("werner", werner, 1e-12);
    Ok(())
}

/// A random slice at a random protection time. Half of the draws use
/// γ_a = 5γ_b.
pub fn random_slice<R: Rng>(rng: &mut R, channel: ChannelKind, mtype: MatrixType) -> Result<SliceParams> {
    let (a, b) = (rng.random_range(0.0..0.2), rng.random_range(0.0..0.2));
    let q_max = match (channel, mtype) {
        (ChannelKind::PhaseDamping, MatrixType::Phi) => 1.0,
        (ChannelKind::PhaseDamping, _) => 1.0 - a,
        (_, MatrixType::Phi) => ad_phi_q_max(a, b),
        _ => 1.0 - 2.0 * f64::sqrt(a * b),
    };
    let q = rng.random_range(0.02..0.98) * q_max;
    let sched = if rng.random::<bool>() {
        DecaySchedule::new(5.0, 1.0)?
    } else {
        DecaySchedule::new(1.0, 1.0)?
    };
    let tau = rng.random_range(0.02..1.5);
    let c_tv = rng.random_range(0.01..0.3);
    SliceParams::at_time(channel, mtype, q, (a, b), &sched, tau, c_tv)
}

const SLICE_FAMILIES: [(ChannelKind, MatrixType); 6] = [
    (ChannelKind::AmplitudeDamping, MatrixType::Phi),
    (ChannelKind::AmplitudeDamping, MatrixType::Psi),
    (ChannelKind::PhaseDamping, MatrixType::Phi),
    (ChannelKind::PhaseDamping, MatrixType::Psi),
    (ChannelKind::Depolarizing, MatrixType::Phi),
    (ChannelKind::Depolarizing, MatrixType::Psi),
];

fn boundaries(set: &CriticalSet, c_tv: f64) -> [(Option<f64>, f64); 4] {
    let raw = |t: Option<crate::critical::Threshold>| t.map(|t| t.raw).filter(|r| r.is_finite());
    [
        (raw(set.cd_tol), 0.0),
        (raw(set.cd_tol_upper), 0.0),
        (raw(set.td_tol), c_tv),
        (raw(set.td_tol_upper), c_tv),
    ]
}

fn boundary_self_consistency(ctx: &mut Ctx) -> Result<()> {
    let (mut cd_err, mut td_err, mut hits) = (0.0f64, 0.0f64, 0usize);
    for (channel, mtype) in SLICE_FAMILIES {
        for _ in 0..ctx.n {
            let slice = random_slice(&mut ctx.rng, channel, mtype)?;
            let set = critical_set(&slice)?;
            for (k, (b, target)) in boundaries(&set, slice.c_tv).into_iter().enumerate() {
                if let Some(r) = b {
                    let e = (oracle::slice_q_at(&slice, r)? - target).abs();
                    hits += 1;
                    if k < 2 {
                        cd_err = cd_err.max(e);
                    } else {
                        td_err = td_err.max(e);
                    }
                }
            }
        }
    }
    ctx.num("q_at_cd_tol", cd_err, 1e-9);
    ctx.num("q_at_td_tol_minus_ctv", td_err, 1e-9);
    ctx.note(format!("{hits} finite boundaries evaluated"));
    Ok(())
}

fn boundary_oracle(ctx: &mut Ctx) -> Result<()> {
    let (mut worst, mut unmatched, mut compared) = (0.0f64, 0usize, 0usize);
    for (channel, mtype) in SLICE_FAMILIES {
        for _ in 0..ctx.n {
            let slice = random_slice(&mut ctx.rng, channel, mtype)?;
            let set = critical_set(&slice)?;
            let (lo, hi) = (set.phys_lo, set.phys_hi);
            let inside = |r: f64| r > lo + 1e-9 && r < hi - 1e-9;
            for target in [0.0, slice.c_tv] {
                let closed: Vec<f64> = boundaries(&set, slice.c_tv)
                    .into_iter()
                    .filter(|(_, t)| *t == target)
                    .filter_map(|(b, _)| b)
                    .filter(|r| inside(*r))
                    .collect();
                let found: Vec<f64> = oracle::boundary_roots(&slice, target, lo, hi, 512, 1e-13)?
                    .into_iter()
                    .filter(|r| inside(*r))
                    .collect();
                let nearest = |x: f64, ys: &[f64]| ys.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min);
                for &r in &closed {
                    let d = nearest(r, &found);
                    compared += 1;
                    if d.is_finite() {
                        worst = worst.max(d);
                    } else {
                        unmatched += 1;
                    }
                }
                unmatched += found.iter().filter(|&&r| nearest(r, &closed) > 1e-6).count();
            }
        }
    }
    ctx.num("max_coord_diff", worst, 1e-6);
    ctx.count("unmatched_boundaries", unmatched);
    ctx.note(format!("{compared} closed-form boundaries compared"));
    Ok(())
}

fn amplitude_identities(ctx: &mut Ctx) -> Result<()> {
    let (mut phi, mut psi) = (0.0f64, 0.0f64);
    for _ in 0..ctx.n {
        let (d22, d33) = (ctx.rng.random_range(0.0..0.25), ctx.rng.random_range(0.0..0.25));
        let q = ctx.rng.random_range(0.0..1.0) * ad_phi_q_max(d22, d33);
        phi = phi.max((ad_phi_cd_tol(q, d22, d33, 1.0, 1.0)? - ad_phi_cd_free(q, d22, d33)).abs());
        let (d11, d44): (f64, f64) = (ctx.rng.random_range(0.01..0.25), ctx.rng.random_range(0.0..0.25));
        let q = ctx.rng.random_range(0.0..1.0) * (1.0 - 2.0 * (d11 * d44).sqrt());
        psi = psi.max((ad_psi_cd_tol(q, d11, d44, 1.0, 1.0)? - ad_psi_cd_free_fixed(q, d11, d44)).abs());
    }
    ctx.num("phi_tol_at_full_decay_vs_free", phi, 1e-12);
    ctx.num("psi_tol_at_full_decay_vs_free", psi, 1e-12);
    let mut collapse = 0.0f64;
    for (channel, mtype) in SLICE_FAMILIES {
        for _ in 0..ctx.n {
            let slice = SliceParams {
                c_tv: 0.0,
                ..random_slice(&mut ctx.rng, channel, mtype)?
            };
            let set = critical_set(&slice)?;
            for (cd, td) in [(set.cd_tol, set.td_tol), (set.cd_tol_upper, set.td_tol_upper)] {
                match (cd, td) {
                    (None, None) => {}
                    (Some(a), Some(b)) if a.raw == b.raw => {}
                    (Some(a), Some(b)) => collapse = collapse.max((a.raw - b.raw).abs()),
                    _ => collapse = f64::INFINITY,
                }
            }
        }
    }
    ctx.num("td_minus_cd_at_zero_shift", collapse, 1e-12);
    Ok(())
}

fn cd_free_certification(ctx: &mut Ctx) -> Result<()> {
    let (mut below_fail, mut above_fail, mut worst_below) = (0usize, 0usize, f64::INFINITY);
    let mut done = 0;
    let mut attempts = 0;
    while done < ctx.n {
        attempts += 1;
        if attempts > 100 * ctx.n {
            return Err(Error::Numerical("could not sample CD-free slices".into()));
        }
        let (d22, d33) = (ctx.rng.random_range(0.0..0.15), ctx.rng.random_range(0.0..0.15));
        let q = ctx.rng.random_range(0.05..0.95) * ad_phi_q_max(d22, d33);
        let slice = SliceParams::new(ChannelKind::AmplitudeDamping, MatrixType::Phi, q, (d22, d33), 0.5, 0.5, 0.0)?;
        let (lo, hi) = physical_bounds(&slice)?;
        let df = ad_phi_cd_free(q, d22, d33);
        if !(df - 1e-4 > lo && df + 1e-4 < hi) {
            continue;
        }
        done += 1;
        let at = |c: f64| slice.state_at(c);
        let below = oracle::cd_free_scan(at, df - 1e-4, ChannelKind::AmplitudeDamping, 101)?;
        let above = oracle::cd_free_scan(at, df + 1e-4, ChannelKind::AmplitudeDamping, 101)?;
        worst_below = worst_below.min(below.min_value);
        below_fail += usize::from(!below.cd_free);
        above_fail += usize::from(above.cd_free || above.already_separable);
    }
    ctx.count("free_side_violations", below_fail);
    ctx.count("susceptible_side_missed", above_fail);
    ctx.note(format!("smallest normalized Q on the free side {worst_below:.3e}"));
    Ok(())
}

fn depolarization_limit(ctx: &mut Ctx) -> Result<()> {
    let spec = ChannelSpec::new(ChannelKind::Depolarizing, 0.75, 0.75)?;
    let mixed = XState::maximally_mixed();
    let (mut m, mut q) = (0.0f64, 0.0f64);
    for _ in 0..ctx.n {
        let x = evolve_x(&random_x(&mut ctx.rng)?, &spec);
        m = m.max(x.max_abs_diff(&mixed));
        q = q.max((q_phi(&x) + 0.5).abs());
    }
    ctx.num("diff_from_maximally_mixed", m, 1e-12);
    ctx.num("q_phi_plus_half", q, 1e-12);
    Ok(())
}

fn lower_bound_audit(ctx: &mut Ctx, seed: u64) -> Result<()> {
    let report = oracle::lower_bound_audit(ctx.n as u64, seed)?;
    ctx.count("violations", report.violations.len());
    ctx.note(format!(
        "{} evaluations, smallest margin {:.3e}",
        report.evaluations, report.min_margin
    ));
    let tol = Tolerances::default();
    let mut dep = 0.0f64;
    for _ in 0..ctx.n {
        let rho = random_rho(&mut ctx.rng)?;
        let spec = ChannelSpec::new(random_kind(&mut ctx.rng), ctx.rng.random(), ctx.rng.random())?;
        let x0 = decompose(&rho).0;
        let from_full = decompose(&apply_joint(&rho, &spec)?).0;
        let from_x = decompose(&apply_joint(&recompose(&x0, &OState::zero(), &tol)?, &spec)?).0;
        dep = dep.max(from_full.max_abs_diff(&from_x));
    }
    ctx.num("x_dependence_on_o", dep, 1e-12);
    Ok(())
}

fn fine_onset() -> OnsetOptions {
    OnsetOptions {
        time_tol: Some(1e-13),
        ..OnsetOptions::default()
    }
}

/// Relative disagreement between an analytic and an oracle onset time.
fn time_gap(analytic: Option<f64>, found: Option<f64>, t_max: f64) -> f64 {
    match (analytic, found) {
        (None, None) => 0.0,
        (Some(a), None) if a > t_max => 0.0,
        (Some(a), Some(b)) => (a - b).abs() / a.abs().max(1e-300),
        _ => f64::INFINITY,
    }
}

fn cd_time_oracle(ctx: &mut Ctx) -> Result<()> {
    let tol = Tolerances::default();
    let (mut pd, mut pd_hits) = (0.0f64, 0usize);
    for _ in 0..ctx.n {
        let mtype = if ctx.rng.random::<bool>() { MatrixType::Phi } else { MatrixType::Psi };
        let x = random_x_state(ctx.rng.random(), mtype)?;
        let sched = DecaySchedule::new(ctx.rng.random_range(0.2..3.0), ctx.rng.random_range(0.2..3.0))?;
        let analytic = pd_cd_time(&x, &sched)?;
        let found = oracle::onset_time(&x.to_density(&tol)?, ChannelKind::PhaseDamping, &sched, 0.0, &fine_onset())?;
        pd_hits += usize::from(analytic.is_some());
        pd = pd.max(time_gap(analytic, found.time, 50.0 / sched.gamma_a.min(sched.gamma_b)));
    }
    ctx.num("phase_rel_diff", pd, 1e-8);
    let (mut ad, mut ad_hits) = (0.0f64, 0usize);
    for _ in 0..ctx.n {
        let x = random_x_state(ctx.rng.random(), MatrixType::Phi)?;
        let gamma = ctx.rng.random_range(0.2..3.0);
        let sched = DecaySchedule::new(gamma, gamma)?;
        let analytic = ad_cd_time_symmetric(&x, gamma)?;
        let found = oracle::onset_time(&x.to_density(&tol)?, ChannelKind::AmplitudeDamping, &sched, 0.0, &fine_onset())?;
        ad_hits += usize::from(analytic.is_some());
        ad = ad.max(time_gap(analytic, found.time, 50.0 / gamma));
    }
    ctx.num("amplitude_rel_diff", ad, 1e-8);
    ctx.note(format!("finite CD times: phase {pd_hits}, amplitude {ad_hits}"));
    Ok(())
}

/// Ordering and region checks on one preset's sweep.
pub struct FigureCheck {
    pub optimal_robust: usize,
    pub td_outside_cd: usize,
    pub later_tau_outside_earlier: usize,
    pub line_order_violations: usize,
    pub thread_count_mismatch: bool,
}

pub fn check_figure(cfg: &SweepConfig) -> Result<FigureCheck> {
    let out = run_sweep(cfg)?;
    let two_sided = cfg.channel == ChannelKind::Depolarizing && cfg.mtype == MatrixType::Phi;
    let mut td_outside_cd = 0;
    let mut later_tau_outside_earlier = 0;
    let mut line_order_violations = 0;
    let n = cfg.coord_steps;
    for (k, row) in out.rows.iter().enumerate() {
        if !row.label.physical {
            continue;
        }
        if row.label.td == TdPhase::Tolerable && row.label.cd == CdPhase::NoGo {
            td_outside_cd += 1;
        }
        let curve = &out.curves[k / n];
        let base = curve.set.expect("physical rows have a boundary set");
        for extra in curve.extra_sets.iter().flatten() {
            if extra.cd_tolerable(row.coord) && !base.cd_tolerable(row.coord) {
                later_tau_outside_earlier += 1;
            }
        }
    }
    if !two_sided {
        for curve in &out.curves {
            let Some(set) = curve.set else { continue };
            let cd = set.cd_tol.map(|t| t.raw);
            if let (Some(td), Some(cd)) = (set.td_tol.map(|t| t.raw), cd) {
                line_order_violations += usize::from(td > cd + 1e-12);
            }
            for b in curve.extra_cd_tol.iter().flatten() {
                line_order_violations += usize::from(cd.is_none_or(|cd| b.raw > cd + 1e-12));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let serial = pool.install(|| run_sweep(cfg))?;
    Ok(FigureCheck {
        optimal_robust: out.optimal_robust_count(),
        td_outside_cd,
        later_tau_outside_earlier,
        line_order_violations,
        thread_count_mismatch: serial.grid_csv() != out.grid_csv() || serial.curves_csv() != out.curves_csv(),
    })
}

fn figure_regression(ctx: &mut Ctx) -> Result<()> {
    let grid = ctx.n.max(2);
    let (mut empty, mut td, mut tau, mut order, mut threads) = (0, 0, 0, 0, 0);
    for p in FigurePreset::ALL {
        let cfg = SweepConfig {
            q_steps: grid,
            coord_steps: grid,
            ..p.config()
        };
        let f = check_figure(&cfg)?;
        empty += usize::from(f.optimal_robust == 0);
        td += f.td_outside_cd;
        tau += f.later_tau_outside_earlier;
        order += f.line_order_violations;
        threads += usize::from(f.thread_count_mismatch);
        ctx.note(format!("{p}: {} optimal-robust cells", f.optimal_robust));
    }
    ctx.count("presets_without_robust_region", empty);
    ctx.count("td_tolerable_outside_cd_tolerable", td);
    ctx.count("later_tau_outside_earlier", tau);
    ctx.count("line_order_violations", order);
    ctx.count("thread_count_mismatch", threads);
    Ok(())
}

/// Oracle onset time of a state on the Fig. 2 slice.
fn fig2_onset(q: f64, d: f64, target: f64) -> Result<Option<f64>> {
    let cfg = FigurePreset::Fig2.config();
    let slice = cfg.slice(q, cfg.taus[0])?;
    let rho = slice.state_at(d).to_density(&Tolerances::default())?;
    Ok(oracle::onset_time(&rho, cfg.channel, &cfg.schedule()?, target, &fine_onset())?.time)
}

fn fig2_code(q: f64, d: f64) -> Result<&'static str> {
    let cfg = FigurePreset::Fig2.config();
    Ok(classify_point(&cfg.slice(q, cfg.taus[0])?, d)?.code())
}

fn counter_intuitive_witness(ctx: &mut Ctx) -> Result<()> {
    let c_tv = FigurePreset::Fig2.config().c_tv;
    // less initial entanglement, later CD
    let (q1, d1, q2, d2) = (0.3, 0.2, 0.5, 0.5);
    let t1 = fig2_onset(q1, d1, 0.0)?;
    let t2 = fig2_onset(q2, d2, 0.0)?;
    ctx.holds("lower_q_disentangles_later", matches!((t1, t2), (Some(a), Some(b)) if a > b));
    ctx.note(format!("t_CD(Q={q1}, D={d1}) = {t1:?}, t_CD(Q={q2}, D={d2}) = {t2:?}"));
    // region i: CD-free but TD-no-go; region ii: earlier CD, later TD
    let (qi, di, qii, dii) = (0.3, 0.13, 0.6, 0.35);
    ctx.holds("region_labels", fig2_code(qi, di)? == "FN" && fig2_code(qii, dii)? == "TT");
    let (cd_i, cd_ii) = (fig2_onset(qi, di, 0.0)?, fig2_onset(qii, dii, 0.0)?);
    let (tv_i, tv_ii) = (fig2_onset(qi, di, c_tv)?, fig2_onset(qii, dii, c_tv)?);
    let earlier_cd = cd_i.is_none() && cd_ii.is_some();
    let later_td = matches!((tv_i, tv_ii), (Some(a), Some(b)) if b > a);
    ctx.holds("earlier_cd_later_td", earlier_cd && later_td);
    ctx.note(format!(
        "region i: t_CD {cd_i:?}, t_tv {tv_i:?}; region ii: t_CD {cd_ii:?}, t_tv {tv_ii:?}"
    ));
    Ok(())
}
