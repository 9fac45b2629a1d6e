use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use disent_core::channels::{apply_joint, ChannelKind, DecaySchedule};
use disent_core::concurrence::{classify as matrix_type, q_of, q_phi, q_psi, wootters, MatrixType};
use disent_core::critical::{ad_cd_time_symmetric, critical_set, label_with, locate, pd_cd_time, Coord};
use disent_core::density::{decompose, parse_state_json, DensityMatrix4};
use disent_core::oracle::{label_by_evolution, onset_time, OnsetOptions};
use disent_core::sweep::{run_sweep, FigurePreset, Manifest, SweepConfig};
use disent_core::verify::{self, Criterion, VerifyOptions};

use crate::settings::{Lookup, Settings};

pub const PHASE_MAP_KEYS: &[&str] = &[
    "preset",
    "channel",
    "type",
    "fixed",
    "q-range",
    "coord-range",
    "grid",
    "tau",
    "gamma-a",
    "gamma-b",
    "ctv",
    "seed",
    "out",
    "name",
];

/// Builds the sweep from a preset (if any) overlaid with explicit settings.
pub fn sweep_config(s: &Settings) -> Result<(Option<FigurePreset>, SweepConfig)> {
    let preset: Option<FigurePreset> = s.parsed("preset")?;
    let mut cfg = match preset {
        Some(p) => p.config(),
        None => {
            let channel = s.parsed("channel")?.context("channel is required without a preset")?;
            let mtype = s.parsed("type")?.context("type is required without a preset")?;
            let taus = s.list("tau")?.context("tau is required without a preset")?;
            SweepConfig {
                channel,
                mtype,
                fixed: (0.0, 0.0),
                q_range: (0.0, 1.0),
                q_steps: 201,
                coord_range: (0.0, 1.0),
                coord_steps: 201,
                gamma_a: 1.0,
                gamma_b: 1.0,
                taus,
                c_tv: 0.1,
                seed: 0,
            }
        }
    };
    if let Some(v) = s.parsed("channel")? {
        cfg.channel = v;
    }
    if let Some(v) = s.parsed("type")? {
        cfg.mtype = v;
    }
    if let Some(v) = s.pair("fixed")? {
        cfg.fixed = v;
    }
    if let Some(v) = s.pair("q-range")? {
        cfg.q_range = v;
    }
    if let Some(v) = s.pair("coord-range")? {
        cfg.coord_range = v;
    }
    if let Some(n) = s.parsed::<usize>("grid")? {
        cfg.q_steps = n;
        cfg.coord_steps = n;
    }
    if let Some(v) = s.list("tau")? {
        cfg.taus = v;
    }
    if let Some(v) = s.parsed("gamma-a")? {
        cfg.gamma_a = v;
    }
    if let Some(v) = s.parsed("gamma-b")? {
        cfg.gamma_b = v;
    }
    if let Some(v) = s.parsed("ctv")? {
        cfg.c_tv = v;
    }
    if let Some(v) = s.parsed("seed")? {
        cfg.seed = v;
    }
    cfg.validate()?;
    Ok((preset, cfg))
}

pub fn phase_map(s: &Settings) -> Result<()> {
    let (preset, cfg) = sweep_config(s)?;
    let name = match (s.raw("name"), preset) {
        (Some(n), _) => n.to_string(),
        (None, Some(p)) => p.name().to_string(),
        (None, None) => "phase_map".to_string(),
    };
    let out_dir = PathBuf::from(s.raw("out").unwrap_or("."));
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let out = run_sweep(&cfg)?;
    let grid_name = format!("{name}_grid.csv");
    let curves_name = format!("{name}_curves.csv");
    let grid = out.grid_csv();
    let curves = out.curves_csv();
    let manifest = Manifest::new(preset, &out, &[(&grid_name, &grid), (&curves_name, &curves)]);
    let manifest_name = format!("{name}_manifest.json");
    write(&out_dir.join(&grid_name), &grid)?;
    write(&out_dir.join(&curves_name), &curves)?;
    write(&out_dir.join(&manifest_name), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    println!(
        "{name}: {}x{} grid, {} optimal robust cells -> {}",
        cfg.q_steps,
        cfg.coord_steps,
        out.optimal_robust_count(),
        out_dir.display()
    );
    Ok(())
}

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

/// Channel parameters shared by `classify` and `times`.
pub struct Noise {
    pub channel: ChannelKind,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub tau: f64,
    pub ctv: f64,
}

impl Noise {
    fn schedule(&self) -> Result<DecaySchedule> {
        Ok(DecaySchedule::new(self.gamma_a, self.gamma_b)?)
    }

    fn check(&self) -> Result<()> {
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            bail!("invalid value for tau: must be non-negative, got {}", self.tau);
        }
        if !(0.0..1.0).contains(&self.ctv) {
            bail!("invalid value for ctv: must lie in [0, 1), got {}", self.ctv);
        }
        Ok(())
    }
}

pub fn read_state(path: &Path) -> Result<DensityMatrix4> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_state_json(&text).with_context(|| format!("in {}", path.display()))
}

fn coord_name(c: Coord) -> &'static str {
    match c {
        Coord::D => "D",
        Coord::S => "S",
    }
}

pub fn classify(rho: &DensityMatrix4, noise: &Noise) -> Result<Value> {
    noise.check()?;
    let (x, o) = decompose(rho);
    let spec = noise.schedule()?.at_time(noise.channel, noise.tau)?;
    let loc = locate(&x, noise.channel, spec.p_a, spec.p_b, noise.ctv)?;
    let set = if loc.conforms { critical_set(&loc.slice).ok() } else { None };
    let (label, method) = match &set {
        Some(set) => (label_with(set, loc.coord), "slice"),
        None => (label_by_evolution(&x, &spec, noise.ctv)?, "evolution"),
    };
    let rho_t = apply_joint(rho, &spec)?;
    let o_nonzero = !o.is_zero();
    Ok(json!({
        "matrix_type": loc.slice.mtype.to_string(),
        "q_phi": q_phi(&x),
        "q_psi": q_psi(&x),
        "channel": noise.channel.to_string(),
        "p_a": spec.p_a,
        "p_b": spec.p_b,
        "slice": loc.slice,
        "coord": { "name": coord_name(loc.slice.coord()), "value": loc.coord },
        "conforms": loc.conforms,
        "critical_set": set,
        "label": label,
        "code": label.code(),
        "label_method": method,
        "o_part_nonzero": o_nonzero,
        "lower_bound_only": o_nonzero,
        "q_tau": q_of(loc.slice.mtype, &disent_core::channels::evolve_x(&x, &spec)),
        "concurrence_tau": wootters(&rho_t),
    }))
}

pub fn times(rho: &DensityMatrix4, noise: &Noise) -> Result<Value> {
    noise.check()?;
    let sched = noise.schedule()?;
    let (x, o) = decompose(rho);
    let mtype = matrix_type(&x);
    let analytic = if !o.is_zero() || mtype == MatrixType::Separable {
        None
    } else {
        match noise.channel {
            ChannelKind::PhaseDamping => Some(pd_cd_time(&x, &sched)?),
            ChannelKind::AmplitudeDamping if noise.gamma_a == noise.gamma_b && mtype == MatrixType::Phi => {
                Some(ad_cd_time_symmetric(&x, noise.gamma_a)?)
            }
            _ => None,
        }
    };
    let opts = OnsetOptions::default();
    let (t_cd, cd_method) = match analytic {
        Some(t) => (t, "analytic"),
        None => (onset_time(rho, noise.channel, &sched, 0.0, &opts)?.time, "oracle"),
    };
    let t_tv = onset_time(rho, noise.channel, &sched, noise.ctv, &opts)?.time;
    Ok(json!({
        "matrix_type": mtype.to_string(),
        "channel": noise.channel.to_string(),
        "t_cd": t_cd,
        "t_cd_method": cd_method,
        "t_tv": t_tv,
        "t_tv_method": "oracle",
        "ctv": noise.ctv,
    }))
}

pub fn parse_suite(suite: &str) -> Result<Vec<Criterion>> {
    if suite.trim() == "all" {
        return Ok(Criterion::ALL.to_vec());
    }
    suite
        .split(',')
        .map(|s| s.parse::<Criterion>().map_err(anyhow::Error::from))
        .collect()
}

/// Runs the checks, prints one line each and returns whether all passed.
pub fn verify(criteria: &[Criterion], opts: &VerifyOptions, out: Option<&Path>) -> Result<bool> {
    let report = verify::run(criteria, opts)?;
    for c in &report.checks {
        println!("{}", c.summary());
        for note in &c.notes {
            println!("    {note}");
        }
    }
    let passed = report.checks.iter().filter(|c| c.passed).count();
    println!(
        "verify: {passed} of {} checks passed{}",
        report.checks.len(),
        if report.passed { "" } else { " (FAILED)" }
    );
    if let Some(path) = out {
        write(path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    Ok(report.passed)
}
