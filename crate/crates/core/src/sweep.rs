//! Phase-map sweeps over (Q, coordinate) grids and their CSV/JSON output.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channels::{ChannelKind, DecaySchedule};
use crate::concurrence::MatrixType;
use crate::critical::{critical_set, label_with, CriticalSet, PhaseLabel, SliceParams, Threshold};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FigurePreset {
    Fig2,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl FigurePreset {
    pub const ALL: [FigurePreset; 6] = [
        FigurePreset::Fig2,
        FigurePreset::Fig4,
        FigurePreset::Fig5,
        FigurePreset::Fig6,
        FigurePreset::Fig7,
        FigurePreset::Fig8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigurePreset::Fig2 => "fig2",
            FigurePreset::Fig4 => "fig4",
            FigurePreset::Fig5 => "fig5",
            FigurePreset::Fig6 => "fig6",
            FigurePreset::Fig7 => "fig7",
            FigurePreset::Fig8 => "fig8",
        }
    }

    /// Canned configuration with γ = 1 and τ in units of 1/γ.
    pub fn config(self) -> SweepConfig {
        use ChannelKind::*;
        use MatrixType::*;
        let base = |channel, mtype, fixed, coord_hi, taus: Vec<f64>| SweepConfig {
            channel,
            mtype,
            fixed,
            q_range: (0.0, 1.0),
            q_steps: 201,
            coord_range: (0.0, coord_hi),
            coord_steps: 201,
            gamma_a: 1.0,
            gamma_b: 1.0,
            taus,
            c_tv: 0.1,
            seed: 0,
        };
        match self {
            FigurePreset::Fig2 => base(AmplitudeDamping, Phi, (0.0, 0.0), 1.0, vec![2.0 / 3.0]),
            FigurePreset::Fig4 => base(AmplitudeDamping, Psi, (0.04, 0.04), 0.5, vec![2.0 / 3.0]),
            FigurePreset::Fig5 => base(PhaseDamping, Phi, (0.0, 0.0), 0.25, vec![1.0, 2.0]),
            FigurePreset::Fig6 => base(PhaseDamping, Psi, (0.1, 0.0), 1.0, vec![2.0 / 3.0, 8.0 / 7.0]),
            FigurePreset::Fig7 => SweepConfig {
                gamma_b: 0.2,
                ..base(Depolarizing, Phi, (0.05, 0.05), 1.0, vec![0.2, 11.0 / 36.0])
            },
            FigurePreset::Fig8 => base(Depolarizing, Psi, (0.04, 0.04), 0.5, vec![1.0 / 9.0, 1.0 / 6.0]),
        }
    }
}

impl std::fmt::Display for FigurePreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FigurePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        FigurePreset::ALL
            .into_iter()
            .find(|p| p.name() == key)
            .ok_or_else(|| Error::Parse(format!("unknown preset '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub channel: ChannelKind,
    pub mtype: MatrixType,
    pub fixed: (f64, f64),
    pub q_range: (f64, f64),
    pub q_steps: usize,
    pub coord_range: (f64, f64),
    pub coord_steps: usize,
    pub gamma_a: f64,
    pub gamma_b: f64,
    /// The first τ drives the full classification; later ones add CD lines.
    pub taus: Vec<f64>,
    pub c_tv: f64,
    pub seed: u64,
}

fn in_unit(field: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::config(field, format!("range ({lo}, {hi}) must satisfy 0 <= lo <= hi <= 1")));
    }
    Ok(())
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mtype == MatrixType::Separable {
            return Err(Error::config("type", "must be phi or psi"));
        }
        in_unit("q_range", self.q_range)?;
        in_unit("coord_range", self.coord_range)?;
        if self.q_steps < 2 {
            return Err(Error::config("q_steps", "need at least 2 steps"));
        }
        if self.coord_steps < 2 {
            return Err(Error::config("coord_steps", "need at least 2 steps"));
        }
        for (field, g) in [("gamma_a", self.gamma_a), ("gamma_b", self.gamma_b)] {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::config(field, format!("must be positive, got {g}")));
            }
        }
        if self.taus.is_empty() {
            return Err(Error::config("tau", "at least one protection time is required"));
        }
        if let Some(t) = self.taus.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::config("tau", format!("must be positive, got {t}")));
        }
        if !(self.c_tv >= 0.0 && self.c_tv < 1.0) {
            return Err(Error::config("ctv", format!("must lie in [0, 1), got {}", self.c_tv)));
        }
        for (field, v) in [("fixed.0", self.fixed.0), ("fixed.1", self.fixed.1)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(field, format!("must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<DecaySchedule> {
        DecaySchedule::new(self.gamma_a, self.gamma_b)
    }

    fn axis((lo, hi): (f64, f64), n: usize, i: usize) -> f64 {
        if i + 1 == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    pub fn q_at(&self, i: usize) -> f64 {
        Self::axis(self.q_range, self.q_steps, i)
    }

    pub fn coord_at(&self, j: usize) -> f64 {
        Self::axis(self.coord_range, self.coord_steps, j)
    }

    /// Slice at grid row `i` for protection time `tau`.
    pub fn slice(&self, q: f64, tau: f64) -> Result<SliceParams> {
        SliceParams::at_time(self.channel, self.mtype, q, self.fixed, &self.schedule()?, tau, self.c_tv)
    }
}

/// Boundaries of one grid row (fixed Q). `set` is `None` when Q exceeds the
/// slice's physical maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub q: f64,
    pub set: Option<CriticalSet>,
    /// Lower CD boundary at each additional τ.
    pub extra_cd_tol: Vec<Option<Threshold>>,
    /// Full boundary sets at each additional τ, kept for set comparisons.
    #[serde(skip)]
    pub extra_sets: Vec<Option<CriticalSet>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q: f64,
    pub coord: f64,
    pub label: PhaseLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub config: SweepConfig,
    pub curves: Vec<CurveRow>,
    pub rows: Vec<SweepRow>,
}

fn curve_row(cfg: &SweepConfig, q: f64) -> Result<CurveRow> {
    let set_at = |tau: f64| match critical_set(&cfg.slice(q, tau)?) {
        Ok(s) => Ok(Some(s)),
        Err(Error::UnphysicalSlice { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let set = set_at(cfg.taus[0])?;
    let extra_sets = cfg.taus[1..].iter().map(|&t| set_at(t)).collect::<Result<Vec<_>>>()?;
    Ok(CurveRow {
        q,
        set,
        extra_cd_tol: extra_sets.iter().map(|s| s.and_then(|s| s.cd_tol)).collect(),
        extra_sets,
    })
}

/// Runs the sweep. Rows come out in grid order (Q outer, coordinate inner)
/// whatever the number of worker threads.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let curves: Vec<CurveRow> = (0..cfg.q_steps)
        .into_par_iter()
        .map(|i| curve_row(cfg, cfg.q_at(i)))
        .collect::<Result<_>>()?;
    let rows = curves
        .par_iter()
        .flat_map_iter(|c| {
            (0..cfg.coord_steps).map(move |j| {
                let coord = cfg.coord_at(j);
                let label = c.set.map_or_else(PhaseLabel::unphysical, |s| label_with(&s, coord));
                SweepRow { q: c.q, coord, label }
            })
        })
        .collect();
    Ok(SweepOutput {
        config: cfg.clone(),
        curves,
        rows,
    })
}

impl SweepOutput {
    pub fn optimal_robust_count(&self) -> usize {
        self.rows.iter().filter(|r| r.label.physical && r.label.optimal_robust).count()
    }

    fn extra_headers(&self) -> Vec<String> {
        (1..self.config.taus.len())
            .map(|k| format!("cd_tol_{}", (b'a' + k as u8) as char))
            .collect()
    }

    /// One line per grid point.
    pub fn grid_csv(&self) -> String {
        let mut out = String::from(
            "q,coord,physical,phys_lo,phys_hi,cd_free,cd_tol,cd_tol_upper,td_tol,td_tol_upper",
        );
        for h in self.extra_headers() {
            out.push(',');
            out.push_str(&h);
        }
        out.push_str(",label,robust\n");
        let n = self.config.coord_steps;
        for (k, row) in self.rows.iter().enumerate() {
            let curve = &self.curves[k / n];
            write!(out, "{},{},{}", num(row.q), num(row.coord), row.label.physical as u8).unwrap();
            push_set(&mut out, curve);
            write!(
                out,
                ",{},{}\n",
                row.label.code(),
                (row.label.physical && row.label.optimal_robust) as u8
            )
            .unwrap();
        }
        out
    }

    /// One line per Q: the boundary curves of the phase diagram.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("q,phys_lo,phys_hi,cd_free,cd_tol,cd_tol_upper,td_tol,td_tol_upper");
        for h in self.extra_headers() {
            out.push(',');
            out.push_str(&h);
        }
        out.push('\n');
        for curve in &self.curves {
            out.push_str(&num(curve.q));
            push_set(&mut out, curve);
            out.push('\n');
        }
        out
    }
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.16e}")
    }
}

fn opt(t: Option<Threshold>) -> String {
    t.map_or_else(|| "NA".into(), |t| num(t.raw))
}

fn push_set(out: &mut String, curve: &CurveRow) {
    match &curve.set {
        Some(s) => write!(
            out,
            ",{},{},{},{},{},{},{}",
            num(s.phys_lo),
            num(s.phys_hi),
            opt(s.cd_free),
            opt(s.cd_tol),
            opt(s.cd_tol_upper),
            opt(s.td_tol),
            opt(s.td_tol_upper)
        )
        .unwrap(),
        None => out.push_str(",NA,NA,NA,NA,NA,NA,NA"),
    }
    for t in &curve.extra_cd_tol {
        out.push(',');
        out.push_str(&opt(*t));
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub preset: Option<FigurePreset>,
    pub config: SweepConfig,
    pub version: String,
    pub optimal_robust_cells: usize,
    pub files: Vec<ManifestFile>,
}

impl Manifest {
    pub fn new(preset: Option<FigurePreset>, out: &SweepOutput, files: &[(&str, &str)]) -> Self {
        Manifest {
            preset,
            config: out.config.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            optimal_robust_cells: out.optimal_robust_count(),
            files: files
                .iter()
                .map(|(path, body)| ManifestFile {
                    path: path.to_string(),
                    sha256: sha256_hex(body.as_bytes()),
                    bytes: body.len(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::classify_point;

    fn small(p: FigurePreset) -> SweepConfig {
        SweepConfig {
            q_steps: 21,
            coord_steps: 21,
            ..p.config()
        }
    }

    #[test]
    fn validation_names_fields() {
        let mut cfg = small(FigurePreset::Fig2);
        cfg.q_steps = 1;
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "q_steps"));
        let mut cfg = small(FigurePreset::Fig2);
        cfg.taus = vec![0.0];
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "tau"));
        let mut cfg = small(FigurePreset::Fig2);
        cfg.coord_range = (0.2, 1.5);
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "coord_range"));
    }

    #[test]
    fn fig2_bell_row_has_half_cd_free() {
        let out = run_sweep(&small(FigurePreset::Fig2)).unwrap();
        let last = out.curves.last().unwrap();
        assert_eq!(last.q, 1.0);
        let free = last.set.unwrap().cd_free.unwrap().raw;
        assert!((free - 0.5).abs() < 1e-15);
        let line = out.curves_csv().lines().last().unwrap().to_string();
        assert!(line.starts_with("1.0000000000000000e0,"));
    }

    #[test]
    fn labels_match_classify_point() {
        for p in FigurePreset::ALL {
            let cfg = small(p);
            let out = run_sweep(&cfg).unwrap();
            for row in &out.rows {
                let slice = cfg.slice(row.q, cfg.taus[0]).unwrap();
                let lab = classify_point(&slice, row.coord).unwrap();
                if lab.physical || row.label.physical {
                    assert_eq!(lab, row.label, "{p} q={} c={}", row.q, row.coord);
                }
            }
        }
    }

    #[test]
    fn csv_shape_and_determinism() {
        let cfg = small(FigurePreset::Fig5);
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        let csv = a.grid_csv();
        assert_eq!(csv, b.grid_csv());
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.contains("cd_tol_b"));
        let cols = header.split(',').count();
        assert!(lines.all(|l| l.split(',').count() == cols));
        assert_eq!(csv.lines().count(), 1 + 21 * 21);
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn preset_parse_round_trip() {
        for p in FigurePreset::ALL {
            assert_eq!(p.name().parse::<FigurePreset>().unwrap(), p);
        }
        assert!("fig3".parse::<FigurePreset>().is_err());
    }
}
