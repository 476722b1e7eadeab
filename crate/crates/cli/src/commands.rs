//! One function per subcommand. Each reads its section of the config and
//! writes CSV data and a JSON summary into the output directory.

use std::path::Path;

use serde::Serialize;

use lasso_core::control::{self, SynthesisReport, VerifiedError};
use lasso_core::fdsim::{simulate, ControlSet, ProblemKind, SimOptions};
use lasso_core::graph::{build_grid, build_grid_with_cfl, check_h10, GraphFunction, SpaceTag, TargetState};
use lasso_core::moments::{demo_noncontrollability, DemoKind};
use lasso_core::spectral::{convergents, min_gap, spectrum_q0, spectrum_shooting, verify_cluster, EigenPair};

use crate::config::{DemoWhich, Mode, Problem, RunConfig, SpectrumMethod};
use crate::io::{read_controls, read_target, write_controls, write_json, write_rows, write_state};

pub const DEFAULT_SEED: u64 = 42;

/// Failure of a command, classified by exit status.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Synthesis(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Synthesis(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> String {
        let (kind, e) = match self {
            Failure::Config(e) => ("config error", e),
            Failure::Synthesis(e) => ("synthesis failed", e),
            Failure::Runtime(e) => ("error", e),
        };
        format!("{kind}: {e:#}")
    }
}

pub trait Classify<T> {
    fn config(self) -> Result<T, Failure>;
    fn synthesis(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn config(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }
    fn synthesis(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Synthesis(e.into()))
    }
    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

type Outcome = Result<(), Failure>;

fn kind(p: Problem) -> ProblemKind {
    match p {
        Problem::P1 => ProblemKind::P1,
        Problem::P2 => ProblemKind::P2,
    }
}

#[derive(Serialize)]
struct SynthesisSummary<'a> {
    problem: Problem,
    mode: Mode,
    epsilon: Option<f64>,
    resolution: usize,
    /// The error the mode controls: relative H¹ shape error, relative L²
    /// velocity error or the combined error.
    verified_metric: Option<f64>,
    report: &'a SynthesisReport,
}

pub fn cmd_synthesize(cfg: &RunConfig, out: &Path) -> Outcome {
    let s = cfg.section(&cfg.synthesize, "synthesize").config()?;
    let geom = cfg.geometry().config()?;
    let q = cfg.potential(&geom).config()?;
    let res = cfg.grid.resolution;
    let grid = build_grid(&geom, res).config()?;
    let (phi1, phi2) = read_target(&cfg.resolve(&s.target), &geom, &grid).config()?;
    if s.mode != Mode::Velocity {
        check_h10(&phi1).config()?;
    }
    let eps = match s.problem {
        Problem::P1 => None,
        Problem::P2 => Some(s.epsilon.unwrap_or(0.5 * geom.a().min(geom.l()))),
    };
    let zero = GraphFunction::zeros(&grid);
    let (target, tag) = match s.mode {
        Mode::Shape => ((phi1, zero), SpaceTag::H10),
        Mode::Velocity => ((zero, phi2), SpaceTag::H),
        Mode::Exact => ((phi1, phi2), SpaceTag::H10),
    };
    let target = TargetState::new(target.0, target.1, tag).config()?;
    let e = eps.unwrap_or(0.0);
    let report = match (s.problem, s.mode) {
        (Problem::P1, Mode::Shape) => control::shape_control_p1(&target.phi1, &geom, &q),
        (Problem::P1, Mode::Velocity) => control::velocity_control_p1(&target.phi2, &geom, &q),
        (Problem::P1, Mode::Exact) => control::exact_control_p1(&target, &geom, &q),
        (Problem::P2, Mode::Shape) => control::shape_control_p2(&target.phi1, &geom, &q, e),
        (Problem::P2, Mode::Velocity) => control::velocity_control_p2(&target.phi2, &geom, &q, e),
        (Problem::P2, Mode::Exact) => control::exact_control_p2(&target, &geom, &q, e),
    }
    .synthesis()?;
    let report = if s.verify {
        let check = build_grid_with_cfl(&geom, res, cfg.grid.verify_cfl).config()?;
        control::verify(&report, &target, &geom, &q, &check).runtime()?
    } else {
        report
    };
    let metric = report.verified_error.map(|v| match s.mode {
        Mode::Shape => v.shape_rel_h1,
        Mode::Velocity => v.velocity_rel_l2,
        Mode::Exact => v.combined_rel,
    });
    write_controls(&out.join("controls.csv"), &report.controls).runtime()?;
    let summary = SynthesisSummary {
        problem: s.problem,
        mode: s.mode,
        epsilon: eps,
        resolution: res,
        verified_metric: metric,
        report: &report,
    };
    write_json(&out.join("report.json"), &summary).runtime()
}

#[derive(Serialize)]
struct TraceRow {
    t: f64,
    u1_0: f64,
    u2_0: f64,
    u3_0: f64,
    u1_l: f64,
    ring_mid: f64,
    ring_asymmetry: f64,
}

#[derive(Serialize)]
struct SimulationSummary {
    problem: Problem,
    t_end: f64,
    h: f64,
    dt: f64,
    final_energy: Option<f64>,
    max_flux_residual: f64,
    max_jump_residual: f64,
    max_ring_asymmetry: f64,
}

fn controls_end(controls: &ControlSet, t_end: Option<f64>) -> f64 {
    t_end.unwrap_or_else(|| controls.duration())
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Outcome {
    let s = cfg.section(&cfg.simulate, "simulate").config()?;
    let geom = cfg.geometry().config()?;
    let q = cfg.potential(&geom).config()?;
    let grid = build_grid_with_cfl(&geom, cfg.grid.resolution, s.cfl).config()?;
    let controls = read_controls(&cfg.resolve(&s.controls), s.problem).config()?;
    let t_end = controls_end(&controls, s.t_end);
    let opts = SimOptions {
        snapshot_stride: None,
        record_energy: true,
    };
    let traj = simulate(&geom, &q, &controls, kind(s.problem), t_end, &grid, None, opts).runtime()?;
    write_state(&out.join("final_state.csv"), ["u", "u_t"], &traj.final_u, &traj.final_ut).runtime()?;
    let tr = &traj.traces;
    let rows: Vec<TraceRow> = (0..tr.times.len())
        .map(|i| TraceRow {
            t: tr.times[i],
            u1_0: tr.u1_0[i],
            u2_0: tr.u2_0[i],
            u3_0: tr.u3_0[i],
            u1_l: tr.u1_l[i],
            ring_mid: tr.ring_mid[i],
            ring_asymmetry: tr.ring_asymmetry[i],
        })
        .collect();
    write_rows(&out.join("traces.csv"), &rows).runtime()?;
    let summary = SimulationSummary {
        problem: s.problem,
        t_end: traj.t_end,
        h: grid.h,
        dt: grid.dt,
        final_energy: traj.energy.last().map(|e| e.1),
        max_flux_residual: traj.max_flux_residual,
        max_jump_residual: traj.max_jump_residual,
        max_ring_asymmetry: tr.ring_asymmetry.iter().fold(0.0, |m: f64, v| m.max(*v)),
    };
    write_json(&out.join("summary.json"), &summary).runtime()
}

#[derive(Serialize)]
struct SpectrumRow {
    index: usize,
    omega: f64,
    multiplicity: u8,
    family: &'static str,
    phi_l: f64,
    dphi1: f64,
    dphi2: f64,
    dphi3: f64,
    vertex_residual: f64,
    norm_check: f64,
}

#[derive(Serialize)]
struct SpectrumSummary {
    method: SpectrumMethod,
    count: usize,
    double_frequencies: usize,
    min_gap: f64,
}

fn require_unperturbed(cfg: &RunConfig, what: &str) -> Result<(), Failure> {
    if !cfg.is_unperturbed() {
        return Err(Failure::Config(anyhow::anyhow!("{what} is defined for the zero potential only")));
    }
    Ok(())
}

pub fn cmd_spectrum(cfg: &RunConfig, out: &Path) -> Outcome {
    let s = cfg.section(&cfg.spectrum, "spectrum").config()?;
    let geom = cfg.geometry().config()?;
    let spectrum: Vec<EigenPair> = match s.method {
        SpectrumMethod::ClosedForm => {
            require_unperturbed(cfg, "the closed-form spectrum")?;
            let w = s.omega_max.ok_or_else(|| anyhow::anyhow!("spectrum.omega_max is required for the closed form")).config()?;
            spectrum_q0(&geom, w).runtime()?
        }
        SpectrumMethod::Shooting => {
            let n = s.modes.ok_or_else(|| anyhow::anyhow!("spectrum.modes is required for shooting")).config()?;
            let q = cfg.potential(&geom).config()?;
            spectrum_shooting(&q, &geom, n).runtime()?
        }
    };
    let rows: Vec<SpectrumRow> = spectrum
        .iter()
        .enumerate()
        .map(|(i, p)| SpectrumRow {
            index: i,
            omega: p.omega,
            multiplicity: p.multiplicity,
            family: p.family.name(),
            phi_l: p.trace.phi_l,
            dphi1: p.trace.dphi[0],
            dphi2: p.trace.dphi[1],
            dphi3: p.trace.dphi[2],
            vertex_residual: p.vertex_residual,
            norm_check: p.norm_check,
        })
        .collect();
    write_rows(&out.join("spectrum.csv"), &rows).runtime()?;
    let summary = SpectrumSummary {
        method: s.method,
        count: spectrum.len(),
        double_frequencies: spectrum.iter().filter(|p| p.multiplicity == 2).count() / 2,
        min_gap: min_gap(&spectrum, spectrum.len()),
    };
    write_json(&out.join("summary.json"), &summary).runtime()
}

#[derive(Serialize)]
struct GapEntry {
    count: usize,
    min_gap: f64,
}

#[derive(Serialize)]
struct ClusterEntry {
    n: u64,
    center: f64,
    radius: f64,
    roots: Option<[f64; 2]>,
    error: Option<String>,
}

#[derive(Serialize)]
struct GapSummary {
    loop_length: f64,
    pendant_length: f64,
    /// Loop length over pendant length.
    ratio: f64,
    convergents: Vec<(u64, u64)>,
    min_gaps: Vec<GapEntry>,
    /// Whether the minimal gap strictly decreases along `counts`.
    decreasing: bool,
    clusters: Vec<ClusterEntry>,
}

pub fn cmd_gap(cfg: &RunConfig, out: &Path) -> Outcome {
    let g = cfg.section(&cfg.gap, "gap").config()?;
    require_unperturbed(cfg, "the gap analysis")?;
    let geom = cfg.geometry().config()?;
    let spectrum = spectrum_q0(&geom, g.omega_max).runtime()?;
    if let Some(n) = g.counts.iter().find(|n| **n > spectrum.len()) {
        return Err(Failure::Config(anyhow::anyhow!(
            "gap.omega_max = {} gives {} frequencies, fewer than the requested {n}",
            g.omega_max,
            spectrum.len()
        )));
    }
    let min_gaps: Vec<GapEntry> = g.counts.iter().map(|n| GapEntry { count: *n, min_gap: min_gap(&spectrum, *n) }).collect();
    let (loop_length, l) = (2.0 * geom.a(), geom.l());
    let len = loop_length.max(l);
    let clusters = g
        .clusters
        .iter()
        .map(|n| {
            let (center, radius) = (2.0 * std::f64::consts::PI * *n as f64 / len, 1.0 / (len * (*n as f64).ln()));
            match verify_cluster(*n, loop_length, l) {
                Ok((r1, r2, _)) => ClusterEntry { n: *n, center, radius, roots: Some([r1, r2]), error: None },
                Err(e) => ClusterEntry { n: *n, center, radius, roots: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    let summary = GapSummary {
        loop_length,
        pendant_length: l,
        ratio: loop_length / l,
        convergents: convergents(loop_length / l, g.convergents),
        decreasing: min_gaps.windows(2).all(|w| w[1].min_gap < w[0].min_gap),
        min_gaps,
        clusters,
    };
    write_json(&out.join("gap.json"), &summary).runtime()
}

pub fn cmd_demo(cfg: &RunConfig, out: &Path, seed: u64) -> Outcome {
    let d = cfg.section(&cfg.demo, "demo").config()?;
    require_unperturbed(cfg, "the non-controllability demo")?;
    let geom = cfg.geometry().config()?;
    let which = match d.which {
        DemoWhich::BoundaryOnly => DemoKind::BoundaryOnly,
        DemoWhich::InteriorOnly => DemoKind::InteriorOnly,
    };
    let t = d.t.unwrap_or(2.0 * geom.t_star());
    let report = demo_noncontrollability(which, &geom, t, d.trials, seed, cfg.grid.resolution).runtime()?;
    write_json(&out.join("demo.json"), &report).runtime()
}

#[derive(Serialize)]
struct VerifySummary {
    problem: Problem,
    t_end: f64,
    verified_error: VerifiedError,
}

pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> Outcome {
    let v = cfg.section(&cfg.verify, "verify").config()?;
    let geom = cfg.geometry().config()?;
    let q = cfg.potential(&geom).config()?;
    let grid = build_grid_with_cfl(&geom, cfg.grid.resolution, cfg.grid.verify_cfl).config()?;
    let controls = read_controls(&cfg.resolve(&v.controls), v.problem).config()?;
    let (phi1, phi2) = read_target(&cfg.resolve(&v.target), &geom, &grid).config()?;
    let target = TargetState::new(phi1, phi2, SpaceTag::H).config()?;
    let t_end = controls_end(&controls, v.t_end);
    let err = control::verified_error(&controls, t_end, &target, &geom, &q, &grid).runtime()?;
    let summary = VerifySummary {
        problem: v.problem,
        t_end,
        verified_error: err,
    };
    write_json(&out.join("verify.json"), &summary).runtime()
}
