use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::embed::{spectral_doubling_check, verify_permutation};
use crate::error::Error;
use crate::evolve::{evolve_pair, evolve_pair_with, PairPaths, PairSetup, Representation};
use crate::invariants::{
    circular_distance, phase_diagram as diagram, q_trajectory, roots_inside_unit_disk, theta_unwrapped, winding_number,
    zak_wilson, Axis, DiagramCell,
};
use crate::labframe::run_lab;
use crate::model::{BlochVector, ModelParams};
use crate::phase::{adiabatic_prediction_series, phase_trace, PhaseTrace};

use super::config::{AxisName, RunConfig, ScheduleKind};
use super::table::{json_number, write_atomic, Cell, Table};
use super::{model_exit_code, CliError, EXIT_OK};

const Q_TRAJECTORY_POINTS: usize = 512;

struct Output {
    files: Vec<(String, Vec<u8>)>,
}

impl Output {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn table(&mut self, cfg: &RunConfig, stem: &str, table: &Table) {
        let body = match cfg.format {
            super::Format::Csv => table.to_csv(),
            super::Format::Json => table.to_json(),
        };
        self.files.push((format!("{stem}.{}", cfg.format.extension()), body.into_bytes()));
    }

    fn json(&mut self, name: &str, value: &Value) {
        let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
        text.push('\n');
        self.files.push((name.to_string(), text.into_bytes()));
    }

    fn raw(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    // Nothing touches the output directory until every file is rendered.
    fn commit(self, dir: &Path, log: &mut (dyn Write + Send)) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            write_atomic(&path, bytes)?;
            writeln!(log, "wrote {}", path.display())?;
        }
        Ok(())
    }
}

fn params_json(p: &ModelParams) -> Value {
    json!({ "w": json_number(p.w()), "v": json_number(p.v()), "J": json_number(p.j()) })
}

fn pair_setup(kind: ScheduleKind) -> PairSetup {
    let paths = match kind {
        ScheduleKind::Half => PairPaths::Half,
        ScheduleKind::Full => PairPaths::Full,
    };
    PairSetup { paths, ..PairSetup::default() }
}

fn check_bz(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.bz_samples < 3 {
        return Err(CliError::Config(format!("bz_samples must be at least 3, got {}", cfg.bz_samples)));
    }
    Ok(())
}

fn check_schedule(total_time: f64, steps: usize) -> Result<(), CliError> {
    if !(total_time.is_finite() && total_time > 0.0) {
        return Err(CliError::Config(format!("T must be positive, got {total_time}")));
    }
    if steps == 0 {
        return Err(CliError::Config("steps must be positive".into()));
    }
    Ok(())
}

pub(super) fn trace(cfg: &RunConfig, log: &mut (dyn Write + Send)) -> Result<i32, CliError> {
    let params = ModelParams::new(cfg.w, cfg.v, cfg.j)?;
    check_schedule(cfg.total_time, cfg.steps)?;
    check_bz(cfg)?;

    let (a, b) = evolve_pair_with(&params, cfg.total_time, cfg.steps, &pair_setup(cfg.schedule))?;
    let pt = phase_trace(&params, &a, &b)?;
    let prediction = adiabatic_prediction_series(&params, &a, &b)?;
    let winding = winding_number(&params, cfg.bz_samples)?;
    let zak = zak_wilson(&params, cfg.bz_samples)?;

    let mut table = Table::new(vec![
        "t",
        "k_A",
        "k_B",
        "delta_phi",
        "phi_dyn_A",
        "phi_dyn_B",
        "fidelity_A",
        "fidelity_B",
        "adiabatic_prediction",
    ]);
    for (i, &t) in pt.times.iter().enumerate() {
        table.push(vec![
            Cell::Num(t),
            Cell::Num(a.k_values[i]),
            Cell::Num(b.k_values[i]),
            Cell::Num(pt.delta_phi[i]),
            Cell::Num(pt.phi_dyn_a[i]),
            Cell::Num(pt.phi_dyn_b[i]),
            Cell::Num(pt.fidelity_a[i]),
            Cell::Num(pt.fidelity_b[i]),
            Cell::Num(prediction[i]),
        ]);
    }

    let mut q = Table::new(vec!["k", "q_re", "q_im"]);
    let n = Q_TRAJECTORY_POINTS;
    for (i, z) in q_trajectory(&params, n).iter().enumerate() {
        q.push(vec![Cell::Num(-PI + 2.0 * PI * i as f64 / n as f64), Cell::Num(z.re), Cell::Num(z.im)]);
    }

    let final_phi = pt.final_delta_phi();
    let summary = json!({
        "name": cfg.name,
        "params": params_json(&params),
        "T": json_number(cfg.total_time),
        "steps": cfg.steps,
        "schedule": match cfg.schedule { ScheduleKind::Half => "half", ScheduleKind::Full => "full" },
        "delta_phi_final": json_number(final_phi),
        "delta_phi_final_over_pi": json_number(final_phi / PI),
        "W": winding,
        "zak_mod_2pi": json_number(zak),
        "min_fidelity": json_number(pt.min_fidelity()),
        "max_dynamical_mismatch": json_number(pt.max_dynamical_mismatch()),
    });

    writeln!(log, "delta_phi(T) = {final_phi:.6} ({:.6} pi), W = {winding}, zak = {zak:.6}", final_phi / PI)?;
    let mut out = Output::new();
    out.table(cfg, "trace", &table);
    out.table(cfg, "q_trajectory", &q);
    out.json("summary.json", &summary);
    out.commit(&cfg.out, log)?;
    Ok(EXIT_OK)
}

fn status(e: &Error) -> &'static str {
    match e {
        Error::GaplessPoint { .. } => "gapless",
        Error::UnwrapJump { .. } => "unwrap",
        Error::InvalidParams(_) | Error::InvalidSchedule(_) => "invalid",
        _ => "failed",
    }
}

struct SweepCell {
    coords: Vec<f64>,
    result: Result<(f64, f64, i64), Error>,
}

fn sweep_cell(cfg: &RunConfig, axes: &[AxisName], coords: Vec<f64>) -> SweepCell {
    let (mut w, mut v, mut j, mut t) = (cfg.w, cfg.v, cfg.j, cfg.total_time);
    for (axis, &x) in axes.iter().zip(&coords) {
        match axis {
            AxisName::W => w = x,
            AxisName::V => v = x,
            AxisName::J => j = x,
            AxisName::T => t = x,
        }
    }
    // constant time step along a T axis
    let steps = ((cfg.steps as f64 * t / cfg.total_time).round() as usize).max(1);
    let result = (|| {
        let params = ModelParams::new(w, v, j)?;
        let (a, b) = evolve_pair_with(&params, t, steps, &pair_setup(cfg.schedule))?;
        let pt: PhaseTrace = phase_trace(&params, &a, &b)?;
        let winding = winding_number(&params, cfg.bz_samples)?;
        Ok((pt.final_delta_phi() / PI, pt.min_fidelity(), winding))
    })();
    SweepCell { coords, result }
}

pub(super) fn sweep(cfg: &RunConfig, log: &mut (dyn Write + Send)) -> Result<i32, CliError> {
    if cfg.grid.is_empty() {
        return Err(CliError::Config("sweep needs at least one grid axis".into()));
    }
    check_schedule(cfg.total_time, cfg.steps)?;
    check_bz(cfg)?;
    let axes: Vec<AxisName> = cfg.grid.iter().map(|g| g.name).collect();
    for (i, a) in axes.iter().enumerate() {
        if axes[..i].contains(a) {
            return Err(CliError::Config(format!("axis '{a}' given twice")));
        }
    }
    if let Some(g) = cfg.grid.iter().find(|g| g.name == AxisName::T) {
        if g.values.iter().any(|&t| t <= 0.0) {
            return Err(CliError::Config("T axis values must be positive".into()));
        }
    }

    // row-major: first axis outermost
    let sizes: Vec<usize> = cfg.grid.iter().map(|g| g.values.len()).collect();
    let total: usize = sizes.iter().product();
    let coords = |mut idx: usize| -> Vec<f64> {
        let mut c = vec![0.0; sizes.len()];
        for d in (0..sizes.len()).rev() {
            c[d] = cfg.grid[d].values[idx % sizes[d]];
            idx /= sizes[d];
        }
        c
    };
    let cells: Vec<SweepCell> = (0..total).into_par_iter().map(|i| sweep_cell(cfg, &axes, coords(i))).collect();

    let mut columns: Vec<&'static str> = axes.iter().map(|a| a.column()).collect();
    columns.extend(["delta_phi_final_over_pi", "min_fidelity", "W", "status"]);
    let mut table = Table::new(columns);
    let mut ok = 0usize;
    let mut first_error: Option<&Error> = None;
    for cell in &cells {
        let mut row: Vec<Cell> = cell.coords.iter().map(|&x| Cell::Num(x)).collect();
        match &cell.result {
            Ok((phi, fid, w)) => {
                ok += 1;
                row.extend([Cell::Num(*phi), Cell::Num(*fid), Cell::Int(*w), Cell::Text("ok".into())]);
            }
            Err(e) => {
                first_error.get_or_insert(e);
                row.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Text(status(e).into())]);
            }
        }
        table.push(row);
    }
    writeln!(log, "{ok} of {total} cells succeeded")?;
    if ok == 0 {
        let e = first_error.expect("at least one cell");
        writeln!(log, "first failure: {e}")?;
        return Ok(model_exit_code(e));
    }
    let mut out = Output::new();
    out.table(cfg, "sweep", &table);
    out.commit(&cfg.out, log)?;
    Ok(EXIT_OK)
}

pub(super) fn phase_diagram(cfg: &RunConfig, log: &mut (dyn Write + Send)) -> Result<i32, CliError> {
    check_bz(cfg)?;
    let (mut v_axis, mut j_axis) = (Axis::new(0.0, 5.0, 101)?, Axis::new(0.0, 5.0, 101)?);
    if !cfg.grid.is_empty() {
        let mut seen = (false, false);
        for g in &cfg.grid {
            let (min, max, n) = g
                .range
                .ok_or_else(|| CliError::Config("phase-diagram axes must be given as axis:min:max:n".into()))?;
            match g.name {
                AxisName::V if !seen.0 => {
                    v_axis = Axis::new(min, max, n)?;
                    seen.0 = true;
                }
                AxisName::J if !seen.1 => {
                    j_axis = Axis::new(min, max, n)?;
                    seen.1 = true;
                }
                other => return Err(CliError::Config(format!("phase-diagram takes v and J axes once each, got '{other}'"))),
            }
        }
    }

    let grid = diagram(v_axis, j_axis, cfg.bz_samples)?;
    let mut table = Table::new(vec!["v_over_w", "J_over_w", "W_or_boundary"]);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for (v, j, cell) in grid.rows() {
        let label = match cell {
            DiagramCell::Gapped { winding, .. } => Cell::Int(*winding),
            DiagramCell::Boundary => Cell::Text("boundary".into()),
        };
        let key = match &label {
            Cell::Int(w) => format!("W={w}"),
            _ => "boundary".into(),
        };
        *counts.entry(key).or_default() += 1;
        table.push(vec![Cell::Num(v), Cell::Num(j), label]);
    }
    let summary: Vec<String> = counts.iter().map(|(k, n)| format!("{k}: {n}")).collect();
    writeln!(log, "{}", summary.join(", "))?;
    let mut out = Output::new();
    out.table(cfg, "phase_diagram", &table);
    out.commit(&cfg.out, log)?;
    Ok(EXIT_OK)
}

pub(super) fn labframe(cfg: &RunConfig, log: &mut (dyn Write + Send)) -> Result<i32, CliError> {
    let params = ModelParams::new(cfg.w, cfg.v, cfg.j)?;
    cfg.cavity.validate()?;
    cfg.cavity.check_rwa(&params)?;
    let run = run_lab(&params, &cfg.cavity)?;
    let cmp = &run.comparison;

    let mut table = Table::new(vec!["t", "delta_phi_lab", "delta_phi_rot", "abs_error"]);
    for i in 0..cmp.times.len() {
        table.push(vec![
            Cell::Num(cmp.times[i]),
            Cell::Num(cmp.delta_phi_lab[i]),
            Cell::Num(cmp.delta_phi_rot[i]),
            Cell::Num(cmp.abs_error[i]),
        ]);
    }
    let c = &cfg.cavity;
    let summary = json!({
        "name": cfg.name,
        "params": params_json(&params),
        "f0_hz": json_number(c.f0),
        "g0_hz": json_number(c.g0 / (2.0 * PI)),
        "gamma": json_number(c.gamma),
        "sample_rate": json_number(c.sample_rate),
        "T": json_number(c.total_time),
        "delta_phi_lab_final": json_number(cmp.final_lab()),
        "delta_phi_rot_final": json_number(cmp.final_rot()),
        "abs_error_final": json_number(cmp.final_error()),
        "abs_error_max": json_number(cmp.abs_error.iter().copied().fold(0.0, f64::max)),
    });
    writeln!(
        log,
        "delta_phi_lab(T) = {:.6}, delta_phi_rot(T) = {:.6}, |error| = {:.2e}",
        cmp.final_lab(),
        cmp.final_rot(),
        cmp.final_error()
    )?;

    let mut out = Output::new();
    out.table(cfg, "labtrace", &table);
    out.json("summary.json", &summary);
    if cfg.export_raw {
        for (name, trace) in [("pressure_A.csv", &run.pressure.0), ("pressure_B.csv", &run.pressure.1)] {
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            out.raw(name, buf);
        }
    }
    out.commit(&cfg.out, log)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, result: Result<(bool, String), Error>) -> CheckOutcome {
    match result {
        Ok((passed, detail)) => CheckOutcome { name, passed, detail },
        Err(e) => CheckOutcome { name, passed: false, detail: e.to_string() },
    }
}

const REFERENCE_SETS: [((f64, f64, f64), i64); 5] =
    [((5.0, 1.0, 0.0), 0), ((1.0, 5.0, 0.0), 1), ((4.0, 1.0, 1.0), 0), ((1.0, 4.0, 1.0), 1), ((1.0, 1.0, 4.0), 2)];

fn reference(i: usize) -> ModelParams {
    let ((w, v, j), _) = REFERENCE_SETS[i];
    ModelParams::new(w, v, j).expect("reference parameters are valid")
}

/// The embedded invariant suite run by `zakbench selfcheck`.
pub fn selfcheck() -> Vec<CheckOutcome> {
    let n = 4096;
    let mut checks = Vec::new();

    checks.push(outcome("winding numbers", (|| {
        let mut got = Vec::new();
        for (i, &(_, expected)) in REFERENCE_SETS.iter().enumerate() {
            let p = reference(i);
            let w = winding_number(&p, n)?;
            let roots = roots_inside_unit_disk(&p) as i64;
            got.push(format!("{w}"));
            if w != expected || roots != expected {
                return Ok((false, format!("set {i}: W = {w}, roots = {roots}, expected {expected}")));
            }
        }
        Ok((true, got.join(" ")))
    })()));

    checks.push(outcome("wilson loop", (|| {
        let a = circular_distance(zak_wilson(&reference(1), n)?, PI);
        let b = circular_distance(zak_wilson(&reference(0), n)?, 0.0);
        let c = circular_distance(zak_wilson(&reference(4), n)?, 0.0);
        let d = (theta_unwrapped(&reference(4), PI, n)? - 2.0 * PI).abs();
        let worst = a.max(b).max(c).max(d);
        Ok((worst <= 1e-4, format!("max deviation {worst:.1e}")))
    })()));

    checks.push(outcome("real embedding", (|| {
        let mut ok = true;
        for i in 0..11 {
            for j in 0..11 {
                let d = BlochVector::new(-3.0 + 0.6 * i as f64, -3.0 + 0.6 * j as f64);
                ok &= verify_permutation(&d);
            }
        }
        let mut worst: f64 = 0.0;
        for s in 0..REFERENCE_SETS.len() {
            for m in 0..8 {
                let r = spectral_doubling_check(&reference(s), -PI + 0.8 * m as f64)?;
                ok &= r.passes();
                worst = worst.max(r.spectrum_error.max(r.max_residual));
            }
        }
        Ok((ok, format!("max spectral residual {worst:.1e}")))
    })()));

    checks.push(outcome("representation agreement", (|| {
        let p = reference(3);
        let (ca, cb) = evolve_pair(&p, 20.0, 4000, Representation::Complex2)?;
        let (ra, rb) = evolve_pair(&p, 20.0, 4000, Representation::Real4)?;
        let mut worst: f64 = 0.0;
        for (c, r) in [(&ca, &ra), (&cb, &rb)] {
            for i in 0..c.len() {
                let (x, y) = (c.complex_state(i), r.complex_state(i));
                worst = worst.max((x.u1 - y.u1).norm().max((x.u2 - y.u2).norm()));
            }
        }
        Ok((worst <= 1e-9, format!("max deviation {worst:.1e}")))
    })()));

    let endpoint_runs: Vec<Result<(PhaseTrace, i64), Error>> = (0..REFERENCE_SETS.len())
        .into_par_iter()
        .map(|i| {
            let p = reference(i);
            let (a, b) = evolve_pair(&p, 200.0, 40_000, Representation::Complex2)?;
            Ok((phase_trace(&p, &a, &b)?, REFERENCE_SETS[i].1))
        })
        .collect();

    checks.push(outcome("interferometric endpoints", (|| {
        let mut worst: f64 = 0.0;
        for run in &endpoint_runs {
            let (pt, w) = run.as_ref().map_err(Clone::clone)?;
            worst = worst.max((pt.final_delta_phi() - PI * *w as f64).abs());
        }
        Ok((worst <= 0.05, format!("max |dphi(T) - pi W| = {worst:.1e}")))
    })()));

    checks.push(outcome("dynamical cancellation", (|| {
        let mut worst: f64 = 0.0;
        for run in &endpoint_runs {
            worst = worst.max(run.as_ref().map_err(Clone::clone)?.0.max_dynamical_mismatch());
        }
        Ok((worst <= 1e-10, format!("max |phi_dyn_A - phi_dyn_B| = {worst:.1e}")))
    })()));

    checks.push(outcome("unitarity and global phase", (|| {
        let p = reference(1);
        let (a, b) = evolve_pair(&p, 200.0, 40_000, Representation::Complex2)?;
        let shifted = PairSetup { global_phase: crate::evolve::uniform_preparation_phase(), ..PairSetup::default() };
        let (sa, sb) = evolve_pair_with(&p, 200.0, 40_000, &shifted)?;
        let base = crate::phase::delta_phi(&a, &b)?;
        let moved = crate::phase::delta_phi(&sa, &sb)?;
        let phase_err = base.iter().zip(&moved).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let drift = a.max_norm_drift().max(b.max_norm_drift());
        Ok((phase_err <= 1e-12 && drift <= 1e-9, format!("norm drift {drift:.1e}, phase change {phase_err:.1e}")))
    })()));

    checks
}
