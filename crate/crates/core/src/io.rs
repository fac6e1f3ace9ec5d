//! Run drivers and their file outputs.
//!
//! A run directory holds `invariants.csv`, one `snap_<t>.csv` per requested
//! snapshot time and `run.meta`. A sweep writes one run directory per order
//! plus `convergence.csv`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::assembly::Simulation;
use crate::config::RunConfig;
use crate::diagnostics::{Diagnostics, InvariantRecord, PointSample};
use crate::error::{Error, Result};
use crate::fields::{to_reference, Discretization, LevelState, LevelTable, SampleGrid};

pub const INVARIANTS_HEADER: &str = "t,px,py,L,mass,E_kin,E_int,E_tot,picard_iters";
pub const SNAPSHOT_HEADER: &str = "X,Y,x,y,pressure,density,mach";
pub const CONVERGENCE_HEADER: &str = "t,order_a,order_b,max_boundary_diff";

/// Points per side used to compare deformed boundaries across orders.
pub const BOUNDARY_SEGMENTS: usize = 200;

/// Float formatting with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `0.5 -> "0.5"`, `1 -> "1.0"`, `0.25 -> "0.25"`.
pub fn fmt_time(t: f64) -> String {
    let s = format!("{t:.6}");
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_string()
    }
}

pub fn snapshot_name(t: f64) -> String {
    format!("snap_{}.csv", fmt_time(t))
}

pub fn invariant_row(r: &InvariantRecord) -> String {
    [r.t, r.px, r.py, r.l, r.mass, r.e_kin, r.e_int, r.e_tot]
        .iter()
        .map(|&v| fmt_f64(v))
        .chain(std::iter::once(r.picard_iters.to_string()))
        .collect::<Vec<_>>()
        .join(",")
}

/// Parses one data row of `invariants.csv`.
pub fn parse_invariant_row(line: &str) -> Option<InvariantRecord> {
    let f: Vec<&str> = line.trim().split(',').collect();
    if f.len() != 9 {
        return None;
    }
    let v: Vec<f64> = f[..8].iter().map(|s| s.parse().ok()).collect::<Option<_>>()?;
    Some(InvariantRecord {
        t: v[0],
        px: v[1],
        py: v[2],
        l: v[3],
        mass: v[4],
        e_kin: v[5],
        e_int: v[6],
        e_tot: v[7],
        picard_iters: f[8].parse().ok()?,
    })
}

pub fn read_invariants(path: &Path) -> Result<Vec<InvariantRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(INVARIANTS_HEADER) {
        return Err(Error::config(path.display().to_string(), "unexpected header"));
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            parse_invariant_row(l).ok_or_else(|| {
                Error::config(path.display().to_string(), format!("bad row {}", i + 2))
            })
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_line(w: &mut impl Write, path: &Path, line: &str) -> Result<()> {
    writeln!(w, "{line}").map_err(|e| Error::io(path, e))
}

pub fn write_snapshot(path: &Path, samples: &[PointSample]) -> Result<()> {
    let mut w = create(path)?;
    write_line(&mut w, path, SNAPSHOT_HEADER)?;
    for s in samples {
        let row = [s.x_ref, s.y_ref, s.x, s.y, s.pressure, s.density, s.mach]
            .iter()
            .map(|&v| fmt_f64(v))
            .collect::<Vec<_>>()
            .join(",");
        write_line(&mut w, path, &row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Outcome of a completed run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub records: Vec<InvariantRecord>,
    /// `(t, level)` at each snapshot time.
    pub snapshots: Vec<(f64, LevelState)>,
    pub max_mach: f64,
    pub wall_seconds: f64,
}

fn write_meta(cfg: &RunConfig, wall: f64, status: &str, slabs: usize) -> Result<()> {
    let path = cfg.out_dir.join("run.meta");
    let mut text = cfg.to_text();
    text.push_str(&format!(
        "slabs_completed={slabs}\nwall_clock_seconds={wall:.3}\nstatus={status}\n"
    ));
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

struct RunWriter {
    diag: Diagnostics,
    grid: SampleGrid,
    snap_steps: Vec<usize>,
    out_dir: PathBuf,
    inv_path: PathBuf,
    inv: BufWriter<File>,
}

impl RunWriter {
    fn emit(
        &mut self,
        disc: &Discretization,
        step: usize,
        level: &LevelState,
        iters: usize,
        summary: &mut RunSummary,
    ) -> Result<()> {
        let rec = self.diag.record(level, iters)?;
        write_line(&mut self.inv, &self.inv_path, &invariant_row(&rec))?;
        self.inv.flush().map_err(|e| Error::io(&self.inv_path, e))?;
        summary.records.push(rec);
        if self.snap_steps.binary_search(&step).is_ok() {
            let samples = self.diag.point_fields(disc, level, &self.grid);
            for s in &samples {
                if s.mach > summary.max_mach {
                    summary.max_mach = s.mach;
                }
            }
            write_snapshot(&self.out_dir.join(snapshot_name(level.t)), &samples)?;
            summary.snapshots.push((level.t, level.clone()));
        }
        Ok(())
    }
}

/// Runs one configuration and writes its artifacts into `cfg.out_dir`.
///
/// On a solver error the rows written so far stay on disk and `run.meta`
/// records the failure.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let started = Instant::now();
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let law = cfg.material()?;
    let mut sim = Simulation::new(cfg.order, cfg.t_order, law, cfg.solver_config())?;
    let n_steps = cfg.n_steps()?;
    let inv_path = cfg.out_dir.join("invariants.csv");
    let mut writer = RunWriter {
        diag: Diagnostics::new(sim.discretization(), law),
        grid: SampleGrid::new(cfg.sample_resolution, 1.0)?,
        snap_steps: cfg.snapshot_steps(),
        out_dir: cfg.out_dir.clone(),
        inv: create(&inv_path)?,
        inv_path,
    };
    write_line(&mut writer.inv, &writer.inv_path, INVARIANTS_HEADER)?;
    let mut summary = RunSummary {
        records: Vec::with_capacity(n_steps + 1),
        snapshots: Vec::new(),
        max_mach: 0.0,
        wall_seconds: 0.0,
    };

    let mut body = || -> Result<()> {
        let start = sim.current().clone();
        writer.emit(sim.discretization(), 0, &start, 0, &mut summary)?;
        for step in 1..=n_steps {
            let sol = sim.step()?;
            writer.emit(sim.discretization(), step, &sol.end, sol.iterations, &mut summary)?;
        }
        Ok(())
    };
    let outcome = body();
    let wall = started.elapsed().as_secs_f64();
    let status = match &outcome {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("error: {e}"),
    };
    write_meta(cfg, wall, &status, sim.slabs_done())?;
    outcome?;
    summary.wall_seconds = wall;
    Ok(summary)
}

/// Deformed boundary of a time level sampled counter-clockwise from the
/// origin, `BOUNDARY_SEGMENTS + 1` points per side.
pub fn boundary_positions(disc: &Discretization, level: &LevelState) -> Vec<(f64, f64)> {
    let m = BOUNDARY_SEGMENTS;
    let s: Vec<f64> = (0..=m).map(|a| a as f64 / m as f64).collect();
    let mut pts = Vec::with_capacity(4 * (m + 1));
    pts.extend(s.iter().map(|&t| (t, 0.0)));
    pts.extend(s.iter().map(|&t| (1.0, t)));
    pts.extend(s.iter().rev().map(|&t| (t, 1.0)));
    pts.extend(s.iter().rev().map(|&t| (0.0, t)));
    let n1 = disc.order() + 1;
    pts.into_iter()
        .map(|(x, y)| {
            let tx = LevelTable::new(&disc.space, &[to_reference(x)]);
            let ty = LevelTable::new(&disc.space, &[to_reference(y)]);
            let mut p = (0.0, 0.0);
            for j in 0..n1 {
                for i in 0..n1 {
                    let h = tx.nodal[(0, i)] * ty.nodal[(0, j)];
                    p.0 += h * level.phi_x[i + n1 * j];
                    p.1 += h * level.phi_y[i + n1 * j];
                }
            }
            p
        })
        .collect()
}

/// Largest pointwise distance between two sampled boundaries.
pub fn max_boundary_difference(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p.0 - q.0).hypot(p.1 - q.1))
        .fold(0.0, f64::max)
}

/// One row of `convergence.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub t: f64,
    pub order_a: usize,
    pub order_b: usize,
    pub max_boundary_diff: f64,
}

#[derive(Debug)]
pub struct SweepSummary {
    pub rows: Vec<ConvergenceRow>,
    /// Orders whose run failed, with the error.
    pub failures: Vec<(usize, Error)>,
}

/// Runs `base` once per order into `<out_dir>/order_<N>` and compares the
/// deformed boundaries of consecutive orders at every shared snapshot time
/// (the final time if none are configured).
pub fn sweep(base: &RunConfig, orders: &[usize]) -> Result<SweepSummary> {
    if orders.is_empty() {
        return Err(Error::config("orders", "at least one order required"));
    }
    fs::create_dir_all(&base.out_dir).map_err(|e| Error::io(&base.out_dir, e))?;
    let mut cfg = base.clone();
    if cfg.snapshot_times.is_empty() {
        cfg.snapshot_times.push(cfg.t_final);
    }
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (idx, &order) in orders.iter().enumerate() {
        let mut c = cfg.clone();
        c.order = order;
        c.quad_points = base.quad_points;
        let name = if orders[..idx].contains(&order) {
            format!("order_{order}_{idx}")
        } else {
            format!("order_{order}")
        };
        c.out_dir = base.out_dir.join(name);
        match run(&c).and_then(|s| Ok((Discretization::new(order, c.t_order)?, s))) {
            Ok((disc, s)) => {
                let bounds: Vec<(f64, Vec<(f64, f64)>)> = s
                    .snapshots
                    .iter()
                    .map(|(t, level)| (*t, boundary_positions(&disc, level)))
                    .collect();
                results.push(Some((order, bounds)));
            }
            Err(e) => {
                results.push(None);
                failures.push((order, e));
            }
        }
    }
    let mut rows = Vec::new();
    for pair in results.windows(2) {
        if let [Some((oa, ba)), Some((ob, bb))] = pair {
            for ((t, a), (_, b)) in ba.iter().zip(bb) {
                rows.push(ConvergenceRow {
                    t: *t,
                    order_a: *oa,
                    order_b: *ob,
                    max_boundary_diff: max_boundary_difference(a, b),
                });
            }
        }
    }
    let path = base.out_dir.join("convergence.csv");
    let mut w = create(&path)?;
    write_line(&mut w, &path, CONVERGENCE_HEADER)?;
    for r in &rows {
        let line = format!(
            "{},{},{},{}",
            fmt_f64(r.t),
            r.order_a,
            r.order_b,
            fmt_f64(r.max_boundary_diff)
        );
        write_line(&mut w, &path, &line)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(SweepSummary { rows, failures })
}
