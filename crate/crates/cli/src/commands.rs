use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use dsw_core::hodograph::{dispersionless_profile, edge_laws, solve_cubic_modulation, CubicBreakData, HodographError};
use dsw_core::hydro::{char_velocities, invariants_from_state, state_from_invariants, Branch, HydroState};
use dsw_core::onephase::{density_at_phase, envelope, modulus, wave_params, Interval, ModulationState, SignSet};
use dsw_core::pde::{
    evolve, evolve_with_snapshots, fan_offset, init_from_step, mass, measure, mirror_position, oscillation_edges,
    plane_wave_frequency, FanScan, FieldState, Grid, PdeError, SolverConfig,
};
use dsw_core::riemann::{build_pattern, RegionKind, StepData, WavePattern};

use crate::output::{to_json, write_csv, write_text};
use crate::CliError;

/// Uniform sample points `a:b:n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Span {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.a];
        }
        (0..self.n).map(|i| self.a + (self.b - self.a) * i as f64 / (self.n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridArgs {
    pub n: usize,
    pub length: f64,
    pub width: f64,
    pub dt: Option<f64>,
    pub dealias: f64,
}

fn pde_err(e: PdeError) -> CliError {
    match e {
        PdeError::Instability { time, max_amplitude, initial_amplitude } => {
            CliError::Instability { time, max_amplitude, initial_amplitude }
        }
        PdeError::Grid { .. } | PdeError::Resolution { .. } | PdeError::Config(_) => CliError::Input(e.to_string()),
    }
}

fn step_data(left: HydroState, right: HydroState) -> Result<StepData, CliError> {
    StepData::new(left, right).map_err(|e| CliError::Input(e.to_string()))
}

fn pattern(sd: &StepData) -> Result<WavePattern, CliError> {
    build_pattern(sd).map_err(|e| CliError::Solver(e.to_string()))
}

fn positive_time(t: f64) -> Result<(), CliError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(CliError::Input(format!("time must be positive, got {t}")))
    }
}

#[derive(Serialize)]
struct ClassifyOut<'a> {
    case: dsw_core::riemann::CaseLetter,
    side: dsw_core::riemann::Side,
    regions: &'a [dsw_core::riemann::Region],
    edge_speeds: &'a [f64],
    plateaus: &'a [dsw_core::hydro::DispersionlessPair],
    vacuum_flags: dsw_core::riemann::VacuumFlags,
}

pub fn classify(left: HydroState, right: HydroState) -> Result<String, CliError> {
    let p = pattern(&step_data(left, right)?)?;
    Ok(to_json(&ClassifyOut {
        case: p.case.letter,
        side: p.case.side,
        regions: &p.regions,
        edge_speeds: &p.edge_speeds,
        plateaus: &p.plateaus,
        vacuum_flags: p.vacuum_flags,
    }))
}

/// Whitham profile in both density mappings; the envelope is that of the mapping of the left state.
pub fn profile(left: HydroState, right: HydroState, t: f64, xs: Span, out: Option<&Path>) -> Result<(), CliError> {
    positive_time(t)?;
    let p = pattern(&step_data(left, right)?)?;
    let col = p.physical_column();
    let rows: Result<Vec<Vec<f64>>, _> = xs
        .points()
        .par_iter()
        .map(|&x| {
            let s = p.sample(x, t)?;
            let e = s.column(col);
            Ok(vec![x, s.upper.rho, s.upper.nu, s.lower.rho, s.lower.nu, e.envelope_min, e.envelope_max])
        })
        .collect();
    let rows = rows.map_err(|e: dsw_core::riemann::RiemannError| CliError::Solver(e.to_string()))?;
    let header = ["x", "rho_upper", "nu_upper", "rho_lower", "nu_lower", "envelope_min", "envelope_max"];
    write_csv(out, &header, &rows)?;
    Ok(())
}

fn solver_config(g: &GridArgs, snapshots: Vec<f64>) -> SolverConfig {
    SolverConfig {
        dt: g.dt,
        dealias_fraction: g.dealias,
        smoothing_width: g.width,
        snapshot_times: snapshots,
        ..Default::default()
    }
}

#[derive(Serialize)]
struct SnapshotOut {
    time: f64,
    file: String,
    mass: f64,
}

#[derive(Serialize)]
struct SimulateOut {
    t: f64,
    n_points: usize,
    length: f64,
    smoothing_width: f64,
    mirror_position: f64,
    mass_initial: f64,
    mass_final: f64,
    mass_relative_drift: f64,
    snapshots: Vec<SnapshotOut>,
}

fn snapshot_rows(g: &Grid, fs: &FieldState) -> Vec<Vec<f64>> {
    let obs = measure(g, fs);
    (0..g.n_points).map(|j| vec![g.nodes[j], fs.u[j].re, fs.u[j].im, obs.rho[j], obs.nu[j]]).collect()
}

pub fn simulate(
    left: HydroState,
    right: HydroState,
    t: f64,
    grid: &GridArgs,
    snapshots: &[f64],
    out_dir: &Path,
) -> Result<String, CliError> {
    positive_time(t)?;
    let sd = step_data(left, right)?;
    let g = Grid::new(grid.n, grid.length).map_err(pde_err)?;
    let fs = init_from_step(&g, &sd, grid.width).map_err(pde_err)?;
    let mut times: Vec<f64> = snapshots.iter().copied().filter(|&s| s < t).collect();
    if let Some(bad) = times.iter().find(|s| !(**s >= 0.0)) {
        return Err(CliError::Input(format!("snapshot times must lie in [0, t), got {bad}")));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    let states = evolve_with_snapshots(&g, &fs, t, &solver_config(grid, times)).map_err(pde_err)?;
    std::fs::create_dir_all(out_dir)?;
    let m0 = mass(&g, &fs);
    let mut snaps = Vec::new();
    for (i, s) in states.iter().enumerate() {
        let file = format!("snapshot_{i:03}.csv");
        write_csv(Some(&out_dir.join(&file)), &["x", "re_u", "im_u", "rho", "nu"], &snapshot_rows(&g, s))?;
        snaps.push(SnapshotOut { time: s.time, file, mass: mass(&g, s) });
    }
    let m1 = snaps.last().map_or(m0, |s| s.mass);
    let report = to_json(&SimulateOut {
        t,
        n_points: g.n_points,
        length: g.length,
        smoothing_width: grid.width,
        mirror_position: mirror_position(&g, &sd),
        mass_initial: m0,
        mass_final: m1,
        mass_relative_drift: (m1 - m0).abs() / m0.abs().max(f64::MIN_POSITIVE),
        snapshots: snaps,
    });
    write_text(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

#[derive(Serialize)]
struct EdgeOut {
    /// Boundary between regions `region` and `region + 1`.
    region: usize,
    kind: &'static str,
    analytic: f64,
    measured: Option<f64>,
    rel_error: Option<f64>,
}

#[derive(Serialize)]
struct PlateauOut {
    region: usize,
    analytic: f64,
    measured: f64,
    rel_error: f64,
}

#[derive(Serialize)]
struct CompareOut {
    t: f64,
    n_points: usize,
    length: f64,
    smoothing_width: f64,
    case: dsw_core::riemann::CaseLetter,
    side: dsw_core::riemann::Side,
    window: [f64; 2],
    mass_relative_drift: f64,
    plateaus: Vec<PlateauOut>,
    edges: Vec<EdgeOut>,
}

fn is_fan(k: RegionKind) -> bool {
    matches!(k, RegionKind::Rarefaction(_) | RegionKind::Vacuum)
}

fn is_oscillatory(k: RegionKind) -> bool {
    matches!(k, RegionKind::CnoidalDsw(_) | RegionKind::ContactDsw | RegionKind::PeriodicWave)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Direct simulation against the Whitham pattern: interior plateau densities and edge positions.
///
/// Rarefaction edges are the predicted edges shifted by the fan offset (interior level
/// crossings); oscillatory groups are bounded by their first and last turning points at 5% of
/// the density jump.
pub fn compare(left: HydroState, right: HydroState, t: f64, grid: &GridArgs) -> Result<String, CliError> {
    positive_time(t)?;
    let sd = step_data(left, right)?;
    let p = pattern(&sd)?;
    let g = Grid::new(grid.n, grid.length).map_err(pde_err)?;
    let fs = init_from_step(&g, &sd, grid.width).map_err(pde_err)?;
    let out = evolve(&g, &fs, t, &solver_config(grid, Vec::new())).map_err(pde_err)?;
    let obs = measure(&g, &out);
    let drift = rel(mass(&g, &out), mass(&g, &fs));

    let fastest = [sd.left, sd.right]
        .iter()
        .map(|s| {
            let (a, b) = char_velocities(invariants_from_state(*s).expect("validated state"));
            a.min(b)
        })
        .fold(0.0f64, f64::min);
    let window = [-0.48 * g.length, mirror_position(&g, &sd) + 1.3 * fastest * t];
    let edges_t: Vec<f64> = p.edge_speeds.iter().map(|s| s * t).collect();
    let (lo, hi) = edges_t.iter().fold((0.0f64, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    if lo * 1.2 < window[0] || hi + 0.1 * (hi - lo) + 5.0 > window[1] {
        return Err(CliError::Input(format!(
            "domain too short: pattern spans [{lo}, {hi}] at t = {t}, analysis window is [{}, {}]",
            window[0], window[1]
        )));
    }
    let col = p.physical_column();
    let yw: Vec<f64> = g.nodes.iter().map(|&x| p.sample(x, t).map_or(f64::NAN, |s| s.column(col).rho)).collect();
    let rho = &obs.rho;
    let regs = &p.regions;
    // region extents on the grid, clipped to the window
    let span = |i: usize| (regs[i].z_left * t).max(window[0]).min(window[1])..=(regs[i].z_right * t).min(window[1]).max(window[0]);
    let centre = |i: usize| {
        let r = span(i);
        0.5 * (r.start() + r.end())
    };
    let mean = |a: f64, b: f64| {
        let v: Vec<f64> = g.nodes.iter().zip(rho).filter(|(x, _)| **x >= a && **x <= b).map(|(_, r)| *r).collect();
        if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 }
    };

    // measured and analytic density of each plateau
    let mut level = Vec::with_capacity(regs.len());
    let mut plateaus = Vec::new();
    for (i, r) in regs.iter().enumerate() {
        let analytic = p.sample(centre(i), t).map_or(f64::NAN, |s| s.column(col).rho);
        if r.kind != RegionKind::Plateau {
            level.push((f64::NAN, f64::NAN));
            continue;
        }
        let interior = r.z_left.is_finite() && r.z_right.is_finite();
        let measured = if interior {
            let (a, b) = (r.z_left * t, r.z_right * t);
            let q = 0.25 * (b - a);
            mean(a + q, b - q)
        } else {
            analytic
        };
        if interior {
            plateaus.push(PlateauOut { region: i, analytic, measured, rel_error: rel(measured, analytic) });
        }
        level.push((measured, analytic));
    }

    let jump = (sd.left.rho - sd.right.rho).abs();
    let mut edges = Vec::new();
    let mut i = 0;
    while i < regs.len() {
        let k = regs[i].kind;
        if is_fan(k) {
            let (prev, next) = (i.checked_sub(1), (i + 1 < regs.len()).then_some(i + 1));
            let outer = |j: Option<usize>, fallback: f64| j.map_or(fallback, centre);
            let lv = |j: Option<usize>, side: f64| match j {
                Some(j) if !level[j].0.is_nan() => level[j],
                _ => {
                    let v = p.sample(side, t).map_or(f64::NAN, |s| s.column(col).rho);
                    (v, v)
                }
            };
            let (xa, xb) = (outer(prev, window[0]), outer(next, window[1]));
            let (from, to) = (lv(prev, xa), lv(next, xb));
            for (right_side, z) in [(false, regs[i].z_left), (true, regs[i].z_right)] {
                if !z.is_finite() {
                    continue;
                }
                let scan = if right_side {
                    FanScan { start: xb, stop: xa, from: to, to: from }
                } else {
                    FanScan { start: xa, stop: xb, from, to }
                };
                let measured = fan_offset(&g.nodes, rho, &yw, &scan).map(|d| z * t + d);
                edges.push(EdgeOut {
                    region: if right_side { i } else { i - 1 },
                    kind: "rarefaction",
                    analytic: z * t,
                    measured,
                    rel_error: measured.map(|m| rel(m, z * t)),
                });
            }
            i += 1;
        } else if is_oscillatory(k) {
            let first = i;
            while i + 1 < regs.len() && is_oscillatory(regs[i + 1].kind) {
                i += 1;
            }
            let last = i;
            let xa = first.checked_sub(1).map_or(window[0], centre);
            let xb = if last + 1 < regs.len() { centre(last + 1) } else { window[1] };
            let osc = oscillation_edges(&g.nodes, rho, xa, xb, 0.05 * jump);
            for (j, z, m) in [
                (first.saturating_sub(1), regs[first].z_left, osc.map(|o| o.0)),
                (last, regs[last].z_right, osc.map(|o| o.1)),
            ] {
                edges.push(EdgeOut {
                    region: j,
                    kind: "oscillation",
                    analytic: z * t,
                    measured: m,
                    rel_error: m.map(|m| rel(m, z * t)),
                });
            }
            i += 1;
        } else {
            i += 1;
        }
    }
    edges.sort_by(|a, b| a.analytic.total_cmp(&b.analytic));
    edges.dedup_by(|a, b| a.analytic == b.analytic && a.kind == b.kind);
    Ok(to_json(&CompareOut {
        t,
        n_points: g.n_points,
        length: g.length,
        smoothing_width: grid.width,
        case: p.case.letter,
        side: p.case.side,
        window,
        mass_relative_drift: drift,
        plateaus,
        edges,
    }))
}

#[derive(Serialize)]
struct CubicOut {
    t: f64,
    l_minus: f64,
    l_plus: f64,
    x_left: f64,
    x_right: f64,
    l4_soliton: f64,
    l4_harmonic: f64,
}

/// Density interval of the cubic-breaking wave that collapses at the harmonic edge l3 = l4.
fn cubic_interval(d: &CubicBreakData) -> Interval {
    let l = [d.l_minus, d.l_plus, d.l_plus + 1.0, d.l_plus + 1.0];
    let wp = wave_params(&ModulationState { l, signs: SignSet::Upper }, Interval::High);
    if (wp.rho[3] - wp.rho[2]).abs() <= (wp.rho[1] - wp.rho[0]).abs() {
        Interval::High
    } else {
        Interval::Low
    }
}

/// Period average of the density of the wave with invariants `l`.
fn mean_density(l: [f64; 4], interval: Interval) -> f64 {
    let wp = wave_params(&ModulationState { l, signs: SignSet::Upper }, interval);
    let m = modulus(l);
    let n = 256;
    (0..n).map(|j| density_at_phase(2.0 * std::f64::consts::PI * j as f64 / n as f64, &wp, m)).sum::<f64>() / n as f64
}

/// Modulation of the cubic-breaking problem: CSV rows (x, l3, l4, rho, envelope_min, envelope_max)
/// and the edge positions as JSON. Outside the fan l3 = l4 = l₊ and rho is the dispersionless density;
/// inside, rho is the period-averaged density of the local wave.
pub fn cubic(l_minus: f64, l_plus: f64, t: f64, xs: Option<Span>, csv: &Path) -> Result<String, CliError> {
    let d = CubicBreakData::new(l_minus, l_plus).map_err(|e| CliError::Input(e.to_string()))?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(CliError::Input(format!("time must be non-negative, got {t}")));
    }
    let e = edge_laws(t, &d).map_err(|e| CliError::Solver(e.to_string()))?;
    {
        let xs = xs.unwrap_or(Span { a: 1.5 * e.x_left - 5.0, b: 0.5 * e.x_right + 5.0, n: 401 });
        let interval = cubic_interval(&d);
        let rows: Result<Vec<Vec<f64>>, CliError> = xs
            .points()
            .par_iter()
            .map(|&x| {
                if t > 0.0 && x > e.x_left && x < e.x_right {
                    let ms = solve_cubic_modulation(x, t, &d).map_err(|e| CliError::Solver(e.to_string()))?;
                    let (lo, hi) = envelope(&wave_params(&ms, interval));
                    Ok(vec![x, ms.l[2], ms.l[3], mean_density(ms.l, interval), lo, hi])
                } else {
                    // no physical root (l₊ < l₋) leaves a gap in the table
                    let pair = match dispersionless_profile(x, t, &d) {
                        Ok(pair) => pair,
                        Err(HodographError::OutOfRegion { .. }) => return Ok(vec![x, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN]),
                        Err(e) => return Err(CliError::Solver(e.to_string())),
                    };
                    let r = state_from_invariants(pair, Branch::Upper).rho;
                    Ok(vec![x, pair.l_plus, pair.l_plus, r, r, r])
                }
            })
            .collect();
        write_csv(Some(csv), &["x", "l3", "l4", "rho", "envelope_min", "envelope_max"], &rows?)?;
    }
    Ok(to_json(&CubicOut {
        t,
        l_minus,
        l_plus,
        x_left: e.x_left + 0.0,
        x_right: e.x_right + 0.0,
        l4_soliton: e.l4_soliton,
        l4_harmonic: e.l4_harmonic,
    }))
}

#[derive(Serialize)]
struct DispersionOut {
    k: f64,
    amp: f64,
    /// Amplitude actually simulated; a zero amplitude carries no phase, so a 1e-8 probe is used.
    probe_amplitude: f64,
    omega_measured: f64,
    omega_analytic: f64,
    rel_error: f64,
}

pub const PROBE_AMPLITUDE: f64 = 1e-8;

pub fn dispersion_test(k: f64, amp: f64) -> Result<String, CliError> {
    if !(k.is_finite() && k != 0.0 && amp.is_finite() && amp >= 0.0) {
        return Err(CliError::Input(format!("need k != 0 and amp >= 0, got k = {k}, amp = {amp}")));
    }
    let analytic = -k.powi(3) - 3.0 * amp * amp * k * k - 0.75 * amp.powi(4) * k;
    let probe = amp.max(PROBE_AMPLITUDE);
    let measured = plane_wave_frequency(k, probe).map_err(pde_err)?;
    Ok(to_json(&DispersionOut {
        k,
        amp,
        probe_amplitude: probe,
        omega_measured: measured,
        omega_analytic: analytic,
        rel_error: rel(measured, analytic),
    }))
}

/// Renders selected CSV columns against the first (or `x_col`) column.
pub fn plot(csv_path: &Path, out: &Path, x_col: Option<&str>, y_cols: &[String], title: Option<&str>) -> Result<(), CliError> {
    let mut rdr = csv::Reader::from_path(csv_path).map_err(|e| CliError::Input(format!("{}: {e}", csv_path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Input(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("no column {name:?} in {}", csv_path.display())))
    };
    let xi = match x_col {
        Some(n) => find(n)?,
        None => 0,
    };
    let yi: Vec<usize> = if y_cols.is_empty() {
        (0..header.len()).filter(|&i| i != xi).collect()
    } else {
        y_cols.iter().map(|n| find(n)).collect::<Result<_, _>>()?
    };
    let mut cols = vec![Vec::new(); header.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Input(e.to_string()))?;
        for (c, field) in cols.iter_mut().zip(rec.iter()) {
            c.push(field.trim().parse::<f64>().unwrap_or(f64::NAN));
        }
    }
    let series: Vec<crate::svg::Series> =
        yi.iter().map(|&i| crate::svg::Series { name: header[i].clone(), y: cols[i].clone() }).collect();
    let default_title = csv_path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let svg = crate::svg::render(title.unwrap_or(&default_title), &header[xi], &cols[xi], &series)
        .ok_or_else(|| CliError::Input(format!("{}: nothing to plot", csv_path.display())))?;
    std::fs::write(out, svg)?;
    Ok(())
}

/// Diagnostics printed on stderr for failures.
pub fn diagnostics(e: &CliError) -> String {
    #[derive(Serialize)]
    struct Diag<'a> {
        error: String,
        kind: &'a str,
        #[serde(skip_serializing_if = "Option::is_none")]
        time: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        max_amplitude: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        initial_amplitude: Option<f64>,
    }
    let (time, max_amplitude, initial_amplitude) = match e {
        CliError::Instability { time, max_amplitude, initial_amplitude } => {
            (Some(*time), Some(*max_amplitude), Some(*initial_amplitude))
        }
        _ => (None, None, None),
    };
    to_json(&Diag { error: e.to_string(), kind: e.kind(), time, max_amplitude, initial_amplitude })
}
