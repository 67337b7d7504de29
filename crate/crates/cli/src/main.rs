//! `syzygy`: simulations, eclipse sequences, and checks of the oscillation
//! equation for the planar three-body problem.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use syzygy::dynamics::{
    detect_eclipses, integrate, integrate_from, lagrange_circular_state, Precision, Trajectory, TwoFloat,
};
use syzygy::eclipse::{EclipseSequence, SequenceReport};
use syzygy::shape::{
    cone_embed, cone_to_sides, conformal_ratio_check, heron_form, intertwiner, ShapePoint,
};
use syzygy::theorem::{
    check_corollary, check_fzdot_monotone, check_recurrence, ode_residual, scan_inequalities, scan_q,
    ResidualOptions,
};
use syzygy::triangle::{jacobi_map, signed_area, squared_sides};
use syzygy::varfinder::{eight_start_phase, find_eight, max_angular_momentum, refine_to_orbit};
use syzygy::{BodyState, MassTriple, Vec2};
use thiserror::Error;


use config::{InitialCondition, RunConfig, EQUATION_TOL};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] syzygy::Error),
    #[error("check failed: {0}")]
    Check(String),
    #[error("run ended in a {0}; partial outputs written")]
    Collision(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Collision(_) => 3,
            CliError::Core(syzygy::Error::Invalid(_)) => 2,
            CliError::Core(syzygy::Error::Terminated { .. } | syzygy::Error::Collision { .. }) => 3,
            CliError::Core(_) | CliError::Check(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "syzygy", version, about = "Three-body eclipses: simulation, sequences and theorem checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate and write trajectory CSV, events CSV and a summary JSON.
    Simulate(Common),
    /// Integrate and report the eclipse sequence (events CSV, sequence JSON and text).
    Eclipses(Common),
    /// Check the oscillation equation and its consequences on the configured run,
    /// plus the q and inequality scans for the configured masses.
    VerifyTheorem2(Common),
    /// Scan both inequalities over the shape hemisphere; CSV plus minima summary.
    ScanInequalities(Common),
    /// Minimize the action from the built-in eight seed and write the loop file.
    FindEight(Common),
    /// Compare numeric and closed-form conformal factors at random shape points.
    ConformalCheck(Common),
    /// Check the Hopf cone and Heron relations on random triangles.
    ConeCheck(Common),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IcKind {
    FigureEight,
    LagrangeCircular,
    LagrangeHomothety,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Double,
    DoubleDouble,
}

/// Flags shared by every subcommand; each overrides the matching config field.
#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON run configuration (unknown keys are rejected).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Masses as a,b,c.
    #[arg(long)]
    masses: Option<String>,
    /// Integration length in time units.
    #[arg(long)]
    tmax: Option<f64>,
    /// Relative integrator tolerance.
    #[arg(long)]
    rtol: Option<f64>,
    /// Absolute integrator tolerance.
    #[arg(long)]
    atol: Option<f64>,
    /// Seed for random initial conditions and random sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (find-eight also accepts a .json file path).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid points per axis for scans.
    #[arg(long)]
    grid: Option<usize>,
    /// Return-map threshold for loop hand-off.
    #[arg(long = "refine-tol")]
    refine_tol: Option<f64>,
    /// Initial condition source.
    #[arg(long, value_enum)]
    ic: Option<IcKind>,
    /// Loop file to start from (a converged loop from find-eight).
    #[arg(long = "loop")]
    loop_file: Option<PathBuf>,
    /// Harmonics for find-eight and the figure-eight source.
    #[arg(long)]
    harmonics: Option<usize>,
    /// Integrator arithmetic.
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
    /// Random samples for cone-check (default 100000) and conformal-check (default 100).
    #[arg(long)]
    samples: Option<usize>,
    /// Shape-velocity directions per grid point in the q scan.
    #[arg(long)]
    directions: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(text) = &self.masses {
            let m: MassTriple = text.parse().map_err(|e: syzygy::Error| CliError::Config(e.to_string()))?;
            cfg.masses = m.masses();
        }
        if let Some(v) = self.tmax {
            cfg.tmax = v;
        }
        if let Some(v) = self.rtol {
            cfg.integrator.rel_tol = v;
        }
        if let Some(v) = self.atol {
            cfg.integrator.abs_tol = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
            if let InitialCondition::RandomZeroJ { seed } = &mut cfg.initial {
                *seed = v;
            }
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.grid {
            cfg.grid = v;
        }
        if let Some(v) = self.refine_tol {
            cfg.refine_tol = v;
        }
        if let Some(v) = self.samples {
            cfg.samples = Some(v);
        }
        if let Some(v) = self.directions {
            cfg.directions = v;
        }
        if let Some(p) = self.precision {
            cfg.integrator.precision = match p {
                PrecisionArg::Double => Precision::Double,
                PrecisionArg::DoubleDouble => Precision::DoubleDouble,
            };
        }
        let harmonics = self.harmonics.or(match cfg.initial {
            InitialCondition::FigureEight { harmonics } => Some(harmonics),
            _ => None,
        });
        if let Some(kind) = self.ic {
            cfg.initial = match kind {
                IcKind::FigureEight => InitialCondition::FigureEight { harmonics: harmonics.unwrap_or(24) },
                IcKind::LagrangeCircular => InitialCondition::LagrangeCircular { side: 1.0 },
                IcKind::LagrangeHomothety => InitialCondition::LagrangeHomothety { size: 1.0, rate: 0.0 },
                IcKind::Random => InitialCondition::RandomZeroJ { seed: cfg.seed },
            };
        } else if let (Some(h), InitialCondition::FigureEight { harmonics }) = (self.harmonics, &mut cfg.initial) {
            *harmonics = h;
        }
        if let Some(path) = &self.loop_file {
            cfg.initial = InitialCondition::LoopFile { path: path.clone(), phase: None };
        }
        if let Some(h) = self.harmonics {
            cfg.harmonics = h;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run_trajectory(cfg: &RunConfig) -> Result<(MassTriple, Trajectory), CliError> {
    let m = cfg.mass_triple()?;
    // The circular Lagrange orbit is unstable; building it directly in
    // double-double keeps the f64 rounding of the start point out of the run.
    if let (InitialCondition::LagrangeCircular { side }, Precision::DoubleDouble) =
        (&cfg.initial, cfg.integrator.precision)
    {
        let y0 = lagrange_circular_state::<TwoFloat>(&m, *side)?;
        return Ok((m, integrate_from(&m, 0.0, y0, cfg.tmax, &cfg.integrator)?));
    }
    let state = cfg.initial_state()?;
    Ok((m, integrate(&m, &state, cfg.tmax, &cfg.integrator)?))
}

fn collision_check(traj: &Trajectory) -> Result<(), CliError> {
    if traj.termination.is_collision() {
        return Err(CliError::Collision(traj.termination.label().to_string()));
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulationSummary {
    masses: [f64; 3],
    initial: InitialCondition,
    tmax: f64,
    termination: syzygy::dynamics::Termination,
    eclipse_count: usize,
    grazing_count: usize,
    sequence: SequenceReport,
    sequence_text: String,
    max_energy_drift: f64,
    max_angular_momentum_drift: f64,
    stats: syzygy::dynamics::StepStats,
}

fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let (m, traj) = run_trajectory(cfg)?;
    let events = detect_eclipses(&traj, &cfg.events)?;
    let seq = EclipseSequence::from_events(&events, false);
    let report = SequenceReport::new(&seq);
    let (de, dj) = traj.conservation_drift()?;
    let summary = SimulationSummary {
        masses: m.masses(),
        initial: cfg.initial.clone(),
        tmax: cfg.tmax,
        termination: traj.termination,
        eclipse_count: seq.len(),
        grazing_count: events.iter().filter(|e| e.grazing).count(),
        sequence_text: report.text(),
        sequence: report,
        max_energy_drift: de,
        max_angular_momentum_drift: dj,
        stats: traj.stats,
    };
    output::write_trajectory(&cfg.out.join("trajectory.csv"), &traj)?;
    output::write_events(&cfg.out.join("events.csv"), &events)?;
    output::write_json(&cfg.out.join("summary.json"), &summary)?;
    println!(
        "{}: {} eclipses ({}), energy drift {:.2e}, |dJ| {:.2e}",
        traj.termination.label(),
        summary.eclipse_count,
        summary.sequence_text,
        de,
        dj
    );
    collision_check(&traj)
}

fn eclipses(cfg: &RunConfig) -> Result<(), CliError> {
    let (_, traj) = run_trajectory(cfg)?;
    let events = detect_eclipses(&traj, &cfg.events)?;
    let report = SequenceReport::new(&EclipseSequence::from_events(&events, false));
    output::write_events(&cfg.out.join("events.csv"), &events)?;
    output::write_json(&cfg.out.join("sequence.json"), &report)?;
    output::write_atomic(&cfg.out.join("sequence.txt"), format!("{}\n", report.text()).as_bytes())?;
    println!("{}", report.text());
    collision_check(&traj)
}

#[derive(Serialize)]
struct Criterion {
    name: &'static str,
    pass: bool,
    detail: serde_json::Value,
}

fn verify(cfg: &RunConfig) -> Result<(), CliError> {
    let (m, traj) = run_trajectory(cfg)?;
    collision_check(&traj)?;
    let events = detect_eclipses(&traj, &cfg.events)?;
    let toggles = cfg.verify;
    let mut criteria = Vec::new();
    let to_json = |v: &dyn erased::Json| v.json();

    if toggles.residual {
        let r = ode_residual(&traj, &cfg.residual)?;
        output::write_json(
            &cfg.out.join("residual.json"),
            &json!({
                "max_residual": r.max_residual,
                "argmax_t": r.argmax_t,
                "h_used": r.h_used,
                "tolerance_pass": r.tolerance_pass,
            }),
        )?;
        criteria.push(Criterion { name: "oscillation-equation residual", pass: r.tolerance_pass, detail: to_json(&r) });
    }
    if toggles.monotone {
        let r = check_fzdot_monotone(&traj, &events, 1e-9)?;
        criteria.push(Criterion { name: "f zdot monotone", pass: r.pass, detail: to_json(&r) });
    }
    if toggles.corollary {
        let r = check_corollary(&traj, &events)?;
        criteria.push(Criterion { name: "one critical point between eclipses", pass: r.pass, detail: to_json(&r) });
    }
    if toggles.recurrence {
        let r = check_recurrence(&traj, &events)?;
        criteria.push(Criterion { name: "eclipse recurrence window", pass: r.pass, detail: to_json(&r) });
    }
    if toggles.q_scan {
        let s = scan_q(&m, cfg.grid, cfg.directions)?;
        let pass = s.min_kinetic_rel.value >= -1e-10 && s.min_potential_rel.value >= -1e-10;
        criteria.push(Criterion { name: "q summands nonnegative", pass, detail: to_json(&s) });
    }
    if toggles.inequality_scan {
        let s = scan_inequalities(&m, cfg.grid)?.summary;
        let pass = s.min_ineq1.value > 0.0
            && s.max_closed_form_deviation < 1e-9
            && s.min_ineq2.value > 0.0
            && s.min_ineq2_equator.value >= 0.0
            && s.min_ineq2_pole.value >= -1e-12;
        criteria.push(Criterion { name: "inequalities", pass, detail: to_json(&s) });
    }
    let diagnostic = if toggles.negated_q_diagnostic {
        let r = ode_residual(&traj, &ResidualOptions { negate_q: true, ..cfg.residual.clone() })?;
        json!({ "negated_q_residual": r.max_residual, "negated_q_pass": r.tolerance_pass })
    } else {
        serde_json::Value::Null
    };
    let pass = criteria.iter().all(|c| c.pass);
    for c in &criteria {
        println!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
    }
    if let Some(r) = diagnostic.get("negated_q_residual") {
        println!("diagnostic: residual with q negated {r} (expected to fail)");
    }
    output::write_json(
        &cfg.out.join("verification.json"),
        &json!({ "masses": m.masses(), "pass": pass, "criteria": criteria, "diagnostics": diagnostic }),
    )?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Check(
            criteria.iter().filter(|c| !c.pass).map(|c| c.name).collect::<Vec<_>>().join(", "),
        ))
    }
}

mod erased {
    pub trait Json {
        fn json(&self) -> serde_json::Value;
    }

    impl<T: serde::Serialize> Json for T {
        fn json(&self) -> serde_json::Value {
            serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
        }
    }
}

fn scan(cfg: &RunConfig) -> Result<(), CliError> {
    let m = cfg.mass_triple()?;
    let s = scan_inequalities(&m, cfg.grid)?;
    output::write_scan(&cfg.out.join("scan.csv"), &s.rows)?;
    output::write_json(&cfg.out.join("scan_summary.json"), &s.summary)?;
    let sm = &s.summary;
    println!(
        "min ineq1 {:.6e} at (phi {:.4}, theta {:.4}); min ineq2 {:.6e} at (phi {:.4}, theta {:.4})",
        sm.min_ineq1.value, sm.min_ineq1.phi, sm.min_ineq1.theta, sm.min_ineq2.value, sm.min_ineq2.phi, sm.min_ineq2.theta
    );
    println!(
        "closed-form deviation {:.2e}; boundary minima: equator {:.6e}, pole {:.2e}",
        sm.max_closed_form_deviation, sm.min_ineq2_equator.value, sm.min_ineq2_pole.value
    );
    if sm.min_ineq1.value > 0.0
        && sm.max_closed_form_deviation < 1e-9
        && sm.min_ineq2.value > 0.0
        && sm.min_ineq2_equator.value >= 0.0
        && sm.min_ineq2_pole.value >= -1e-12
    {
        Ok(())
    } else {
        Err(CliError::Check("inequality scan found a violation".into()))
    }
}

fn find(cfg: &RunConfig) -> Result<(), CliError> {
    let m = cfg.mass_triple()?;
    if !m.is_equal_mass() || m.masses() != [1.0; 3] {
        return Err(CliError::Config("find-eight needs masses 1,1,1".into()));
    }
    let (loop_, report) = find_eight(cfg.harmonics, 4 * cfg.harmonics, EQUATION_TOL, &cfg.minimize)?;
    let orbit = refine_to_orbit(&loop_, eight_start_phase(&loop_), cfg.refine_tol, &cfg.integrator)?;
    let path = output::target(&cfg.out, "loop.json");
    output::write_json(&path, &loop_)?;
    let report_path = path.with_file_name("eight_report.json");
    output::write_json(
        &report_path,
        &json!({
            "action": report,
            "harmonics": loop_.harmonics(),
            "period": loop_.period,
            "max_angular_momentum": max_angular_momentum(&loop_, 256)?,
            "start_phase": eight_start_phase(&loop_),
            "return_mismatch": orbit.mismatch,
            "initial_state": orbit.state.to_record(),
        }),
    )?;
    println!(
        "action {:.12}, gradient {:.2e}, {} harmonics, equation residual {:.2e}, return mismatch {:.2e}",
        report.action,
        report.gradient_norm,
        loop_.harmonics(),
        report.equation_residual,
        orbit.mismatch
    );
    if report.converged {
        Ok(())
    } else {
        Err(CliError::Check(format!("minimizer stopped with gradient {:e}", report.gradient_norm)))
    }
}

fn conformal(cfg: &RunConfig) -> Result<(), CliError> {
    let m = cfg.mass_triple()?;
    let eq = MassTriple::equal();
    let n = cfg.samples.unwrap_or(100);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::with_capacity(n);
    let mut worst: f64 = 0.0;
    println!("{:>10} {:>10} {:>16} {:>16} {:>10}", "phi", "theta", "numeric", "closed", "rel dev");
    while rows.len() < n {
        let phi = rng.gen_range(-1.0f64..1.0).asin();
        let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let dir = rng.gen_range(0.0..std::f64::consts::TAU);
        if phi.cos() < 1e-3 {
            continue;
        }
        let (num, closed) = conformal_ratio_check(&m, &eq, &ShapePoint::unit(phi, theta), (dir.cos(), dir.sin()))?;
        let dev = (num - closed).abs() / closed;
        worst = worst.max(dev);
        println!("{phi:>10.5} {theta:>10.5} {num:>16.12} {closed:>16.12} {dev:>10.2e}");
        rows.push(json!({ "phi": phi, "theta": theta, "numeric": num, "closed": closed }));
    }
    let l = intertwiner(&m, &eq);
    let det_dev = (l.det().norm_sqr() - eq.c() / m.c()).abs() / (eq.c() / m.c());
    let mut inter: f64 = 0.0;
    for _ in 0..n {
        let pos: [Vec2; 3] = std::array::from_fn(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let st = BodyState::at_rest(pos);
        let (a, b) = (l.apply(&jacobi_map(&m, &st)), jacobi_map(&eq, &st));
        let scale = (b.z1.norm_sqr() + b.z2.norm_sqr()).sqrt();
        inter = inter.max(((a.z1 - b.z1).norm_sqr() + (a.z2 - b.z2).norm_sqr()).sqrt() / scale);
    }
    println!("max rel dev {worst:.2e}; |det L|^2 rel dev {det_dev:.2e}; intertwining rel dev {inter:.2e}");
    output::write_json(
        &cfg.out.join("conformal.json"),
        &json!({ "masses": m.masses(), "rows": rows, "max_deviation": worst, "det_deviation": det_dev, "intertwining_deviation": inter }),
    )?;
    if worst < 1e-6 && det_dev < 1e-12 && inter < 1e-12 {
        Ok(())
    } else {
        Err(CliError::Check("conformal relations violated".into()))
    }
}

fn cone(cfg: &RunConfig) -> Result<(), CliError> {
    let n = cfg.samples.unwrap_or(100_000);
    let seed = cfg.seed;
    let (hopf, heron) = (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k));
            let pos: [Vec2; 3] = std::array::from_fn(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let w = cone_embed(&BodyState::at_rest(pos));
            let s = squared_sides(&pos);
            let delta = signed_area(&pos);
            let total: f64 = s.iter().sum();
            let (s2, d2) = cone_to_sides(&w);
            let basis = s.iter().zip(&s2).map(|(a, b)| (a - b).abs()).fold((delta - d2).abs(), f64::max) / total;
            let hopf = (w.minkowski_norm().abs() / (w.w0 * w.w0)).max(basis);
            (hopf, heron_form(&s, delta).abs() / (total * total))
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let exact = 16.0 * signed_area(&[Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0), Vec2::new(0.0, 3.0)]).powi(2);
    println!("{n} triangles: max Hopf cone residual {hopf:.2e}, max Heron residual {heron:.2e}; 3-4-5: 16 Delta^2 = {exact}");
    output::write_json(
        &cfg.out.join("cone_check.json"),
        &json!({ "samples": n, "seed": seed, "hopf_residual": hopf, "heron_residual": heron, "heron_345": exact }),
    )?;
    if hopf < 1e-12 && heron < 1e-12 && exact == 576.0 {
        Ok(())
    } else {
        Err(CliError::Check("cone or Heron residual too large".into()))
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(text) = std::env::var("SYZYGY_THREADS") {
        let n: usize = text.trim().parse().map_err(|_| CliError::Config(format!("SYZYGY_THREADS={text:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(c) => simulate(&c.resolve()?),
        Command::Eclipses(c) => eclipses(&c.resolve()?),
        Command::VerifyTheorem2(c) => verify(&c.resolve()?),
        Command::ScanInequalities(c) => scan(&c.resolve()?),
        Command::FindEight(c) => find(&c.resolve()?),
        Command::ConformalCheck(c) => conformal(&c.resolve()?),
        Command::ConeCheck(c) => cone(&c.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use syzygy::dynamics::EventConfig;

    #[test]
    fn config_event_defaults_match_library() {
        assert_eq!(RunConfig::default().events, EventConfig::default());
    }
}
