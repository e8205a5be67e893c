//! Subcommand implementations. Each one fills a [`RunWriter`] with CSV tables
//! and notes; `main` writes the manifest and maps failures to exit codes.

use std::fmt;

use loscov_core::blockage::{effective_beta, pblk_irregular, pblk_regular};
use loscov_core::irregular::{p_los_association, AssociationInputs};
use loscov_core::joint::{joint_p_los, min_high_rise_count, TierDeployment, TierSpec};
use loscov_core::oracle::{default_window, mc_association, mc_pblk, mc_regular_p_los, RngSpec};
use loscov_core::regular::{
    default_grid_step, grid_evaluate, p_los_at_point, worst_case_p_los, HexLayout, UserPoint,
};
use loscov_core::{BlockageParams, HeightProfile, IrregularDeployment, McEstimate};
use rayon::prelude::*;

use crate::config::{Command, Config, JointMode};
use crate::output::{fmt_num, pretty, RunWriter, Table};

/// Failure carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;
pub const EXIT_ORACLE: i32 = 5;

fn fail(code: i32, message: impl Into<String>) -> anyhow::Error {
    Failure {
        code,
        message: message.into(),
    }
    .into()
}

/// Maps a model error raised at a named parameter point onto an exit code.
fn model_err(e: loscov_core::Error, point: &str) -> anyhow::Error {
    use loscov_core::Error as E;
    let code = match e {
        E::Domain(_) | E::Geometry(_) => EXIT_CONFIG,
        E::Quadrature { .. } => EXIT_NUMERIC,
        E::Infeasible { .. } => EXIT_INFEASIBLE,
    };
    fail(code, format!("{e} at {point}"))
}

/// Options that only matter to the `validate` negative control.
#[derive(Debug, Clone, Copy, Default)]
pub struct Hooks {
    /// Multiplies β on the closed-form side only.
    pub corrupt_beta: Option<f64>,
}

pub fn run(cmd: Command, cfg: &Config, w: &mut RunWriter, hooks: Hooks) -> anyhow::Result<()> {
    match cmd {
        Command::Blocking => blocking(cfg, w),
        Command::Assoc => assoc(cfg, w),
        Command::Regular => regular(cfg, w),
        Command::Joint => joint(cfg, w),
        Command::Validate => validate(cfg, w, hooks),
    }
}

fn profile(cfg: &Config, h_ap: f64, h_max: f64) -> anyhow::Result<HeightProfile> {
    HeightProfile::new(h_ap, cfg.heights.h_ue, h_max).map_err(|e| model_err(e, &format!("h_ap={h_ap} h_max={h_max}")))
}

// Reference values quoted for the default scenarios; a computed row that hits
// one of these parameter points gets a comparison note in the manifest.
const ASSOC_REFERENCE: &[(f64, f64, f64, f64)] = &[(100.0, 3.0, 3.0, 0.93), (100.0, 3.0, 10.0, 0.018)];
const REGULAR_REFERENCE: &[(f64, f64, f64, f64)] = &[(100.0, 3.0, 3.0, 0.8564)];
const HIGH_RISE_REFERENCE: &[(f64, u32, f64)] = &[
    (3.0, 1, 0.9990),
    (5.0, 3, 0.9578),
    (10.0, 25, 0.9636),
    (15.0, 100, 0.9513),
];

fn blocking(cfg: &Config, w: &mut RunWriter) -> anyhow::Result<()> {
    let pts = cfg.sweep_points()?;
    let mut t = Table::new(&["h_ap_m", "h_max_m", "p_blk"]);
    for &hm in &cfg.heights.h_max_values {
        for &hb in &pts {
            let p = profile(cfg, hb, hm)?;
            let pb = pblk_irregular(&p).map_err(|e| model_err(e, "blocking"))?;
            t.push_nums(&[hb, hm, pb.value]);
        }
    }
    w.write_table("blocking.csv", &t)
}

fn association(cfg: &Config, radius: f64, h_ap: f64, h_max: f64) -> anyhow::Result<f64> {
    let point = format!("radius={radius} h_ap={h_ap} h_max={h_max}");
    let p = profile(cfg, h_ap, h_max)?;
    let b = cfg.blockage_params()?;
    let beta_eff = effective_beta(&b, pblk_irregular(&p).map_err(|e| model_err(e, &point))?);
    let dep = IrregularDeployment::from_radius_with(radius, cfg.deployment.lambda_convention)
        .map_err(|e| model_err(e, &point))?;
    let inputs = AssociationInputs::new(dep, beta_eff, cfg.pathloss_params()?)
        .map_err(|e| model_err(e, &point))?;
    p_los_association(&inputs).map_err(|e| model_err(e, &point))
}

fn assoc(cfg: &Config, w: &mut RunWriter) -> anyhow::Result<()> {
    let pts = cfg.sweep_points()?;
    let by_radius = cfg.sweep.variable == "radius";
    let jobs: Vec<(f64, f64)> = cfg
        .heights
        .h_ap_values
        .iter()
        .flat_map(|&hb| pts.iter().map(move |&v| (hb, v)))
        .collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(hb, v)| {
            if by_radius {
                association(cfg, v, hb, cfg.heights.h_max)
            } else {
                association(cfg, cfg.deployment.avg_cell_radius, hb, v)
            }
        })
        .collect::<anyhow::Result<_>>()?;

    let first = if by_radius { "avg_cell_radius_m" } else { "h_max_m" };
    let mut t = Table::new(&[first, "h_ap_m", "p_los"]);
    for (&(hb, v), &p) in jobs.iter().zip(&values) {
        t.push_nums(&[v, hb, p]);
        let (radius, h_max) = if by_radius {
            (v, cfg.heights.h_max)
        } else {
            (cfg.deployment.avg_cell_radius, v)
        };
        for &(r, rb, rm, reference) in ASSOC_REFERENCE {
            if r == radius && rb == hb && rm == h_max && cfg.heights.h_ue == 1.5 {
                w.note(format!(
                    "reference point radius={r} h_ap={rb} h_max={rm}: expected {reference}, computed {} (lambda convention {}, alpha_los={}, alpha_nlos={})",
                    fmt_num(p),
                    cfg.deployment.lambda_convention.name(),
                    cfg.pathloss.alpha_los,
                    cfg.pathloss.alpha_nlos
                ));
            }
        }
    }
    w.write_table("assoc.csv", &t)
}

fn layout(cell_radius: f64) -> anyhow::Result<HexLayout> {
    HexLayout::from_cell_radius(cell_radius).map_err(|e| model_err(e, "layout"))
}

fn grid_step(cfg: &Config, layout: &HexLayout) -> f64 {
    cfg.deployment.grid_step.unwrap_or_else(|| default_grid_step(layout))
}

fn regular(cfg: &Config, w: &mut RunWriter) -> anyhow::Result<()> {
    let lay = layout(cfg.deployment.cell_radius)?;
    let b = cfg.blockage_params()?;
    let step = grid_step(cfg, &lay);
    let p = cfg.profile()?;

    let field = grid_evaluate(&lay, &p, &b, step).map_err(|e| model_err(e, "grid"))?;
    let half = 0.5 * lay.d_inter;
    let mut rows: Vec<(f64, f64, f64)> = Vec::with_capacity(2 * field.len());
    for &(u, v) in &field {
        rows.push((u.x, u.y, v));
        if u.x < half - 1e-9 * lay.d_inter {
            let m = lay.mirror(u);
            rows.push((m.x, m.y, v));
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut grid = Table::new(&["x_m", "y_m", "p_los"]);
    for (x, y, v) in rows {
        grid.push_nums(&[x, y, v]);
    }
    w.write_table("regular_grid.csv", &grid)?;

    let pts = cfg.sweep_points()?;
    let jobs: Vec<(f64, f64)> = cfg
        .heights
        .h_ap_values
        .iter()
        .flat_map(|&hb| pts.iter().map(move |&hm| (hb, hm)))
        .collect();
    let worst: Vec<f64> = jobs
        .par_iter()
        .map(|&(hb, hm)| {
            let p = profile(cfg, hb, hm)?;
            worst_case_p_los(&lay, &p, &b, step)
                .map(|(v, _)| v)
                .map_err(|e| model_err(e, &format!("h_ap={hb} h_max={hm}")))
        })
        .collect::<anyhow::Result<_>>()?;
    let mut t = Table::new(&["h_max_m", "h_ap_m", "worst_p_los"]);
    for (&(hb, hm), &v) in jobs.iter().zip(&worst) {
        t.push_nums(&[hm, hb, v]);
        for &(rc, rb, rm, reference) in REGULAR_REFERENCE {
            if rc == cfg.deployment.cell_radius && rb == hb && rm == hm && cfg.heights.h_ue == 1.5 {
                w.note(format!(
                    "reference worst case R_c={rc} h_ap={rb} h_max={rm}: expected {reference}, computed {}",
                    fmt_num(v)
                ));
            }
        }
    }
    w.write_table("regular_worst.csv", &t)
}

fn joint(cfg: &Config, w: &mut RunWriter) -> anyhow::Result<()> {
    let b = cfg.blockage_params()?;
    let pts = cfg.sweep_points()?;
    let target = cfg.deployment.target;

    let outcomes: Vec<(f64, Result<loscov_core::joint::JointResult, loscov_core::Error>)> = pts
        .par_iter()
        .map(|&hm| -> anyhow::Result<_> {
            let low_profile = profile(cfg, cfg.heights.h_ap, hm)?;
            let high_profile = profile(cfg, cfg.deployment.high_h_ap, hm)?;
            let deployment = match cfg.deployment.mode {
                JointMode::Regular => TierDeployment::RegularWorstCase {
                    layout: layout(cfg.deployment.cell_radius)?,
                    grid_step: cfg.deployment.grid_step,
                },
                JointMode::Irregular => TierDeployment::Irregular {
                    deployment: IrregularDeployment::from_radius_with(
                        cfg.deployment.avg_cell_radius,
                        cfg.deployment.lambda_convention,
                    )?,
                    pathloss: cfg.pathloss_params()?,
                },
            };
            let low = TierSpec {
                profile: low_profile,
                deployment,
            };
            Ok((hm, min_high_rise_count(target, &low, &high_profile, &b)))
        })
        .collect::<anyhow::Result<_>>()?;

    let mut t = Table::new(&["h_max_m", "p_low", "n_high", "p_joint"]);
    let mut infeasible = Vec::new();
    for (hm, outcome) in outcomes {
        match outcome {
            Ok(r) => {
                let n = r.high_rise_count_per_100.expect("search sets the count");
                t.push_nums(&[hm, r.p_low, n as f64, r.p_joint]);
                if let Some(&(_, ref_n, ref_p)) = HIGH_RISE_REFERENCE.iter().find(|row| row.0 == hm) {
                    if cfg.deployment.mode == JointMode::Regular && target == 0.95 {
                        w.note(format!(
                            "reference row h_max={hm}: expected n={ref_n} p_joint={ref_p}, computed n={n} p_joint={} (p_low={}, p_high={})",
                            fmt_num(r.p_joint),
                            fmt_num(r.p_low),
                            fmt_num(r.p_high)
                        ));
                    }
                }
            }
            Err(loscov_core::Error::Infeasible { best, .. }) => {
                let msg = format!(
                    "h_max={hm}: target {target} unreachable with up to 100 high-rise APs per 100; best p_joint {} at n={}",
                    fmt_num(best.p_joint),
                    best.high_rise_count_per_100.unwrap_or(0)
                );
                w.note(msg.clone());
                infeasible.push(msg);
            }
            Err(e) => return Err(model_err(e, &format!("h_max={hm}"))),
        }
    }
    print!("{}", pretty(&t));
    w.write_table("joint.csv", &t)?;

    // fixed-radius irregular variant
    let mut irr = Table::new(&[
        "h_max_m",
        "low_radius_m",
        "p_low",
        "high_radius_m",
        "p_high",
        "p_joint",
    ]);
    let rows: Vec<(f64, f64, f64)> = pts
        .par_iter()
        .map(|&hm| -> anyhow::Result<_> {
            let lo = association(cfg, cfg.deployment.avg_cell_radius, cfg.heights.h_ap, hm)?;
            let hi = association(cfg, cfg.deployment.high_radius, cfg.deployment.high_h_ap, hm)?;
            Ok((hm, lo, hi))
        })
        .collect::<anyhow::Result<_>>()?;
    for (hm, lo, hi) in rows {
        let pj = joint_p_los(lo, hi).map_err(|e| model_err(e, "joint"))?;
        irr.push_nums(&[
            hm,
            cfg.deployment.avg_cell_radius,
            lo,
            cfg.deployment.high_radius,
            hi,
            pj,
        ]);
    }
    print!("{}", pretty(&irr));
    w.write_table("joint_irregular.csv", &irr)?;

    if !infeasible.is_empty() {
        return Err(fail(EXIT_INFEASIBLE, infeasible.join("\n")));
    }
    Ok(())
}

struct Check {
    name: &'static str,
    params: String,
    closed_form: f64,
    estimate: McEstimate,
    tolerance: f64,
}

impl Check {
    fn passed(&self) -> bool {
        (self.closed_form - self.estimate.mean).abs() <= self.tolerance
    }
}

fn validate(cfg: &Config, w: &mut RunWriter, hooks: Hooks) -> anyhow::Result<()> {
    let b = cfg.blockage_params()?;
    let closed_b = BlockageParams::new(b.beta * hooks.corrupt_beta.unwrap_or(1.0))?;
    let pl = cfg.pathloss_params()?;
    let seed = cfg.mc.seed;
    let base_stream = cfg.mc.stream_id;
    let n = cfg.mc.samples;
    let trials = cfg.mc.trials;
    let err = |e: loscov_core::Error| model_err(e, "validate");

    // (label, closure) pairs are evaluated in parallel; each job owns one
    // stream so the outcome does not depend on scheduling.
    enum Job {
        Pblk { hb: f64, hm: f64, r: f64, extent: f64 },
        Assoc { radius: f64, hb: f64, hm: f64, swapped: bool },
        Regular { u: UserPoint, hb: f64, hm: f64 },
    }
    let mut jobs = Vec::new();
    for &hb in &[2.0, 3.0, 5.0, 10.0, 15.0, 30.0, 40.0] {
        for &hm in &[1.5, 3.0, 10.0, 15.0, 30.0] {
            jobs.push(Job::Pblk { hb, hm, r: 100.0, extent: 100.0 });
        }
    }
    jobs.push(Job::Pblk { hb: 3.0, hm: 3.0, r: 50.0, extent: 100.0 });
    jobs.push(Job::Pblk { hb: 30.0, hm: 15.0, r: 80.0, extent: 150.0 });
    for swapped in [false, true] {
        for &(radius, hb) in &[
            (50.0, 30.0),
            (100.0, 3.0),
            (100.0, 30.0),
            (300.0, 30.0),
            (600.0, 30.0),
            (1000.0, 30.0),
        ] {
            jobs.push(Job::Assoc { radius, hb, hm: 15.0, swapped });
        }
    }
    let lay = layout(cfg.deployment.cell_radius)?;
    for u in [lay.centroid(), UserPoint::new(0.3 * lay.d_inter, 0.1 * lay.d_inter), UserPoint::new(0.0, 0.0)] {
        jobs.push(Job::Regular { u, hb: 3.0, hm: 3.0 });
    }
    jobs.push(Job::Regular { u: lay.centroid(), hb: 30.0, hm: 15.0 });

    let checks: Vec<Check> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, job)| -> anyhow::Result<Check> {
            let rng = RngSpec::new(seed, base_stream.wrapping_add(i as u32));
            Ok(match *job {
                Job::Pblk { hb, hm, r, extent } => {
                    let p = profile(cfg, hb, hm)?;
                    let closed = if r == extent {
                        pblk_irregular(&p).map_err(err)?.value
                    } else {
                        pblk_regular(&p, r, extent).map_err(err)?.value
                    };
                    let est = mc_pblk(&p, r, extent, n, rng).map_err(err)?;
                    Check {
                        name: "pblk",
                        params: format!("h_ap={hb} h_max={hm} r={r} extent={extent}"),
                        closed_form: closed,
                        tolerance: 4.0 * est.smoothed_std_err(),
                        estimate: est,
                    }
                }
                Job::Assoc { radius, hb, hm, swapped } => {
                    let p = profile(cfg, hb, hm)?;
                    let pblk = pblk_irregular(&p).map_err(err)?;
                    let dep = IrregularDeployment::from_radius_with(radius, cfg.deployment.lambda_convention)
                        .map_err(err)?;
                    let pl = if swapped { pl.swapped() } else { pl };
                    let truth = AssociationInputs::new(dep, effective_beta(&b, pblk), pl).map_err(err)?;
                    let closed_in =
                        AssociationInputs::new(dep, effective_beta(&closed_b, pblk), pl).map_err(err)?;
                    let closed = p_los_association(&closed_in).map_err(err)?;
                    let est = mc_association(&truth, default_window(&truth), trials, rng).map_err(err)?;
                    Check {
                        name: "association",
                        params: format!(
                            "radius={radius} h_ap={hb} h_max={hm} alpha_los={} alpha_nlos={}",
                            pl.alpha_los, pl.alpha_nlos
                        ),
                        closed_form: closed,
                        tolerance: (4.0 * est.smoothed_std_err()).max(0.01),
                        estimate: est,
                    }
                }
                Job::Regular { u, hb, hm } => {
                    let p = profile(cfg, hb, hm)?;
                    let closed = p_los_at_point(&lay, u, &p, &closed_b).map_err(err)?;
                    let est = mc_regular_p_los(&lay, u, &p, &b, n, rng).map_err(err)?;
                    Check {
                        name: "regular",
                        params: format!("x={} y={} h_ap={hb} h_max={hm}", fmt_num(u.x), fmt_num(u.y)),
                        closed_form: closed,
                        tolerance: 4.0 * est.smoothed_std_err(),
                        estimate: est,
                    }
                }
            })
        })
        .collect::<anyhow::Result<_>>()?;

    let mut t = Table::new(&[
        "check",
        "params",
        "closed_form",
        "mc_mean",
        "mc_std_err",
        "n",
        "tolerance",
        "pass",
    ]);
    let mut failures = 0;
    for c in &checks {
        let ok = c.passed();
        if !ok {
            failures += 1;
        }
        println!(
            "{} {:<12} {:<52} closed={:<12} mc={:<12} delta={:<12} tol={}",
            if ok { "PASS" } else { "FAIL" },
            c.name,
            c.params,
            fmt_num(c.closed_form),
            fmt_num(c.estimate.mean),
            fmt_num(c.closed_form - c.estimate.mean),
            fmt_num(c.tolerance)
        );
        t.push(vec![
            c.name.to_string(),
            c.params.clone(),
            fmt_num(c.closed_form),
            fmt_num(c.estimate.mean),
            fmt_num(c.estimate.std_err),
            c.estimate.n_samples.to_string(),
            fmt_num(c.tolerance),
            ok.to_string(),
        ]);
    }
    if let Some(f) = hooks.corrupt_beta {
        w.note(format!("negative control: closed-form beta scaled by {f}"));
    }
    w.write_table("validate.csv", &t)?;
    println!("{} of {} oracle checks passed", checks.len() - failures, checks.len());
    if failures > 0 {
        return Err(fail(
            EXIT_ORACLE,
            format!("{failures} oracle comparison(s) failed"),
        ));
    }
    Ok(())
}
