//! Acceptance criteria. Prints one PASS/FAIL line per criterion, then fails if
//! any criterion missed its tolerance.

use std::path::Path;
use std::process::Command;

use loscov_core::blockage::{effective_beta, pblk_irregular, pblk_regular};
use loscov_core::irregular::{
    antiderivative_u, p_los_association, prob_at_least_one_los, AssociationInputs,
};
use loscov_core::joint::{joint_p_los, min_high_rise_count, JointResult, TierDeployment, TierSpec};
use loscov_core::oracle::{default_window, mc_association, mc_pblk, mc_regular_p_los, RngSpec};
use loscov_core::quadrature::{integrate_with_breaks, QuadOptions};
use loscov_core::regular::{
    default_grid_step, geometry_at, half_triangle_grid, p_los_at_point, printed_boundary_dists,
    worst_case_p_los, HexLayout, UserPoint,
};
use loscov_core::{
    BlockageParams, Error, HeightProfile, IrregularDeployment, LambdaConvention, PathLossParams,
};

const SEED: u64 = 20_160_523;

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn prof(hb: f64, hm: f64) -> HeightProfile {
    HeightProfile::new(hb, 1.5, hm).unwrap()
}

fn pblk(hb: f64, hm: f64) -> f64 {
    pblk_irregular(&prof(hb, hm)).unwrap().value
}

fn assoc(radius: f64, hb: f64, hm: f64, conv: LambdaConvention, pl: PathLossParams) -> f64 {
    let be = effective_beta(&BlockageParams::default(), pblk_irregular(&prof(hb, hm)).unwrap());
    let dep = IrregularDeployment::from_radius_with(radius, conv).unwrap();
    p_los_association(&AssociationInputs::new(dep, be, pl).unwrap()).unwrap()
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

fn blocking_anchors() -> Outcome {
    let a = pblk(3.0, 3.0);
    let b = pblk(10.0, 3.0);
    let c = pblk(10.0, 10.0);
    let d = pblk(40.0, 10.0);
    let pass = a == 0.25
        && within(b, 0.0441, 1e-4)
        && b < 0.05
        && c == 0.425
        && within(d, 0.0938, 1e-4)
        && d < 0.1;
    Outcome {
        id: 1,
        title: "blocking-probability anchors",
        pass,
        detail: format!("(3,3)={a} (10,3)={b:.6} (10,10)={c} (40,10)={d:.6}"),
    }
}

fn oracle_suite() -> Outcome {
    let mut worst_pblk: f64 = 0.0;
    let mut pblk_ok = true;
    let mut stream = 0;
    for hb in [2.0, 3.0, 5.0, 10.0, 15.0, 30.0, 40.0] {
        for hm in [1.5, 3.0, 10.0, 15.0, 30.0] {
            let p = prof(hb, hm);
            let closed = pblk_irregular(&p).unwrap().value;
            let est = mc_pblk(&p, 100.0, 100.0, 1_000_000, RngSpec::new(SEED, stream)).unwrap();
            stream += 1;
            let dev = (closed - est.mean).abs();
            pblk_ok &= dev <= 4.0 * est.std_err;
            if est.std_err > 0.0 {
                worst_pblk = worst_pblk.max(dev / est.std_err);
            }
        }
    }
    let mut assoc_ok = true;
    let mut worst_assoc: f64 = 0.0;
    let mut n_assoc = 0;
    for pl in [PathLossParams::default(), PathLossParams::default().swapped()] {
        for (radius, hb) in [
            (50.0, 30.0),
            (100.0, 3.0),
            (100.0, 30.0),
            (300.0, 30.0),
            (600.0, 30.0),
            (1000.0, 30.0),
        ] {
            let be = effective_beta(&BlockageParams::default(), pblk_irregular(&prof(hb, 15.0)).unwrap());
            let inp = AssociationInputs::new(IrregularDeployment::from_radius(radius).unwrap(), be, pl).unwrap();
            let closed = p_los_association(&inp).unwrap();
            let est = mc_association(&inp, default_window(&inp), 100_000, RngSpec::new(SEED, stream)).unwrap();
            stream += 1;
            n_assoc += 1;
            let dev = (closed - est.mean).abs();
            assoc_ok &= dev <= (4.0 * est.std_err).max(0.01);
            worst_assoc = worst_assoc.max(dev);
        }
    }
    Outcome {
        id: 2,
        title: "closed forms agree with Monte Carlo",
        pass: pblk_ok && assoc_ok,
        detail: format!(
            "35 blocking points, worst {worst_pblk:.2} sigma; {n_assoc} association points, worst |delta| {worst_assoc:.4}"
        ),
    }
}

fn irregular_anchors() -> Outcome {
    let pl = PathLossParams::default();
    let mut lines = Vec::new();
    let mut pass = false;
    let mut best: Option<(LambdaConvention, f64)> = None;
    for conv in [LambdaConvention::Disk, LambdaConvention::Hexagon] {
        let p3 = assoc(100.0, 3.0, 3.0, conv, pl);
        let p10 = assoc(100.0, 3.0, 10.0, conv, pl);
        let miss = (p3 - 0.93).abs().max((p10 - 0.018).abs());
        if best.is_none_or(|(_, m)| miss < m) {
            best = Some((conv, miss));
        }
        lines.push(format!("{}: H_max=3 -> {p3:.4}, H_max=10 -> {p10:.4}", conv.name()));
        if miss <= 0.02 {
            pass = true;
        }
    }
    let conv = best.unwrap().0;
    let p_low = assoc(100.0, 3.0, 10.0, conv, pl);
    let p_high = assoc(300.0, 30.0, 10.0, conv, pl);
    let p_joint = joint_p_los(p_low, p_high).unwrap();
    lines.push(format!(
        "joint with {} convention: {p_low:.4} -> {p_joint:.4} (high tier {p_high:.4})",
        conv.name()
    ));
    pass &= within(p_joint, 0.833, 0.02);
    Outcome {
        id: 3,
        title: "irregular anchors 0.93 / 0.018 / 0.833 (tol 0.02)",
        pass,
        detail: lines.join("; "),
    }
}

fn regular_worst_case() -> Outcome {
    let lay = HexLayout::from_cell_radius(100.0).unwrap();
    let b = BlockageParams::default();
    let step = default_grid_step(&lay);
    let worst = |p: &HeightProfile, s: f64| worst_case_p_los(&lay, p, &b, s).unwrap().0;
    let low = prof(3.0, 3.0);
    let high = prof(30.0, 15.0);
    let w_low = worst(&low, step);
    let w_high = worst(&high, step);
    let d_low = (worst(&low, step / 2.0) - w_low).abs();
    let d_high = (worst(&high, step / 2.0) - w_high).abs();
    let anchor = within(w_low, 0.8564, 0.005);
    let above = w_high >= 0.99;
    let stable = d_low < 1e-3 && d_high < 1e-3;
    Outcome {
        id: 4,
        title: "regular worst case 0.8564 (tol 0.005), >= 0.99, grid stability < 1e-3",
        pass: anchor && above && stable,
        detail: format!(
            "(3,3) -> {w_low:.5} [{}]; (30,15) -> {w_high:.5} [{}]; halving step moves by {d_low:.1e}, {d_high:.1e} [{}]",
            verdict(anchor),
            verdict(above),
            verdict(stable)
        ),
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "miss"
    }
}

fn table_two() -> Outcome {
    let b = BlockageParams::default();
    let lay = HexLayout::from_cell_radius(100.0).unwrap();
    let target = 0.95;
    let rows = [(3.0, 1, 0.9990), (5.0, 3, 0.9578), (10.0, 25, 0.9636), (15.0, 100, 0.9513)];
    let mut exact = true;
    let mut consistent = true;
    let mut n_at_3 = None;
    let mut lines = Vec::new();
    for (hm, ref_n, ref_p) in rows {
        let low = TierSpec {
            profile: prof(3.0, hm),
            deployment: TierDeployment::RegularWorstCase {
                layout: lay,
                grid_step: None,
            },
        };
        let high = prof(30.0, hm);
        match min_high_rise_count(target, &low, &high, &b) {
            Ok(r) => {
                let n = r.high_rise_count_per_100.unwrap();
                exact &= n == ref_n && within(r.p_joint, ref_p, 0.01);
                consistent &= row_is_consistent(&r, &low, &high, &b, target);
                if hm == 3.0 {
                    n_at_3 = Some(n);
                }
                lines.push(format!("H_max={hm}: n={n} p={:.4} (ref {ref_n}, {ref_p})", r.p_joint));
            }
            Err(Error::Infeasible { best, .. }) => {
                exact = false;
                // exhaustive scan: every count up to 100 stays below target
                consistent &= best.p_joint < target
                    && best.p_joint == joint_p_los(best.p_low, best.p_high).unwrap();
                lines.push(format!(
                    "H_max={hm}: infeasible, best p={:.4} at n={} (ref {ref_n}, {ref_p})",
                    best.p_joint,
                    best.high_rise_count_per_100.unwrap()
                ));
            }
            Err(e) => panic!("joint search failed: {e}"),
        }
    }
    let few = n_at_3.is_some_and(|n| n <= 3);
    let pass = (exact || consistent) && few;
    let mode = if exact {
        "all rows match"
    } else {
        "rows differ; consistency clause"
    };
    Outcome {
        id: 5,
        title: "high-rise count table at target 0.95",
        pass,
        detail: format!("{mode}, consistent={consistent}, n(3)<=3 {}; {}", verdict(few), lines.join("; ")),
    }
}

fn row_is_consistent(
    r: &JointResult,
    low: &TierSpec,
    high: &HeightProfile,
    b: &BlockageParams,
    target: f64,
) -> bool {
    let n = r.high_rise_count_per_100.unwrap();
    let identity = r.p_joint == joint_p_los(r.p_low, r.p_high).unwrap() && r.p_joint >= target;
    let minimal = n == 1 || {
        let prev = low.densified(*high, n - 1).unwrap().p_los(b).unwrap();
        joint_p_los(r.p_low, prev).unwrap() < target
    };
    identity && minimal
}

fn property_suite() -> Outcome {
    let mut failures: Vec<&str> = Vec::new();
    let hs: Vec<f64> = (0..=80).map(|i| 1.6 + 0.5 * i as f64).collect();
    let hms = [0.0, 1.5, 2.0, 3.0, 5.0, 10.0, 15.0, 20.0, 30.0, 40.0];

    if !hms.iter().all(|&hm| hs.windows(2).all(|w| pblk(w[1], hm) <= pblk(w[0], hm))) {
        failures.push("P_blk monotone in H_B");
    }
    if !hms[2..].iter().all(|&hm| {
        let e = 1e-9 * hm;
        (pblk(hm - e, hm) - pblk(hm, hm)).abs() < 1e-7 && (pblk(hm + e, hm) - pblk(hm, hm)).abs() < 1e-7
    }) {
        failures.push("continuity at H_B = H_max");
    }
    let probs: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    if !probs.iter().all(|&a| {
        probs.iter().all(|&c| {
            let j = joint_p_los(a, c).unwrap();
            (1.0 - j - (1.0 - a) * (1.0 - c)).abs() <= 1e-15
        })
    }) {
        failures.push("complement-product identity");
    }

    let lay = HexLayout::from_cell_radius(100.0).unwrap();
    let b = BlockageParams::default();
    let pts = half_triangle_grid(&lay, lay.d_inter / 40.0).unwrap();
    for (hb, hm) in [(3.0, 3.0), (30.0, 15.0), (10.0, 20.0)] {
        let p = prof(hb, hm);
        let sym = pts.iter().all(|&u| {
            let a = p_los_at_point(&lay, u, &p, &b).unwrap();
            let m = p_los_at_point(&lay, lay.mirror(u), &p, &b).unwrap();
            (a - m).abs() <= 1e-12
        });
        if !sym {
            failures.push("mirror symmetry");
        }
    }

    for pl in [PathLossParams::default(), PathLossParams::default().swapped()] {
        for radius in [25.0, 100.0, 500.0, 1000.0] {
            for hm in [3.0, 10.0, 15.0] {
                let be = effective_beta(&b, pblk_irregular(&prof(3.0, hm)).unwrap());
                let inp = AssociationInputs::new(IrregularDeployment::from_radius(radius).unwrap(), be, pl).unwrap();
                if p_los_association(&inp).unwrap() > prob_at_least_one_los(&inp) + 1e-12 {
                    failures.push("association bounded by any-LOS probability");
                }
            }
        }
    }

    let opts = QuadOptions {
        rel_tol: 1e-13,
        abs_tol: 0.0,
        max_evals: 2_000_000,
    };
    let mut worst_u: f64 = 0.0;
    for beta in [1e-4, 0.0177, 0.0709] {
        for k in 0..=30 {
            let x = 10f64.powf(-1.0 + 5.0 * k as f64 / 30.0);
            let mut breaks = vec![0.0];
            breaks.extend([1.0 / beta, 10.0 / beta].into_iter().filter(|&v| v < x));
            breaks.push(x);
            let q = integrate_with_breaks(|r| r * (-beta * r).exp(), &breaks, opts).unwrap().value;
            worst_u = worst_u.max((antiderivative_u(beta, x).unwrap() - q).abs() / q);
        }
    }
    if worst_u > 1e-9 {
        failures.push("U closed form vs quadrature");
    }

    let mut worst_geo: f64 = 0.0;
    for u in half_triangle_grid(&lay, lay.d_inter / 30.0).unwrap() {
        if lay.ap_positions.iter().any(|a| (a.x - u.x).hypot(a.y - u.y) < 1e-3 * lay.d_inter) {
            continue;
        }
        for v in [u, lay.mirror(u)] {
            let g = geometry_at(&lay, v).unwrap();
            let printed = printed_boundary_dists(&lay, &g);
            for i in 0..2 {
                worst_geo = worst_geo.max((printed[i] - g[i].boundary_dist).abs() / g[i].boundary_dist);
            }
        }
    }
    if worst_geo > 1e-9 {
        failures.push("printed |A1B1|, |A2B2| vs exact geometry");
    }

    // qualitative curve shapes, under the default exponent order
    let radii: Vec<f64> = (1..=40).map(|i| 25.0 * i as f64).collect();
    let pl = PathLossParams::default();
    {
        for hm in [3.0, 10.0, 15.0, 30.0] {
            let low: Vec<f64> = radii.iter().map(|&r| assoc(r, 3.0, hm, LambdaConvention::Disk, pl)).collect();
            let high: Vec<f64> = radii.iter().map(|&r| assoc(r, 30.0, hm, LambdaConvention::Disk, pl)).collect();
            if !low.windows(2).all(|w| w[1] <= w[0] + 1e-12) || !high.windows(2).all(|w| w[1] <= w[0] + 1e-12) {
                failures.push("monotone decay with radius");
            }
            if !low.iter().zip(&high).all(|(l, h)| h + 1e-12 >= *l) {
                failures.push("high-rise curves dominate low-rise");
            }
        }
    }
    let centre = UserPoint::new(0.5 * lay.d_inter, 0.2 * lay.d_inter);
    let low_field = p_los_at_point(&lay, centre, &prof(3.0, 15.0), &b).unwrap();
    let high_field = p_los_at_point(&lay, centre, &prof(30.0, 15.0), &b).unwrap();
    if high_field < low_field {
        failures.push("high-rise field dominates low-rise");
    }
    let regular_linear = (pblk_regular(&prof(3.0, 3.0), 50.0, 100.0).unwrap().value - 0.125).abs() < 1e-15;
    if !regular_linear {
        failures.push("regular blocking linear in range");
    }

    failures.dedup();
    Outcome {
        id: 6,
        title: "property suites",
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("all hold; U vs quadrature {worst_u:.1e}, printed boundary distances {worst_geo:.1e}")
        } else {
            format!("violated: {}", failures.join(", "))
        },
    }
}

fn loscov(dir: &Path, args: &[&str], threads: &str) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_loscov"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .arg("--threads")
        .arg(threads)
        .output()
        .expect("spawn loscov")
}

fn reproducibility() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 5] = [
        &["blocking"],
        &["assoc", "--sweep.step", "100"],
        &["regular", "--deployment.grid-step", "8", "--sweep.values", "3,15"],
        &["joint", "--sweep.values", "3,5"],
        &["validate", "--mc.samples", "20000", "--mc.trials", "2000"],
    ];
    let mut replay_ok = true;
    let mut files = 0;
    for (i, args) in runs.iter().enumerate() {
        let run = tmp.path().join(format!("run{i}"));
        let again = tmp.path().join(format!("replay{i}"));
        let first = loscov(&run, args, "1");
        let manifest = run.join("manifest.json");
        let second = loscov(&again, &["replay", manifest.to_str().unwrap()], "3");
        replay_ok &= first.status.success() && second.status.success();
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
        for f in m["outputs"].as_array().unwrap() {
            let name = f["file"].as_str().unwrap();
            replay_ok &= std::fs::read(run.join(name)).unwrap() == std::fs::read(again.join(name)).unwrap();
            files += 1;
        }
    }

    let run_mc = || {
        let p = prof(10.0, 10.0);
        let be = effective_beta(&BlockageParams::default(), pblk_irregular(&prof(30.0, 15.0)).unwrap());
        let inp = AssociationInputs::new(IrregularDeployment::from_radius(300.0).unwrap(), be, PathLossParams::default())
            .unwrap();
        let lay = HexLayout::from_cell_radius(100.0).unwrap();
        (
            mc_pblk(&p, 100.0, 100.0, 300_000, RngSpec::new(SEED, 11)).unwrap(),
            mc_association(&inp, default_window(&inp), 30_000, RngSpec::new(SEED, 12)).unwrap(),
            mc_regular_p_los(&lay, lay.centroid(), &p, &BlockageParams::default(), 300_000, RngSpec::new(SEED, 13))
                .unwrap(),
        )
    };
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let threads_ok = pool(1).install(run_mc) == pool(4).install(run_mc);
    Outcome {
        id: 7,
        title: "reproducibility",
        pass: replay_ok && threads_ok,
        detail: format!(
            "{files} CSVs replayed byte-identical [{}]; oracle 1 vs 4 threads identical [{}]",
            verdict(replay_ok),
            verdict(threads_ok)
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let outcomes = [
        blocking_anchors(),
        oracle_suite(),
        irregular_anchors(),
        regular_worst_case(),
        table_two(),
        property_suite(),
        reproducibility(),
    ];
    println!();
    for o in &outcomes {
        println!(
            "[{}] criterion {}: {} | {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.id,
            o.title,
            o.detail
        );
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "criteria not met: {failed:?}");
}
