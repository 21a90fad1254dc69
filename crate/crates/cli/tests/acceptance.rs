//! Acceptance suite. Prints one PASS/FAIL line per criterion with details
//! underneath, and exits nonzero if any criterion fails that is not on the
//! known-unattainable list below.

use std::collections::BTreeMap;
use std::f64::consts::{LOG2_E, PI};
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratesplit::ao::{self, AoConfig};
use ratesplit::channel::{deterministic_channel, random_channel};
use ratesplit::rates::log2_1p;
use ratesplit::region::{self, region_dominance, region_dominance_union, PointStatus, RateRegionResult};
use ratesplit::strategies::{solve_strategy, StrategyConfig};
use ratesplit::subproblem::{self, SubproblemSpec, SubproblemStatus, Variant};
use ratesplit::wmmse::{self, mmse_state, power_terms, rate_wmmse_gap, surrogate_mse, weighted_mse};
use ratesplit::{ChannelSet, Error, PrecoderMatrix, Scenario, Strategy};
use ratesplit_cli::config::{ExperimentConfig, OracleConfig};
use ratesplit_cli::{oracle, run};

/// Criteria that cannot hold as literally stated. The reason is printed with
/// the result; the exit status ignores them.
const KNOWN_UNATTAINABLE: &[u32] = &[2];

const THETAS: [(u32, &str); 4] = [(1, "pi/9"), (2, "2pi/9"), (3, "pi/3"), (4, "4pi/9")];

struct Verdict {
    criterion: u32,
    pass: bool,
    summary: String,
    details: Vec<String>,
    seconds: f64,
}

fn gaussian_precoder(seed: u64, nt: usize, k: usize) -> PrecoderMatrix {
    let cols = random_channel(seed, nt, k + 1).unwrap();
    PrecoderMatrix::new(cols.channels().to_vec()).unwrap()
}

fn criterion_1() -> Verdict {
    let mut worst = 0.0f64;
    for i in 0..1000u64 {
        let ch = random_channel(2 * i, 4, 2).unwrap();
        let p = gaussian_precoder(2 * i + 1, 4, 2);
        for k in 0..2 {
            let (a, b) = rate_wmmse_gap(&ch, &p, k);
            worst = worst.max(a.abs()).max(b.abs());
        }
    }
    Verdict {
        criterion: 1,
        pass: worst < 1e-10,
        summary: format!("rate-WMMSE identity, 1000 instances: max |gap| = {worst:.3e} (< 1e-10)"),
        details: vec![],
        seconds: 0.0,
    }
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut eq_worst = f64::INFINITY;
    let mut literal_worst = f64::INFINITY;
    let mut literal_hits = 0usize;
    let mut natural_worst = f64::INFINITY;
    let mut samples = 0usize;
    for i in 0..100u64 {
        let ch = random_channel(10_000 + i, 4, 2).unwrap();
        let p = gaussian_precoder(20_000 + i, 4, 2);
        let st = mmse_state(&ch, &p);
        for k in 0..2 {
            let t = power_terms(&ch, &p, k);
            let (e0, ek) = wmmse::mmse(&ch, &p, k);
            let layers = [
                (st.g_common[k], ch.gain(k, p.common()), t.t_common, e0, log2_1p(ratesplit::rates::sinr_common(&ch, &p, k))),
                (st.g_private[k], ch.gain(k, p.private(k)), t.t_private, ek, log2_1p(ratesplit::rates::sinr_private(&ch, &p, k))),
            ];
            for (g, a, tt, e_mmse, rate) in layers {
                for _ in 0..1000 {
                    let scale = 10f64.powf(rng.gen_range(-6.0..1.0)) * g.norm().max(1e-3);
                    let d = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
                    let gp = g + d;
                    let e = gp.norm_sqr() * tt - 2.0 * (gp * a).re + 1.0;
                    eq_worst = eq_worst.min(e - e_mmse);

                    let u = 10f64.powf(rng.gen_range(-3.0..3.0)) / e_mmse;
                    let lit = weighted_mse(u, e_mmse) - (1.0 - rate);
                    literal_worst = literal_worst.min(lit);
                    if lit < -1e-12 {
                        literal_hits += 1;
                    }
                    natural_worst = natural_worst.min(surrogate_mse(u, e_mmse) - (LOG2_E - rate));
                    samples += 1;
                }
            }
        }
    }
    let eq_ok = eq_worst >= -1e-12;
    let lit_ok = literal_worst >= -1e-12;
    let nat_ok = natural_worst >= -1e-12;
    let floor = LOG2_E + std::f64::consts::LN_2.log2() - 1.0;
    Verdict {
        criterion: 2,
        pass: eq_ok && lit_ok,
        summary: format!(
            "MMSE optimality: equalizers {}, base-2 weights {}",
            if eq_ok { "hold" } else { "VIOLATED" },
            if lit_ok { "hold" } else { "VIOLATED" }
        ),
        details: vec![
            format!("equalizer perturbations: min(ε − ε_MMSE) = {eq_worst:.3e} over {samples} draws"),
            format!(
                "u·ε − log2 u at g_MMSE: min − (1 − R) = {literal_worst:.6} ({literal_hits}/{samples} draws below −1e-12)"
            ),
            format!("  the base-2 form is minimized at u = 1/(ε ln 2), where it sits {floor:.6} below 1 − R, so 1/ε is not its minimizer"),
            format!(
                "(u·ε − ln u)·log2 e at g_MMSE: min − (log2 e − R) = {natural_worst:.3e}: {}",
                if nat_ok { "holds, this form is what the AO uses" } else { "VIOLATED" }
            ),
        ],
        seconds: 0.0,
    }
}

fn fig2_config(dir: &Path, parallelism: usize) -> (ExperimentConfig, String) {
    let text = format!(
        r#"output_dir = "{}"
seed = 0
parallelism = {parallelism}

[grid]
nt = 4
snr_db = 20.0
gamma = [1.0]
theta = ["pi/9", "2pi/9", "pi/3", "4pi/9"]
r0_threshold = [0.5]
strategies = ["RS", "MULP", "SCSIC"]

[ao]
epsilon = 1e-4
max_iterations = 300
"#,
        dir.display()
    );
    (ExperimentConfig::parse(&text).unwrap(), text)
}

fn criterion_3(report: &run::RunReport) -> Verdict {
    let mut points = 0;
    let mut converged = 0;
    let mut worst_drop = f64::NEG_INFINITY;
    let mut traces = 0;
    let mut details = Vec::new();
    for (name, regions) in &report.regions {
        for r in regions {
            let c = r.count(PointStatus::Converged);
            points += r.points.len();
            converged += c;
            for p in &r.points {
                if let Some(o) = &p.outcome {
                    traces += o.runs.len();
                    for run in &o.runs {
                        worst_drop = worst_drop.max(run.max_drop);
                    }
                    worst_drop = worst_drop.max(ao::max_drop(&o.solution.trace));
                }
            }
            if c < r.points.len() {
                details.push(format!("{name} {}: {c}/{} converged", r.strategy, r.points.len()));
            }
        }
    }
    let frac = converged as f64 / points.max(1) as f64;
    let files = report.manifest.scenarios.iter().flat_map(|s| &s.files).filter(|f| f.starts_with("region_") && f.ends_with(".csv")).count();
    details.push(format!("{files} region CSV files written"));
    Verdict {
        criterion: 3,
        pass: points == 516 && worst_drop <= 1e-6 && frac >= 0.99,
        summary: format!(
            "AO on the γ=1, R0=0.5 grid: {converged}/{points} converged ({:.2}% ≥ 99%), largest WSR drop over {traces} traces = {worst_drop:.3e} (≤ 1e-6)",
            100.0 * frac
        ),
        details,
        seconds: 0.0,
    }
}

fn criterion_4() -> Verdict {
    let ones = vec![Complex64::new(1.0, 0.0); 4];
    let ch = ChannelSet::new(vec![ones], 100.0).unwrap();
    let target = 401f64.log2();
    let mut details = Vec::new();
    let mut pass = true;
    for s in Strategy::ALL {
        match solve_strategy(&ch, s, 0.0, &[1.0], &StrategyConfig::default()) {
            Ok(o) => {
                let err = (o.wsr() - target).abs();
                pass &= err < 1e-3;
                details.push(format!("{s}: WSR {:.6}, error {err:.2e}", o.wsr()));
            }
            Err(e) => {
                pass = false;
                details.push(format!("{s}: {e}"));
            }
        }
    }
    details.push(format!(
        "target is log2(1 + Pt·‖h‖²) = log2(401); the figure 8.6439 quoted alongside it is log2(400), {:.4} away",
        target - 400f64.log2()
    ));
    Verdict {
        criterion: 4,
        pass,
        summary: format!("single user, Nt=4, Pt=100: WSR = log2(401) = {target:.4} within 1e-3 for all strategies"),
        details,
        seconds: 0.0,
    }
}

type Key = (String, u32, String); // gamma, theta index, r0

fn criterion_5(all: &BTreeMap<Key, Vec<RateRegionResult>>) -> Verdict {
    let mut worst = f64::INFINITY;
    let mut missing = 0;
    let mut details = Vec::new();
    for ((g, t, r0), regions) in all {
        let d = region_dominance_union(&regions[0], &[&regions[1], &regions[2]], 1e-5).unwrap();
        for (i, delta) in d.deltas.iter().enumerate() {
            if delta.is_none() && (regions[1].points[i].has_solution() || regions[2].points[i].has_solution()) {
                missing += 1;
            }
        }
        if d.min_delta < -1e-5 {
            details.push(format!("γ={g} θ={}π/9 R0={r0}: min RS − max(others) = {:.3e}", t, d.min_delta));
        }
        worst = worst.min(d.min_delta);
    }
    if missing > 0 {
        details.push(format!("{missing} weights where RS failed but another strategy succeeded"));
    }
    Verdict {
        criterion: 5,
        pass: all.len() == 16 && worst >= -1e-5 && missing == 0,
        summary: format!("RS ≥ max(MULP, SCSIC) − 1e-5 on 16 scenarios × 43 weights: min margin {worst:.3e}"),
        details,
        seconds: 0.0,
    }
}

fn key(g: &str, t: u32, r0: &str) -> Key {
    (g.to_string(), t, r0.to_string())
}

fn criterion_6(all: &BTreeMap<Key, Vec<RateRegionResult>>) -> Verdict {
    let get = |g: &str, t: u32, r0: &str| &all[&key(g, t, r0)];
    let mut details = Vec::new();

    let a = get("1", 1, "0.5");
    let da = region_dominance_union(&a[0], &[&a[1], &a[2]], 1e-5).unwrap();
    let pass_a = da.max_delta > 0.1;
    details.push(format!("(a) γ=1 θ=π/9: max RS − max(others) = {:.4} (> 0.1) {}", da.max_delta, ok(pass_a)));

    let b = get("1", 4, "0.5");
    let db = region_dominance(&b[0], &b[1], 1e-5).unwrap();
    let gap_b = db.deltas.iter().flatten().fold(0.0f64, |m, d| m.max(d.abs()));
    let pass_b = gap_b < 0.05;
    details.push(format!("(b) γ=1 θ=4π/9: max |RS − MULP| = {gap_b:.4} (< 0.05) {}", ok(pass_b)));

    let mut worst_c = f64::INFINITY;
    let mut where_c = String::new();
    for g in ["1", "0.3"] {
        for t in 1..=4 {
            let lo = get(g, t, "0.5");
            let hi = get(g, t, "1.5");
            for (rl, rh) in lo.iter().zip(hi) {
                for (pl, ph) in rl.points.iter().zip(&rh.points) {
                    if pl.has_solution() && ph.has_solution() && pl.wsr - ph.wsr < worst_c {
                        worst_c = pl.wsr - ph.wsr;
                        where_c = format!("γ={g} θ={t}π/9 {} u2={}", rl.strategy, pl.weights[1]);
                    }
                }
            }
        }
    }
    let pass_c = worst_c >= -1e-5;
    details.push(format!(
        "(c) WSR(R0=0.5) − WSR(R0=1.5) ≥ −1e-5: min {worst_c:.3e} at {where_c} {}",
        ok(pass_c)
    ));

    let d = get("0.3", 2, "0.5");
    let dd = region_dominance(&d[1], &d[2], 1e-5).unwrap();
    let pass_d = dd.max_delta > 0.02 && dd.min_delta < -0.02;
    details.push(format!(
        "(d) γ=0.3 θ=2π/9: MULP − SCSIC ranges over [{:.4}, {:.4}] (both sides beyond 0.02) {}",
        dd.min_delta,
        dd.max_delta,
        ok(pass_d)
    ));
    Verdict {
        criterion: 6,
        pass: pass_a && pass_b && pass_c && pass_d,
        summary: "figure shapes (a)–(d)".to_string(),
        details,
        seconds: 0.0,
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "MISSED"
    }
}

fn criterion_7() -> Verdict {
    let cfg = OracleConfig::parse("seeds = [1, 2, 3, 4, 5]\nr0_threshold = [0.0, 0.3]\n").unwrap();
    let rows = oracle::compare(&cfg, &StrategyConfig::default()).unwrap();
    let worst = rows.iter().map(|r| r.margin()).fold(f64::INFINITY, f64::min);
    let pass = rows.len() == 10 && rows.iter().all(|r| r.passes(cfg.tolerance));
    let details = rows
        .iter()
        .map(|r| {
            format!(
                "seed {} R0={}: AO {:.4} oracle {:.4} margin {:+.4} {}",
                r.seed,
                r.r0_threshold,
                r.ao_wsr,
                r.oracle_wsr,
                r.margin(),
                r.note
            )
        })
        .collect();
    Verdict {
        criterion: 7,
        pass,
        summary: format!("AO ≥ grid oracle − 0.05 on 10 tiny instances (Nt=2, Pt=10): worst margin {worst:+.4}"),
        details,
        seconds: 0.0,
    }
}

fn criterion_8() -> Verdict {
    let ch = deterministic_channel(4, 1.0, PI / 9.0).unwrap().with_power_budget(100.0).unwrap();
    let p = gaussian_precoder(8, 4, 2).clipped_to(100.0);
    let st = mmse_state(&ch, &p);
    let w = [1.0, 1.0];
    let prog = subproblem::build(&SubproblemSpec {
        channel: &ch,
        wsr_weights: &w,
        wmmse_state: &st,
        r0_threshold: 50.0,
        power_budget: 100.0,
        variant: Variant::Rs,
    })
    .unwrap();
    let sol = subproblem::solve(&prog);
    let certified = sol
        .certificate
        .as_ref()
        .is_some_and(|y| prog.to_cone_program().certifies_infeasibility(y, 1e-6));
    let bound = subproblem::multicast_rate_bound(&ch);
    let screened = !subproblem::passes_prescreen(&ch, 50.0);
    let ao_says = matches!(
        ao::optimize(&ch, Variant::Rs, 50.0, &w, &AoConfig::default()),
        Err(Error::Infeasible(_))
    );
    Verdict {
        criterion: 8,
        pass: sol.status == SubproblemStatus::Infeasible && certified && screened && ao_says,
        summary: format!(
            "R0=50, Pt=100: subproblem {:?} with certificate {}, pre-screen bound {bound:.4} flags it: {screened}",
            sol.status,
            if certified { "verified" } else { "missing" }
        ),
        details: vec![format!("AO reports Infeasible: {ao_says}")],
        seconds: 0.0,
    }
}

fn region_csvs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn criterion_9(first: &Path, second: &Path) -> Verdict {
    let a = region_csvs(first);
    let b = region_csvs(second);
    let differing: Vec<&String> = a.keys().filter(|k| b.get(*k) != a.get(*k)).collect();
    Verdict {
        criterion: 9,
        pass: !a.is_empty() && a.len() == b.len() && differing.is_empty(),
        summary: format!("rerun of the γ=1 grid: {} of {} region CSV files byte-identical", a.len() - differing.len(), a.len()),
        details: differing.iter().map(|k| format!("{k} differs")).collect(),
        seconds: 0.0,
    }
}

fn timed(f: impl FnOnce() -> Verdict) -> Verdict {
    let t = Instant::now();
    let mut v = f();
    v.seconds = t.elapsed().as_secs_f64();
    v
}

fn main() {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let tmp = tempfile::tempdir().unwrap();
    let (dir_a, dir_b) = (tmp.path().join("a"), tmp.path().join("b"));
    let mut verdicts = vec![timed(criterion_1), timed(criterion_2)];

    let t = Instant::now();
    let (cfg, text) = fig2_config(&dir_a, threads);
    let report = run::run(&cfg, &text).expect("fig2 run");
    let mut v3 = criterion_3(&report);
    v3.seconds = t.elapsed().as_secs_f64();
    verdicts.push(v3);
    verdicts.push(timed(criterion_4));

    let t = Instant::now();
    let mut all: BTreeMap<Key, Vec<RateRegionResult>> = BTreeMap::new();
    for (i, (_, regions)) in report.regions.iter().enumerate() {
        all.insert(key("1", THETAS[i].0, "0.5"), regions.clone());
    }
    let strategy_cfg = StrategyConfig::default();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    for (g, gamma) in [("1", 1.0), ("0.3", 0.3)] {
        for (r, r0) in [("0.5", 0.5), ("1.5", 1.5)] {
            for (t_idx, _) in THETAS {
                if all.contains_key(&key(g, t_idx, r)) {
                    continue;
                }
                let sc = Scenario {
                    nt: 4,
                    k: 2,
                    snr_db: 20.0,
                    gamma,
                    theta: t_idx as f64 * PI / 9.0,
                    r0_threshold: r0,
                    strategy: Strategy::Rs,
                    weight_grid: vec![],
                };
                let ch = sc.channel().unwrap();
                let regions = pool
                    .install(|| region::sweep_strategies(&ch, &sc, &Strategy::ALL, &strategy_cfg))
                    .unwrap();
                all.insert(key(g, t_idx, r), regions);
            }
        }
    }
    let sweep_seconds = t.elapsed().as_secs_f64();
    let mut v5 = criterion_5(&all);
    v5.seconds = sweep_seconds;
    verdicts.push(v5);
    verdicts.push(timed(|| criterion_6(&all)));
    verdicts.push(timed(criterion_7));
    verdicts.push(timed(criterion_8));

    let t = Instant::now();
    let (cfg_b, text_b) = fig2_config(&dir_b, threads);
    run::run(&cfg_b, &text_b).expect("rerun");
    let mut v9 = criterion_9(&dir_a, &dir_b);
    v9.seconds = t.elapsed().as_secs_f64();
    verdicts.push(v9);

    verdicts.sort_by_key(|v| v.criterion);
    let mut unexpected = 0;
    println!();
    for v in &verdicts {
        let known = KNOWN_UNATTAINABLE.contains(&v.criterion);
        let tag = match (v.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known unattainable as stated)",
            (false, false) => "FAIL",
        };
        if !v.pass && !known {
            unexpected += 1;
        }
        println!("{tag} criterion {}: {} [{:.1}s]", v.criterion, v.summary, v.seconds);
        for d in &v.details {
            println!("    {d}");
        }
    }
    println!();
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        std::process::exit(1);
    }
}
