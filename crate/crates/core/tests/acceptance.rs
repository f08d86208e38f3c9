//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::time::{Duration, Instant};

use ngrc_control::cli::{execute, CommandKind, RunConfig};
use ngrc_control::control::ControlTrace;
use ngrc_control::harness::{
    default_alpha_grid, generate_dataset, iterations_to_tolerance, run_control_task,
    run_control_traces, run_prediction_sweep, ControlSweepSpec, ControlTask, DataGenSpec,
    PredictionSweepSpec, SweepResult, ARBITRARY_SWITCH, NOISE_LEVELS,
};
use ngrc_control::ngrc::{train_ridge, FeatureConfig};
use ngrc_control::plant::{fixed_points, HenonParams};
use ngrc_control::rng;

const SEED: u64 = 20240611;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(cond: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: cond,
        detail: detail.into(),
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let dt = t.elapsed();
    o.detail = format!("{} [{:.2?} / limit {:?}]", o.detail, dt, limit);
    o.pass &= dt < limit;
    o
}

fn within_factor(value: f64, reference: f64, factor: f64) -> bool {
    value.is_finite() && value >= reference / factor && value <= reference * factor
}

fn trace(task: ControlTask, gain: f64, n_iters: usize) -> ControlTrace {
    let (_, mut traces) = run_control_traces(
        task,
        &[gain],
        0.0,
        0.0,
        n_iters,
        None,
        &DataGenSpec::default(),
        &default_alpha_grid(),
        &HenonParams::default(),
        SEED,
    )
    .expect("trace");
    traces.remove(0)
}

fn weight_recovery() -> Outcome {
    let truth = [1.0, 1.0, 0.0, 1.0, -1.4, 0.0, 0.0]; // u, c, x, y, x², xy, y²
    let spec = DataGenSpec { m_train: 10, m_test: 0, ..DataGenSpec::default() };
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let data = generate_dataset(&spec, &HenonParams::default(), &mut rng::child(SEED, "weights", &[trial]))
            .expect("dataset");
        for alpha in [0.0, 1e-12, 1e-10] {
            let m = train_ridge(&data, alpha, &FeatureConfig::henon()).expect("train");
            for (w, t) in m.weight_row(0).iter().zip(truth) {
                worst = worst.max((w - t).abs());
            }
        }
    }
    check(worst <= 1e-6, format!("max |w - w_true| = {worst:.3e} over 50 datasets, α ∈ {{0, 1e-12, 1e-10}} (≤ 1e-6)"))
}

fn prediction_reproduction() -> Outcome {
    let caption = [1.09e-5, 1.06e-4, 1.04e-3, 1.02e-2, 0.98e-1];
    let spec = PredictionSweepSpec { m_train_grid: vec![10], ..PredictionSweepSpec::default() };
    let res = run_prediction_sweep(&spec, SEED).expect("sweep");
    let mut pass = true;
    let mut parts = Vec::new();
    for (sigma, want) in NOISE_LEVELS.iter().zip(caption) {
        let got = res.find("predict", 10.0, *sigma).expect("cell").mean_rmse;
        let ok = within_factor(got, want, 2.0);
        pass &= ok;
        parts.push(format!("σ={sigma:.0e}: {got:.3e} vs {want:.2e}{}", if ok { "" } else { " ✗" }));
    }
    check(pass, format!("mean RMSE at M_train=10 within ×2: {}", parts.join("; ")))
}

fn deadbeat() -> Outcome {
    let rel1 = |task| trace(task, 0.0, 10).relative_error(1).unwrap();
    let a = rel1(ControlTask::Pu1ToPu2);
    let b = rel1(ControlTask::Period4);
    let c = rel1(ControlTask::Arbitrary);
    check(
        a < 1e-10 && b < 1e-9 && c < 1e-3,
        format!("first-iteration relative error: pu1-pu2 {a:.2e} (<1e-10), period4 {b:.2e} (<1e-9), arbitrary {c:.2e} (<1e-3)"),
    )
}

fn closed_form_count(e0: f64, x_des: f64, gain: f64, rel_tol: f64) -> usize {
    ((rel_tol * x_des.abs() / e0.abs()).ln() / gain.ln()).ceil() as usize
}

fn geometric_decay() -> Outcome {
    let t = trace(ControlTask::Pu1ToPu2, 0.9, 200);
    let (_, pu2) = fixed_points(&HenonParams::default()).unwrap();
    let n = iterations_to_tolerance(&t, 0.01);
    let oracle_paper = closed_form_count(1.7627, pu2.x, 0.9, 0.01);
    let oracle_run = closed_form_count(t.records[0].e, pu2.x, 0.9, 0.01);
    let mut worst_ratio: f64 = 0.0;
    for w in t.records[..100].windows(2) {
        worst_ratio = worst_ratio.max((w[1].e / w[0].e - 0.9).abs());
    }
    let arb = trace(ControlTask::Arbitrary, 0.9, 200);
    let n_arb = iterations_to_tolerance(&arb.window(0..ARBITRARY_SWITCH), 0.01);
    let arb_oracle = closed_form_count(arb.records[0].e, -1.5, 0.9, 0.01);
    check(
        n == Some(48) && oracle_paper == 48 && oracle_run == 48 && worst_ratio <= 1e-9 && n_arb == Some(44) && arb_oracle == 44,
        format!(
            "K=0.9 pu1-pu2 <1% at {n:?} (closed form {oracle_paper}/{oracle_run}, want 48); max |e_i+1/e_i - 0.9| = {worst_ratio:.2e} (≤1e-9, i<100); arbitrary at {n_arb:?} (closed form {arb_oracle}, want 44)"
        ),
    )
}

fn control_sweep(sigma_d: f64, sigma_dw: f64) -> SweepResult {
    let spec = ControlSweepSpec {
        label: if sigma_dw > 0.0 { "sweep-k-modelerror" } else { "sweep-k" }.into(),
        sigma_d,
        sigma_dw,
        ..ControlSweepSpec::default()
    };
    run_control_task(&spec, SEED).expect("control sweep")
}

fn cell(res: &SweepResult, k: f64) -> &ngrc_control::harness::SweepCell {
    res.cells.iter().find(|c| (c.cell_param - k).abs() < 1e-9).expect("gain cell")
}

fn noise_robust_control() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for sigma in NOISE_LEVELS {
        let res = control_sweep(sigma, 0.0);
        let k0 = cell(&res, 0.0).mean_rmse;
        let near_edge = cell(&res, 0.99).mean_rmse.min(cell(&res, -0.99).mean_rmse);
        let stable_max = res
            .cells
            .iter()
            .filter(|c| c.cell_param.abs() < 1.0)
            .map(|c| c.mean_rmse)
            .fold(f64::NEG_INFINITY, f64::max);
        let unstable_ok = res
            .cells
            .iter()
            .filter(|c| c.cell_param.abs() > 1.0)
            .all(|c| c.escaped == c.trials || c.mean_rmse > stable_max);
        let ok = within_factor(k0, sigma, 2.0) && near_edge >= 5.0 * k0 && unstable_ok;
        pass &= ok;
        parts.push(format!(
            "σ={sigma:.0e}: K=0 {:.2}σ, |K|=.99 {:.0}×, |K|>1 {}",
            k0 / sigma,
            near_edge / k0,
            if unstable_ok { "max/escaped" } else { "✗" }
        ));
    }
    check(pass, parts.join("; "))
}

fn model_error_robustness() -> Outcome {
    let caption = [1.60e-5, 1.68e-4, 1.60e-3, 1.60e-2, 1.93e-1];
    let mut pass = true;
    let mut parts = Vec::new();
    for (sigma, want) in NOISE_LEVELS.iter().zip(caption) {
        let res = control_sweep(*sigma, *sigma);
        let min = res
            .cells
            .iter()
            .map(|c| c.mean_rmse)
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min);
        let ok = within_factor(min, want, 3.0);
        pass &= ok;
        parts.push(format!("σ={sigma:.0e}: {min:.3e} vs {want:.2e}{}", if ok { "" } else { " ✗" }));
    }
    check(pass, format!("min-over-K RMSE within ×3: {}", parts.join("; ")))
}

fn determinism() -> Outcome {
    let small = |cmd: CommandKind| {
        let mut c = RunConfig::defaults(cmd);
        c.seed = 99;
        c.trials = 5;
        if matches!(cmd, CommandKind::PredictSweep) {
            c.m_train = vec![4, 10];
        }
        if matches!(cmd, CommandKind::SweepK | CommandKind::SweepKModelerror) {
            c.k = vec![-1.2, 0.0, 0.6, 1.2];
        }
        c
    };
    let mut pass = true;
    let mut names = Vec::new();
    for cmd in [
        CommandKind::Train,
        CommandKind::PredictSweep,
        CommandKind::ControlTrace,
        CommandKind::SweepK,
        CommandKind::SweepKModelerror,
    ] {
        let cfg = small(cmd);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| execute(cmd, &cfg)).expect("run");
        let b = four.install(|| execute(cmd, &cfg)).expect("run");
        let same = a == b;
        pass &= same;
        names.push(format!("{}{}", cmd.name(), if same { "" } else { " ✗" }));
    }
    check(pass, format!("byte-identical reruns (1 vs 4 threads): {}", names.join(", ")))
}

fn slaved_variable() -> Outcome {
    let (_, pu2) = fixed_points(&HenonParams::default()).unwrap();
    let mut worst: f64 = 0.0;
    for gain in [0.0, 0.3, 0.6] {
        let t = trace(ControlTask::Pu1ToPu2, gain, 100);
        let y = t.records.last().unwrap().observables[1];
        worst = worst.max((y - -0.33941).abs());
    }
    check(
        worst < 1e-4 && (0.3 * pu2.x - -0.33941).abs() < 1e-5,
        format!("final y vs b·x_U2 = -0.33941: max deviation {worst:.2e} (<1e-4)"),
    )
}

fn main() {
    type Criterion = (&'static str, Duration, fn() -> Outcome);
    let criteria: Vec<Criterion> = vec![
        ("1 weight recovery", Duration::from_secs(1), weight_recovery),
        ("2 prediction RMSE vs noise", Duration::from_secs(60), prediction_reproduction),
        ("3 deadbeat control", Duration::from_secs(3), deadbeat),
        ("4 geometric decay", Duration::from_secs(1), geometric_decay),
        ("5 noise-robust control", Duration::from_secs(120), noise_robust_control),
        ("6 model-error robustness", Duration::from_secs(120), model_error_robustness),
        ("7 determinism", Duration::from_secs(120), determinism),
        ("8 slaved variable", Duration::from_secs(1), slaved_variable),
    ];
    let mut failed = 0;
    for (name, limit, f) in criteria {
        let o = timed(limit, f);
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
