//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use quadsgd::commands::{cmd_diagnose, cmd_sweep, fit_records};
use quadsgd::records::read_records;
use quadsgd::sweep::run_sweep;
use quadsgd::CliConfigFile;
use quadsgd_core::{
    aggregate, excess_risk_quadratic, fit_loglog, mc_excess_risk, rate_exponent, upper_bound_terms,
    Ambient, CheckpointPolicy, EtaPolicy, ExperimentConfig, InitPolicy, LogBase, ModelKind,
    ProblemParams, StepSchedule, StepSize, SweepRecord,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn slope_sweep(alpha: f64, beta: f64) -> ExperimentConfig {
    ExperimentConfig {
        problem: ProblemParams::new(alpha, beta, 1, Ambient::FiniteDim(2000)),
        t_grid: vec![1000, 1778, 3162, 5623, 10000],
        m_grid: vec![2000],
        repetitions: 20,
        base_seed: 1,
        model_kinds: vec![ModelKind::Quadratic, ModelKind::Linear],
        eta_policy: EtaPolicy::default(),
        init_policy: InitPolicy::default(),
        log_base: LogBase::Natural,
        checkpoints: CheckpointPolicy::Final,
    }
}

fn closed_form_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_241_015);
    let grid = [1.5, 2.0, 2.5, 3.0];
    let sizes = [1usize, 10, 100];
    let mut agree = 0;
    for case in 0..50u64 {
        let alpha = grid[rng.random_range(0..4)];
        let beta = grid[rng.random_range(0..4)];
        let m = sizes[rng.random_range(0..3)];
        let ambient = if rng.random_bool(0.5) {
            Ambient::AnalyticInfinite
        } else {
            Ambient::FiniteDim(m + rng.random_range(0..=m))
        };
        let inst = ProblemParams::new(alpha, beta, m, ambient).build().unwrap();
        let v: Vec<f64> = (1..=m)
            .map(|i| inst.vstar_at(i).unwrap() * (1.0 + rng.random_range(-0.5..0.5)))
            .collect();
        let exact = excess_risk_quadratic(&inst, &v).unwrap().excess;
        let mc = mc_excess_risk(&inst, ModelKind::Quadratic, &v, 200_000, 1000 + case).unwrap();
        if (mc.estimate - exact).abs() <= 4.0 * mc.stderr {
            agree += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        agree >= 48 && secs <= 120.0,
        format!("{agree}/50 within 4 stderr, {secs:.1}s"),
    )
}

fn slopes(records: &[SweepRecord], quad_target: f64, lin_target: f64) -> Outcome {
    let q = fit_records(records, ModelKind::Quadratic).unwrap().slope;
    let l = fit_records(records, ModelKind::Linear).unwrap().slope;
    let pass = (q - quad_target).abs() <= 0.12 && (l - lin_target).abs() <= 0.12;
    outcome(
        pass,
        format!("quadratic slope {q:.4} (target {quad_target:.4}), linear slope {l:.4} (target {lin_target:.4})"),
    )
}

fn quadratic_beats_linear(records: &[SweepRecord]) -> Outcome {
    let summaries = aggregate(records).unwrap();
    let mean_at = |kind| {
        summaries
            .iter()
            .find(|s| s.total_steps == 10000 && s.kind == kind)
            .and_then(|s| s.mean.map(|m| (m, s.n_ok)))
    };
    match (mean_at(ModelKind::Quadratic), mean_at(ModelKind::Linear)) {
        (Some((q, nq)), Some((l, nl))) => outcome(
            q < l && nq == 20 && nl == 20,
            format!("T=10000: quadratic mean {q:.5e} ({nq} reps), linear mean {l:.5e} ({nl} reps)"),
        ),
        _ => outcome(false, "no usable runs at T=10000".into()),
    }
}

fn phase_diagnostics() -> Outcome {
    let text = r#"{
        "schema": "v1",
        "alpha": 3.0, "beta": 2.0,
        "noise_sigma": 1.0, "lambda_scale": 1.0, "vstar_scale": 1.0,
        "ambient": {"finite_d": 500},
        "t_grid": [5000], "m_grid": [500],
        "repetitions": 20, "base_seed": 1,
        "model_kinds": ["quadratic"],
        "log_base": "natural",
        "checkpoints": {"phase": 10},
        "c1": 0.5,
        "output": "unused.csv"
    }"#;
    let cfg = CliConfigFile::from_json(text).unwrap();
    let r = cmd_diagnose(&cfg, None, None, None).unwrap();
    let hit = r.phase1_hit_fraction.unwrap_or(0.0);
    let conf = r.phase2_confinement_fraction.unwrap_or(0.0);
    outcome(
        hit >= 0.8 && conf >= 0.8,
        format!(
            "phase1_hit_fraction {hit:.3}, phase2_confinement_fraction {conf:.3} (D={}, T1={:?}, eta={}, diverged {})",
            r.effective_dim, r.decay_len, r.eta, r.divergence_count
        ),
    )
}

fn saturation() -> Outcome {
    let cfg = ExperimentConfig {
        problem: ProblemParams::new(3.0, 2.0, 1, Ambient::AnalyticInfinite),
        t_grid: vec![10_000],
        m_grid: vec![10],
        repetitions: 20,
        base_seed: 1,
        model_kinds: vec![ModelKind::Quadratic],
        eta_policy: EtaPolicy::default(),
        init_policy: InitPolicy::default(),
        log_base: LogBase::Natural,
        checkpoints: CheckpointPolicy::Final,
    };
    let floor = cfg.instance_for(10).unwrap().tail_moment(10);
    let records = run_sweep(&cfg, None).unwrap();
    let ok: Vec<f64> = records
        .iter()
        .filter(|r| !r.diverged)
        .map(|r| r.excess_risk)
        .collect();
    let all_above = ok.iter().all(|&e| e >= floor);
    let mean = ok.iter().sum::<f64>() / ok.len().max(1) as f64;
    outcome(
        !ok.is_empty() && all_above && mean >= floor && mean <= 3.0 * floor,
        format!(
            "mean {mean:.5} vs tail {floor:.6} (ratio {:.3}), {} of 20 runs usable, all >= tail: {all_above}",
            mean / floor,
            ok.len()
        ),
    )
}

fn schedule_sequence() -> Outcome {
    let eta0 = 0.1;
    let s = StepSchedule::new(500, eta0, LogBase::Natural).unwrap();
    let expected: Vec<f64> = (0..=500usize)
        .map(|t| match t {
            0..=150 => eta0,
            151..=218 => eta0 / 2.0,
            219..=287 => eta0 / 4.0,
            288..=356 => eta0 / 8.0,
            357..=425 => eta0 / 16.0,
            426..=494 => eta0 / 32.0,
            _ => eta0 / 64.0,
        })
        .collect();
    let got: Vec<f64> = (0..=500).map(|t| s.eta_at(t).unwrap()).collect();
    let mismatch = got
        .iter()
        .zip(&expected)
        .position(|(a, b)| a.to_bits() != b.to_bits());
    outcome(
        mismatch.is_none() && got.len() == 501,
        match mismatch {
            None => format!(
                "501 values bit-exact (h={}, T1={})",
                s.middle(),
                s.decay_len()
            ),
            Some(t) => format!("first mismatch at t={t}: {} vs {}", got[t], expected[t]),
        },
    )
}

fn without_wall_ms(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect()
}

fn determinism_and_replay() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let body = |out: &Path| {
        format!(
            r#"{{
  "schema": "v1", "alpha": 2.5, "beta": 1.5,
  "noise_sigma": 1.0, "lambda_scale": 1.0, "vstar_scale": 1.0,
  "ambient": "analytic",
  "t_grid": [0, 300, 1000], "m_grid": [20, 80],
  "repetitions": 3, "base_seed": 77,
  "model_kinds": ["quadratic", "linear"],
  "log_base": "natural", "checkpoints": "final",
  "output": {out:?}
}}"#
        )
    };
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let ca = CliConfigFile::from_json(&body(&a)).unwrap();
    let cb = CliConfigFile::from_json(&body(&b)).unwrap();
    cmd_sweep(&ca, Some(1), None).unwrap();
    cmd_sweep(&cb, None, None).unwrap();
    let identical = without_wall_ms(&a) == without_wall_ms(&b);

    let exp = ca.experiment().unwrap();
    let records = read_records(std::fs::File::open(&a).unwrap()).unwrap();
    let mismatches = records
        .iter()
        .filter(|r| {
            let job = exp
                .jobs()
                .into_iter()
                .find(|j| (j.point.grid_id, j.kind, j.rep) == (r.grid_id, r.kind, r.rep))
                .unwrap();
            job.seed != r.seed
                || exp.run_job(&job).unwrap().excess_risk.to_bits() != r.excess_risk.to_bits()
        })
        .count();
    outcome(
        identical && mismatches == 0 && records.len() == 36,
        format!(
            "CSVs identical modulo wall_ms: {identical}; {} of {} records replay exactly",
            records.len() - mismatches,
            records.len()
        ),
    )
}

fn formula_slopes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ts: Vec<usize> = (0..=40)
        .map(|k| 10f64.powf(3.0 + 4.0 * k as f64 / 40.0).round() as usize)
        .collect();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..20 {
        // (1, 4]
        let alpha = 4.0 - 3.0 * rng.random::<f64>();
        let beta = 4.0 - 3.0 * rng.random::<f64>();
        let inst = ProblemParams::new(alpha, beta, usize::MAX, Ambient::AnalyticInfinite)
            .build()
            .unwrap();
        let pts: Vec<(f64, f64)> = ts
            .iter()
            .map(|&t| (t as f64, upper_bound_terms(&inst, t).total()))
            .collect();
        let slope = fit_loglog(&pts).unwrap().slope;
        let want = rate_exponent(alpha, beta, ModelKind::Quadratic)
            .unwrap()
            .exponent;
        let gap = (-slope - want).abs();
        worst = worst.max(gap);
        if gap > 0.05 {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!(
            "{} of 20 pairs within 0.05, worst gap {worst:.4}",
            20 - failures
        ),
    )
}

fn main() -> ExitCode {
    let slope_a = run_sweep(&slope_sweep(3.0, 2.0), None).unwrap();
    let slope_b = run_sweep(&slope_sweep(2.5, 1.5), None).unwrap();
    let checks: Vec<(&str, Outcome)> = vec![
        ("1 closed-form risk vs Monte Carlo", closed_form_oracle()),
        (
            "2 slopes at alpha=3, beta=2",
            slopes(&slope_a, -0.4, -1.0 / 3.0),
        ),
        (
            "3 slopes at alpha=2.5, beta=1.5",
            slopes(&slope_b, -0.25, -0.2),
        ),
        ("4 quadratic beats linear", quadratic_beats_linear(&slope_a)),
        ("5 phase diagnostics", phase_diagnostics()),
        ("6 model-size saturation", saturation()),
        ("7 schedule sequence", schedule_sequence()),
        ("8 determinism and replay", determinism_and_replay()),
        ("9 bound-formula slopes", formula_slopes()),
    ];
    let mut failed = 0;
    for (name, o) in &checks {
        println!(
            "criterion {name}: {} | {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
