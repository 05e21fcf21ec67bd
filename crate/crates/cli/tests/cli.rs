use std::path::Path;
use std::process::{Command, Output};

use quadsgd::commands::{cmd_diagnose, cmd_fit, cmd_sweep, fit_records, summarize, Stub};
use quadsgd::records::{read_records, HEADER};
use quadsgd::CliConfigFile;
use quadsgd_core::{derive_seed, excess_risk, train, GridPoint, Job, ModelKind, SampleStream};
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadsgd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn small_sweep(output: &Path) -> String {
    format!(
        r#"{{
  "schema": "v1",
  "alpha": 3.0, "beta": 2.0,
  "noise_sigma": 1.0, "lambda_scale": 1.0, "vstar_scale": 1.0,
  "ambient": {{"finite_d": 60}},
  "t_grid": [200, 400, 800], "m_grid": [30],
  "repetitions": 3, "base_seed": 5,
  "model_kinds": ["quadratic", "linear"],
  "log_base": "natural",
  "checkpoints": "final",
  "output": {output:?}
}}"#
    )
}

fn diag_config(output: &Path, t: usize) -> String {
    format!(
        r#"{{
  "schema": "v1",
  "alpha": 3.0, "beta": 2.0,
  "noise_sigma": 1.0, "lambda_scale": 1.0, "vstar_scale": 1.0,
  "ambient": {{"finite_d": 40}},
  "t_grid": [{t}], "m_grid": [40],
  "repetitions": 4, "base_seed": 9,
  "model_kinds": ["quadratic"],
  "log_base": "natural",
  "checkpoints": {{"phase": 3}},
  "output": {output:?}
}}"#
    )
}

fn strip_wall_ms(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect()
}

#[test]
fn rates_subcommand() {
    let out = bin(&["rates", "--alpha", "3", "--beta", "2", "--budget", "1e6"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("regime\tAlphaDominant"), "{text}");
    assert!(text.contains("quadratic\t0.4000"));
    assert!(text.contains("linear\t0.3333"));
    assert!(text.contains("optimal_M\t"));

    let bad = bin(&["rates", "--alpha", "0.5", "--beta", "2"]);
    assert!(!bad.status.success());
    assert!(bad.stdout.is_empty());
    assert!(!bad.stderr.is_empty());
}

#[test]
fn sweep_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out/sweep.csv");
    let cfg_path = write_config(dir.path(), "sweep.json", &small_sweep(&csv));

    let out = bin(&[
        "sweep",
        "--config",
        cfg_path.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
    assert_eq!(text.lines().count(), 1 + 3 * 2 * 3);
    let summary: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/sweep.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["schema"], "v1");
    assert_eq!(summary["aggregates"].as_array().unwrap().len(), 6);
    assert_eq!(summary["fits"].as_array().unwrap().len(), 2);

    // fit from disk equals fit in process, bit for bit
    let cfg = CliConfigFile::load(&cfg_path).unwrap();
    let in_process = cmd_sweep(&cfg, Some(1), None).unwrap();
    for kind in [ModelKind::Quadratic, ModelKind::Linear] {
        let from_disk = cmd_fit(&csv, kind).unwrap();
        let direct = fit_records(&in_process.records, kind).unwrap();
        assert_eq!(from_disk, direct);
        let row = in_process
            .summary
            .fits
            .iter()
            .find(|f| f.model_kind == kind.as_str())
            .unwrap();
        assert_eq!(row.slope.to_bits(), from_disk.slope.to_bits());
        assert_eq!(row.intercept.to_bits(), from_disk.intercept.to_bits());
    }
    let parsed = read_records(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(summarize(&parsed).unwrap(), in_process.summary);

    let out = bin(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--model",
        "quadratic",
    ]);
    assert!(out.status.success());
    let fit: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(fit["model_kind"], "quadratic");
    assert_eq!(fit["M"], 30);
    assert_eq!(fit["n_points"], 3);
    assert!((fit["theory_exponent"].as_f64().unwrap() - 0.4).abs() < 1e-12);
}

#[test]
fn sweeps_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let ca = write_config(dir.path(), "a.json", &small_sweep(&a));
    let cb = write_config(dir.path(), "b.json", &small_sweep(&b));
    assert!(
        bin(&["sweep", "--config", ca.to_str().unwrap(), "--threads", "1"])
            .status
            .success()
    );
    assert!(
        bin(&["sweep", "--config", cb.to_str().unwrap(), "--threads", "3"])
            .status
            .success()
    );
    let ta = std::fs::read_to_string(&a).unwrap();
    let tb = std::fs::read_to_string(&b).unwrap();
    assert_eq!(strip_wall_ms(&ta), strip_wall_ms(&tb));

    let c = dir.path().join("c.csv");
    let cc = write_config(dir.path(), "c.json", &small_sweep(&c));
    assert!(
        bin(&["sweep", "--config", cc.to_str().unwrap(), "--seed", "6"])
            .status
            .success()
    );
    assert_ne!(
        strip_wall_ms(&ta),
        strip_wall_ms(&std::fs::read_to_string(&c).unwrap())
    );
}

#[test]
fn records_replay() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let cfg = CliConfigFile::from_json(&small_sweep(&csv)).unwrap();
    cmd_sweep(&cfg, None, None).unwrap();
    let exp = cfg.experiment().unwrap();
    let records = read_records(std::fs::File::open(&csv).unwrap()).unwrap();
    for r in &records {
        assert_eq!(r.seed, derive_seed(exp.base_seed, r.grid_id, r.kind, r.rep));
        let inst = exp.instance_for(r.model_size).unwrap();
        let plan = exp.plan_for(&inst, r.total_steps).unwrap();
        let mut stream = SampleStream::new(&inst, r.seed);
        let sched = plan.schedule().unwrap();
        let out = train(
            &inst,
            sched,
            &mut stream,
            r.kind,
            &exp.init_for(),
            &[r.total_steps],
        )
        .unwrap();
        let replay = excess_risk(&inst, r.kind, &out.params).unwrap().excess;
        assert_eq!(replay.to_bits(), r.excess_risk.to_bits());
        let job = Job {
            point: GridPoint {
                grid_id: r.grid_id,
                total_steps: r.total_steps,
                model_size: r.model_size,
            },
            kind: r.kind,
            rep: r.rep,
            seed: r.seed,
        };
        assert_eq!(
            exp.run_job(&job).unwrap().excess_risk.to_bits(),
            r.excess_risk.to_bits()
        );
    }
}

#[test]
fn fit_rejects_headerless_and_mixed_input() {
    let dir = tempfile::tempdir().unwrap();
    let bare = dir.path().join("bare.csv");
    std::fs::write(&bare, "0,100,10,3,2,quadratic,0,1,0.5,false,1.0\n").unwrap();
    let out = bin(&[
        "fit",
        "--input",
        bare.to_str().unwrap(),
        "--model",
        "quadratic",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("header"));

    let mixed = dir.path().join("mixed.csv");
    let rows = [
        "0,100,10,3,2,quadratic,0,1,0.5,false,1.0",
        "1,200,10,3,2,quadratic,0,2,0.4,false,1.0",
        "2,100,20,3,2,quadratic,0,3,0.3,false,1.0",
        "3,200,20,3,2,quadratic,0,4,0.2,false,1.0",
    ];
    std::fs::write(
        &mixed,
        format!("{}\n{}\n", HEADER.join(","), rows.join("\n")),
    )
    .unwrap();
    assert!(cmd_fit(&mixed, ModelKind::Quadratic).is_err());
    let missing = dir.path().join("nope.csv");
    assert!(!bin(&[
        "fit",
        "--input",
        missing.to_str().unwrap(),
        "--model",
        "linear"
    ])
    .status
    .success());
    assert!(
        !bin(&["fit", "--input", bare.to_str().unwrap(), "--model", "cubic"])
            .status
            .success()
    );
}

#[test]
fn bad_config_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    let body = small_sweep(&csv).replace("\"repetitions\"", "\"extra\": 1, \"repetitions\"");
    let path = write_config(dir.path(), "bad.json", &body);
    let out = bin(&["sweep", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    assert!(!csv.exists());
}

#[test]
fn diagnose_stubs_and_zero_steps() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("unused.csv");
    let cfg = CliConfigFile::from_json(&diag_config(&out_csv, 600)).unwrap();

    let opt = cmd_diagnose(&cfg, None, None, Some(Stub::Optimum)).unwrap();
    assert_eq!(opt.phase1_hit_fraction, Some(1.0));
    assert_eq!(opt.phase1_tail_fraction, Some(1.0));
    assert_eq!(opt.phase2_confinement_fraction, Some(1.0));

    let zero = cmd_diagnose(&cfg, None, None, Some(Stub::Zero)).unwrap();
    assert_eq!(zero.phase1_hit_fraction, Some(0.0));
    assert_eq!(zero.phase1_tail_fraction, Some(1.0));

    let real = cmd_diagnose(&cfg, Some(2), None, None).unwrap();
    for f in [
        real.phase1_hit_fraction,
        real.phase1_tail_fraction,
        real.phase2_confinement_fraction,
    ] {
        let f = f.unwrap_or(0.0);
        assert!((0.0..=1.0).contains(&f));
    }
    assert_eq!(real, cmd_diagnose(&cfg, Some(1), None, None).unwrap());

    let path = write_config(dir.path(), "zero.json", &diag_config(&out_csv, 0));
    let out = bin(&["diagnose", "--config", path.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["T"], 0);
    assert!(report["T1"].is_null());
    assert!(report["phase2_confinement_fraction"].is_null());
    assert!(report["phase1_hit_fraction"].is_null());

    let path = write_config(dir.path(), "stub.json", &diag_config(&out_csv, 600));
    let out = bin(&[
        "diagnose",
        "--config",
        path.to_str().unwrap(),
        "--stub",
        "optimum",
    ]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["phase2_confinement_fraction"], 1.0);
}
