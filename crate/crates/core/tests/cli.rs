use std::path::PathBuf;
use std::process::{Command, Output};

use rydberg_fusion::sweep::{cmd_evolve, cmd_sweep, SweepConfig};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydberg-fusion"))
        .args(args)
        .output()
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rf-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn exit_codes() {
    let bad = scratch("bad.cfg");
    std::fs::write(&bad, "axis = time:0:0:2\n").unwrap();
    assert_eq!(bin(&["evolve", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&bad, "omega_a = lots\n").unwrap();
    assert_eq!(bin(&["evolve", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(bin(&["evolve", "--config", "/nonexistent/run.cfg"]).status.code(), Some(2));
    assert_eq!(bin(&["params", "lab"]).status.code(), Some(2));
    assert_eq!(bin(&["teleport"]).status.code(), Some(2));
    assert_eq!(bin(&["fuse", "cluster", "3", "3"]).status.code(), Some(2));
    assert_eq!(bin(&["fuse", "ghz", "1", "3"]).status.code(), Some(2));
    assert_eq!(bin(&["fuse", "ghz", "3", "3", "noisy"]).status.code(), Some(2));
    assert_eq!(bin(&["fuse", "ghz", "7", "6"]).status.code(), Some(4));
    assert_eq!(bin(&["--set", "gamma=-1", "evolve"]).status.code(), Some(3));
    assert_eq!(bin(&["sweep", "--set", "gamma=nan", "--set", "axis=gamma:0:1:2"]).status.code(), Some(3));
    assert_eq!(bin(&["sweep"]).status.code(), Some(2));
    assert_eq!(bin(&["params", "fig2"]).status.code(), Some(0));
}

#[test]
fn out_flag_matches_stdout() {
    let out = scratch("evolve.csv");
    let args = ["evolve", "--set", "axis=time:0:1t0:9", "--steps", "20000"];
    let stdout = bin(&args).stdout;
    let mut with_out = args.to_vec();
    let path = out.to_str().unwrap();
    with_out.extend(["--out", path]);
    let res = bin(&with_out);
    assert!(res.status.success());
    assert!(res.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), stdout);
}

#[test]
fn evolve_peaks_at_gate_time() {
    let cfg = SweepConfig::parse("preset = fig2\naxis = time:0:1t0:21\n", &[]).unwrap();
    let csv = cmd_evolve(&cfg).unwrap().render();
    let r = rows(&csv);
    assert_eq!(r.len(), 21);
    assert_eq!(
        csv.lines().next().unwrap(),
        "time,f_full,f_eff,f_full_gamma"
    );
    let last = r.last().unwrap();
    let f_eff: f64 = last[2].parse().unwrap();
    assert!(f_eff >= 1.0 - 1e-6);
    let best = r
        .iter()
        .map(|row| row[2].parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert_eq!(best, f_eff);
    assert!(csv.contains("# steps=f_full=320000"));
}

#[test]
fn entry_points_agree_at_the_baseline() {
    let evolve = SweepConfig::parse("gamma = 0\naxis = time:0:1t0:5\n", &[]).unwrap();
    let base: f64 = rows(&cmd_evolve(&evolve).unwrap().render()).last().unwrap()[1]
        .parse()
        .unwrap();

    let fig4 = SweepConfig::parse("axis = gamma:0:0.001:2\naxis = delta_omega:0:0.05:2\n", &[]).unwrap();
    let r = rows(&cmd_sweep(&fig4).unwrap().render());
    assert_eq!(r.len(), 4);
    assert_eq!((r[0][0].as_str(), r[0][1].as_str()), ("0", "0"));
    let f4: f64 = r[0][2].parse().unwrap();
    assert!((f4 - base).abs() <= 1e-9, "{f4} vs {base}");

    let fig5 = SweepConfig::parse("gamma = 0\naxis = delta_t:0.5:1:3\naxis = delta_omega:0:0.05:2\n", &[]).unwrap();
    let r = rows(&cmd_sweep(&fig5).unwrap().render());
    let row = r.iter().find(|row| row[0] == "1" && row[1] == "0").unwrap();
    let f5: f64 = row[2].parse().unwrap();
    assert!((f5 - base).abs() <= 1e-9, "{f5} vs {base}");

    // decay at 0.001 omega_b lowers the gate-time fidelity but not below 0.9
    let fig3 = SweepConfig::parse("axis = gamma:0:0.001:2\naxis = time:0.5t0:1t0:3\n", &[]).unwrap();
    let r = rows(&cmd_sweep(&fig3).unwrap().render());
    let f3: f64 = r.last().unwrap()[2].parse().unwrap();
    assert!(f3 > 0.9 && f3 < base, "{f3}");
}

#[test]
fn sweep_rows_follow_grid_order() {
    let cfg = SweepConfig::parse(
        "axis = delta_omega:-0.05:0.05:3\naxis = gamma:0:0.002:2\nsteps = 20000\n",
        &[],
    )
    .unwrap();
    let report = cmd_sweep(&cfg).unwrap();
    assert_eq!(report.header, vec!["delta_omega", "gamma", "fidelity"]);
    let keys: Vec<(String, String)> = report
        .rows
        .iter()
        .map(|r| (r[0].clone(), r[1].clone()))
        .collect();
    let want: Vec<(String, String)> = ["-0.05", "0", "0.05"]
        .iter()
        .flat_map(|d| ["0", "0.002"].iter().map(move |g| (d.to_string(), g.to_string())))
        .collect();
    assert_eq!(keys, want);
    assert!(report.footer.iter().any(|f| f == "steps=20000 per run"));
}

#[test]
fn figure_presets_load() {
    for fig in ["fig3", "fig4", "fig5"] {
        let cfg = SweepConfig::figure(fig).unwrap();
        assert_eq!(cfg.axes.len(), 2);
        assert!(cfg.axes.iter().all(|a| a.points == 41));
    }
    assert!(SweepConfig::figure("fig9").is_err());
}

#[test]
fn fuse_reports() {
    let out = bin(&["fuse", "ghz", "3", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("0.250000000").count(), 4);
    assert!(text.contains("total success probability 1.00000000"));

    let csv = scratch("fuse.csv");
    let out = bin(&["fuse", "w", "3", "4", "ideal", "--out", csv.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("total success probability 0.416666667"), "{text}");
    assert!(text.contains("5/12"));
    let body = std::fs::read_to_string(&csv).unwrap();
    assert!(body.starts_with("outcome,probability,verdict,correction,fidelity,target\n"));
    assert!(body.contains("# expected_success=5/12"));
}

#[test]
fn params_output() {
    let text = String::from_utf8(bin(&["params", "physical"]).stdout).unwrap();
    assert!(text.contains("omega_a   50 MHz"));
    assert!(text.contains("delta_rr  2000 MHz"));
    assert!(text.contains("gamma     0.01 MHz"));
    assert!(text.contains("antiblockade delta_a + delta_b = delta_rr: yes"));
    assert!(text.contains("(0.4*pi)"));
    let text = String::from_utf8(bin(&["params", "fig2"]).stdout).unwrap();
    assert!(text.contains("(40*pi)"));
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["sweep", "--set", "axis=delta_t:0.9:1.1:5", "--set", "gamma=0.001", "--steps", "20000"];
    assert_eq!(bin(&args).stdout, bin(&args).stdout);
    let args = ["fuse", "ghz", "4", "3", "--seed", "9"];
    assert_eq!(bin(&args).stdout, bin(&args).stdout);
}
