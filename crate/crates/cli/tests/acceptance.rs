//! Determinism of CLI reports: one PASS/FAIL line per command.

use std::process::{Command, ExitCode};

fn run(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_polfocus"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn main() -> ExitCode {
    let configs: &[&[&str]] = &[
        &["lens", "--theta-max", "0.1"],
        &["wavepacket", "--k0", "1", "--delta-r", "0.05", "--delta-z", "0.01"],
        &["detector", "--theta-max", "0.1"],
        &["povm-check", "--samples", "100", "--seed", "3"],
        &["sweep"],
        &["sweep", "--format", "csv"],
    ];
    let mut failures = Vec::new();
    for args in configs {
        let a = run(args);
        let b = run(args);
        if a != b || a.is_empty() {
            failures.push(args.join(" "));
        }
    }
    let ok = failures.is_empty();
    println!(
        "[{}] 8. Determinism: repeated CLI runs give bitwise-identical reports",
        if ok { "PASS" } else { "FAIL" }
    );
    println!("      {} configurations, each run twice", configs.len());
    for f in &failures {
        println!("      differs: polfocus {f}");
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
