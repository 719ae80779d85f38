//! Compiles a small C program against the generated header and static
//! library. Skipped when no C compiler or archive is available.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "qsched.h"

int main(void) {
    const double theta[] = {0.78, 0.14, 0.08};
    const double eta[] = {0.135, 0.232, 0.239, 0.394};
    const double power[] = {0.04, 0.08, 0.16, 10.14};
    QschedConfig *cfg = NULL;
    if (qsched_config_new(theta, 3, eta, power, 4, 40, &cfg) != QSCHED_STATUS_OK) return 1;
    QschedSolution *sol = NULL;
    if (qsched_solve(cfg, 0.05, &sol) != QSCHED_STATUS_OK) return 2;
    QschedPoint p;
    if (qsched_solution_point(sol, &p) != QSCHED_STATUS_OK) return 3;
    if (qsched_solve(cfg, 0.0, &sol) != QSCHED_STATUS_INFEASIBLE) return 4;
    printf("%.6f %.6f %s\n", p.delay, p.power, qsched_last_error_message()[0] ? "err" : "none");
    qsched_solution_free(sol);
    qsched_config_free(cfg);
    return 0;
}
"#;

fn compiler() -> Option<String> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .map(String::from)
}

#[test]
fn c_program_links_and_runs() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/qsched.h");
    assert!(header.exists(), "build script did not write the header");
    let Some(cc) = compiler() else {
        eprintln!("skipped: no C compiler");
        return;
    };
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let profile_dir = tmp.parent().unwrap().join(if cfg!(debug_assertions) { "debug" } else { "release" });
    let archive = profile_dir.join("libqsched_ffi.a");
    let src = tmp.join("qsched_ffi_smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();

    let syntax = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(crate_dir.join("include"))
        .arg(&src)
        .output()
        .unwrap();
    assert!(syntax.status.success(), "{}", String::from_utf8_lossy(&syntax.stderr));

    if !archive.exists() {
        eprintln!("skipped link step: {} not built", archive.display());
        return;
    }
    let exe = tmp.join("qsched_ffi_smoke");
    let link = Command::new(&cc)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&src)
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(link.status.success(), "{}", String::from_utf8_lossy(&link.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let out = String::from_utf8(run.stdout).unwrap();
    let fields: Vec<&str> = out.split_whitespace().collect();
    assert_eq!(fields[2], "err");
    assert!(fields[1].parse::<f64>().unwrap() <= 0.05 + 1e-9);
}
