//! Builds a small C program against the generated header and static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "greedycd.h"

int main(void) {
    double h[4] = {2.0, 0.5, 0.5, 1.0};
    double c[2] = {-1.0, 1.0};
    GcdProblem *p = NULL;
    if (gcd_problem_dense_quadratic(2, h, c, &p) != GCD_STATUS_OK) return 10;

    GcdRunOptions opts = gcd_run_options_default();
    opts.max_iters = 500;
    opts.default_max_iters = false;
    opts.tol = 1e-10;
    GcdTrace *t = NULL;
    if (gcd_run(p, "gs", NULL, NULL, 0, &opts, &t) != GCD_STATUS_OK) return 11;

    size_t len = 0;
    if (gcd_trace_x(t, NULL, 0, &len) != GCD_STATUS_OK || len != 2) return 12;
    double x[2];
    gcd_trace_x(t, x, 2, &len);
    GcdRunStatus st;
    gcd_trace_status(t, &st);
    printf("%.9f %.9f %d\n", x[0], x[1], (int)st);

    GcdTrace *bad = NULL;
    GcdStatus s = gcd_run(p, "bogus", NULL, NULL, 0, &opts, &bad);
    if (s != GCD_STATUS_INVALID_ARGUMENT || gcd_last_error() == NULL) return 13;

    gcd_trace_free(t);
    gcd_problem_free(p);
    return 0;
}
"#;

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// `target/<profile>`, the parent of this test binary's `deps/`.
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok().map(|_| cc)
}

#[test]
fn header_declares_every_exported_function() {
    let header = std::fs::read_to_string(manifest_dir().join("include/greedycd.h")).unwrap();
    let src = std::fs::read_to_string(manifest_dir().join("src/lib.rs")).unwrap();
    let exported: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exported.len() >= 20, "{exported:?}");
    for name in exported {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for ty in ["typedef struct GcdProblem GcdProblem;", "typedef struct GcdTrace GcdTrace;", "GCD_STATUS_PANIC = 10"] {
        assert!(header.contains(ty), "{ty}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let lib = profile_dir().join("libgreedycd_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let out = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest_dir().join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    // H x = −c  →  x = (6/7, −10/7)
    let text = String::from_utf8(run.stdout).unwrap();
    let v: Vec<f64> = text.split_whitespace().map(|s| s.parse().unwrap()).collect();
    assert!((v[0] - 6.0 / 7.0).abs() < 1e-8 && (v[1] + 10.0 / 7.0).abs() < 1e-8, "{text}");
    assert_eq!(v[2], 0.0, "converged");
}
