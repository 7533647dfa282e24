//! Compiles a small C program against the generated header and the static
//! library. Skipped when no C compiler is on the PATH.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "feasikit.h"

int main(void) {
    const char *cfg =
        "{\"seed\": 2, \"problem\": {\"generator\": {\"kind\": \"random_balls\", \"m\": 5, \"n\": 3, "
        "\"interior_radius\": 0.2}}, \"solver\": {\"mode\": \"CERTIFIED_FINITE\"}}";
    FkExperiment *exp = NULL;
    if (fk_experiment_from_json(cfg, &exp) != FK_STATUS_OK) {
        fprintf(stderr, "%s\n", fk_last_error_message());
        return 1;
    }
    FkTrace *trace = NULL;
    if (fk_experiment_run(exp, &trace) != FK_STATUS_OK) return 2;
    FkRunStatus status;
    size_t k = 0;
    if (fk_trace_status(trace, &status, &k) != FK_STATUS_OK) return 3;
    double x[3];
    if (fk_trace_final_point(trace, x, 3) != FK_STATUS_OK) return 4;
    printf("%d %zu %s\n", (int)status, k, fk_version());
    fk_trace_free(trace);
    fk_experiment_free(exp);
    if (fk_experiment_from_json("{", &exp) != FK_STATUS_PARSE_ERROR || exp != NULL) return 5;
    return strlen(fk_last_error_message()) > 0 ? 0 : 6;
}
"#;

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok().filter(|o| o.status.success()).map(|_| cc)
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<this test> -> target/<profile>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libfeasikit_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let work = tempfile_dir();
    let src = work.join("smoke.c");
    let exe = work.join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let out = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8_lossy(&run.stdout);
    let fields: Vec<&str> = stdout.split_whitespace().collect();
    assert_eq!(fields[0], "0", "expected finite convergence, got {stdout}");
    assert_eq!(fields[2], env!("CARGO_PKG_VERSION"));
    std::fs::remove_dir_all(&work).unwrap();
}

fn tempfile_dir() -> PathBuf {
    let d = std::env::temp_dir().join(format!("feasikit-c-smoke-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
