use std::path::{Path, PathBuf};
use std::process::Command;

const CLIENT: &str = r#"
#include <math.h>
#include <stdio.h>
#include "sigma2.h"

int main(void) {
    Sigma2Chart *chart = NULL;
    if (sigma2_chart_from_catalog("gv_example", &chart) != SIGMA2_STATUS_OK) return 1;
    double p[3] = {0.5, 0.25, -1.0};
    double r = 0.0;
    if (sigma2_scalar_curvature(chart, p, &r) != SIGMA2_STATUS_OK) return 2;
    if (fabs(r + 8.0 / (1.0 + 0.25 + 0.0625)) > 1e-12) return 3;
    Sigma2Residuals res;
    if (sigma2_residuals(chart, p, -0.375, &res) != SIGMA2_STATUS_OK) return 4;
    if (res.eq1_norm > 1e-10) return 5;
    sigma2_chart_free(chart);

    if (sigma2_chart_from_catalog("torus", &chart) != SIGMA2_STATUS_UNKNOWN_METRIC) return 6;
    printf("%s|%s\n", sigma2_version(), sigma2_last_error());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = target_dir().join("libsigma2_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let bin = dir.path().join("client");
    std::fs::write(&src, CLIENT).unwrap();

    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler runs");
    assert!(status.success());

    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.trim(), format!("{}|unknown catalog metric `torus`", env!("CARGO_PKG_VERSION")));
}
