use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use need_core::panel::write_long_csv;
use need_core::synth::{generate, SynthSpec};
use need_ffi::*;

fn last_error() -> String {
    let p = need_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn synthetic_panel(dir: &Path) -> PathBuf {
    let spec = SynthSpec {
        n_countries: 6,
        ..SynthSpec::preset("default", 9).unwrap()
    };
    let out = generate(&spec).unwrap();
    let path = dir.join("panel.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    write_long_csv(&out.panel, &mut f).unwrap();
    path
}

#[test]
fn panel_handle_lifecycle() {
    let tmp = tempfile::tempdir().unwrap();
    let path = CString::new(synthetic_panel(tmp.path()).to_str().unwrap()).unwrap();
    let mut panel: *mut NeedPanel = ptr::null_mut();
    assert_eq!(unsafe { need_panel_load(path.as_ptr(), false, &mut panel) }, NeedStatus::Ok);
    assert!(need_last_error().is_null());

    let (mut nc, mut no) = (0usize, 0usize);
    assert_eq!(unsafe { need_panel_counts(panel, &mut nc, &mut no) }, NeedStatus::Ok);
    assert_eq!((nc, no), (6, 6 * 32));

    let mut buf = [0 as std::ffi::c_char; 16];
    assert_eq!(unsafe { need_panel_country_code(panel, 0, buf.as_mut_ptr(), buf.len()) }, NeedStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(), "S001");
    assert_eq!(
        unsafe { need_panel_country_code(panel, 99, buf.as_mut_ptr(), buf.len()) },
        NeedStatus::Validation
    );

    let (mut years, mut g, mut c) = (vec![0i32; 40], vec![0.0; 40], vec![0.0; 40]);
    let mut len = 0usize;
    let st = unsafe {
        need_panel_series(panel, 1, years.as_mut_ptr(), g.as_mut_ptr(), c.as_mut_ptr(), 40, &mut len)
    };
    assert_eq!(st, NeedStatus::Ok);
    assert_eq!(len, 32);
    assert_eq!(years[0], 1991);
    let st = unsafe { need_panel_series(panel, 1, years.as_mut_ptr(), g.as_mut_ptr(), c.as_mut_ptr(), 4, &mut len) };
    assert_eq!(st, NeedStatus::Validation);

    unsafe { need_panel_free(panel) };
    unsafe { need_panel_free(ptr::null_mut()) };
}

#[test]
fn load_errors_map_to_status_codes() {
    let mut panel: *mut NeedPanel = ptr::null_mut();
    assert_eq!(unsafe { need_panel_load(ptr::null(), false, &mut panel) }, NeedStatus::NullPointer);
    assert!(last_error().contains("path"));

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n1,2\n").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { need_panel_load(bad.as_ptr(), false, &mut panel) }, NeedStatus::Data);
    assert!(panel.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn elasticity_recovers_a_constant_slope() {
    let years: Vec<i32> = (2000..2012).collect();
    let g: Vec<f64> = (0..12).map(|i| 1.0 + 0.1 * i as f64 + 0.02 * ((i * i) % 5) as f64).collect();
    let c: Vec<f64> = g.iter().map(|x| 0.3 + 0.8 * x).collect();
    let mut out = vec![0.0; 12];
    let st = unsafe { need_rolling_elasticity(years.as_ptr(), g.as_ptr(), c.as_ptr(), 12, 5, out.as_mut_ptr()) };
    assert_eq!(st, NeedStatus::Ok);
    assert!(out[..4].iter().all(|x| x.is_nan()));
    for x in &out[4..] {
        assert!((x - 0.8).abs() < 1e-10);
    }
    let st = unsafe { need_rolling_elasticity(years.as_ptr(), g.as_ptr(), c.as_ptr(), 12, 2, out.as_mut_ptr()) };
    assert_eq!(st, NeedStatus::Validation);
}

#[test]
fn smoother_and_tuning() {
    let obs = [1.0, 1.2, f64::NAN, 1.1, 0.9, 1.0, 1.3, 1.2, 1.1, 1.0];
    let mut sm = [0.0; 10];
    let mut var = [0.0; 10];
    let st = unsafe { need_smooth(obs.as_ptr(), 10, 0.01, 0.1, sm.as_mut_ptr(), var.as_mut_ptr()) };
    assert_eq!(st, NeedStatus::Ok);
    assert!(sm.iter().all(|x| x.is_finite()));
    assert!(var[2] > var[3]);
    let st = unsafe { need_smooth(obs.as_ptr(), 10, 0.0, 0.1, sm.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(st, NeedStatus::Validation);

    let (mut q, mut h) = (0.0, 0.0);
    assert_eq!(unsafe { need_tune_smoother(obs.as_ptr(), 10, &mut q, &mut h) }, NeedStatus::Ok);
    assert!(q > 0.0 && h > 0.0);
}

#[test]
fn energetics_rows() {
    let years: Vec<i32> = (2000..2008).collect();
    let eps: Vec<f64> = (0..8).map(|i| 0.5 + 0.1 * (i as f64).sin()).collect();
    let mut rows = vec![NeedEnergyRow::default(); 8];
    let mut len = 0;
    let st = unsafe { need_energetics(years.as_ptr(), eps.as_ptr(), 8, 0.5, rows.as_mut_ptr(), &mut len) };
    assert_eq!(st, NeedStatus::Ok);
    assert_eq!(len, 8);
    for r in &rows {
        assert!((r.hamiltonian - r.kinetic - r.potential).abs() < 1e-15);
        assert!((r.potential - 0.5 * (r.epsilon - 0.5).powi(2)).abs() < 1e-15);
    }
    let st = unsafe { need_energetics(years.as_ptr(), eps.as_ptr(), 3, 0.5, rows.as_mut_ptr(), &mut len) };
    assert_eq!(st, NeedStatus::Data);
}

#[test]
fn pipeline_runs_and_reports_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let input = synthetic_panel(tmp.path());
    let out = tmp.path().join("out");
    let settings = format!(
        "input = {}\nout = {}\nplots = false\nmethod = exogenous_tercile\n",
        input.display(),
        out.display()
    );
    let settings = CString::new(settings).unwrap();
    let cmd = CString::new("elasticity").unwrap();
    assert_eq!(unsafe { need_pipeline_run(cmd.as_ptr(), settings.as_ptr()) }, NeedStatus::Validation);
    assert!(last_error().contains("need ingest"));

    let cmd = CString::new("ingest").unwrap();
    assert_eq!(unsafe { need_pipeline_run(cmd.as_ptr(), settings.as_ptr()) }, NeedStatus::Ok);
    assert!(out.join("panel.csv").exists());

    let bad = CString::new("models = ols,nope\n").unwrap();
    let cmd = CString::new("forecast").unwrap();
    assert_eq!(unsafe { need_pipeline_run(cmd.as_ptr(), bad.as_ptr()) }, NeedStatus::Validation);
    assert!(last_error().contains("models"));

    let cmd = CString::new("dance").unwrap();
    assert_eq!(unsafe { need_pipeline_run(cmd.as_ptr(), ptr::null()) }, NeedStatus::Validation);
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(need_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn c_program_links_against_the_header() {
    let header_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(header_dir.join("need.h").exists());
    let target = Path::new(env!("CARGO_TARGET_TMPDIR")).parent().unwrap().to_path_buf();
    let lib = ["debug", "release"]
        .iter()
        .map(|p| target.join(p).join("libneed_ffi.a"))
        .find(|p| p.exists());
    let Some(lib) = lib else {
        eprintln!("static library not built; skipping C link check");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping C link check");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <math.h>
#include <stdio.h>
#include "need.h"

int main(void) {
    double obs[6] = {1.0, 1.1, NAN, 1.2, 1.1, 1.0};
    double sm[6];
    if (need_smooth(obs, 6, 0.01, 0.1, sm, NULL) != NEED_STATUS_OK) return 1;
    if (need_smooth(NULL, 6, 0.01, 0.1, sm, NULL) != NEED_STATUS_NULL_POINTER) return 2;
    if (need_last_error() == NULL) return 3;
    printf("%s %.6f\n", need_version(), sm[2]);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.path().join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with(env!("CARGO_PKG_VERSION")));
}
