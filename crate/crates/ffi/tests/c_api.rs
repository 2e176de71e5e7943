use std::ffi::{c_char, CStr, CString};
use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use mep_ffi::*;

const WORKED: &str = "1: a\n2: b\n3: + 1, 2\n4: c\n5: d\n6: + 4, 5\n7: * 3, 5\n8: + 2, 6\n";

fn text(call: impl Fn(*mut c_char, usize, *mut usize) -> MepStatus) -> String {
    let mut needed = 0;
    assert_eq!(call(ptr::null_mut(), 0, &mut needed), MepStatus::BufferTooSmall);
    let mut buf = vec![0 as c_char; needed];
    assert_eq!(call(buf.as_mut_ptr(), buf.len(), &mut needed), MepStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned()
}

fn last_error() -> String {
    let p = mep_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn synthetic_csv(dir: &std::path::Path) -> PathBuf {
    let mut csv = String::from("ID,KSLOC,EffortMM\n");
    for i in 1..=12 {
        let s = i as f64 * 7.5;
        csv.push_str(&format!("{i},{s},{}\n", 2.5 * s.powf(0.9)));
    }
    let path = dir.join("kemerer.csv");
    fs::write(&path, csv).unwrap();
    path
}

#[test]
fn chromosome_round_trip() {
    let src = CString::new(WORKED).unwrap();
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(mep_chromosome_parse(src.as_ptr(), &mut c), MepStatus::Ok);
        assert_eq!(mep_chromosome_len(c), 8);
        assert_eq!(mep_chromosome_terminal_count(c), 4);
        assert_eq!(text(|b, n, k| mep_chromosome_decode(c, 6, b, n, k)), "((a + b) * d)");
        assert_eq!(text(|b, n, k| mep_chromosome_decode(c, 7, b, n, k)), "(b + (c + d))");
        let dot = text(|b, n, k| mep_chromosome_dot(c, 2, b, n, k));
        assert!(dot.starts_with("digraph expression {"));
        let mut out = [0.0; 8];
        assert_eq!(mep_chromosome_evaluate(c, [1.0, 2.0, 3.0, 4.0].as_ptr(), 4, out.as_mut_ptr(), 8), MepStatus::Ok);
        assert_eq!(out, [1.0, 2.0, 3.0, 3.0, 4.0, 7.0, 12.0, 9.0]);
        assert_eq!(mep_chromosome_evaluate(c, [1.0].as_ptr(), 1, out.as_mut_ptr(), 8), MepStatus::InvalidArgument);
        assert!(last_error().contains("expected 4"));
        assert_eq!(mep_chromosome_decode(c, 8, ptr::null_mut(), 0, ptr::null_mut()), MepStatus::InvalidArgument);
        mep_chromosome_free(c);
    }
}

#[test]
fn errors_are_codes() {
    let mut c = ptr::null_mut();
    let bad = CString::new("1: + 1, 1\n").unwrap();
    unsafe {
        assert_ne!(mep_chromosome_parse(bad.as_ptr(), &mut c), MepStatus::Ok);
        assert!(c.is_null());
        assert_eq!(mep_chromosome_parse(ptr::null(), &mut c), MepStatus::NullPointer);
        assert!(last_error().contains("text"));
        let mut d = ptr::null_mut();
        let missing = CString::new("/nonexistent/kemerer.csv").unwrap();
        assert_eq!(mep_dataset_load(missing.as_ptr(), ptr::null(), ptr::null(), &mut d), MepStatus::IoError);
        let unknown = CString::new("/tmp/other.csv").unwrap();
        assert_eq!(mep_dataset_load(unknown.as_ptr(), ptr::null(), ptr::null(), &mut d), MepStatus::InvalidArgument);
        assert!(d.is_null());
        let mut ok = MepParams { population_size: 0, ..std::mem::zeroed() };
        assert_eq!(mep_params_default(&mut ok), MepStatus::Ok);
        assert!(mep_last_error_message().is_null());
        mep_dataset_free(ptr::null_mut());
        mep_run_free(ptr::null_mut());
        mep_chromosome_free(ptr::null_mut());
    }
    assert_eq!(mep_capacity(2, 8), 22);
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(synthetic_csv(dir.path()).to_str().unwrap()).unwrap();
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(mep_dataset_load(path.as_ptr(), ptr::null(), ptr::null(), &mut d), MepStatus::Ok);
        assert_eq!((mep_dataset_len(d), mep_dataset_feature_count(d)), (12, 1));
        let mut params = std::mem::zeroed();
        mep_params_default(&mut params);
        params.population_size = 20;
        params.generations = 15;
        params.seed = 3;
        let run = |p: &MepParams| {
            let mut r = ptr::null_mut();
            assert_eq!(mep_run(d, p, &mut r), MepStatus::Ok);
            r
        };
        let (a, b) = (run(&params), run(&params));
        let json = |r| text(|buf, n, k| mep_run_json(r, buf, n, k));
        assert_eq!(json(a), json(b));
        let mut fitness = f64::NAN;
        assert_eq!(mep_run_best_fitness(a, &mut fitness), MepStatus::Ok);
        let mut len = 0;
        assert_eq!(mep_run_trace(a, ptr::null_mut(), 0, &mut len), MepStatus::BufferTooSmall);
        let mut trace = vec![0.0; len];
        assert_eq!(mep_run_trace(a, trace.as_mut_ptr(), len, &mut len), MepStatus::Ok);
        assert_eq!(len, 15);
        assert_eq!(*trace.last().unwrap(), fitness);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        let expr = text(|buf, n, k| mep_run_expression(a, buf, n, k));
        let mut best = ptr::null_mut();
        assert_eq!(mep_run_best_chromosome(a, &mut best), MepStatus::Ok);
        let mut gens = 0;
        mep_run_generation_of_best(a, &mut gens);
        assert!(gens <= 15);
        let any_gene_matches =
            (0..mep_chromosome_len(best)).any(|g| text(|buf, n, k| mep_chromosome_decode(best, g, buf, n, k)) == expr);
        assert!(any_gene_matches);
        params.crossover_kind = 9;
        let mut r = ptr::null_mut();
        assert_eq!(mep_run(d, &params, &mut r), MepStatus::InvalidArgument);
        mep_chromosome_free(best);
        mep_run_free(a);
        mep_run_free(b);
        mep_dataset_free(d);
    }
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

/// Compiles and runs a C program against the generated header and the
/// static library.
#[test]
fn c_program_links_against_header() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let lib = target_dir().join("libmep_ffi.a");
    assert!(lib.is_file(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    fs::write(
        &src,
        r#"#include <stdio.h>
#include <string.h>
#include "mep.h"

int main(void) {
    const char *text = "1: a\n2: b\n3: + 1, 2\n4: c\n5: d\n6: + 4, 5\n7: * 3, 5\n8: + 2, 6\n";
    MepChromosome *c = NULL;
    if (mep_chromosome_parse(text, &c) != MEP_STATUS_OK) return 1;
    char buf[64];
    size_t needed = 0;
    if (mep_chromosome_decode(c, 6, buf, sizeof buf, &needed) != MEP_STATUS_OK) return 2;
    if (strcmp(buf, "((a + b) * d)") != 0) return 3;
    if (mep_chromosome_decode(c, 0, buf, 1, &needed) != MEP_STATUS_BUFFER_TOO_SMALL || needed != 2) return 4;
    if (mep_capacity(2, 8) != 22) return 5;
    if (mep_chromosome_parse(NULL, &c) != MEP_STATUS_NULL_POINTER || mep_last_error_message() == NULL) return 6;
    mep_chromosome_free(c);
    puts("ok");
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
