use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use icu_acuity::ingest::EncounterSeries;
use icu_acuity::model::{init_params, save_model, Model, ModelConfig, Normalization};
use icu_acuity::variables::VariableSpecs;
use icu_acuity_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(icu_last_error()) }.to_string_lossy().into_owned()
}

fn normal_grid(hours: usize) -> Vec<f64> {
    let s = EncounterSeries::normal("e", hours, &VariableSpecs::default());
    (0..hours).flat_map(|t| s.row(t).to_vec()).collect()
}

fn saved_model(dir: &std::path::Path) -> (Model, CString) {
    let config = ModelConfig {
        hidden_dim: 6,
        seed: 3,
        ..Default::default()
    };
    let cohort: Vec<EncounterSeries> = (0..4)
        .map(|i| {
            let mut row = [0.0; ICU_N_VARIABLES];
            row.iter_mut().enumerate().for_each(|(j, v)| *v = 1.0 + (i * 7 + j) as f64);
            EncounterSeries::constant(&format!("e{i}"), 3, row, i % 2 == 0)
        })
        .collect();
    let norm = Normalization::fit(&cohort, &config.feature_subset.variables()).unwrap();
    let model = Model::new(config.clone(), norm, init_params(&config).unwrap()).unwrap();
    let path = dir.join("model.bin");
    save_model(&path, &model).unwrap();
    (model, CString::new(path.to_str().unwrap()).unwrap())
}

#[test]
fn header_is_current_and_compiles() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/icu_acuity.h")).unwrap();
    for name in ["icu_model_load", "icu_stream_push", "icu_sofa_scores", "icu_roc_auc", "ICU_STATUS_OK"] {
        assert!(header.contains(name), "{name} missing from header");
    }
    assert!(header.contains("#define ICU_N_VARIABLES 14"));
    let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-xc", concat!(env!("CARGO_MANIFEST_DIR"), "/include/icu_acuity.h")])
        .output()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn model_predict_and_stream_agree() {
    let dir = tempfile::tempdir().unwrap();
    let (model, path) = saved_model(dir.path());
    let mut grid = normal_grid(5);
    grid[3 * ICU_N_VARIABLES] = 55.0;
    let series = EncounterSeries::from_grid("e", "e", grid.clone(), vec![true; grid.len()], false).unwrap();
    let expected = model.predict(&series).unwrap();

    unsafe {
        let mut handle = ptr::null_mut();
        assert_eq!(icu_model_load(path.as_ptr(), &mut handle), IcuStatus::Ok);
        assert_eq!(icu_model_hidden_dim(handle), 6);
        let mut probs = vec![0.0; 5];
        let mut att = vec![f64::NAN; 25];
        assert_eq!(icu_model_predict(handle, grid.as_ptr(), 5, probs.as_mut_ptr(), att.as_mut_ptr()), IcuStatus::Ok);
        assert_eq!(probs, expected.probs);
        for t in 0..5 {
            assert_eq!(&att[t * 5..t * 5 + 5], expected.attention.row(t));
        }

        let mut stream = ptr::null_mut();
        assert_eq!(icu_stream_new(handle, &mut stream), IcuStatus::Ok);
        icu_model_free(handle);
        for t in 0..5 {
            let mut p = 0.0;
            assert_eq!(icu_stream_push(stream, grid[t * ICU_N_VARIABLES..].as_ptr(), &mut p), IcuStatus::Ok);
            assert_eq!(p, expected.probs[t]);
        }
        assert_eq!(icu_stream_hours(stream), 5);
        let bad = [f64::NAN; ICU_N_VARIABLES];
        let mut p = 0.0;
        assert_eq!(icu_stream_push(stream, bad.as_ptr(), &mut p), IcuStatus::InvalidArgument);
        assert_eq!(icu_stream_hours(stream), 5);
        icu_stream_free(stream);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut handle = ptr::null_mut();
        let missing = CString::new("/nonexistent/model.bin").unwrap();
        assert_eq!(icu_model_load(missing.as_ptr(), &mut handle), IcuStatus::Io);
        assert!(handle.is_null());
        assert!(last_error().contains("/nonexistent/model.bin"));
        assert_eq!(icu_model_load(ptr::null(), &mut handle), IcuStatus::NullPointer);
        assert_eq!(icu_model_predict(ptr::null(), ptr::null(), 1, ptr::null_mut(), ptr::null_mut()), IcuStatus::NullPointer);
        assert_eq!(icu_model_hidden_dim(ptr::null()), 0);
        icu_model_free(ptr::null_mut());
        icu_stream_free(ptr::null_mut());
        icu_bedside_free(ptr::null_mut());
        assert!(!CStr::from_ptr(icu_version()).to_str().unwrap().is_empty());
    }
}

#[test]
fn sofa_and_bedside() {
    let mut grid = normal_grid(3);
    let map = 0;
    grid[ICU_N_VARIABLES + map] = 65.0;
    let mut comps = vec![9u8; 18];
    let mut totals = vec![9u8; 3];
    unsafe {
        assert_eq!(icu_sofa_scores(grid.as_ptr(), ptr::null(), 3, comps.as_mut_ptr(), totals.as_mut_ptr()), IcuStatus::Ok);
        assert_eq!(icu_sofa_scores(grid.as_ptr(), ptr::null(), 0, comps.as_mut_ptr(), ptr::null_mut()), IcuStatus::Shape);
    }
    assert_eq!(totals, [0, 1, 1]);
    assert_eq!(&comps[6..12], &[1, 0, 0, 0, 0, 0]);

    unsafe {
        let mut table = ptr::null_mut();
        assert_eq!(icu_bedside_default(&mut table), IcuStatus::Ok);
        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(icu_bedside_probability(table, 0, &mut lo), IcuStatus::Ok);
        assert_eq!(icu_bedside_probability(table, 24, &mut hi), IcuStatus::Ok);
        assert!(lo < hi);
        assert_eq!(icu_bedside_probability(table, 25, &mut hi), IcuStatus::InvalidArgument);
        icu_bedside_free(table);
    }
}

#[test]
fn auc() {
    let scores = [0.1, 0.4, 0.35, 0.8];
    let labels = [0u8, 0, 1, 1];
    let mut auc = 0.0;
    unsafe {
        assert_eq!(icu_roc_auc(scores.as_ptr(), labels.as_ptr(), 4, &mut auc), IcuStatus::Ok);
        assert_eq!(auc, 0.75);
        assert_eq!(icu_roc_auc(scores.as_ptr(), [1u8; 4].as_ptr(), 4, &mut auc), IcuStatus::UndefinedAuc);
    }
    assert!(last_error().contains("single class"));
}
