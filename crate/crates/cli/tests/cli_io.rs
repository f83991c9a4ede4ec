//! CSV ingestion and document serialization through the public API.

use std::io::Write;

use cvci::csvio::{load_csv, ColumnSpec};
use cvci::document::{from_json, to_json, ConfigEcho, ResultDocument, ResultsSection};
use cvci::error::CliError;
use cvci_core::data::SourceTag;

fn write_temp(content: &str) -> tempfile::NamedTempFile {
    let mut file = tempfile::NamedTempFile::new().expect("temp file");
    file.write_all(content.as_bytes()).expect("write");
    file.flush().expect("flush");
    file
}

fn spec(covariates: &[&str]) -> ColumnSpec {
    ColumnSpec {
        outcome: "y".to_string(),
        treatment: "w".to_string(),
        covariates: covariates.iter().map(|c| c.to_string()).collect(),
    }
}

#[test]
fn loads_selected_columns_in_model_order() {
    // Column order in the file differs from the requested model order;
    // extra columns are ignored.
    let file = write_temp("id,x1,w,y,junk\n7,0.5,1,2.25,a\n8,-1.0,0,0.75,b\n9,2.0,0,1.5,c\n");
    let ds = load_csv(file.path(), &spec(&["x1"]), SourceTag::Experimental).expect("load");
    assert_eq!(ds.n(), 3);
    assert_eq!(ds.n_covariates(), 1);
    assert_eq!(ds.y(), &[2.25, 0.75, 1.5]);
    assert_eq!(ds.w(), &[1, 0, 0]);
    assert_eq!(ds.z_row(0), &[0.5]);
    assert_eq!(ds.z_row(2), &[2.0]);
    assert_eq!(ds.tag(), SourceTag::Experimental);
}

#[test]
fn whitespace_around_fields_is_tolerated() {
    let file = write_temp("y, w ,x1\n 1.0 ,1, 0.25 \n2.0,0,0.5\n");
    let ds = load_csv(file.path(), &spec(&["x1"]), SourceTag::Observational).expect("load");
    assert_eq!(ds.y(), &[1.0, 2.0]);
    assert_eq!(ds.z_row(0), &[0.25]);
}

#[test]
fn missing_column_is_named_in_the_error() {
    let file = write_temp("y,w\n1.0,1\n0.5,0\n");
    let err = load_csv(file.path(), &spec(&["age"]), SourceTag::Experimental).unwrap_err();
    match &err {
        CliError::Parse { row, column, message, .. } => {
            assert_eq!(*row, 1);
            assert_eq!(column, "age");
            assert_eq!(message, "column not found in header");
        }
        other => panic!("expected parse error, got {other:?}"),
    }
    assert_eq!(err.kind(), "parse");
}

#[test]
fn bad_number_reports_row_and_column() {
    let file = write_temp("y,w,x1\n1.0,1,0.5\n2.0,0,oops\n");
    let err = load_csv(file.path(), &spec(&["x1"]), SourceTag::Experimental).unwrap_err();
    match &err {
        CliError::Parse { row, column, .. } => {
            // Header is line 1, so the offending record is line 3.
            assert_eq!(*row, 3);
            assert_eq!(column, "x1");
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn non_finite_values_are_rejected() {
    let file = write_temp("y,w\nNaN,1\n2.0,0\n");
    let err = load_csv(file.path(), &spec(&[]), SourceTag::Experimental).unwrap_err();
    assert_eq!(err.kind(), "parse");
    let file = write_temp("y,w\ninf,1\n2.0,0\n");
    let err = load_csv(file.path(), &spec(&[]), SourceTag::Experimental).unwrap_err();
    assert_eq!(err.kind(), "parse");
}

#[test]
fn fractional_treatment_is_rejected() {
    let file = write_temp("y,w\n1.0,0.5\n2.0,0\n");
    let err = load_csv(file.path(), &spec(&[]), SourceTag::Experimental).unwrap_err();
    assert_eq!(err.kind(), "non_binary_treatment");
    assert!(err.to_string().contains("0.5"), "error names the value: {err}");
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_csv(
        std::path::Path::new("/nonexistent/file.csv"),
        &spec(&[]),
        SourceTag::Experimental,
    )
    .unwrap_err();
    assert_eq!(err.kind(), "io");
}

mod numeric_fidelity {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        // Outcomes written with full precision come back bit-for-bit.
        #[test]
        fn any_finite_outcomes_survive_csv_loading(
            ys in proptest::collection::vec(-1.0e12_f64..1.0e12, 2..20),
            flips in proptest::collection::vec(any::<bool>(), 20),
        ) {
            let mut text = String::from("y,w\n");
            for (i, v) in ys.iter().enumerate() {
                text.push_str(&format!("{:.17e},{}\n", v, flips[i] as u8));
            }
            let file = write_temp(&text);
            let ds = load_csv(file.path(), &spec(&[]), SourceTag::Experimental).unwrap();
            prop_assert_eq!(ds.n(), ys.len());
            for (i, v) in ys.iter().enumerate() {
                prop_assert_eq!(ds.y()[i], *v);
                prop_assert_eq!(ds.w()[i], flips[i] as u8);
            }
        }
    }
}

#[test]
fn documents_survive_a_disk_round_trip() {
    let doc = ResultDocument {
        schema_version: 1,
        command: "estimate".to_string(),
        config: ConfigEcho {
            exp: Some("a.csv".to_string()),
            k: Some("loo".to_string()),
            ..ConfigEcho::default()
        },
        seed: 99,
        results: ResultsSection::default(),
        wall_clock_ms: 5,
    };
    let text = to_json(&doc);
    let file = write_temp(&text);
    let reread_text = std::fs::read_to_string(file.path()).expect("read");
    let reread = from_json(&reread_text).expect("parse");
    assert_eq!(reread, doc);
    assert_eq!(to_json(&reread), text);
}
