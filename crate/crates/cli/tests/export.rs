use mcf_cli::export::{emit_csv, parse_records_csv, records_to_csv, RECORD_HEADER};
use mcf_core::diagnostics::DiagnosticsRecord;
use proptest::prelude::*;

fn rec(t: f64, neck: Option<(f64, f64)>) -> DiagnosticsRecord {
    DiagnosticsRecord {
        t,
        t_minus_t: 0.0183 - t,
        h0: 12.5,
        hs0: 0.25,
        r_neck: neck.map(|n| n.0),
        z_neck: neck.map(|n| n.1),
        intersections: 1,
        tip_points: 540,
        outer_points: 31000,
    }
}

#[test]
fn single_record_is_two_lines() {
    let text = records_to_csv(&[rec(0.0, None)], &[]);
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text.lines().next().unwrap(), RECORD_HEADER);
}

#[test]
fn absent_neck_leaves_empty_fields() {
    let text = records_to_csv(&[rec(0.001, None)], &[]);
    let row = text.lines().nth(1).unwrap();
    assert!(row.contains(",,"), "{row}");
    assert_eq!(row.split(',').nth(4), Some(""));
    assert_eq!(row.split(',').nth(5), Some(""));
}

#[test]
fn metadata_is_commented_and_skipped() {
    let records = vec![rec(0.0, None), rec(1e-4, Some((0.1, 3.0)))];
    let text = records_to_csv(&records, &["params n=2".into(), "grid dr=1".into()]);
    assert!(text.starts_with("# params n=2\n# grid dr=1\n"));
    assert_eq!(parse_records_csv(&text).unwrap(), records);
}

#[test]
fn empty_record_set_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    assert!(emit_csv(&[], &[], &dir.path().join("r.csv")).is_err());
}

#[test]
fn unwritable_path_reports_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("r.csv");
    let err = emit_csv(&[rec(0.0, None)], &[], &path).unwrap_err();
    assert!(format!("{err:#}").contains("missing"));
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), -1e3..1e3f64, Just(0.0), Just(-0.0)]
}

proptest! {
    #[test]
    fn round_trip_is_exact(
        rows in prop::collection::vec(
            (finite(), finite(), finite(), finite(), prop::option::of((finite(), finite())), 0usize..50, 0usize..10_000, 0usize..100_000),
            1..20,
        )
    ) {
        let records: Vec<DiagnosticsRecord> = rows
            .into_iter()
            .map(|(t, tm, h0, hs0, neck, i, tp, op)| DiagnosticsRecord {
                t,
                t_minus_t: tm,
                h0,
                hs0,
                r_neck: neck.map(|n| n.0),
                z_neck: neck.map(|n| n.1),
                intersections: i,
                tip_points: tp,
                outer_points: op,
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        emit_csv(&records, &["meta".into()], &path).unwrap();
        let back = parse_records_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in back.iter().zip(&records) {
            prop_assert_eq!(a.t.to_bits(), b.t.to_bits());
            prop_assert_eq!(a.h0.to_bits(), b.h0.to_bits());
            prop_assert_eq!(a, b);
        }
    }
}
