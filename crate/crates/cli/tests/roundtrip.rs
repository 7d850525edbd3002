use nsosc_cli::output::{csv_string, parse_csv};
use nsosc_core::table::{Method, Row};
use proptest::prelude::*;

fn value() -> impl Strategy<Value = Option<f64>> {
    prop::option::of(prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -1e3f64..1e3])
}

fn row() -> impl Strategy<Value = Row> {
    (any::<f64>().prop_filter("finite", |v| v.is_finite()), 0usize..7, value(), value(), value(), value(), value(), "[ -~]{0,30}")
        .prop_map(|(epsilon, m, omega, pct_error, h1, h2, residual_norm, note)| Row {
            epsilon,
            method: Method::ALL[m],
            omega,
            pct_error,
            h1,
            h2,
            residual_norm,
            status: if note.is_empty() { "ok".into() } else { format!("error: {note}") },
        })
}

proptest! {
    #[test]
    fn csv_keeps_every_bit(rows in prop::collection::vec(row(), 0..20)) {
        let text = csv_string(&rows).unwrap();
        prop_assert_eq!(parse_csv(&text).unwrap(), rows.clone());
        prop_assert_eq!(csv_string(&parse_csv(&text).unwrap()).unwrap(), text);
    }

    #[test]
    fn json_keeps_every_bit(rows in prop::collection::vec(row(), 0..20)) {
        let text = serde_json::to_string(&rows).unwrap();
        let back: Vec<Row> = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, rows);
    }
}
