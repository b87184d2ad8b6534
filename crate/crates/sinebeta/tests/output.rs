use proptest::prelude::*;
use sinebeta::output::{csv_string, read_csv, write_json};
use sinebeta_core::table::{CurveRow, CurveTable, Engine};

fn row(lambda: f64, value: f64, stderr: Option<f64>) -> CurveRow {
    CurveRow {
        lambda,
        value,
        stderr,
        engine: Engine::Mc,
        beta: 2.0,
        delta: 1.0,
        order: Some(1),
        seed: Some(7),
        tail_bound: Some(0.0),
    }
}

#[test]
fn header_and_empty_fields() {
    let mut t = CurveTable::new();
    t.push(row(0.5, 1e-7, None));
    let s = csv_string(&t).unwrap();
    assert_eq!(
        s,
        "lambda,value,stderr,engine,beta,delta,order,seed,tail_bound\r\n0.5,1e-7,,mc,2.0,1.0,1,7,0.0\r\n"
    );
}

#[test]
fn json_embeds_config() {
    let mut t = CurveTable::new();
    t.push(row(1.0, 0.25, Some(0.01)));
    let mut buf = Vec::new();
    write_json(&serde_json::json!({"beta": 2.0}), &t, &mut buf).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    assert_eq!(v["config"]["beta"], 2.0);
    assert_eq!(v["rows"][0]["engine"], "mc");
    assert_eq!(v["rows"][0]["stderr"], 0.01);
}

proptest! {
    #[test]
    fn values_round_trip(lambda in 0.0f64..1e3, value in -1e3f64..1e3, se in proptest::option::of(0.0f64..1.0)) {
        let mut t = CurveTable::new();
        t.push(row(lambda, value, se));
        let s = csv_string(&t).unwrap();
        let recs = read_csv(s.as_bytes()).unwrap();
        prop_assert_eq!(recs.len(), 1);
        prop_assert_eq!(recs[0][0].parse::<f64>().unwrap(), lambda);
        prop_assert_eq!(recs[0][1].parse::<f64>().unwrap(), value);
        match se {
            Some(x) => prop_assert_eq!(recs[0][2].parse::<f64>().unwrap(), x),
            None => prop_assert_eq!(&recs[0][2], ""),
        }
    }
}
