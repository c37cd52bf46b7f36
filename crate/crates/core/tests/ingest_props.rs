use driverid_core::ingest::{parse_log, serialize_log, SensorSample, Trip};
use proptest::prelude::*;

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        9 => -50.0f64..50.0,
        1 => Just(f64::NAN),
    ]
}

fn trip() -> impl Strategy<Value = Trip> {
    (
        prop::collection::vec((0.001f64..5.0, prop::array::uniform6(value())), 0..80),
        0.5f64..100.0,
    )
        .prop_map(|(steps, rate)| {
            let mut t = 0.0;
            let samples = steps
                .into_iter()
                .map(|(dt, ch)| {
                    t += dt;
                    SensorSample { t, channels: ch }
                })
                .collect();
            Trip::new("drv", samples, rate).unwrap()
        })
}

proptest! {
    #[test]
    fn serialize_then_parse_round_trips(trip in trip()) {
        let text = serialize_log(&trip);
        let parsed = parse_log(text.as_slice(), &trip.driver_id, trip.nominal_rate_hz);
        if trip.samples.is_empty() {
            prop_assert!(parsed.is_err());
        } else {
            let parsed = parsed.unwrap();
            prop_assert!(parsed.rejected_lines.is_empty());
            prop_assert!(parsed.trip.same_as(&trip));
        }
    }

    #[test]
    fn sample_count_is_rows_minus_rejected(
        rows in prop::collection::vec(prop::option::weighted(0.8, 0.0f64..10.0), 1..60),
    ) {
        // Increasing timestamps with some rows given an unparseable one.
        let mut text = String::from("t,ax,ay,az,gx,gy,gz\n");
        for (i, r) in rows.iter().enumerate() {
            match r {
                Some(v) => text.push_str(&format!("{},{v},0,9.8,0,0,0\n", i as f64 * 0.5)),
                None => text.push_str("oops,1,2,3,4,5,6\n"),
            }
        }
        match parse_log(text.as_bytes(), "d", 2.0) {
            Ok(parsed) => {
                prop_assert_eq!(parsed.trip.samples.len() + parsed.rejected_lines.len(), rows.len());
                let expected: Vec<u64> = rows
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.is_none())
                    .map(|(i, _)| i as u64 + 2)
                    .collect();
                prop_assert_eq!(parsed.rejected_lines, expected);
            }
            Err(_) => prop_assert!(rows.iter().all(Option::is_none)),
        }
    }

    #[test]
    fn parsed_timestamps_increase_or_parse_fails(ts in prop::collection::vec(0.0f64..100.0, 1..40)) {
        let mut text = String::from("t,ax,ay,az,gx,gy,gz\n");
        for t in &ts {
            text.push_str(&format!("{t},0,0,9.8,0,0,0\n"));
        }
        let increasing = ts.windows(2).all(|w| w[1] > w[0]);
        match parse_log(text.as_bytes(), "d", 2.0) {
            Ok(p) => {
                prop_assert!(increasing);
                prop_assert!(p.trip.samples.windows(2).all(|w| w[0].t < w[1].t));
            }
            Err(_) => prop_assert!(!increasing),
        }
    }
}
