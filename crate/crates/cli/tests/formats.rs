//! Artifact format and helper-level tests: CSV and record round trips,
//! formula registry coverage, option parsing and the self-test cores.

use rbsim_cli::commands::parse_model;
use rbsim_cli::config::{parse_observable, GroupName};
use rbsim_cli::io::{
    decay_csv, format_float, parse_decay_csv, parse_records, records_text, DecayRow,
    DECAY_HEADER,
};
use rbsim_cli::report::{formulas, model_formula, model_name};
use rbsim_cli::selftest::{
    closure_order_check, one_qubit_generators, run_all, weight_round_trip_check,
};
use rbsim_cli::svg::render_fit_plot;
use rbsim_core::fit::{fit, DecayModel};
use rbsim_core::protocols::{DecayCell, DecayDataset, ShadowRecord};

/// Values chosen to exercise the edges of decimal float formatting.
fn tricky_values() -> Vec<f64> {
    vec![
        0.0,
        1.0,
        1.0 / 3.0,
        0.1 + 0.2,
        1e-17,
        -0.25,
        0.980_000_000_000_000_1,
        6.022_140_76e23,
        f64::MIN_POSITIVE,
    ]
}

#[test]
fn format_float_round_trips_every_bit() {
    for v in tricky_values() {
        let text = format_float(v);
        let back: f64 = text.parse().expect("formatted float must parse");
        assert_eq!(back.to_bits(), v.to_bits(), "value {v:?} via {text}");
    }
}

#[test]
fn decay_csv_round_trip_is_bit_exact() {
    let mut cells = Vec::new();
    for (i, v) in tricky_values().into_iter().enumerate() {
        cells.push(DecayCell {
            observable: if i % 2 == 0 { "survival" } else { "ZI" }.to_string(),
            m: i + 1,
            mean: v,
            variance: v.abs() / 7.0,
            count: 30 + i,
        });
    }
    let dataset = DecayDataset { cells };
    let text = decay_csv(&dataset);
    assert!(text.starts_with(&DECAY_HEADER.join(",")));

    let rows = parse_decay_csv(&text).expect("generated CSV must parse");
    assert_eq!(rows.len(), dataset.cells.len());
    for (row, cell) in rows.iter().zip(&dataset.cells) {
        assert_eq!(row.observable, cell.observable);
        assert_eq!(row.m, cell.m);
        assert_eq!(row.mean.to_bits(), cell.mean.to_bits());
        assert_eq!(row.variance.to_bits(), cell.variance.to_bits());
        assert_eq!(row.count, cell.count);
    }

    // A second serialization of the parsed rows must reproduce the bytes.
    let dataset_again = DecayDataset {
        cells: rows
            .iter()
            .map(|r| DecayCell {
                observable: r.observable.clone(),
                m: r.m,
                mean: r.mean,
                variance: r.variance,
                count: r.count,
            })
            .collect(),
    };
    assert_eq!(decay_csv(&dataset_again), text);
}

#[test]
fn decay_csv_rejects_malformed_input() {
    let good = "observable,m,mean,variance,count\nsurvival,1,0.9,0.0,5\n";
    assert!(parse_decay_csv(good).is_ok());

    let cases = [
        ("m,observable,mean,variance,count\nsurvival,1,0.9,0.0,5\n", "reordered header"),
        ("observable,m,mean,variance,count\n", "no data rows"),
        ("observable,m,mean,variance,count\nsurvival,0,0.9,0.0,5\n", "zero length"),
        ("observable,m,mean,variance,count\nsurvival,1,nan,0.0,5\n", "non-finite mean"),
        ("observable,m,mean,variance,count\nsurvival,1,0.9,0.0\n", "missing field"),
        ("observable,m,mean,variance,count\nsurvival,x,0.9,0.0,5\n", "non-numeric length"),
    ];
    for (text, label) in cases {
        let err = parse_decay_csv(text).expect_err(label);
        assert!(!err.to_string().is_empty(), "{label}: empty diagnostic");
    }

    // The header rejection should spell out the expected columns.
    let err = parse_decay_csv("a,b\n1,2\n").unwrap_err();
    assert!(
        err.to_string().contains("observable"),
        "header diagnostic should list the expected fields: {err}"
    );
}

#[test]
fn shadow_records_round_trip_and_reject_malformed() {
    let records = vec![
        ShadowRecord {
            m: 1,
            gate_ids: vec![0],
            outcome: vec![false],
        },
        ShadowRecord {
            m: 3,
            gate_ids: vec![7, 0, 23],
            outcome: vec![true, false],
        },
    ];
    let text = records_text(&records);
    assert_eq!(text, "1\t0\t0\n3\t7,0,23\t10\n");
    let back = parse_records(&text).expect("generated records must parse");
    assert_eq!(back, records);

    let cases = [
        ("", "empty file"),
        ("1\t0\n", "missing outcome field"),
        ("0\t0\t0\n", "zero sequence length"),
        ("1\t0\t2\n", "outcome digit other than 0/1"),
        ("1\tx\t0\n", "non-numeric gate id"),
        ("1\t0\t\n", "empty outcome"),
    ];
    for (bad, label) in cases {
        assert!(parse_records(bad).is_err(), "{label} must be rejected");
    }
}

#[test]
fn decay_row_helpers_preserve_order() {
    let rows = vec![
        DecayRow {
            observable: "ZI".into(),
            m: 4,
            mean: 0.7,
            variance: 0.0,
            count: 1,
        },
        DecayRow {
            observable: "survival".into(),
            m: 2,
            mean: 0.9,
            variance: 0.0,
            count: 1,
        },
        DecayRow {
            observable: "ZI".into(),
            m: 2,
            mean: 0.8,
            variance: 0.0,
            count: 1,
        },
    ];
    assert_eq!(
        rbsim_cli::io::observables_of(&rows),
        vec!["ZI".to_string(), "survival".to_string()]
    );
    // Series are sorted by length even when the file is not.
    assert_eq!(
        rbsim_cli::io::series_of(&rows, "ZI"),
        vec![(2.0, 0.8), (4.0, 0.7)]
    );
}

#[test]
fn every_model_formula_is_registered() {
    let models = [
        DecayModel::SingleExp,
        DecayModel::DirectFidelity,
        DecayModel::MultiExp { terms: 3 },
        DecayModel::Power,
    ];
    for model in models {
        let formula = model_formula(model);
        assert!(
            formulas::REGISTRY.contains(&formula),
            "{model} formula missing from registry"
        );
    }
    assert_eq!(model_name(DecayModel::SingleExp), "single-exp");
    assert_eq!(model_name(DecayModel::DirectFidelity), "direct-fidelity");
    assert_eq!(model_name(DecayModel::MultiExp { terms: 3 }), "multi-exp");
    assert_eq!(model_name(DecayModel::Power), "power");

    // The registry itself must be duplicate-free.
    for (i, a) in formulas::REGISTRY.iter().enumerate() {
        for b in &formulas::REGISTRY[i + 1..] {
            assert_ne!(a, b);
        }
    }
}

#[test]
fn model_option_parsing_matches_names() {
    assert_eq!(parse_model("single-exp", None).unwrap(), DecayModel::SingleExp);
    assert_eq!(
        parse_model("direct-fidelity", None).unwrap(),
        DecayModel::DirectFidelity
    );
    assert_eq!(
        parse_model("multi-exp", None).unwrap(),
        DecayModel::MultiExp { terms: 2 }
    );
    assert_eq!(
        parse_model("multi-exp", Some(4)).unwrap(),
        DecayModel::MultiExp { terms: 4 }
    );
    assert_eq!(parse_model("power", None).unwrap(), DecayModel::Power);
    assert!(parse_model("biexponential", None).is_err());
    assert!(
        parse_model("single-exp", Some(2)).is_err(),
        "term count only applies to multi-exp"
    );
}

#[test]
fn observable_labels_validate_against_qubit_count() {
    assert!(parse_observable("survival", 2).is_ok());
    assert!(parse_observable("up0", 2).is_ok());
    assert!(parse_observable("up1", 2).is_ok());
    assert!(parse_observable("ZI", 2).is_ok());
    assert!(parse_observable("XY", 2).is_ok());
    assert!(parse_observable("up2", 2).is_err(), "qubit index out of range");
    assert!(parse_observable("Z", 2).is_err(), "wrong Pauli length");
    assert!(parse_observable("AB", 2).is_err(), "not a Pauli string");
    assert!(parse_observable("", 1).is_err());
}

#[test]
fn group_names_parse_and_reject() {
    for name in ["c1", "c2", "c1xc1", "c1xi", "ixc1"] {
        let group = GroupName::parse(name).expect(name);
        assert_eq!(group.as_str(), name);
    }
    let err = GroupName::parse("c3").unwrap_err();
    assert!(
        err.to_string().contains("c1xc1"),
        "rejection should list the valid names: {err}"
    );
}

#[test]
fn selftest_checks_pass_and_detect_mutations() {
    for report in run_all() {
        assert!(
            report.outcome.is_ok(),
            "check {} failed: {:?}",
            report.name,
            report.outcome
        );
    }

    // Dropping a generator must break the closure-order check.
    let partial = vec![one_qubit_generators().remove(0)];
    assert!(closure_order_check(&partial, 24).is_err());
    assert!(closure_order_check(&one_qubit_generators(), 24).is_ok());
    assert!(closure_order_check(&one_qubit_generators(), 25).is_err());

    // Perturbing the recovered weights must break the inversion check.
    assert!(weight_round_trip_check(0.0).is_ok());
    assert!(weight_round_trip_check(1e-3).is_err());
}

#[test]
fn fit_plot_renders_curve_band_and_points() {
    let points: Vec<(f64, f64)> = (1..=6)
        .map(|m| (m as f64, 0.5 * 0.9f64.powi(m) + 0.5))
        .collect();
    let result = fit(DecayModel::SingleExp, &points, None).unwrap();
    assert!(result.converged);

    let svg = render_fit_plot(&points, &result, "mean survival", false).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.ends_with("</svg>\n"));
    assert_eq!(svg.matches("<circle").count(), points.len());
    assert!(svg.contains("<polyline"), "decay curve missing");
    assert!(
        svg.contains("fill-opacity"),
        "uncertainty band missing"
    );
    assert!(svg.contains("sequence length m"));

    let log_svg = render_fit_plot(&points, &result, "mean survival", true).unwrap();
    assert!(log_svg.contains("(log)"));

    assert!(
        render_fit_plot(&[], &result, "mean survival", false).is_err(),
        "no points to plot"
    );
}
