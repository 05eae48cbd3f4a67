use std::fs;

use fairfluid_cli::report::{write_report, Check};
use fairfluid_cli::{
    export, run_repro, CliError, Format, PolicySpec, Provenance, Quantity, ReproParams, ReproReport,
};

fn render(report: &ReproReport, format: Format) -> String {
    let mut buf = Vec::new();
    write_report(&mut buf, report, format).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn every_repro_passes_with_defaults() {
    for name in fairfluid_cli::repro::REPRO_NAMES {
        let report = run_repro(name, &ReproParams::default()).unwrap();
        assert_eq!(report.name, name);
        assert!(!report.quantities.is_empty());
        for q in &report.quantities {
            assert!(q.pass, "{name}/{}: {} vs {}", q.label, q.value, q.reference);
        }
        assert!(report.passed());
    }
}

#[test]
fn unknown_repro_is_rejected() {
    assert!(matches!(
        run_repro("prop3", &ReproParams::default()),
        Err(CliError::UnknownRepro(name)) if name == "prop3"
    ));
}

#[test]
fn prop2_table() {
    let report = run_repro("prop2", &ReproParams::default()).unwrap();
    let csv = render(&report, Format::Csv);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "label,value,reference,tolerance,pass");
    assert_eq!(lines.len(), 1 + report.quantities.len());
    let value = |label: &str| {
        report
            .quantities
            .iter()
            .find(|q| q.label == label)
            .unwrap()
            .value
    };
    assert!((value("exposure_type1_high") - 19.0 / 39.0).abs() < 1e-12);
    assert!((value("fairness_gap") - 34.0 / 195.0).abs() < 1e-12);
    assert!((value("profit_cyclic") - 0.79).abs() < 1e-12);
    assert!((value("profit_static_optimum") - 1.4).abs() < 1e-12);
}

#[test]
fn prop2_scales_with_lambda() {
    let params = ReproParams {
        lambda: 10.0,
        ..ReproParams::default()
    };
    let report = run_repro("prop2", &params).unwrap();
    assert!(report.passed());
    let mass = report
        .quantities
        .iter()
        .find(|q| q.label == "mass_type1_zero")
        .unwrap();
    assert!((mass.value - 20.0).abs() < 1e-9);
}

#[test]
fn prop1_reports_each_cap() {
    let params = ReproParams {
        caps: vec![100.0],
        ..ReproParams::default()
    };
    let report = run_repro("prop1", &params).unwrap();
    let value = |label: &str| {
        report
            .quantities
            .iter()
            .find(|q| q.label == label)
            .unwrap()
            .value
    };
    assert!((value("belief_profit_D100") - 375.0).abs() < 1e-9);
    assert!((value("static_optimum_D100") - 362.5).abs() < 1e-6);
    assert!((value("gap_D100") - 12.5).abs() < 1e-6);
}

#[test]
fn failing_quantity_fails_the_report() {
    let mut report = ReproReport::new("gate");
    report.push(Quantity::within("ok", 1.0, 1.0, 0.0, Provenance::Derived));
    assert!(report.passed());
    report.push(Quantity::at_least(
        "low",
        -0.1,
        0.0,
        1e-9,
        Provenance::Paper,
    ));
    assert!(!report.passed());
    assert_eq!(report.quantities[1].check, Check::AtLeast);
    assert!(Quantity::at_least("edge", -1e-10, 0.0, 1e-9, Provenance::Paper).pass);
}

#[test]
fn empty_report_json() {
    let json: serde_json::Value =
        serde_json::from_str(&render(&ReproReport::new("empty"), Format::Json)).unwrap();
    assert_eq!(json, serde_json::json!({"name": "empty", "quantities": []}));
}

#[test]
fn export_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    for format in [Format::Csv, Format::Json] {
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        export(
            &run_repro("theorem1", &ReproParams::default()).unwrap(),
            format,
            &a,
        )
        .unwrap();
        export(
            &run_repro("theorem1", &ReproParams::default()).unwrap(),
            format,
            &b,
        )
        .unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }
}

#[test]
fn unwritable_path_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("report.csv");
    assert!(matches!(
        export(&ReproReport::new("x"), Format::Csv, &path),
        Err(CliError::Io { .. })
    ));
}

#[test]
fn policy_specs_parse() {
    assert_eq!("fluid".parse::<PolicySpec>().unwrap(), PolicySpec::Fluid);
    assert_eq!(
        "static:0.5,0.5".parse::<PolicySpec>().unwrap(),
        PolicySpec::Static(vec![0.5, 0.5])
    );
    assert_eq!(
        "cyclic:0,1;1,0".parse::<PolicySpec>().unwrap(),
        PolicySpec::Cyclic(vec![vec![0.0, 1.0], vec![1.0, 0.0]])
    );
    assert_eq!(
        "belief:25:0:1".parse::<PolicySpec>().unwrap(),
        PolicySpec::Belief {
            pool_target: 25.0,
            new_index: 0,
            retained_index: 1,
            buildup: 0
        }
    );
    for bad in ["", "static:a", "belief:1:2", "cyclic", "greedy"] {
        assert!(bad.parse::<PolicySpec>().is_err(), "{bad}");
    }
}
