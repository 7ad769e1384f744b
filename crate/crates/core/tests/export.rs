use semsat_core::report::{load_results_json, read_satellites_csv, SATELLITES_CSV, SUMMARY_CSV};
use semsat_core::*;

fn runs() -> Vec<ScenarioRun> {
    let p = DwoaParams::default();
    let mut out = Vec::new();
    for id in 0..3 {
        // The last scenario has more satellites than subcarriers.
        let (k, u) = if id == 2 { (3, 2) } else { (3, 4) };
        let s = generate_random_scenario(id as u64, k, u, &ScenarioRanges::default()).unwrap();
        for m in [Method::Bcd, Method::Random] {
            out.push(ScenarioRun {
                scenario_id: id,
                report: solve_method(&s, m, &p, 1).unwrap(),
            });
        }
    }
    out
}

#[test]
fn csv_export_has_expected_columns_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let runs = runs();
    let files = export_report(&runs, ExportFormat::Csv, dir.path()).unwrap();
    assert_eq!(files.len(), 2);

    let text = std::fs::read_to_string(dir.path().join(SATELLITES_CSV)).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "scenario_id,method,satellite_id,subcarrier_id,compression_ratio,length_bits,rate_bps,latency_s,psnr_db,threshold_db,window_s,feasible"
    );
    let rows = read_satellites_csv(&dir.path().join(SATELLITES_CSV)).unwrap();
    assert_eq!(rows.len(), 18);
    let unassigned: Vec<_> = rows.iter().filter(|r| r.subcarrier_id.is_none()).collect();
    assert_eq!(unassigned.len(), 2);
    assert!(unassigned.iter().all(|r| r.latency_s.is_infinite() && r.psnr_db.is_none() && !r.feasible));

    let mut rdr = csv::Reader::from_path(dir.path().join(SUMMARY_CSV)).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["method", "mean_latency_s", "mean_compression_ratio", "feasibility_rate"]
    );
    let recs: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(recs.len(), 2);
    let summary = report::summarize(&runs);
    for (rec, s) in recs.iter().zip(&summary) {
        assert_eq!(&rec[0], s.method.label());
        let feasible: Vec<&SolutionReport> =
            runs.iter().map(|r| &r.report).filter(|r| r.method == s.method && r.feasible).collect();
        let expect = feasible.len() as f64 / 3.0;
        assert_eq!(rec[3].parse::<f64>().unwrap(), expect);
        if feasible.is_empty() {
            assert_eq!(&rec[1], "");
        } else {
            let mean = feasible.iter().map(|r| r.objective_s).sum::<f64>() / feasible.len() as f64;
            assert_eq!(rec[1].parse::<f64>().unwrap(), mean);
        }
    }
}

#[test]
fn json_export_round_trips_with_infinite_latency() {
    let dir = tempfile::tempdir().unwrap();
    let runs = runs();
    let files = export_report(&runs, ExportFormat::Json, dir.path()).unwrap();
    let back = load_results_json(&files[0]).unwrap();
    assert_eq!(back.runs, runs);
    assert_eq!(back.summary, report::summarize(&runs));
    assert!(back.runs.iter().any(|r| r.report.objective_s.is_infinite()));
}

#[test]
fn format_names_parse() {
    assert_eq!("CSV".parse::<ExportFormat>().unwrap(), ExportFormat::Csv);
    assert_eq!("json".parse::<ExportFormat>().unwrap(), ExportFormat::Json);
    assert!("xml".parse::<ExportFormat>().is_err());
}
