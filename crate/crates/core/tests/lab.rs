use hitdim::lab::experiments::{FLAG_CENSORED, FLAG_POLE_HIT};
use hitdim::lab::report::CSV_HEADER;
use hitdim::lab::{emit_report, run_experiment, ExperimentConfig, ExperimentReport, ReportFormat};

fn run(toml: &str) -> ExperimentReport {
    run_experiment(&ExperimentConfig::from_toml(toml).unwrap()).unwrap()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn neighbouring_trials_are_uncorrelated() {
    let report = run(
        "experiment = \"theorem2\"\nseed = 2024\ntrials = 1000\nn_max = 1000000\n\
         [schedule]\nk_min = 4\nk_max = 10\n[system]\nkind = \"doubling\"\np = 0.5\n",
    );
    let taus: Vec<f64> = report
        .trials
        .iter()
        .map(|t| {
            let o = t
                .observations
                .iter()
                .find(|o| o.kind == "hitting" && o.k == Some(10))
                .unwrap();
            o.tau_or_measure.expect("k = 10 is hit well before the cap").ln()
        })
        .collect();
    let r = pearson(&taus[..taus.len() - 1], &taus[1..]);
    assert!(r.abs() < 0.1, "lag-1 correlation {r}");
}

#[test]
fn emitted_files_are_byte_identical_across_runs_and_pools() {
    let base = "experiment = \"theorem3\"\nseed = 9\ntrials = 12\nn_max = 200000\n\
                [schedule]\nk_min = 3\nk_max = 8\n[system]\nkind = \"doubling\"\np = 0.25\n";
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let mut csvs = Vec::new();
    let mut jsons = Vec::new();
    for (dir, threads) in dirs.iter().zip([1, 1, 3]) {
        let mut report = run(&format!("threads = {threads}\n{base}"));
        report.config.threads = 0;
        report.duration_seconds = 0.0;
        csvs.push(std::fs::read(emit_report(&report, ReportFormat::Csv, dir.path()).unwrap()).unwrap());
        jsons.push(std::fs::read(emit_report(&report, ReportFormat::Json, dir.path()).unwrap()).unwrap());
    }
    assert!(csvs.windows(2).all(|w| w[0] == w[1]));
    assert!(jsons.windows(2).all(|w| w[0] == w[1]));
    let text = String::from_utf8(csvs.remove(0)).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER.join(",").as_str()));
}

#[test]
fn csv_rows_match_observations() {
    let report = run(
        "experiment = \"theorem2\"\nmode = \"recurrence\"\nseed = 5\ntrials = 7\nn_max = 1000\n\
         [schedule]\nk_min = 4\nk_max = 14\n[system]\nkind = \"cat\"\n",
    );
    let rows: usize = report.trials.iter().map(|t| t.observations.len()).sum();
    let csv = String::from_utf8(report.to_csv().unwrap()).unwrap();
    assert_eq!(csv.lines().count(), rows + 1);
    assert!(report.trials.iter().all(|t| t.has_flag(FLAG_CENSORED)));
    let back = ExperimentReport::from_json(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn shift_identities_on_quarter_rotation() {
    let report = run(
        "experiment = \"prop1-identities\"\nseed = 3\ntrials = 10\nn_max = 100\n\
         [schedule]\nk_min = 1\nk_max = 4\n[system]\nkind = \"rotation\"\npartial_quotients = [4]\n",
    );
    assert!(report.verdict("identities_exact").unwrap().pass);
    assert_eq!(report.summary("shift_ok").unwrap().min, 1.0);
}

#[test]
fn holder_comparison_is_reported_without_contradiction() {
    let report = run(
        "experiment = \"prop1-identities\"\nseed = 4\ntrials = 100\nn_max = 10000000\n\
         [schedule]\nk_min = 4\nk_max = 12\n[prop1]\nholder = 1.0\n[system]\nkind = \"doubling\"\np = 0.5\n",
    );
    let v = report.verdict("holder_non_contradiction").unwrap();
    assert!(v.pass, "{v:?}");
    assert!(report.summary("R_upper_image").is_some());
}

#[test]
fn golden_convergent_rotation_keeps_surviving() {
    let report = run(
        "experiment = \"lemma1\"\nseed = 6\ntrials = 3\n[schedule]\nk_min = 4\nk_max = 12\n\
         [lemma1]\nepsilon = 0.2\nsamples = 10000\nexpect = \"non_decaying\"\n\
         [system]\nkind = \"rotation\"\npartial_quotients = [1, 1, 1, 1, 1, 1, 1, 1, 1, 1]\n",
    );
    assert!(report.verdict("non_decaying_tail").unwrap().pass);
    assert!(report.summary("finest_survival").unwrap().min > 0.5);
}

#[test]
fn birkhoff_upper_bound_on_median() {
    for (system, alpha, d) in [("kind = \"doubling\"\np = 0.5", 2.0, 1.0), ("kind = \"cat\"", 3.0, 2.0)] {
        let report = run(&format!(
            "experiment = \"birkhoff-sandwich\"\nseed = 8\ntrials = 9\n[birkhoff]\nalpha = {alpha}\nlog2_n = 20\n[system]\n{system}\n"
        ));
        let exponents: Vec<f64> = report
            .trials
            .iter()
            .filter(|t| !t.has_flag(FLAG_POLE_HIT))
            .map(|t| t.estimates["g_upper"])
            .collect();
        let median = hitdim::lab::report::SummaryStat::of(&exponents).unwrap().median;
        assert!(median <= alpha / d + 1.0 + 0.25, "{system}: {median}");
    }
}
