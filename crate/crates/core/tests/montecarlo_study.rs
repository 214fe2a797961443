use loanrisk::montecarlo::{run_study, simulate_cohort, write_report_csv, SimConfig};
use loanrisk::{CauseId, CompetingRisksDistribution, SimulationConfig, TruncationLaw};

#[test]
fn pooled_coverage_is_nominal() {
    // coverage of every cell pooled over independent studies
    let mut hits = 0.0;
    let mut cells = 0.0;
    for seed in 100..110 {
        let rep = run_study(&SimulationConfig::table_b1(10_000, 500, seed)).unwrap();
        for x in 1..=9 {
            for c in CauseId::ALL {
                hits += rep.get(x, c).unwrap().coverage;
                cells += 1.0;
            }
        }
    }
    let pooled = hits / cells;
    assert!(
        (0.945..=0.955).contains(&pooled),
        "pooled coverage {pooled}"
    );
}

#[test]
fn report_is_bit_identical_across_runs() {
    let cfg = SimulationConfig::table_b1(5_000, 64, 42);
    let a = serde_json::to_vec(&run_study(&cfg).unwrap()).unwrap();
    let b = serde_json::to_vec(&run_study(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    let other = serde_json::to_vec(&run_study(&SimulationConfig::table_b1(5_000, 64, 43)).unwrap())
        .unwrap();
    assert_ne!(a, other);
}

#[test]
fn report_fields_are_consistent() {
    let rep = run_study(&SimulationConfig::table_b1(2_000, 50, 1)).unwrap();
    assert!((rep.alpha - 0.864).abs() < 1e-12);
    assert!((rep.alpha_hat + rep.truncation_fraction - 1.0).abs() < 1e-12);
    assert_eq!(rep.rows.len(), 20);
    for r in &rep.rows {
        assert!((0.0..=1.0).contains(&r.coverage));
        assert!(r.defined <= 50);
        assert!(r.asymptotic_variance >= 0.0);
    }
    let mut buf = Vec::new();
    write_report_csv(&mut buf, &rep).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("age,cause,true_hazard,mean_estimate,"));
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn custom_truncation_law() {
    let dist = CompetingRisksDistribution::new(1, 4, vec![0.25f64; 4], vec![0.5; 4]).unwrap();
    let cfg = SimConfig {
        dist,
        trunc: TruncationLaw::uniform(1, 2, 1).unwrap(),
        n: 4_000,
        replicates: 20,
        seed: 9,
        theta: 0.05,
    };
    let obs = simulate_cohort(&cfg, 0);
    // Y = 2 with X = 1 is the only truncated combination
    let frac = obs.len() as f64 / 4_000.0;
    assert!((frac - 0.875).abs() < 0.02, "{frac}");
    assert!(obs.iter().all(|o| o.exit_age <= o.entry_age + 1));
    let rep = run_study(&cfg).unwrap();
    assert!((rep.alpha - 0.875).abs() < 1e-12);
}

#[test]
fn single_precision_study() {
    let cfg = SimConfig::<f32>::table_b1(2_000, 20, 3);
    let rep = run_study(&cfg).unwrap();
    assert!((rep.alpha - 0.864).abs() < 1e-6);
    assert!(rep.rows.iter().all(|r| r.mean_estimate.is_finite()));
}
