use loanrisk::recovery::{
    analyze, fit_gamma_kernel, recovery_at, recovery_points, smooth, write_recovery_csv,
    FitOptions, GammaKernelFit, RecoveryPoints,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn smoothing_is_idempotent_on_lines(a in -1.0..1.0f64, b in -0.05..0.05f64, n in 5usize..40) {
        let ages: Vec<u32> = (1..=n as u32).collect();
        let means: Vec<f64> = ages.iter().map(|&x| a + b * x as f64).collect();
        let pts = RecoveryPoints { ages: ages.clone(), means: means.clone(), counts: vec![1; n] };
        let once = smooth(&pts, 0.75).unwrap();
        for (s, m) in once.iter().zip(&means) {
            prop_assert!((s - m).abs() <= 1e-9);
        }
        let twice = smooth(&RecoveryPoints { means: once.clone(), ..pts }, 0.75).unwrap();
        for (s, t) in once.iter().zip(&twice) {
            prop_assert!((s - t).abs() <= 1e-9);
        }
    }

    #[test]
    fn fit_beats_best_constant(values in prop::collection::vec(0.0..1.0f64, 6..30)) {
        prop_assume!(values.iter().any(|&v| v > 0.0));
        let ages: Vec<u32> = (1..=values.len() as u32).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let floor: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        match fit_gamma_kernel(&ages, &values, FitOptions::default()) {
            Ok(fit) => prop_assert!(fit.residual <= floor * (1.0 + 1e-6) + 1e-12, "{} > {}", fit.residual, floor),
            Err(e) => prop_assert!(false, "fit failed: {e}"),
        }
    }

    #[test]
    fn recovery_is_clamped(c in 0.0..5.0f64, k in 0.5..5.0f64, theta in 0.5..30.0f64, x in 1u32..400) {
        let v = recovery_at(&GammaKernelFit { c, k, theta, residual: 0.0 }, x);
        prop_assert!((0.0..=1.0).contains(&v));
    }
}

#[test]
fn recovery_export_lists_every_age() {
    let data: Vec<(u32, f64)> = (1..=30)
        .flat_map(|a| {
            let m = 0.3 * (a as f64 / 10.0) * (-(a as f64) / 10.0 + 1.0).exp();
            [(a, m * 0.9), (a, m * 1.1)]
        })
        .collect();
    let analysis = analyze(&data, 0.75, FitOptions::default()).unwrap();
    assert_eq!(analysis.points.len(), 30);
    assert_eq!(recovery_points(&data).unwrap().counts, vec![2; 30]);
    let mut buf = Vec::new();
    write_recovery_csv(&mut buf, &analysis).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("age,raw_mean,smoothed,fitted\n"));
    assert_eq!(text.lines().count(), 31);
    let json = serde_json::to_string(&analysis.fit).unwrap();
    let back: GammaKernelFit<f64> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, analysis.fit);
}

#[test]
fn fit_restarts_are_deterministic() {
    let ages: Vec<u32> = (1..=36).collect();
    let ys: Vec<f64> = ages
        .iter()
        .map(|&a| {
            0.4 * ((a as f64 - 12.0) / 8.0)
                .powi(2)
                .mul_add(-1.0, 1.0)
                .max(0.0)
        })
        .collect();
    let a = fit_gamma_kernel(&ages, &ys, FitOptions::default()).unwrap();
    let b = fit_gamma_kernel(&ages, &ys, FitOptions::default()).unwrap();
    assert_eq!(a, b);
}
