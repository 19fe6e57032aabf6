//! End-to-end use of the public API: simulate, censor, sample, score,
//! round-trip through CSV and krige.

use snn_tmvn::censored::{
    build_censored_problem, krige_predict, sample_censored_posterior, CensoredDataset, SiteStatus,
};
use snn_tmvn::eval::score;
use snn_tmvn::field::simulate_field;
use snn_tmvn::geometry::OrderingKind;
use snn_tmvn::io::{read_dataset_from, write_dataset_to};
use snn_tmvn::kernel::{CovarianceModel, LocationSet, Metric, Smoothness};
use snn_tmvn::{precompute, sample, SnnOptions, TruncationProblem};

fn model() -> CovarianceModel {
    CovarianceModel::isotropic(1.0, 0.1, Smoothness::ThreeHalves, 0.0).unwrap()
}

fn censored_grid(side: usize, threshold: f64, seed: u64) -> (CensoredDataset, Vec<f64>) {
    let locations = LocationSet::unit_grid(side);
    let field = simulate_field(&model(), &locations, seed).unwrap();
    (CensoredDataset::censor_below(locations, &field, threshold).unwrap(), field)
}

#[test]
fn censored_pipeline_end_to_end() {
    let (data, field) = censored_grid(12, 0.5, 3);
    let censored = data.censored_indices();
    assert!(!censored.is_empty() && !data.observed_indices().is_empty());

    let mut buf = Vec::new();
    write_dataset_to(&mut buf, &data).unwrap();
    let back = read_dataset_from(buf.as_slice(), Metric::Euclidean).unwrap();
    assert_eq!(back, data);

    let options = SnnOptions { ordering: OrderingKind::Maximin, ..SnnOptions::with_m(20) };
    let plan = build_censored_problem(&back, &model(), &options, 9).unwrap();
    let ens = sample_censored_posterior(&plan, 40, 9, true).unwrap();
    for row in &ens.samples {
        for ((x, status), value) in row.iter().zip(data.status()).zip(data.values()) {
            match status {
                SiteStatus::Observed => assert_eq!(Some(*x), *value),
                SiteStatus::Censored => assert!(*x <= 0.5),
            }
        }
    }
    let truth: Vec<f64> = field.clone();
    let report = score(&ens.samples, &truth, &censored, true).unwrap();
    assert!(report.rmse > 0.0 && report.rmse < 2.0, "rmse {}", report.rmse);
    assert!(report.crps > 0.0 && report.crps <= report.rmse + 1e-12);

    let grid = LocationSet::unit_grid(6);
    let pred = krige_predict(&data, &ens.samples, &model(), &grid, 20).unwrap();
    assert_eq!(pred.mean.len(), 36);
    assert!(pred.sd.iter().all(|s| s.is_finite() && *s >= 0.0));
}

/// Posterior means barely move when the conditioning sets are doubled.
#[test]
fn screening_m30_vs_m60() {
    let (data, _) = censored_grid(20, 1.0, 5);
    let means = |m: usize| {
        let options = SnnOptions { ordering: OrderingKind::Coordinate, ..SnnOptions::with_m(m) };
        let plan = build_censored_problem(&data, &model(), &options, 1).unwrap();
        sample_censored_posterior(&plan, 300, 11, false).unwrap().mean()
    };
    let (a, b) = (means(30), means(60));
    let rms = (a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt();
    assert!(rms <= 0.1, "rms difference of posterior means {rms}");
}

#[test]
fn plain_tmvn_samples_respect_bounds_and_seed() {
    let locations = LocationSet::grid(10, 100, 0.02);
    let n = locations.len();
    let model = CovarianceModel::isotropic(1.0, 0.03, Smoothness::ThreeHalves, 0.0).unwrap();
    let problem = TruncationProblem::from_kernel(model, locations, vec![f64::NEG_INFINITY; n], vec![0.0; n]).unwrap();
    let plan = precompute(&problem, &SnnOptions::default(), 4).unwrap();
    let a = sample(&plan, 5, 8).unwrap();
    let b = sample(&plan, 5, 8).unwrap();
    assert_eq!(a.samples, b.samples);
    assert!(a.samples.iter().flatten().all(|v| *v <= 0.0));
}
