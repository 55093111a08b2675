use switchcal::conformal::Method;
use switchcal::datagen::{generate_toy, SwitchingArSpec};
use switchcal::eval::{
    run_on_series, run_replay, BufferMode, DatasetRef, DatasetSource, ForecasterConfig, RunConfig,
};
use switchcal::forecasters::{ExternalForecastTrace, TraceRecord};
use switchcal::series::{Frequency, StandardScaler, TimeSeries};

fn config(method: Method) -> RunConfig {
    let dataset = DatasetRef {
        name: "toy".into(),
        source: DatasetSource::Csv("unused.csv".into()),
        frequency: Frequency::Other,
    };
    RunConfig::new(dataset, ForecasterConfig::Persistence, method)
}

fn toy() -> TimeSeries {
    generate_toy(&SwitchingArSpec {
        length: 600,
        ..Default::default()
    })
    .unwrap()
    .0
}

#[test]
fn replayed_persistence_matches_direct_run() {
    let series = toy();
    for method in [Method::None, Method::Split, Method::Aci, Method::Agaci] {
        let cfg = config(method);
        let direct = run_on_series(&cfg, &series).unwrap();
        let trace = direct.trace().unwrap();
        let replayed = run_replay(&cfg, &series, &trace).unwrap();
        assert_eq!(direct.metrics, replayed.metrics, "{method:?}");
        assert_eq!(direct.records, replayed.records);
    }
}

#[test]
fn frozen_split_band_matches_sorted_residual_oracle() {
    let series = toy();
    let v = series.values();
    // Arbitrary external forecasts: a damped copy of the previous value.
    let records: Vec<TraceRecord> = (1..v.len())
        .map(|t| TraceRecord {
            index: t as i64,
            y_true: v[t],
            y_hat: 0.5 * v[t - 1] + 0.1,
        })
        .collect();
    let trace = ExternalForecastTrace::new(records.clone()).unwrap();
    let mut cfg = config(Method::Split);
    cfg.buffer_mode = BufferMode::Frozen;
    let report = run_replay(&cfg, &series, &trace).unwrap();

    let (train_end, cal_end) = (report.split.train_end, report.split.cal_end);
    let scaler = StandardScaler::fit_slice(&v[..train_end]).unwrap();
    assert_eq!(scaler, report.scaler);
    let mut scores: Vec<f64> = (train_end..cal_end)
        .map(|t| {
            let r = &records[t - 1];
            (scaler.transform(r.y_true) - scaler.transform(r.y_hat)).abs()
        })
        .collect();
    scores.sort_by(f64::total_cmp);
    let n = scores.len();
    let k = ((n + 1) as f64 * 0.9).ceil() as usize;
    let q = scores[k - 1];

    for rec in &report.records {
        let half = (rec.upper_scaled.unwrap() - rec.lower_scaled.unwrap()) / 2.0;
        assert!((half - q).abs() < 1e-12, "{half} vs {q}");
        assert_eq!(rec.y_hat, records[rec.index as usize - 1].y_hat);
    }
}
