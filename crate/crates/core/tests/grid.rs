use std::path::Path;

use switchcal::conformal::Method;
use switchcal::datagen::{GeneratorSpec, LorenzSpec, SwitchingArSpec};
use switchcal::eval::{
    grid_run, ComparisonTable, DatasetRef, DatasetSource, ForecasterConfig, MetricsRecord,
    RunConfig,
};
use switchcal::parallel::Execution;
use switchcal::series::Frequency;

fn configs() -> Vec<RunConfig> {
    let datasets = [
        (
            "toy_a",
            GeneratorSpec::Toy(SwitchingArSpec {
                length: 800,
                seed: 1,
                ..Default::default()
            }),
        ),
        (
            "toy_b",
            GeneratorSpec::Toy(SwitchingArSpec {
                length: 800,
                seed: 2,
                ..Default::default()
            }),
        ),
        (
            "lorenz",
            GeneratorSpec::Lorenz(LorenzSpec {
                length: 800,
                ..Default::default()
            }),
        ),
    ];
    let mut out = vec![];
    // Deliberately unsorted insertion order.
    for method in [Method::Agaci, Method::Aci] {
        for forecaster in [ForecasterConfig::default(), ForecasterConfig::Persistence] {
            for (name, spec) in datasets.iter().rev() {
                let d = DatasetRef {
                    name: name.to_string(),
                    source: DatasetSource::Generate(spec.clone()),
                    frequency: Frequency::Other,
                };
                let mut c = RunConfig::new(d, forecaster.clone(), method);
                c.lag = Some(6);
                out.push(c);
            }
        }
    }
    out
}

#[test]
fn grid_is_sorted_complete_and_mode_independent() {
    let configs = configs();
    let seq = grid_run(&configs, Path::new("."), Execution::Sequential);
    let par = grid_run(&configs, Path::new("."), Execution::default());
    assert_eq!(seq.len(), 12);
    assert_eq!(seq, par);
    let keys: Vec<_> = seq.iter().map(|c| c.key.clone()).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(keys[0].dataset, "lorenz");
    assert!(seq.iter().all(|c| c.outcome.is_ok()));

    let records: Vec<MetricsRecord> = seq
        .iter()
        .map(|c| MetricsRecord::from_report(c.outcome.as_ref().unwrap()))
        .collect();
    let table = ComparisonTable::from_records(&records).unwrap();
    assert_eq!(table.num_rows(), 3);
    assert_eq!(
        table.columns(),
        ["ar+aci", "ar+agaci", "persistence+aci", "persistence+agaci"]
    );
}

#[test]
fn one_failing_cell_does_not_sink_the_grid() {
    let mut configs = configs();
    configs[0].dataset = DatasetRef {
        name: "missing".into(),
        source: DatasetSource::Csv("does/not/exist.csv".into()),
        frequency: Frequency::Other,
    };
    let cells = grid_run(&configs, Path::new("."), Execution::default());
    assert_eq!(cells.iter().filter(|c| c.outcome.is_err()).count(), 1);
    let failed = cells.iter().find(|c| c.outcome.is_err()).unwrap();
    assert_eq!(failed.key.dataset, "missing");
    assert_eq!(
        failed.outcome.as_ref().unwrap_err().kind,
        switchcal::ErrorKind::Io
    );
    assert!(failed
        .outcome
        .as_ref()
        .unwrap_err()
        .message
        .starts_with("dataset:"));
}

#[test]
fn reruns_are_bit_identical() {
    let configs = configs();
    let a = grid_run(&configs[..4], Path::new("."), Execution::Sequential);
    let b = grid_run(&configs[..4], Path::new("."), Execution::Sequential);
    assert_eq!(a, b);
}
