use chrono::NaiveDate;
use mlpcast::experiments::{evaluate_point, ToolPredictions};
use mlpcast::model_file::{checkpoint_from_json, checkpoint_to_json};
use mlpcast::synthetic::{business_days, sine_series};
use mlpcast::train::dataset_mse;
use mlpcast::{
    compare_external, fit, forecast_recursive, make_windows, mape, persistence_baseline, predict_walk_forward, rmse,
    sweep_hidden_neurons, sweep_training_volume, trace_training_error, train, ExperimentBase, Layer, MlpNetwork,
    ModelSpec, NetworkTopology, NormalizationParams, PricePoint, PriceSeries, TraceExperiment, TrainingConfig,
};

fn quick_spec(topology: NetworkTopology, epochs: u64) -> ModelSpec {
    ModelSpec {
        topology,
        training: TrainingConfig {
            epochs,
            log_interval: 10,
            ..TrainingConfig::default()
        },
        ..ModelSpec::default()
    }
}

fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// A 5:1:1 network computing σ(b·(σ(a·(x₅ − ½)) − ½)), a monotone map of
/// the newest input only.
fn last_input_network(a: f64, b: f64) -> MlpNetwork {
    let hidden = Layer::new(5, 1, vec![0.0, 0.0, 0.0, 0.0, a], vec![-a / 2.0]).unwrap();
    let out = Layer::new(1, 1, vec![b], vec![-b / 2.0]).unwrap();
    MlpNetwork::from_layers(NetworkTopology::new(5, vec![1], 1).unwrap(), vec![hidden, out]).unwrap()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[test]
fn walk_forward_with_last_input_network_tracks_persistence() {
    let series = sine_series(day(2008, 1, 2), 300, 100.0, 20.0, 40.0);
    let split = 240;
    let closes: Vec<f64> = series.closes().collect();
    // A narrow target band keeps both sigmoids near their linear regime,
    // where σ(16·(σ(x − ½) − ½)) ≈ x.
    let params = NormalizationParams::new(
        closes[..split].iter().copied().fold(f64::INFINITY, f64::min),
        closes[..split].iter().copied().fold(f64::NEG_INFINITY, f64::max),
        0.45,
        0.55,
    )
    .unwrap();
    let net = last_input_network(1.0, 16.0);
    let g = |x: f64| sigmoid(16.0 * (sigmoid(x - 0.5) - 0.5));
    let deviation = closes[split - 1..split + 59]
        .iter()
        .map(|&c| (g(params.normalize(c)) - params.normalize(c)).abs())
        .fold(0.0, f64::max);
    assert!(deviation < 1e-3, "{deviation}");

    let wf = predict_walk_forward(&net, &params, &series, split, 60).unwrap();
    let base = persistence_baseline(&series, split, 60).unwrap();
    let slope = 0.1 / (params.source_max - params.source_min);
    for (w, p) in wf.iter().zip(&base) {
        assert_eq!((w.date, w.actual), (p.date, p.actual));
        assert!((w.predicted - p.predicted).abs() <= deviation / slope + 1e-9);
        // exact wiring: the newest input is the previous day's actual
        let x = params.normalize(p.predicted);
        assert_eq!(
            w.predicted,
            params.denormalize(net.predict(&[0.0, 0.0, 0.0, 0.0, x]).unwrap()[0])
        );
    }
}

#[test]
fn horizon_after_split_covers_first_quarter_of_final_year() {
    let mut dates = business_days(day(2008, 1, 2), 1200);
    dates.retain(|d| *d <= day(2011, 12, 30));
    let train_dates = dates[dates.len() - 800..].to_vec();
    let test_dates = business_days(day(2012, 1, 2), 200);
    let points = train_dates
        .iter()
        .chain(&test_dates)
        .enumerate()
        .map(|(i, &date)| PricePoint {
            date,
            close: 50.0 + (i as f64 / 7.0).sin() * 5.0,
        })
        .collect();
    let series = PriceSeries::new("Q", points).unwrap();
    assert_eq!(series.len(), 1000);
    let spec = quick_spec(NetworkTopology::baseline(), 1);
    let model = fit(&series, &spec).unwrap();
    assert_eq!(model.split_index, 800);
    assert_eq!(model.train_end, day(2011, 12, 30));
    let records = predict_walk_forward(&model.network, &model.params, &series, model.split_index, 60).unwrap();
    assert_eq!(records.len(), 60);
    assert_eq!(records[0].date, day(2012, 1, 2));
    assert!(records
        .iter()
        .all(|r| r.date >= day(2012, 1, 1) && r.date <= day(2012, 3, 31)));
}

#[test]
fn sine_training_reduces_error_tenfold() {
    // 205 points windowed by 5 give 200 patterns
    let series = sine_series(day(2008, 1, 2), 205, 100.0, 20.0, 40.0);
    let params = NormalizationParams::new(80.0, 120.0, 0.1, 0.9).unwrap();
    let ds = make_windows(&series, &params, 5).unwrap();
    assert_eq!(ds.len(), 200);
    let config = TrainingConfig {
        epochs: 2000,
        learning_rate: 0.1,
        log_interval: 100,
        ..TrainingConfig::default()
    };
    let net = MlpNetwork::init(&NetworkTopology::baseline(), config.seed);
    let initial = dataset_mse(&net, &ds).unwrap();
    let (trained, trace) = train(net, &ds, &config).unwrap();
    assert_eq!(trace.first().unwrap().mse, initial);
    assert_eq!(trace.samples().len(), 21);
    let last = trace.last().unwrap();
    assert_eq!(last.epoch, 2000);
    assert_eq!(last.mse, dataset_mse(&trained, &ds).unwrap());
    assert!(last.mse < 0.1 * initial, "{} vs {}", last.mse, initial);
}

#[test]
fn recursive_forecast_of_sine_model_stays_in_training_range() {
    let series = sine_series(day(2008, 1, 2), 400, 100.0, 20.0, 40.0);
    let model = fit(&series, &quick_spec(NetworkTopology::baseline(), 500)).unwrap();
    let closes: Vec<f64> = series.closes().collect();
    let train = &closes[..model.split_index];
    let (lo, hi) = (
        train.iter().copied().fold(f64::INFINITY, f64::min),
        train.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let seed = &closes[model.split_index - 5..model.split_index];
    let forecast = forecast_recursive(&model.network, &model.params, seed, 10).unwrap();
    assert_eq!(forecast.len(), 10);
    for f in forecast {
        assert!(f > lo && f < hi, "{f} outside ({lo}, {hi})");
    }
}

#[test]
fn sweep_rows_follow_value_order_and_are_independent() {
    let series = sine_series(day(2008, 1, 2), 120, 100.0, 20.0, 40.0);
    let base = ExperimentBase {
        model: quick_spec(NetworkTopology::baseline(), 30),
        horizon: 20,
    };
    let forward = sweep_hidden_neurons(&series, &base, &[1, 4, 2, 3]).unwrap();
    let reversed = sweep_hidden_neurons(&series, &base, &[3, 2, 4, 1]).unwrap();
    let values: Vec<f64> = forward.rows.iter().map(|r| r.value).collect();
    assert_eq!(values, vec![1.0, 4.0, 2.0, 3.0]);
    for row in &forward.rows {
        let twin = reversed.rows.iter().find(|r| r.value == row.value).unwrap();
        assert_eq!(row, twin);
        assert_eq!(row.seed, base.model.training.seed);
    }

    let single = evaluate_point(&series, &base.model, 20).unwrap();
    let via_sweep = sweep_hidden_neurons(&series, &base, &[11]).unwrap();
    assert_eq!(via_sweep.rows[0].mape, single.mape);
}

#[test]
fn single_count_sweep_on_short_series() {
    let series = sine_series(day(2008, 1, 2), 50, 10.0, 2.0, 12.0);
    let base = ExperimentBase {
        model: quick_spec(NetworkTopology::baseline(), 20),
        horizon: 5,
    };
    let result = sweep_hidden_neurons(&series, &base, &[3]).unwrap();
    assert_eq!(result.rows.len(), 1);
    assert!(result.rows[0].mape.is_finite());
}

#[test]
fn volume_sweep_rejects_short_test_side() {
    let series = sine_series(day(2008, 1, 2), 100, 10.0, 2.0, 12.0);
    let base = ExperimentBase {
        model: quick_spec(NetworkTopology::baseline(), 1),
        horizon: 60,
    };
    assert!(sweep_training_volume(&series, &base, &[0.99]).is_err());
    assert!(sweep_training_volume(&series, &base, &[0.4]).is_ok());
}

#[test]
fn checkpoint_resume_matches_continuous_run() {
    let series = sine_series(day(2008, 1, 2), 150, 100.0, 20.0, 40.0);
    let spec = quick_spec(NetworkTopology::two_hidden(5, 4).unwrap(), 0);
    let continuous = {
        let mut run = TraceExperiment::new(&series, &spec).unwrap();
        let trace = run.advance(60).unwrap();
        (run.state.clone(), trace)
    };

    let mut first = TraceExperiment::new(&series, &spec).unwrap();
    let mut trace = first.advance(30).unwrap();
    let json = checkpoint_to_json(&first.checkpoint()).unwrap();
    let mut second = TraceExperiment::resume(&series, &spec, checkpoint_from_json(&json).unwrap()).unwrap();
    trace.extend(second.advance_to(60).unwrap());

    assert_eq!(second.state, continuous.0);
    assert_eq!(trace, continuous.1);
    assert_eq!(trace_training_error(&series, &spec, 60, 10).unwrap(), continuous.1);
}

#[test]
fn comparison_of_own_predictions_matches_evaluation() {
    let series = sine_series(day(2008, 1, 2), 200, 100.0, 20.0, 40.0);
    let model = fit(&series, &quick_spec(NetworkTopology::baseline(), 50)).unwrap();
    let records = predict_walk_forward(&model.network, &model.params, &series, model.split_index, 30).unwrap();
    let actuals: Vec<(NaiveDate, f64)> = records.iter().map(|r| (r.date, r.actual)).collect();
    let own = ToolPredictions {
        name: "self".into(),
        predictions: records.iter().map(|r| (r.date, r.predicted)).collect(),
    };
    let scores = compare_external(&actuals, &[own]).unwrap();
    assert_eq!(scores[0].mape, mape(&records).unwrap());
    assert_eq!(scores[0].rmse, rmse(&records).unwrap());
}
