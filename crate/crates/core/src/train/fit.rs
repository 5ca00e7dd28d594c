//! Mini-batch training with early stopping on validation AUC.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{batches, Dataset, FieldSchema};
use crate::error::{Error, Result};
use crate::metrics::{auc, logloss, ScoredSet};
use crate::model::{FiBiNet, ModelConfig};
use crate::numeric::{stream, Rng};
use crate::train::{AdamConfig, AdamState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Validate every this many epochs (and after the last one).
    pub eval_every: usize,
    /// Stop after this many validations without a better AUC.
    pub patience: usize,
    pub seed: u64,
    /// Fill the `seconds` column of the metric log with wall-clock time.
    /// Off by default so logs are byte-reproducible.
    pub record_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            epochs: 10,
            batch_size: 1000,
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            eval_every: 1,
            patience: 2,
            seed: 0,
            record_time: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be >= 1"));
        }
        if self.eval_every == 0 {
            return Err(Error::config("train.eval_every", "must be >= 1"));
        }
        if self.patience == 0 {
            return Err(Error::config("train.patience", "must be >= 1"));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::config("train.learning_rate", "must be > 0"));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub epoch: usize,
    pub split: &'static str,
    /// `None` when the split holds a single class.
    pub auc: Option<f64>,
    pub logloss: f64,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub auc: Option<f64>,
    pub logloss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation AUC (ties go to
    /// the lower validation logloss).
    pub model: FiBiNet,
    pub log: Vec<MetricRow>,
    /// 0 when no epoch ran.
    pub best_epoch: usize,
    pub steps: u64,
}

fn scored(scores: &[f64], labels: &[f64]) -> Result<Evaluation> {
    let set = ScoredSet::new(scores, labels)?;
    Ok(Evaluation {
        auc: auc(set).ok(),
        logloss: logloss(set)?,
    })
}

/// Evaluation-mode metrics over a whole dataset.
pub fn evaluate(model: &FiBiNet, data: &Dataset, batch_size: usize) -> Result<Evaluation> {
    let mut scores = Vec::with_capacity(data.len());
    for batch in batches(data, batch_size.max(1), None)? {
        scores.extend(model.predict(&batch)?);
    }
    scored(&scores, data.labels())
}

/// Builds a model from `config` (initialized from the seed) and trains it.
pub fn train(
    config: &ModelConfig,
    schema: &FieldSchema,
    train_set: &Dataset,
    valid_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let model = FiBiNet::new(config.clone(), schema.clone(), &mut Rng::for_stream(cfg.seed, stream::INIT))?;
    fit(model, train_set, valid_set, cfg)
}

/// Trains an existing model.
pub fn fit(mut model: FiBiNet, train_set: &Dataset, valid_set: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    train_set.check_bounds(model.schema())?;
    valid_set.check_bounds(model.schema())?;

    let mut shuffle = Rng::for_stream(cfg.seed, stream::SHUFFLE);
    let mut dropout = Rng::for_stream(cfg.seed, stream::DROPOUT);
    let mut adam = AdamState::new(&model.params, cfg.adam());
    let start = Instant::now();
    let seconds = |start: &Instant| cfg.record_time.then(|| start.elapsed().as_secs_f64());

    let mut best = model.clone();
    let mut best_score = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut log = Vec::new();

    for epoch in 1..=cfg.epochs {
        let mut scores = Vec::with_capacity(train_set.len());
        let mut labels = Vec::with_capacity(train_set.len());
        for (b, batch) in batches(train_set, cfg.batch_size, Some(shuffle.next_u64()))?.enumerate() {
            let step = adam.t + 1;
            let trace = model.forward(&batch, Some(&mut dropout)).map_err(|e| match e {
                Error::Numeric(m) => Error::Numeric(format!("{m} at epoch {epoch}, batch {b} (step {step})")),
                other => other,
            })?;
            let loss = trace.loss(batch.labels());
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "training loss became {loss} at epoch {epoch}, batch {b} (step {step})"
                )));
            }
            let tape = model.backward(&trace, batch.labels())?;
            adam.step(&mut model.params, &tape)?;
            scores.extend_from_slice(&trace.probs);
            labels.extend_from_slice(batch.labels());
        }
        if !model.params.is_finite() {
            return Err(Error::Numeric(format!("parameters became non-finite in epoch {epoch} (step {})", adam.t)));
        }

        if epoch % cfg.eval_every != 0 && epoch != cfg.epochs {
            continue;
        }
        if !scores.is_empty() {
            let t = scored(&scores, &labels)?;
            log.push(MetricRow { epoch, split: "train", auc: t.auc, logloss: t.logloss, seconds: seconds(&start) });
        }
        if valid_set.is_empty() {
            best = model.clone();
            best_epoch = epoch;
            continue;
        }
        let v = evaluate(&model, valid_set, cfg.batch_size)?;
        log.push(MetricRow { epoch, split: "valid", auc: v.auc, logloss: v.logloss, seconds: seconds(&start) });
        // Higher AUC wins; equal AUC (e.g. both 1.0) falls back to lower logloss.
        let score = (v.auc.unwrap_or(f64::NEG_INFINITY), -v.logloss);
        if score > best_score {
            best_score = score;
            best = model.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }

    Ok(TrainOutcome { model: best, log, best_epoch, steps: adam.t })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// `epoch,split,auc,logloss,seconds`; undefined values are left empty.
pub fn write_metric_csv(path: impl AsRef<Path>, rows: &[MetricRow]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("epoch,split,auc,logloss,seconds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epoch,
            r.split,
            fmt_opt(r.auc),
            r.logloss,
            fmt_opt(r.seconds)
        ));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Example, ExampleBatch};
    use crate::model::Ablation;

    fn schema() -> FieldSchema {
        FieldSchema::categorical(4, 16).unwrap()
    }

    fn data(rows: usize, seed: u64) -> Dataset {
        let mut rng = Rng::new(seed);
        let ex: Vec<Example> = (0..rows)
            .map(|_| {
                let indices: Vec<u32> = (0..4).map(|_| rng.below(16) as u32).collect();
                // Label from an interaction of fields 0 and 1.
                let label = ((indices[0] % 2) ^ (indices[1] % 2)) as u8;
                Example { label, indices, values: vec![1.0; 4] }
            })
            .collect();
        ExampleBatch::from_examples(4, &ex).unwrap()
    }

    fn small() -> ModelConfig {
        ModelConfig { embedding_dim: 4, hidden_units: vec![16, 8], dropout: 0.0, ..ModelConfig::default() }
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let cfg = TrainConfig { epochs: 0, seed: 3, ..TrainConfig::default() };
        let out = train(&small(), &schema(), &data(50, 1), &data(20, 2), &cfg).unwrap();
        let init = FiBiNet::new(small(), schema(), &mut Rng::for_stream(3, stream::INIT)).unwrap();
        assert_eq!(out.model.params, init.params);
        assert!(out.log.is_empty());
        assert_eq!((out.best_epoch, out.steps), (0, 0));
    }

    #[test]
    fn same_seed_gives_identical_logs_and_params() {
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 32,
            learning_rate: 1e-2,
            seed: 9,
            patience: 5,
            ..TrainConfig::default()
        };
        let model = ModelConfig { dropout: 0.3, ..small() };
        let a = train(&model, &schema(), &data(200, 1), &data(80, 2), &cfg).unwrap();
        let b = train(&model, &schema(), &data(200, 1), &data(80, 2), &cfg).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.model.params, b.model.params);
        assert_eq!(a.log.len(), 6);
    }

    #[test]
    fn learns_a_pairwise_rule() {
        let cfg = TrainConfig { epochs: 30, batch_size: 32, learning_rate: 1e-2, patience: 30, seed: 1, ..TrainConfig::default() };
        let out = train(&small(), &schema(), &data(1000, 1), &data(300, 2), &cfg).unwrap();
        let e = evaluate(&out.model, &data(300, 3), 100).unwrap();
        assert!(e.auc.unwrap() > 0.9, "{e:?}");
    }

    #[test]
    fn early_stopping_keeps_best_epoch() {
        let cfg = TrainConfig { epochs: 50, batch_size: 16, learning_rate: 5e-2, patience: 1, seed: 2, ..TrainConfig::default() };
        let out = train(&small(), &schema(), &data(60, 1), &data(60, 7), &cfg).unwrap();
        let valid: Vec<&MetricRow> = out.log.iter().filter(|r| r.split == "valid").collect();
        let best = valid.iter().map(|r| r.auc.unwrap()).fold(f64::NEG_INFINITY, f64::max);
        let at_best = valid.iter().find(|r| r.epoch == out.best_epoch).unwrap();
        assert_eq!(at_best.auc.unwrap(), best);
        assert!(valid.len() < 50);
    }

    #[test]
    fn diverging_training_names_the_step() {
        let mut d = data(40, 1);
        d.values_mut().iter_mut().for_each(|v| *v = 1e200);
        let model = ModelConfig { ablation: Ablation::Lr, ..small() };
        let cfg = TrainConfig { epochs: 1, batch_size: 8, ..TrainConfig::default() };
        let mut m = FiBiNet::new(model, schema(), &mut Rng::new(1)).unwrap();
        m.params.linear[0].as_mut_slice().fill(1e200);
        let err = fit(m, &d, &data(10, 2), &cfg).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)), "{err}");
        assert!(err.to_string().contains("step"), "{err}");
    }

    #[test]
    fn metric_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let rows = [
            MetricRow { epoch: 1, split: "train", auc: Some(0.75), logloss: 0.5, seconds: None },
            MetricRow { epoch: 1, split: "valid", auc: None, logloss: 0.25, seconds: Some(1.5) },
        ];
        write_metric_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text, "epoch,split,auc,logloss,seconds\n1,train,0.75,0.5,\n1,valid,,0.25,1.5\n");
    }

    #[test]
    fn rejects_invalid_config() {
        for bad in [
            TrainConfig { batch_size: 0, ..TrainConfig::default() },
            TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
            TrainConfig { patience: 0, ..TrainConfig::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config { .. })));
        }
    }
}
