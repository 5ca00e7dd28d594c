//! Trains the base model and its ablated variants under one budget and seed.

use std::path::Path;

use crate::data::{Dataset, FieldSchema};
use crate::error::{Error, Result};
use crate::model::{Ablation, ModelConfig};
use crate::train::{evaluate, train, TrainConfig};

/// The variants, in table order, with their display names.
pub const ABLATION_VARIANTS: [(&str, Ablation); 5] = [
    ("BASE", Ablation::None),
    ("NO-SE", Ablation::NoSe),
    ("NO-BI", Ablation::NoBi),
    ("FM", Ablation::Fm),
    ("FNN", Ablation::Fnn),
];

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub variant: &'static str,
    pub ablation: Ablation,
    /// Test AUC; `None` when the test set holds one class.
    pub auc: Option<f64>,
    pub logloss: f64,
}

/// Trains each variant of `base` on `train_set` (early stopping on
/// `valid_set`) and scores the selected model on `test_set`.
pub fn run_ablation(
    base: &ModelConfig,
    schema: &FieldSchema,
    train_set: &Dataset,
    valid_set: &Dataset,
    test_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<Vec<AblationRow>> {
    if base.ablation != Ablation::None {
        return Err(Error::config("model.ablation", "the ablation table starts from the unablated model"));
    }
    ABLATION_VARIANTS
        .iter()
        .map(|&(variant, ablation)| {
            let config = ModelConfig { ablation, ..base.clone() };
            let outcome = train(&config, schema, train_set, valid_set, cfg)?;
            let eval = evaluate(&outcome.model, test_set, cfg.batch_size)?;
            Ok(AblationRow { variant, ablation, auc: eval.auc, logloss: eval.logloss })
        })
        .collect()
}

/// `variant,auc,logloss`.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("variant,auc,logloss\n");
    for r in rows {
        let auc = r.auc.map(|a| a.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", r.variant, auc, r.logloss));
    }
    out
}

pub fn write_ablation_csv(path: impl AsRef<Path>, rows: &[AblationRow]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, ablation_csv(rows)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};

    fn setup() -> (crate::data::SyntheticData, ModelConfig, TrainConfig) {
        let spec = SyntheticSpec {
            fields: 5,
            train_rows: 600,
            test_rows: 300,
            pairs: vec![crate::data::PlantedPair { left: 0, right: 1, weight: 3.0 }],
            ..SyntheticSpec::planted(4)
        };
        let model = ModelConfig { embedding_dim: 4, hidden_units: vec![8], ..ModelConfig::default() };
        let cfg = TrainConfig { epochs: 2, batch_size: 100, learning_rate: 1e-2, seed: 8, ..TrainConfig::default() };
        (generate_synthetic(&spec).unwrap(), model, cfg)
    }

    #[test]
    fn fm_row_equals_standalone_fm() {
        let (d, model, cfg) = setup();
        let rows = run_ablation(&model, &d.schema, &d.train, &d.test, &d.test, &cfg).unwrap();
        assert_eq!(rows.iter().map(|r| r.variant).collect::<Vec<_>>(), ["BASE", "NO-SE", "NO-BI", "FM", "FNN"]);
        let fm = ModelConfig { ablation: Ablation::Fm, ..model };
        let out = train(&fm, &d.schema, &d.train, &d.test, &cfg).unwrap();
        let e = evaluate(&out.model, &d.test, 100).unwrap();
        assert_eq!((rows[3].auc, rows[3].logloss), (e.auc, e.logloss));
    }

    #[test]
    fn rejects_ablated_base() {
        let (d, model, cfg) = setup();
        let base = ModelConfig { ablation: Ablation::NoSe, ..model };
        assert!(run_ablation(&base, &d.schema, &d.train, &d.test, &d.test, &cfg).is_err());
    }

    #[test]
    fn csv_leaves_undefined_auc_empty() {
        let rows = [AblationRow { variant: "BASE", ablation: Ablation::None, auc: None, logloss: 0.5 }];
        assert_eq!(ablation_csv(&rows), "variant,auc,logloss\nBASE,,0.5\n");
    }
}
