use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How bilinear matrices are shared across field pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldType {
    /// One matrix shared by every pair.
    All,
    /// One matrix per left field of a pair.
    Each,
    /// One matrix per pair.
    Interaction,
}

impl FieldType {
    pub fn matrix_count(self, fields: usize) -> usize {
        match self {
            FieldType::All => 1,
            FieldType::Each => fields,
            FieldType::Interaction => pair_count(fields),
        }
    }

    /// Matrix used for pair `(i, j)` with lexicographic pair index `m`.
    #[inline]
    pub fn select(self, i: usize, m: usize) -> usize {
        match self {
            FieldType::All => 0,
            FieldType::Each => i,
            FieldType::Interaction => m,
        }
    }
}

/// Two digits choosing bilinear (`1`) or Hadamard (`0`) interactions: the
/// first for the original embeddings, the second for the SENET-reweighted
/// embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CodeRepr", into = "String")]
pub struct CombinationCode {
    pub original: bool,
    pub reweighted: bool,
}

impl CombinationCode {
    pub const HADAMARD: Self = Self { original: false, reweighted: false };
    pub const BILINEAR: Self = Self { original: true, reweighted: true };
    pub const ALL: [Self; 4] = [
        Self { original: false, reweighted: false },
        Self { original: false, reweighted: true },
        Self { original: true, reweighted: false },
        Self { original: true, reweighted: true },
    ];
}

impl fmt::Display for CombinationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.original as u8, self.reweighted as u8)
    }
}

impl FromStr for CombinationCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digit = |c: u8| match c {
            b'0' => Ok(false),
            b'1' => Ok(true),
            _ => Err(()),
        };
        match s.as_bytes() {
            [a, b] => match (digit(*a), digit(*b)) {
                (Ok(original), Ok(reweighted)) => Ok(Self { original, reweighted }),
                _ => Err(Error::config("combination", format!("expected 00, 01, 10 or 11, got {s:?}"))),
            },
            _ => Err(Error::config("combination", format!("expected 00, 01, 10 or 11, got {s:?}"))),
        }
    }
}

/// Accepts `"01"` as well as the bare numbers `10` and `11`.
#[derive(Deserialize)]
#[serde(untagged)]
enum CodeRepr {
    Text(String),
    Number(u64),
}

impl TryFrom<CodeRepr> for CombinationCode {
    type Error = Error;
    fn try_from(r: CodeRepr) -> Result<Self> {
        match r {
            CodeRepr::Text(s) => s.parse(),
            CodeRepr::Number(n) => format!("{n:02}").parse(),
        }
    }
}

impl From<CombinationCode> for String {
    fn from(c: CombinationCode) -> String {
        c.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Shallow,
    Deep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    None,
    /// SENET layer and its interaction path removed.
    NoSe,
    /// All interactions forced to Hadamard.
    NoBi,
    /// Shallow, no SENET, inner-product pair sum: a factorization machine.
    Fm,
    /// Raw concatenated embeddings into the DNN.
    Fnn,
    /// Bias and linear part only.
    Lr,
}

impl Ablation {
    pub const ALL: [Self; 6] = [Self::None, Self::NoSe, Self::NoBi, Self::Fm, Self::Fnn, Self::Lr];
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ablation::None => "none",
            Ablation::NoSe => "no_se",
            Ablation::NoBi => "no_bi",
            Ablation::Fm => "fm",
            Ablation::Fnn => "fnn",
            Ablation::Lr => "lr",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    pub reduction_ratio: usize,
    pub field_type: FieldType,
    pub combination: CombinationCode,
    pub mode: Mode,
    pub hidden_units: Vec<usize>,
    pub dropout: f64,
    pub ablation: Ablation,
    /// Adds `Σ w[field][index]·value` to the logit.
    pub use_linear: bool,
    /// Both interaction paths read the same bilinear matrices.
    pub share_bilinear: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 10,
            reduction_ratio: 3,
            field_type: FieldType::Interaction,
            combination: CombinationCode::BILINEAR,
            mode: Mode::Deep,
            hidden_units: vec![400, 400, 400],
            dropout: 0.5,
            ablation: Ablation::None,
            use_linear: true,
            share_bilinear: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 {
            return Err(Error::config("model.embedding_dim", "must be >= 1"));
        }
        if self.reduction_ratio == 0 {
            return Err(Error::config("model.reduction_ratio", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("model.dropout", "must lie in [0, 1)"));
        }
        if self.ablation == Ablation::Lr && !self.use_linear {
            return Err(Error::config("model.use_linear", "the lr ablation needs the linear part"));
        }
        let deep = self.ablation == Ablation::Fnn
            || (self.mode == Mode::Deep && !matches!(self.ablation, Ablation::Fm | Ablation::Lr));
        if deep && (self.hidden_units.is_empty() || self.hidden_units.contains(&0)) {
            return Err(Error::config(
                "model.hidden_units",
                "deep models need at least one hidden layer, each with >= 1 unit",
            ));
        }
        Ok(())
    }

    pub fn layout(&self, fields: usize) -> Result<Layout> {
        self.validate()?;
        if fields < 2 {
            return Err(Error::config("schema", "need at least 2 fields"));
        }
        let k = self.embedding_dim;
        let n = pair_count(fields);
        let code = self.combination;
        let (interactions, reweighted_path, p_bi, q_bi, deep) = match self.ablation {
            Ablation::None => (true, true, code.original, code.reweighted, self.mode == Mode::Deep),
            Ablation::NoSe => (true, false, code.original, false, self.mode == Mode::Deep),
            Ablation::NoBi => (true, true, false, false, self.mode == Mode::Deep),
            Ablation::Fm => (true, false, false, false, false),
            Ablation::Fnn => (false, false, false, false, true),
            Ablation::Lr => (false, false, false, false, false),
        };
        let combined_width = if !interactions {
            0
        } else if reweighted_path {
            2 * n * k
        } else {
            n * k
        };
        let dnn_input = match (deep, self.ablation) {
            (false, _) => 0,
            (true, Ablation::Fnn) => fields * k,
            (true, _) => combined_width,
        };
        Ok(Layout {
            fields,
            k,
            pairs: n,
            senet_hidden: senet_hidden(fields, self.reduction_ratio),
            field_type: self.field_type,
            bilinear_matrices: self.field_type.matrix_count(fields),
            interactions,
            reweighted_path,
            original_bilinear: p_bi,
            reweighted_bilinear: q_bi,
            deep,
            dnn_input,
            combined_width,
            hidden_units: if deep { self.hidden_units.clone() } else { Vec::new() },
            dropout: self.dropout,
            use_linear: self.use_linear,
            share_bilinear: self.share_bilinear,
        })
    }
}

/// `f(f-1)/2`.
pub fn pair_count(fields: usize) -> usize {
    fields * fields.saturating_sub(1) / 2
}

/// Bottleneck width of the excitation block: `max(1, ceil(f / r))`.
pub fn senet_hidden(fields: usize, reduction_ratio: usize) -> usize {
    fields.div_ceil(reduction_ratio).max(1)
}

/// Field pairs `(i, j)`, `i < j`, in lexicographic order.
pub fn field_pairs(fields: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..fields).flat_map(move |i| (i + 1..fields).map(move |j| (i, j)))
}

/// A config resolved against a field count, with ablations applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub fields: usize,
    pub k: usize,
    pub pairs: usize,
    pub senet_hidden: usize,
    pub field_type: FieldType,
    pub bilinear_matrices: usize,
    /// Pairwise interactions feed the output at all.
    pub interactions: bool,
    /// The SENET path (and its interaction vector) is present.
    pub reweighted_path: bool,
    pub original_bilinear: bool,
    pub reweighted_bilinear: bool,
    pub deep: bool,
    pub dnn_input: usize,
    /// Width of the concatenated interaction vector.
    pub combined_width: usize,
    pub hidden_units: Vec<usize>,
    pub dropout: f64,
    pub use_linear: bool,
    pub share_bilinear: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_are_strict_upper_triangle() {
        let p: Vec<_> = field_pairs(4).collect();
        assert_eq!(p, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(pair_count(4), 6);
        assert_eq!(pair_count(39), 741);
    }

    #[test]
    fn senet_width() {
        assert_eq!(senet_hidden(3, 3), 1);
        assert_eq!(senet_hidden(10, 3), 4);
        assert_eq!(senet_hidden(2, 5), 1);
    }

    #[test]
    fn code_round_trip() {
        for c in CombinationCode::ALL {
            assert_eq!(c.to_string().parse::<CombinationCode>().unwrap(), c);
        }
        assert_eq!("10".parse::<CombinationCode>().unwrap(), CombinationCode { original: true, reweighted: false });
        assert!("12".parse::<CombinationCode>().is_err());
        assert!("1".parse::<CombinationCode>().is_err());
    }

    #[test]
    fn config_json() {
        let c = ModelConfig::default();
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains(r#""combination":"11""#), "{json}");
        assert!(json.contains(r#""ablation":"none""#), "{json}");
        assert_eq!(serde_json::from_str::<ModelConfig>(&json).unwrap(), c);
        let partial: ModelConfig = serde_json::from_str(r#"{"ablation":"no_se","field_type":"each"}"#).unwrap();
        assert_eq!(partial.ablation, Ablation::NoSe);
        assert!(serde_json::from_str::<ModelConfig>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn ablation_layouts() {
        let base = ModelConfig { embedding_dim: 3, hidden_units: vec![5], ..ModelConfig::default() };
        let l = base.layout(4).unwrap();
        assert_eq!(l.dnn_input, 2 * 6 * 3);
        assert!(l.original_bilinear && l.reweighted_bilinear);

        let l = ModelConfig { ablation: Ablation::NoSe, ..base.clone() }.layout(4).unwrap();
        assert_eq!(l.dnn_input, 6 * 3);
        assert!(!l.reweighted_path);

        let l = ModelConfig { ablation: Ablation::NoBi, ..base.clone() }.layout(4).unwrap();
        assert!(!l.original_bilinear && !l.reweighted_bilinear && l.reweighted_path);

        let l = ModelConfig { ablation: Ablation::Fm, ..base.clone() }.layout(4).unwrap();
        assert!(!l.deep && !l.reweighted_path && !l.original_bilinear && l.interactions);

        let l = ModelConfig { ablation: Ablation::Fnn, mode: Mode::Shallow, ..base.clone() }.layout(4).unwrap();
        assert!(l.deep && !l.interactions);
        assert_eq!(l.dnn_input, 4 * 3);
    }

    #[test]
    fn invalid_configs() {
        let ok = ModelConfig::default();
        assert!(ModelConfig { reduction_ratio: 0, ..ok.clone() }.validate().is_err());
        assert!(ModelConfig { dropout: 1.0, ..ok.clone() }.validate().is_err());
        assert!(ModelConfig { hidden_units: vec![], ..ok.clone() }.validate().is_err());
        assert!(ModelConfig { hidden_units: vec![], mode: Mode::Shallow, ..ok.clone() }.validate().is_ok());
        assert!(ModelConfig { ablation: Ablation::Lr, use_linear: false, ..ok }.validate().is_err());
    }
}
