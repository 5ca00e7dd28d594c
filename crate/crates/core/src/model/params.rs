use crate::data::FieldSchema;
use crate::error::{Error, Result};
use crate::model::Layout;
use crate::numeric::{uniform_matrix, xavier_uniform, DenseMatrix, DenseVector, Rng};

/// Initial embedding entries are uniform on `±EMBEDDING_INIT`.
pub const EMBEDDING_INIT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out × in`.
    pub weight: DenseMatrix,
    pub bias: DenseVector,
}

impl DenseLayer {
    fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: DenseMatrix::zeros(output, input),
            bias: DenseVector::zeros(output),
        }
    }

    pub fn input(&self) -> usize {
        self.weight.cols()
    }

    pub fn output(&self) -> usize {
        self.weight.rows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Embedding,
    Linear,
    Bias,
    SenetReduce,
    SenetExpand,
    BilinearOriginal,
    BilinearReweighted,
    DnnWeight,
    DnnBias,
    HeadWeight,
    HeadBias,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockInfo {
    pub name: String,
    pub kind: BlockKind,
    pub dims: Vec<usize>,
}

/// Every learnable array. The same struct, zero-filled, holds gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Per field, `buckets × k`.
    pub embeddings: Vec<DenseMatrix>,
    /// Per field, one weight per bucket.
    pub linear: Vec<DenseVector>,
    pub bias: f64,
    /// `hidden × f`.
    pub senet_reduce: DenseMatrix,
    /// `f × hidden`.
    pub senet_expand: DenseMatrix,
    /// `k × k` matrices for the original-embedding path.
    pub bilinear_original: Vec<DenseMatrix>,
    /// `k × k` matrices for the reweighted path; empty when shared.
    pub bilinear_reweighted: Vec<DenseMatrix>,
    pub dnn: Vec<DenseLayer>,
    /// Single-output affine head; present in deep mode only.
    pub head: Option<DenseLayer>,
}

impl ModelParams {
    pub fn zeros(layout: &Layout, schema: &FieldSchema) -> Self {
        let k = layout.k;
        let mats = |count: usize| (0..count).map(|_| DenseMatrix::zeros(k, k)).collect::<Vec<_>>();
        let mut dnn = Vec::new();
        let mut input = layout.dnn_input;
        for &units in &layout.hidden_units {
            dnn.push(DenseLayer::zeros(input, units));
            input = units;
        }
        Self {
            embeddings: schema.fields().iter().map(|f| DenseMatrix::zeros(f.buckets, k)).collect(),
            linear: schema.fields().iter().map(|f| DenseVector::zeros(f.buckets)).collect(),
            bias: 0.0,
            senet_reduce: DenseMatrix::zeros(layout.senet_hidden, layout.fields),
            senet_expand: DenseMatrix::zeros(layout.fields, layout.senet_hidden),
            bilinear_original: mats(layout.bilinear_matrices),
            bilinear_reweighted: if layout.share_bilinear {
                Vec::new()
            } else {
                mats(layout.bilinear_matrices)
            },
            dnn,
            head: layout.deep.then(|| DenseLayer::zeros(input, 1)),
        }
    }

    /// Embeddings uniform `±0.01`, matrices Xavier-uniform, biases and linear
    /// weights zero.
    pub fn init(layout: &Layout, schema: &FieldSchema, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(layout, schema);
        for e in &mut p.embeddings {
            *e = uniform_matrix(rng, e.rows(), e.cols(), EMBEDDING_INIT);
        }
        p.senet_reduce = xavier_uniform(rng, p.senet_reduce.rows(), p.senet_reduce.cols());
        p.senet_expand = xavier_uniform(rng, p.senet_expand.rows(), p.senet_expand.cols());
        for w in p.bilinear_original.iter_mut().chain(&mut p.bilinear_reweighted) {
            *w = xavier_uniform(rng, w.rows(), w.cols());
        }
        for layer in p.dnn.iter_mut().chain(p.head.as_mut()) {
            layer.weight = xavier_uniform(rng, layer.weight.rows(), layer.weight.cols());
        }
        p
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for block in z.slices_mut() {
            block.fill(0.0);
        }
        z
    }

    /// Block names, kinds and shapes, in the canonical order shared by
    /// [`slices`](Self::slices), the optimizer and the checkpoint format.
    pub fn block_infos(&self) -> Vec<BlockInfo> {
        let mut out = Vec::new();
        let mut push = |name: String, kind, dims: Vec<usize>| out.push(BlockInfo { name, kind, dims });
        for (i, e) in self.embeddings.iter().enumerate() {
            push(format!("embedding.{i}"), BlockKind::Embedding, vec![e.rows(), e.cols()]);
        }
        for (i, w) in self.linear.iter().enumerate() {
            push(format!("linear.{i}"), BlockKind::Linear, vec![w.len()]);
        }
        push("bias".into(), BlockKind::Bias, vec![1]);
        let (r, c) = self.senet_reduce.shape();
        push("senet.reduce".into(), BlockKind::SenetReduce, vec![r, c]);
        let (r, c) = self.senet_expand.shape();
        push("senet.expand".into(), BlockKind::SenetExpand, vec![r, c]);
        for (i, w) in self.bilinear_original.iter().enumerate() {
            push(format!("bilinear.original.{i}"), BlockKind::BilinearOriginal, vec![w.rows(), w.cols()]);
        }
        for (i, w) in self.bilinear_reweighted.iter().enumerate() {
            push(format!("bilinear.reweighted.{i}"), BlockKind::BilinearReweighted, vec![w.rows(), w.cols()]);
        }
        for (l, layer) in self.dnn.iter().enumerate() {
            let (r, c) = layer.weight.shape();
            push(format!("dnn.{l}.weight"), BlockKind::DnnWeight, vec![r, c]);
            push(format!("dnn.{l}.bias"), BlockKind::DnnBias, vec![layer.bias.len()]);
        }
        if let Some(head) = &self.head {
            let (r, c) = head.weight.shape();
            push("head.weight".into(), BlockKind::HeadWeight, vec![r, c]);
            push("head.bias".into(), BlockKind::HeadBias, vec![1]);
        }
        out
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        out.extend(self.embeddings.iter().map(DenseMatrix::as_slice));
        out.extend(self.linear.iter().map(DenseVector::as_slice));
        out.push(std::slice::from_ref(&self.bias));
        out.push(self.senet_reduce.as_slice());
        out.push(self.senet_expand.as_slice());
        out.extend(self.bilinear_original.iter().map(DenseMatrix::as_slice));
        out.extend(self.bilinear_reweighted.iter().map(DenseMatrix::as_slice));
        for layer in &self.dnn {
            out.push(layer.weight.as_slice());
            out.push(layer.bias.as_slice());
        }
        if let Some(head) = &self.head {
            out.push(head.weight.as_slice());
            out.push(head.bias.as_slice());
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        out.extend(self.embeddings.iter_mut().map(DenseMatrix::as_mut_slice));
        out.extend(self.linear.iter_mut().map(DenseVector::as_mut_slice));
        out.push(std::slice::from_mut(&mut self.bias));
        out.push(self.senet_reduce.as_mut_slice());
        out.push(self.senet_expand.as_mut_slice());
        out.extend(self.bilinear_original.iter_mut().map(DenseMatrix::as_mut_slice));
        out.extend(self.bilinear_reweighted.iter_mut().map(DenseMatrix::as_mut_slice));
        for layer in &mut self.dnn {
            out.push(layer.weight.as_mut_slice());
            out.push(layer.bias.as_mut_slice());
        }
        if let Some(head) = &mut self.head {
            out.push(head.weight.as_mut_slice());
            out.push(head.bias.as_mut_slice());
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn bilinear_parameter_counts(&self) -> (usize, usize) {
        let count = |v: &[DenseMatrix]| v.iter().map(|m| m.as_slice().len()).sum();
        (count(&self.bilinear_original), count(&self.bilinear_reweighted))
    }

    /// Matrices read by the reweighted path.
    pub fn reweighted_matrices(&self) -> &[DenseMatrix] {
        if self.bilinear_reweighted.is_empty() {
            &self.bilinear_original
        } else {
            &self.bilinear_reweighted
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }

    /// Fails unless `other` has exactly this block structure.
    pub fn check_same_shape(&self, other: &ModelParams) -> Result<()> {
        let (a, b) = (self.block_infos(), other.block_infos());
        if a.len() != b.len() {
            return Err(Error::shape("ModelParams", format!("{} blocks", a.len()), format!("{} blocks", b.len())));
        }
        for (x, y) in a.iter().zip(&b) {
            if x != y {
                return Err(Error::shape("ModelParams", format!("{} {:?}", x.name, x.dims), format!("{} {:?}", y.name, y.dims)));
            }
        }
        Ok(())
    }
}

/// Gradients of the mean loss, shaped like [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTape {
    pub grads: ModelParams,
}

impl GradientTape {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Self { grads: params.zeros_like() }
    }
}
