//! Single-row layer operations.
//!
//! Each layer has a slice kernel (`*_into`) used by the batched forward pass and
//! a shape-checked wrapper over [`DenseVector`]/[`DenseMatrix`]. Embeddings for
//! one row are an `f × k` matrix, one field per row.

use crate::data::ExampleBatch;
use crate::error::{Error, Result};
use crate::model::{field_pairs, pair_count, DenseLayer, FieldType, ModelParams};
use crate::numeric::{dot, matvec_into, DenseMatrix, DenseVector, Rng};

#[inline]
pub(crate) fn squeeze_into(e: &[f64], k: usize, z: &mut [f64]) {
    let inv = 1.0 / k as f64;
    for (zi, ei) in z.iter_mut().zip(e.chunks_exact(k)) {
        *zi = ei.iter().sum::<f64>() * inv;
    }
}

/// `hidden_pre = reduce·z`, `a_pre = expand·relu(hidden_pre)`, `a = relu(a_pre)`.
#[inline]
pub(crate) fn excite_into(
    z: &[f64],
    reduce: &DenseMatrix,
    expand: &DenseMatrix,
    hidden_pre: &mut [f64],
    a_pre: &mut [f64],
    a: &mut [f64],
) {
    matvec_into(reduce.as_slice(), reduce.cols(), z, hidden_pre);
    let hidden: Vec<f64> = hidden_pre.iter().map(|&x| x.max(0.0)).collect();
    matvec_into(expand.as_slice(), expand.cols(), &hidden, a_pre);
    for (ai, &p) in a.iter_mut().zip(a_pre.iter()) {
        *ai = p.max(0.0);
    }
}

#[inline]
pub(crate) fn reweight_into(a: &[f64], e: &[f64], k: usize, v: &mut [f64]) {
    for ((vi, ei), &ai) in v.chunks_exact_mut(k).zip(e.chunks_exact(k)).zip(a) {
        for (x, &y) in vi.iter_mut().zip(ei) {
            *x = ai * y;
        }
    }
}

/// `u = Wᵀ·vi` (so `u[t] = Σ_s vi[s]·W[s,t]`), then `p = u ⊙ vj`.
#[inline]
pub(crate) fn bilinear_into(vi: &[f64], vj: &[f64], w: &[f64], u: &mut [f64], p: &mut [f64]) {
    let k = vi.len();
    u.fill(0.0);
    for (s, &x) in vi.iter().enumerate() {
        if x != 0.0 {
            for (ut, &wst) in u.iter_mut().zip(&w[s * k..(s + 1) * k]) {
                *ut += x * wst;
            }
        }
    }
    for ((pt, &ut), &yt) in p.iter_mut().zip(u.iter()).zip(vj) {
        *pt = ut * yt;
    }
}

/// All `n` pair vectors for one embedding set. `bilinear` selects matrices by
/// field type; `None` means plain Hadamard. When bilinear, `u` receives each
/// pair's `Wᵀ·vi`.
pub(crate) fn interact_into(
    emb: &[f64],
    k: usize,
    bilinear: Option<(&[DenseMatrix], FieldType)>,
    mut u: Option<&mut [f64]>,
    out: &mut [f64],
) {
    let f = emb.len() / k;
    for (m, (i, j)) in field_pairs(f).enumerate() {
        let vi = &emb[i * k..(i + 1) * k];
        let vj = &emb[j * k..(j + 1) * k];
        let p = &mut out[m * k..(m + 1) * k];
        match (bilinear, u.as_deref_mut()) {
            (Some((mats, ft)), Some(u)) => {
                let w = mats[ft.select(i, m)].as_slice();
                bilinear_into(vi, vj, w, &mut u[m * k..(m + 1) * k], p);
            }
            (Some((mats, ft)), None) => {
                let w = mats[ft.select(i, m)].as_slice();
                let mut scratch = vec![0.0; k];
                bilinear_into(vi, vj, w, &mut scratch, p);
            }
            (None, _) => {
                for ((x, &a), &b) in p.iter_mut().zip(vi).zip(vj) {
                    *x = a * b;
                }
            }
        }
    }
}

/// One hidden layer: `pre = W·input + b`, `act = relu(pre)`, then inverted
/// dropout when `dropout` is given (the mask holds `0` or `1/(1-rate)`).
pub(crate) fn dense_relu_into(
    layer: &DenseLayer,
    input: &[f64],
    pre: &mut [f64],
    act: &mut [f64],
    dropout: Option<(&mut Rng, f64, &mut [f64])>,
) {
    matvec_into(layer.weight.as_slice(), layer.weight.cols(), input, pre);
    for (p, &b) in pre.iter_mut().zip(layer.bias.as_slice()) {
        *p += b;
    }
    for (a, &p) in act.iter_mut().zip(pre.iter()) {
        *a = p.max(0.0);
    }
    if let Some((rng, rate, mask)) = dropout {
        let keep = 1.0 / (1.0 - rate);
        for (a, m) in act.iter_mut().zip(mask.iter_mut()) {
            *m = if rng.bernoulli(rate) { 0.0 } else { keep };
            *a *= *m;
        }
    }
}

#[inline]
pub(crate) fn head_into(head: &DenseLayer, input: &[f64]) -> f64 {
    dot(head.weight.row(0), input) + head.bias[0]
}

/// Field embeddings of row `row`: `e_i = value_i · embedding_i[index_i]`.
pub fn embed(batch: &ExampleBatch, row: usize, params: &ModelParams) -> Result<DenseMatrix> {
    let f = params.embeddings.len();
    if batch.fields() != f {
        return Err(Error::shape("embed", format!("{f} fields"), format!("{} fields", batch.fields())));
    }
    let k = params.embeddings[0].cols();
    let mut out = DenseMatrix::zeros(f, k);
    for (field, (&idx, &value)) in batch.row_indices(row).iter().zip(batch.row_values(row)).enumerate() {
        let table = &params.embeddings[field];
        if idx as usize >= table.rows() {
            return Err(Error::Bounds { field, index: idx as usize, buckets: table.rows() });
        }
        for (o, &x) in out.row_mut(field).iter_mut().zip(table.row(idx as usize)) {
            *o = value * x;
        }
    }
    Ok(out)
}

/// Mean over the embedding dimension of each field.
pub fn squeeze(e: &DenseMatrix) -> DenseVector {
    let mut z = vec![0.0; e.rows()];
    squeeze_into(e.as_slice(), e.cols(), &mut z);
    z.into()
}

/// `relu(expand · relu(reduce · z))`.
pub fn excitation(z: &DenseVector, reduce: &DenseMatrix, expand: &DenseMatrix) -> Result<DenseVector> {
    if reduce.cols() != z.len() || expand.cols() != reduce.rows() || expand.rows() != z.len() {
        return Err(Error::shape(
            "excitation",
            format!("reduce {}x{}, expand {}x{}", reduce.rows(), reduce.cols(), expand.rows(), expand.cols()),
            format!("z len {}", z.len()),
        ));
    }
    let mut hidden = vec![0.0; reduce.rows()];
    let mut a_pre = vec![0.0; z.len()];
    let mut a = vec![0.0; z.len()];
    excite_into(z.as_slice(), reduce, expand, &mut hidden, &mut a_pre, &mut a);
    Ok(a.into())
}

/// `v_i = a_i · e_i`.
pub fn reweight(a: &DenseVector, e: &DenseMatrix) -> Result<DenseMatrix> {
    if a.len() != e.rows() {
        return Err(Error::shape("reweight", format!("{} weights", a.len()), format!("{} fields", e.rows())));
    }
    let mut v = DenseMatrix::zeros(e.rows(), e.cols());
    reweight_into(a.as_slice(), e.as_slice(), e.cols(), v.as_mut_slice());
    Ok(v)
}

/// `(viᵀ·W) ⊙ vj`.
pub fn bilinear_pair(vi: &DenseVector, vj: &DenseVector, w: &DenseMatrix) -> Result<DenseVector> {
    let k = vi.len();
    if vj.len() != k || w.shape() != (k, k) {
        return Err(Error::shape(
            "bilinear_pair",
            format!("vi len {k}, vj len {}", vj.len()),
            format!("W {}x{}", w.rows(), w.cols()),
        ));
    }
    let mut u = vec![0.0; k];
    let mut p = vec![0.0; k];
    bilinear_into(vi.as_slice(), vj.as_slice(), w.as_slice(), &mut u, &mut p);
    Ok(p.into())
}

/// Pair vectors (`n × k`) for one embedding set, bilinear when matrices are
/// given, Hadamard otherwise.
pub fn interact(emb: &DenseMatrix, bilinear: Option<(&[DenseMatrix], FieldType)>) -> Result<DenseMatrix> {
    let (f, k) = emb.shape();
    if let Some((mats, ft)) = bilinear {
        let need = ft.matrix_count(f);
        if mats.len() != need || mats.iter().any(|m| m.shape() != (k, k)) {
            return Err(Error::shape("interact", format!("{need} matrices of {k}x{k}"), format!("{} matrices", mats.len())));
        }
    }
    let n = pair_count(f);
    let mut out = DenseMatrix::zeros(n, k);
    interact_into(emb.as_slice(), k, bilinear, None, out.as_mut_slice());
    Ok(out)
}

/// `[p_1, …, p_n, q_1, …, q_n]` flattened; `q` is absent when the SENET path
/// is removed.
pub fn combine(p: &DenseMatrix, q: Option<&DenseMatrix>) -> Result<DenseVector> {
    let mut c = p.as_slice().to_vec();
    if let Some(q) = q {
        if q.shape() != p.shape() {
            return Err(Error::shape("combine", format!("p {:?}", p.shape()), format!("q {:?}", q.shape())));
        }
        c.extend_from_slice(q.as_slice());
    }
    Ok(c.into())
}

/// Sum of every element of the combined vector.
pub fn shallow_head(c: &DenseVector) -> f64 {
    c.as_slice().iter().sum()
}

/// Hidden ReLU layers then the affine head, returning the pre-sigmoid output.
/// With `dropout = Some((rng, rate))` hidden activations are dropped.
pub fn dnn_forward(
    a0: &DenseVector,
    layers: &[DenseLayer],
    head: &DenseLayer,
    mut dropout: Option<(&mut Rng, f64)>,
) -> Result<f64> {
    let mut input = a0.as_slice().to_vec();
    for (l, layer) in layers.iter().enumerate() {
        if layer.input() != input.len() {
            return Err(Error::shape("dnn_forward", format!("layer {l} input {}", layer.input()), format!("len {}", input.len())));
        }
        let mut pre = vec![0.0; layer.output()];
        let mut act = vec![0.0; layer.output()];
        let mut mask = vec![0.0; layer.output()];
        let drop = dropout.as_mut().map(|(rng, rate)| (&mut **rng, *rate, mask.as_mut_slice()));
        dense_relu_into(layer, &input, &mut pre, &mut act, drop);
        input = act;
    }
    if head.input() != input.len() || head.output() != 1 {
        return Err(Error::shape("dnn_forward", format!("head {}x{}", head.output(), head.input()), format!("len {}", input.len())));
    }
    Ok(head_into(head, &input))
}
