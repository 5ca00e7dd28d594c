//! Batched forward pass with a cached trace, and the matching backward pass.
//!
//! Per row the logit is `bias + Σ_i w_i[idx_i]·x_i + y`, where `y` is the sum
//! of the combined interaction vector (shallow) or the pre-sigmoid DNN head
//! (deep). A single sigmoid maps the logit to a probability.

use crate::data::{ExampleBatch, FieldSchema};
use crate::error::{Error, Result};
use crate::metrics::row_logloss;
use crate::model::layers::{
    dense_relu_into, excite_into, head_into, interact_into, reweight_into,
    squeeze_into,
};
use crate::model::{field_pairs, FieldType, GradientTape, Layout, ModelConfig, ModelParams};
use crate::numeric::{axpy, dot, matvec_t_acc, outer_acc, sigmoid, DenseMatrix, Rng};

/// Activations kept between a forward pass and its backward pass. All arrays
/// are row-major with one stride per example.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    rows: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
    /// `N × f × k` field embeddings.
    pub embeddings: Vec<f64>,
    /// `N × f` squeezed embeddings.
    pub squeezed: Vec<f64>,
    hidden_pre: Vec<f64>,
    weights_pre: Vec<f64>,
    /// `N × f` excitation weights.
    pub field_weights: Vec<f64>,
    /// `N × f × k` reweighted embeddings.
    pub reweighted: Vec<f64>,
    u_original: Vec<f64>,
    u_reweighted: Vec<f64>,
    /// `N × width` combined interaction vector (or raw embeddings for FNN);
    /// the DNN input in deep mode.
    pub combined: Vec<f64>,
    combined_width: usize,
    dnn_pre: Vec<Vec<f64>>,
    dnn_act: Vec<Vec<f64>>,
    dnn_mask: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

impl ForwardTrace {
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Mean cross-entropy of the cached predictions against `labels`.
    pub fn loss(&self, labels: &[f64]) -> f64 {
        self.probs.iter().zip(labels).map(|(&p, &y)| row_logloss(p, y)).sum::<f64>() / self.rows.max(1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct FiBiNet {
    config: ModelConfig,
    schema: FieldSchema,
    layout: Layout,
    pub params: ModelParams,
}

impl FiBiNet {
    pub fn new(config: ModelConfig, schema: FieldSchema, rng: &mut Rng) -> Result<Self> {
        let layout = config.layout(schema.len())?;
        let params = ModelParams::init(&layout, &schema, rng);
        Ok(Self { config, schema, layout, params })
    }

    pub fn with_params(config: ModelConfig, schema: FieldSchema, params: ModelParams) -> Result<Self> {
        let layout = config.layout(schema.len())?;
        ModelParams::zeros(&layout, &schema).check_same_shape(&params)?;
        Ok(Self { config, schema, layout, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn schema(&self) -> &FieldSchema {
        &self.schema
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Evaluation-mode probabilities.
    pub fn predict(&self, batch: &ExampleBatch) -> Result<Vec<f64>> {
        Ok(self.forward(batch, None)?.probs)
    }

    /// Evaluation-mode mean log loss.
    pub fn loss(&self, batch: &ExampleBatch) -> Result<f64> {
        Ok(self.forward(batch, None)?.loss(batch.labels()))
    }

    /// Forward pass. Passing a generator enables dropout on hidden DNN
    /// activations (training mode).
    pub fn forward(&self, batch: &ExampleBatch, mut dropout: Option<&mut Rng>) -> Result<ForwardTrace> {
        let l = &self.layout;
        let p = &self.params;
        let (f, k, n) = (l.fields, l.k, l.pairs);
        if batch.fields() != f {
            return Err(Error::SchemaMismatch(format!("model has {f} fields, batch has {}", batch.fields())));
        }
        let rows = batch.len();
        let senet = l.reweighted_path;
        let use_dropout = l.deep && l.dropout > 0.0 && dropout.is_some();
        let combined_width = if l.deep { l.dnn_input } else { l.combined_width };

        let mut t = ForwardTrace {
            rows,
            indices: Vec::with_capacity(rows * f),
            values: Vec::with_capacity(rows * f),
            embeddings: vec![0.0; rows * f * k],
            squeezed: if senet { vec![0.0; rows * f] } else { Vec::new() },
            hidden_pre: if senet { vec![0.0; rows * l.senet_hidden] } else { Vec::new() },
            weights_pre: if senet { vec![0.0; rows * f] } else { Vec::new() },
            field_weights: if senet { vec![0.0; rows * f] } else { Vec::new() },
            reweighted: if senet { vec![0.0; rows * f * k] } else { Vec::new() },
            u_original: if l.interactions && l.original_bilinear { vec![0.0; rows * n * k] } else { Vec::new() },
            u_reweighted: if senet && l.reweighted_bilinear { vec![0.0; rows * n * k] } else { Vec::new() },
            combined: vec![0.0; rows * combined_width],
            combined_width,
            dnn_pre: l.hidden_units.iter().map(|&u| vec![0.0; rows * u]).collect(),
            dnn_act: l.hidden_units.iter().map(|&u| vec![0.0; rows * u]).collect(),
            dnn_mask: if use_dropout { l.hidden_units.iter().map(|&u| vec![0.0; rows * u]).collect() } else { Vec::new() },
            logits: vec![0.0; rows],
            probs: vec![0.0; rows],
        };

        let original_mats = l.original_bilinear.then_some((p.bilinear_original.as_slice(), l.field_type));
        let reweighted_mats = l.reweighted_bilinear.then_some((p.reweighted_matrices(), l.field_type));
        let nk = n * k;

        for r in 0..rows {
            let idx = batch.row_indices(r);
            let vals = batch.row_values(r);
            t.indices.extend_from_slice(idx);
            t.values.extend_from_slice(vals);

            let e = &mut t.embeddings[r * f * k..(r + 1) * f * k];
            for (field, (&i, &x)) in idx.iter().zip(vals).enumerate() {
                let table = &p.embeddings[field];
                if i as usize >= table.rows() {
                    return Err(Error::Bounds { field, index: i as usize, buckets: table.rows() });
                }
                for (o, &w) in e[field * k..(field + 1) * k].iter_mut().zip(table.row(i as usize)) {
                    *o = x * w;
                }
            }
            let e = &t.embeddings[r * f * k..(r + 1) * f * k];

            if senet {
                let z = &mut t.squeezed[r * f..(r + 1) * f];
                squeeze_into(e, k, z);
                let hs = l.senet_hidden;
                excite_into(
                    z,
                    &p.senet_reduce,
                    &p.senet_expand,
                    &mut t.hidden_pre[r * hs..(r + 1) * hs],
                    &mut t.weights_pre[r * f..(r + 1) * f],
                    &mut t.field_weights[r * f..(r + 1) * f],
                );
                reweight_into(
                    &t.field_weights[r * f..(r + 1) * f],
                    e,
                    k,
                    &mut t.reweighted[r * f * k..(r + 1) * f * k],
                );
            }

            let c = &mut t.combined[r * combined_width..(r + 1) * combined_width];
            if l.interactions {
                let u = (!t.u_original.is_empty()).then(|| &mut t.u_original[r * nk..(r + 1) * nk]);
                interact_into(e, k, original_mats, u, &mut c[..nk]);
                if senet {
                    let v = &t.reweighted[r * f * k..(r + 1) * f * k];
                    let u = (!t.u_reweighted.is_empty()).then(|| &mut t.u_reweighted[r * nk..(r + 1) * nk]);
                    interact_into(v, k, reweighted_mats, u, &mut c[nk..2 * nk]);
                }
            } else if l.deep {
                c.copy_from_slice(e);
            }

            let y = if l.deep {
                for (li, layer) in p.dnn.iter().enumerate() {
                    let units = layer.output();
                    let range = r * units..(r + 1) * units;
                    let (done, current) = t.dnn_act.split_at_mut(li);
                    let input: &[f64] = if li == 0 {
                        &t.combined[r * combined_width..(r + 1) * combined_width]
                    } else {
                        let u = p.dnn[li - 1].output();
                        &done[li - 1][r * u..(r + 1) * u]
                    };
                    let drop = if use_dropout {
                        let rng = dropout.as_deref_mut().expect("dropout rng present");
                        Some((rng, l.dropout, &mut t.dnn_mask[li][range.clone()]))
                    } else {
                        None
                    };
                    dense_relu_into(layer, input, &mut t.dnn_pre[li][range.clone()], &mut current[0][range], drop);
                }
                let last = p.dnn.len() - 1;
                let units = p.dnn[last].output();
                head_into(
                    p.head.as_ref().expect("deep model has a head"),
                    &t.dnn_act[last][r * units..(r + 1) * units],
                )
            } else if l.interactions {
                t.combined[r * combined_width..(r + 1) * combined_width].iter().sum()
            } else {
                0.0
            };

            let mut logit = p.bias + y;
            if l.use_linear {
                for (field, (&i, &x)) in idx.iter().zip(vals).enumerate() {
                    logit += p.linear[field][i as usize] * x;
                }
            }
            if !logit.is_finite() {
                return Err(Error::Numeric(format!("non-finite logit at batch row {r}")));
            }
            t.logits[r] = logit;
            t.probs[r] = sigmoid(logit);
        }
        Ok(t)
    }

    /// Gradients of the mean cross-entropy over the traced batch.
    #[allow(clippy::needless_range_loop)]
    pub fn backward(&self, trace: &ForwardTrace, labels: &[f64]) -> Result<GradientTape> {
        let l = &self.layout;
        let p = &self.params;
        let (f, k, n) = (l.fields, l.k, l.pairs);
        let rows = trace.rows;
        if labels.len() != rows {
            return Err(Error::State(format!(
                "trace holds {rows} rows but {} labels were given",
                labels.len()
            )));
        }
        let expected_width = if l.deep { l.dnn_input } else { l.combined_width };
        if trace.combined_width != expected_width || trace.embeddings.len() != rows * f * k {
            return Err(Error::State("trace was produced by a different model layout".into()));
        }

        let mut tape = GradientTape::zeros_like(p);
        let g = &mut tape.grads;
        let senet = l.reweighted_path;
        let nk = n * k;
        let width = trace.combined_width;
        let inv_n = 1.0 / rows.max(1) as f64;

        let mut dc = vec![0.0; width];
        let mut de = vec![0.0; f * k];
        let mut dv = vec![0.0; f * k];
        let max_units = l.hidden_units.iter().copied().max().unwrap_or(0);
        let mut da = vec![0.0; max_units.max(width)];
        let mut da_prev = vec![0.0; max_units.max(width)];

        for r in 0..rows {
            let dlogit = (trace.probs[r] - labels[r]) * inv_n;
            let idx = &trace.indices[r * f..(r + 1) * f];
            let vals = &trace.values[r * f..(r + 1) * f];

            g.bias += dlogit;
            if l.use_linear {
                for (field, (&i, &x)) in idx.iter().zip(vals).enumerate() {
                    g.linear[field][i as usize] += dlogit * x;
                }
            }

            // gradient wrt the combined vector / DNN input
            if l.deep {
                let head = p.head.as_ref().expect("deep model has a head");
                let gh = g.head.as_mut().expect("deep model has a head");
                let depth = p.dnn.len();
                let last_units = p.dnn[depth - 1].output();
                let last_act = &trace.dnn_act[depth - 1][r * last_units..(r + 1) * last_units];
                axpy(dlogit, last_act, gh.weight.as_mut_slice());
                gh.bias[0] += dlogit;
                da[..last_units].iter_mut().zip(head.weight.row(0)).for_each(|(d, &w)| *d = dlogit * w);

                for li in (0..depth).rev() {
                    let layer = &p.dnn[li];
                    let units = layer.output();
                    let range = r * units..(r + 1) * units;
                    let pre = &trace.dnn_pre[li][range.clone()];
                    let dpre = &mut da[..units];
                    if !trace.dnn_mask.is_empty() {
                        for (d, &m) in dpre.iter_mut().zip(&trace.dnn_mask[li][range]) {
                            *d *= m;
                        }
                    }
                    for (d, &z) in dpre.iter_mut().zip(pre) {
                        if z <= 0.0 {
                            *d = 0.0;
                        }
                    }
                    let input: &[f64] = if li == 0 {
                        &trace.combined[r * width..(r + 1) * width]
                    } else {
                        let u = p.dnn[li - 1].output();
                        &trace.dnn_act[li - 1][r * u..(r + 1) * u]
                    };
                    let gl = &mut g.dnn[li];
                    outer_acc(gl.weight.as_mut_slice(), dpre, input);
                    axpy(1.0, dpre, gl.bias.as_mut_slice());
                    let in_len = layer.input();
                    da_prev[..in_len].fill(0.0);
                    matvec_t_acc(layer.weight.as_slice(), in_len, dpre, &mut da_prev[..in_len]);
                    std::mem::swap(&mut da, &mut da_prev);
                }
                dc.copy_from_slice(&da[..width]);
            } else {
                dc.fill(dlogit);
            }

            let e = &trace.embeddings[r * f * k..(r + 1) * f * k];
            de.fill(0.0);
            if l.interactions {
                let u = (!trace.u_original.is_empty()).then(|| &trace.u_original[r * nk..(r + 1) * nk]);
                let bilinear = u.map(|u| (p.bilinear_original.as_slice(), u, g.bilinear_original.as_mut_slice()));
                interact_backward(e, k, l.field_type, &dc[..nk], bilinear, &mut de);

                if senet {
                    let v = &trace.reweighted[r * f * k..(r + 1) * f * k];
                    dv.fill(0.0);
                    let u = (!trace.u_reweighted.is_empty()).then(|| &trace.u_reweighted[r * nk..(r + 1) * nk]);
                    let grads = if g.bilinear_reweighted.is_empty() {
                        g.bilinear_original.as_mut_slice()
                    } else {
                        g.bilinear_reweighted.as_mut_slice()
                    };
                    let bilinear = u.map(|u| (p.reweighted_matrices(), u, grads));
                    interact_backward(v, k, l.field_type, &dc[nk..2 * nk], bilinear, &mut dv);

                    senet_backward(p, g, trace, r, f, k, l.senet_hidden, &dv, &mut de);
                }
            } else if l.deep {
                axpy(1.0, &dc, &mut de);
            }

            for (field, (&i, &x)) in idx.iter().zip(vals).enumerate() {
                if x != 0.0 {
                    axpy(x, &de[field * k..(field + 1) * k], g.embeddings[field].row_mut(i as usize));
                }
            }
        }
        Ok(tape)
    }
}

/// Backward through the pair interactions of one row. `bilinear` carries the
/// matrices, cached `Wᵀ·v_i` vectors and the matrix gradients; `None` means
/// Hadamard.
fn interact_backward(
    emb: &[f64],
    k: usize,
    field_type: FieldType,
    dout: &[f64],
    bilinear: Option<(&[DenseMatrix], &[f64], &mut [DenseMatrix])>,
    demb: &mut [f64],
) {
    let f = emb.len() / k;
    let mut du = vec![0.0; k];
    match bilinear {
        None => {
            for (m, (i, j)) in field_pairs(f).enumerate() {
                let dp = &dout[m * k..(m + 1) * k];
                for t in 0..k {
                    demb[i * k + t] += dp[t] * emb[j * k + t];
                    demb[j * k + t] += dp[t] * emb[i * k + t];
                }
            }
        }
        Some((mats, u_all, grads)) => {
            for (m, (i, j)) in field_pairs(f).enumerate() {
                let dp = &dout[m * k..(m + 1) * k];
                let u = &u_all[m * k..(m + 1) * k];
                let sel = field_type.select(i, m);
                let w = mats[sel].as_slice();
                for t in 0..k {
                    demb[j * k + t] += dp[t] * u[t];
                    du[t] = dp[t] * emb[j * k + t];
                }
                // W[s, t] += vi[s]·du[t];  dvi[s] += Σ_t W[s, t]·du[t]
                let vi = &emb[i * k..(i + 1) * k];
                outer_acc(grads[sel].as_mut_slice(), vi, &du);
                for s in 0..k {
                    demb[i * k + s] += dot(&w[s * k..(s + 1) * k], &du);
                }
            }
        }
    }
}

/// Backward through reweight, excitation and squeeze for row `r`; adds into
/// `de` and the SENET matrix gradients.
#[allow(clippy::too_many_arguments)]
fn senet_backward(
    p: &ModelParams,
    g: &mut ModelParams,
    trace: &ForwardTrace,
    r: usize,
    f: usize,
    k: usize,
    hs: usize,
    dv: &[f64],
    de: &mut [f64],
) {
    let e = &trace.embeddings[r * f * k..(r + 1) * f * k];
    let a = &trace.field_weights[r * f..(r + 1) * f];
    let a_pre = &trace.weights_pre[r * f..(r + 1) * f];
    let h_pre = &trace.hidden_pre[r * hs..(r + 1) * hs];
    let z = &trace.squeezed[r * f..(r + 1) * f];

    // v_i = a_i·e_i
    let mut da_pre = vec![0.0; f];
    for i in 0..f {
        let dvi = &dv[i * k..(i + 1) * k];
        axpy(a[i], dvi, &mut de[i * k..(i + 1) * k]);
        if a_pre[i] > 0.0 {
            da_pre[i] = dot(dvi, &e[i * k..(i + 1) * k]);
        }
    }

    // a_pre = expand·relu(h_pre)
    let hidden: Vec<f64> = h_pre.iter().map(|&x| x.max(0.0)).collect();
    outer_acc(g.senet_expand.as_mut_slice(), &da_pre, &hidden);
    let mut dh = vec![0.0; hs];
    matvec_t_acc(p.senet_expand.as_slice(), hs, &da_pre, &mut dh);
    for (d, &x) in dh.iter_mut().zip(h_pre) {
        if x <= 0.0 {
            *d = 0.0;
        }
    }

    // h_pre = reduce·z
    outer_acc(g.senet_reduce.as_mut_slice(), &dh, z);
    let mut dz = vec![0.0; f];
    matvec_t_acc(p.senet_reduce.as_slice(), f, &dh, &mut dz);

    // z_i = mean_t e_i[t]
    let inv_k = 1.0 / k as f64;
    for i in 0..f {
        for t in 0..k {
            de[i * k + t] += dz[i] * inv_k;
        }
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::data::Example;
    use crate::model::layers::{interact, reweight};
    use crate::model::{Ablation, CombinationCode, Mode};
    use crate::numeric::{DenseVector, Rng};

    const F: usize = 5;
    const BUCKETS: usize = 7;

    fn config(k: usize) -> ModelConfig {
        ModelConfig { embedding_dim: k, hidden_units: vec![6, 4], dropout: 0.0, ..ModelConfig::default() }
    }

    fn random_model(config: ModelConfig, seed: u64) -> FiBiNet {
        let schema = FieldSchema::categorical(F, BUCKETS).unwrap();
        let mut rng = Rng::new(seed);
        let mut m = FiBiNet::new(config, schema, &mut rng).unwrap();
        for block in m.params.slices_mut() {
            block.iter_mut().for_each(|x| *x = rng.uniform(-0.5, 0.5));
        }
        m
    }

    fn random_batch(rows: usize, seed: u64) -> ExampleBatch {
        let mut rng = Rng::new(seed);
        let ex: Vec<Example> = (0..rows)
            .map(|_| Example {
                label: rng.bernoulli(0.5) as u8,
                indices: (0..F).map(|_| rng.below(BUCKETS as u64) as u32).collect(),
                values: (0..F).map(|_| rng.uniform(0.2, 2.0)).collect(),
            })
            .collect();
        ExampleBatch::from_examples(F, &ex).unwrap()
    }

    fn sigmoid_oracle(x: f64) -> f64 {
        (1.0 / (1.0 + (-x).exp())).clamp(1e-15, 1.0 - 1e-15)
    }

    fn linear_part(m: &FiBiNet, b: &ExampleBatch, r: usize) -> f64 {
        let mut s = m.params.bias;
        for (field, (&i, &x)) in b.row_indices(r).iter().zip(b.row_values(r)).enumerate() {
            s += m.params.linear[field][i as usize] * x;
        }
        s
    }

    #[test]
    fn zero_params_predict_one_half() {
        let mut m = random_model(config(3), 1);
        m.params = m.params.zeros_like();
        assert!(m.predict(&random_batch(10, 2)).unwrap().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn fm_ablation_matches_textbook_fm() {
        let k = 4;
        let m = random_model(ModelConfig { ablation: Ablation::Fm, ..config(k) }, 3);
        let b = random_batch(100, 4);
        let probs = m.predict(&b).unwrap();
        for r in 0..b.len() {
            let (idx, x) = (b.row_indices(r), b.row_values(r));
            let mut logit = linear_part(&m, &b, r);
            for i in 0..F {
                for j in i + 1..F {
                    let vi = m.params.embeddings[i].row(idx[i] as usize);
                    let vj = m.params.embeddings[j].row(idx[j] as usize);
                    let inner: f64 = (0..k).map(|t| vi[t] * vj[t]).sum();
                    logit += inner * x[i] * x[j];
                }
            }
            assert!((sigmoid_oracle(logit) - probs[r]).abs() < 1e-10);
        }
    }

    #[test]
    fn fnn_ablation_is_embeddings_into_dnn() {
        let k = 3;
        let m = random_model(ModelConfig { ablation: Ablation::Fnn, ..config(k) }, 5);
        let l = m.layout();
        assert!(l.deep && !l.interactions && !l.reweighted_path);
        assert_eq!(l.dnn_input, F * k);
        assert_eq!(m.params.dnn[0].input(), F * k);

        let b = random_batch(50, 6);
        let probs = m.predict(&b).unwrap();
        for r in 0..b.len() {
            let (idx, x) = (b.row_indices(r), b.row_values(r));
            let mut a: Vec<f64> = (0..F)
                .flat_map(|i| m.params.embeddings[i].row(idx[i] as usize).iter().map(move |w| w * x[i]))
                .collect();
            for layer in &m.params.dnn {
                a = (0..layer.output())
                    .map(|o| {
                        let z: f64 = layer.bias[o] + (0..layer.input()).map(|c| layer.weight.get(o, c) * a[c]).sum::<f64>();
                        z.max(0.0)
                    })
                    .collect();
            }
            let head = m.params.head.as_ref().unwrap();
            let y: f64 = head.bias[0] + a.iter().enumerate().map(|(c, v)| head.weight.get(0, c) * v).sum::<f64>();
            let logit = linear_part(&m, &b, r) + y;
            assert!((sigmoid_oracle(logit) - probs[r]).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_bilinear_equals_hadamard() {
        for mode in [Mode::Shallow, Mode::Deep] {
            for field_type in [FieldType::All, FieldType::Each, FieldType::Interaction] {
                let cfg = ModelConfig { mode, field_type, ..config(3) };
                let mut bi = random_model(cfg.clone(), 7);
                for w in bi.params.bilinear_original.iter_mut().chain(&mut bi.params.bilinear_reweighted) {
                    *w = DenseMatrix::identity(3);
                }
                let had_cfg = ModelConfig { combination: CombinationCode::HADAMARD, ..cfg };
                let had = FiBiNet::with_params(had_cfg, bi.schema().clone(), bi.params.clone()).unwrap();
                let b = random_batch(40, 8);
                assert_eq!(bi.predict(&b).unwrap(), had.predict(&b).unwrap());
            }
        }
    }

    #[test]
    fn unit_excitation_makes_paths_agree() {
        let mut rng = Rng::new(9);
        let k = 3;
        let e = DenseMatrix::from_vec(F, k, (0..F * k).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let mats: Vec<DenseMatrix> = (0..crate::model::pair_count(F))
            .map(|_| DenseMatrix::from_vec(k, k, (0..k * k).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap())
            .collect();
        let v = reweight(&DenseVector::from_vec(vec![1.0; F]), &e).unwrap();
        assert_eq!(v, e);
        let p = interact(&e, Some((&mats, FieldType::Interaction))).unwrap();
        let q = interact(&v, Some((&mats, FieldType::Interaction))).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn predictions_are_permutation_equivariant() {
        let m = random_model(config(3), 10);
        let b = random_batch(30, 11);
        let mut order: Vec<usize> = (0..b.len()).collect();
        Rng::new(12).shuffle(&mut order);
        let p = m.predict(&b).unwrap();
        let q = m.predict(&b.gather(&order)).unwrap();
        for (slot, &r) in order.iter().enumerate() {
            assert_eq!(q[slot], p[r]);
        }
    }

    #[test]
    fn duplicated_batch_keeps_mean_gradient() {
        let m = random_model(config(3), 13);
        let b = random_batch(12, 14);
        let mut bb = b.clone();
        bb.extend(&b);
        let g1 = m.backward(&m.forward(&b, None).unwrap(), b.labels()).unwrap();
        let g2 = m.backward(&m.forward(&bb, None).unwrap(), bb.labels()).unwrap();
        for (x, y) in g1.grads.slices().iter().zip(g2.grads.slices()) {
            for (a, c) in x.iter().zip(y) {
                assert!((a - c).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {c}");
            }
        }
    }

    #[test]
    fn gradient_lands_on_looked_up_rows_only() {
        let m = random_model(config(3), 15);
        let b = random_batch(3, 16);
        let tape = m.backward(&m.forward(&b, None).unwrap(), b.labels()).unwrap();
        for field in 0..F {
            let used: Vec<usize> = (0..b.len()).map(|r| b.row_indices(r)[field] as usize).collect();
            for row in (0..BUCKETS).filter(|row| !used.contains(row)) {
                assert!(tape.grads.embeddings[field].row(row).iter().all(|&g| g == 0.0));
                assert_eq!(tape.grads.linear[field][row], 0.0);
            }
        }
    }

    #[test]
    fn exact_predictions_give_zero_head_gradient() {
        let m = random_model(config(3), 17);
        let b = random_batch(8, 18);
        let t = m.forward(&b, None).unwrap();
        let tape = m.backward(&t, &t.probs).unwrap();
        let head = tape.grads.head.unwrap();
        assert!(head.weight.as_slice().iter().chain(head.bias.as_slice()).all(|&g| g == 0.0));
        assert_eq!(tape.grads.bias, 0.0);
    }

    #[test]
    fn dropout_only_in_training() {
        let m = random_model(ModelConfig { dropout: 0.5, ..config(3) }, 19);
        let b = random_batch(20, 20);
        assert_eq!(m.predict(&b).unwrap(), m.predict(&b).unwrap());
        let train = m.forward(&b, Some(&mut Rng::new(1))).unwrap();
        assert_ne!(train.probs, m.predict(&b).unwrap());
        let again = m.forward(&b, Some(&mut Rng::new(1))).unwrap();
        assert_eq!(train.probs, again.probs);
    }

    #[test]
    fn deep_dnn_input_width() {
        let k = 4;
        let n = crate::model::pair_count(F);
        assert_eq!(random_model(config(k), 21).layout().dnn_input, 2 * n * k);
        let no_se = random_model(ModelConfig { ablation: Ablation::NoSe, ..config(k) }, 21);
        assert_eq!(no_se.layout().dnn_input, n * k);
    }

    #[test]
    fn backward_rejects_mismatched_labels() {
        let m = random_model(config(3), 22);
        let b = random_batch(4, 23);
        let t = m.forward(&b, None).unwrap();
        assert!(matches!(m.backward(&t, &[0.0; 3]), Err(Error::State(_))));
        let other = random_model(ModelConfig { ablation: Ablation::NoSe, ..config(3) }, 22);
        assert!(matches!(other.backward(&t, b.labels()), Err(Error::State(_))));
    }

    #[test]
    fn out_of_range_index_is_a_bounds_error() {
        let m = random_model(config(3), 24);
        let mut b = random_batch(2, 25);
        let mut e = b.example(1);
        e.indices[2] = BUCKETS as u32;
        b.push(&e).unwrap();
        assert!(matches!(m.predict(&b), Err(Error::Bounds { field: 2, .. })));
    }

    #[test]
    fn bilinear_parameter_counts_per_path() {
        for (fields, k) in [(2, 1), (5, 10), (39, 1), (39, 10)] {
            let schema = FieldSchema::categorical(fields, 2).unwrap();
            let n = crate::model::pair_count(fields);
            for (ft, expect) in [(FieldType::All, k * k), (FieldType::Each, fields * k * k), (FieldType::Interaction, n * k * k)] {
                let cfg = ModelConfig { field_type: ft, embedding_dim: k, hidden_units: vec![2], ..ModelConfig::default() };
                let layout = cfg.layout(fields).unwrap();
                let p = ModelParams::zeros(&layout, &schema);
                assert_eq!(p.bilinear_parameter_counts(), (expect, expect));
            }
        }
    }
}
