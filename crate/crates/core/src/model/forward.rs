use ndarray::{s, Array1, Array2, Axis, Zip};
use rand::Rng;

use super::logprob::LogProbMatrix;
use super::params::LayerParams;
use super::{ModelError, Parameters};
use crate::mc::{dropout_in_place, InjectionPlan};
use crate::vocab::{TokenSequence, PAD_ID};

/// Token embedding plus learned absolute position embedding, one row per
/// position.
pub fn embed(params: &Parameters, tokens: &TokenSequence) -> Result<Array2<f64>, ModelError> {
    let cfg = params.config();
    let n = tokens.len();
    if n == 0 {
        return Err(ModelError::EmptySequence);
    }
    if n > cfg.max_len {
        return Err(ModelError::SequenceTooLong {
            len: n,
            max_len: cfg.max_len,
        });
    }
    let mut x = Array2::zeros((n, cfg.d_model));
    for (i, (&id, mut row)) in tokens.ids().iter().zip(x.rows_mut()).enumerate() {
        if id as usize >= cfg.n_t {
            return Err(ModelError::InvalidToken {
                position: i,
                id,
                n_t: cfg.n_t,
            });
        }
        Zip::from(&mut row)
            .and(params.token_embedding.row(id as usize))
            .and(params.position_embedding.row(i))
            .for_each(|out, &t, &p| *out = t + p);
    }
    Ok(x)
}

/// Full forward pass to per-position log-probabilities.
///
/// With an injection plan of positive rate, inverted dropout is applied to
/// the embedding output and then to the output of every transformer layer
/// selected by the plan, in that order, each mask drawn row-major from
/// `rng`. Without a plan, or at rate 0, `rng` is never touched.
pub fn forward<R: Rng + ?Sized>(
    params: &Parameters,
    tokens: &TokenSequence,
    injection: Option<&InjectionPlan>,
    rng: &mut R,
) -> Result<LogProbMatrix, ModelError> {
    let n_layers = params.config().n_layers;
    let mut layer_dropout = vec![false; n_layers];
    let mut rate = 0.0;
    if let Some(plan) = injection {
        for layer in plan.layer_sites(n_layers)? {
            layer_dropout[layer] = true;
        }
        rate = plan.rate();
    }
    let n = tokens.len();
    let mut x = embed(params, tokens)?;
    if rate > 0.0 {
        dropout_in_place(&mut x, rate, rng);
    }
    for (layer, &drop) in params.layers.iter().zip(&layer_dropout) {
        transformer_block(params, layer, &mut x, n, None);
        if drop && rate > 0.0 {
            dropout_in_place(&mut x, rate, rng);
        }
    }
    Ok(output_head(params, &x))
}

/// Deterministic pass over `tokens` right-padded with PAD to `padded_len`,
/// with attention to the padding columns masked out. Returns the rows of the
/// real positions only; they match `forward` on the unpadded sequence.
pub fn forward_padded(
    params: &Parameters,
    tokens: &TokenSequence,
    padded_len: usize,
) -> Result<LogProbMatrix, ModelError> {
    let n = tokens.len();
    let padded_len = padded_len.max(n);
    let mut ids = tokens.ids().to_vec();
    ids.resize(padded_len, PAD_ID);
    let mut x = embed(params, &TokenSequence::from_ids(ids))?;
    for layer in &params.layers {
        transformer_block(params, layer, &mut x, n, None);
    }
    let full = output_head(params, &x).into_inner();
    Ok(LogProbMatrix::from_array(
        full.slice(s![..n, ..]).to_owned(),
    ))
}

/// Post-softmax attention matrix (`n_a × n_a`) of one head, computed on the
/// deterministic pass.
pub fn attention_weights_probe(
    params: &Parameters,
    tokens: &TokenSequence,
    layer: usize,
    head: usize,
) -> Result<Array2<f64>, ModelError> {
    let cfg = params.config();
    if layer >= cfg.n_layers {
        return Err(ModelError::InvalidLayer {
            layer,
            n_layers: cfg.n_layers,
        });
    }
    if head >= cfg.n_heads {
        return Err(ModelError::InvalidHead {
            head,
            n_heads: cfg.n_heads,
        });
    }
    let n = tokens.len();
    let mut x = embed(params, tokens)?;
    for lp in &params.layers[..layer] {
        transformer_block(params, lp, &mut x, n, None);
    }
    Ok(
        transformer_block(params, &params.layers[layer], &mut x, n, Some(head))
            .expect("probe requested"),
    )
}

/// `x += Attn(LN(x)); x += MLP(LN(x))`. Keys at positions `>= n_keys` are
/// masked. When `probe` is set, returns that head's attention weights
/// instead and leaves `x` untouched.
fn transformer_block(
    params: &Parameters,
    layer: &LayerParams,
    x: &mut Array2<f64>,
    n_keys: usize,
    probe: Option<usize>,
) -> Option<Array2<f64>> {
    let cfg = params.config();
    let n = x.nrows();
    let dh = cfg.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();

    let h = layer_norm(x, &layer.ln1_gain, &layer.ln1_bias, cfg.ln_eps);
    let q = h.dot(&layer.w_q);
    let k = h.dot(&layer.w_k);
    let v = h.dot(&layer.w_v);
    let mut context = Array2::zeros((n, cfg.d_model));
    for head in 0..cfg.n_heads {
        let cols = s![.., head * dh..(head + 1) * dh];
        let mut weights = q.slice(cols).dot(&k.slice(cols).t());
        weights *= scale;
        if n_keys < n {
            weights.slice_mut(s![.., n_keys..]).fill(f64::NEG_INFINITY);
        }
        softmax_rows(&mut weights);
        if probe == Some(head) {
            return Some(weights);
        }
        context.slice_mut(cols).assign(&weights.dot(&v.slice(cols)));
    }
    if probe.is_some() {
        return None;
    }
    *x += &context.dot(&layer.w_o);

    let h = layer_norm(x, &layer.ln2_gain, &layer.ln2_bias, cfg.ln_eps);
    let mut hidden = h.dot(&layer.fc1_weight);
    hidden += &layer.fc1_bias;
    hidden.mapv_inplace(gelu);
    let mut out = hidden.dot(&layer.fc2_weight);
    out += &layer.fc2_bias;
    *x += &out;
    None
}

fn output_head(params: &Parameters, x: &Array2<f64>) -> LogProbMatrix {
    let h = layer_norm(
        x,
        &params.final_ln_gain,
        &params.final_ln_bias,
        params.config().ln_eps,
    );
    let mut logits = h.dot(&params.head_weight);
    logits += &params.head_bias;
    log_softmax_rows(&mut logits);
    LogProbMatrix::from_array(logits)
}

fn layer_norm(x: &Array2<f64>, gain: &Array1<f64>, bias: &Array1<f64>, eps: f64) -> Array2<f64> {
    let d = x.ncols() as f64;
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let mean = row.sum() / d;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / d;
        let inv = 1.0 / (var + eps).sqrt();
        Zip::from(&mut row)
            .and(gain)
            .and(bias)
            .for_each(|v, &g, &b| *v = (*v - mean) * inv * g + b);
    }
    out
}

/// Tanh approximation of GELU.
fn gelu(v: f64) -> f64 {
    const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
    0.5 * v * (1.0 + (SQRT_2_OVER_PI * (v + 0.044_715 * v * v * v)).tanh())
}

fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

fn log_softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_random, ModelConfig};
    use crate::vocab::encode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> ModelConfig {
        ModelConfig {
            n_layers: 2,
            d_model: 16,
            n_heads: 4,
            d_ff: 32,
            n_t: 27,
            max_len: 24,
            ln_eps: 1e-5,
        }
    }

    fn params() -> Parameters {
        init_random(&tiny(), 7).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn embed_single_token() {
        let p = params();
        let x = embed(&p, &vec![9].into()).unwrap();
        let expected = &p.token_embedding.row(9) + &p.position_embedding.row(0);
        assert_eq!(x.row(0), expected);
    }

    #[test]
    fn embed_all_pad() {
        let p = params();
        let x = embed(&p, &vec![PAD_ID; 5].into()).unwrap();
        for i in 0..5 {
            let expected = &p.token_embedding.row(0) + &p.position_embedding.row(i);
            assert_eq!(x.row(i), expected);
        }
    }

    #[test]
    fn embed_bounds() {
        let p = params();
        assert!(matches!(
            embed(&p, &vec![5; 25].into()),
            Err(ModelError::SequenceTooLong {
                len: 25,
                max_len: 24
            })
        ));
        assert!(matches!(
            embed(&p, &vec![5, 27].into()),
            Err(ModelError::InvalidToken {
                position: 1,
                id: 27,
                ..
            })
        ));
        assert!(matches!(
            embed(&p, &vec![].into()),
            Err(ModelError::EmptySequence)
        ));
    }

    #[test]
    fn forward_shape_and_determinism() {
        let p = params();
        let toks = encode("MKTAYIAKQR").unwrap();
        let a = forward(&p, &toks, None, &mut rng()).unwrap();
        let b = forward(&p, &toks, None, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        assert_eq!(a.values().dim(), (10, 27));
        assert_eq!(a, b);
        for lse in a.row_logsumexp() {
            assert!(lse.abs() <= 1e-6);
        }
        assert!(a.values().iter().all(|&v| v <= 1e-6));
    }

    #[test]
    fn zero_rate_plan_matches_no_plan() {
        let p = params();
        let toks = encode("MKTAYIAKQR").unwrap();
        let plain = forward(&p, &toks, None, &mut rng()).unwrap();
        let plan = InjectionPlan::new(0.0, 1.0).unwrap();
        let zero = forward(&p, &toks, Some(&plan), &mut rng()).unwrap();
        assert_eq!(plain, zero);
    }

    #[test]
    fn dropout_changes_output_and_is_seeded() {
        let p = params();
        let toks = encode("MKTAYIAKQR").unwrap();
        let plan = InjectionPlan::new(0.3, 0.5).unwrap();
        let plain = forward(&p, &toks, None, &mut rng()).unwrap();
        let a = forward(&p, &toks, Some(&plan), &mut rng()).unwrap();
        let b = forward(&p, &toks, Some(&plan), &mut rng()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, plain);
    }

    #[test]
    fn bad_injection_site() {
        let p = params();
        let plan = InjectionPlan::with_layers(0.1, vec![2]).unwrap();
        assert!(matches!(
            forward(&p, &encode("MK").unwrap(), Some(&plan), &mut rng()),
            Err(ModelError::InvalidInjectionSite {
                layer: 2,
                n_layers: 2
            })
        ));
    }

    #[test]
    fn padding_is_masked() {
        let p = params();
        let toks = encode("MKTAYIAKQR").unwrap();
        let plain = forward(&p, &toks, None, &mut rng()).unwrap();
        let padded = forward_padded(&p, &toks, 20).unwrap();
        assert_eq!(padded.values().dim(), plain.values().dim());
        for (a, b) in plain.values().iter().zip(padded.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn attention_rows_are_distributions() {
        let p = params();
        let toks = encode("MKTAYIAKQRQ").unwrap();
        for layer in 0..2 {
            for head in 0..4 {
                let a = attention_weights_probe(&p, &toks, layer, head).unwrap();
                assert_eq!(a.dim(), (11, 11));
                for row in a.rows() {
                    assert!((row.sum() - 1.0).abs() <= 1e-6);
                }
            }
        }
        let single = attention_weights_probe(&p, &vec![5].into(), 0, 0).unwrap();
        assert_eq!(single, ndarray::array![[1.0]]);
        assert!(matches!(
            attention_weights_probe(&p, &toks, 2, 0),
            Err(ModelError::InvalidLayer { .. })
        ));
        assert!(matches!(
            attention_weights_probe(&p, &toks, 0, 4),
            Err(ModelError::InvalidHead { .. })
        ));
    }

    #[test]
    fn gelu_reference_points() {
        assert_eq!(gelu(0.0), 0.0);
        // tanh-GELU(1) = 0.5 * (1 + tanh(sqrt(2/pi) * 1.044715))
        assert!((gelu(1.0) - 0.841_191_990_608_276_7).abs() < 1e-12);
        assert!(gelu(-10.0).abs() < 1e-12);
    }
}
