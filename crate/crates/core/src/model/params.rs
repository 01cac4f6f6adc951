use std::collections::HashMap;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{ModelConfig, ModelError};

const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LayerParams {
    pub(crate) ln1_gain: Array1<f64>,
    pub(crate) ln1_bias: Array1<f64>,
    pub(crate) w_q: Array2<f64>,
    pub(crate) w_k: Array2<f64>,
    pub(crate) w_v: Array2<f64>,
    pub(crate) w_o: Array2<f64>,
    pub(crate) ln2_gain: Array1<f64>,
    pub(crate) ln2_bias: Array1<f64>,
    pub(crate) fc1_weight: Array2<f64>,
    pub(crate) fc1_bias: Array1<f64>,
    pub(crate) fc2_weight: Array2<f64>,
    pub(crate) fc2_bias: Array1<f64>,
}

/// All weights of one model. Matrices act on row vectors (`x · W`).
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    config: ModelConfig,
    pub(crate) token_embedding: Array2<f64>,
    pub(crate) position_embedding: Array2<f64>,
    pub(crate) layers: Vec<LayerParams>,
    pub(crate) final_ln_gain: Array1<f64>,
    pub(crate) final_ln_bias: Array1<f64>,
    pub(crate) head_weight: Array2<f64>,
    pub(crate) head_bias: Array1<f64>,
}

/// Borrowed view of one named tensor, in canonical order.
#[derive(Debug, Clone)]
pub struct TensorView<'a> {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: &'a [f64],
}

/// Names and shapes of every tensor for `cfg`, in canonical (file and
/// initialization) order.
pub fn tensor_layout(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let (d, f) = (cfg.d_model, cfg.d_ff);
    let mut out = vec![
        ("embed.token".to_string(), vec![cfg.n_t, d]),
        ("embed.position".to_string(), vec![cfg.max_len, d]),
    ];
    for i in 0..cfg.n_layers {
        let p = |s: &str| format!("layers.{i}.{s}");
        out.extend([
            (p("ln1.gain"), vec![d]),
            (p("ln1.bias"), vec![d]),
            (p("attn.q"), vec![d, d]),
            (p("attn.k"), vec![d, d]),
            (p("attn.v"), vec![d, d]),
            (p("attn.o"), vec![d, d]),
            (p("ln2.gain"), vec![d]),
            (p("ln2.bias"), vec![d]),
            (p("mlp.fc1.weight"), vec![d, f]),
            (p("mlp.fc1.bias"), vec![f]),
            (p("mlp.fc2.weight"), vec![f, d]),
            (p("mlp.fc2.bias"), vec![d]),
        ]);
    }
    out.extend([
        ("final_ln.gain".to_string(), vec![d]),
        ("final_ln.bias".to_string(), vec![d]),
        ("head.weight".to_string(), vec![d, cfg.n_t]),
        ("head.bias".to_string(), vec![cfg.n_t]),
    ]);
    out
}

/// Deterministic random initialization.
///
/// Tensors are filled in `tensor_layout` order from one ChaCha8 stream
/// seeded with `seed`: gains are 1, biases 0, everything else
/// N(0, 0.02²) in row-major order.
pub fn init_random(config: &ModelConfig, seed: u64) -> Result<Parameters, ModelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    let mut named = HashMap::new();
    for (name, dims) in tensor_layout(config) {
        let len = dims.iter().product();
        let data: Vec<f64> = if name.ends_with(".gain") {
            vec![1.0; len]
        } else if name.ends_with(".bias") {
            vec![0.0; len]
        } else {
            (0..len).map(|_| normal.sample(&mut rng)).collect()
        };
        named.insert(name, (dims, data));
    }
    Parameters::from_named(config.clone(), named)
}

impl Parameters {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Assembles parameters from named tensors, checking that every tensor
    /// in the layout is present with the right shape and finite values.
    pub fn from_named(
        config: ModelConfig,
        named: HashMap<String, (Vec<usize>, Vec<f64>)>,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = tensor_layout(&config);
        if named.len() != layout.len() {
            let extra = named
                .keys()
                .find(|k| !layout.iter().any(|(n, _)| n == *k))
                .cloned();
            if let Some(name) = extra {
                return Err(ModelError::ShapeMismatch(format!(
                    "unexpected tensor {name}"
                )));
            }
        }
        for (name, dims) in &layout {
            match named.get(name) {
                None => return Err(ModelError::ShapeMismatch(format!("missing tensor {name}"))),
                Some((got, data)) => {
                    if got != dims || data.len() != dims.iter().product::<usize>() {
                        return Err(ModelError::ShapeMismatch(format!(
                            "{name}: expected {dims:?}, found {got:?}"
                        )));
                    }
                    if data.iter().any(|v| !v.is_finite()) {
                        return Err(ModelError::NonFinite(name.clone()));
                    }
                }
            }
        }

        let mut store = TensorStore(named);
        let token_embedding = store.matrix("embed.token");
        let position_embedding = store.matrix("embed.position");
        let layers = (0..config.n_layers)
            .map(|i| {
                let p = |s: &str| format!("layers.{i}.{s}");
                LayerParams {
                    ln1_gain: store.vector(&p("ln1.gain")),
                    ln1_bias: store.vector(&p("ln1.bias")),
                    w_q: store.matrix(&p("attn.q")),
                    w_k: store.matrix(&p("attn.k")),
                    w_v: store.matrix(&p("attn.v")),
                    w_o: store.matrix(&p("attn.o")),
                    ln2_gain: store.vector(&p("ln2.gain")),
                    ln2_bias: store.vector(&p("ln2.bias")),
                    fc1_weight: store.matrix(&p("mlp.fc1.weight")),
                    fc1_bias: store.vector(&p("mlp.fc1.bias")),
                    fc2_weight: store.matrix(&p("mlp.fc2.weight")),
                    fc2_bias: store.vector(&p("mlp.fc2.bias")),
                }
            })
            .collect();
        Ok(Parameters {
            token_embedding,
            position_embedding,
            layers,
            final_ln_gain: store.vector("final_ln.gain"),
            final_ln_bias: store.vector("final_ln.bias"),
            head_weight: store.matrix("head.weight"),
            head_bias: store.vector("head.bias"),
            config,
        })
    }

    /// Every tensor with its canonical name, in `tensor_layout` order.
    pub fn tensors(&self) -> Vec<TensorView<'_>> {
        let mut slices: Vec<&[f64]> = vec![
            slice(&self.token_embedding),
            slice(&self.position_embedding),
        ];
        for l in &self.layers {
            slices.extend([
                slice(&l.ln1_gain),
                slice(&l.ln1_bias),
                slice(&l.w_q),
                slice(&l.w_k),
                slice(&l.w_v),
                slice(&l.w_o),
                slice(&l.ln2_gain),
                slice(&l.ln2_bias),
                slice(&l.fc1_weight),
                slice(&l.fc1_bias),
                slice(&l.fc2_weight),
                slice(&l.fc2_bias),
            ]);
        }
        slices.extend([
            slice(&self.final_ln_gain),
            slice(&self.final_ln_bias),
            slice(&self.head_weight),
            slice(&self.head_bias),
        ]);
        tensor_layout(&self.config)
            .into_iter()
            .zip(slices)
            .map(|((name, dims), data)| TensorView { name, dims, data })
            .collect()
    }
}

fn slice<D: ndarray::Dimension>(a: &ndarray::Array<f64, D>) -> &[f64] {
    a.as_slice()
        .expect("parameters are stored in standard layout")
}

struct TensorStore(HashMap<String, (Vec<usize>, Vec<f64>)>);

impl TensorStore {
    fn take(&mut self, name: &str) -> (Vec<usize>, Vec<f64>) {
        self.0
            .remove(name)
            .expect("presence checked against layout")
    }

    fn vector(&mut self, name: &str) -> Array1<f64> {
        Array1::from_vec(self.take(name).1)
    }

    fn matrix(&mut self, name: &str) -> Array2<f64> {
        let (dims, data) = self.take(name);
        Array2::from_shape_vec((dims[0], dims[1]), data).expect("shape checked against layout")
    }
}
