//! Encoder, message-passing processor with skip connections, and decoders.

use std::path::Path;
use std::sync::Arc;

use capillary_core::linear::velocity_from_flow;
use capillary_core::{BoundaryConditions, VascularGraph};
use capillary_nn::{Activation, Backend, Checkpoint, Eager, Index, Mlp, ParamStore, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{GnnConfig, Variant};
use crate::error::{GnnError, Result};
use crate::features::{build_features, GraphInputs, NODE_FEATURES};
use crate::transform::velocity_transform_inv;

/// Per-step networks: `Ψ_e` on edges, `Ψ_M` on aggregated messages, `Ψ_u` on nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepBlock {
    pub edge: Mlp,
    pub message: Mlp,
    pub update: Mlp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub node_encoder: Mlp,
    pub edge_encoder: Mlp,
    pub blocks: Vec<StepBlock>,
    pub node_decoder: Mlp,
    pub edge_decoder: Option<Mlp>,
}

/// Stored alongside the parameters in a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnArchitecture {
    pub config: GnnConfig,
    pub layout: Layout,
    #[serde(default)]
    pub training: serde_json::Value,
}

/// Raw decoder outputs: normalised pressure per node, transformed velocity
/// and hematocrit per physical edge.
#[derive(Debug, Clone)]
pub struct Outputs<V> {
    pub pressure: V,
    pub velocity: Option<V>,
    pub hematocrit: Option<V>,
}

/// Predictions in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub variant: Variant,
    /// mmHg.
    pub pressures: Vec<f64>,
    /// µm³/s, recovered through the inverse velocity transform.
    pub flows: Option<Vec<f64>>,
    /// Transformed velocities as decoded.
    pub transformed_velocities: Option<Vec<f64>>,
    /// µm/s.
    pub velocities: Option<Vec<f64>>,
    pub hematocrits: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    pub config: GnnConfig,
    pub store: ParamStore,
    pub layout: Layout,
}

fn mlp_dims(input: usize, hidden: usize, width: usize, output: usize) -> Vec<usize> {
    let mut dims = vec![input];
    dims.extend(std::iter::repeat(width).take(hidden));
    dims.push(output);
    dims
}

impl GnnModel {
    pub fn new(config: GnnConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let l = config.latent;
        let (gelu, id) = (Activation::Gelu, Activation::Identity);
        let codec = config.codec_hidden_layers;
        let node_encoder = Mlp::new(&mut store, "enc_v", &mlp_dims(NODE_FEATURES, codec, l, l), gelu, id, &mut rng)?;
        let edge_encoder = Mlp::new(
            &mut store,
            "enc_e",
            &mlp_dims(config.variant.edge_feature_dim(), codec, l, l),
            gelu,
            id,
            &mut rng,
        )?;
        let block_count = if config.share_step_weights { 1 } else { config.steps };
        let mut blocks = Vec::with_capacity(block_count);
        for j in 0..block_count {
            let hidden = config.message_hidden_layers;
            blocks.push(StepBlock {
                edge: Mlp::new(&mut store, &format!("step{j}.edge"), &mlp_dims(3 * l, hidden, l, l), gelu, id, &mut rng)?,
                message: Mlp::new(&mut store, &format!("step{j}.message"), &mlp_dims(3 * l, hidden, l, l), gelu, id, &mut rng)?,
                update: Mlp::new(
                    &mut store,
                    &format!("step{j}.update"),
                    &mlp_dims(2 * l, config.update_hidden_layers, l, l),
                    gelu,
                    id,
                    &mut rng,
                )?,
            });
        }
        let node_decoder = Mlp::new(&mut store, "dec_v", &mlp_dims(l, codec, l, 1), gelu, id, &mut rng)?;
        let edge_decoder = match config.variant.edge_output_dim() {
            0 => None,
            k => Some(Mlp::new(&mut store, "dec_e", &mlp_dims(l, codec, l, k), gelu, id, &mut rng)?),
        };
        Ok(Self {
            config,
            store,
            layout: Layout {
                node_encoder,
                edge_encoder,
                blocks,
                node_decoder,
                edge_decoder,
            },
        })
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn parameter_count(&self) -> usize {
        self.store.scalar_count()
    }

    fn block(&self, step: usize) -> &StepBlock {
        if self.config.share_step_weights {
            &self.layout.blocks[0]
        } else {
            &self.layout.blocks[step]
        }
    }

    /// One message-passing step `(v, e) → (F, H)`: edge update from
    /// `e ⊕ v_src ⊕ v_dst`, sum of `H ⊕ v_src ⊕ v_dst` over each node's
    /// incoming edges, then node update from `v ⊕ Ψ_M(sum)`.
    pub fn message_passing_step<B: Backend>(
        &self,
        b: &mut B,
        step: usize,
        inputs: &GraphInputs,
        v: &B::Value,
        e: &B::Value,
    ) -> Result<(B::Value, B::Value)> {
        let blk = self.block(step);
        let vs = b.gather(v, &inputs.senders)?;
        let vr = b.gather(v, &inputs.receivers)?;
        let edge_in = b.concat(&[e, &vs, &vr])?;
        let h = blk.edge.forward(b, &edge_in)?;
        let msg = b.concat(&[&h, &vs, &vr])?;
        let agg = b.scatter_add(&msg, &inputs.receivers, inputs.node_count)?;
        let m = blk.message.forward(b, &agg)?;
        let node_in = b.concat(&[v, &m])?;
        let f = blk.update.forward(b, &node_in)?;
        Ok((f, h))
    }

    /// Runs all steps from the encoded state. After step `j` with
    /// `j % k == 0` the state from step `j − k` is added. `observe` sees the
    /// state after every step.
    pub fn process<B: Backend>(
        &self,
        b: &mut B,
        inputs: &GraphInputs,
        v0: B::Value,
        e0: B::Value,
        mut observe: impl FnMut(usize, &B::Value, &B::Value),
    ) -> Result<(B::Value, B::Value)> {
        let k = self.config.skip;
        let (mut v, mut e) = (v0, e0);
        let (mut v_skip, mut e_skip) = (v.clone(), e.clone());
        for j in 1..=self.config.steps {
            let (nv, ne) = self.message_passing_step(b, j - 1, inputs, &v, &e)?;
            v = nv;
            e = ne;
            if j % k == 0 {
                v = b.add(&v, &v_skip)?;
                e = b.add(&e, &e_skip)?;
                v_skip = v.clone();
                e_skip = e.clone();
            }
            observe(j, &v, &e);
        }
        Ok((v, e))
    }

    pub fn encode<B: Backend>(&self, b: &mut B, inputs: &GraphInputs) -> Result<(B::Value, B::Value)> {
        let x_v = b.constant(inputs.node_features.clone());
        let x_e = b.constant(inputs.edge_features.clone());
        let v = self.layout.node_encoder.forward(b, &x_v)?;
        let e = self.layout.edge_encoder.forward(b, &x_e)?;
        Ok((v, e))
    }

    pub fn forward<B: Backend>(&self, b: &mut B, inputs: &GraphInputs) -> Result<Outputs<B::Value>> {
        let (v0, e0) = self.encode(b, inputs)?;
        let (v, e) = self.process(b, inputs, v0, e0, |_, _, _| {})?;
        let pressure = self.layout.node_decoder.forward(b, &v)?;
        let (velocity, hematocrit) = match &self.layout.edge_decoder {
            None => (None, None),
            Some(dec) => {
                let forward_rows: Index = Arc::from((0..inputs.edge_count).collect::<Vec<_>>());
                let e_fwd = b.gather(&e, &forward_rows)?;
                let out = dec.forward(b, &e_fwd)?;
                let vel = b.select_col(&out, 0)?;
                let hct = if self.variant().predicts_hematocrit() {
                    Some(b.select_col(&out, 1)?)
                } else {
                    None
                };
                (Some(vel), hct)
            }
        };
        Ok(Outputs {
            pressure,
            velocity,
            hematocrit,
        })
    }

    /// Eager inference on prepared inputs.
    pub fn infer(&self, inputs: &GraphInputs) -> Result<Outputs<Tensor>> {
        self.forward(&mut Eager::new(&self.store), inputs)
    }

    /// Prediction in physical units, checking that the checkpoint provides
    /// the outputs of `requested`.
    pub fn predict_as(&self, graph: &VascularGraph, bc: &BoundaryConditions, requested: Variant) -> Result<Prediction> {
        let v = self.variant();
        let provides = (!requested.predicts_velocity() || v.predicts_velocity())
            && (!requested.predicts_hematocrit() || v.predicts_hematocrit());
        if !provides || requested.rheology() != v.rheology() {
            return Err(GnnError::VariantMismatch {
                checkpoint: v,
                requested,
            });
        }
        self.predict(graph, bc)
    }

    pub fn predict(&self, graph: &VascularGraph, bc: &BoundaryConditions) -> Result<Prediction> {
        let inputs = build_features(graph, bc, self.variant(), self.config.scales);
        let out = self.infer(&inputs)?;
        let scale = self.config.scales.pressure;
        let pressures = out.pressure.data().iter().map(|p| p * scale).collect();
        let transformed = out.velocity.map(Tensor::into_data);
        let flows: Option<Vec<f64>> = transformed.as_ref().map(|v| {
            v.iter()
                .zip(graph.diameters())
                .map(|(&v, &d)| velocity_transform_inv(v, d, self.config.k_v))
                .collect()
        });
        let velocities = flows
            .as_ref()
            .map(|q| q.iter().zip(graph.diameters()).map(|(&q, &d)| velocity_from_flow(q, d)).collect());
        Ok(Prediction {
            variant: self.variant(),
            pressures,
            flows,
            transformed_velocities: transformed,
            velocities,
            hematocrits: out.hematocrit.map(Tensor::into_data),
        })
    }

    pub fn to_checkpoint(&self, training: serde_json::Value) -> Checkpoint<GnnArchitecture> {
        Checkpoint::new(
            GnnArchitecture {
                config: self.config.clone(),
                layout: self.layout.clone(),
                training,
            },
            &self.store,
        )
    }

    pub fn from_checkpoint(ck: &Checkpoint<GnnArchitecture>) -> Result<Self> {
        let config = ck.architecture.config.clone();
        config.validate()?;
        let store = ck.store()?;
        // Shapes must match a freshly built model of the same configuration.
        let reference = GnnModel::new(config.clone())?;
        if reference.layout != ck.architecture.layout || reference.store.len() != store.len() {
            return Err(GnnError::InvalidConfig("checkpoint layout does not match its configuration".into()));
        }
        for (a, b) in reference.store.params().iter().zip(store.params()) {
            if a.name != b.name || a.value.shape() != b.value.shape() {
                return Err(GnnError::InvalidConfig(format!("parameter `{}` has an unexpected shape", b.name)));
            }
        }
        Ok(Self {
            config,
            store,
            layout: ck.architecture.layout.clone(),
        })
    }

    pub fn save(&self, path: &Path, training: serde_json::Value) -> Result<()> {
        Ok(self.to_checkpoint(training).save(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}
