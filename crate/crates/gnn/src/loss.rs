//! Supervised and physics-informed losses of the four variants.
//!
//! All terms are per-graph means in model units. Physics residuals are
//! divided by `C_P` (constitutive, mmHg) and `C_M` (mass, µm³/s) before
//! squaring.

use capillary_core::nonlinear::{pries_viscosity, pries_viscosity_dh};
use capillary_nn::{Backend, Tensor};
use serde::{Deserialize, Serialize};

use crate::config::Variant;
use crate::error::{GnnError, Result};
use crate::features::{PhysicsContext, Sample, Targets};
use crate::model::Outputs;
use crate::transform::{velocity_transform_inv, velocity_transform_inv_derivative};

pub const C_P: f64 = 35.0;
pub const C_M: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub delta: f64,
    pub gamma_d: f64,
    pub gamma_p: f64,
    pub gamma_d1: f64,
    pub gamma_d2: f64,
    pub gamma_p1: f64,
    pub gamma_p2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            delta: 1.0,
            gamma_d: 1.0,
            gamma_p: 1.0,
            gamma_d1: 1.0,
            gamma_d2: 1.0,
            gamma_p1: 1.0,
            gamma_p2: 1.0,
        }
    }
}

impl LossWeights {
    /// Published hyperparameters per variant.
    pub fn for_variant(variant: Variant) -> Self {
        match variant {
            Variant::Model1 => Self::default(),
            Variant::Model2 => Self {
                gamma_d: 0.5,
                ..Self::default()
            },
            Variant::Model3 => Self {
                delta: 0.5,
                gamma_d: 0.9,
                gamma_p: 0.5,
                ..Self::default()
            },
            Variant::Model4 => Self {
                delta: 0.5,
                gamma_d1: 0.75,
                gamma_d2: 0.75,
                gamma_p1: 0.75,
                gamma_p2: 0.75,
                ..Self::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = [("delta", self.delta), ("gamma_d", self.gamma_d), ("gamma_p", self.gamma_p)];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(GnnError::InvalidConfig(format!("{name} = {v} outside [0, 1]")));
            }
        }
        let signed = [
            ("gamma_d1", self.gamma_d1),
            ("gamma_d2", self.gamma_d2),
            ("gamma_p1", self.gamma_p1),
            ("gamma_p2", self.gamma_p2),
        ];
        for (name, v) in signed {
            if !(-1.0..=1.0).contains(&v) {
                return Err(GnnError::InvalidConfig(format!("{name} = {v} outside [-1, 1]")));
            }
        }
        if self.gamma_d1 + self.gamma_d2 < 0.0 || self.gamma_p1 + self.gamma_p2 < 0.0 {
            return Err(GnnError::InvalidConfig("paired gamma weights must have a nonnegative sum".into()));
        }
        Ok(())
    }
}

/// Values of the individual terms; absent terms are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub total: f64,
    pub pressure: f64,
    pub velocity: Option<f64>,
    pub hematocrit: Option<f64>,
    pub constitutive: Option<f64>,
    pub mass: Option<f64>,
    pub mass_hematocrit: Option<f64>,
}

fn mse<B: Backend>(b: &mut B, pred: &B::Value, target: &Tensor) -> Result<B::Value> {
    let t = b.constant(target.clone());
    let r = b.sub(pred, &t)?;
    let s = b.sum_squares(&r)?;
    Ok(b.scale(&s, 1.0 / target.rows().max(1) as f64)?)
}

/// Flow rates `T_v⁻¹(v)` per physical edge.
pub fn recover_flows<B: Backend>(b: &mut B, velocity: &B::Value, ctx: &PhysicsContext, k_v: f64) -> Result<B::Value> {
    let d = &ctx.diameters;
    Ok(b.map(velocity, &|i, v| {
        (velocity_transform_inv(v, d[i], k_v), velocity_transform_inv_derivative(v, d[i], k_v))
    })?)
}

/// Edge resistances `R(H)` under the Pries law, with `H` clamped to
/// `[0, max_hematocrit]` and zero slope outside.
pub fn hematocrit_resistance<B: Backend>(b: &mut B, hematocrit: &B::Value, ctx: &PhysicsContext) -> Result<B::Value> {
    let (d, g, mu_p, h_max) = (&ctx.diameters, &ctx.geometric_resistance, ctx.plasma_viscosity, ctx.max_hematocrit);
    Ok(b.map(hematocrit, &|i, h| {
        let hc = h.clamp(0.0, h_max);
        let mu = pries_viscosity(d[i], hc, mu_p).unwrap_or(f64::NAN);
        let slope = if h > 0.0 && h < h_max {
            pries_viscosity_dh(d[i], h, mu_p).unwrap_or(f64::NAN)
        } else {
            0.0
        };
        (g[i] * mu, g[i] * slope)
    })?)
}

/// `(1/m)‖(C P − R Q)/C_P‖²` with `P` in model units (`P / pressure_scale`).
pub fn constitutive_residual<B: Backend>(
    b: &mut B,
    pressure: &B::Value,
    flows: &B::Value,
    resistance: &B::Value,
    ctx: &PhysicsContext,
    pressure_scale: f64,
) -> Result<B::Value> {
    let ps = b.gather(pressure, &ctx.sources)?;
    let pt = b.gather(pressure, &ctx.targets)?;
    let dp = b.sub(&ps, &pt)?;
    let dp = b.scale(&dp, pressure_scale / C_P)?;
    let rq = b.mul(resistance, flows)?;
    let rq = b.scale(&rq, 1.0 / C_P)?;
    let r = b.sub(&dp, &rq)?;
    let s = b.sum_squares(&r)?;
    Ok(b.scale(&s, 1.0 / ctx.edge_count().max(1) as f64)?)
}

/// `(1/n)‖(I − B_in − B_out) Cᵀ x / C_M‖²`.
pub fn mass_residual<B: Backend>(b: &mut B, x: &B::Value, ctx: &PhysicsContext) -> Result<B::Value> {
    let n = ctx.node_count;
    let out = b.scatter_add(x, &ctx.sources, n)?;
    let inflow = b.scatter_add(x, &ctx.targets, n)?;
    let net = b.sub(&out, &inflow)?;
    let interior = b.gather(&net, &ctx.interior)?;
    let s = b.sum_squares(&interior)?;
    Ok(b.scale(&s, 1.0 / (C_M * C_M * n.max(1) as f64))?)
}

fn weighted_sum<B: Backend>(b: &mut B, terms: &[(f64, &B::Value)]) -> Result<B::Value> {
    let mut acc: Option<B::Value> = None;
    for &(w, t) in terms {
        let s = b.scale(t, w)?;
        acc = Some(match acc {
            None => s,
            Some(a) => b.add(&a, &s)?,
        });
    }
    acc.ok_or_else(|| GnnError::InvalidConfig("empty loss".into()))
}

fn item<B: Backend>(b: &B, v: &B::Value) -> f64 {
    b.value(v).item()
}

/// Loss of `variant` for one graph; returns the differentiable total and
/// the value of every term.
pub fn variant_loss<B: Backend>(
    b: &mut B,
    variant: Variant,
    weights: &LossWeights,
    outputs: &Outputs<B::Value>,
    sample: &Sample,
    k_v: f64,
    pressure_scale: f64,
) -> Result<(B::Value, LossTerms)> {
    let targets: &Targets = sample.targets.as_ref().ok_or(GnnError::MissingTarget("solution"))?;
    let ctx = &sample.physics;
    let l_p = mse(b, &outputs.pressure, &targets.pressure)?;
    let mut terms = LossTerms {
        pressure: item(b, &l_p),
        ..LossTerms::default()
    };
    let velocity_terms = |b: &mut B| -> Result<(B::Value, B::Value)> {
        let v = outputs.velocity.as_ref().ok_or(GnnError::MissingTarget("velocity output"))?;
        let vt = targets.velocity.as_ref().ok_or(GnnError::MissingTarget("velocity"))?;
        Ok((v.clone(), mse(b, v, vt)?))
    };

    let total = match variant {
        Variant::Model1 => l_p,
        Variant::Model2 | Variant::Model3 => {
            let (v, l_v) = velocity_terms(b)?;
            terms.velocity = Some(item(b, &l_v));
            let data = weighted_sum(b, &[(weights.gamma_d, &l_p), (1.0 - weights.gamma_d, &l_v)])?;
            if variant == Variant::Model2 {
                data
            } else {
                let q = recover_flows(b, &v, ctx, k_v)?;
                let r = b.constant(Tensor::column(ctx.linear_resistance.clone()));
                let l_c = constitutive_residual(b, &outputs.pressure, &q, &r, ctx, pressure_scale)?;
                let l_m = mass_residual(b, &q, ctx)?;
                terms.constitutive = Some(item(b, &l_c));
                terms.mass = Some(item(b, &l_m));
                let physics = weighted_sum(b, &[(weights.gamma_p, &l_c), (1.0 - weights.gamma_p, &l_m)])?;
                weighted_sum(b, &[(weights.delta, &data), (1.0 - weights.delta, &physics)])?
            }
        }
        Variant::Model4 => {
            let (v, l_v) = velocity_terms(b)?;
            let h = outputs.hematocrit.as_ref().ok_or(GnnError::MissingTarget("hematocrit output"))?;
            let ht = targets.hematocrit.as_ref().ok_or(GnnError::MissingTarget("hematocrit"))?;
            let l_h = mse(b, h, ht)?;
            terms.velocity = Some(item(b, &l_v));
            terms.hematocrit = Some(item(b, &l_h));
            let w = weights;
            let data = weighted_sum(
                b,
                &[
                    ((w.gamma_d1 + w.gamma_d2) / 2.0, &l_p),
                    ((1.0 - w.gamma_d1) / 2.0, &l_v),
                    ((1.0 - w.gamma_d2) / 2.0, &l_h),
                ],
            )?;
            let q = recover_flows(b, &v, ctx, k_v)?;
            let r = hematocrit_resistance(b, h, ctx)?;
            let l_c = constitutive_residual(b, &outputs.pressure, &q, &r, ctx, pressure_scale)?;
            let l_m1 = mass_residual(b, &q, ctx)?;
            let hq = b.mul(h, &q)?;
            let l_m2 = mass_residual(b, &hq, ctx)?;
            terms.constitutive = Some(item(b, &l_c));
            terms.mass = Some(item(b, &l_m1));
            terms.mass_hematocrit = Some(item(b, &l_m2));
            let physics = weighted_sum(
                b,
                &[
                    ((w.gamma_p1 + w.gamma_p2) / 2.0, &l_c),
                    ((1.0 - w.gamma_p1) / 2.0, &l_m1),
                    ((1.0 - w.gamma_p2) / 2.0, &l_m2),
                ],
            )?;
            weighted_sum(b, &[(w.delta, &data), (1.0 - w.delta, &physics)])?
        }
    };
    terms.total = item(b, &total);
    Ok((total, terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
}

/// `‖pred − truth‖ / ‖truth‖ × 100`.
pub fn relative_error(pred: &[f64], truth: &[f64], norm: Norm) -> f64 {
    let (num, den) = match norm {
        Norm::L1 => (
            pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>(),
            truth.iter().map(|t| t.abs()).sum::<f64>(),
        ),
        Norm::L2 => (
            pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>().sqrt(),
            truth.iter().map(|t| t * t).sum::<f64>().sqrt(),
        ),
    };
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        100.0 * num / den
    }
}
