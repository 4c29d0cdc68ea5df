//! Central finite-difference check of tape gradients.

use crate::error::Result;
use crate::params::ParamStore;
use crate::tape::{Tape, Var};

/// Outcome of [`gradient_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    /// Scalars compared.
    pub checked: usize,
    /// Largest error, relative where `|grad| ≥ threshold` and absolute below.
    pub worst: f64,
    /// `(parameter name, flat index)` of the worst entry.
    pub worst_at: Option<(String, usize)>,
}

/// Compares the tape gradient of `tape_loss` against central differences of
/// `value` for every scalar of `store`.
pub fn gradient_check(
    store: &ParamStore,
    step: f64,
    threshold: f64,
    tape_loss: impl for<'a> Fn(&mut Tape<'a>) -> Result<Var>,
    value: impl Fn(&ParamStore) -> Result<f64>,
) -> Result<GradCheck> {
    let mut tape = Tape::new(store);
    let loss = tape_loss(&mut tape)?;
    let grads = tape.backward(loss)?;
    let mut probe = store.clone();
    let mut report = GradCheck {
        checked: 0,
        worst: 0.0,
        worst_at: None,
    };
    for id in store.ids() {
        let analytic = grads.dense(store, id);
        for (k, &a) in analytic.data().iter().enumerate() {
            let x0 = store.get(id).data()[k];
            probe.get_mut(id).data_mut()[k] = x0 + step;
            let up = value(&probe)?;
            probe.get_mut(id).data_mut()[k] = x0 - step;
            let down = value(&probe)?;
            probe.get_mut(id).data_mut()[k] = x0;
            let fd = (up - down) / (2.0 * step);
            let err = if a.abs() < threshold {
                (a - fd).abs()
            } else {
                (a - fd).abs() / a.abs()
            };
            report.checked += 1;
            if err > report.worst || report.worst_at.is_none() {
                report.worst = err.max(report.worst);
                report.worst_at = Some((store.name(id).to_string(), k));
            }
        }
    }
    Ok(report)
}
