//! Central finite-difference check of the analytic gradients.

use rand_chacha::ChaCha8Rng;

use super::backprop::{accumulate_example, batch_loss, LossWeights};
use super::example::LabeledExample;
use crate::error::Result;
use crate::model::AttributeExtractor;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// Max over parameter tensors of `‖g_analytic - g_numeric‖ / max(‖g_analytic‖, ‖g_numeric‖)`.
    pub max_relative_error: f64,
    pub worst_tensor: String,
    /// Largest elementwise absolute difference.
    pub max_abs_error: f64,
    pub entries_checked: usize,
    /// Analytic gradients, tensor by tensor, in `ModelParams::tensors` order.
    pub analytic: Vec<Vec<f64>>,
    pub numeric: Vec<Vec<f64>>,
}

/// Analytic gradient of the batch objective (no dropout, no word masking).
pub fn analytic_gradients(
    model: &AttributeExtractor<f64>,
    examples: &[LabeledExample],
    lambda: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut grads = model.params.zeros_like();
    let pairs = examples.iter().map(|e| e.targets.len()).sum();
    let weights = LossWeights::for_batch(lambda, examples.len(), pairs);
    for ex in examples {
        accumulate_example(
            model,
            ex,
            ex.source.clone(),
            weights,
            None::<(f64, &mut ChaCha8Rng)>,
            &mut grads,
            true,
        )?;
    }
    Ok(grads.tensors().iter().map(|t| t.data().to_vec()).collect())
}

/// Compares analytic gradients against central differences with step `h`
/// over every entry of every parameter tensor.
pub fn gradient_check(
    model: &AttributeExtractor<f64>,
    examples: &[LabeledExample],
    lambda: f64,
    h: f64,
) -> Result<GradCheckReport> {
    let analytic = analytic_gradients(model, examples, lambda)?;
    let names = model.params.names();
    let mut probe = model.clone();
    let mut numeric = Vec::with_capacity(analytic.len());
    for (t, grad) in analytic.iter().enumerate() {
        let len = grad.len();
        let mut col = Vec::with_capacity(len);
        for k in 0..len {
            let orig = probe.params.tensors()[t].data()[k];
            probe.params.tensors_mut()[t].data_mut()[k] = orig + h;
            let up = batch_loss(&probe, examples, lambda)?;
            probe.params.tensors_mut()[t].data_mut()[k] = orig - h;
            let down = batch_loss(&probe, examples, lambda)?;
            probe.params.tensors_mut()[t].data_mut()[k] = orig;
            col.push((up - down) / (2.0 * h));
        }
        numeric.push(col);
    }

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_tensor: String::new(),
        max_abs_error: 0.0,
        entries_checked: 0,
        analytic,
        numeric,
    };
    for (t, name) in names.iter().enumerate() {
        let a = &report.analytic[t];
        let n = &report.numeric[t];
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = a.iter().zip(n).map(|(x, y)| x - y).collect();
        let scale = norm(a).max(norm(n));
        let rel = if scale > 0.0 { norm(&diff) / scale } else { 0.0 };
        if rel > report.max_relative_error || report.worst_tensor.is_empty() {
            report.max_relative_error = rel.max(report.max_relative_error);
            report.worst_tensor = name.clone();
        }
        for d in diff {
            report.max_abs_error = report.max_abs_error.max(d.abs());
        }
        report.entries_checked += a.len();
    }
    Ok(report)
}
