use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CrossEntropy {
    /// Mean over frames of `-log p(label)`.
    pub loss: f64,
    pub posteriors: Vec<Vec<f64>>,
    /// Gradient of `loss` with respect to the logits: `(p - onehot) / T`.
    pub dlogits: Vec<Vec<f64>>,
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Sum over frames of `-log softmax(logits)[label]` and the matching
/// unnormalized gradient `p - onehot`.
pub(crate) fn cross_entropy_sum(logits: &[Vec<f64>], labels: &[usize]) -> Result<(f64, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if logits.len() != labels.len() {
        return Err(Error::shape("cross entropy labels", logits.len(), labels.len()));
    }
    if logits.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut total = 0.0;
    let mut post = Vec::with_capacity(logits.len());
    let mut grad = Vec::with_capacity(logits.len());
    for (z, &y) in logits.iter().zip(labels) {
        if y >= z.len() {
            return Err(Error::LabelOutOfRange {
                label: y,
                classes: z.len(),
            });
        }
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - z[y];
        let p = softmax(z);
        let mut g = p.clone();
        g[y] -= 1.0;
        post.push(p);
        grad.push(g);
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("cross entropy"));
    }
    Ok((total, post, grad))
}

pub fn softmax_cross_entropy(logits: &[Vec<f64>], labels: &[usize]) -> Result<CrossEntropy> {
    let (total, posteriors, mut dlogits) = cross_entropy_sum(logits, labels)?;
    let t = labels.len() as f64;
    for g in dlogits.iter_mut().flatten() {
        *g /= t;
    }
    Ok(CrossEntropy {
        loss: total / t,
        posteriors,
        dlogits,
    })
}
