//! CTC forward recursion in log space.

use crate::platform::acoustic::{Posteriors, BLANK};

/// Allowed drift of a row sum from 1.
const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CtcError {
    #[error("label sequence is empty")]
    EmptyLabels,
    #[error("label {0} is the blank symbol")]
    BlankLabel(usize),
    #[error("label {label} outside a {symbols}-symbol alphabet")]
    LabelOutOfRange { label: usize, symbols: usize },
    #[error("posterior row {frame} is not a distribution (sum {sum})")]
    NotStochastic { frame: usize, sum: f64 },
    #[error("posteriors need at least a blank and one symbol")]
    TooFewSymbols,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtcScore {
    /// `-log p(labels | posteriors) / |labels|`; `+inf` when no alignment
    /// exists.
    pub loss: f64,
    /// Set when there are fewer frames than the labels need.
    pub infeasible: bool,
}

/// Frames needed to emit `labels`: one per label plus a blank between each
/// pair of equal neighbours.
pub fn min_frames(labels: &[usize]) -> usize {
    labels.len() + labels.windows(2).filter(|w| w[0] == w[1]).count()
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn validate(posteriors: &Posteriors, labels: &[usize]) -> Result<(), CtcError> {
    let symbols = posteriors.symbols();
    if symbols < 2 {
        return Err(CtcError::TooFewSymbols);
    }
    if labels.is_empty() {
        return Err(CtcError::EmptyLabels);
    }
    for &l in labels {
        if l == BLANK {
            return Err(CtcError::BlankLabel(l));
        }
        if l >= symbols {
            return Err(CtcError::LabelOutOfRange { label: l, symbols });
        }
    }
    for t in 0..posteriors.frames() {
        let row = posteriors.row(t);
        let sum: f64 = row.iter().sum();
        if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(CtcError::NotStochastic { frame: t, sum });
        }
    }
    Ok(())
}

/// Per-label negative log likelihood of `labels` summed over all CTC
/// alignments.
pub fn ctc_log_loss(posteriors: &Posteriors, labels: &[usize]) -> Result<CtcScore, CtcError> {
    validate(posteriors, labels)?;
    let frames = posteriors.frames();
    if frames < min_frames(labels) {
        return Ok(CtcScore {
            loss: f64::INFINITY,
            infeasible: true,
        });
    }

    // Blank-interleaved labels: b l1 b l2 ... lL b.
    let ext: Vec<usize> = std::iter::once(BLANK)
        .chain(labels.iter().flat_map(|&l| [l, BLANK]))
        .collect();
    let s_len = ext.len();
    let lp = |t: usize, s: usize| posteriors.row(t)[ext[s]].ln();

    let mut alpha = vec![f64::NEG_INFINITY; s_len];
    alpha[0] = lp(0, 0);
    alpha[1] = lp(0, 1);
    let mut next = vec![f64::NEG_INFINITY; s_len];
    for t in 1..frames {
        for s in 0..s_len {
            let mut acc = alpha[s];
            if s >= 1 {
                acc = log_add(acc, alpha[s - 1]);
            }
            if s >= 2 && ext[s] != BLANK && ext[s] != ext[s - 2] {
                acc = log_add(acc, alpha[s - 2]);
            }
            next[s] = if acc == f64::NEG_INFINITY {
                acc
            } else {
                acc + lp(t, s)
            };
        }
        std::mem::swap(&mut alpha, &mut next);
    }
    let log_p = log_add(alpha[s_len - 1], alpha[s_len - 2]);
    Ok(CtcScore {
        loss: if log_p == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            -log_p / labels.len() as f64
        },
        infeasible: false,
    })
}
