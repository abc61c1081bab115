//! Shannon entropy and Kullback-Leibler divergence over categorical count
//! maps, base 2 throughout.

use std::collections::BTreeMap;
use std::fmt::Debug;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InfoError {
    /// Some key has positive mass in `p` but zero in `q` and no smoothing
    /// was requested, so the divergence is infinite.
    #[error("support violation: {0} has mass in p but not q")]
    SupportViolation(String),
}

/// Entropy in bits of the distribution induced by `counts`. Keys with zero
/// count contribute nothing; an empty map has zero entropy.
pub fn shannon_entropy<K: Ord>(counts: &BTreeMap<K, u64>) -> f64 {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    -counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            p * p.log2()
        })
        .sum::<f64>()
}

/// KL(p ‖ q) in bits.
///
/// With `epsilon == 0` the support of `p` must be contained in the support
/// of `q`. A positive `epsilon` is added to every key of the union support
/// in both distributions before normalizing, which keeps the divergence
/// finite when `q` is missing mass.
pub fn kl_divergence<K: Ord + Clone + Debug>(
    p: &BTreeMap<K, u64>,
    q: &BTreeMap<K, u64>,
    epsilon: f64,
) -> Result<f64, InfoError> {
    debug_assert!(epsilon >= 0.0);
    let p_total: u64 = p.values().sum();
    let q_total: u64 = q.values().sum();
    if p_total == 0 {
        return Ok(0.0);
    }

    if epsilon == 0.0 {
        let q_total = q_total as f64;
        let p_total = p_total as f64;
        let mut sum = 0.0;
        for (k, &pc) in p {
            if pc == 0 {
                continue;
            }
            let qc = q.get(k).copied().unwrap_or(0);
            if qc == 0 {
                return Err(InfoError::SupportViolation(format!("{k:?}")));
            }
            let pi = pc as f64 / p_total;
            let qi = qc as f64 / q_total;
            sum += pi * (pi / qi).log2();
        }
        return Ok(sum.max(0.0));
    }

    let support: Vec<&K> = {
        let mut keys: Vec<&K> = p.keys().chain(q.keys()).collect();
        keys.sort();
        keys.dedup();
        keys
    };
    let k = support.len() as f64;
    let p_norm = p_total as f64 + epsilon * k;
    let q_norm = q_total as f64 + epsilon * k;
    let mut sum = 0.0;
    for key in support {
        let pi = (p.get(key).copied().unwrap_or(0) as f64 + epsilon) / p_norm;
        let qi = (q.get(key).copied().unwrap_or(0) as f64 + epsilon) / q_norm;
        sum += pi * (pi / qi).log2();
    }
    Ok(sum.max(0.0))
}
