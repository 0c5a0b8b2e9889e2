//! TransE: relations as translations, `score = -||h + r - t||_p`.

use super::{sign, Norm};

#[derive(Debug, Clone, PartialEq)]
pub struct TripleGrad {
    pub head: Vec<f64>,
    pub relation: Vec<f64>,
    pub tail: Vec<f64>,
}

fn residual(h: &[f64], r: &[f64], t: &[f64]) -> Vec<f64> {
    h.iter().zip(r).zip(t).map(|((h, r), t)| h + r - t).collect()
}

pub fn score(h: &[f64], r: &[f64], t: &[f64], norm: Norm) -> f64 {
    let delta = residual(h, r, t);
    match norm {
        Norm::L1 => -delta.iter().map(|x| x.abs()).sum::<f64>(),
        Norm::L2 => -delta.iter().map(|x| x * x).sum::<f64>().sqrt(),
    }
}

/// With `delta = h + r - t`, `d score/d h = d score/d r = -d score/d t`,
/// which is `-delta/||delta||` under L2 and `-sign(delta)` under L1.
pub fn grad(h: &[f64], r: &[f64], t: &[f64], norm: Norm) -> TripleGrad {
    let delta = residual(h, r, t);
    let head: Vec<f64> = match norm {
        Norm::L1 => delta.iter().map(|&x| -sign(x)).collect(),
        Norm::L2 => {
            let len = delta.iter().map(|x| x * x).sum::<f64>().sqrt();
            if len == 0.0 {
                vec![0.0; delta.len()]
            } else {
                delta.iter().map(|x| -x / len).collect()
            }
        }
    };
    let tail = head.iter().map(|x| -x).collect();
    TripleGrad {
        relation: head.clone(),
        head,
        tail,
    }
}
