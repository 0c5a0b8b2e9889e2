//! TransR: entities projected into a relation-specific space,
//! `score = -||M_r h + r - M_r t||_2`. Entity and relation spaces share the
//! dimension; `M_r` is stored row-major.

#[derive(Debug, Clone, PartialEq)]
pub struct TripleGrad {
    pub head: Vec<f64>,
    pub relation: Vec<f64>,
    pub projection: Vec<f64>,
    pub tail: Vec<f64>,
}

fn residual(h: &[f64], r: &[f64], m: &[f64], t: &[f64]) -> Vec<f64> {
    let d = h.len();
    (0..d)
        .map(|i| {
            let row = &m[i * d..(i + 1) * d];
            let proj: f64 = row.iter().zip(h.iter().zip(t)).map(|(m, (h, t))| m * (h - t)).sum();
            proj + r[i]
        })
        .collect()
}

pub fn score(h: &[f64], r: &[f64], m: &[f64], t: &[f64]) -> f64 {
    -residual(h, r, m, t).iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// With `delta = M(h - t) + r` and `u = delta/||delta||`:
/// `d/dh = -M^T u`, `d/dt = M^T u`, `d/dr = -u`, `d/dM = -u (h - t)^T`.
pub fn grad(h: &[f64], r: &[f64], m: &[f64], t: &[f64]) -> TripleGrad {
    let d = h.len();
    let delta = residual(h, r, m, t);
    let len = delta.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u: Vec<f64> = if len == 0.0 {
        vec![0.0; d]
    } else {
        delta.iter().map(|x| x / len).collect()
    };
    let mut head = vec![0.0; d];
    for i in 0..d {
        for (j, out) in head.iter_mut().enumerate() {
            *out -= m[i * d + j] * u[i];
        }
    }
    let tail = head.iter().map(|x| -x).collect();
    let relation = u.iter().map(|x| -x).collect();
    let mut projection = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            projection[i * d + j] = -u[i] * (h[j] - t[j]);
        }
    }
    TripleGrad {
        head,
        relation,
        projection,
        tail,
    }
}
