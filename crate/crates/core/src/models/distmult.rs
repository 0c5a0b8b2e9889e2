//! DistMult: diagonal bilinear form, `score = sum_i h_i r_i t_i`.

#[derive(Debug, Clone, PartialEq)]
pub struct TripleGrad {
    pub head: Vec<f64>,
    pub relation: Vec<f64>,
    pub tail: Vec<f64>,
}

pub fn score(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    h.iter().zip(r).zip(t).map(|((h, r), t)| h * r * t).sum()
}

pub fn grad(h: &[f64], r: &[f64], t: &[f64]) -> TripleGrad {
    TripleGrad {
        head: r.iter().zip(t).map(|(r, t)| r * t).collect(),
        relation: h.iter().zip(t).map(|(h, t)| h * t).collect(),
        tail: h.iter().zip(r).map(|(h, r)| h * r).collect(),
    }
}
