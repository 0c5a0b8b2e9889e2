//! BoxE: entities are points, each relation owns a head box and a tail box.
//!
//! An entity's final point is its base point translated by the bump of the
//! other entity in the triple: `p_h = e_h + b_t`, `p_t = e_t + b_h`. Boxes are
//! parameterized by a center and a raw half-width passed through softplus.
//! Per dimension, with `w = 2·hw` and `w⁺ = w + 1`:
//!
//! * inside the box: `|p - c| / w⁺`
//! * outside: `|p - c|·w⁺ - κ`, with `κ = ½(w⁺ - 1)(w⁺ - 1/w⁺)`
//!
//! The two branches agree on the box boundary, so the distance is continuous.
//! `score = -(||dist(p_h, head box)||₂ + ||dist(p_t, tail box)||₂)`.

use super::sign;

/// A relation box, borrowed from the parameter tables.
#[derive(Debug, Clone, Copy)]
pub struct RelationBox<'a> {
    pub center: &'a [f64],
    pub width_raw: &'a [f64],
}

/// Derived per-dimension box geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimGeometry {
    pub center: f64,
    pub half_width: f64,
    /// `w + 1`.
    pub widened: f64,
    pub kappa: f64,
}

impl DimGeometry {
    pub fn new(center: f64, width_raw: f64) -> Self {
        let half_width = softplus(width_raw);
        let widened = 2.0 * half_width + 1.0;
        Self {
            center,
            half_width,
            widened,
            kappa: kappa(widened),
        }
    }

    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn contains(&self, p: f64) -> bool {
        (p - self.center).abs() <= self.half_width
    }

    pub fn inside_distance(&self, p: f64) -> f64 {
        (p - self.center).abs() / self.widened
    }

    pub fn outside_distance(&self, p: f64) -> f64 {
        (p - self.center).abs() * self.widened - self.kappa
    }

    pub fn distance(&self, p: f64) -> f64 {
        if self.contains(p) {
            self.inside_distance(p)
        } else {
            self.outside_distance(p)
        }
    }
}

fn kappa(widened: f64) -> f64 {
    0.5 * (widened - 1.0) * (widened - 1.0 / widened)
}

fn kappa_derivative(widened: f64) -> f64 {
    0.5 * ((widened - 1.0 / widened) + (widened - 1.0) * (1.0 + 1.0 / (widened * widened)))
}

pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-dimension distances of `point` to `b`.
pub fn box_distance(point: &[f64], b: &RelationBox<'_>) -> Vec<f64> {
    point
        .iter()
        .zip(b.center.iter().zip(b.width_raw))
        .map(|(&p, (&c, &s))| DimGeometry::new(c, s).distance(p))
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn translate(e: &[f64], bump: &[f64]) -> Vec<f64> {
    e.iter().zip(bump).map(|(a, b)| a + b).collect()
}

pub fn score(
    e_head: &[f64],
    bump_head: &[f64],
    e_tail: &[f64],
    bump_tail: &[f64],
    head_box: &RelationBox<'_>,
    tail_box: &RelationBox<'_>,
) -> f64 {
    let p_head = translate(e_head, bump_tail);
    let p_tail = translate(e_tail, bump_head);
    -(norm(&box_distance(&p_head, head_box)) + norm(&box_distance(&p_tail, tail_box)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxGrad {
    /// w.r.t. `e_h`.
    pub head_point: Vec<f64>,
    /// w.r.t. `b_t` (equal to `head_point`).
    pub head_point_bump: Vec<f64>,
    /// w.r.t. `e_t`.
    pub tail_point: Vec<f64>,
    /// w.r.t. `b_h` (equal to `tail_point`).
    pub tail_point_bump: Vec<f64>,
    pub head_center: Vec<f64>,
    pub head_width_raw: Vec<f64>,
    pub tail_center: Vec<f64>,
    pub tail_width_raw: Vec<f64>,
}

/// Gradients of `||dist(p, b)||₂` w.r.t. the point, center and raw width.
fn distance_norm_grad(point: &[f64], b: &RelationBox<'_>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let d = point.len();
    let geo: Vec<DimGeometry> = (0..d).map(|i| DimGeometry::new(b.center[i], b.width_raw[i])).collect();
    let dist: Vec<f64> = (0..d).map(|i| geo[i].distance(point[i])).collect();
    let total = norm(&dist);
    let (mut gp, mut gc, mut gs) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    if total == 0.0 {
        return (gp, gc, gs);
    }
    for i in 0..d {
        let g = &geo[i];
        let offset = point[i] - g.center;
        let outer = dist[i] / total;
        let (d_offset, d_widened) = if g.contains(point[i]) {
            (sign(offset) / g.widened, -offset.abs() / (g.widened * g.widened))
        } else {
            (sign(offset) * g.widened, offset.abs() - kappa_derivative(g.widened))
        };
        gp[i] = outer * d_offset;
        gc[i] = -outer * d_offset;
        gs[i] = outer * d_widened * 2.0 * sigmoid(b.width_raw[i]);
    }
    (gp, gc, gs)
}

pub fn grad(
    e_head: &[f64],
    bump_head: &[f64],
    e_tail: &[f64],
    bump_tail: &[f64],
    head_box: &RelationBox<'_>,
    tail_box: &RelationBox<'_>,
) -> BoxGrad {
    let neg = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|x| -x).collect() };
    let p_head = translate(e_head, bump_tail);
    let p_tail = translate(e_tail, bump_head);
    let (hp, hc, hs) = distance_norm_grad(&p_head, head_box);
    let (tp, tc, ts) = distance_norm_grad(&p_tail, tail_box);
    let head_point = neg(hp);
    let tail_point = neg(tp);
    BoxGrad {
        head_point_bump: head_point.clone(),
        head_point,
        tail_point_bump: tail_point.clone(),
        tail_point,
        head_center: neg(hc),
        head_width_raw: neg(hs),
        tail_center: neg(tc),
        tail_width_raw: neg(ts),
    }
}
