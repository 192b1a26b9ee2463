//! Shared helpers for the integration tests: random states and independent
//! reference computations that do not go through the library's tracer.
#![allow(dead_code)]

use rand::Rng;
use ttlab_core::{PointTangent, SpaceForm, Vector};

pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; one of the pair is enough here.
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random::<f64>();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Uniformly random point of the geodesic ball of radius `rho` about the origin.
pub fn random_point<R: Rng>(sf: &SpaceForm, rho: f64, rng: &mut R) -> Vector {
    let m = sf.dim();
    let dir: Vec<f64> = loop {
        let g: Vec<f64> = (0..m).map(|_| gaussian(rng)).collect();
        let n = g.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-6 {
            break g.iter().map(|c| c / n).collect();
        }
    };
    let r = rho * rng.random::<f64>().powf(1.0 / m as f64);
    sf.from_normal_coords(&dir.iter().map(|c| c * r).collect::<Vec<_>>())
}

pub fn random_unit<R: Rng>(sf: &SpaceForm, x: &Vector, rng: &mut R) -> Vector {
    let basis = sf.tangent_basis(x);
    loop {
        let w = basis.iter().fold(Vector::zeros(x.len()), |acc, b| acc + b * gaussian(rng));
        let n = sf.norm(&w);
        if n > 1e-6 {
            return w / n;
        }
    }
}

/// Random unit vector at `x` orthogonal to the unit vector `n`.
pub fn random_unit_perp<R: Rng>(sf: &SpaceForm, x: &Vector, n: &Vector, rng: &mut R) -> Vector {
    loop {
        let w = random_unit(sf, x, rng);
        let p = &w - n * sf.inner(&w, n);
        let q = sf.norm(&p);
        if q > 1e-3 {
            return p / q;
        }
    }
}

pub fn random_state<R: Rng>(sf: &SpaceForm, rho: f64, rng: &mut R) -> PointTangent {
    let x = random_point(sf, rho, rng);
    let v = random_unit(sf, &x, rng);
    PointTangent::new(x, v)
}

/// Random symmetric matrix with eigenvalues in `[lo, hi]`.
pub fn random_symmetric<R: Rng>(n: usize, lo: f64, hi: f64, rng: &mut R) -> nalgebra::DMatrix<f64> {
    let g = nalgebra::DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let q = g.qr().q();
    let d = nalgebra::DVector::from_fn(n, |_, _| lo + (hi - lo) * rng.random::<f64>());
    let s = &q * nalgebra::DMatrix::from_diagonal(&d) * q.transpose();
    (&s + s.transpose()) * 0.5
}

/// Next event of the exact planar tracer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactEvent {
    /// `None` for the exit through the outer circle.
    pub obstacle: Option<usize>,
    pub t: f64,
    pub x: [f64; 2],
    /// Direction after the event.
    pub v: [f64; 2],
}

/// One flight among disks inside the disk of radius `big` about the origin, by
/// explicit line-circle intersection, ignoring disk `last`. Times are relative.
pub fn exact_planar_step(disks: &[([f64; 2], f64)], big: f64, x: [f64; 2], v: [f64; 2], last: Option<usize>) -> ExactEvent {
    let mut best: Option<(usize, f64)> = None;
    for (i, (c, r)) in disks.iter().enumerate() {
        if Some(i) == last {
            continue;
        }
        let d = [x[0] - c[0], x[1] - c[1]];
        let b = v[0] * d[0] + v[1] * d[1];
        let cc = d[0] * d[0] + d[1] * d[1] - r * r;
        let disc = b * b - cc;
        if b >= 0.0 || disc <= 0.0 {
            continue;
        }
        // Smaller root, in the cancellation-free form cc / (-b + sqrt(disc)).
        let t = cc / (-b + disc.sqrt());
        if t > 0.0 && best.is_none_or(|(_, tb)| t < tb) {
            best = Some((i, t));
        }
    }
    let b = v[0] * x[0] + v[1] * x[1];
    let cc = x[0] * x[0] + x[1] * x[1] - big * big;
    let disc = (b * b - cc).max(0.0);
    let t_exit = if b > 0.0 { -cc / (b + disc.sqrt()) } else { -b + disc.sqrt() };
    match best {
        Some((i, t)) if t < t_exit => {
            let y = [x[0] + t * v[0], x[1] + t * v[1]];
            let (c, r) = disks[i];
            let n = [(y[0] - c[0]) / r, (y[1] - c[1]) / r];
            let vn = v[0] * n[0] + v[1] * n[1];
            ExactEvent { obstacle: Some(i), t, x: y, v: [v[0] - 2.0 * vn * n[0], v[1] - 2.0 * vn * n[1]] }
        }
        _ => ExactEvent { obstacle: None, t: t_exit, x: [x[0] + t_exit * v[0], x[1] + t_exit * v[1]], v },
    }
}

/// Whole trajectory of the exact tracer, with cumulative times: reflections
/// followed by the exit, or only reflections if `n_max` is reached first.
pub fn exact_planar_trace(disks: &[([f64; 2], f64)], big: f64, x0: [f64; 2], v0: [f64; 2], n_max: usize) -> Vec<ExactEvent> {
    let (mut x, mut v, mut last, mut now) = (x0, v0, None, 0.0);
    let mut out = Vec::new();
    loop {
        let mut e = exact_planar_step(disks, big, x, v, last);
        if e.obstacle.is_some() && out.len() >= n_max {
            return out;
        }
        now += e.t;
        e.t = now;
        out.push(e);
        if e.obstacle.is_none() {
            return out;
        }
        (x, v, last) = (e.x, e.v, e.obstacle);
    }
}
