//! Test-side oracles and generators, written without the library's own
//! root finder or eigen-solver.

#![allow(dead_code)]

use dampcert_core::certify::{lgbc_check, StaticNetwork, DEFAULT_MARGIN_TOL};
use dampcert_core::devices::{DeviceModel, GflParams, GfmParams};
use dampcert_core::domain::{BoundarySamples, ProhibitedDomain};
use dampcert_core::netmodel::{GridTopology, LineParams, Role};
use dampcert_core::Complex64;
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::Rng;

/// Polynomial coefficients, ascending powers.
pub type Coeffs = Vec<f64>;

pub fn poly_mul(a: &[f64], b: &[f64]) -> Coeffs {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_add(a: &[f64], b: &[f64]) -> Coeffs {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

fn horner(c: &[f64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &k| acc * z + k)
}

/// Durand-Kerner simultaneous iteration followed by Newton polishing.
/// Exact zero roots are split off first.
pub fn dk_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.len() > 1 && c[c.len() - 1] == 0.0 {
        c.pop();
    }
    let mut roots = Vec::new();
    let zeros = c.iter().take_while(|&&x| x == 0.0).count();
    roots.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), zeros));
    let c: Vec<f64> = c[zeros..].to_vec();
    let n = c.len() - 1;
    if n == 0 {
        return roots;
    }
    let lead = c[n];
    let monic: Vec<f64> = c.iter().map(|x| x / lead).collect();
    let radius = 1.0 + monic[..n].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let seed = Complex64::from_polar(radius.min(10.0).max(0.5), 0.4);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64)).collect();
    for _ in 0..5000 {
        let mut moved = 0.0_f64;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    den *= z[i] - z[j];
                }
            }
            if den.norm() == 0.0 {
                den = Complex64::new(1e-300, 0.0);
            }
            let step = horner(&monic, z[i]) / den;
            z[i] -= step;
            moved = moved.max(step.norm() / z[i].norm().max(1.0));
        }
        if moved < 1e-15 {
            break;
        }
    }
    let deriv: Vec<f64> = (1..=n).map(|k| k as f64 * monic[k]).collect();
    for r in &mut z {
        for _ in 0..3 {
            let d = horner(&deriv, *r);
            if d.norm() == 0.0 {
                break;
            }
            let next = *r - horner(&monic, *r) / d;
            if horner(&monic, next).norm() < horner(&monic, *r).norm() {
                *r = next;
            } else {
                break;
            }
        }
    }
    roots.extend(z);
    roots
}

/// `det(diag(den_i) + diag(num_i) N)` by permutation expansion (n <= 4).
pub fn determinant_polynomial(models: &[DeviceModel], n_static: &DMatrix<f64>) -> Coeffs {
    let n = models.len();
    let entries: Vec<_> = models.iter().map(|m| m.entry().unwrap()).collect();
    let cell = |i: usize, j: usize| -> Coeffs {
        let num = entries[i].d_entry().num().coeffs();
        let mut c: Coeffs = num.iter().map(|x| x * n_static[(i, j)]).collect();
        if i == j {
            c = poly_add(&c, entries[i].d_entry().den().coeffs());
        }
        c
    };
    let mut total = vec![0.0];
    let mut perm: Vec<usize> = (0..n).collect();
    permutations(&mut perm, 0, &mut |p| {
        let sign = permutation_sign(p);
        let mut term = vec![sign];
        for (i, &j) in p.iter().enumerate() {
            term = poly_mul(&term, &cell(i, j));
        }
        total = poly_add(&total, &term);
    });
    total
}

fn permutations(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, f);
        p.swap(k, i);
    }
}

fn permutation_sign(p: &[usize]) -> f64 {
    let mut inversions = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Greedy nearest matching; returns the worst matched distance, or infinity
/// when the multisets differ in size.
pub fn match_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm() / x.norm().max(1.0)))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

/// Log-uniform draw in `[lo, hi]`.
pub fn log_uniform(rng: &mut StdRng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

pub fn random_gfm(rng: &mut StdRng) -> DeviceModel {
    DeviceModel::Gfm(GfmParams { m: log_uniform(rng, 0.1, 20.0), d: log_uniform(rng, 0.1, 20.0) })
}

pub fn random_gfl(rng: &mut StdRng) -> DeviceModel {
    DeviceModel::Gfl(GflParams::new(
        log_uniform(rng, 0.1, 20.0),
        log_uniform(rng, 0.1, 20.0),
        log_uniform(rng, 0.1, 20.0),
        log_uniform(rng, 0.1, 20.0),
    ))
}

/// Connected random topology: a random spanning tree over devices and up to
/// two interior buses, plus a few chords. Line susceptances in `[0.2, 3]`.
pub fn random_topology(rng: &mut StdRng, n_devices: usize) -> GridTopology {
    let n_gfm = rng.random_range(1..n_devices);
    let n_interior = rng.random_range(0..=2usize);
    let mut names: Vec<String> = Vec::new();
    let mut b = GridTopology::builder(1.0);
    for i in 0..n_devices {
        let role = if i < n_gfm { Role::Gfm } else { Role::Gfl };
        names.push(format!("dev{i}"));
        b = b.device(format!("dev{i}"), role);
    }
    for k in 0..n_interior {
        names.push(format!("bus{k}"));
        b = b.interior(format!("bus{k}"));
    }
    let total = names.len();
    let line = |rng: &mut StdRng| LineParams::new(1.0 / rng.random_range(0.2..3.0), 0.0);
    for k in 1..total {
        let parent = rng.random_range(0..k);
        let p = line(rng);
        b = b.line(names[parent].clone(), names[k].clone(), p);
    }
    for _ in 0..rng.random_range(0..=n_devices / 2) {
        let (x, y) = (rng.random_range(0..total), rng.random_range(0..total));
        if x != y {
            let p = line(rng);
            b = b.line(names[x].clone(), names[y].clone(), p);
        }
    }
    b.build().expect("generated topology is valid")
}

/// Draws each device's parameters independently until its own boundary
/// certificate passes; `None` if some device never passes.
pub fn accepted_models(
    rng: &mut StdRng,
    topology: &GridTopology,
    net: &StaticNetwork,
    domain: &ProhibitedDomain,
    samples: &BoundarySamples,
    tries: usize,
) -> Option<Vec<DeviceModel>> {
    let mut out = Vec::new();
    for (i, role) in topology.device_roles().into_iter().enumerate() {
        let mut found = None;
        for _ in 0..tries {
            let model = match role {
                Role::Gfm => random_gfm(rng),
                Role::Gfl => random_gfl(rng),
            };
            let entry = model.entry().unwrap();
            if let Ok(r) = lgbc_check(&entry, i, net, domain, samples, DEFAULT_MARGIN_TOL) {
                if r.passed {
                    found = Some(model);
                    break;
                }
            }
        }
        out.push(found?);
    }
    Some(out)
}
