//! Reference computations that do not go through the library's own
//! machinery: explicit permutation sums, Kronecker products, product
//! Simpson integration on the sphere and a plain Gaussian sampler.

#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `φ^{⊗m}` by repeated Kronecker products, first factor most significant.
pub fn kron_power(amps: &[Complex64], m: usize) -> DVector<Complex64> {
    let v = DVector::from_column_slice(amps);
    let mut out = DVector::from_element(1, c(1.0, 0.0));
    for _ in 0..m {
        out = out.kronecker(&v);
    }
    out
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}

/// `(1/M!) Σ_π P_π` on `(C^d)^{⊗M}`.
pub fn permutation_projector(d: usize, m: usize) -> DMatrix<Complex64> {
    let dim = d.pow(m as u32);
    let perms = permutations(m);
    let mut s = DMatrix::zeros(dim, dim);
    let digits = |mut x: usize| {
        let mut v = vec![0; m];
        for k in (0..m).rev() {
            v[k] = x % d;
            x /= d;
        }
        v
    };
    let index = |v: &[usize]| v.iter().fold(0, |acc, &s| acc * d + s);
    let scale = 1.0 / perms.len() as f64;
    for x in 0..dim {
        let dx = digits(x);
        for p in &perms {
            let y: Vec<usize> = p.iter().map(|&k| dx[k]).collect();
            s[(index(&y), x)] += c(scale, 0.0);
        }
    }
    s
}

/// Haar-random amplitudes from normalized complex Gaussians.
pub fn gaussian_state<R: Rng>(d: usize, rng: &mut R) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..d)
        .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Composite Simpson rule on `[a, b]` with `2k` panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, k: usize) -> f64 {
    let n = 2 * k;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

const PANELS: usize = 400;

/// Normalized sphere average of `Π χ_k^{a_k}` over `S^{m-1}`, `m = a.len()`,
/// in hyperspherical coordinates
/// `χ_k = sinθ_1 ⋯ sinθ_{k-1} cosθ_k` (k ≤ m-2),
/// `χ_{m-1} = sinθ_1 ⋯ sinθ_{m-2} cosφ`, `χ_m = sinθ_1 ⋯ sinθ_{m-2} sinφ`,
/// with measure `Π sin^{m-1-k}θ_k dθ_k dφ`. Each angle integral is done by
/// Simpson separately.
pub fn sphere_average_real(a: &[u32]) -> f64 {
    static CACHE: Mutex<Option<HashMap<Vec<u32>, f64>>> = Mutex::new(None);
    if let Some(v) = CACHE.lock().unwrap().get_or_insert_with(HashMap::new).get(a) {
        return *v;
    }
    let v = sphere_average_uncached(a);
    CACHE.lock().unwrap().as_mut().unwrap().insert(a.to_vec(), v);
    v
}

fn sphere_average_uncached(a: &[u32]) -> f64 {
    let m = a.len();
    assert!(m >= 2);
    let integral = |a: &[u32]| {
        let mut total = 1.0;
        for k in 0..m - 2 {
            let sin_pow = (m - 2 - k) as i32 + a[k + 1..].iter().sum::<u32>() as i32;
            let cos_pow = a[k] as i32;
            total *= simpson(|t| t.sin().powi(sin_pow) * t.cos().powi(cos_pow), 0.0, std::f64::consts::PI, PANELS);
        }
        let (p, q) = (a[m - 2] as i32, a[m - 1] as i32);
        total * simpson(|t| t.cos().powi(p) * t.sin().powi(q), 0.0, 2.0 * std::f64::consts::PI, PANELS)
    };
    integral(a) / integral(&vec![0; m])
}

/// Haar average of `Π c_{i_k} Π c*_{j_k}` (one-based) in dimension `d`,
/// expanding `c_i = χ_{2i-1} + iχ_{2i}` into real monomials.
pub fn monomial_average(d: usize, i: &[usize], j: &[usize]) -> Complex64 {
    let mut poly: HashMap<Vec<u32>, Complex64> = HashMap::new();
    poly.insert(vec![0; 2 * d], c(1.0, 0.0));
    let factors = i.iter().map(|&k| (k, 1.0)).chain(j.iter().map(|&k| (k, -1.0)));
    for (k, sign) in factors {
        let mut next: HashMap<Vec<u32>, Complex64> = HashMap::new();
        for (exp, coef) in &poly {
            let mut re = exp.clone();
            re[2 * (k - 1)] += 1;
            *next.entry(re).or_default() += coef;
            let mut im = exp.clone();
            im[2 * (k - 1) + 1] += 1;
            *next.entry(im).or_default() += coef * c(0.0, sign);
        }
        poly = next;
    }
    poly.iter().map(|(exp, coef)| coef * sphere_average_real(exp)).sum()
}
