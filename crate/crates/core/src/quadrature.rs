//! Exact product quadratures on the unit sphere `S^(2d-1) ⊂ R^(2d)`.
//!
//! A point `χ` is written in polar form
//!
//! ```text
//! χ_1   = cos θ_1
//! χ_2   = sin θ_1 cos θ_2
//! ...
//! χ_m-1 = sin θ_1 ··· sin θ_m-2 cos φ
//! χ_m   = sin θ_1 ··· sin θ_m-2 sin φ          (m = 2d)
//! ```
//!
//! with measure `Π_k sin^(m-1-k) θ_k dθ_k dφ`. The rule is a tensor product
//! of one-dimensional rules: equally spaced nodes in `φ`, and for the angle
//! `θ_{m-i}` either a Gauss-Legendre rule in `x = cos θ` (`i` even) or a
//! Gauss-Chebyshev midpoint rule in `θ` (`i` odd). Node counts are chosen so
//! that every monomial of degree `2N` in `χ` is integrated exactly, which by
//! [`verify_exactness`] is the optimality condition for the derived POVM.
//!
//! Amplitudes are paired with coordinates as `c_i = χ_{2i-1} + i χ_{2i}`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{mean_tensor_power, MomentIndex};
use crate::symmetric::{occupation_basis, sym_embed_in, PureState, SymmetricMatrix};

/// Residual at or below which a rule (or POVM) is certified.
pub const CERTIFY_TOL: f64 = 1e-10;

/// Tolerance on `|χ| = 1` accepted by [`chi_to_state`].
pub const CHI_NORM_TOL: f64 = 1e-10;

const NEWTON_MAX_ITER: usize = 200;
const NEWTON_TOL: f64 = 1e-14;

/// What a [`Rule1D`] integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    /// `∫_{-1}^{1} f(x) dx`, exact for polynomials of degree `≤ degree`.
    GaussLegendre,
    /// `∫_0^{2π} f(φ) dφ`, exact for `e^{ikφ}` with `|k| ≤ degree`.
    TrapezoidPhase,
    /// `∫_0^π f(θ) dθ` through Gauss-Legendre in `cos θ`.
    GaussLegendreTheta,
    /// `∫_0^π f(θ) dθ` through the Gauss-Chebyshev midpoint rule.
    MidpointTheta,
}

/// One-dimensional rule with positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule1D {
    pub kind: RuleKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Exactness certificate; its meaning depends on `kind`.
    pub degree: usize,
}

impl Rule1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Folds a measure factor `sin^p θ` into the weights, so the rule then
    /// approximates `∫ f(θ) sin^p θ dθ`.
    pub fn with_sin_power(mut self, p: usize) -> Self {
        for (w, &t) in self.weights.iter_mut().zip(&self.nodes) {
            *w *= t.sin().powi(p as i32);
        }
        self
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre rule with `n` nodes on `[-1, 1]`.
///
/// Roots are found by Newton iteration from Chebyshev-angle guesses, kept
/// inside a sign-change bracket by bisection. Only the upper half is
/// computed; the lower half is the exact mirror image.
pub fn gauss_legendre(n: usize) -> Result<Rule1D> {
    if n == 0 {
        return Err(Error::InvalidInput("Gauss-Legendre order must be at least 1".into()));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for k in 0..half {
        // the k-th largest root (zero-based) has angle in
        // [(k+1/2)π/(n+1/2), (k+1)π/(n+1/2)]
        let guess = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let x = if n % 2 == 1 && k == half - 1 {
            0.0
        } else {
            let lo_t = PI * (k as f64 + 1.0) / (n as f64 + 0.5);
            let hi_t = PI * (k as f64 + 0.5) / (n as f64 + 0.5);
            let (mut lo, mut hi) = (lo_t.cos(), hi_t.cos());
            let mut p_lo = legendre_with_derivative(n, lo).0;
            let mut x = guess;
            let mut converged = false;
            for _ in 0..NEWTON_MAX_ITER {
                let (p, dp) = legendre_with_derivative(n, x);
                if p == 0.0 {
                    converged = true;
                    break;
                }
                if (p < 0.0) == (p_lo < 0.0) {
                    lo = x;
                    p_lo = p;
                } else {
                    hi = x;
                }
                let mut next = x - p / dp;
                if !(next >= lo.min(hi) && next <= lo.max(hi)) {
                    next = 0.5 * (lo + hi);
                }
                let step = (next - x).abs();
                x = next;
                if step <= NEWTON_TOL * x.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NoConvergence { order: n, index: k });
            }
            x
        };
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // ascending order: node n-1-k is +x, node k is -x
        nodes[n - 1 - k] = x;
        nodes[k] = -x;
        weights[n - 1 - k] = w;
        weights[k] = w;
    }
    Ok(Rule1D {
        kind: RuleKind::GaussLegendre,
        nodes,
        weights,
        degree: 2 * n - 1,
    })
}

/// Equally spaced phase rule: `φ_κ = 2πκ/n`, weights `2π/n`.
pub fn trapezoid_phase(n: usize) -> Result<Rule1D> {
    if n == 0 {
        return Err(Error::InvalidInput("phase rule needs at least one node".into()));
    }
    let step = 2.0 * PI / n as f64;
    Ok(Rule1D {
        kind: RuleKind::TrapezoidPhase,
        nodes: (0..n).map(|k| step * k as f64).collect(),
        weights: vec![step; n],
        degree: n - 1,
    })
}

/// `∫_0^π f(θ) sin^p θ dθ` from the Gauss-Legendre rule in `x = cos θ`:
/// `θ_κ = arccos x_κ`, weights `w_κ sin^(p-1) θ_κ`.
///
/// Exact for `cos^ν θ sin^(μ+1) θ` (times the measure) whenever the
/// resulting polynomial in `x` has degree `≤ 2n-1`.
pub fn theta_rule_gl(n: usize, sin_power: usize) -> Result<Rule1D> {
    let gl = gauss_legendre(n)?;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (&x, &w) in gl.nodes.iter().zip(&gl.weights).rev() {
        let t = x.acos();
        nodes.push(t);
        weights.push(w / t.sin());
    }
    Ok(Rule1D {
        kind: RuleKind::GaussLegendreTheta,
        nodes,
        weights,
        degree: 2 * n - 1,
    }
    .with_sin_power(sin_power))
}

/// Gauss-Chebyshev midpoint rule for `∫_0^π f(θ) dθ`:
/// `θ_κ = π(2κ-1)/(2n)`, weights `π/n`.
///
/// Exact for `cos^ν θ sin^μ θ` with even `μ` and `ν + μ ≤ 2n - 1`.
pub fn theta_rule_midpoint(n: usize) -> Result<Rule1D> {
    if n == 0 {
        return Err(Error::InvalidInput("midpoint rule needs at least one node".into()));
    }
    let w = PI / n as f64;
    Ok(Rule1D {
        kind: RuleKind::MidpointTheta,
        nodes: (1..=n).map(|k| PI * (2 * k - 1) as f64 / (2 * n) as f64).collect(),
        weights: vec![w; n],
        degree: 2 * n - 1,
    })
}

/// Node counts of a product grid on `S^(2d-1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    /// Counts for `θ_1 .. θ_{2d-2}`.
    pub theta_counts: Vec<usize>,
    pub phi_count: usize,
}

impl GridSpec {
    /// Smallest counts integrating every degree-`2N` monomial exactly.
    ///
    /// Angle `θ_k` sits at position `i = 2d - k`; it gets `N + ⌈i/2⌉` nodes
    /// (Gauss-Legendre for even `i`, midpoint for odd `i`). The phase gets
    /// `2N + 1`.
    pub fn minimal(d: usize, n: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidInput(format!("dimension must be at least 2, got {d}")));
        }
        if n == 0 {
            return Err(Error::InvalidInput("number of copies must be at least 1".into()));
        }
        let m = 2 * d;
        let theta_counts = (1..=m - 2).map(|k| n + (m - k).div_ceil(2)).collect();
        Ok(Self {
            d,
            theta_counts,
            phi_count: 2 * n + 1,
        })
    }

    pub fn point_count(&self) -> u128 {
        self.theta_counts
            .iter()
            .fold(self.phi_count as u128, |acc, &c| acc.saturating_mul(c as u128))
    }
}

/// Weighted point set on the sphere; weights are positive and sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub d: usize,
    /// Points `χ_a ∈ R^(2d)`.
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Degree parameter `N` the construction targets.
    pub n_exact: usize,
    pub spec: GridSpec,
    pub deduplicated: bool,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn states(&self) -> Result<Vec<PureState>> {
        self.points.iter().map(|p| chi_to_state(p)).collect()
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Drops every point whose phase node index is `≥ keep`, leaving the
    /// remaining weights untouched. Only meaningful for a rule fresh from
    /// [`sphere_grid_with`], whose phase index runs fastest.
    pub fn truncate_phase(&self, keep: usize) -> Result<QuadratureRule> {
        if self.deduplicated {
            return Err(Error::InvalidInput("cannot truncate a deduplicated rule".into()));
        }
        let stride = self.spec.phi_count;
        let kept: Vec<usize> = (0..self.len()).filter(|a| a % stride < keep).collect();
        Ok(QuadratureRule {
            points: kept.iter().map(|&a| self.points[a].clone()).collect(),
            weights: kept.iter().map(|&a| self.weights[a]).collect(),
            ..self.clone()
        })
    }

    /// `Σ_a w_a Π_k c^a_{i_k} (c^a_{j_k})^*`.
    pub fn monomial_sum(&self, idx: &MomentIndex) -> Result<Complex64> {
        let states = self.states()?;
        Ok(monomial_sum(&states, &self.weights, idx))
    }
}

pub(crate) fn monomial_sum(states: &[PureState], weights: &[f64], idx: &MomentIndex) -> Complex64 {
    states
        .iter()
        .zip(weights)
        .map(|(s, &w)| {
            let c = s.amplitudes();
            let mut prod = Complex64::new(w, 0.0);
            for &i in &idx.i {
                prod *= c[i - 1];
            }
            for &j in &idx.j {
                prod *= c[j - 1].conj();
            }
            prod
        })
        .sum()
}

/// Maps a list of angles `(θ_1..θ_{m-2}, φ)` to a point on `S^(m-1)`.
pub fn polar_to_chi(thetas: &[f64], phi: f64) -> Vec<f64> {
    let m = thetas.len() + 2;
    let mut chi = Vec::with_capacity(m);
    let mut sin_prod = 1.0;
    for &t in thetas {
        chi.push(sin_prod * t.cos());
        sin_prod *= t.sin();
    }
    chi.push(sin_prod * phi.cos());
    chi.push(sin_prod * phi.sin());
    chi
}

/// Product rule on `S^(2d-1)` exact for every polynomial of degree `2N`.
pub fn sphere_grid(d: usize, n: usize) -> Result<QuadratureRule> {
    sphere_grid_with(GridSpec::minimal(d, n)?, n)
}

/// Product rule for explicit node counts.
///
/// Weights are the products of the one-dimensional weights including the
/// measure factors, divided by their total so that they sum to one.
pub fn sphere_grid_with(spec: GridSpec, n_exact: usize) -> Result<QuadratureRule> {
    let d = spec.d;
    let m = 2 * d;
    if spec.theta_counts.len() != m - 2 {
        return Err(Error::InvalidInput(format!(
            "expected {} polar angle counts for d = {d}, got {}",
            m - 2,
            spec.theta_counts.len()
        )));
    }
    // θ_k, k = 1..m-2, carries sin^(m-1-k) and sits at position i = m - k
    let mut axes = Vec::with_capacity(m - 1);
    for (k0, &count) in spec.theta_counts.iter().enumerate() {
        let k = k0 + 1;
        let i = m - k;
        let power = m - 1 - k;
        let rule = if i.is_multiple_of(2) {
            theta_rule_gl(count, power)?
        } else {
            theta_rule_midpoint(count)?.with_sin_power(power)
        };
        axes.push(rule);
    }
    let phase = trapezoid_phase(spec.phi_count)?;

    let total = spec.point_count();
    let mut points = Vec::with_capacity(total.min(1 << 24) as usize);
    let mut weights = Vec::with_capacity(points.capacity());
    let mut cursor = vec![0usize; axes.len()];
    let mut thetas = vec![0.0; axes.len()];
    'outer: loop {
        let mut w_theta = 1.0;
        for (a, &c) in cursor.iter().enumerate() {
            thetas[a] = axes[a].nodes[c];
            w_theta *= axes[a].weights[c];
        }
        for (&phi, &wp) in phase.nodes.iter().zip(&phase.weights) {
            points.push(polar_to_chi(&thetas, phi));
            weights.push(w_theta * wp);
        }
        // odometer over the polar axes, last axis fastest
        for a in (0..axes.len()).rev() {
            cursor[a] += 1;
            if cursor[a] < axes[a].len() {
                continue 'outer;
            }
            cursor[a] = 0;
        }
        break;
    }
    let sum: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= sum;
    }
    Ok(QuadratureRule {
        d,
        points,
        weights,
        n_exact,
        spec,
        deduplicated: false,
    })
}

/// `c_i = χ_{2i-1} + i χ_{2i}`.
pub fn chi_to_state(chi: &[f64]) -> Result<PureState> {
    if chi.len() < 4 || !chi.len().is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "sphere point must have even length at least 4, got {}",
            chi.len()
        )));
    }
    let norm = chi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > CHI_NORM_TOL {
        return Err(Error::InvalidInput(format!("sphere point has norm {norm}, expected 1")));
    }
    PureState::normalized(
        chi.chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect(),
    )
}

const GRAM_CHUNK: usize = 256;

/// `Σ_a w_a v_a v_a†` with `v_a = sym_embed(φ_a, N)`.
///
/// Chunks are summed in parallel and then combined in chunk order, so the
/// result does not depend on the number of threads.
pub fn weighted_gram(states: &[PureState], weights: &[f64], d: usize, n: usize) -> Result<SymmetricMatrix> {
    if let Some(s) = states.iter().find(|s| s.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: s.dim(),
        });
    }
    let basis = occupation_basis(d, n);
    let partials: Vec<SymmetricMatrix> = states
        .par_chunks(GRAM_CHUNK)
        .zip(weights.par_chunks(GRAM_CHUNK))
        .map(|(ss, ws)| {
            let mut acc = SymmetricMatrix::zeros(d, n).expect("dimension validated");
            for (s, &w) in ss.iter().zip(ws) {
                acc.add_outer(w, &sym_embed_in(s, &basis));
            }
            acc
        })
        .collect();
    let mut total = SymmetricMatrix::zeros(d, n)?;
    for p in partials {
        total.entries += p.entries;
    }
    Ok(total)
}

/// `‖Σ_a w_a v_a v_a† − I/d_N‖_∞` (largest entry modulus).
pub fn moment_residual(states: &[PureState], weights: &[f64], d: usize, n: usize) -> Result<f64> {
    let gram = weighted_gram(states, weights, d, n)?;
    Ok(gram.max_abs_diff(&mean_tensor_power(d, n)?))
}

/// Residual of the degree-`N` exactness condition for `rule`.
pub fn verify_exactness(rule: &QuadratureRule, n: usize) -> Result<f64> {
    moment_residual(&rule.states()?, &rule.weights, rule.d, n)
}

/// Largest `|Σ_a w_a Π c^{p} Π c*^{q}|` over monomials with `p ≠ q` factors
/// and `p + q ≤ max_degree`. Zero for the exact average; reported only as a
/// diagnostic.
pub fn cross_moment_residual(rule: &QuadratureRule, max_degree: usize) -> Result<f64> {
    let states = rule.states()?;
    let d = rule.d;
    let mut worst: f64 = 0.0;
    for p in 0..=max_degree {
        for q in 0..=(max_degree - p) {
            if p == q {
                continue;
            }
            for a in occupation_basis(d, p) {
                for b in occupation_basis(d, q) {
                    let s: Complex64 = states
                        .iter()
                        .zip(&rule.weights)
                        .map(|(st, &w)| {
                            let c = st.amplitudes();
                            let mut prod = Complex64::new(w, 0.0);
                            for k in 0..d {
                                prod *= c[k].powu(a.counts()[k]) * c[k].conj().powu(b.counts()[k]);
                            }
                            prod
                        })
                        .sum();
                    worst = worst.max(s.norm());
                }
            }
        }
    }
    Ok(worst)
}

/// Merges points describing the same ray (fidelity `≥ 1 − 1e−12`), summing
/// their weights. The first point of each ray is kept.
pub fn dedupe(rule: &QuadratureRule) -> Result<QuadratureRule> {
    const QUANT: f64 = 1e7;
    let states = rule.states()?;
    let key_len = rule.d.min(3);
    let key = |s: &PureState| -> Vec<i64> {
        s.amplitudes()[..key_len]
            .iter()
            .map(|c| (c.norm() * QUANT).round() as i64)
            .collect()
    };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut reps: Vec<usize> = Vec::new();
    let mut rep_weights: Vec<f64> = Vec::new();
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(key_len as u32))
        .map(|mut t| {
            (0..key_len)
                .map(|_| {
                    let o = (t % 3) as i64 - 1;
                    t /= 3;
                    o
                })
                .collect()
        })
        .collect();
    for (a, s) in states.iter().enumerate() {
        let k = key(s);
        let mut found = None;
        'search: for off in &offsets {
            let probe: Vec<i64> = k.iter().zip(off).map(|(x, o)| x + o).collect();
            if let Some(list) = buckets.get(&probe) {
                for &r in list {
                    if s.same_ray(&states[reps[r]]) {
                        found = Some(r);
                        break 'search;
                    }
                }
            }
        }
        match found {
            Some(r) => rep_weights[r] += rule.weights[a],
            None => {
                buckets.entry(k).or_default().push(reps.len());
                reps.push(a);
                rep_weights.push(rule.weights[a]);
            }
        }
    }
    Ok(QuadratureRule {
        d: rule.d,
        points: reps.iter().map(|&a| rule.points[a].clone()).collect(),
        weights: rep_weights,
        n_exact: rule.n_exact,
        spec: rule.spec.clone(),
        deduplicated: true,
    })
}
