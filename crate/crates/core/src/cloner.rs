//! The optimal `N → M` cloner
//! `T(ρ^{⊗N}) = (d_N/d_M) S_M (ρ^{⊗N} ⊗ 1^{⊗(M-N)}) S_M`
//! as a dense full-space reference computation, and the clone-then-estimate
//! pipeline.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::povm::Povm;
use crate::symmetric::{
    fidelity, sym_dim, symmetric_isometry_full, tensor_power_full, PureState, SymmetricBasis, SymmetricMatrix,
};

/// Agreement required between the two routes of [`two_step_estimate`].
pub const TWO_STEP_TOL: f64 = 1e-8;

/// `T(ρ^{⊗N})` on `M` particles.
#[derive(Clone, Debug)]
pub struct ClonerOutput {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    /// `d^M × d^M` density matrix.
    pub density: DMatrix<Complex64>,
    /// The same operator compressed to the symmetric subspace.
    pub symmetric: SymmetricMatrix,
}

impl ClonerOutput {
    pub fn trace(&self) -> f64 {
        self.density.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        crate::symmetric::max_abs_diff(&self.density, &self.density.adjoint())
    }

    /// Smallest eigenvalue. The full-space operator is `B K B†` with `B` an
    /// isometry, so its nonzero spectrum is that of the compressed `K`.
    pub fn min_eigenvalue(&self) -> f64 {
        let k = &self.symmetric.entries;
        let herm = (k + k.adjoint()) * Complex64::new(0.5, 0.0);
        let lowest = herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if k.nrows() < self.density.nrows() {
            lowest.min(0.0)
        } else {
            lowest
        }
    }

    /// `‖S_M T S_M − T‖_∞`.
    pub fn symmetric_support_defect(&self, guard: usize) -> Result<f64> {
        let s = crate::symmetric::symmetric_projector_full(self.d, self.m, guard)?;
        let sts = &s * &self.density * &s;
        Ok(crate::symmetric::max_abs_diff(&sts, &self.density))
    }

    /// `⟨φ^{⊗M}| T |φ^{⊗M}⟩`.
    pub fn full_fidelity(&self, state: &PureState, guard: usize) -> Result<f64> {
        let v = tensor_power_full(state, self.m, guard)?;
        Ok((v.adjoint() * &self.density * &v)[(0, 0)].re)
    }
}

/// Applies the optimal cloner to `N` copies of `state`, producing `M`.
pub fn clone_state(state: &PureState, n: usize, m: usize, guard: usize) -> Result<ClonerOutput> {
    if n == 0 || m < n {
        return Err(Error::InvalidInput(format!("need M >= N >= 1, got N = {n}, M = {m}")));
    }
    let d = state.dim();
    let b = symmetric_isometry_full(d, m, guard)?;
    let psi = tensor_power_full(state, n, guard)?;
    let basis = SymmetricBasis::new(d, m);
    let dm = basis.len();
    let tail = d.pow((m - n) as u32);

    // K = B† (|ψ⟩⟨ψ| ⊗ 1) B = Σ_k y_k y_k†, y_k = B† (ψ ⊗ e_k)
    let mut k_mat = DMatrix::<Complex64>::zeros(dm, dm);
    for k in 0..tail {
        let mut y = DVector::<Complex64>::zeros(dm);
        for (head, &amp) in psi.iter().enumerate() {
            let x = head * tail + k;
            let c = basis.class_of_full_index(x);
            y[c] += b[(x, c)].conj() * amp;
        }
        k_mat += &y * y.adjoint();
    }
    let scale = Complex64::new(sym_dim(d, n)? as f64 / dm as f64, 0.0);
    k_mat *= scale;
    let density = &b * &k_mat * b.adjoint();
    Ok(ClonerOutput {
        d,
        n,
        m,
        density,
        symmetric: SymmetricMatrix {
            d,
            n: m,
            entries: k_mat,
        },
    })
}

/// Reduced state of particle `which` (one-based).
pub fn single_particle_reduced(out: &ClonerOutput, which: usize) -> Result<DMatrix<Complex64>> {
    if which == 0 || which > out.m {
        return Err(Error::InvalidInput(format!(
            "particle index {which} out of range 1..={}",
            out.m
        )));
    }
    let d = out.d;
    let low = d.pow((out.m - which) as u32);
    let high = d.pow((which - 1) as u32);
    let mut rho = DMatrix::zeros(d, d);
    for h in 0..high {
        for l in 0..low {
            for i in 0..d {
                let x = (h * d + i) * low + l;
                for j in 0..d {
                    let y = (h * d + j) * low + l;
                    rho[(i, j)] += out.density[(x, y)];
                }
            }
        }
    }
    Ok(rho)
}

/// `⟨φ| ρ_1 |φ⟩` for the first particle.
pub fn single_particle_fidelity(out: &ClonerOutput, state: &PureState) -> Result<f64> {
    let rho = single_particle_reduced(out, 1)?;
    let v = DVector::from_column_slice(state.amplitudes());
    Ok((v.adjoint() * rho * v)[(0, 0)].re)
}

/// Both evaluations of the clone-then-estimate fidelity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoStep {
    /// `Σ_a tr[E_a T(ρ^{⊗N})] |⟨φ_a|φ⟩|^2` on the full space.
    pub pipeline: f64,
    /// `d_N Σ_a w_a |⟨φ_a|φ⟩|^{2(N+1)}`.
    pub closed_form: f64,
}

/// Clones `N → M` and measures with the `M`-copy estimator `povm_m`.
pub fn two_step_estimate(state: &PureState, n: usize, povm_m: &Povm, guard: usize) -> Result<TwoStep> {
    let m = povm_m.n;
    if state.dim() != povm_m.d {
        return Err(Error::DimensionMismatch {
            expected: povm_m.d,
            got: state.dim(),
        });
    }
    let out = clone_state(state, n, m, guard)?;
    let dm = povm_m.sym_dim() as f64;
    let dn = sym_dim(state.dim(), n)? as f64;
    let mut pipeline = 0.0;
    let mut closed = 0.0;
    for e in &povm_m.elements {
        let v = tensor_power_full(&e.guess, m, guard)?;
        let born = dm * e.weight * (v.adjoint() * &out.density * &v)[(0, 0)].re;
        let f = fidelity(&e.guess, state)?;
        pipeline += born * f;
        closed += e.weight * f.powi(n as i32 + 1);
    }
    let result = TwoStep {
        pipeline,
        closed_form: dn * closed,
    };
    let gap = (result.pipeline - result.closed_form).abs();
    if gap > TWO_STEP_TOL {
        return Err(Error::Certification {
            what: "two-step pipeline vs closed form",
            residual: gap,
            tolerance: TWO_STEP_TOL,
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetric::{haar_random_state, symmetric_projector_full};
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_when_m_equals_n() {
        let s = haar_random_state(2, 3);
        let out = clone_state(&s, 2, 2, 4096).unwrap();
        let v = tensor_power_full(&s, 2, 4096).unwrap();
        let want = &v * v.adjoint();
        assert!(crate::symmetric::max_abs_diff(&out.density, &want) < 1e-14);
    }

    #[test]
    fn one_to_two_qubit_reduced_fidelity() {
        let s = PureState::basis(2, 0).unwrap();
        let out = clone_state(&s, 1, 2, 4096).unwrap();
        assert_abs_diff_eq!(single_particle_fidelity(&out, &s).unwrap(), 5.0 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn trace_is_one() {
        let s = haar_random_state(2, 17);
        let out = clone_state(&s, 1, 3, 4096).unwrap();
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-12);
        assert!(out.hermiticity_defect() < 1e-14);
        assert!(out.min_eigenvalue() > -1e-12);
        assert!(out.symmetric_support_defect(4096).unwrap() < 1e-14);
    }

    #[test]
    fn reduced_states_do_not_depend_on_particle() {
        let s = haar_random_state(3, 4);
        let out = clone_state(&s, 1, 3, 4096).unwrap();
        let first = single_particle_reduced(&out, 1).unwrap();
        for p in 2..=3 {
            let other = single_particle_reduced(&out, p).unwrap();
            assert!(crate::symmetric::max_abs_diff(&first, &other) < 1e-12);
        }
        assert!(single_particle_reduced(&out, 0).is_err());
        assert!(single_particle_reduced(&out, 4).is_err());
    }

    #[test]
    fn trivial_reduction_returns_input() {
        let s = haar_random_state(3, 8);
        let out = clone_state(&s, 1, 1, 4096).unwrap();
        let rho = single_particle_reduced(&out, 1).unwrap();
        assert!(crate::symmetric::max_abs_diff(&rho, &s.density()) < 1e-14);
    }

    #[test]
    fn matches_literal_projector_sandwich() {
        let s = haar_random_state(2, 21);
        let out = clone_state(&s, 1, 3, 4096).unwrap();
        let proj = symmetric_projector_full(2, 3, 4096).unwrap();
        let psi = tensor_power_full(&s, 1, 4096).unwrap();
        let x = (&psi * psi.adjoint()).kronecker(&DMatrix::<Complex64>::identity(4, 4));
        let lit = &proj * x * &proj * Complex64::new(2.0 / 4.0, 0.0);
        assert!(crate::symmetric::max_abs_diff(&out.density, &lit) < 1e-14);
    }

    #[test]
    fn guard_and_argument_errors() {
        let s = PureState::basis(2, 0).unwrap();
        assert!(matches!(clone_state(&s, 1, 13, 4096), Err(Error::ResourceGuard { .. })));
        assert!(clone_state(&s, 2, 1, 4096).is_err());
        assert!(clone_state(&s, 0, 1, 4096).is_err());
    }
}
