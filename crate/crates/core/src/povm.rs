//! Finite optimal POVMs `E_a = d_N w_a ρ_a^{⊗N}` built from certified
//! sphere quadratures.
//!
//! Elements are kept in factored form `(w_a, φ_a)`; every check below only
//! needs the Gram sum `Σ_a w_a v_a v_a†` with `v_a = sym_embed(φ_a, N)`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{dedupe, moment_residual, sphere_grid_with, verify_exactness, GridSpec, CERTIFY_TOL};
use crate::symmetric::{sym_dim, sym_embed, PureState, SymmetricMatrix};

/// Default limit on `A · d_N^2` for construction and verification.
pub const DEFAULT_GRAM_GUARD: u128 = 100_000_000;

/// Environment variable overriding [`DEFAULT_GRAM_GUARD`].
pub const GRAM_GUARD_ENV: &str = "OPTIMAL_POVM_GRAM_GUARD";

/// Completeness residual above which [`load_povm`] rejects a file.
pub const LOAD_TOL: f64 = 1e-8;

pub const FORMAT_VERSION: u32 = 1;

pub fn gram_guard() -> u128 {
    std::env::var(GRAM_GUARD_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_GRAM_GUARD)
}

/// One outcome: weight `w_a > 0` and guess `φ_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct PovmElement {
    pub weight: f64,
    pub guess: PureState,
}

/// How a POVM came to be.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub construction: String,
    pub dedupe: bool,
    pub grid: Option<GridSpec>,
    pub restricted_from: Option<usize>,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn unknown() -> Self {
        Self {
            construction: "unknown".into(),
            dedupe: false,
            grid: None,
            restricted_from: None,
            seed: None,
        }
    }
}

/// A POVM on `N` copies in dimension `d` whose elements are proportional to
/// `ρ_a^{⊗N}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    pub d: usize,
    pub n: usize,
    pub elements: Vec<PovmElement>,
    pub provenance: Provenance,
}

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub dedupe: bool,
    /// Limit on `A · d_N^2`.
    pub guard: u128,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            dedupe: false,
            guard: gram_guard(),
        }
    }
}

impl Povm {
    /// Wraps elements after checking weights and dimensions. Completeness is
    /// not checked here.
    pub fn from_elements(d: usize, n: usize, elements: Vec<PovmElement>, provenance: Provenance) -> Result<Self> {
        if d < 2 || n == 0 {
            return Err(Error::InvalidInput(format!("need d >= 2 and N >= 1, got d = {d}, N = {n}")));
        }
        for (a, e) in elements.iter().enumerate() {
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "element {a} has non-positive weight {}",
                    e.weight
                )));
            }
            if e.guess.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: e.guess.dim(),
                });
            }
        }
        Ok(Self {
            d,
            n,
            elements,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.elements.iter().map(|e| e.weight).sum()
    }

    pub fn sym_dim(&self) -> usize {
        sym_dim(self.d, self.n).expect("validated at construction")
    }

    pub fn guesses(&self) -> Vec<PureState> {
        self.elements.iter().map(|e| e.guess.clone()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.weight).collect()
    }

    /// Dense `E_a = d_N w_a v_a v_a†` in the occupation basis.
    pub fn element_matrix(&self, a: usize) -> SymmetricMatrix {
        let e = &self.elements[a];
        let mut m = SymmetricMatrix::zeros(self.d, self.n).expect("validated at construction");
        m.add_outer(self.sym_dim() as f64 * e.weight, &sym_embed(&e.guess, self.n));
        m
    }

    fn gram_residual(&self, level: usize) -> Result<f64> {
        moment_residual(&self.guesses(), &self.weights(), self.d, level)
    }
}

fn check_guard(a: u128, d: usize, n: usize, guard: u128) -> Result<()> {
    let dn = sym_dim(d, n)? as u128;
    let needed = a.saturating_mul(dn).saturating_mul(dn);
    if needed > guard {
        return Err(Error::ResourceGuard {
            what: "A * d_N^2",
            needed,
            limit: guard,
        });
    }
    Ok(())
}

/// Builds the optimal POVM for `N` copies in dimension `d` from the minimal
/// exact sphere grid and certifies it.
pub fn build_povm(d: usize, n: usize, options: BuildOptions) -> Result<Povm> {
    let spec = GridSpec::minimal(d, n)?;
    check_guard(spec.point_count(), d, n, options.guard)?;
    let mut rule = sphere_grid_with(spec.clone(), n)?;
    let residual = verify_exactness(&rule, n)?;
    if residual > CERTIFY_TOL {
        return Err(Error::Certification {
            what: "quadrature exactness",
            residual,
            tolerance: CERTIFY_TOL,
        });
    }
    if options.dedupe {
        rule = dedupe(&rule)?;
        let residual = verify_exactness(&rule, n)?;
        if residual > CERTIFY_TOL {
            return Err(Error::Certification {
                what: "quadrature exactness after deduplication",
                residual,
                tolerance: CERTIFY_TOL,
            });
        }
    }
    let elements = rule
        .states()?
        .into_iter()
        .zip(&rule.weights)
        .map(|(guess, &weight)| PovmElement { weight, guess })
        .collect();
    Povm::from_elements(
        d,
        n,
        elements,
        Provenance {
            construction: "sphere-grid".into(),
            dedupe: options.dedupe,
            grid: Some(spec),
            restricted_from: None,
            seed: None,
        },
    )
}

/// `‖Σ_a E_a − I_{d_N}‖_∞`.
pub fn check_completeness(povm: &Povm) -> Result<f64> {
    let scale = povm.sym_dim() as f64;
    Ok(povm.gram_residual(povm.n)? * scale)
}

/// `‖Σ_a w_a v_a v_a† − I/d_N‖_∞` at level `N`.
pub fn check_optimality(povm: &Povm) -> Result<f64> {
    povm.gram_residual(povm.n)
}

/// The same moment condition one level up, at `N + 1`.
pub fn check_universality(povm: &Povm) -> Result<f64> {
    povm.gram_residual(povm.n + 1)
}

/// Reuses the weights and guesses of a POVM built for `M` copies as an
/// estimator for `N ≤ M` copies.
pub fn restrict_povm(povm: &Povm, n: usize) -> Result<Povm> {
    if n == 0 || n > povm.n {
        return Err(Error::InvalidInput(format!(
            "cannot restrict a {}-copy POVM to {n} copies",
            povm.n
        )));
    }
    if n == povm.n {
        return Ok(povm.clone());
    }
    let mut provenance = povm.provenance.clone();
    provenance.restricted_from = Some(povm.n);
    Povm::from_elements(povm.d, n, povm.elements.clone(), provenance)
}

// ---------------------------------------------------------------------------
// File format

#[derive(Serialize, Deserialize)]
struct FileElement {
    c: Vec<[String; 2]>,
    w: String,
}

#[derive(Serialize, Deserialize)]
struct PovmFile {
    #[serde(rename = "N")]
    n: usize,
    d: usize,
    elements: Vec<FileElement>,
    format_version: u32,
    #[serde(default)]
    provenance: Option<Provenance>,
}

/// 17 significant digits; parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str, location: impl Fn() -> String) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|e: std::num::ParseFloatError| Error::Parse {
        location: location(),
        message: format!("{e} ({s:?})"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            location: location(),
            message: format!("non-finite value {s:?}"),
        });
    }
    Ok(v)
}

/// Canonical JSON text of a POVM.
pub fn povm_to_json(povm: &Povm) -> String {
    let file = PovmFile {
        n: povm.n,
        d: povm.d,
        elements: povm
            .elements
            .iter()
            .map(|e| FileElement {
                c: e
                    .guess
                    .amplitudes()
                    .iter()
                    .map(|z| [format_f64(z.re), format_f64(z.im)])
                    .collect(),
                w: format_f64(e.weight),
            })
            .collect(),
        format_version: FORMAT_VERSION,
        provenance: Some(povm.provenance.clone()),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("serializable");
    s.push('\n');
    s
}

/// Parses and re-verifies a POVM document.
pub fn povm_from_json(text: &str) -> Result<Povm> {
    let file: PovmFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::Parse {
            location: "format_version".into(),
            message: format!("unsupported version {}", file.format_version),
        });
    }
    let mut elements = Vec::with_capacity(file.elements.len());
    for (a, el) in file.elements.iter().enumerate() {
        let weight = parse_f64(&el.w, || format!("elements[{a}].w"))?;
        if el.c.len() != file.d {
            return Err(Error::Parse {
                location: format!("elements[{a}].c"),
                message: format!("expected {} amplitudes, got {}", file.d, el.c.len()),
            });
        }
        let mut amps = Vec::with_capacity(file.d);
        for (i, [re, im]) in el.c.iter().enumerate() {
            let re = parse_f64(re, || format!("elements[{a}].c[{i}][0]"))?;
            let im = parse_f64(im, || format!("elements[{a}].c[{i}][1]"))?;
            amps.push(num_complex::Complex64::new(re, im));
        }
        let guess = PureState::new(amps).map_err(|e| Error::Parse {
            location: format!("elements[{a}].c"),
            message: e.to_string(),
        })?;
        elements.push(PovmElement { weight, guess });
    }
    let povm = Povm::from_elements(
        file.d,
        file.n,
        elements,
        file.provenance.unwrap_or_else(Provenance::unknown),
    )?;
    check_guard(povm.len() as u128, povm.d, povm.n, gram_guard())?;
    let residual = check_completeness(&povm)?;
    if residual > LOAD_TOL {
        return Err(Error::Certification {
            what: "completeness of loaded POVM",
            residual,
            tolerance: LOAD_TOL,
        });
    }
    Ok(povm)
}

pub fn save_povm(povm: &Povm, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, povm_to_json(povm))?;
    Ok(())
}

pub fn load_povm(path: impl AsRef<Path>) -> Result<Povm> {
    povm_from_json(&fs::read_to_string(path)?)
}
