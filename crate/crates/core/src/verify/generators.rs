//! Random structured tensors. Every output satisfies its kind's defining check.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classifiers::{self, Classifier, Config};
use crate::error::{Error, Result};
use crate::spectral;
use crate::tensor::{advance, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum GeneratorKind {
    DiagDominant,
    StrictDiagDominant,
    /// `A = t I - B` with `t` the midpoint of the enclosure of `rho(B)` times `factor`.
    ZTensor { factor: f64 },
    Symmetric,
    Nonneg,
    #[serde(rename = "almostE0Seeded")]
    AlmostE0Seeded,
}

impl GeneratorKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::DiagDominant => "diagDominant",
            GeneratorKind::StrictDiagDominant => "strictDiagDominant",
            GeneratorKind::ZTensor { .. } => "zTensor",
            GeneratorKind::Symmetric => "symmetric",
            GeneratorKind::Nonneg => "nonneg",
            GeneratorKind::AlmostE0Seeded => "almostE0-seeded",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    /// Parses the kind name; `zTensor` gets factor 1 and can be adjusted afterwards.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "diagDominant" => GeneratorKind::DiagDominant,
            "strictDiagDominant" => GeneratorKind::StrictDiagDominant,
            "zTensor" => GeneratorKind::ZTensor { factor: 1.0 },
            "symmetric" => GeneratorKind::Symmetric,
            "nonneg" => GeneratorKind::Nonneg,
            "almostE0-seeded" | "almostE0Seeded" => GeneratorKind::AlmostE0Seeded,
            other => return Err(Error::UnknownName(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub order: usize,
    pub dim: usize,
    pub seed: u64,
    pub count: usize,
}

/// Draws allowed for the rejection-sampled kind before giving up.
pub const REJECTION_BUDGET: usize = 200;

pub fn generate(spec: &GeneratorSpec, cfg: &Config) -> Result<Vec<Tensor>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.count)
        .map(|_| generate_one(spec.kind, spec.order, spec.dim, &mut rng, cfg))
        .collect()
}

pub fn generate_one(kind: GeneratorKind, m: usize, n: usize, rng: &mut ChaCha8Rng, cfg: &Config) -> Result<Tensor> {
    if m < 2 {
        return Err(Error::OrderTooSmall(m));
    }
    if n < 1 {
        return Err(Error::DimensionTooSmall(n));
    }
    let t = match kind {
        GeneratorKind::DiagDominant => diag_dominant(m, n, false, rng),
        GeneratorKind::StrictDiagDominant => diag_dominant(m, n, true, rng),
        GeneratorKind::ZTensor { factor } => z_tensor(m, n, factor, rng, cfg)?,
        GeneratorKind::Symmetric => symmetric(m, n, rng),
        GeneratorKind::Nonneg => nonneg(m, n, rng),
        GeneratorKind::AlmostE0Seeded => almost_e0(m, n, rng, cfg)?.0,
    };
    debug_assert!(satisfies(kind, &t));
    Ok(t)
}

/// The defining check of each kind that can be evaluated without the engine.
pub fn satisfies(kind: GeneratorKind, t: &Tensor) -> bool {
    match kind {
        GeneratorKind::DiagDominant => {
            classifiers::is_diag_dominant(t, false).is_holds() && t.diag().iter().all(|&d| d >= 0.0)
        }
        GeneratorKind::StrictDiagDominant => {
            classifiers::is_diag_dominant(t, true).is_holds() && t.diag().iter().all(|&d| d > 0.0)
        }
        GeneratorKind::ZTensor { .. } => classifiers::is_z_tensor(t).is_none(),
        GeneratorKind::Symmetric => t.is_symmetric(),
        GeneratorKind::Nonneg => t.is_nonneg(),
        GeneratorKind::AlmostE0Seeded => true,
    }
}

fn fill(m: usize, n: usize, mut f: impl FnMut(&[usize]) -> f64) -> Tensor {
    let len = n.pow(m as u32);
    let mut idx = vec![0; m];
    let mut entries = Vec::with_capacity(len);
    for _ in 0..len {
        entries.push(f(&idx));
        advance(&mut idx, n);
    }
    Tensor::new(m, n, entries).expect("sizes agree")
}

fn is_diag(idx: &[usize]) -> bool {
    idx.iter().all(|&i| i == idx[0])
}

fn with_diag(t: &Tensor, d: &[f64]) -> Tensor {
    let mut entries = t.entries().to_vec();
    for (pos, e) in entries.iter_mut().enumerate() {
        if t.is_diagonal_position(pos) {
            *e = d[t.multi_index(pos)[0]];
        }
    }
    Tensor::new(t.order(), t.dim(), entries).expect("same shape")
}

fn diag_dominant(m: usize, n: usize, strict: bool, rng: &mut impl Rng) -> Tensor {
    let off = fill(m, n, |idx| {
        if is_diag(idx) || rng.random_bool(0.3) {
            0.0
        } else {
            rng.random_range(-1.0..=1.0)
        }
    });
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let s: f64 = off.off_diagonal_row(i).map(f64::abs).sum();
            let u = if strict {
                rng.random_range(0.1..1.0)
            } else if rng.random_bool(0.3) {
                0.0
            } else {
                rng.random_range(0.0..1.0)
            };
            // Exactly the row sum when `u` is zero, so equality rows are represented.
            s + u * s.max(1.0)
        })
        .collect();
    with_diag(&off, &d)
}

fn z_tensor(m: usize, n: usize, factor: f64, rng: &mut impl Rng, cfg: &Config) -> Result<Tensor> {
    let b = fill(m, n, |_| rng.random_range(0.0..1.0));
    let e = spectral::spectral_radius_nonneg(&b, cfg.spectral_tol, cfg.spectral_max_iter)?;
    let t = e.midpoint() * factor;
    Tensor::identity(m, n)?.scale(t).sub(&b)
}

fn nonneg(m: usize, n: usize, rng: &mut impl Rng) -> Tensor {
    fill(m, n, |_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..1.0) })
}

/// Off-diagonal entries uniform on `[0, 1)` with some zeros, diagonal zero.
fn off_diagonal_nonneg(m: usize, n: usize, density: f64, rng: &mut impl Rng) -> Tensor {
    fill(m, n, |idx| {
        if is_diag(idx) || !rng.random_bool(density) {
            0.0
        } else {
            rng.random_range(0.0..1.0)
        }
    })
}

/// `D - N + P` with `(D - N + P) x^{m-1} = -delta (N x^{m-1})` at a random `x > 0`.
/// `None` when the required diagonal has a negative entry.
fn z_like(n_part: &Tensor, p_part: &Tensor, x: &[f64], delta: f64) -> Option<Tensor> {
    let m = n_part.order();
    let nx = n_part.apply(x).expect("shape");
    let px = p_part.apply(x).expect("shape");
    let p = m as i32 - 1;
    let d: Vec<f64> = (0..x.len())
        .map(|i| (nx[i] - px[i] - delta * nx[i]) / x[i].powi(p))
        .collect();
    if d.iter().any(|&v| !(v >= 0.0)) {
        return None;
    }
    let base = p_part.sub(n_part).expect("shape");
    Some(base.add(&Tensor::diagonal(m, &d).expect("diagonal")).expect("shape"))
}

/// Three flavors chosen at random: unstructured with a diagonal shift, a symmetric
/// Z-tensor placed near the boundary of the almost class, and the same with a small
/// positive off-diagonal perturbation.
fn symmetric(m: usize, n: usize, rng: &mut impl Rng) -> Tensor {
    let flavor = rng.random_range(0..3u8);
    if flavor == 0 {
        let raw = fill(m, n, |_| rng.random_range(-1.0..=1.0)).symmetrize();
        let d: Vec<f64> = raw.diag().iter().map(|v| v.abs() + rng.random_range(0.0..1.5)).collect();
        return with_diag(&raw, &d);
    }
    loop {
        let n_part = off_diagonal_nonneg(m, n, 0.8, rng).symmetrize();
        let p_part = if flavor == 2 {
            off_diagonal_nonneg(m, n, 0.2, rng).scale(0.2).symmetrize()
        } else {
            Tensor::zeros(m, n).expect("shape")
        };
        if n_part.max_abs() == 0.0 {
            continue;
        }
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let delta = rng.random_range(-0.3..0.3);
        if let Some(t) = z_like(&n_part, &p_part, &x, delta) {
            return t;
        }
    }
}

/// A tensor certified almost semi-positive, together with a positive vector `x`
/// with `A x^{m-1} < 0`.
///
/// Built as `D - N + P` around a random `x` so that `A x^{m-1} = -delta N x^{m-1}`;
/// a small `delta` leaves the proper principal subtensors semi-positive in most draws,
/// and the classifier filters the rest.
pub fn almost_e0(m: usize, n: usize, rng: &mut impl Rng, cfg: &Config) -> Result<(Tensor, Vec<f64>)> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    for _ in 0..REJECTION_BUDGET {
        let n_part = off_diagonal_nonneg(m, n, 0.7, rng);
        let p_part = off_diagonal_nonneg(m, n, 0.2, rng).scale(rng.random_range(0.0..0.5));
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let delta = rng.random_range(0.02..0.3);
        let Some(a) = z_like(&n_part, &p_part, &x, delta) else {
            continue;
        };
        let ax = a.apply(&x)?;
        if ax.iter().any(|&v| !(v < 0.0)) {
            continue;
        }
        let c = Classifier::new(&a, cfg)?;
        if c.is_almost_semi_positive(false)?.is_holds() {
            return Ok((a, x));
        }
    }
    Err(Error::RejectionBudget(REJECTION_BUDGET))
}

/// A blend of symmetric, mostly nonnegative and unstructured tensors, for suites
/// that need both outcomes of a class.
pub fn mixed(m: usize, n: usize, rng: &mut impl Rng) -> Tensor {
    match rng.random_range(0..3u8) {
        0 => symmetric(m, n, rng),
        1 => {
            let base = nonneg(m, n, rng);
            let neg = fill(m, n, |idx| {
                if is_diag(idx) || !rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random_range(0.0..0.4)
                }
            });
            base.sub(&neg).expect("shape")
        }
        _ => {
            let raw = fill(m, n, |_| rng.random_range(-1.0..=1.0));
            let d: Vec<f64> = raw.diag().iter().map(|v| v.abs() + rng.random_range(0.0..2.0)).collect();
            with_diag(&raw, &d)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_meet_their_definitions() {
        let cfg = Config::default();
        for kind in [
            GeneratorKind::DiagDominant,
            GeneratorKind::StrictDiagDominant,
            GeneratorKind::ZTensor { factor: 0.5 },
            GeneratorKind::Symmetric,
            GeneratorKind::Nonneg,
        ] {
            for (m, n) in [(3, 2), (3, 4), (4, 3)] {
                let spec = GeneratorSpec {
                    kind,
                    order: m,
                    dim: n,
                    seed: 11,
                    count: 20,
                };
                for t in generate(&spec, &cfg).unwrap() {
                    assert!(satisfies(kind, &t), "{kind}");
                }
            }
        }
    }

    #[test]
    fn strong_m_at_factor_one_and_a_half() {
        let cfg = Config::default();
        let spec = GeneratorSpec {
            kind: GeneratorKind::ZTensor { factor: 1.5 },
            order: 3,
            dim: 3,
            seed: 3,
            count: 5,
        };
        for t in generate(&spec, &cfg).unwrap() {
            assert!(Classifier::new(&t, &cfg).unwrap().is_m_tensor(true).is_holds());
        }
    }

    #[test]
    fn seeded_almost_e0() {
        let cfg = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let (a, x) = almost_e0(3, 2, &mut rng, &cfg).unwrap();
            assert!(a.apply(&x).unwrap().iter().all(|&v| v < 0.0));
            assert!(Classifier::new(&a, &cfg).unwrap().is_almost_semi_positive(false).unwrap().is_holds());
        }
    }

    #[test]
    fn names_round_trip() {
        for k in ["diagDominant", "strictDiagDominant", "zTensor", "symmetric", "nonneg", "almostE0-seeded"] {
            assert_eq!(k.parse::<GeneratorKind>().unwrap().name(), k);
        }
    }
}
