//! Spectral radius of nonnegative tensors and positive H-eigenpairs of symmetric ones.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::subdivision::Sign;
use crate::tensor::Tensor;

/// Certified bracket `lower <= rho(B) <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusEnclosure {
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    /// False when `max_iter` ran out before the requested width was reached.
    pub converged: bool,
}

impl RadiusEnclosure {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPair {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub residual: f64,
}

/// `max_i |(A x^{m-1})_i - lambda x_i^{m-1}|`.
pub fn residual(a: &Tensor, lambda: f64, x: &[f64]) -> Result<f64> {
    let ax = a.apply(x)?;
    let p = a.order() as i32 - 1;
    Ok(ax
        .iter()
        .zip(x)
        .map(|(v, xi)| (v - lambda * xi.powi(p)).abs())
        .fold(0.0, f64::max))
}

/// Enclose the spectral radius of a nonnegative tensor.
///
/// Power iterates `x <- (B' x^{m-1})^{[1/(m-1)]}` run on `B` and on the positive
/// perturbations `B + eta * ones`. At every positive iterate, `B` itself gives
/// `rho(B) <= max_i (B x^{m-1})_i / x_i^{m-1}`, and for any `x >= 0` supported on `S`,
/// `rho(B) >= min_{i in S} (B x^{m-1})_i / x_i^{m-1}`. The best of each over all
/// iterates is returned.
pub fn spectral_radius_nonneg(b: &Tensor, tol: f64, max_iter: usize) -> Result<RadiusEnclosure> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if let Some(pos) = b.entries().iter().position(|&v| v < 0.0) {
        return Err(Error::NegativeEntry(b.multi_index(pos)));
    }
    let scale = b.max_abs();
    if scale == 0.0 {
        return Ok(RadiusEnclosure {
            lower: 0.0,
            upper: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let mut state = Bracket {
        lower: 0.0,
        upper: f64::INFINITY,
        iterations: 0,
    };
    for eta in [1e-8 * scale, 1e-10 * scale, 0.0] {
        if state.done(tol) || state.iterations >= max_iter {
            break;
        }
        power_run(b, eta, tol, max_iter, &mut state);
    }
    if !state.upper.is_finite() {
        // Every iterate had a zero coordinate; fall back to the row-sum bound.
        let ones = vec![1.0; b.dim()];
        state.upper = b.apply(&ones)?.into_iter().fold(0.0, f64::max);
    }
    let converged = state.done(tol);
    // Outward rounding: each ratio carries a summation error of about n^{m-1} ulps.
    let pad = (b.entries().len() / b.dim() + 2) as f64 * f64::EPSILON;
    Ok(RadiusEnclosure {
        lower: (state.lower.min(state.upper) * (1.0 - pad)).max(0.0),
        upper: state.upper * (1.0 + pad),
        iterations: state.iterations,
        converged,
    })
}

struct Bracket {
    lower: f64,
    upper: f64,
    iterations: usize,
}

impl Bracket {
    fn done(&self, tol: f64) -> bool {
        self.upper.is_finite() && self.upper - self.lower <= tol * self.upper.max(1.0)
    }
}

fn power_run(b: &Tensor, eta: f64, tol: f64, max_iter: usize, state: &mut Bracket) {
    let n = b.dim();
    let p = (b.order() - 1) as i32;
    let root = 1.0 / (b.order() - 1) as f64;
    let mut x = vec![1.0 / n as f64; n];
    let mut since_improvement = 0;
    while state.iterations < max_iter {
        state.iterations += 1;
        let bx = b.apply(&x).expect("dimension fixed");
        let (lo, hi) = ratio_bounds(&bx, &x, p);
        let mut improved = false;
        if hi < state.upper {
            state.upper = hi;
            improved = true;
        }
        if lo > state.lower {
            state.lower = lo;
            improved = true;
        }
        if state.iterations % 16 == 1 {
            let t = truncated_lower(b, &x, p);
            if t > state.lower {
                state.lower = t;
                improved = true;
            }
        }
        if state.done(tol) {
            return;
        }
        since_improvement = if improved { 0 } else { since_improvement + 1 };
        if since_improvement > 200 {
            return;
        }
        let s: f64 = x.iter().sum::<f64>().powi(p);
        let mut next: Vec<f64> = bx.iter().map(|v| (v + eta * s).powf(root)).collect();
        let total: f64 = next.iter().sum();
        if !(total > 0.0) {
            return;
        }
        next.iter_mut().for_each(|v| *v /= total);
        x = next;
    }
}

/// `(min, max)` of `(Bx)_i / x_i^{m-1}`; the max is infinite if some `x_i = 0`.
fn ratio_bounds(bx: &[f64], x: &[f64], p: i32) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (v, xi) in bx.iter().zip(x) {
        let d = xi.powi(p);
        if d > 0.0 {
            let r = v / d;
            lo = lo.min(r);
            hi = hi.max(r);
        } else if *v > 0.0 {
            hi = f64::INFINITY;
        } else {
            lo = lo.min(0.0);
        }
    }
    (lo.max(0.0), hi)
}

/// Best sub-invariance bound over the leading supports of `x`.
fn truncated_lower(b: &Tensor, x: &[f64], p: i32) -> f64 {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[j].total_cmp(&x[i]).then(i.cmp(&j)));
    let mut best: f64 = 0.0;
    let mut y = vec![0.0; n];
    for &k in &order {
        if x[k] <= 0.0 {
            break;
        }
        y[k] = x[k];
        let by = b.apply(&y).expect("dimension fixed");
        let mu = (0..n)
            .filter(|&i| y[i] > 0.0)
            .map(|i| by[i] / y[i].powi(p))
            .fold(f64::INFINITY, f64::min);
        best = best.max(mu);
    }
    best
}

/// Look for `x > 0` with `A x^{m-1} = lambda x^{[m-1]}` and `lambda < -tol`
/// (`Sign::Negative`) or `lambda <= tol` (`Sign::NonPositive`).
///
/// Projected gradient on `A x^m` over `{x >= 0, sum x_i^m = 1}` from the uniform point
/// and `restarts` seeded random points, each finished by Newton steps on the
/// eigen-equations. `None` only means nothing was found.
pub fn find_hpp_eigenpair(
    a: &Tensor,
    tol: f64,
    restarts: usize,
    seed: u64,
    sign: Sign,
    interior_margin: f64,
) -> Result<Option<EigenPair>> {
    if !a.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let n = a.dim();
    let m = a.order();
    let mut starts = vec![vec![1.0; n]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        starts.push((0..n).map(|_| rng.random_range(0.05..1.0)).collect());
    }
    let candidates: Vec<Option<EigenPair>> = starts
        .par_iter()
        .map(|s| {
            let x = descend(a, &normalize_m(s, m));
            polish_pair(a, x)
        })
        .collect();
    let mut best: Option<EigenPair> = None;
    for pair in candidates.into_iter().flatten() {
        let sign_ok = match sign {
            Sign::Negative => pair.lambda < -tol,
            Sign::NonPositive => pair.lambda <= tol,
        };
        let lo = pair.x.iter().copied().fold(f64::INFINITY, f64::min);
        if !sign_ok || pair.residual > tol || lo < interior_margin {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => pair
                .lambda
                .total_cmp(&b.lambda)
                .then_with(|| lex_cmp(&pair.x, &b.x))
                .is_lt(),
        };
        if better {
            best = Some(pair);
        }
    }
    Ok(best)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn normalize_m(x: &[f64], m: usize) -> Vec<f64> {
    let s: f64 = x.iter().map(|v| v.max(0.0).powi(m as i32)).sum::<f64>();
    let s = s.powf(1.0 / m as f64);
    x.iter().map(|v| v.max(0.0) / s).collect()
}

fn descend(a: &Tensor, x0: &[f64]) -> Vec<f64> {
    let m = a.order();
    let mut x = x0.to_vec();
    let mut f = a.form_value(&x).expect("dimension fixed");
    for _ in 0..5000 {
        let g: Vec<f64> = a
            .apply(&x)
            .expect("dimension fixed")
            .into_iter()
            .map(|v| m as f64 * v)
            .collect();
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-20 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - alpha * gi).collect();
            if trial.iter().all(|v| *v <= 0.0) {
                alpha *= 0.5;
                continue;
            }
            let y = normalize_m(&trial, m);
            let fy = a.form_value(&y).expect("dimension fixed");
            let decrease: f64 = g.iter().zip(x.iter().zip(&y)).map(|(gi, (xi, yi))| gi * (xi - yi)).sum();
            if fy <= f - 1e-4 * decrease && fy <= f {
                let step = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                x = y;
                f = fy;
                moved = step > 1e-15;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    x
}

/// Newton on `F(x, l) = [A x^{m-1} - l x^{[m-1]}; sum x^m - 1]`, then `l = A x^m / sum x^m`.
fn polish_pair(a: &Tensor, x0: Vec<f64>) -> Option<EigenPair> {
    let n = a.dim();
    let m = a.order();
    let p = (m - 1) as i32;
    let mut x = x0;
    let mut lambda = a.form_value(&x).ok()?;
    let defect = |x: &[f64], l: f64| -> f64 {
        let ax = a.apply(x).expect("dimension fixed");
        let s: f64 = x.iter().map(|v| v.powi(m as i32)).sum();
        ax.iter()
            .zip(x)
            .map(|(v, xi)| (v - l * xi.powi(p)).abs())
            .fold((s - 1.0).abs(), f64::max)
    };
    let mut current = defect(&x, lambda);
    for _ in 0..30 {
        if current < 1e-15 {
            break;
        }
        let ax = a.apply(&x).ok()?;
        let jac = a.jacobian(&x).ok()?;
        let mut jm = DMatrix::zeros(n + 1, n + 1);
        let mut rhs = DVector::zeros(n + 1);
        for i in 0..n {
            for j in 0..n {
                jm[(i, j)] = jac[i][j];
            }
            jm[(i, i)] -= lambda * p as f64 * x[i].powi(p - 1);
            jm[(i, n)] = -x[i].powi(p);
            jm[(n, i)] = m as f64 * x[i].powi(p);
            rhs[i] = -(ax[i] - lambda * x[i].powi(p));
        }
        rhs[n] = -(x.iter().map(|v| v.powi(m as i32)).sum::<f64>() - 1.0);
        let step = jm.lu().solve(&rhs)?;
        let nx: Vec<f64> = (0..n).map(|i| x[i] + step[i]).collect();
        let nl = lambda + step[n];
        if nx.iter().any(|v| !v.is_finite() || *v < 0.0) {
            break;
        }
        let d = defect(&nx, nl);
        if !(d < current) {
            break;
        }
        x = nx;
        lambda = nl;
        current = d;
    }
    let s: f64 = x.iter().map(|v| v.powi(m as i32)).sum();
    if !(s > 0.0) {
        return None;
    }
    let lambda = a.form_value(&x).ok()? / s;
    let residual = residual(a, lambda, &x).ok()?;
    Some(EigenPair { lambda, x, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_of_simple_tensors() {
        let z = spectral_radius_nonneg(&Tensor::zeros(3, 2).unwrap(), 1e-12, 1000).unwrap();
        assert_eq!((z.lower, z.upper), (0.0, 0.0));
        for n in 2..=4 {
            let e = spectral_radius_nonneg(&Tensor::ones(3, n).unwrap(), 1e-12, 10_000).unwrap();
            let rho = (n * n) as f64;
            assert!(e.contains(rho) && e.width() <= 1e-6, "{e:?}");
        }
        let e = spectral_radius_nonneg(&Tensor::identity(4, 3).unwrap(), 1e-12, 10_000).unwrap();
        assert!(e.contains(1.0), "{e:?}");
        assert!(spectral_radius_nonneg(&Tensor::identity(3, 2).unwrap().scale(-1.0), 1e-12, 10).is_err());
    }

    #[test]
    fn reducible_radius() {
        // block diagonal: radii 2 and 5
        let coo = vec![(vec![0, 0, 0], 2.0), (vec![1, 1, 1], 5.0), (vec![0, 0, 1], 0.0)];
        let b = Tensor::from_coo(3, 2, &coo).unwrap();
        let e = spectral_radius_nonneg(&b, 1e-12, 10_000).unwrap();
        assert!(e.contains(5.0) && e.width() < 1e-6, "{e:?}");
    }

    #[test]
    fn eigenpair_of_negative_identity() {
        let a = Tensor::identity(3, 3).unwrap().scale(-1.0);
        let p = find_hpp_eigenpair(&a, 1e-10, 2, 1, Sign::Negative, 1e-6).unwrap().unwrap();
        assert!((p.lambda + 1.0).abs() < 1e-12 && p.residual <= 1e-10);
        assert!(find_hpp_eigenpair(&Tensor::identity(3, 3).unwrap(), 1e-10, 4, 1, Sign::NonPositive, 1e-6)
            .unwrap()
            .is_none());
    }

    #[test]
    fn zero_eigenvalue_at_interior_minimum() {
        let coo = vec![
            (vec![0, 0, 0], 1.0),
            (vec![1, 1, 1], 1.0),
            (vec![0, 1, 1], -1.0),
            (vec![1, 0, 0], -1.0),
        ];
        let a = Tensor::from_coo(3, 2, &coo).unwrap().symmetrize();
        let p = find_hpp_eigenpair(&a, 1e-8, 4, 3, Sign::NonPositive, 1e-6).unwrap().unwrap();
        assert!(p.lambda.abs() <= 1e-8, "{p:?}");
        assert!((p.x[0] - p.x[1]).abs() < 1e-6);
        assert!(find_hpp_eigenpair(&Tensor::from_coo(3, 2, &coo).unwrap(), 1e-8, 1, 0, Sign::Negative, 1e-6).is_err());
    }

    #[test]
    fn residual_examples() {
        let i = Tensor::identity(3, 2).unwrap();
        assert_eq!(residual(&i, 1.0, &[1.0, 0.0]).unwrap(), 0.0);
        let r = residual(&i, 1.0, &[1.0 + 1e-6, 1e-6]).unwrap();
        assert!(r <= 1e-4);
    }
}
