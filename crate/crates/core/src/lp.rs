//! Small dense linear programs: `maximize c.x` subject to row constraints and `x >= 0`.
//!
//! Two-phase tableau simplex with Bland's rule. Sizes here are a few dozen rows
//! and columns, so the dense tableau is the simplest correct choice.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub coeffs: Vec<f64>,
    pub rel: Rel,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

const TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 10_000;

struct Tableau {
    rows: usize,
    cols: usize,
    // (rows + 1) x (cols + 1); last row is the objective, last column the rhs.
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * (self.cols + 1) + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let p = self.at(pr, pc);
        for c in 0..w {
            self.data[pr * w + c] /= p;
        }
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f == 0.0 {
                continue;
            }
            for c in 0..w {
                let v = self.data[pr * w + c];
                self.data[r * w + c] -= f * v;
            }
        }
        self.basis[pr] = pc;
    }

    /// Run simplex iterations on the objective row over the allowed columns.
    /// The objective row stores reduced costs of a maximization as negatives.
    fn optimize(&mut self, allowed: usize) -> Option<bool> {
        for _ in 0..MAX_PIVOTS {
            // Bland: lowest-index entering column with negative reduced cost.
            let Some(pc) = (0..allowed).find(|&c| self.at(self.rows, c) < -TOL) else {
                return Some(true);
            };
            let mut best: Option<(f64, usize)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > TOL {
                    let ratio = self.at(r, self.cols) / a;
                    best = match best {
                        None => Some((ratio, r)),
                        Some((br, bi)) => {
                            if ratio < br - TOL
                                || (ratio <= br + TOL && self.basis[r] < self.basis[bi])
                            {
                                Some((ratio, r))
                            } else {
                                Some((br, bi))
                            }
                        }
                    };
                }
            }
            match best {
                None => return Some(false),
                Some((_, pr)) => self.pivot(pr, pc),
            }
        }
        None
    }
}

/// Maximize `c.x` subject to `rows` and `x >= 0`.
pub(crate) fn maximize(c: &[f64], rows: &[Row]) -> LpOutcome {
    let n = c.len();
    let m = rows.len();
    // Normalize to nonnegative right-hand sides.
    let norm: Vec<(Vec<f64>, Rel, f64)> = rows
        .iter()
        .map(|r| {
            if r.rhs < 0.0 {
                let rel = match r.rel {
                    Rel::Le => Rel::Ge,
                    Rel::Ge => Rel::Le,
                    Rel::Eq => Rel::Eq,
                };
                (r.coeffs.iter().map(|v| -v).collect(), rel, -r.rhs)
            } else {
                (r.coeffs.clone(), r.rel, r.rhs)
            }
        })
        .collect();
    let slacks = norm.iter().filter(|r| r.1 != Rel::Eq).count();
    let arts = norm.iter().filter(|r| r.1 != Rel::Le).count();
    let cols = n + slacks + arts;
    let mut t = Tableau {
        rows: m,
        cols,
        data: vec![0.0; (m + 1) * (cols + 1)],
        basis: vec![0; m],
    };
    let mut s = n;
    let mut a = n + slacks;
    let mut art_rows = Vec::new();
    for (r, (coeffs, rel, rhs)) in norm.iter().enumerate() {
        for (j, &v) in coeffs.iter().enumerate().take(n) {
            *t.at_mut(r, j) = v;
        }
        *t.at_mut(r, cols) = *rhs;
        match rel {
            Rel::Le => {
                *t.at_mut(r, s) = 1.0;
                t.basis[r] = s;
                s += 1;
            }
            Rel::Ge => {
                *t.at_mut(r, s) = -1.0;
                s += 1;
                *t.at_mut(r, a) = 1.0;
                t.basis[r] = a;
                art_rows.push(r);
                a += 1;
            }
            Rel::Eq => {
                *t.at_mut(r, a) = 1.0;
                t.basis[r] = a;
                art_rows.push(r);
                a += 1;
            }
        }
    }

    if arts > 0 {
        // Phase one: maximize -sum(artificials).
        for &r in &art_rows {
            for c in 0..=cols {
                let v = t.at(r, c);
                *t.at_mut(m, c) -= v;
            }
        }
        for c in n + slacks..cols {
            *t.at_mut(m, c) = 0.0;
        }
        if t.optimize(cols) != Some(true) {
            return LpOutcome::Infeasible;
        }
        if t.at(m, cols) < -1e-9 * (1.0 + rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max)) {
            return LpOutcome::Infeasible;
        }
        // Drive remaining artificials out of the basis where possible.
        for r in 0..m {
            if t.basis[r] >= n + slacks {
                if let Some(pc) = (0..n + slacks).find(|&c| t.at(r, c).abs() > TOL) {
                    t.pivot(r, pc);
                }
            }
        }
        for r in 0..m {
            if t.basis[r] >= n + slacks {
                // Redundant row; zero it so it never constrains phase two.
                for c in 0..=cols {
                    *t.at_mut(r, c) = 0.0;
                }
                *t.at_mut(r, t.basis[r]) = 1.0;
            }
        }
    }

    // Phase two objective.
    for c in 0..=cols {
        *t.at_mut(m, c) = 0.0;
    }
    for (j, &v) in c.iter().enumerate() {
        *t.at_mut(m, j) = -v;
    }
    for r in 0..m {
        let b = t.basis[r];
        let f = t.at(m, b);
        if f != 0.0 {
            for col in 0..=cols {
                let v = t.at(r, col);
                *t.at_mut(m, col) -= f * v;
            }
        }
    }
    match t.optimize(n + slacks) {
        Some(true) => {}
        Some(false) => return LpOutcome::Unbounded,
        None => return LpOutcome::Infeasible,
    }
    let mut x = vec![0.0; n];
    for r in 0..m {
        if t.basis[r] < n {
            x[t.basis[r]] = t.at(r, cols);
        }
    }
    let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, value }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[f64], rel: Rel, rhs: f64) -> Row {
        Row {
            coeffs: coeffs.to_vec(),
            rel,
            rhs,
        }
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let out = maximize(
            &[3.0, 5.0],
            &[
                row(&[1.0, 0.0], Rel::Le, 4.0),
                row(&[0.0, 2.0], Rel::Le, 12.0),
                row(&[3.0, 2.0], Rel::Le, 18.0),
            ],
        );
        match out {
            LpOutcome::Optimal { x, value } => {
                assert!((value - 36.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_and_ge_rows() {
        // max -x - y, x + y = 1, x >= 0.25 -> value -1
        let out = maximize(
            &[-1.0, -1.0],
            &[row(&[1.0, 1.0], Rel::Eq, 1.0), row(&[1.0, 0.0], Rel::Ge, 0.25)],
        );
        assert!(matches!(out, LpOutcome::Optimal { value, .. } if (value + 1.0).abs() < 1e-12));
        // min x s.t. x >= 2 written with negative rhs
        let out = maximize(&[-1.0], &[row(&[-1.0], Rel::Le, -2.0)]);
        assert!(matches!(out, LpOutcome::Optimal { value, .. } if (value + 2.0).abs() < 1e-12));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let out = maximize(&[1.0], &[row(&[1.0], Rel::Le, 1.0), row(&[1.0], Rel::Ge, 2.0)]);
        assert_eq!(out, LpOutcome::Infeasible);
        let out = maximize(&[1.0, 0.0], &[row(&[0.0, 1.0], Rel::Le, 1.0)]);
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn minimax_mixture() {
        // max t s.t. t <= mu.c_a for two classes, mu on the simplex.
        // classes: (1, -1) and (-1, 1) -> best mixture (1/2, 1/2), t = 0.
        // variables: mu0, mu1, t' with t = t' - 2.
        let rows = vec![
            row(&[-3.0, -1.0, 1.0], Rel::Le, 0.0),
            row(&[-1.0, -3.0, 1.0], Rel::Le, 0.0),
            row(&[1.0, 1.0, 0.0], Rel::Eq, 1.0),
        ];
        match maximize(&[0.0, 0.0, 1.0], &rows) {
            LpOutcome::Optimal { x, value } => {
                assert!((value - 2.0).abs() < 1e-12);
                assert!((x[0] - 0.5).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }
}
