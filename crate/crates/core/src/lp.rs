//! Dense two-phase simplex with Bland's rule.
//!
//! Only used for polytope validation (boundedness, nonempty interior) and the
//! Chebyshev center, where problems have at most a few dozen rows.

const EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Unbounded,
    Infeasible,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    banned: Vec<bool>,
}

impl Tableau {
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut r = cost.to_vec();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                for (rj, aij) in r.iter_mut().zip(row) {
                    *rj -= cb * aij;
                }
            }
        }
        r
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        self.rhs[row] /= p;
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row];
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let f = self.rows[i][col];
            if f != 0.0 {
                for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        self.basis[row] = col;
    }

    /// Maximizes `cost·y`; returns `false` when unbounded.
    fn optimize(&mut self, cost: &[f64]) -> bool {
        loop {
            let r = self.reduced_costs(cost);
            let Some(enter) = (0..r.len()).find(|&j| !self.banned[j] && r[j] > EPS) else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][enter];
                if a > EPS {
                    let ratio = self.rhs[i] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - EPS
                                || (ratio <= lr + EPS && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return false,
                Some((row, _)) => self.pivot(row, enter),
            }
        }
    }
}

/// Maximizes `c·y` subject to `A y ≤ b`, `y ≥ 0`.
pub fn maximize_nonneg(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    let n_art = b.iter().filter(|&&bi| bi < 0.0).count();
    let ncol = n + m + n_art;
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = n + m;
    for i in 0..m {
        let mut row = vec![0.0; ncol];
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = sign * a[i][j];
        }
        row[n + i] = sign;
        if b[i] < 0.0 {
            row[art] = 1.0;
            basis.push(art);
            art += 1;
        } else {
            basis.push(n + i);
        }
        rows.push(row);
        rhs.push(sign * b[i]);
    }
    let mut tab = Tableau {
        rows,
        rhs,
        basis,
        banned: vec![false; ncol],
    };

    if n_art > 0 {
        let mut cost = vec![0.0; ncol];
        for c in cost.iter_mut().skip(n + m) {
            *c = -1.0;
        }
        tab.optimize(&cost);
        let infeas: f64 = tab
            .basis
            .iter()
            .zip(&tab.rhs)
            .filter(|(&b, _)| b >= n + m)
            .map(|(_, &r)| r)
            .sum();
        if infeas > 1e-8 {
            return LpOutcome::Infeasible;
        }
        for i in 0..m {
            if tab.basis[i] >= n + m {
                if let Some(j) = (0..n + m).find(|&j| tab.rows[i][j].abs() > EPS) {
                    tab.pivot(i, j);
                }
            }
        }
        for j in n + m..ncol {
            tab.banned[j] = true;
        }
    }

    let mut cost = vec![0.0; ncol];
    cost[..n].copy_from_slice(c);
    if !tab.optimize(&cost) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (&bi, &ri) in tab.basis.iter().zip(&tab.rhs) {
        if bi < n {
            x[bi] = ri;
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    LpOutcome::Optimal { x, value }
}

/// Maximizes `c·x` subject to `A x ≤ b` with `x` free.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let n = c.len();
    let split_c: Vec<f64> = c.iter().copied().chain(c.iter().map(|v| -v)).collect();
    let split_a: Vec<Vec<f64>> = a
        .iter()
        .map(|row| row.iter().copied().chain(row.iter().map(|v| -v)).collect())
        .collect();
    match maximize_nonneg(&split_c, &split_a, b) {
        LpOutcome::Optimal { x, value } => LpOutcome::Optimal {
            x: (0..n).map(|j| x[j] - x[n + j]).collect(),
            value,
        },
        other => other,
    }
}
