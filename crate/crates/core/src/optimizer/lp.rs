//! Revised simplex for linear programs with a handful of equality rows and
//! many columns: minimise `c.w` subject to `A w = b`, `w >= 0`.
//!
//! Mixtures of strategy points need at most three rows (normalisation, click
//! rate, control fraction), so the basis inverse is recomputed by Gaussian
//! elimination at every pivot. Duals are exposed for column generation.

const PIVOT_TOL: f64 = 1e-9;
const PRICE_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;
const DANTZIG_ITERATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    rows: usize,
    /// Column-major constraint matrix.
    columns: Vec<f64>,
    costs: Vec<f64>,
    rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Nonzero basic columns and their values.
    pub basis: Vec<(usize, f64)>,
    /// Objective of the final phase: the real objective when optimal, the
    /// total artificial mass when infeasible.
    pub objective: f64,
    /// Row duals of the final phase.
    pub duals: Vec<f64>,
}

impl LpSolution {
    /// Reduced cost of a prospective column under the final-phase duals.
    /// Columns carry zero cost in the feasibility phase.
    pub fn reduced_cost(&self, cost: f64, column: &[f64]) -> f64 {
        let c = if self.status == LpStatus::Optimal { cost } else { 0.0 };
        c - self.duals.iter().zip(column).map(|(y, a)| y * a).sum::<f64>()
    }
}

impl LinearProgram {
    pub fn new(rhs: Vec<f64>) -> Self {
        Self {
            rows: rhs.len(),
            columns: Vec::new(),
            costs: Vec::new(),
            rhs,
        }
    }

    pub fn add_column(&mut self, cost: f64, column: &[f64]) -> usize {
        assert_eq!(column.len(), self.rows, "column height must match row count");
        self.columns.extend_from_slice(column);
        self.costs.push(cost);
        self.costs.len() - 1
    }

    pub fn num_columns(&self) -> usize {
        self.costs.len()
    }

    fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.rows..(j + 1) * self.rows]
    }

    pub fn solve(&self) -> LpSolution {
        let m = self.rows;
        let n = self.num_columns();
        // Flip rows so that b >= 0; artificial columns are n..n+m.
        let signs: Vec<f64> = self.rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
        let b: Vec<f64> = self.rhs.iter().zip(&signs).map(|(b, s)| b * s).collect();
        let col = |j: usize| -> Vec<f64> {
            if j < n {
                self.column(j).iter().zip(&signs).map(|(a, s)| a * s).collect()
            } else {
                (0..m).map(|i| if i == j - n { 1.0 } else { 0.0 }).collect()
            }
        };

        let mut basis: Vec<usize> = (n..n + m).collect();

        // Phase I.
        let phase1_cost = |j: usize| if j >= n { 1.0 } else { 0.0 };
        let phase1 = self.iterate(&mut basis, &b, &signs, &col, &phase1_cost, n + m);
        let artificial_mass: f64 = phase1
            .x
            .iter()
            .zip(&basis)
            .filter(|(_, &j)| j >= n)
            .map(|(x, _)| *x)
            .sum();
        if artificial_mass > FEAS_TOL {
            return LpSolution {
                status: LpStatus::Infeasible,
                basis: basic_values(&basis, &phase1.x, n),
                objective: artificial_mass,
                duals: unflip(&phase1.duals, &signs),
            };
        }

        // Pivot zero-level artificials out where a real column can replace them.
        for row in 0..m {
            if basis[row] < n {
                continue;
            }
            let inv = match invert(&basis.iter().map(|&j| col(j)).collect::<Vec<_>>()) {
                Some(inv) => inv,
                None => break,
            };
            for j in 0..n {
                if basis.contains(&j) {
                    continue;
                }
                let a = col(j);
                let d: f64 = (0..m).map(|k| inv[row][k] * a[k]).sum();
                if d.abs() > 1e-9 {
                    basis[row] = j;
                    break;
                }
            }
        }

        let phase2_cost = |j: usize| if j >= n { 0.0 } else { self.costs[j] };
        let phase2 = self.iterate(&mut basis, &b, &signs, &col, &phase2_cost, n);
        let objective = basis
            .iter()
            .zip(&phase2.x)
            .filter(|(&j, _)| j < n)
            .map(|(&j, x)| self.costs[j] * x)
            .sum();
        LpSolution {
            status: LpStatus::Optimal,
            basis: basic_values(&basis, &phase2.x, n),
            objective,
            duals: unflip(&phase2.duals, &signs),
        }
    }

    /// Simplex iterations from a feasible basis; columns `>= enter_limit`
    /// never enter.
    fn iterate(
        &self,
        basis: &mut [usize],
        b: &[f64],
        signs: &[f64],
        col: &dyn Fn(usize) -> Vec<f64>,
        cost: &dyn Fn(usize) -> f64,
        enter_limit: usize,
    ) -> PhaseResult {
        let m = self.rows;
        let n_real = self.num_columns();
        let max_iter = 20 * (enter_limit + m) + 1000;
        let mut iter = 0;
        // A pivot that leaves the basis numerically singular is undone and
        // its column barred from entering again.
        let mut barred: Vec<usize> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        loop {
            let cols: Vec<Vec<f64>> = basis.iter().map(|&j| col(j)).collect();
            let inv = match invert(&cols) {
                Some(inv) => inv,
                None => {
                    let (row, previous) = last.take().expect("starting basis is nonsingular");
                    barred.push(basis[row]);
                    basis[row] = previous;
                    continue;
                }
            };
            let x: Vec<f64> = (0..m)
                .map(|i| (0..m).map(|k| inv[i][k] * b[k]).sum::<f64>().max(0.0))
                .collect();
            let duals: Vec<f64> = (0..m)
                .map(|k| (0..m).map(|i| cost(basis[i]) * inv[i][k]).sum())
                .collect();

            // Dantzig pricing, switching to Bland's rule if it stalls.
            let bland = iter > DANTZIG_ITERATIONS;
            let mut entering = None;
            let mut best = 0.0;
            for j in 0..enter_limit {
                if basis.contains(&j) || barred.contains(&j) {
                    continue;
                }
                let c = cost(j);
                let rc = c - self.priced(j, n_real, &duals, signs);
                if rc < -PRICE_TOL * (1.0 + c.abs()) && rc < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = rc;
                }
            }
            let Some(e) = entering else {
                return PhaseResult { x, duals };
            };
            iter += 1;
            if iter > max_iter {
                return PhaseResult { x, duals };
            }

            let a = col(e);
            let d: Vec<f64> = (0..m).map(|i| (0..m).map(|k| inv[i][k] * a[k]).sum()).collect();
            let d_max = d.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            // Lexicographic ratio test on (x_i, row i of B^-1) / d_i, which
            // rules out cycling on degenerate vertices.
            let key = |i: usize| -> Vec<f64> {
                std::iter::once(x[i] / d[i])
                    .chain((0..m).map(|k| inv[i][k] / d[i]))
                    .collect()
            };
            let mut leave: Option<(usize, Vec<f64>)> = None;
            for (i, &di) in d.iter().enumerate() {
                if di <= PIVOT_TOL * d_max.max(1.0) {
                    continue;
                }
                let ki = key(i);
                let better = match &leave {
                    None => true,
                    Some((_, kl)) => lex_less(&ki, kl),
                };
                if better {
                    leave = Some((i, ki));
                }
            }
            match leave {
                Some((i, _)) => {
                    last = Some((i, basis[i]));
                    basis[i] = e;
                }
                // Unbounded direction; cannot happen with a normalisation row.
                None => return PhaseResult { x, duals },
            }
        }
    }

    /// `y . a_j` for the sign-flipped column `j`, artificial columns included.
    fn priced(&self, j: usize, n_real: usize, duals: &[f64], signs: &[f64]) -> f64 {
        if j < n_real {
            self.column(j)
                .iter()
                .zip(signs)
                .zip(duals)
                .map(|((a, s), y)| a * s * y)
                .sum()
        } else {
            duals[j - n_real]
        }
    }
}

/// Lexicographic comparison with a small relative tolerance per entry.
fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        let tol = 1e-12 * (1.0 + x.abs().max(y.abs()));
        if x < &(y - tol) {
            return true;
        }
        if x > &(y + tol) {
            return false;
        }
    }
    false
}

struct PhaseResult {
    x: Vec<f64>,
    duals: Vec<f64>,
}

fn basic_values(basis: &[usize], x: &[f64], n: usize) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = basis
        .iter()
        .zip(x)
        .filter(|(&j, &v)| j < n && v > 0.0)
        .map(|(&j, &v)| (j, v))
        .collect();
    out.sort_by_key(|&(j, _)| j);
    out
}

fn unflip(duals: &[f64], signs: &[f64]) -> Vec<f64> {
    duals.iter().zip(signs).map(|(y, s)| y * s).collect()
}

/// Inverse of the matrix whose columns are `cols`, by Gauss-Jordan with
/// partial pivoting.
fn invert(cols: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let m = cols.len();
    let mut a: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| cols[j][i]).collect()).collect();
    let scale = a.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut inv: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(c, p);
        inv.swap(c, p);
        let pivot = a[c][c];
        for k in 0..m {
            a[c][k] /= pivot;
            inv[c][k] /= pivot;
        }
        for r in 0..m {
            if r != c {
                let factor = a[r][c];
                if factor != 0.0 {
                    for k in 0..m {
                        a[r][k] -= factor * a[c][k];
                        inv[r][k] -= factor * inv[c][k];
                    }
                }
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force optimum over all bases (feasible vertex enumeration).
    fn brute_force(lp: &LinearProgram) -> Option<f64> {
        let n = lp.num_columns();
        let m = lp.rows;
        let mut best: Option<f64> = None;
        let mut idx = vec![0usize; m];
        fn rec(lp: &LinearProgram, start: usize, depth: usize, idx: &mut Vec<usize>, best: &mut Option<f64>) {
            let m = lp.rows;
            if depth == m {
                let cols: Vec<Vec<f64>> = idx.iter().map(|&j| lp.column(j).to_vec()).collect();
                if let Some(inv) = invert(&cols) {
                    let x: Vec<f64> = (0..m).map(|i| (0..m).map(|k| inv[i][k] * lp.rhs[k]).sum()).collect();
                    if x.iter().all(|&v| v >= -1e-12) {
                        let obj: f64 = idx.iter().zip(&x).map(|(&j, v)| lp.costs[j] * v).sum();
                        if best.is_none_or(|b| obj < b) {
                            *best = Some(obj);
                        }
                    }
                }
                return;
            }
            for j in start..lp.num_columns() {
                idx[depth] = j;
                rec(lp, j + 1, depth + 1, idx, best);
            }
        }
        let _ = (n, m);
        rec(lp, 0, 0, &mut idx, &mut best);
        best
    }

    #[test]
    fn mixture_of_two_points() {
        // weights sum to 1, mean value 0.5; cheapest is the 0/1 pair.
        let mut lp = LinearProgram::new(vec![1.0, 0.5]);
        lp.add_column(1.0, &[1.0, 0.0]);
        lp.add_column(1.0, &[1.0, 1.0]);
        lp.add_column(3.0, &[1.0, 0.5]);
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert_eq!(sol.basis.len(), 2);
        for &(_, w) in &sol.basis {
            assert!((w - 0.5).abs() < 1e-12);
        }
        // Optimal duals price every column non-negatively.
        assert!(sol.reduced_cost(3.0, &[1.0, 0.5]) >= -1e-12);
    }

    #[test]
    fn infeasible_program() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.add_column(0.0, &[1.0, 0.0]);
        lp.add_column(0.0, &[1.0, 1.0]);
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Infeasible);
        // A column that reaches the target improves phase one.
        assert!(sol.reduced_cost(0.0, &[1.0, 3.0]) < 0.0);
    }

    #[test]
    fn matches_vertex_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let mut lp = LinearProgram::new(vec![1.0, 1.0, 0.0]);
            for _ in 0..rng.random_range(3..12) {
                let click: f64 = rng.random_range(0.0..3.0);
                let control: f64 = rng.random_range(-0.5..0.5);
                lp.add_column(rng.random_range(-1.0..1.0), &[1.0, click, control * click]);
            }
            let sol = lp.solve();
            match brute_force(&lp) {
                Some(best) => {
                    assert_eq!(sol.status, LpStatus::Optimal);
                    assert!((sol.objective - best).abs() < 1e-9, "{} vs {}", sol.objective, best);
                    assert!(sol.basis.len() <= 3);
                }
                None => assert_eq!(sol.status, LpStatus::Infeasible),
            }
        }
    }
}
