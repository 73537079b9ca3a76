//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Solves `min c·x` subject to rows `a·x (<= | = | >=) b` and `x >= 0`.

pub const PIVOT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub cmp: Cmp,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<f64>, cmp: Cmp, rhs: f64) -> Self {
        Row { coeffs, cmp, rhs }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    /// Minimized.
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible { phase_one_value: f64 },
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<(&[f64], f64)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, *value)),
            _ => None,
        }
    }
}

struct Tableau {
    /// `m` rows of `width + 1` entries; last entry is the rhs.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
    /// Columns that may enter the basis.
    allowed: Vec<bool>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (i, row) in self.t.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (dj, v) in d.iter_mut().zip(row) {
                    *dj -= cb * v;
                }
            }
        }
        d
    }

    fn value(&self, cost: &[f64]) -> f64 {
        self.t
            .iter()
            .zip(&self.basis)
            .map(|(row, &b)| cost[b] * row[self.width])
            .sum()
    }

    /// Runs Bland's rule to optimality. Returns `false` if unbounded.
    fn optimize(&mut self, cost: &[f64]) -> bool {
        let max_iter = 100 * (self.width + self.t.len()) + 1000;
        for _ in 0..max_iter {
            let d = self.reduced_costs(cost);
            let Some(enter) = (0..self.width).find(|&j| self.allowed[j] && d[j] < -PIVOT_TOL)
            else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                let a = row[enter];
                if a > PIVOT_TOL {
                    let ratio = row[self.width] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - PIVOT_TOL
                                || (ratio <= lr + PIVOT_TOL && self.basis[i] < self.basis[li])
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
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
        // Bland's rule terminates; reaching this means numerical trouble.
        panic!("simplex exceeded {max_iter} iterations");
    }
}

pub fn solve(lp: &LinearProgram) -> LpOutcome {
    let n = lp.objective.len();
    let m = lp.rows.len();

    // normalize to nonnegative rhs
    let rows: Vec<Row> = lp
        .rows
        .iter()
        .map(|r| {
            assert_eq!(r.coeffs.len(), n, "row width mismatch");
            if r.rhs < 0.0 {
                let cmp = match r.cmp {
                    Cmp::Le => Cmp::Ge,
                    Cmp::Ge => Cmp::Le,
                    Cmp::Eq => Cmp::Eq,
                };
                Row::new(r.coeffs.iter().map(|v| -v).collect(), cmp, -r.rhs)
            } else {
                r.clone()
            }
        })
        .collect();

    let n_slack = rows.iter().filter(|r| r.cmp != Cmp::Eq).count();
    let n_art = rows.iter().filter(|r| r.cmp != Cmp::Le).count();
    let width = n + n_slack + n_art;
    let art_start = n + n_slack;

    let mut t = vec![vec![0.0; width + 1]; m];
    let mut basis = vec![0; m];
    let (mut s, mut a) = (n, art_start);
    for (i, r) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(&r.coeffs);
        t[i][width] = r.rhs;
        match r.cmp {
            Cmp::Le => {
                t[i][s] = 1.0;
                basis[i] = s;
                s += 1;
            }
            Cmp::Ge => {
                t[i][s] = -1.0;
                s += 1;
                t[i][a] = 1.0;
                basis[i] = a;
                a += 1;
            }
            Cmp::Eq => {
                t[i][a] = 1.0;
                basis[i] = a;
                a += 1;
            }
        }
    }

    let mut tab = Tableau {
        t,
        basis,
        width,
        allowed: vec![true; width],
    };

    if n_art > 0 {
        let mut c1 = vec![0.0; width];
        c1[art_start..].fill(1.0);
        tab.optimize(&c1);
        let v = tab.value(&c1);
        if v > PIVOT_TOL {
            return LpOutcome::Infeasible { phase_one_value: v };
        }
        // drive zero-level artificials out of the basis, dropping redundant rows
        let mut i = 0;
        while i < tab.t.len() {
            if tab.basis[i] >= art_start {
                match (0..art_start).find(|&j| tab.t[i][j].abs() > PIVOT_TOL) {
                    Some(j) => {
                        tab.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        tab.t.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for j in art_start..width {
            tab.allowed[j] = false;
        }
    }

    let mut c2 = vec![0.0; width];
    c2[..n].copy_from_slice(&lp.objective);
    if !tab.optimize(&c2) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (row, &b) in tab.t.iter().zip(&tab.basis) {
        if b < n {
            x[b] = row[width].max(0.0);
        }
    }
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpOutcome::Optimal { x, value }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_max() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let lp = LinearProgram {
            objective: vec![-3.0, -5.0],
            rows: vec![
                Row::new(vec![1.0, 0.0], Cmp::Le, 4.0),
                Row::new(vec![0.0, 2.0], Cmp::Le, 12.0),
                Row::new(vec![3.0, 2.0], Cmp::Le, 18.0),
            ],
        };
        let (x, v) = solve(&lp).optimal().map(|(x, v)| (x.to_vec(), v)).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
        assert!((v + 36.0).abs() < 1e-12);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + y st x + y = 1, x >= 0.3, y >= 0.2
        let lp = LinearProgram {
            objective: vec![1.0, 2.0],
            rows: vec![
                Row::new(vec![1.0, 1.0], Cmp::Eq, 1.0),
                Row::new(vec![1.0, 0.0], Cmp::Ge, 0.3),
                Row::new(vec![0.0, 1.0], Cmp::Ge, 0.2),
            ],
        };
        let (x, v) = solve(&lp).optimal().map(|(x, v)| (x.to_vec(), v)).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 0.2).abs() < 1e-12);
        assert!((v - 1.2).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram {
            objective: vec![1.0],
            rows: vec![
                Row::new(vec![1.0], Cmp::Ge, 2.0),
                Row::new(vec![1.0], Cmp::Le, 1.0),
            ],
        };
        assert!(matches!(solve(&lp), LpOutcome::Infeasible { .. }));

        let lp = LinearProgram {
            objective: vec![-1.0, 0.0],
            rows: vec![Row::new(vec![1.0, -1.0], Cmp::Le, 1.0)],
        };
        assert_eq!(solve(&lp), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_and_negative_rhs_rows() {
        let lp = LinearProgram {
            objective: vec![0.0, 1.0],
            rows: vec![
                Row::new(vec![1.0, 1.0], Cmp::Eq, 1.0),
                Row::new(vec![2.0, 2.0], Cmp::Eq, 2.0),
                Row::new(vec![-1.0, 0.0], Cmp::Ge, -0.75),
            ],
        };
        let (x, v) = solve(&lp).optimal().map(|(x, v)| (x.to_vec(), v)).unwrap();
        assert!((x[0] - 0.75).abs() < 1e-12 && (v - 0.25).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the textbook largest-coefficient rule.
        let lp = LinearProgram {
            objective: vec![-0.75, 150.0, -0.02, 6.0],
            rows: vec![
                Row::new(vec![0.25, -60.0, -0.04, 9.0], Cmp::Le, 0.0),
                Row::new(vec![0.5, -90.0, -0.02, 3.0], Cmp::Le, 0.0),
                Row::new(vec![0.0, 0.0, 1.0, 0.0], Cmp::Le, 1.0),
            ],
        };
        let (_, v) = solve(&lp).optimal().unwrap();
        assert!((v + 0.05).abs() < 1e-12);
    }
}
