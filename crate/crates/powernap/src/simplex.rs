//! A dense two-phase primal simplex over exact rationals.
//!
//! Built for desk-scale problems (a few hundred rows and columns): the
//! tableau is dense, pivots use Dantzig's rule with a switch to Bland's rule
//! after a run of degenerate steps, and every number is a `BigRational`, so
//! results are exact. Duals are recovered from the reduced costs of the
//! initial identity columns, which is what the column generation in the
//! scheduling LP needs.

use num::{BigRational, One, Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// A sparse constraint row `coeffs · x  rel  rhs`.
#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, BigRational)>,
    pub relation: Relation,
    pub rhs: BigRational,
}

/// Minimize `objective · x` subject to the rows and `x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct Problem {
    pub objective: Vec<BigRational>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub value: BigRational,
    pub x: Vec<BigRational>,
    /// one dual per input row, oriented so that a column with coefficients
    /// `a` and cost `c` has reduced cost `c - duals · a`
    pub duals: Vec<BigRational>,
}

#[derive(Debug, Clone)]
pub enum Solved {
    Optimal(Solution),
    Infeasible,
    Unbounded,
}

pub fn solve(problem: &Problem) -> Solved {
    Tableau::new(problem).run()
}

struct Tableau {
    /// rows[r] has width = total columns + 1 (rhs last)
    rows: Vec<Vec<BigRational>>,
    obj: Vec<BigRational>,
    basis: Vec<usize>,
    num_vars: usize,
    /// per input row: (identity column, sign linking its reduced cost to
    /// the dual, accounting for rhs sign normalization)
    dual_cols: Vec<(usize, i32)>,
    artificial_from: usize,
    cost: Vec<BigRational>,
}

impl Tableau {
    fn new(problem: &Problem) -> Self {
        let m = problem.rows.len();
        let n = problem.num_vars();
        // count extra columns
        let mut num_slack = 0;
        let mut num_art = 0;
        for row in &problem.rows {
            match row.relation {
                Relation::Le | Relation::Ge => num_slack += 1,
                Relation::Eq => {}
            }
        }
        // a >= row (after sign normalization) or = row needs an artificial;
        // count after normalization below, so allocate pessimistically
        num_art += m;
        let width = n + num_slack + num_art + 1;

        let mut rows = vec![vec![BigRational::zero(); width]; m];
        let mut basis = vec![usize::MAX; m];
        let mut dual_cols = vec![(usize::MAX, 1); m];
        let mut slack_cursor = n;
        let art_from = n + num_slack;
        let mut art_cursor = art_from;

        for (r, row) in problem.rows.iter().enumerate() {
            let flip = row.rhs.is_negative();
            let sign =
                if flip { -BigRational::one() } else { BigRational::one() };
            for (j, v) in &row.coeffs {
                rows[r][*j] = &sign * v;
            }
            rows[r][width - 1] = &sign * &row.rhs;
            let rel = match (row.relation, flip) {
                (Relation::Eq, _) => Relation::Eq,
                (Relation::Le, false) | (Relation::Ge, true) => Relation::Le,
                (Relation::Ge, false) | (Relation::Le, true) => Relation::Ge,
            };
            let dual_sign = if flip { -1 } else { 1 };
            match rel {
                Relation::Le => {
                    rows[r][slack_cursor] = BigRational::one();
                    basis[r] = slack_cursor;
                    dual_cols[r] = (slack_cursor, -dual_sign);
                    slack_cursor += 1;
                }
                Relation::Ge => {
                    rows[r][slack_cursor] = -BigRational::one();
                    dual_cols[r] = (slack_cursor, dual_sign);
                    slack_cursor += 1;
                    rows[r][art_cursor] = BigRational::one();
                    basis[r] = art_cursor;
                    art_cursor += 1;
                }
                Relation::Eq => {
                    rows[r][art_cursor] = BigRational::one();
                    basis[r] = art_cursor;
                    dual_cols[r] = (art_cursor, -dual_sign);
                    art_cursor += 1;
                }
            }
        }

        let mut cost = vec![BigRational::zero(); width - 1];
        for (j, c) in problem.objective.iter().enumerate() {
            cost[j] = c.clone();
        }
        Tableau {
            rows,
            obj: vec![BigRational::zero(); width],
            basis,
            num_vars: n,
            dual_cols,
            artificial_from: art_from,
            cost,
        }
    }

    fn width(&self) -> usize {
        self.rows.first().map_or(1, Vec::len)
    }

    /// Rebuilds the objective row for the given costs, eliminating the
    /// current basis columns.
    fn install_objective(&mut self, cost_of: impl Fn(usize) -> BigRational) {
        let width = self.width();
        self.obj = vec![BigRational::zero(); width];
        for j in 0..width - 1 {
            self.obj[j] = cost_of(j);
        }
        for r in 0..self.rows.len() {
            let cb = cost_of(self.basis[r]);
            if !cb.is_zero() {
                for j in 0..width {
                    let delta = &cb * &self.rows[r][j];
                    self.obj[j] -= delta;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.width();
        let inv = self.rows[r][c].recip();
        for j in 0..width {
            self.rows[r][j] *= &inv;
        }
        for i in 0..self.rows.len() {
            if i != r && !self.rows[i][c].is_zero() {
                let factor = self.rows[i][c].clone();
                for j in 0..width {
                    let delta = &factor * &self.rows[r][j];
                    self.rows[i][j] -= delta;
                }
            }
        }
        if !self.obj[c].is_zero() {
            let factor = self.obj[c].clone();
            for j in 0..width {
                let delta = &factor * &self.rows[r][j];
                self.obj[j] -= delta;
            }
        }
        self.basis[r] = c;
    }

    /// Primal simplex iterations on the current objective row. Columns at
    /// or past `col_limit` never enter.
    fn iterate(&mut self, col_limit: usize) -> Result<(), Solved> {
        let width = self.width();
        let mut degenerate_run = 0usize;
        loop {
            let bland = degenerate_run > 40;
            let mut entering = None;
            let mut best = BigRational::zero();
            for j in 0..col_limit.min(width - 1) {
                if self.obj[j].is_negative() {
                    if bland {
                        entering = Some(j);
                        break;
                    }
                    if self.obj[j] < best {
                        best = self.obj[j].clone();
                        entering = Some(j);
                    }
                }
            }
            let Some(c) = entering else { return Ok(()) };
            let mut leaving: Option<(usize, BigRational)> = None;
            for r in 0..self.rows.len() {
                if self.rows[r][c].is_positive() {
                    let ratio = &self.rows[r][width - 1] / &self.rows[r][c];
                    let better = match &leaving {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < *lratio
                                || (ratio == *lratio && self.basis[r] < self.basis[*lr])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leaving else { return Err(Solved::Unbounded) };
            if ratio.is_zero() {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
        }
    }

    fn run(mut self) -> Solved {
        let width = self.width();
        // phase 1: minimize the sum of artificials
        let art_from = self.artificial_from;
        let needs_phase1 = self.basis.iter().any(|&b| b >= art_from);
        if needs_phase1 {
            self.install_objective(|j| {
                if j >= art_from {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            });
            if let Err(outcome) = self.iterate(width - 1) {
                return outcome;
            }
            if self.obj[width - 1].is_negative() {
                return Solved::Infeasible;
            }
            // drive basic artificials out where possible
            for r in 0..self.rows.len() {
                if self.basis[r] >= art_from {
                    if let Some(c) =
                        (0..art_from).find(|&c| !self.rows[r][c].is_zero())
                    {
                        self.pivot(r, c);
                    }
                }
            }
        }
        // phase 2: artificial columns are frozen out of the entering set
        let cost = self.cost.clone();
        self.install_objective(|j| cost.get(j).cloned().unwrap_or_else(BigRational::zero));
        if let Err(outcome) = self.iterate(art_from) {
            return outcome;
        }

        let mut x = vec![BigRational::zero(); self.num_vars];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.num_vars {
                x[b] = self.rows[r][width - 1].clone();
            }
        }
        let value = -self.obj[width - 1].clone();
        let duals = self
            .dual_cols
            .iter()
            .map(|&(col, sign)| {
                // reduced cost of the identity column is obj[col] (its
                // phase-2 cost is zero)
                let rc = self.obj[col].clone();
                if sign > 0 {
                    rc
                } else {
                    -rc
                }
            })
            .collect();
        Solved::Optimal(Solution { value, x, duals })
    }
}

impl Problem {
    pub fn num_vars(&self) -> usize {
        let from_rows = self
            .rows
            .iter()
            .flat_map(|r| r.coeffs.iter().map(|&(j, _)| j + 1))
            .max()
            .unwrap_or(0);
        from_rows.max(self.objective.len())
    }
}

/// Convenience constructor for rational constants.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[(usize, i64)], relation: Relation, rhs: i64) -> Row {
        Row {
            coeffs: coeffs.iter().map(|&(j, v)| (j, rat(v, 1))).collect(),
            relation,
            rhs: rat(rhs, 1),
        }
    }

    fn optimal(problem: &Problem) -> Solution {
        match solve(problem) {
            Solved::Optimal(s) => s,
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn minimizes_with_equality_and_bounds() {
        // min x0 + 2 x1  s.t.  x0 + x1 = 3, x0 <= 2
        let p = Problem {
            objective: vec![rat(1, 1), rat(2, 1)],
            rows: vec![
                row(&[(0, 1), (1, 1)], Relation::Eq, 3),
                row(&[(0, 1)], Relation::Le, 2),
            ],
        };
        let s = optimal(&p);
        assert_eq!(s.value, rat(4, 1));
        assert_eq!(s.x, vec![rat(2, 1), rat(1, 1)]);
    }

    #[test]
    fn handles_ge_rows() {
        // min 3 x0 + x1  s.t.  x0 + x1 >= 4, x0 - x1 >= -2
        let p = Problem {
            objective: vec![rat(3, 1), rat(1, 1)],
            rows: vec![
                row(&[(0, 1), (1, 1)], Relation::Ge, 4),
                row(&[(0, 1), (1, -1)], Relation::Ge, -2),
            ],
        };
        let s = optimal(&p);
        assert_eq!(s.value, rat(6, 1));
        assert_eq!(s.x, vec![rat(1, 1), rat(3, 1)]);
    }

    #[test]
    fn exact_fractional_optimum() {
        // min x0 + x1  s.t.  2 x0 + x1 >= 1, x0 + 3 x1 >= 1
        let p = Problem {
            objective: vec![rat(1, 1), rat(1, 1)],
            rows: vec![
                row(&[(0, 2), (1, 1)], Relation::Ge, 1),
                row(&[(0, 1), (1, 3)], Relation::Ge, 1),
            ],
        };
        let s = optimal(&p);
        assert_eq!(s.x, vec![rat(2, 5), rat(1, 5)]);
        assert_eq!(s.value, rat(3, 5));
    }

    #[test]
    fn reports_infeasible() {
        let p = Problem {
            objective: vec![rat(1, 1)],
            rows: vec![
                row(&[(0, 1)], Relation::Le, 1),
                row(&[(0, 1)], Relation::Ge, 2),
            ],
        };
        assert!(matches!(solve(&p), Solved::Infeasible));
    }

    #[test]
    fn reports_unbounded() {
        // min -x0 with x0 free upward
        let p = Problem {
            objective: vec![rat(-1, 1)],
            rows: vec![row(&[(0, 1)], Relation::Ge, 1)],
        };
        assert!(matches!(solve(&p), Solved::Unbounded));
    }

    #[test]
    fn duals_price_columns_correctly() {
        // min 2 x0 + 3 x1  s.t.  x0 + x1 >= 2, x0 >= 0.5
        let p = Problem {
            objective: vec![rat(2, 1), rat(3, 1)],
            rows: vec![
                row(&[(0, 1), (1, 1)], Relation::Ge, 2),
                row(&[(0, 2)], Relation::Ge, 1),
            ],
        };
        let s = optimal(&p);
        // strong duality: y · b = value
        let yb = &s.duals[0] * rat(2, 1) + &s.duals[1] * rat(1, 1);
        assert_eq!(yb, s.value);
        // reduced costs of the structural columns are nonnegative
        let rc0 = rat(2, 1) - &s.duals[0] * rat(1, 1) - &s.duals[1] * rat(2, 1);
        let rc1 = rat(3, 1) - &s.duals[0] * rat(1, 1);
        assert!(!rc0.is_negative() && !rc1.is_negative());
    }

    #[test]
    fn degenerate_problem_terminates() {
        // classic cycling-prone structure; Bland fallback must terminate
        let p = Problem {
            objective: vec![rat(-3, 4), rat(150, 1), rat(-1, 50), rat(6, 1)],
            rows: vec![
                Row {
                    coeffs: vec![
                        (0, rat(1, 4)),
                        (1, rat(-60, 1)),
                        (2, rat(-1, 25)),
                        (3, rat(9, 1)),
                    ],
                    relation: Relation::Le,
                    rhs: rat(0, 1),
                },
                Row {
                    coeffs: vec![
                        (0, rat(1, 2)),
                        (1, rat(-90, 1)),
                        (2, rat(-1, 50)),
                        (3, rat(3, 1)),
                    ],
                    relation: Relation::Le,
                    rhs: rat(0, 1),
                },
                row(&[(2, 1)], Relation::Le, 1),
            ],
        };
        let s = optimal(&p);
        assert_eq!(s.value, rat(-1, 20));
    }
}
