//! Dense two-phase simplex over small LPs.
//!
//! Problems are stated as maximization with equality rows, `<=` rows, and
//! per-variable box bounds. Variables are shifted by their lower bounds so
//! the tableau works on nonnegative variables; finite upper bounds become
//! extra `<=` rows. Bland's rule keeps pivoting deterministic and cycle
//! free, which is all the desk-scale callers need.

// Tableau math is index arithmetic; iterator rewrites would obscure it.
#![allow(clippy::needless_range_loop)]

/// Feasibility tolerance on constraint satisfaction and phase-1 residuals.
pub const FEAS_TOL: f64 = 1e-8;

const PIVOT_EPS: f64 = 1e-10;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Objective coefficients; the solver maximizes `maximize . x`.
    pub maximize: Vec<f64>,
    /// Equality rows `(coeffs, rhs)`.
    pub eq: Vec<(Vec<f64>, f64)>,
    /// Inequality rows `coeffs . x <= rhs`.
    pub le: Vec<(Vec<f64>, f64)>,
    /// Per-variable bounds `[lo, hi]`; `lo` must be finite, `hi` may be
    /// `f64::INFINITY`.
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new(maximize: Vec<f64>) -> Self {
        let n = maximize.len();
        Self {
            maximize,
            eq: Vec::new(),
            le: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.maximize.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("malformed linear program: {0}")]
    BadShape(String),
    #[error("simplex pivot limit exceeded")]
    IterationLimit,
}

#[derive(Clone, Copy, PartialEq)]
enum Relation {
    Le,
    Ge,
    Eq,
}

struct Row {
    coeffs: Vec<f64>,
    rhs: f64,
    relation: Relation,
}

/// Solves the LP to optimality. Deterministic for a fixed input.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.num_vars();
    if lp.bounds.len() != n {
        return Err(LpError::BadShape(format!(
            "{} bounds for {n} variables",
            lp.bounds.len()
        )));
    }
    for (row, _) in lp.eq.iter().chain(&lp.le) {
        if row.len() != n {
            return Err(LpError::BadShape(format!(
                "constraint row has {} coefficients, expected {n}",
                row.len()
            )));
        }
    }
    let mut shift = Vec::with_capacity(n);
    for &(lo, hi) in &lp.bounds {
        if !lo.is_finite() || hi.is_nan() {
            return Err(LpError::BadShape(format!("bad bounds [{lo}, {hi}]")));
        }
        if lo > hi {
            return Err(LpError::Infeasible);
        }
        shift.push(lo);
    }

    // Rows in shifted coordinates y = x - lo >= 0, with nonnegative rhs.
    let dot = |row: &[f64]| -> f64 { row.iter().zip(&shift).map(|(a, s)| a * s).sum() };
    let mut rows: Vec<Row> = Vec::new();
    let mut push = |coeffs: Vec<f64>, rhs: f64, relation: Relation| {
        let mut row = Row {
            coeffs,
            rhs,
            relation,
        };
        if row.rhs < 0.0 {
            row.rhs = -row.rhs;
            for c in &mut row.coeffs {
                *c = -*c;
            }
            row.relation = match row.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        rows.push(row);
    };
    for (row, rhs) in &lp.eq {
        push(row.clone(), rhs - dot(row), Relation::Eq);
    }
    for (row, rhs) in &lp.le {
        push(row.clone(), rhs - dot(row), Relation::Le);
    }
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        if hi.is_finite() {
            let mut row = vec![0.0; n];
            row[j] = 1.0;
            push(row, hi - lo, Relation::Le);
        }
    }

    let m = rows.len();
    let slack_count = rows.iter().filter(|r| r.relation == Relation::Le).count();
    let surplus_count = rows.iter().filter(|r| r.relation == Relation::Ge).count();
    let artificial_count = m - slack_count;
    let total = n + slack_count + surplus_count + artificial_count;
    let slack_offset = n;
    let surplus_offset = n + slack_count;
    let artificial_offset = surplus_offset + surplus_count;

    let mut tableau = vec![vec![0.0; total + 1]; m + 1];
    let mut basis = vec![0usize; m];
    let (mut si, mut gi, mut ai) = (0usize, 0usize, 0usize);
    for (i, row) in rows.iter().enumerate() {
        tableau[i][..n].copy_from_slice(&row.coeffs);
        tableau[i][total] = row.rhs;
        match row.relation {
            Relation::Le => {
                let col = slack_offset + si;
                si += 1;
                tableau[i][col] = 1.0;
                basis[i] = col;
            }
            Relation::Ge => {
                tableau[i][surplus_offset + gi] = -1.0;
                gi += 1;
                let col = artificial_offset + ai;
                ai += 1;
                tableau[i][col] = 1.0;
                basis[i] = col;
            }
            Relation::Eq => {
                let col = artificial_offset + ai;
                ai += 1;
                tableau[i][col] = 1.0;
                basis[i] = col;
            }
        }
    }

    // Phase 1: maximize -(sum of artificials).
    for col in artificial_offset..total {
        tableau[m][col] = -1.0;
    }
    for i in 0..m {
        if basis[i] >= artificial_offset {
            for col in 0..=total {
                let v = tableau[i][col];
                tableau[m][col] += v;
            }
        }
    }
    let mut pivots = 0usize;
    iterate(&mut tableau, &mut basis, |col| col < total, &mut pivots)?;
    // The objective row carries the negated objective, so a positive
    // residual means some artificial is still nonzero.
    if tableau[m][total] > FEAS_TOL {
        return Err(LpError::Infeasible);
    }

    // Phase 2: the real objective over decision variables, artificials
    // barred from re-entering.
    for col in 0..total {
        tableau[m][col] = if col < n { lp.maximize[col] } else { 0.0 };
    }
    tableau[m][total] = 0.0;
    for i in 0..m {
        let b = basis[i];
        if b < n {
            let factor = tableau[m][b];
            if factor.abs() > PIVOT_EPS {
                for col in 0..=total {
                    let v = tableau[i][col];
                    tableau[m][col] -= factor * v;
                }
            }
        }
    }
    iterate(
        &mut tableau,
        &mut basis,
        |col| col < artificial_offset,
        &mut pivots,
    )?;

    let mut x = shift;
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] += tableau[i][total];
        }
    }
    let value = lp.maximize.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { value, x })
}

fn iterate(
    tableau: &mut [Vec<f64>],
    basis: &mut [usize],
    allow: impl Fn(usize) -> bool,
    pivots: &mut usize,
) -> Result<(), LpError> {
    let m = basis.len();
    let total = tableau[0].len() - 1;
    loop {
        if *pivots > MAX_PIVOTS {
            return Err(LpError::IterationLimit);
        }
        // Bland's rule: first improving column, ratio ties to the lowest
        // basis index.
        let entering = (0..total).find(|&col| allow(col) && tableau[m][col] > PIVOT_EPS);
        let Some(entering) = entering else {
            return Ok(());
        };
        let mut leaving: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for row in 0..m {
            let a = tableau[row][entering];
            if a > PIVOT_EPS {
                let ratio = tableau[row][total] / a;
                let better = ratio < best_ratio - 1e-12
                    || ((ratio - best_ratio).abs() <= 1e-12
                        && leaving.is_none_or(|l| basis[row] < basis[l]));
                if better {
                    best_ratio = ratio;
                    leaving = Some(row);
                }
            }
        }
        let Some(leaving) = leaving else {
            return Err(LpError::Unbounded);
        };
        pivot(tableau, basis, leaving, entering);
        *pivots += 1;
    }
}

fn pivot(tableau: &mut [Vec<f64>], basis: &mut [usize], leaving: usize, entering: usize) {
    let m = basis.len();
    let total = tableau[0].len() - 1;
    let pv = tableau[leaving][entering];
    for col in 0..=total {
        tableau[leaving][col] /= pv;
    }
    for row in 0..=m {
        if row == leaving {
            continue;
        }
        let factor = tableau[row][entering];
        if factor.abs() < PIVOT_EPS {
            continue;
        }
        for col in 0..=total {
            let v = tableau[leaving][col];
            tableau[row][col] -= factor * v;
        }
    }
    basis[leaving] = entering;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizes_single_boxed_variable() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.bounds = vec![(0.0, 1.0)];
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-9);
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn respects_coupling_inequality() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.bounds = vec![(0.0, 1.0); 2];
        lp.le.push((vec![1.0, 1.0], 1.0));
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_equalities() {
        let mut lp = LinearProgram::new(vec![1.0, 0.0]);
        lp.bounds = vec![(0.0, 1.0); 2];
        lp.eq.push((vec![1.0, 1.0], 1.0));
        lp.eq.push((vec![1.0, 1.0], 2.0));
        assert_eq!(solve_lp(&lp), Err(LpError::Infeasible));
    }

    #[test]
    fn detects_unbounded_direction() {
        let lp = LinearProgram::new(vec![1.0]);
        assert_eq!(solve_lp(&lp), Err(LpError::Unbounded));
    }

    #[test]
    fn handles_negative_lower_bounds() {
        let mut lp = LinearProgram::new(vec![-1.0]);
        lp.bounds = vec![(-2.0, 3.0)];
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.x[0] + 2.0).abs() < 1e-9);
        assert!((sol.value - 2.0).abs() < 1e-9);
    }

    /// Solves a square system by Gaussian elimination; `None` when
    /// numerically singular.
    fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a
            .iter()
            .zip(b)
            .map(|(row, &rhs)| {
                let mut r = row.clone();
                r.push(rhs);
                r
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
            if m[pivot][col].abs() < 1e-9 {
                return None;
            }
            m.swap(col, pivot);
            for row in 0..n {
                if row != col {
                    let f = m[row][col] / m[col][col];
                    for k in col..=n {
                        let v = m[col][k];
                        m[row][k] -= f * v;
                    }
                }
            }
        }
        Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
    }

    /// Brute-force vertex enumeration over the box constraints plus the
    /// random rows: every vertex is the intersection of n active
    /// constraints.
    #[test]
    fn agrees_with_vertex_enumeration_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for case in 0..150 {
            let n = rng.random_range(1..=4);
            let m = rng.random_range(1..=6);
            let mut lp = LinearProgram::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
            lp.bounds = vec![(0.0, 1.0); n];
            for _ in 0..m {
                let row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                lp.le.push((row, rng.random_range(-0.3..1.5)));
            }

            // All constraints as rows: le rows, then x_i >= 0, then x_i <= 1.
            let mut rows: Vec<(Vec<f64>, f64)> = lp.le.clone();
            for i in 0..n {
                let mut low = vec![0.0; n];
                low[i] = -1.0;
                rows.push((low, 0.0));
                let mut high = vec![0.0; n];
                high[i] = 1.0;
                rows.push((high, 1.0));
            }
            let feasible = |x: &[f64]| {
                rows.iter().all(|(row, rhs)| {
                    row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() <= rhs + 1e-7
                })
            };
            let mut best: Option<f64> = None;
            let total = rows.len();
            let mut picks: Vec<usize> = (0..n).collect();
            loop {
                let a: Vec<Vec<f64>> = picks.iter().map(|&i| rows[i].0.clone()).collect();
                let b: Vec<f64> = picks.iter().map(|&i| rows[i].1).collect();
                if let Some(x) = solve_square(&a, &b) {
                    if feasible(&x) {
                        let value = lp.maximize.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
                        best = Some(best.map_or(value, |b: f64| b.max(value)));
                    }
                }
                // Next combination.
                let mut i = n;
                let mut done = true;
                while i > 0 {
                    i -= 1;
                    if picks[i] != i + total - n {
                        picks[i] += 1;
                        for j in i + 1..n {
                            picks[j] = picks[j - 1] + 1;
                        }
                        done = false;
                        break;
                    }
                }
                if done {
                    break;
                }
            }

            match (solve_lp(&lp), best) {
                (Ok(sol), Some(oracle)) => assert!(
                    (sol.value - oracle).abs() < 1e-6,
                    "case {case}: simplex {} vs oracle {oracle}",
                    sol.value
                ),
                (Err(LpError::Infeasible), None) => {}
                (got, oracle) => panic!("case {case}: simplex {got:?} vs oracle {oracle:?}"),
            }
        }
    }

    #[test]
    fn equality_with_negative_rhs() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.bounds = vec![(-1.0, 1.0); 2];
        lp.eq.push((vec![1.0, 1.0], -1.0));
        let sol = solve_lp(&lp).unwrap();
        // x + 2y = -1 + y on the constraint, so the optimum is x = -1, y = 0.
        assert!((sol.value + 1.0).abs() < 1e-9);
        assert!((sol.x[0] + 1.0).abs() < 1e-9);
    }
}
