//! Dense two-phase tableau simplex over any [`Scalar`].
//!
//! Works on `min c.z  s.t.  A z = b, z >= 0, b >= 0`. Every row starts with
//! one identity column (a slack or an artificial); the final tableau entries
//! in those columns are the rows of `B^-1`, which is where the duals come
//! from.

use crate::scalar::Scalar;

pub(crate) enum Outcome<S> {
    Optimal { z: Vec<S>, duals: Vec<S> },
    Infeasible,
    Unbounded,
}

pub(crate) struct StandardForm<S> {
    pub a: Vec<Vec<S>>,
    pub b: Vec<S>,
    pub c: Vec<S>,
    /// For each row, a column that is the unit vector of that row, if any.
    pub unit_col: Vec<Option<usize>>,
}

/// Consecutive degenerate pivots tolerated under the largest-coefficient
/// rule before switching to Bland's rule for the rest of the solve.
const DEGENERATE_STREAK: usize = 8;

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    basis: Vec<usize>,
    ncols: usize,
    bland: bool,
    streak: usize,
}

impl<S: Scalar> Tableau<S> {
    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col].clone();
        if !p.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v = v.clone() / p.clone();
                }
            }
            self.rhs[r] = self.rhs[r].clone() / p;
        }
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for k in 0..self.rows.len() {
            if k == r {
                continue;
            }
            let factor = self.rows[k][col].clone();
            if factor.is_zero() {
                continue;
            }
            let row = &mut self.rows[k];
            for (j, pv) in pivot_row.iter().enumerate() {
                if !pv.is_zero() {
                    row[j] = row[j].clone() - factor.clone() * pv.clone();
                }
            }
            // clear round-off on the pivot column for inexact scalars
            row[col] = S::zero();
            self.rhs[k] = self.rhs[k].clone() - factor * pivot_rhs.clone();
        }
        self.basis[r] = col;
    }

    fn reduced_costs(&self, c: &[S]) -> Vec<S> {
        let mut red = c.to_vec();
        for (k, &bv) in self.basis.iter().enumerate() {
            let cb = &c[bv];
            if cb.is_zero() {
                continue;
            }
            for (j, v) in self.rows[k].iter().enumerate() {
                if !v.is_zero() {
                    red[j] = red[j].clone() - cb.clone() * v.clone();
                }
            }
        }
        red
    }

    /// Runs primal simplex on `c` over the columns allowed by `allowed`.
    /// Returns false when unbounded.
    fn optimize(&mut self, c: &[S], allowed: &dyn Fn(usize) -> bool) -> bool {
        loop {
            let red = self.reduced_costs(c);
            let entering = if self.bland {
                (0..self.ncols).find(|&j| allowed(j) && red[j].is_neg())
            } else {
                let mut best: Option<usize> = None;
                for j in 0..self.ncols {
                    if allowed(j) && red[j].is_neg() && best.is_none_or(|b| red[j] < red[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(col) = entering else {
                return true;
            };

            let mut leave: Option<(usize, S)> = None;
            for k in 0..self.rows.len() {
                let a = &self.rows[k][col];
                if !a.is_pos() {
                    continue;
                }
                let ratio = self.rhs[k].clone() / a.clone();
                leave = match leave {
                    None => Some((k, ratio)),
                    Some((bk, br)) => {
                        if ratio < br || (ratio == br && self.basis[k] < self.basis[bk]) {
                            Some((k, ratio))
                        } else {
                            Some((bk, br))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leave else {
                return false;
            };
            if ratio.near_zero() {
                self.streak += 1;
                if self.streak >= DEGENERATE_STREAK {
                    self.bland = true;
                }
            } else {
                self.streak = 0;
            }
            self.pivot(r, col);
        }
    }
}

pub(crate) fn solve<S: Scalar>(sf: StandardForm<S>) -> Outcome<S> {
    let m = sf.a.len();
    let n = sf.c.len();

    // Artificial columns for rows without a unit column.
    let mut art_for_row = vec![None; m];
    let mut ncols = n;
    for (i, u) in sf.unit_col.iter().enumerate() {
        if u.is_none() {
            art_for_row[i] = Some(ncols);
            ncols += 1;
        }
    }
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for (i, row) in sf.a.into_iter().enumerate() {
        let mut r = row;
        r.resize(ncols, S::zero());
        if let Some(a) = art_for_row[i] {
            r[a] = S::one();
            basis.push(a);
        } else {
            basis.push(sf.unit_col[i].unwrap());
        }
        rows.push(r);
    }
    let id_col: Vec<usize> = (0..m)
        .map(|i| art_for_row[i].or(sf.unit_col[i]).unwrap())
        .collect();

    let mut t = Tableau {
        rows,
        rhs: sf.b,
        basis,
        ncols,
        bland: false,
        streak: 0,
    };

    let is_art = |j: usize| j >= n;
    if ncols > n {
        let mut c1 = vec![S::zero(); ncols];
        for v in c1.iter_mut().skip(n) {
            *v = S::one();
        }
        let all = |_j: usize| true;
        t.optimize(&c1, &all);
        let infeas = t
            .basis
            .iter()
            .zip(&t.rhs)
            .filter(|(&bv, _)| is_art(bv))
            .fold(S::zero(), |acc, (_, v)| acc + v.clone());
        if infeas.is_pos() {
            return Outcome::Infeasible;
        }
        // Drive zero-level artificials out of the basis where possible.
        for k in 0..m {
            if is_art(t.basis[k]) {
                if let Some(j) = (0..n).find(|&j| !t.rows[k][j].near_zero()) {
                    t.pivot(k, j);
                }
            }
        }
        t.bland = false;
        t.streak = 0;
    }

    let mut c2 = sf.c;
    c2.resize(ncols, S::zero());
    let real = |j: usize| j < n;
    if !t.optimize(&c2, &real) {
        return Outcome::Unbounded;
    }

    let mut z = vec![S::zero(); n];
    for (k, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            z[bv] = t.rhs[k].clone();
        }
    }
    let duals = (0..m)
        .map(|i| {
            t.basis
                .iter()
                .enumerate()
                .fold(S::zero(), |acc, (k, &bv)| {
                    acc + c2[bv].clone() * t.rows[k][id_col[i]].clone()
                })
        })
        .collect();
    Outcome::Optimal { z, duals }
}
