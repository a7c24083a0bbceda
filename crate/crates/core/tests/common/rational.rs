//! Exact LP optimum by enumerating vertices in rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use noma_video::lp::{Constraint, LinearProgram, Relation};

/// An integer LP `max c·x` s.t. rows, `x ⪰ 0`.
pub struct IntLp {
    pub c: Vec<i64>,
    /// `(a, relation, b)`.
    pub rows: Vec<(Vec<i64>, Relation, i64)>,
}

impl IntLp {
    pub fn to_lp(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(self.c.iter().map(|&x| x as f64).collect());
        for (a, rel, b) in &self.rows {
            let a: Vec<f64> = a.iter().map(|&x| x as f64).collect();
            lp.push(match rel {
                Relation::Le => Constraint::le(a, *b as f64),
                Relation::Ge => Constraint::ge(a, *b as f64),
                Relation::Eq => Constraint::eq(a, *b as f64),
            });
        }
        lp
    }
}

/// Random bounded LP over `n` variables with small integer data. A budget
/// row keeps it bounded; one `≥` row forces a nontrivial phase one.
pub fn random_lp(seed: u64, n: usize, m: usize) -> IntLp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = (0..n).map(|_| rng.random_range(-3..=9)).collect();
    let mut rows = Vec::new();
    for _ in 0..m {
        let a = (0..n).map(|_| rng.random_range(-4..=8)).collect();
        rows.push((a, Relation::Le, rng.random_range(0..=20)));
    }
    rows.push((vec![1; n], Relation::Le, 25));
    rows.push(((0..n).map(|_| rng.random_range(0..=3)).collect(), Relation::Ge, rng.random_range(1..=4)));
    IntLp { c, rows }
}

fn q(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// Solves the square system `a·x = b` exactly; `None` if singular.
fn solve(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[col][col];
                for k in col..n {
                    let t = &f * &a[col][k];
                    a[r][k] -= t;
                }
                let t = &f * &b[col];
                b[r] -= t;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Exact optimum, or `None` when no vertex is feasible.
pub fn vertex_optimum(lp: &IntLp) -> Option<f64> {
    let n = lp.c.len();
    // Every row as a hyperplane, then the nonnegativity planes.
    let mut planes: Vec<(Vec<BigRational>, BigRational)> =
        lp.rows.iter().map(|(a, _, b)| (a.iter().map(|&x| q(x)).collect(), q(*b))).collect();
    for j in 0..n {
        let mut e = vec![q(0); n];
        e[j] = q(1);
        planes.push((e, q(0)));
    }
    let feasible = |x: &[BigRational]| -> bool {
        x.iter().all(|v| !v.is_negative())
            && lp.rows.iter().all(|(a, rel, b)| {
                let lhs: BigRational = a.iter().zip(x).map(|(&ai, xi)| q(ai) * xi).sum();
                match rel {
                    Relation::Le => lhs <= q(*b),
                    Relation::Ge => lhs >= q(*b),
                    Relation::Eq => lhs == q(*b),
                }
            })
    };
    let mut best: Option<BigRational> = None;
    for active in combinations(planes.len(), n) {
        let a = active.iter().map(|&i| planes[i].0.clone()).collect();
        let b = active.iter().map(|&i| planes[i].1.clone()).collect();
        let Some(x) = solve(a, b) else { continue };
        if !feasible(&x) {
            continue;
        }
        let obj: BigRational = lp.c.iter().zip(&x).map(|(&ci, xi)| q(ci) * xi).sum();
        if best.as_ref().is_none_or(|b| obj > *b) {
            best = Some(obj);
        }
    }
    best.map(|b| b.to_f64().expect("finite rational"))
}
