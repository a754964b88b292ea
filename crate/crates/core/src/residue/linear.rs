//! Dense linear algebra over `F_p`.

use crate::poly::{add_mod, inv_mod, mul_mod, neg_mod};

/// Solve `Σ_j x_j·cols[j] = rhs` over `F_p`. Unknowns without a pivot are
/// set to zero, and pivots are taken left to right, so earlier columns are
/// preferred.
pub(crate) fn solve_mod_p(cols: &[Vec<u64>], rhs: &[u64], p: u64) -> Option<Vec<u64>> {
    let nrows = rhs.len();
    let ncols = cols.len();
    let mut m: Vec<Vec<u64>> = (0..nrows)
        .map(|r| {
            let mut row: Vec<u64> = cols.iter().map(|c| c[r]).collect();
            row.push(rhs[r]);
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(pr) = (r..nrows).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, pr);
        let inv = inv_mod(m[r][c], p).unwrap();
        for x in m[r].iter_mut() {
            *x = mul_mod(*x, inv, p);
        }
        for i in 0..nrows {
            if i != r && m[i][c] != 0 {
                let f = neg_mod(m[i][c], p);
                for j in c..=ncols {
                    let v = mul_mod(f, m[r][j], p);
                    m[i][j] = add_mod(m[i][j], v, p);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if m[r..].iter().any(|row| row[ncols] != 0) {
        return None;
    }
    let mut x = vec![0; ncols];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = m[i][ncols];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // x + y = 1, x + 2y = 0 over F_3  ->  y = 2, x = 2
        let cols = vec![vec![1, 1], vec![1, 2]];
        assert_eq!(solve_mod_p(&cols, &[1, 0], 3), Some(vec![2, 2]));
    }

    #[test]
    fn inconsistent_system() {
        let cols = vec![vec![1, 1]];
        assert_eq!(solve_mod_p(&cols, &[1, 0], 2), None);
    }

    #[test]
    fn free_unknowns_are_zero() {
        let cols = vec![vec![1, 0], vec![0, 0], vec![0, 1]];
        assert_eq!(solve_mod_p(&cols, &[1, 1], 2), Some(vec![1, 0, 1]));
    }
}
