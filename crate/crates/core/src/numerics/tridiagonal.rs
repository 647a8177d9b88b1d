//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

/// Solve `A x = rhs` where `A` has sub-diagonal `sub` (length n-1), diagonal
/// `diag` (length n) and super-diagonal `sup` (length n-1).
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let mut x = rhs.to_vec();
    let mut scratch = vec![0.0; diag.len()];
    solve_tridiagonal_in_place(sub, diag, sup, &mut x, &mut scratch)?;
    Ok(x)
}

/// In-place variant: `rhs` is overwritten with the solution, `scratch` must
/// hold at least `diag.len()` entries. No allocation.
pub fn solve_tridiagonal_in_place(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Err(Error::Dimension("empty tridiagonal system".into()));
    }
    if sub.len() != n - 1 || sup.len() != n - 1 || rhs.len() != n || scratch.len() < n {
        return Err(Error::Dimension(format!(
            "tridiagonal sizes: sub {}, diag {n}, sup {}, rhs {}, scratch {}",
            sub.len(),
            sup.len(),
            rhs.len(),
            scratch.len()
        )));
    }

    let pivot_ok = |p: f64| p != 0.0 && p.is_finite();

    let mut pivot = diag[0];
    if !pivot_ok(pivot) {
        return Err(Error::SingularMatrix { index: 0 });
    }
    rhs[0] /= pivot;
    for i in 1..n {
        scratch[i - 1] = sup[i - 1] / pivot;
        pivot = diag[i] - sub[i - 1] * scratch[i - 1];
        if !pivot_ok(pivot) {
            return Err(Error::SingularMatrix { index: i });
        }
        rhs[i] = (rhs[i] - sub[i - 1] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use proptest::strategy::ValueTree;

    fn multiply(sub: &[f64], diag: &[f64], sup: &[f64], x: &[f64]) -> Vec<f64> {
        let n = diag.len();
        (0..n)
            .map(|i| {
                let mut y = diag[i] * x[i];
                if i > 0 {
                    y += sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += sup[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Dense Gaussian elimination with partial pivoting.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn identity() {
        let x = solve_tridiagonal(&[0.0, 0.0], &[1.0; 3], &[0.0, 0.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two() {
        let x = solve_tridiagonal(&[1.0], &[2.0, 2.0], &[1.0], &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_pivot_reports_row() {
        let err = solve_tridiagonal(&[1.0], &[1.0, 1.0], &[1.0], &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { index: 1 }));
        let err = solve_tridiagonal(&[], &[0.0], &[], &[1.0]).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { index: 0 }));
    }

    #[test]
    fn size_mismatch() {
        assert!(matches!(
            solve_tridiagonal(&[1.0], &[1.0, 1.0], &[], &[1.0, 1.0]),
            Err(Error::Dimension(_))
        ));
    }

    fn dominant_system(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(-1.0f64..1.0, n - 1),
            prop::collection::vec(-1.0f64..1.0, n - 1),
            prop::collection::vec(0.1f64..2.0, n),
            prop::collection::vec(prop::bool::ANY, n),
            prop::collection::vec(-10.0f64..10.0, n),
        )
            .prop_map(move |(sub, sup, margin, sign, rhs)| {
                let diag = (0..n)
                    .map(|i| {
                        let off = if i > 0 { sub[i - 1].abs() } else { 0.0 }
                            + if i + 1 < n { sup[i].abs() } else { 0.0 };
                        let d = off + margin[i];
                        if sign[i] { d } else { -d }
                    })
                    .collect();
                (sub, diag, sup, rhs)
            })
    }

    #[test]
    fn random_50_matches_dense_elimination() {
        let mut runner = proptest::test_runner::TestRunner::deterministic();
        for _ in 0..20 {
            let (sub, diag, sup, rhs) = dominant_system(50).new_tree(&mut runner).unwrap().current();
            let x = solve_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
            let mut dense = vec![vec![0.0; 50]; 50];
            for i in 0..50 {
                dense[i][i] = diag[i];
                if i > 0 {
                    dense[i][i - 1] = sub[i - 1];
                }
                if i < 49 {
                    dense[i][i + 1] = sup[i];
                }
            }
            let y = dense_solve(dense, rhs.clone());
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn residual_is_small((sub, diag, sup, rhs) in (2usize..40).prop_flat_map(dominant_system)) {
            let x = solve_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
            let back = multiply(&sub, &diag, &sup, &x);
            let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            let resid = back.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            prop_assert!(resid <= 1e-10 * scale, "residual {resid} vs scale {scale}");
        }
    }
}
