//! Dense complex linear algebra for the small systems that show up here
//! (Jacobians, Hessians and jet-matching, all at most ~40 unknowns).

use crate::series::C64;

/// 1-norm (max column sum).
pub fn norm_1(a: &[Vec<C64>]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let m = a[0].len();
    (0..m)
        .map(|j| (0..n).map(|i| a[i][j].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
pub fn solve(a: &[Vec<C64>], b: &[C64]) -> Option<Vec<C64>> {
    let n = a.len();
    let mut m: Vec<Vec<C64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let (piv, piv_norm) = (col..n)
            .map(|r| (r, m[r][col].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if piv_norm < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = m[r][col] / m[col][col];
            if factor.norm() == 0.0 {
                continue;
            }
            for c in col..=n {
                let sub = factor * m[col][c];
                m[r][c] -= sub;
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Matrix inverse via column-by-column solves.
pub fn invert(a: &[Vec<C64>]) -> Option<Vec<Vec<C64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[j] = C64::new(1.0, 0.0);
        cols.push(solve(a, &e)?);
    }
    // cols[j][i] is the (i, j) entry of the inverse
    Some(
        (0..n)
            .map(|i| (0..n).map(|j| cols[j][i]).collect())
            .collect(),
    )
}

pub fn mat_vec(a: &[Vec<C64>], x: &[C64]) -> Vec<C64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(m, v)| m * v).sum())
        .collect()
}

/// Least-squares solve of an (possibly rank-deficient) overdetermined system
/// via normal equations with pivoted elimination; free directions are set to 0.
pub fn least_squares(a: &[Vec<C64>], b: &[C64]) -> Vec<C64> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    // Normal equations: (A^H A) x = A^H b
    let mut ata = vec![vec![C64::new(0.0, 0.0); cols]; cols];
    let mut atb = vec![C64::new(0.0, 0.0); cols];
    for i in 0..cols {
        for j in 0..cols {
            let mut s = C64::new(0.0, 0.0);
            for r in 0..rows {
                s += a[r][i].conj() * a[r][j];
            }
            ata[i][j] = s;
        }
        let mut s = C64::new(0.0, 0.0);
        for r in 0..rows {
            s += a[r][i].conj() * b[r];
        }
        atb[i] = s;
    }
    let scale = norm_1(&ata).max(1e-300);
    let mut x = vec![C64::new(0.0, 0.0); cols];
    let mut used = vec![false; cols];
    // Pivoted Gauss on the normal matrix, skipping numerically-null columns.
    let mut m = ata;
    let mut rhs = atb;
    for _ in 0..cols {
        let (piv, piv_norm) = (0..cols)
            .filter(|&c| !used[c])
            .map(|c| (c, m[c][c].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, 0.0));
        if piv_norm < 1e-13 * scale {
            break;
        }
        used[piv] = true;
        for r in 0..cols {
            if r == piv || m[r][piv].norm() == 0.0 {
                continue;
            }
            let factor = m[r][piv] / m[piv][piv];
            for c in 0..cols {
                let sub = factor * m[piv][c];
                m[r][c] -= sub;
            }
            let sub = factor * rhs[piv];
            rhs[r] -= sub;
        }
    }
    for c in 0..cols {
        if used[c] {
            x[c] = rhs[c] / m[c][c];
        }
    }
    x
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn hermitian_eigenvalues(a: &[Vec<C64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<C64>> = a.to_vec();
    // Hermitianize to guard against coefficient dust.
    for i in 0..n {
        for j in 0..n {
            let avg = (m[i][j] + m[j][i].conj()) * 0.5;
            m[i][j] = avg;
        }
    }
    for _sweep in 0..60 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i][j].norm_sqr();
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq.norm() < 1e-18 {
                    continue;
                }
                // Unitary 2x2 diagonalization of [[app, apq], [apq*, aqq]].
                let app = m[p][p].re;
                let aqq = m[q][q].re;
                let phase = apq / C64::new(apq.norm(), 0.0);
                let theta = 0.5 * (2.0 * apq.norm()).atan2(app - aqq);
                let (s, c) = theta.sin_cos();
                let cs = C64::new(c, 0.0);
                let sn = phase * C64::new(s, 0.0);
                // Apply rotation on rows/cols p, q.
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = mkp * cs + mkq * sn.conj();
                    m[k][q] = -mkp * sn + mkq * cs;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = cs * mpk + sn * mqk;
                    m[q][k] = -sn.conj() * mpk + cs * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i][i].re).collect();
    eig.sort_by(f64::total_cmp);
    eig
}
