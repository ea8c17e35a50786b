//! Dense linear-algebra helpers shared across modules.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::math;

pub type Mat = DMatrix<f64>;

/// Entrywise max-norm; zero for empty matrices.
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Singular values sorted in descending order.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Operator 2-norm.
pub fn spectral_norm(m: &Mat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Modified Gram–Schmidt with one reorthogonalization pass. Columns whose
/// residual norm falls below `tol` times their original norm are dropped.
/// Column order and orientation of already-orthonormal input are preserved.
pub fn orthonormalize(cols: &Mat, tol: f64) -> Mat {
    let n = cols.nrows();
    let mut out: Vec<nalgebra::DVector<f64>> = Vec::new();
    for j in 0..cols.ncols() {
        let mut v = cols.column(j).into_owned();
        let orig = v.norm();
        if orig == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &out {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let r = v.norm();
        if r > tol * orig {
            out.push(v / r);
        }
    }
    let mut m = Mat::zeros(n, out.len());
    for (j, q) in out.iter().enumerate() {
        m.set_column(j, q);
    }
    m
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// (orthonormal) columns of `basis`.
pub fn orthogonal_complement(basis: &Mat) -> Mat {
    let n = basis.nrows();
    let k = basis.ncols();
    let mut stacked = Mat::zeros(n, k + n);
    stacked.view_mut((0, 0), (n, k)).copy_from(basis);
    stacked.view_mut((0, k), (n, n)).fill_with_identity();
    let q = orthonormalize(&stacked, 1e-8);
    let keep = q.ncols().saturating_sub(k);
    q.columns(q.ncols() - keep, keep).into_owned()
}

/// Principal angles in radians between the column spans of two
/// orthonormal bases, ascending. Small angles come from sines, large ones
/// from cosines.
pub fn principal_angles(a: &Mat, b: &Mat) -> Vec<f64> {
    let r = a.ncols().min(b.ncols());
    if r == 0 {
        return Vec::new();
    }
    let cosines = singular_values(&(a.transpose() * b));
    // residual of the smaller-dimensional space against the other
    let (small, big) = if a.ncols() <= b.ncols() { (a, b) } else { (b, a) };
    let resid = small - big * (big.transpose() * small);
    let mut sines = singular_values(&resid);
    sines.reverse();
    (0..r)
        .map(|i| {
            let c = cosines.get(i).copied().unwrap_or(0.0).clamp(0.0, 1.0);
            let s = sines.get(i).copied().unwrap_or(1.0).clamp(0.0, 1.0);
            if c * c < 0.5 {
                math::acos(c)
            } else {
                math::asin(s)
            }
        })
        .collect()
}

/// Right singular vectors for the `count` smallest singular values, together
/// with the largest of those singular values.
pub fn null_space(m: &Mat, count: usize) -> (Mat, f64) {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let mut out = Mat::zeros(n, count);
    let mut worst = 0.0_f64;
    for (c, &i) in idx.iter().take(count).enumerate() {
        out.set_column(c, &vt.row(i).transpose());
        worst = worst.max(svd.singular_values[i]);
    }
    (out, worst)
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm(m: &Mat) -> Mat {
    let n = m.nrows();
    let norm = m.iter().map(|x| x.abs()).sum::<f64>().max(max_abs(m));
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = m * scale;
    let mut term = Mat::identity(n, n);
    let mut sum = Mat::identity(n, n);
    for k in 1..=20 {
        term = &term * &a / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `J = [[0, I], [-I, 0]]` of size `2d`.
pub fn jmat(d: usize) -> Mat {
    let mut j = Mat::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = 1.0;
        j[(d + i, i)] = -1.0;
    }
    j
}

/// Exact inverse of a symplectic matrix: `-J Aᵀ J`.
pub fn symplectic_inverse(a: &Mat) -> Mat {
    let j = jmat(a.nrows() / 2);
    -(&j * a.transpose() * &j)
}

/// Symplectic direct sum: the first factor acts on `(q_1..q_a, p_1..p_a)`
/// of the combined coordinates, the second on the remaining pairs.
pub fn direct_sum(a: &Mat, b: &Mat) -> Mat {
    let da = a.nrows() / 2;
    let db = b.nrows() / 2;
    let d = da + db;
    let ia = |i: usize| if i < da { i } else { d + (i - da) };
    let ib = |i: usize| if i < db { da + i } else { d + da + (i - db) };
    let mut m = Mat::zeros(2 * d, 2 * d);
    for r in 0..2 * da {
        for c in 0..2 * da {
            m[(ia(r), ia(c))] = a[(r, c)];
        }
    }
    for r in 0..2 * db {
        for c in 0..2 * db {
            m[(ib(r), ib(c))] = b[(r, c)];
        }
    }
    m
}

/// Planar rotation `[[cos θ, -sin θ], [sin θ, cos θ]]`.
pub fn rotation(theta: f64) -> Mat {
    let (s, c) = (math::sin(theta), math::cos(theta));
    Mat::from_row_slice(2, 2, &[c, -s, s, c])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_rotation_generator() {
        let g = Mat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]) * 0.7;
        let e = expm(&g);
        assert!(max_abs(&(e - rotation(0.7))) < 1e-14);
    }

    #[test]
    fn complement_of_coordinate_plane() {
        let mut b = Mat::zeros(4, 2);
        b[(0, 0)] = 1.0;
        b[(2, 1)] = 1.0;
        let c = orthogonal_complement(&b);
        assert_eq!(c.ncols(), 2);
        assert_eq!(c[(1, 0)], 1.0);
        assert_eq!(c[(3, 1)], 1.0);
    }

    #[test]
    fn angles_between_lines() {
        let a = Mat::from_column_slice(2, 1, &[1.0, 0.0]);
        let s = 1.0 / math::sqrt(2.0);
        let b = Mat::from_column_slice(2, 1, &[s, s]);
        let ang = principal_angles(&a, &b);
        assert!((ang[0] - PI_4).abs() < 1e-15);
        let tiny = Mat::from_column_slice(2, 1, &[math::cos(1e-9), math::sin(1e-9)]);
        assert!((principal_angles(&a, &tiny)[0] - 1e-9).abs() < 1e-20);
    }

    const PI_4: f64 = core::f64::consts::FRAC_PI_4;

    #[test]
    fn direct_sum_interleaves_pairs() {
        let a = Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let b = rotation(0.3);
        let m = direct_sum(&a, &b);
        assert_eq!(m[(0, 0)], 2.0);
        assert_eq!(m[(0, 2)], 1.0);
        assert_eq!(m[(2, 0)], 1.0);
        assert_eq!(m[(1, 1)], b[(0, 0)]);
        assert_eq!(m[(3, 1)], b[(1, 0)]);
    }
}
