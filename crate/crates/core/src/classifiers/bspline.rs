//! Clamped B-spline basis on `[0, 1]` and its difference penalty.

/// Full clamped knot vector: `degree + 1` copies of each boundary around the
/// interior knots.
pub(crate) fn knot_vector(interior: &[f64], degree: usize) -> Vec<f64> {
    let mut t = vec![0.0; degree + 1];
    t.extend_from_slice(interior);
    t.extend(std::iter::repeat_n(1.0, degree + 1));
    t
}

pub(crate) fn basis_len(interior: &[f64], degree: usize) -> usize {
    interior.len() + degree + 1
}

/// All basis function values at `x` (clamped into `[0, 1]`), via Cox-de Boor.
pub(crate) fn basis(interior: &[f64], degree: usize, x: f64) -> Vec<f64> {
    let t = knot_vector(interior, degree);
    let k = basis_len(interior, degree);
    let x = x.clamp(0.0, 1.0);

    // Knot span containing x; x == 1 belongs to the last non-empty span.
    let span = if x >= 1.0 {
        k - 1
    } else {
        (degree..k).rfind(|&i| t[i] <= x).unwrap_or(degree)
    };

    let mut out = vec![0.0; k];
    let mut n = vec![0.0; degree + 1];
    n[0] = 1.0;
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    for j in 1..=degree {
        left[j] = x - t[span + 1 - j];
        right[j] = t[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let tmp = if denom > 0.0 { n[r] / denom } else { 0.0 };
            n[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        n[j] = saved;
    }
    for (j, v) in n.into_iter().enumerate() {
        out[span - degree + j] = v;
    }
    out
}

/// Greville abscissae: knot averages at which a spline with coefficients
/// equal to the abscissae reproduces `f(x) = x`.
pub(crate) fn greville(interior: &[f64], degree: usize) -> Vec<f64> {
    let t = knot_vector(interior, degree);
    let d = degree.max(1);
    (0..basis_len(interior, degree))
        .map(|j| t[j + 1..=j + d].iter().sum::<f64>() / d as f64)
        .collect()
}

/// Second-difference operator on spline coefficients, taken with respect to
/// the Greville abscissae and rescaled by their mean spacing. On uniform
/// knots this is the ordinary P-spline second difference; on any knots its
/// null space is exactly the coefficient vectors of affine functions.
pub(crate) fn difference_matrix(interior: &[f64], degree: usize) -> Vec<Vec<f64>> {
    let g = greville(interior, degree);
    let k = g.len();
    if k < 3 {
        return Vec::new();
    }
    let mean_gap = (g[k - 1] - g[0]) / (k - 1) as f64;
    (1..k - 1)
        .map(|j| {
            let mut row = vec![0.0; k];
            let (hl, hr) = (g[j] - g[j - 1], g[j + 1] - g[j]);
            row[j - 1] = mean_gap / hl;
            row[j] = -mean_gap * (1.0 / hl + 1.0 / hr);
            row[j + 1] = mean_gap / hr;
            row
        })
        .collect()
}
