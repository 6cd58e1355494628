//! Full polynomial in the four normalized gait features, fit by ridge least
//! squares.

use nalgebra::{DMatrix, DVector};

use super::ModelError;

pub(crate) const RIDGE_LAMBDA: f64 = 1e-8;
const N_FEATURES: usize = 4;

/// Exponent tuples of every monomial with total degree `<= degree`, graded
/// by degree then lexicographic.
pub(crate) fn monomials(degree: u32) -> Vec<[u32; N_FEATURES]> {
    let mut out = Vec::new();
    for total in 0..=degree {
        let mut e = [0u32; N_FEATURES];
        push_with_total(&mut out, &mut e, 0, total);
    }
    out
}

fn push_with_total(
    out: &mut Vec<[u32; N_FEATURES]>,
    e: &mut [u32; N_FEATURES],
    pos: usize,
    left: u32,
) {
    if pos == N_FEATURES - 1 {
        e[pos] = left;
        out.push(*e);
        return;
    }
    for k in (0..=left).rev() {
        e[pos] = k;
        push_with_total(out, e, pos + 1, left - k);
    }
}

pub(crate) fn n_terms(degree: u32) -> usize {
    monomials(degree).len()
}

/// Writes every monomial value of `x` into `row`.
pub(crate) fn design_row(x: &[f64; N_FEATURES], terms: &[[u32; N_FEATURES]], row: &mut [f64]) {
    let max_deg = terms
        .iter()
        .flat_map(|t| t.iter())
        .copied()
        .max()
        .unwrap_or(0) as usize;
    let mut pows = [[1.0f64; 8]; N_FEATURES];
    for (j, p) in pows.iter_mut().enumerate() {
        let z = x[j];
        for d in 1..=max_deg.min(7) {
            p[d] = p[d - 1] * z;
        }
    }
    for (slot, t) in row.iter_mut().zip(terms) {
        *slot = pows[0][t[0] as usize]
            * pows[1][t[1] as usize]
            * pows[2][t[2] as usize]
            * pows[3][t[3] as usize];
    }
}

pub(crate) fn evaluate(coeffs: &[f64], degree: u32, x: &[f64; N_FEATURES]) -> f64 {
    let terms = monomials(degree);
    let mut row = vec![0.0; terms.len()];
    design_row(x, &terms, &mut row);
    row.iter().zip(coeffs).map(|(a, b)| a * b).sum()
}

/// Solves `min |X b - y|^2 + lambda |b|^2` through the augmented system
/// `[X; sqrt(lambda) I] b = [y; 0]` with an SVD, which stays accurate when
/// `X` is rank deficient. Columns are scaled to unit RMS first so the ridge
/// acts evenly on every monomial.
pub(crate) fn fit(
    inputs: &[[f64; N_FEATURES]],
    targets: &[f64],
    degree: u32,
) -> Result<Vec<f64>, ModelError> {
    let terms = monomials(degree);
    let m = terms.len();
    let n = inputs.len();
    let ridge = RIDGE_LAMBDA.sqrt();
    let mut a = DMatrix::<f64>::zeros(n + m, m);
    let mut b = DVector::<f64>::zeros(n + m);
    let mut row = vec![0.0; m];
    for (i, (x, y)) in inputs.iter().zip(targets).enumerate() {
        design_row(x, &terms, &mut row);
        for (j, v) in row.iter().enumerate() {
            a[(i, j)] = *v;
        }
        b[i] = *y;
    }
    let mut scale = vec![1.0; m];
    for (j, sc) in scale.iter_mut().enumerate() {
        let norm = a.view((0, j), (n, 1)).norm() / (n as f64).sqrt();
        if norm > 0.0 {
            *sc = norm;
            for i in 0..n {
                a[(i, j)] /= norm;
            }
        }
        a[(n + j, j)] = ridge;
    }
    let svd = a.svd(true, true);
    let sol = svd
        .solve(&b, 0.0)
        .map_err(|e| ModelError::Numerical(e.to_string()))?;
    let coeffs: Vec<f64> = sol.iter().zip(&scale).map(|(c, s)| c / s).collect();
    if coeffs.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Numerical(
            "non-finite polynomial coefficient".into(),
        ));
    }
    Ok(coeffs)
}
