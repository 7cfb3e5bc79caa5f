use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Centered moving average with edge-replicate padding.
pub fn moving_average(y: &[f64], w: usize) -> Result<Vec<f64>> {
    if w == 0 || w.is_multiple_of(2) {
        return Err(Error::config(format!("moving-average window must be odd and >= 1, got {w}")));
    }
    let n = y.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let h = (w / 2) as isize;
    let at = |i: isize| y[i.clamp(0, n as isize - 1) as usize];
    Ok((0..n as isize).map(|t| (-h..=h).map(|k| at(t + k)).sum::<f64>() / w as f64).collect())
}

/// Least-squares smoothing matrix `A (A^T A)^-1 A^T` for a window of `w`
/// samples and polynomial `order`. Row `i` estimates sample `i` of the window.
pub fn savgol_hat(w: usize, order: usize) -> Result<DMatrix<f64>> {
    if w.is_multiple_of(2) || order >= w {
        return Err(Error::config(format!("Savitzky-Golay needs an odd window larger than the order (w={w}, order={order})")));
    }
    let m = (w / 2) as f64;
    let a = DMatrix::from_fn(w, order + 1, |i, j| (i as f64 - m).powi(j as i32));
    let ata = a.transpose() * &a;
    let inv = ata.try_inverse().ok_or_else(|| Error::Numerical("singular Savitzky-Golay normal matrix".into()))?;
    Ok(&a * inv * a.transpose())
}

/// Convolution coefficients for the window centre.
pub fn savgol_coefficients(w: usize, order: usize) -> Result<Vec<f64>> {
    let hat = savgol_hat(w, order)?;
    Ok(hat.row(w / 2).iter().copied().collect())
}

/// Savitzky-Golay smoothing. The first and last `w/2` samples are fitted
/// from the leading and trailing full windows.
pub fn savitzky_golay(y: &[f64], w: usize, order: usize) -> Result<Vec<f64>> {
    let n = y.len();
    if n < w {
        return Err(Error::contract(format!("Savitzky-Golay window {w} exceeds series length {n}")));
    }
    let hat = savgol_hat(w, order)?;
    let h = w / 2;
    let dot = |row: usize, start: usize| (0..w).map(|k| hat[(row, k)] * y[start + k]).sum::<f64>();
    Ok((0..n)
        .map(|t| {
            if t < h {
                dot(t, 0)
            } else if t + h >= n {
                dot(t - (n - w), n - w)
            } else {
                dot(h, t - h)
            }
        })
        .collect())
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len().max(1) as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
}

/// Process and measurement variances estimated from the data:
/// `q = var(diff y) / 2`, `r = var(diff^2 y) / 6` (white-noise share of
/// the second difference).
pub fn estimate_kalman_variances(y: &[f64]) -> (f64, f64) {
    let d1: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let d2: Vec<f64> = d1.windows(2).map(|w| w[1] - w[0]).collect();
    let floor = 1e-12 * variance(y).max(f64::MIN_POSITIVE);
    ((variance(&d1) / 2.0).max(floor), (variance(&d2) / 6.0).max(floor))
}

/// Causal random-walk Kalman filter.
pub fn kalman_1d(y: &[f64], q: f64, r: f64) -> Result<Vec<f64>> {
    if !(q > 0.0 && r > 0.0) {
        return Err(Error::config(format!("Kalman variances must be positive (q={q}, r={r})")));
    }
    let Some(&first) = y.first() else { return Ok(Vec::new()) };
    let mut x = first;
    let mut p = r;
    let mut out = Vec::with_capacity(y.len());
    out.push(x);
    for &z in &y[1..] {
        let prior = p + q;
        let k = prior / (prior + r);
        x += k * (z - x);
        p = (1.0 - k) * prior;
        out.push(x);
    }
    Ok(out)
}

/// Steady-state prior variance of [`kalman_1d`].
pub fn kalman_steady_prior(q: f64, r: f64) -> f64 {
    (q + (q * q + 4.0 * q * r).sqrt()) / 2.0
}
