use serde::{Deserialize, Serialize};

/// Full width at half of the global maximum.
///
/// Takes the outermost crossings of the half level, linearly interpolated, so
/// multi-peak curves report their whole active width. A curve still above half
/// maximum at a grid end uses that end. The abscissa may be increasing or
/// decreasing. `None` for empty or nonpositive curves.
pub fn fwhm(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "fwhm abscissa and ordinate lengths differ");
    let (imax, &ymax) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(ymax > 0.0) {
        return None;
    }
    let half = 0.5 * ymax;
    let first = y.iter().position(|&v| v >= half).unwrap_or(imax);
    let last = y.iter().rposition(|&v| v >= half).unwrap_or(imax);
    let cross = |a: usize, b: usize| x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);
    let left = if first == 0 { x[0] } else { cross(first - 1, first) };
    let right = if last + 1 == y.len() { x[last] } else { cross(last, last + 1) };
    Some((right - left).abs())
}

/// Index and value of the global maximum.
pub fn peak(y: &[f64]) -> Option<(usize, f64)> {
    y.iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

/// Hong-Ou-Mandel dip summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipStats {
    /// Delay of the deepest point, fs.
    pub center: f64,
    /// Width between the outermost half-depth crossings, fs.
    pub fwhm: f64,
    /// `rho / (2 - rho)` at the deepest point.
    pub visibility: f64,
    pub minimum: f64,
}

/// `V = rho / (2 - rho)`.
pub fn visibility(rho_peak: f64) -> f64 {
    rho_peak / (2.0 - rho_peak)
}

/// Dip statistics of `R_n(tau)` searched in the central `window` fraction of the grid.
pub fn dip_statistics(tau: &[f64], rn: &[f64], window: f64) -> Option<DipStats> {
    assert_eq!(tau.len(), rn.len());
    let n = tau.len();
    if n == 0 {
        return None;
    }
    let w = window.clamp(0.0, 1.0);
    let skip = ((1.0 - w) * 0.5 * n as f64).floor() as usize;
    let lo = skip.min(n - 1);
    let hi = (n - skip).max(lo + 1);
    let (imin, &rmin) = rn[lo..hi]
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let rho_peak = 1.0 - rmin;
    if !(rho_peak > 0.0) {
        return None;
    }
    let rho: Vec<f64> = rn[lo..hi].iter().map(|r| (1.0 - r).max(0.0)).collect();
    Some(DipStats {
        center: tau[lo + imin],
        fwhm: fwhm(&tau[lo..hi], &rho)?,
        visibility: visibility(rho_peak),
        minimum: rmin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn triangle() {
        let x = grid(-2.0, 2.0, 401);
        let y: Vec<f64> = x.iter().map(|&t| (1.0 - t.abs()).max(0.0)).collect();
        assert!((fwhm(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_peaks_give_active_width() {
        let x = grid(-3.0, 13.0, 1601);
        let tri = |t: f64| (1.0 - 2.0 * t.abs()).max(0.0);
        let y: Vec<f64> = x.iter().map(|&t| tri(t) + tri(t - 10.0)).collect();
        assert!((fwhm(&x, &y).unwrap() - 10.5).abs() < 1e-9);
    }

    #[test]
    fn gaussian() {
        let sigma = 3.0;
        let x = grid(-30.0, 30.0, 6001);
        let y: Vec<f64> = x.iter().map(|&t| (-t * t / (2.0 * sigma * sigma)).exp()).collect();
        let expected = 2.0 * (2.0 * 2f64.ln()).sqrt() * sigma;
        assert!((fwhm(&x, &y).unwrap() / expected - 1.0).abs() < 1e-2);
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert!((fwhm(&rev, &y).unwrap() / expected - 1.0).abs() < 1e-2);
    }

    #[test]
    fn degenerate_curves() {
        assert_eq!(fwhm(&[], &[]), None);
        assert_eq!(fwhm(&[0.0, 1.0], &[0.0, 0.0]), None);
    }

    #[test]
    fn dips() {
        let tau = grid(-10.0, 10.0, 2001);
        let rn: Vec<f64> = tau.iter().map(|&t| 1.0 - (-t * t).exp()).collect();
        let s = dip_statistics(&tau, &rn, 0.5).unwrap();
        assert!(s.center.abs() < 1e-12);
        assert!((s.visibility - 1.0).abs() < 1e-12);
        assert!((s.fwhm - 2.0 * 2f64.ln().sqrt()).abs() < 1e-3);

        let tau = grid(0.0, 100.0, 1001);
        let rn: Vec<f64> = tau.iter().map(|&t| 1.0 - (-(t - 50.0).powi(2)).exp()).collect();
        assert!((dip_statistics(&tau, &rn, 0.5).unwrap().center - 50.0).abs() < 1e-12);

        assert!((visibility(0.5) - 1.0 / 3.0).abs() < 1e-15);
    }
}
