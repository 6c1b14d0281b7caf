//! Empirical convergence orders.

/// Observed order between two refinement levels:
/// `(log e1 - log e2) / (log h1 - log h2)`.
pub fn observed_rate(h1: f64, e1: f64, h2: f64, e2: f64) -> f64 {
    (e1.ln() - e2.ln()) / (h1.ln() - h2.ln())
}

/// Rates between consecutive entries of a refinement sequence; the first
/// entry has no rate.
pub fn consecutive_rates(h: &[f64], e: &[f64]) -> Vec<Option<f64>> {
    assert_eq!(h.len(), e.len());
    (0..h.len())
        .map(|i| (i > 0).then(|| observed_rate(h[i - 1], e[i - 1], h[i], e[i])))
        .collect()
}

/// Least-squares slope of `log e` against `log h`.
pub fn fit_log_slope(h: &[f64], e: &[f64]) -> f64 {
    assert!(h.len() == e.len() && h.len() >= 2);
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rate_reproduced() {
        // H1 errors 1.694 -> 0.8677 at h = 1/4 -> 1/8 give 0.97.
        let r = observed_rate(0.25, 1.694, 0.125, 0.8677);
        assert!((r - 0.965).abs() < 1e-3);
    }

    #[test]
    fn slope_of_power_law() {
        let h = [0.5, 0.25, 0.125, 0.0625];
        let e: Vec<f64> = h.iter().map(|h: &f64| 3.0 * h.powf(2.5)).collect();
        assert!((fit_log_slope(&h, &e) - 2.5).abs() < 1e-12);
        let r = consecutive_rates(&h, &e);
        assert!(r[0].is_none());
        assert!(r[1..].iter().all(|x| (x.unwrap() - 2.5).abs() < 1e-12));
    }
}
