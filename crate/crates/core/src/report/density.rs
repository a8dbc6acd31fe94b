use crate::error::{Error, Result};

/// Gaussian kernel density estimate on `grid_size` evenly spaced points
/// spanning the sample range ± 3 bandwidths. Bandwidth by the normal
/// reference rule `1.06·σ̂·n^(−1/5)`.
pub fn density_points(samples: &[f64], grid_size: usize) -> Result<Vec<(f64, f64)>> {
    if samples.len() < 2 {
        return Err(Error::insufficient("a density needs at least 2 samples"));
    }
    if grid_size < 2 {
        return Err(Error::input("density grid needs at least 2 points"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::input("density samples must be finite"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    if !(sd > 0.0) {
        return Err(Error::DegenerateVariance("constant samples give a degenerate spike, not a density".into()));
    }
    let h = 1.06 * sd * n.powf(-0.2);
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = (hi - lo) / (grid_size - 1) as f64;
    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());
    Ok((0..grid_size)
        .map(|i| {
            let x = lo + i as f64 * step;
            let s: f64 = samples
                .iter()
                .map(|xi| {
                    let u = (x - xi) / h;
                    (-0.5 * u * u).exp()
                })
                .sum();
            (x, s * norm)
        })
        .collect())
}
