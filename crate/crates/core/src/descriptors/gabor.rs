//! Complex Gabor filter banks and the two magnitude statistics built on them
//! (per-filter mean/variance and per-filter mean energy).
//!
//! The complex carrier with an isotropic Gaussian envelope factors into a
//! row kernel times a column kernel, and the DC correction is a constant box,
//! so each response is two separable passes. Borders use replicate padding.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::imaging::Region;

/// Envelope width as a fraction of the wavelength.
pub const SIGMA_PER_WAVELENGTH: f64 = 0.56;

#[derive(Debug, Clone)]
pub struct GaborFilter {
    wavelength: f64,
    theta: f64,
    sigma: f64,
    radius: usize,
    /// Horizontal factor, index `u + radius`.
    row: Vec<Complex64>,
    /// Vertical factor, index `v + radius`.
    col: Vec<Complex64>,
    /// Mean of the real part of the separable kernel, removed for zero DC.
    dc: f64,
}

impl GaborFilter {
    pub fn new(wavelength: f64, theta: f64) -> Self {
        let sigma = SIGMA_PER_WAVELENGTH * wavelength;
        let radius = (3.0 * sigma).ceil() as usize;
        let omega = 2.0 * PI / wavelength;
        // unit-mass envelope, so every scale answers on the same amplitude scale
        let norm = 1.0 / ((2.0 * PI).sqrt() * sigma);
        let factor = |freq: f64| -> Vec<Complex64> {
            (-(radius as isize)..=radius as isize)
                .map(|u| {
                    let u = u as f64;
                    let env = norm * (-u * u / (2.0 * sigma * sigma)).exp();
                    Complex64::from_polar(env, freq * u)
                })
                .collect()
        };
        let row = factor(omega * theta.cos());
        let col = factor(omega * theta.sin());
        let mut re_sum = 0.0;
        for c in &col {
            for r in &row {
                re_sum += (r * c).re;
            }
        }
        let side = 2 * radius + 1;
        Self {
            wavelength,
            theta,
            sigma,
            radius,
            row,
            col,
            dc: re_sum / (side * side) as f64,
        }
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Kernel side length, `2 * ceil(3 sigma) + 1`.
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    /// Materialized kernel, row-major, indexed `[(v + r) * side + (u + r)]`.
    pub fn kernel(&self) -> Vec<Complex64> {
        let mut k = Vec::with_capacity(self.side() * self.side());
        for c in &self.col {
            for r in &self.row {
                k.push(r * c - self.dc);
            }
        }
        k
    }

    /// Filter response at every pixel of `region` (correlation, replicate padding).
    pub fn respond(&self, region: &Region) -> Vec<Complex64> {
        let (w, h) = (region.width(), region.height());
        let row_prefix = prefix_sums(&self.row);
        let ones = vec![Complex64::new(1.0, 0.0); self.side()];
        let ones_prefix = prefix_sums(&ones);

        // horizontal pass over every source row
        let mut carrier = vec![Complex64::default(); w * h];
        let mut boxed = vec![Complex64::default(); w * h];
        let mut line = vec![Complex64::default(); w.max(h)];
        for y in 0..h {
            for (x, slot) in line[..w].iter_mut().enumerate() {
                *slot = Complex64::new(region.get(x, y), 0.0);
            }
            correlate_clamped(&line[..w], &self.row, &row_prefix, &mut carrier[y * w..(y + 1) * w]);
            correlate_clamped(&line[..w], &ones, &ones_prefix, &mut boxed[y * w..(y + 1) * w]);
        }

        // vertical pass, column by column
        let col_prefix = prefix_sums(&self.col);
        let mut out = vec![Complex64::default(); w * h];
        let mut col_in = vec![Complex64::default(); h];
        let mut col_a = vec![Complex64::default(); h];
        let mut col_b = vec![Complex64::default(); h];
        for x in 0..w {
            for y in 0..h {
                col_in[y] = carrier[y * w + x];
            }
            correlate_clamped(&col_in, &self.col, &col_prefix, &mut col_a);
            for y in 0..h {
                col_in[y] = boxed[y * w + x];
            }
            correlate_clamped(&col_in, &ones, &ones_prefix, &mut col_b);
            for y in 0..h {
                out[y * w + x] = col_a[y] - col_b[y] * self.dc;
            }
        }
        out
    }
}

fn prefix_sums(k: &[Complex64]) -> Vec<Complex64> {
    let mut p = Vec::with_capacity(k.len() + 1);
    let mut acc = Complex64::default();
    p.push(acc);
    for &v in k {
        acc += v;
        p.push(acc);
    }
    p
}

/// `out[x] = sum_u k[u + r] * s[clamp(x + u)]`; clamped tails collapse to
/// prefix sums of the kernel times the edge sample.
fn correlate_clamped(s: &[Complex64], k: &[Complex64], prefix: &[Complex64], out: &mut [Complex64]) {
    let n = s.len() as isize;
    let r = (k.len() / 2) as isize;
    for x in 0..n {
        // u range hitting the interior: max(-r, -x) ..= min(r, n-1-x)
        let lo = (-r).max(-x);
        let hi = r.min(n - 1 - x);
        let mut acc = Complex64::default();
        if lo > -r {
            // u in [-r, lo - 1] reads s[0]
            acc += s[0] * (prefix[(lo + r) as usize] - prefix[0]);
        }
        if hi < r {
            // u in [hi + 1, r] reads s[n - 1]
            acc += s[(n - 1) as usize] * (prefix[k.len()] - prefix[(hi + 1 + r) as usize]);
        }
        for u in lo..=hi {
            acc += k[(u + r) as usize] * s[(x + u) as usize];
        }
        out[x as usize] = acc;
    }
}

/// `scales * orientations` filters, scale-major.
#[derive(Debug, Clone)]
pub struct GaborBank {
    filters: Vec<GaborFilter>,
    wavelengths: Vec<f64>,
    orientations: Vec<f64>,
}

impl GaborBank {
    pub fn filters(&self) -> &[GaborFilter] {
        &self.filters
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn orientations(&self) -> &[f64] {
        &self.orientations
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }
}

/// Wavelengths `base * 2^s`, orientations `k * pi / O`.
pub fn build_gabor_bank(scales: usize, orientations: usize, base_wavelength: f64) -> Result<GaborBank> {
    if scales < 1 || orientations < 1 {
        return Err(Error::Parameter(format!(
            "gabor bank needs at least one scale and orientation, got {scales}x{orientations}"
        )));
    }
    if !base_wavelength.is_finite() || base_wavelength < 2.0 {
        return Err(Error::Parameter(format!(
            "base wavelength must be >= 2 pixels, got {base_wavelength}"
        )));
    }
    let wavelengths: Vec<f64> = (0..scales).map(|s| base_wavelength * 2f64.powi(s as i32)).collect();
    let thetas: Vec<f64> = (0..orientations).map(|k| k as f64 * PI / orientations as f64).collect();
    let filters = wavelengths
        .iter()
        .flat_map(|&lambda| thetas.iter().map(move |&theta| GaborFilter::new(lambda, theta)))
        .collect();
    Ok(GaborBank {
        filters,
        wavelengths,
        orientations: thetas,
    })
}

fn magnitudes(filter: &GaborFilter, region: &Region) -> Vec<f64> {
    filter.respond(region).iter().map(|c| c.norm()).collect()
}

/// Per filter: mean and population variance of the response magnitude.
pub fn gabor_feat(region: &Region, bank: &GaborBank) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * bank.len());
    for filter in bank.filters() {
        let mags = magnitudes(filter, region);
        let n = mags.len() as f64;
        let mean = mags.iter().sum::<f64>() / n;
        let var = mags.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / n;
        out.push(mean);
        out.push(var);
    }
    out
}

/// Per filter: mean response magnitude (Gist-style energy).
pub fn gist_feat(region: &Region, bank: &GaborBank) -> Vec<f64> {
    bank.filters()
        .iter()
        .map(|f| {
            let mags = magnitudes(f, region);
            mags.iter().sum::<f64>() / mags.len() as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct 2-D correlation with the materialized kernel.
    fn brute_response(filter: &GaborFilter, region: &Region) -> Vec<Complex64> {
        let k = filter.kernel();
        let side = filter.side() as isize;
        let r = side / 2;
        let mut out = Vec::new();
        for y in 0..region.height() as isize {
            for x in 0..region.width() as isize {
                let mut acc = Complex64::default();
                for v in -r..=r {
                    for u in -r..=r {
                        let kv = k[((v + r) * side + (u + r)) as usize];
                        acc += kv * region.get_clamped(x + u, y + v);
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    fn grating(w: usize, h: usize, lambda: f64, theta: f64) -> Region {
        Region::from_fn(w, h, |x, y| {
            let phase = 2.0 * PI * (x as f64 * theta.cos() + y as f64 * theta.sin()) / lambda;
            128.0 + 100.0 * phase.cos()
        })
    }

    #[test]
    fn bank_shape() {
        let bank = build_gabor_bank(5, 8, 4.0).unwrap();
        assert_eq!(bank.len(), 40);
        assert_eq!(bank.wavelengths(), &[4.0, 8.0, 16.0, 32.0, 64.0]);
        for f in bank.filters() {
            assert_eq!(f.side(), 2 * (3.0 * 0.56 * f.wavelength()).ceil() as usize + 1);
            let k = f.kernel();
            let mean_re = k.iter().map(|c| c.re).sum::<f64>() / k.len() as f64;
            assert!(mean_re.abs() < 1e-12);
        }
        assert!(build_gabor_bank(0, 8, 4.0).is_err());
        assert!(build_gabor_bank(2, 8, 1.5).is_err());
    }

    #[test]
    fn separable_matches_direct_correlation() {
        let region = Region::from_fn(11, 9, |x, y| ((x * 31 + y * 17 + x * y) % 97) as f64);
        for theta in [0.0, 0.3, PI / 2.0, 2.0] {
            let f = GaborFilter::new(4.0, theta);
            let fast = f.respond(&region);
            let slow = brute_response(&f, &region);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-9, "{a} vs {b}");
            }
        }
        // kernel much wider than the region
        let f = GaborFilter::new(16.0, 1.0);
        let fast = f.respond(&region);
        let slow = brute_response(&f, &region);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn constant_region_has_zero_response() {
        let bank = build_gabor_bank(5, 8, 4.0).unwrap();
        let region = Region::from_fn(21, 21, |_, _| 173.0);
        let feat = gabor_feat(&region, &bank);
        assert_eq!(feat.len(), 80);
        assert!(feat.iter().all(|v| v.abs() < 1e-9), "{feat:?}");
        let gist = gist_feat(&region, &build_gabor_bank(4, 8, 4.0).unwrap());
        assert_eq!(gist.len(), 32);
        assert!(gist.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn opposite_orientations_share_magnitude() {
        let region = Region::from_fn(15, 13, |x, y| ((x * x + 3 * y) % 50) as f64);
        for theta in [0.0, 0.7, 1.9] {
            let a = GaborFilter::new(8.0, theta).respond(&region);
            let b = GaborFilter::new(8.0, theta + PI).respond(&region);
            for (p, q) in a.iter().zip(&b) {
                assert!((p.norm() - q.norm()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn grating_selects_matching_orientation() {
        let bank = build_gabor_bank(3, 8, 4.0).unwrap();
        for (scale, k) in [(0usize, 2usize), (1, 5), (0, 0), (2, 6)] {
            let region = grating(48, 48, bank.wavelengths()[scale], bank.orientations()[k]);
            let feat = gabor_feat(&region, &bank);
            let means: Vec<f64> = (0..8).map(|o| feat[2 * (scale * 8 + o)]).collect();
            let best = (0..8).max_by(|&a, &b| means[a].total_cmp(&means[b])).unwrap();
            assert_eq!(best, k, "scale {scale}: {means:?}");
        }
    }

    #[test]
    fn gist_is_homogeneous_and_shift_invariant() {
        let bank = build_gabor_bank(4, 8, 4.0).unwrap();
        let region = Region::from_fn(20, 22, |x, y| ((x * 7 + y * y) % 60) as f64);
        let base = gist_feat(&region, &bank);
        let doubled = gist_feat(&region.map(|v| 2.0 * v), &bank);
        let shifted = gist_feat(&region.map(|v| v + 55.0), &bank);
        for i in 0..base.len() {
            assert!((doubled[i] - 2.0 * base[i]).abs() < 1e-9 * (1.0 + base[i]));
            assert!((shifted[i] - base[i]).abs() < 1e-8 * (1.0 + base[i]));
        }
    }
}
