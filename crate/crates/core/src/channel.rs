//! Geometry-driven path loss and Rician small-scale fading.
//!
//! The BS sits at the origin, the RIS at a fixed point, and users are dropped
//! uniformly in a disk. Every entry of the BS→RIS matrix and of each RIS→user
//! vector is an independent Rician draw scaled by the square root of its
//! link's path loss.
//!
//! Draws are made element by element (for each RIS element `n`: row `n` of the
//! BS→RIS matrix, then entry `n` of every user vector), so two surfaces of
//! different size generated from the same stream share their leading elements.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::model::{ChannelRealization, SystemConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub bs_pos: [f64; 2],
    pub ris_pos: [f64; 2],
    pub user_circle_center: [f64; 2],
    pub user_circle_radius: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            bs_pos: [0.0, 0.0],
            ris_pos: [50.0, 10.0],
            user_circle_center: [50.0, 0.0],
            user_circle_radius: 5.0,
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.user_circle_radius >= 0.0 && self.user_circle_radius.is_finite()) {
            return Err(Error::Config(format!(
                "user circle radius must be finite and nonnegative, got {}",
                self.user_circle_radius
            )));
        }
        if distance(self.bs_pos, self.ris_pos) == 0.0 {
            return Err(Error::Config("BS and RIS positions coincide".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    pub alpha_br: f64,
    pub alpha_ru: f64,
    /// Linear LOS-to-scatter power ratio; `f64::INFINITY` gives pure LOS.
    pub rician_k: f64,
    /// Path loss at the 1 m reference distance.
    pub pl0_db: f64,
}

impl Default for FadingParams {
    /// Exponent 2.2 on both hops and Rician factor 3. The reference loss is
    /// 0 dB, i.e. the gain is `d^-α`.
    fn default() -> Self {
        FadingParams {
            alpha_br: 2.2,
            alpha_ru: 2.2,
            rician_k: 3.0,
            pl0_db: 0.0,
        }
    }
}

impl FadingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_br > 0.0 && self.alpha_ru > 0.0) {
            return Err(Error::Config("path-loss exponents must be positive".into()));
        }
        if !(self.rician_k >= 0.0) {
            return Err(Error::Config("Rician factor must be nonnegative".into()));
        }
        if !self.pl0_db.is_finite() {
            return Err(Error::Config("reference path loss must be finite".into()));
        }
        Ok(())
    }
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Linear power gain `10^(PL0/10) · d^-α`.
pub fn path_loss(d: f64, alpha: f64, pl0_db: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("link distance must be positive, got {d}")));
    }
    Ok(10f64.powf(pl0_db / 10.0) * d.powf(-alpha))
}

/// Standard circularly-symmetric complex Gaussian, `E|z|² = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One Rician entry with all-ones LOS and unit second moment.
pub fn rician_entry<R: Rng + ?Sized>(rician_k: f64, rng: &mut R) -> Complex64 {
    if rician_k.is_infinite() {
        return Complex64::new(1.0, 0.0);
    }
    let los = (rician_k / (1.0 + rician_k)).sqrt();
    let nlos = (1.0 / (1.0 + rician_k)).sqrt();
    Complex64::new(los, 0.0) + complex_gaussian(rng) * nlos
}

pub fn rician_sample<R: Rng + ?Sized>(rows: usize, cols: usize, rician_k: f64, rng: &mut R) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rician_entry(rician_k, rng);
        }
    }
    m
}

/// Area-uniform point in a disk.
pub fn sample_in_disk<R: Rng + ?Sized>(center: [f64; 2], radius: f64, rng: &mut R) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = rng.random::<f64>() * std::f64::consts::TAU;
    [center[0] + r * phi.cos(), center[1] + r * phi.sin()]
}

/// Stacked channels for an `n`-element surface: the `n × M` BS→RIS matrix and
/// one length-`n` vector per user, plus the user positions that were drawn.
pub fn generate_stacked<R: Rng + ?Sized>(
    geom: &Geometry,
    fading: &FadingParams,
    antennas: usize,
    users: usize,
    elements: usize,
    rng: &mut R,
) -> Result<(CMatrix, Vec<CVector>, Vec<[f64; 2]>)> {
    geom.validate()?;
    fading.validate()?;
    let positions: Vec<[f64; 2]> = (0..users)
        .map(|_| sample_in_disk(geom.user_circle_center, geom.user_circle_radius, rng))
        .collect();
    let g_br = path_loss(distance(geom.bs_pos, geom.ris_pos), fading.alpha_br, fading.pl0_db)?.sqrt();
    let g_ru = positions
        .iter()
        .map(|&u| path_loss(distance(geom.ris_pos, u), fading.alpha_ru, fading.pl0_db).map(f64::sqrt))
        .collect::<Result<Vec<_>>>()?;

    let mut h = CMatrix::zeros(elements, antennas);
    let mut hr = vec![CVector::zeros(elements); users];
    for n in 0..elements {
        for m in 0..antennas {
            h[(n, m)] = rician_entry(fading.rician_k, rng) * g_br;
        }
        for (k, v) in hr.iter_mut().enumerate() {
            v[n] = rician_entry(fading.rician_k, rng) * g_ru[k];
        }
    }
    Ok((h, hr, positions))
}

/// Draws one realization sized by `cfg`; the first `N_coh` elements form the
/// coherent sub-surface.
pub fn generate<R: Rng + ?Sized>(
    geom: &Geometry,
    fading: &FadingParams,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let (h, hr, _) = generate_stacked(geom, fading, cfg.antennas, cfg.users, cfg.elements(), rng)?;
    ChannelRealization::from_stacked(&h, &hr, cfg.n_coh)
}

/// Independent random streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Channel,
    Solver,
}

/// Generator for realization `index` of the given purpose. Distinct
/// `(seed, stream, index)` triples give independent sequences.
pub fn stream_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8] = match stream {
        Stream::Channel => 1,
        Stream::Solver => 2,
    };
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_loss_examples() {
        assert!((path_loss(1.0, 3.7, -30.0).unwrap() - 1e-3).abs() < 1e-18);
        assert!((path_loss(100.0, 2.0, 0.0).unwrap() - 1e-4).abs() < 1e-18);
        let d = (50f64 * 50.0 + 100.0).sqrt();
        let hand = 1e-3 / d.powf(2.2);
        assert!((path_loss(d, 2.2, -30.0).unwrap() - hand).abs() < 1e-12 * hand);
        assert!(matches!(path_loss(0.0, 2.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn pure_los_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = rician_sample(3, 2, f64::INFINITY, &mut rng);
        assert!(m.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn rayleigh_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let ms: f64 = (0..n).map(|_| rician_entry(0.0, &mut rng).norm_sqr()).sum::<f64>() / n as f64;
        assert!((0.99..=1.01).contains(&ms), "{ms}");
    }

    #[test]
    fn rician_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let mean: Complex64 = (0..n).map(|_| rician_entry(3.0, &mut rng)).sum::<Complex64>() / n as f64;
        let expect = 0.75f64.sqrt();
        assert!((mean.re - expect).abs() < 0.02 * expect, "{mean}");
        assert!(mean.im.abs() < 0.02 * expect);
    }

    #[test]
    fn zero_radius_puts_users_at_center() {
        let geom = Geometry {
            user_circle_radius: 0.0,
            ..Geometry::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (_, _, pos) = generate_stacked(&geom, &FadingParams::default(), 2, 3, 4, &mut rng).unwrap();
        assert!(pos.iter().all(|p| *p == geom.user_circle_center));
    }

    #[test]
    fn equal_seeds_equal_realizations() {
        let cfg = SystemConfig::reference_point();
        let a = generate(&Geometry::default(), &FadingParams::default(), &cfg, &mut stream_rng(9, Stream::Channel, 4)).unwrap();
        let b = generate(&Geometry::default(), &FadingParams::default(), &cfg, &mut stream_rng(9, Stream::Channel, 4)).unwrap();
        assert_eq!(a, b);
        let c = generate(&Geometry::default(), &FadingParams::default(), &cfg, &mut stream_rng(9, Stream::Channel, 5)).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.h_coh.nrows() + a.h_fix.nrows(), cfg.elements());
    }

    #[test]
    fn received_power_matches_path_loss() {
        let geom = Geometry {
            user_circle_radius: 0.0,
            ..Geometry::default()
        };
        let fading = FadingParams::default();
        let d = distance(geom.ris_pos, geom.user_circle_center);
        let pl = path_loss(d, fading.alpha_ru, fading.pl0_db).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws = 1000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let (_, hr, _) = generate_stacked(&geom, &fading, 1, 1, 1, &mut rng).unwrap();
            acc += hr[0][0].norm_sqr();
        }
        let mean = acc / draws as f64;
        assert!((mean / pl - 1.0).abs() < 0.05, "{} vs {}", mean, pl);
    }

    #[test]
    fn reference_loss_scales_power() {
        let cfg = SystemConfig::reference_point();
        let base = FadingParams::default();
        let louder = FadingParams { pl0_db: 10.0, ..base.clone() };
        let a = generate(&Geometry::default(), &base, &cfg, &mut stream_rng(1, Stream::Channel, 0)).unwrap();
        let b = generate(&Geometry::default(), &louder, &cfg, &mut stream_rng(1, Stream::Channel, 0)).unwrap();
        for (x, y) in a.h_coh.iter().zip(b.h_coh.iter()) {
            assert!((y.norm_sqr() - 10.0 * x.norm_sqr()).abs() < 1e-9 * y.norm_sqr());
        }
    }

    #[test]
    fn larger_surface_extends_smaller() {
        let g = Geometry::default();
        let f = FadingParams::default();
        let (h4, hr4, _) = generate_stacked(&g, &f, 3, 2, 4, &mut stream_rng(5, Stream::Channel, 0)).unwrap();
        let (h8, hr8, _) = generate_stacked(&g, &f, 3, 2, 8, &mut stream_rng(5, Stream::Channel, 0)).unwrap();
        assert_eq!(h4, h8.rows(0, 4).into_owned());
        assert_eq!(hr4[1], hr8[1].rows(0, 4).into_owned());
    }
}
