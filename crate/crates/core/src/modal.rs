//! Welch spectral estimates, frequency-domain decomposition and band sums.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use rustfft::FftPlanner;

use crate::csvio::fmt_f64;
use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hann,
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    pub sample_rate: f64,
    /// Samples per segment, a power of two.
    pub segment_length: usize,
    pub overlap: f64,
    pub window: Window,
}

impl SpectralConfig {
    pub fn new(sample_rate: f64, segment_length: usize) -> Self {
        Self {
            sample_rate,
            segment_length,
            overlap: 0.5,
            window: Window::Hann,
        }
    }

    fn validate(&self, record: usize) -> Result<()> {
        if !(self.sample_rate > 0.0) {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if self.segment_length < 2 || !self.segment_length.is_power_of_two() {
            return Err(Error::Config(format!(
                "segment length {} is not a power of two",
                self.segment_length
            )));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::Config(format!(
                "overlap {} outside [0, 1)",
                self.overlap
            )));
        }
        if record < self.segment_length {
            return Err(Error::Config(format!(
                "record of {record} samples is shorter than one segment of {}",
                self.segment_length
            )));
        }
        Ok(())
    }

    pub fn resolution(&self) -> f64 {
        self.sample_rate / self.segment_length as f64
    }

    fn step(&self) -> usize {
        let overlap = (self.overlap * self.segment_length as f64).round() as usize;
        (self.segment_length - overlap).max(1)
    }

    fn window_values(&self) -> Vec<f64> {
        let n = self.segment_length;
        match self.window {
            Window::Rectangular => vec![1.0; n],
            // periodic Hann
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

/// One-sided auto spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub psd: Vec<f64>,
}

impl Spectrum {
    pub fn resolution(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0) - self.frequencies[0]
    }

    /// Index of the largest PSD line in `[lo, hi]`.
    pub fn peak_in(&self, lo: f64, hi: f64) -> Option<usize> {
        self.frequencies
            .iter()
            .enumerate()
            .filter(|(_, f)| **f >= lo && **f <= hi)
            .max_by(|a, b| self.psd[a.0].partial_cmp(&self.psd[b.0]).unwrap())
            .map(|(i, _)| i)
    }

    pub fn write_csv(
        &self,
        out: &mut impl std::io::Write,
        comment: Option<&str>,
    ) -> std::io::Result<()> {
        write_comment(out, comment)?;
        writeln!(out, "f_Hz,psd")?;
        for (f, p) in self.frequencies.iter().zip(&self.psd) {
            writeln!(out, "{},{}", fmt_f64(*f), fmt_f64(*p))?;
        }
        Ok(())
    }
}

fn write_comment(out: &mut impl std::io::Write, comment: Option<&str>) -> std::io::Result<()> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    Ok(())
}

/// Cross-spectral density matrices on a common frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CsdMatrix {
    pub frequencies: Vec<f64>,
    pub lines: Vec<DMatrix<C64>>,
}

impl CsdMatrix {
    pub fn channels(&self) -> usize {
        self.lines.first().map_or(0, |m| m.nrows())
    }
}

/// Windowed, scaled FFTs of every segment: `[segment][line]`.
fn segment_spectra(signal: &[f64], cfg: &SpectralConfig) -> Vec<Vec<C64>> {
    let n = cfg.segment_length;
    let w = cfg.window_values();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let step = cfg.step();
    let count = (signal.len() - n) / step + 1;
    let mut out = Vec::with_capacity(count);
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for s in 0..count {
        let seg = &signal[s * step..s * step + n];
        for ((b, x), wi) in buf.iter_mut().zip(seg).zip(&w) {
            *b = C64::new(x * wi, 0.0);
        }
        fft.process(&mut buf);
        out.push(buf[..=n / 2].to_vec());
    }
    out
}

/// One-sided density scale per line: `2 / (fs * sum w^2)`, not doubled at
/// DC and Nyquist.
fn line_scales(cfg: &SpectralConfig) -> Vec<f64> {
    let n = cfg.segment_length;
    let wss: f64 = cfg.window_values().iter().map(|w| w * w).sum();
    (0..=n / 2)
        .map(|k| {
            let one_sided = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
            one_sided / (cfg.sample_rate * wss)
        })
        .collect()
}

fn grid(cfg: &SpectralConfig) -> Vec<f64> {
    (0..=cfg.segment_length / 2)
        .map(|k| k as f64 * cfg.resolution())
        .collect()
}

/// Welch averaged one-sided power spectral density. No detrending, so the
/// 0 Hz line carries the mean.
pub fn welch_psd(signal: &[f64], cfg: &SpectralConfig) -> Result<Spectrum> {
    cfg.validate(signal.len())?;
    let segs = segment_spectra(signal, cfg);
    let scale = line_scales(cfg);
    let count = segs.len() as f64;
    let psd = (0..scale.len())
        .map(|k| segs.iter().map(|s| s[k].norm_sqr()).sum::<f64>() * scale[k] / count)
        .collect();
    Ok(Spectrum {
        frequencies: grid(cfg),
        psd,
    })
}

/// Welch cross-spectral density matrix, `G_ij = E[conj(X_i) X_j]`, with the
/// lower triangle filled by conjugation so that every line is exactly
/// Hermitian.
pub fn welch_csd_matrix<S: AsRef<[f64]>>(
    channels: &[S],
    cfg: &SpectralConfig,
) -> Result<CsdMatrix> {
    let Some(first) = channels.first() else {
        return Err(Error::Config("no channels given".into()));
    };
    let len = first.as_ref().len();
    if channels.iter().any(|c| c.as_ref().len() != len) {
        return Err(Error::Config("channels have different lengths".into()));
    }
    cfg.validate(len)?;
    let spectra: Vec<Vec<Vec<C64>>> = channels
        .iter()
        .map(|c| segment_spectra(c.as_ref(), cfg))
        .collect();
    let scale = line_scales(cfg);
    let m = channels.len();
    let count = spectra[0].len() as f64;
    let lines = (0..scale.len())
        .map(|k| {
            let mut g = DMatrix::from_element(m, m, C64::new(0.0, 0.0));
            for i in 0..m {
                for j in i..m {
                    let sum: C64 = spectra[i]
                        .iter()
                        .zip(&spectra[j])
                        .map(|(a, b)| a[k].conj() * b[k])
                        .sum();
                    let v = sum * (scale[k] / count);
                    if i == j {
                        g[(i, i)] = C64::new(v.re, 0.0);
                    } else {
                        g[(i, j)] = v;
                        g[(j, i)] = v.conj();
                    }
                }
            }
            g
        })
        .collect();
    Ok(CsdMatrix {
        frequencies: grid(cfg),
        lines,
    })
}

/// Singular values of every line, descending.
pub fn singular_values(csd: &CsdMatrix) -> Vec<Vec<f64>> {
    csd.lines
        .iter()
        .map(|g| {
            g.clone()
                .svd(false, false)
                .singular_values
                .iter()
                .copied()
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FddMode {
    pub band: (f64, f64),
    pub frequency: f64,
    pub line: usize,
    pub singular_value: f64,
    /// First singular vector, rotated so its largest entry is real and
    /// equal to one.
    pub shape: Vec<C64>,
    /// Set when the maximum sits on a band edge.
    pub diagnostic: Option<String>,
}

impl FddMode {
    pub fn real_shape(&self) -> Vec<f64> {
        self.shape.iter().map(|c| c.re).collect()
    }
}

/// Basic frequency-domain decomposition: in each band, the line that
/// maximizes the first singular value and its singular vector.
pub fn fdd_identify(csd: &CsdMatrix, bands: &[(f64, f64)]) -> Result<Vec<FddMode>> {
    let f = &csd.frequencies;
    let (f_min, f_max) = (f[0], *f.last().unwrap());
    let mut modes = Vec::with_capacity(bands.len());
    for &(lo, hi) in bands {
        if !(lo < hi && lo >= f_min && hi <= f_max) {
            return Err(Error::Config(format!(
                "band [{lo}, {hi}] Hz outside the grid [{f_min}, {f_max}] Hz"
            )));
        }
        let idx: Vec<usize> = (0..f.len()).filter(|&k| f[k] >= lo && f[k] <= hi).collect();
        if idx.is_empty() {
            return Err(Error::Config(format!(
                "band [{lo}, {hi}] Hz contains no frequency line"
            )));
        }
        let mut best = (idx[0], f64::NEG_INFINITY, None);
        for &k in &idx {
            let svd = csd.lines[k].clone().svd(true, false);
            let s = svd.singular_values[0];
            if s > best.1 {
                best = (k, s, svd.u.map(|u| u.column(0).into_owned()));
            }
        }
        let (line, singular_value, u) = best;
        let u = u.ok_or_else(|| Error::Numerical("SVD without singular vectors".into()))?;
        let diagnostic = (line == idx[0] || line == *idx.last().unwrap()).then(|| {
            format!(
                "no interior peak in [{lo}, {hi}] Hz: maximum on the band edge at {} Hz",
                f[line]
            )
        });
        modes.push(FddMode {
            band: (lo, hi),
            frequency: f[line],
            line,
            singular_value,
            shape: phase_normalize(&u),
            diagnostic,
        });
    }
    Ok(modes)
}

fn phase_normalize(u: &DVector<C64>) -> Vec<C64> {
    let peak = u
        .iter()
        .copied()
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
        .unwrap_or(C64::new(1.0, 0.0));
    if peak.norm() == 0.0 {
        return u.iter().copied().collect();
    }
    let mut out: Vec<C64> = u.iter().map(|c| c / peak).collect();
    // the peak entry is exactly one after division
    if let Some(p) = out
        .iter_mut()
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
    {
        *p = C64::new(1.0, 0.0);
    }
    out
}

/// Modal assurance criterion between two shapes.
pub fn mac(a: &[C64], b: &[C64]) -> f64 {
    let dot: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    dot.norm_sqr() / (na * nb)
}

pub fn mac_real(a: &[f64], b: &[f64]) -> f64 {
    let c = |v: &[f64]| v.iter().map(|x| C64::new(*x, 0.0)).collect::<Vec<_>>();
    mac(&c(a), &c(b))
}

/// `sum PSD * df` over lines in `[lo, hi]`.
pub fn band_psd_sum(frequencies: &[f64], psd: &[f64], lo: f64, hi: f64) -> Result<f64> {
    if frequencies.len() < 2 || frequencies.len() != psd.len() {
        return Err(Error::Config(
            "PSD needs at least two lines and a matching grid".into(),
        ));
    }
    if !(lo < hi) {
        return Err(Error::Config(format!("empty band [{lo}, {hi}] Hz")));
    }
    let df = frequencies[1] - frequencies[0];
    let mut any = false;
    let mut sum = 0.0;
    for (f, p) in frequencies.iter().zip(psd) {
        if *f >= lo && *f <= hi {
            sum += p * df;
            any = true;
        }
    }
    if !any {
        return Err(Error::Config(format!(
            "band [{lo}, {hi}] Hz contains no frequency line"
        )));
    }
    Ok(sum)
}

/// Writes `mode,f_Hz,node,shape_component` rows; `shapes[m][node]`.
pub fn write_modal_csv(
    out: &mut impl std::io::Write,
    frequencies: &[f64],
    shapes: &[Vec<f64>],
    comment: Option<&str>,
) -> std::io::Result<()> {
    write_comment(out, comment)?;
    writeln!(out, "mode,f_Hz,node,shape_component")?;
    for (m, (f, s)) in frequencies.iter().zip(shapes).enumerate() {
        for (node, v) in s.iter().enumerate() {
            writeln!(out, "{m},{},{node},{}", fmt_f64(*f), fmt_f64(*v))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noise(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, sigma).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    fn variance(x: &[f64]) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
    }

    #[test]
    fn sine_parseval_and_peak() {
        let fs = 100.0;
        let x: Vec<f64> = (0..100_000)
            .map(|i| 2.0 * (2.0 * PI * i as f64 / fs).sin())
            .collect();
        let cfg = SpectralConfig::new(fs, 1024);
        let s = welch_psd(&x, &cfg).unwrap();
        let total = band_psd_sum(&s.frequencies, &s.psd, 0.0, 50.0).unwrap();
        assert_relative_eq!(total, 2.0, max_relative = 0.02);
        let peak = s.peak_in(0.0, 50.0).unwrap();
        assert!((s.frequencies[peak] - 1.0).abs() <= s.resolution());
        let away = band_psd_sum(&s.frequencies, &s.psd, 5.0, 50.0).unwrap();
        assert!(away < 1e-6 * total);
    }

    #[test]
    fn zero_signal_and_white_noise() {
        let cfg = SpectralConfig::new(20.0, 256);
        let z = welch_psd(&vec![0.0; 4096], &cfg).unwrap();
        assert!(z.psd.iter().all(|p| *p == 0.0));

        let x = noise(200_000, 1.5, 3);
        let s = welch_psd(&x, &cfg).unwrap();
        let total = band_psd_sum(&s.frequencies, &s.psd, 0.0, 10.0).unwrap();
        assert_relative_eq!(total, variance(&x), max_relative = 0.02);
    }

    #[test]
    fn short_record_and_bad_settings_are_rejected() {
        let cfg = SpectralConfig::new(20.0, 256);
        assert!(welch_psd(&[0.0; 100], &cfg).unwrap_err().is_config());
        assert!(welch_psd(&[0.0; 1000], &SpectralConfig::new(20.0, 300)).is_err());
        let overlap = SpectralConfig {
            overlap: 1.0,
            ..cfg
        };
        assert!(welch_psd(&[0.0; 1000], &overlap).is_err());
        assert!(band_psd_sum(&[0.0, 1.0], &[1.0, 1.0], 0.2, 0.4).is_err());
    }

    #[test]
    fn csd_structure() {
        let cfg = SpectralConfig::new(10.0, 128);
        let a = noise(5000, 1.0, 1);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let b = noise(5000, 1.0, 2);
        let csd = welch_csd_matrix(&[a.clone(), a.clone(), neg, b], &cfg).unwrap();
        let psd = welch_psd(&a, &cfg).unwrap();
        for (k, g) in csd.lines.iter().enumerate() {
            assert_eq!(g, &g.adjoint());
            assert_relative_eq!(g[(0, 0)].re, psd.psd[k], max_relative = 1e-12);
            // identical channels: rank one
            let sv = g
                .view((0, 0), (2, 2))
                .into_owned()
                .svd(false, false)
                .singular_values;
            assert!(sv.min() <= 1e-12 * sv.max());
            // negation flips the cross term
            assert_relative_eq!(g[(0, 2)].re, -g[(0, 0)].re, max_relative = 1e-12);
        }
        for s in singular_values(&csd) {
            assert!(s.windows(2).all(|w| w[0] >= w[1]));
        }
        assert!(welch_csd_matrix(&[vec![0.0; 500], vec![0.0; 400]], &cfg).is_err());
    }

    #[test]
    fn independent_noises_decorrelate() {
        let cfg = SpectralConfig::new(10.0, 64);
        let coherence = |n: usize| {
            let csd = welch_csd_matrix(&[noise(n, 1.0, 5), noise(n, 1.0, 6)], &cfg).unwrap();
            let mut worst = 0.0f64;
            for g in &csd.lines[1..csd.lines.len() - 1] {
                worst = worst.max(g[(0, 1)].norm_sqr() / (g[(0, 0)].re * g[(1, 1)].re));
            }
            worst
        };
        let short = coherence(2_000);
        let long = coherence(200_000);
        assert!(long < short);
        assert!(long < 0.02);
    }

    #[test]
    fn single_channel_fdd_is_psd_peak() {
        let fs = 20.0;
        let x: Vec<f64> = (0..20_000)
            .map(|i| (2.0 * PI * 1.3 * i as f64 / fs).sin())
            .zip(noise(20_000, 0.1, 9))
            .map(|(a, b)| a + b)
            .collect();
        let cfg = SpectralConfig::new(fs, 512);
        let csd = welch_csd_matrix(&[x.clone()], &cfg).unwrap();
        let modes = fdd_identify(&csd, &[(0.5, 3.0)]).unwrap();
        let psd = welch_psd(&x, &cfg).unwrap();
        assert_eq!(modes[0].line, psd.peak_in(0.5, 3.0).unwrap());
        assert_eq!(modes[0].shape, vec![C64::new(1.0, 0.0)]);
        assert!(modes[0].diagnostic.is_none());

        // a clean sine seen only through its leakage tail
        let pure: Vec<f64> = (0..20_000)
            .map(|i| (2.0 * PI * 1.3 * i as f64 / fs).sin())
            .collect();
        let csd_pure = welch_csd_matrix(&[pure], &cfg).unwrap();
        let edge = fdd_identify(&csd_pure, &[(1.5, 3.0)]).unwrap();
        assert!(edge[0].diagnostic.is_some());
        assert!(fdd_identify(&csd, &[(1.0, 20.0)]).is_err());
    }

    #[test]
    fn mac_properties() {
        let a = [1.0, 0.5, -0.2];
        assert_relative_eq!(mac_real(&a, &a), 1.0, max_relative = 1e-12);
        assert_relative_eq!(mac_real(&a, &[-2.0, -1.0, 0.4]), 1.0, max_relative = 1e-12);
        assert!(mac_real(&[1.0, 0.0], &[0.0, 1.0]) < 1e-15);
    }

    #[test]
    fn exports_carry_header_and_comment() {
        let s = Spectrum {
            frequencies: vec![0.0, 0.5],
            psd: vec![1.0, 0.25],
        };
        let mut buf = Vec::new();
        s.write_csv(&mut buf, Some("digest abc")).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# digest abc\nf_Hz,psd\n0,1e0\n5e-1,2.5e-1\n"
        );
        let mut buf = Vec::new();
        write_modal_csv(&mut buf, &[0.25], &[vec![1.0, -0.5]], None).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "mode,f_Hz,node,shape_component\n0,2.5e-1,0,1e0\n0,2.5e-1,1,-5e-1\n"
        );
    }
}
