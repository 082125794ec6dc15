//! Irregular long-crested seas and relative-form Morison strip loads.
//!
//! Waves travel along +x. Kinematics are first order (Airy) and evaluated on
//! the undisplaced structure axis at x = 0, up to the still water line only.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRAVITY: f64 = 9.80665;

/// Water properties and Morison coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorisonCoefficients {
    pub water_density: f64,
    pub added_mass: f64,
    pub drag: f64,
}

impl Default for MorisonCoefficients {
    fn default() -> Self {
        Self {
            water_density: 1025.0,
            added_mass: 1.0,
            drag: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeaStateConfig {
    pub significant_wave_height: f64,
    pub peak_period: f64,
    pub water_depth: f64,
    pub coefficients: MorisonCoefficients,
    pub n_components: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub seed: u64,
}

impl Default for SeaStateConfig {
    fn default() -> Self {
        Self {
            significant_wave_height: 1.25,
            peak_period: 5.5,
            water_depth: 30.0,
            coefficients: MorisonCoefficients::default(),
            n_components: 400,
            f_min: 0.05,
            f_max: 1.5,
            seed: 1,
        }
    }
}

impl SeaStateConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.significant_wave_height >= 0.0
            && self.peak_period > 0.0
            && self.water_depth > 0.0
            && self.n_components >= 1
            && self.f_min > 0.0
            && self.f_min < self.f_max;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid sea state {self:?}")))
        }
    }

    pub fn peak_frequency(&self) -> f64 {
        1.0 / self.peak_period
    }
}

/// Pierson-Moskowitz density `S(f)` in m^2/Hz, parameterized by Hs and Tp.
pub fn pm_spectrum_density(f: f64, hs: f64, tp: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::Domain(format!(
            "spectrum frequency must be positive, got {f}"
        )));
    }
    let fp = 1.0 / tp;
    let r4 = (fp / f).powi(4);
    Ok(5.0 / 16.0 * hs * hs * fp.powi(4) * f.powi(-5) * (-1.25 * r4).exp())
}

/// Spectral energy below `f`: the antiderivative of the density, which
/// tends to Hs^2/16 as f grows.
pub fn pm_cumulative(f: f64, hs: f64, tp: f64) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    let fp = 1.0 / tp;
    hs * hs / 16.0 * (-1.25 * (fp / f).powi(4)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveComponent {
    pub amplitude: f64,
    pub frequency: f64,
    pub wavenumber: f64,
    pub phase: f64,
}

impl WaveComponent {
    pub fn omega(&self) -> f64 {
        2.0 * PI * self.frequency
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveRealization {
    pub components: Vec<WaveComponent>,
    pub water_depth: f64,
    pub warnings: Vec<String>,
}

/// Solves `omega^2 = g k tanh(k d)` by Newton iteration from the deep-water
/// guess.
pub fn solve_wavenumber(omega: f64, depth: f64) -> f64 {
    let target = omega * omega / GRAVITY;
    let mut k = target.max(omega / (GRAVITY * depth).sqrt());
    for _ in 0..100 {
        let kd = k * depth;
        let th = kd.tanh();
        let f = k * th - target;
        let df = th + kd * (1.0 - th * th);
        let step = f / df;
        k -= step;
        if step.abs() <= 1e-12 * k {
            break;
        }
    }
    k
}

pub fn dispersion_residual(c: &WaveComponent, depth: f64) -> f64 {
    let w2 = c.omega().powi(2);
    (w2 - GRAVITY * c.wavenumber * (c.wavenumber * depth).tanh()).abs() / w2
}

/// Equal-width frequency bins over `[f_min, f_max]` with seeded uniform
/// phases. Each amplitude carries the exact spectral energy of its bin, so
/// the component variances sum to the band energy.
pub fn synthesize_sea(cfg: &SeaStateConfig) -> Result<WaveRealization> {
    cfg.validate()?;
    let (hs, tp) = (cfg.significant_wave_height, cfg.peak_period);
    let df = (cfg.f_max - cfg.f_min) / cfg.n_components as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let components = (0..cfg.n_components)
        .map(|j| {
            let lo = cfg.f_min + df * j as f64;
            let hi = lo + df;
            let energy = pm_cumulative(hi, hs, tp) - pm_cumulative(lo, hs, tp);
            let frequency = lo + 0.5 * df;
            let phase = rng.random::<f64>() * 2.0 * PI;
            WaveComponent {
                amplitude: (2.0 * energy).sqrt(),
                frequency,
                wavenumber: solve_wavenumber(2.0 * PI * frequency, cfg.water_depth),
                phase,
            }
        })
        .collect();

    let mut warnings = Vec::new();
    let total = hs * hs / 16.0;
    let band = pm_cumulative(cfg.f_max, hs, tp) - pm_cumulative(cfg.f_min, hs, tp);
    if total > 0.0 && band < 0.95 * total {
        warnings.push(format!(
            "frequency band [{}, {}] Hz holds only {:.1}% of the spectral energy",
            cfg.f_min,
            cfg.f_max,
            100.0 * band / total
        ));
    }
    Ok(WaveRealization {
        components,
        water_depth: cfg.water_depth,
        warnings,
    })
}

/// `cosh(k (z + d)) / sinh(k d)` without overflow in deep water.
fn depth_transfer(k: f64, z: f64, d: f64) -> f64 {
    (k * z).exp() * (1.0 + (-2.0 * k * (z + d)).exp()) / (1.0 - (-2.0 * k * d).exp())
}

impl WaveRealization {
    pub fn flat(water_depth: f64) -> Self {
        Self {
            components: Vec::new(),
            water_depth,
            warnings: Vec::new(),
        }
    }

    pub fn surface_elevation(&self, x: f64, t: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.amplitude * (c.wavenumber * x - c.omega() * t + c.phase).cos())
            .sum()
    }

    pub fn band_variance(&self) -> f64 {
        self.components
            .iter()
            .map(|c| 0.5 * c.amplitude * c.amplitude)
            .sum()
    }
}

/// Horizontal Airy velocity and acceleration at depth `z` (m relative to
/// the still water line, negative down).
pub fn wave_kinematics(real: &WaveRealization, z: f64, x: f64, t: f64) -> Result<(f64, f64)> {
    let d = real.water_depth;
    if z > 0.0 {
        return Err(Error::Domain(format!(
            "kinematics requested at z = {z} m above the still water line"
        )));
    }
    if z < -d {
        return Err(Error::Domain(format!(
            "kinematics requested at z = {z} m below the seabed"
        )));
    }
    let mut u = 0.0;
    let mut du = 0.0;
    for c in &real.components {
        let w = c.omega();
        let theta = c.wavenumber * x - w * t + c.phase;
        let amp = c.amplitude * w * depth_transfer(c.wavenumber, z, d);
        u += amp * theta.cos();
        du += amp * w * theta.sin();
    }
    Ok((u, du))
}

/// Wave kinematics at a fixed set of depths on the x = 0 axis, with the
/// depth transfer functions tabulated once.
#[derive(Debug, Clone)]
pub struct WaveField {
    omega: Vec<f64>,
    phase: Vec<f64>,
    // per point, per component: a * omega * transfer
    velocity_amp: Vec<Vec<f64>>,
    cos_buf: Vec<f64>,
    sin_buf: Vec<f64>,
}

impl WaveField {
    pub fn new(real: &WaveRealization, depths: &[f64]) -> Result<Self> {
        let d = real.water_depth;
        let mut velocity_amp = Vec::with_capacity(depths.len());
        for &z in depths {
            if z > 0.0 || z < -d {
                return Err(Error::Domain(format!(
                    "strip depth {z} m outside the water column"
                )));
            }
            velocity_amp.push(
                real.components
                    .iter()
                    .map(|c| c.amplitude * c.omega() * depth_transfer(c.wavenumber, z, d))
                    .collect(),
            );
        }
        let n = real.components.len();
        Ok(Self {
            omega: real.components.iter().map(WaveComponent::omega).collect(),
            phase: real.components.iter().map(|c| c.phase).collect(),
            velocity_amp,
            cos_buf: vec![0.0; n],
            sin_buf: vec![0.0; n],
        })
    }

    pub fn len(&self) -> usize {
        self.velocity_amp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocity_amp.is_empty()
    }

    /// Writes (u, u_dot) for every point at time t.
    pub fn evaluate(&mut self, t: f64, out: &mut [(f64, f64)]) {
        for j in 0..self.omega.len() {
            let theta = self.phase[j] - self.omega[j] * t;
            let (s, c) = theta.sin_cos();
            self.cos_buf[j] = c;
            self.sin_buf[j] = s * self.omega[j];
        }
        for (amps, o) in self.velocity_amp.iter().zip(out.iter_mut()) {
            let mut u = 0.0;
            let mut du = 0.0;
            for ((a, c), s) in amps.iter().zip(&self.cos_buf).zip(&self.sin_buf) {
                u += a * c;
                du += a * s;
            }
            *o = (u, du);
        }
    }
}

/// A horizontal slice of a submerged body carrying Morison loads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripElement {
    /// Elevation of the strip centre relative to the still water line.
    pub z_swl: f64,
    /// Global elevation of the strip centre in the undeformed structure.
    pub elevation: f64,
    pub length: f64,
    pub diameter: f64,
    /// Index of the half-element body the strip belongs to.
    pub body: usize,
}

pub fn added_mass_per_length(coeffs: &MorisonCoefficients, diameter: f64) -> f64 {
    coeffs.water_density * coeffs.added_mass * PI * diameter * diameter / 4.0
}

/// Morison force per unit length in one horizontal direction:
/// added mass on the structure, fluid inertia and quadratic relative drag.
pub fn morison_strip_force(
    diameter: f64,
    u_w: f64,
    udot_w: f64,
    u_s: f64,
    udot_s: f64,
    coeffs: &MorisonCoefficients,
) -> f64 {
    let area = PI * diameter * diameter / 4.0;
    let rho = coeffs.water_density;
    let rel = u_w - u_s;
    -rho * coeffs.added_mass * area * udot_s
        + rho * (1.0 + coeffs.added_mass) * area * udot_w
        + 0.5 * rho * coeffs.drag * diameter * rel * rel.abs()
}

/// Drag term alone, used to check antisymmetry.
pub fn morison_drag(diameter: f64, relative_velocity: f64, coeffs: &MorisonCoefficients) -> f64 {
    0.5 * coeffs.water_density
        * coeffs.drag
        * diameter
        * relative_velocity
        * relative_velocity.abs()
}

/// Equal strips over the submerged part of `[lo, hi]` (global elevations),
/// between the seabed and the still water line.
pub fn strips_for_body(
    body: usize,
    lo: f64,
    hi: f64,
    seabed: f64,
    swl: f64,
    per_body: usize,
    diameter_at: impl Fn(f64) -> f64,
) -> Vec<StripElement> {
    let a = lo.max(seabed);
    let b = hi.min(swl);
    if b <= a || per_body == 0 {
        return Vec::new();
    }
    let len = (b - a) / per_body as f64;
    (0..per_body)
        .map(|i| {
            let elevation = a + (i as f64 + 0.5) * len;
            StripElement {
                z_swl: elevation - swl,
                elevation,
                length: len,
                diameter: diameter_at(elevation),
                body,
            }
        })
        .collect()
}
