use std::io::Read;
use std::path::Path;

use nalgebra::Vector3;

use crate::csvio::{fmt_f64, read_numeric, read_numeric_path, NumericRows};
use crate::error::{Error, Result};
use crate::hydro::{WaveRealization, GRAVITY};

pub const LOAD_HEADER: [&str; 7] = ["t_s", "Fx_N", "Fy_N", "Fz_N", "Mx_Nm", "My_Nm", "Mz_Nm"];

/// Wrench time series `[Fx, Fy, Fz, Mx, My, Mz]` in global axes, linearly
/// interpolated between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSeries {
    times: Vec<f64>,
    values: Vec<[f64; 6]>,
}

impl LoadSeries {
    pub fn new(times: Vec<f64>, values: Vec<[f64; 6]>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::Config(
                "load series needs matching, non-empty time and value columns".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "load series times must be strictly increasing".into(),
            ));
        }
        if times
            .iter()
            .chain(values.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Config(
                "load series contains non-finite values".into(),
            ));
        }
        Ok(Self { times, values })
    }

    /// A load held constant over `[t0, t1]`.
    pub fn constant(t0: f64, t1: f64, value: [f64; 6]) -> Result<Self> {
        Self::new(vec![t0, t1], vec![value, value])
    }

    pub fn from_reader<R: Read>(reader: R, source: &str) -> Result<Self> {
        Self::from_rows(read_numeric(reader, source, &LOAD_HEADER)?, source)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_rows(
            read_numeric_path(path, &LOAD_HEADER)?,
            &path.display().to_string(),
        )
    }

    fn from_rows(rows: NumericRows, source: &str) -> Result<Self> {
        let mut times = Vec::with_capacity(rows.rows.len());
        let mut values = Vec::with_capacity(rows.rows.len());
        for (line, r) in rows.rows {
            if let Some(&prev) = times.last() {
                if !(r[0] > prev) {
                    return Err(Error::Parse {
                        path: source.to_string(),
                        line,
                        message: "time must be strictly increasing".into(),
                    });
                }
            }
            times.push(r[0]);
            values.push([r[1], r[2], r[3], r[4], r[5], r[6]]);
        }
        Self::new(times, values)
    }

    pub fn write_csv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "{}", LOAD_HEADER.join(","))?;
        for (t, v) in self.times.iter().zip(&self.values) {
            let fields: Vec<String> = std::iter::once(*t)
                .chain(v.iter().copied())
                .map(fmt_f64)
                .collect();
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn at(&self, t: f64) -> Result<[f64; 6]> {
        let (lo, hi) = (self.start(), self.end());
        let tol = 1e-9 * (1.0 + hi.abs());
        if !(t >= lo - tol && t <= hi + tol) {
            return Err(Error::Domain(format!(
                "load requested at t = {t} s outside [{lo}, {hi}] s"
            )));
        }
        let i = self.times.partition_point(|&x| x <= t);
        if i == 0 {
            return Ok(self.values[0]);
        }
        if i >= self.times.len() {
            return Ok(*self.values.last().unwrap());
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        let (a, b) = (&self.values[i - 1], &self.values[i]);
        Ok(std::array::from_fn(|k| a[k] + w * (b[k] - a[k])))
    }
}

/// Everything that loads the chain apart from the soil, which is bound into
/// the model.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentLoads {
    pub gravity: Vector3<f64>,
    pub sea: Option<WaveRealization>,
    pub yaw_bearing: Option<LoadSeries>,
    /// Extra wrench series at structural nodes.
    pub nodal: Vec<(usize, LoadSeries)>,
}

impl EnvironmentLoads {
    pub fn none() -> Self {
        Self {
            gravity: Vector3::zeros(),
            sea: None,
            yaw_bearing: None,
            nodal: Vec::new(),
        }
    }

    pub fn gravity_only() -> Self {
        Self {
            gravity: Vector3::new(0.0, 0.0, -GRAVITY),
            ..Self::none()
        }
    }

    pub fn is_time_invariant(&self) -> bool {
        let constant = |s: &LoadSeries| s.values.iter().all(|v| v == &s.values[0]);
        self.sea
            .as_ref()
            .is_none_or(|s| s.components.iter().all(|c| c.amplitude == 0.0))
            && self.yaw_bearing.as_ref().is_none_or(constant)
            && self.nodal.iter().all(|(_, s)| constant(s))
    }
}
