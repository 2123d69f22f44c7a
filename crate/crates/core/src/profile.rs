//! Reference depth profiles: constant targets, analytic curves with known
//! derivatives, and sampled distance/depth tables (seafloor surveys).

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Twice-differentiable depth curve `z = g(x)`.
pub trait DepthCurve: Send + Sync + fmt::Debug {
    fn depth(&self, x: f64) -> f64;
    fn slope(&self, x: f64) -> f64;
    fn curvature(&self, x: f64) -> f64;
}

/// `z = base - amplitude * sin(wavenumber * x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub base: f64,
    pub amplitude: f64,
    pub wavenumber: f64,
}

impl Sinusoid {
    /// The curved-depth benchmark track: `10 - sin(pi/50 x)`.
    pub fn benchmark() -> Self {
        Self {
            base: 10.0,
            amplitude: 1.0,
            wavenumber: std::f64::consts::PI / 50.0,
        }
    }
}

impl DepthCurve for Sinusoid {
    fn depth(&self, x: f64) -> f64 {
        self.base - self.amplitude * (self.wavenumber * x).sin()
    }
    fn slope(&self, x: f64) -> f64 {
        -self.amplitude * self.wavenumber * (self.wavenumber * x).cos()
    }
    fn curvature(&self, x: f64) -> f64 {
        self.amplitude * self.wavenumber * self.wavenumber * (self.wavenumber * x).sin()
    }
}

/// `z = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ramp {
    pub intercept: f64,
    pub slope: f64,
}

impl DepthCurve for Ramp {
    fn depth(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
    fn slope(&self, _x: f64) -> f64 {
        self.slope
    }
    fn curvature(&self, _x: f64) -> f64 {
        0.0
    }
}

/// Piecewise-linear distance/depth table with strictly increasing distance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    distance: Vec<f64>,
    depth: Vec<f64>,
}

impl SampledProfile {
    pub fn new(distance: Vec<f64>, depth: Vec<f64>) -> Result<Self> {
        if distance.len() != depth.len() {
            return Err(Error::Profile(format!(
                "{} distances but {} depths",
                distance.len(),
                depth.len()
            )));
        }
        if distance.len() < 2 {
            return Err(Error::Profile("at least two samples are required".into()));
        }
        for (i, pair) in distance.windows(2).enumerate() {
            if !(pair[1] > pair[0]) {
                return Err(Error::Profile(format!(
                    "distance not strictly increasing at sample {}",
                    i + 1
                )));
            }
        }
        if distance.iter().chain(depth.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Profile("non-finite sample".into()));
        }
        Ok(Self { distance, depth })
    }

    /// Reads a `distance_m,depth_m` CSV (header required).
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(file);
        let parse_err = |line: u64, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let headers = reader.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "distance_m" || &headers[1] != "depth_m" {
            return Err(parse_err(
                1,
                format!("expected header `distance_m,depth_m`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            ));
        }
        let mut distance = Vec::new();
        let mut depth = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != 2 {
                return Err(parse_err(line, format!("expected 2 columns, found {}", record.len())));
            }
            let cell = |i: usize| -> Result<f64> {
                let v: f64 = record[i]
                    .parse()
                    .map_err(|_| parse_err(line, format!("non-numeric cell `{}`", &record[i])))?;
                if !v.is_finite() {
                    return Err(parse_err(line, format!("non-finite cell `{}`", &record[i])));
                }
                Ok(v)
            };
            let d = cell(0)?;
            let z = cell(1)?;
            if let Some(&prev) = distance.last() {
                if !(d > prev) {
                    return Err(parse_err(
                        line,
                        format!("distance {d} does not increase (previous {prev})"),
                    ));
                }
            }
            distance.push(d);
            depth.push(z);
        }
        Self::new(distance, depth).map_err(|e| parse_err(0, e.to_string()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["distance_m", "depth_m"])?;
        for (d, z) in self.distance.iter().zip(&self.depth) {
            w.write_record([d.to_string(), z.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn range(&self) -> (f64, f64) {
        (self.distance[0], *self.distance.last().unwrap())
    }

    pub fn depth_range(&self) -> (f64, f64) {
        self.depth
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &z| (lo.min(z), hi.max(z)))
    }

    pub fn len(&self) -> usize {
        self.distance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distance.is_empty()
    }

    fn segment(&self, x: f64) -> Result<usize> {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return Err(Error::Profile(format!(
                "x = {x} outside sampled range [{lo}, {hi}]"
            )));
        }
        let idx = self.distance.partition_point(|&d| d <= x);
        Ok(idx.clamp(1, self.distance.len() - 1) - 1)
    }

    /// Linearly interpolated depth.
    pub fn depth_at(&self, x: f64) -> Result<f64> {
        let i = self.segment(x)?;
        let (x0, x1) = (self.distance[i], self.distance[i + 1]);
        let (z0, z1) = (self.depth[i], self.depth[i + 1]);
        Ok(z0 + (z1 - z0) * (x - x0) / (x1 - x0))
    }

    /// Slope of the segment containing `x`.
    pub fn slope_at(&self, x: f64) -> Result<f64> {
        let i = self.segment(x)?;
        Ok((self.depth[i + 1] - self.depth[i]) / (self.distance[i + 1] - self.distance[i]))
    }

    /// Samples an analytic curve on a uniform grid.
    pub fn from_curve(curve: &dyn DepthCurve, start: f64, end: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && end > start) {
            return Err(Error::Profile("invalid sampling grid".into()));
        }
        let n = ((end - start) / spacing).round() as usize;
        let distance: Vec<f64> = (0..=n).map(|i| start + i as f64 * spacing).collect();
        let depth = distance.iter().map(|&x| curve.depth(x)).collect();
        Self::new(distance, depth)
    }
}

/// Synthetic seafloor settings: a long sinusoid plus a smoothed random walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSeafloor {
    pub length_m: f64,
    pub spacing_m: f64,
    pub base_depth_m: f64,
    pub swell_amplitude_m: f64,
    pub swell_wavelength_m: f64,
    pub roughness_m: f64,
    pub smoothing_window: usize,
    pub seed: u64,
}

impl Default for SyntheticSeafloor {
    fn default() -> Self {
        Self {
            length_m: 1000.0,
            spacing_m: 1.0,
            base_depth_m: 30.0,
            swell_amplitude_m: 2.0,
            swell_wavelength_m: 200.0,
            roughness_m: 0.15,
            smoothing_window: 15,
            seed: 0,
        }
    }
}

impl SyntheticSeafloor {
    pub fn generate(&self) -> Result<SampledProfile> {
        if !(self.spacing_m > 0.0 && self.length_m > self.spacing_m) {
            return Err(Error::Profile("synthetic seafloor needs length > spacing > 0".into()));
        }
        let n = (self.length_m / self.spacing_m).round() as usize + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut walk = Vec::with_capacity(n);
        let mut acc = 0.0;
        for _ in 0..n {
            let e: f64 = StandardNormal.sample(&mut rng);
            acc += self.roughness_m * e;
            walk.push(acc);
        }
        let half = self.smoothing_window / 2;
        let smooth: Vec<f64> = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(half);
                let hi = (i + half + 1).min(n);
                walk[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            })
            .collect();
        let k = 2.0 * std::f64::consts::PI / self.swell_wavelength_m;
        let distance: Vec<f64> = (0..n).map(|i| i as f64 * self.spacing_m).collect();
        let depth = distance
            .iter()
            .zip(&smooth)
            .map(|(&x, &r)| self.base_depth_m + self.swell_amplitude_m * (k * x).sin() + r)
            .collect();
        SampledProfile::new(distance, depth)
    }
}

/// Where the target depth comes from.
#[derive(Debug, Clone)]
pub enum ReferenceProfile {
    Constant(f64),
    Analytic(Arc<dyn DepthCurve>),
    Sampled(SampledProfile),
}

impl ReferenceProfile {
    pub fn sinusoid(curve: Sinusoid) -> Self {
        ReferenceProfile::Analytic(Arc::new(curve))
    }

    pub fn depth(&self, x: f64) -> Result<f64> {
        match self {
            ReferenceProfile::Constant(z) => Ok(*z),
            ReferenceProfile::Analytic(c) => Ok(c.depth(x)),
            ReferenceProfile::Sampled(s) => s.depth_at(x),
        }
    }

    /// `(g, g', g'')` at `x`; sampled tables have no curvature information.
    pub fn derivatives(&self, x: f64) -> Result<(f64, f64, f64)> {
        match self {
            ReferenceProfile::Constant(z) => Ok((*z, 0.0, 0.0)),
            ReferenceProfile::Analytic(c) => Ok((c.depth(x), c.slope(x), c.curvature(x))),
            ReferenceProfile::Sampled(_) => Err(Error::Profile(
                "curved-depth observations need an analytic profile".into(),
            )),
        }
    }
}
