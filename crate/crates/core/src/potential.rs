//! One-dimensional potentials `V(x)`.

use std::fmt;
use std::io::Read;
use std::path::Path;

use crate::numerics::roots::bisect;
use crate::{Error, Interval, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Free,
    Harmonic,
    Linear,
    Tabulated,
}

impl PotentialKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PotentialKind::Free => "free",
            PotentialKind::Harmonic => "harmonic",
            PotentialKind::Linear => "linear",
            PotentialKind::Tabulated => "tabulated",
        }
    }
}

impl fmt::Display for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    /// `V = 0`.
    Free,
    /// `V = stiffness (x - center)^2 / 2`.
    Harmonic { stiffness: f64, center: f64 },
    /// `V = slope x + offset`.
    Linear { slope: f64, offset: f64 },
    /// Monotone cubic interpolation of sampled values.
    Tabulated(TabulatedPotential),
}

impl Potential {
    pub fn harmonic(stiffness: f64, center: f64) -> Result<Self> {
        if !(stiffness.is_finite() && stiffness > 0.0) || !center.is_finite() {
            return Err(Error::InvalidParameter {
                name: "stiffness",
                value: stiffness,
            });
        }
        Ok(Potential::Harmonic { stiffness, center })
    }

    pub fn linear(slope: f64, offset: f64) -> Result<Self> {
        for (name, value) in [("slope", slope), ("offset", offset)] {
            if !value.is_finite() {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        Ok(Potential::Linear { slope, offset })
    }

    pub fn tabulated(xs: Vec<f64>, vs: Vec<f64>) -> Result<Self> {
        TabulatedPotential::new(xs, vs).map(Potential::Tabulated)
    }

    /// Reads a two-column `x,V` CSV; a leading header row is skipped.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let (mut xs, mut vs) = (Vec::new(), Vec::new());
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Table(e.to_string()))?;
            if record.len() != 2 {
                return Err(Error::Table(format!(
                    "row {}: expected 2 columns, found {}",
                    i + 1,
                    record.len()
                )));
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(row) => {
                    xs.push(row[0]);
                    vs.push(row[1]);
                }
                Err(_) if i == 0 => continue,
                Err(e) => return Err(Error::Table(format!("row {}: {e}", i + 1))),
            }
        }
        Self::tabulated(xs, vs)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Table(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    pub fn kind(&self) -> PotentialKind {
        match self {
            Potential::Free => PotentialKind::Free,
            Potential::Harmonic { .. } => PotentialKind::Harmonic,
            Potential::Linear { .. } => PotentialKind::Linear,
            Potential::Tabulated(_) => PotentialKind::Tabulated,
        }
    }

    /// `V(x)`; NaN where a tabulated potential is undefined.
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { stiffness, center } => {
                0.5 * stiffness * (x - center) * (x - center)
            }
            Potential::Linear { slope, offset } => slope * x + offset,
            Potential::Tabulated(t) => t.value(x),
        }
    }

    pub fn try_value(&self, x: f64) -> Result<f64> {
        let v = self.value(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinitePotential { x })
        }
    }

    /// Ascending roots of `V(x) = E`.
    pub fn turning_points(&self, energy: f64) -> Vec<f64> {
        match self {
            Potential::Free => Vec::new(),
            Potential::Harmonic { stiffness, center } => {
                if energy < 0.0 {
                    Vec::new()
                } else if energy == 0.0 {
                    vec![*center]
                } else {
                    let r = (2.0 * energy / stiffness).sqrt();
                    vec![center - r, center + r]
                }
            }
            Potential::Linear { slope, offset } => {
                if *slope == 0.0 {
                    Vec::new()
                } else {
                    vec![(energy - offset) / slope]
                }
            }
            Potential::Tabulated(t) => t.turning_points(energy),
        }
    }

    /// Infimum of `V` over `interval` (clipped to the table for tabulated data).
    pub fn min_over(&self, interval: Interval) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { center, .. } => {
                if interval.contains(*center) {
                    0.0
                } else {
                    self.value(interval.lo()).min(self.value(interval.hi()))
                }
            }
            Potential::Linear { slope, .. } if *slope == 0.0 => self.value(0.0),
            Potential::Linear { .. } => self.value(interval.lo()).min(self.value(interval.hi())),
            Potential::Tabulated(t) => t.min_over(interval),
        }
    }

    pub fn max_over(&self, interval: Interval) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { .. } | Potential::Linear { .. } => {
                self.value(interval.lo()).max(self.value(interval.hi()))
            }
            Potential::Tabulated(t) => t.max_over(interval),
        }
    }
}

/// Piecewise-cubic Hermite interpolant with Fritsch–Butland slopes, which keeps
/// each segment monotone and the whole curve C¹.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    xs: Vec<f64>,
    vs: Vec<f64>,
    slopes: Vec<f64>,
}

const MIN_ROWS: usize = 4;

impl TabulatedPotential {
    pub fn new(xs: Vec<f64>, vs: Vec<f64>) -> Result<Self> {
        if xs.len() != vs.len() {
            return Err(Error::Table(format!(
                "{} x values but {} V values",
                xs.len(),
                vs.len()
            )));
        }
        if xs.len() < MIN_ROWS {
            return Err(Error::Table(format!(
                "need at least {MIN_ROWS} rows, found {}",
                xs.len()
            )));
        }
        if let Some(i) = xs.iter().chain(&vs).position(|v| !v.is_finite()) {
            return Err(Error::Table(format!("non-finite entry at position {i}")));
        }
        if let Some(w) = xs.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Table(format!(
                "x not strictly increasing at row {}",
                w + 2
            )));
        }
        let slopes = pchip_slopes(&xs, &vs);
        Ok(Self { xs, vs, slopes })
    }

    pub fn range(&self) -> Interval {
        Interval::new(self.xs[0], *self.xs.last().unwrap()).unwrap()
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.vs)
    }

    pub fn value(&self, x: f64) -> f64 {
        if !self.range().contains(x) {
            return f64::NAN;
        }
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            n => (n - 1).min(self.xs.len() - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.vs[i]
            + h10 * h * self.slopes[i]
            + h01 * self.vs[i + 1]
            + h11 * h * self.slopes[i + 1]
    }

    fn turning_points(&self, energy: f64) -> Vec<f64> {
        const SUB: usize = 16;
        let g = |x: f64| self.value(x) - energy;
        let mut roots: Vec<f64> = Vec::new();
        let push = |r: f64, roots: &mut Vec<f64>| {
            if roots.last().is_none_or(|&last| (r - last).abs() > 1e-12) {
                roots.push(r);
            }
        };
        for seg in self.xs.windows(2) {
            let step = (seg[1] - seg[0]) / SUB as f64;
            let mut lo = seg[0];
            let mut g_lo = g(lo);
            if g_lo == 0.0 {
                push(lo, &mut roots);
            }
            for j in 1..=SUB {
                let hi = if j == SUB {
                    seg[1]
                } else {
                    seg[0] + step * j as f64
                };
                let g_hi = g(hi);
                if g_hi == 0.0 {
                    push(hi, &mut roots);
                } else if g_lo != 0.0 && g_lo.signum() != g_hi.signum() {
                    if let Some((a, b)) = bisect(g, lo, hi, 1e-14) {
                        push(0.5 * (a + b), &mut roots);
                    }
                }
                lo = hi;
                g_lo = g_hi;
            }
        }
        roots
    }

    // Each segment is monotone, so extrema sit at knots or at the clip ends.
    fn extreme_over(&self, interval: Interval, pick: fn(f64, f64) -> f64) -> f64 {
        let range = self.range();
        let lo = interval.lo().max(range.lo());
        let hi = interval.hi().min(range.hi());
        if lo > hi {
            return f64::NAN;
        }
        self.xs
            .iter()
            .zip(&self.vs)
            .filter(|(x, _)| lo < **x && **x < hi)
            .map(|(_, v)| *v)
            .fold(pick(self.value(lo), self.value(hi)), pick)
    }

    fn min_over(&self, interval: Interval) -> f64 {
        self.extreme_over(interval, f64::min)
    }

    fn max_over(&self, interval: Interval) -> f64 {
        self.extreme_over(interval, f64::max)
    }
}

fn pchip_slopes(xs: &[f64], vs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (vs[i + 1] - vs[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

// One-sided three-point estimate, clipped to preserve shape at the ends.
fn edge_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}
