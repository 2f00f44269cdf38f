//! Time series of the complex order parameter `z₁(t) = R e^{-iφ}`.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderSample {
    pub t: f64,
    pub z1: Complex64,
    /// Always `|z1|`.
    pub r: f64,
}

impl OrderSample {
    pub fn new(t: f64, z1: Complex64) -> Self {
        Self { t, z1, r: z1.norm() }
    }

    /// `z_{-1} = conj(z₁)`; never stored.
    pub fn z_minus(&self) -> Complex64 {
        self.z1.conj()
    }

    /// Phase `φ` with `z₁ = R e^{-iφ}`.
    pub fn phase(&self) -> f64 {
        -self.z1.arg()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OrderSeries {
    pub samples: Vec<OrderSample>,
}

impl OrderSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_fn(times: impl IntoIterator<Item = f64>, mut z: impl FnMut(f64) -> Complex64) -> Self {
        Self {
            samples: times.into_iter().map(|t| OrderSample::new(t, z(t))).collect(),
        }
    }

    /// Appends a sample; timestamps must increase strictly.
    pub fn push(&mut self, t: f64, z1: Complex64) {
        if let Some(last) = self.samples.last() {
            assert!(t > last.t, "order series timestamps must increase ({} after {})", t, last.t);
        }
        self.samples.push(OrderSample::new(t, z1));
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.r).collect()
    }

    pub fn t_max(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Sample whose time is closest to `t`.
    pub fn nearest(&self, t: f64) -> Option<&OrderSample> {
        let i = self.samples.partition_point(|s| s.t < t);
        let candidates = [i.checked_sub(1), Some(i)];
        candidates
            .into_iter()
            .flatten()
            .filter_map(|j| self.samples.get(j))
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }

    /// Four-point Lagrange interpolation of `z₁` (linear near the ends).
    /// Assumes a uniform time grid.
    pub fn interpolate(&self, t: f64) -> Complex64 {
        let n = self.samples.len();
        assert!(n >= 2, "interpolation needs at least two samples");
        let t0 = self.samples[0].t;
        let h = self.samples[1].t - t0;
        let x = (t - t0) / h;
        let i = x.floor().clamp(0.0, (n - 2) as f64) as usize;
        let frac = x - i as f64;
        if frac.abs() < 1e-12 {
            return self.samples[i].z1;
        }
        if (frac - 1.0).abs() < 1e-12 {
            return self.samples[i + 1].z1;
        }
        if i == 0 || i + 2 >= n {
            let a = self.samples[i].z1;
            let b = self.samples[i + 1].z1;
            return a + (b - a) * frac;
        }
        let s = frac;
        let p = [
            self.samples[i - 1].z1,
            self.samples[i].z1,
            self.samples[i + 1].z1,
            self.samples[i + 2].z1,
        ];
        let w = [
            -s * (s - 1.0) * (s - 2.0) / 6.0,
            (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
            -(s + 1.0) * s * (s - 2.0) / 2.0,
            (s + 1.0) * s * (s - 1.0) / 6.0,
        ];
        p.iter().zip(w).map(|(z, c)| z * c).sum()
    }

    /// `max_t |z₁ - z₁'|` over matching samples.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "series length mismatch");
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a.z1 - b.z1).norm())
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,Re_z1,Im_z1,R` and 17 significant digits.
    pub fn to_csv(&self) -> String {
        self.to_csv_tagged(None)
    }

    /// CSV with an extra `source` column when `source` is given.
    pub fn to_csv_tagged(&self, source: Option<&str>) -> String {
        let mut out = String::from("t,Re_z1,Im_z1,R");
        if source.is_some() {
            out.push_str(",source");
        }
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", s.t, s.z1.re, s.z1.im, s.r);
            if let Some(tag) = source {
                let _ = write!(out, ",{tag}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty order series".into()))?;
        if !header.starts_with("t,Re_z1,Im_z1,R") {
            return Err(Error::Format(format!("unexpected order series header {header:?}")));
        }
        let mut series = Self::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() < 4 {
                return Err(Error::Format(format!("line {}: expected 4 columns", n + 2)));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("line {}: {e}", n + 2)))
            };
            series
                .samples
                .push(OrderSample::new(parse(cols[0])?, Complex64::new(parse(cols[1])?, parse(cols[2])?)));
        }
        Ok(series)
    }
}
