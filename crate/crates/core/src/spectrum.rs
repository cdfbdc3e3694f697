//! Lorentzian-sum line-shape models and sampled spectra.
//!
//! Spectra serialise as plain CSV with a header row: `frequency_hz,signal` and an
//! optional third `sigma` column. Numbers are written with 12 significant digits.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// One Lorentzian line: peak height `amplitude` at `center`, full width `fwhm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lorentzian<T> {
    pub center: T,
    pub fwhm: T,
    pub amplitude: T,
}

impl<T: Real> Lorentzian<T> {
    pub fn new(center: T, fwhm: T, amplitude: T) -> Result<Self> {
        let l = Self { center, fwhm, amplitude };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm > T::zero()) || !self.fwhm.is_finite() {
            return invalid(format!("Lorentzian FWHM must be positive, got {}", self.fwhm));
        }
        if !(self.amplitude >= T::zero()) || !self.amplitude.is_finite() {
            return invalid(format!("Lorentzian amplitude must be non-negative, got {}", self.amplitude));
        }
        if !self.center.is_finite() {
            return invalid("Lorentzian center must be finite");
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, f: T) -> T {
        let x = T::lit(2.0) * (f - self.center) / self.fwhm;
        self.amplitude / (T::one() + x * x)
    }

    /// Partial derivatives `(∂/∂center, ∂/∂fwhm, ∂/∂amplitude)` at `f`.
    #[inline]
    pub fn gradient(&self, f: T) -> [T; 3] {
        let two = T::lit(2.0);
        let d = f - self.center;
        let x = two * d / self.fwhm;
        let shape = T::one() / (T::one() + x * x);
        let a_s2 = self.amplitude * shape * shape;
        // ∂/∂x of 1/(1+x²) = −2x/(1+x²)²
        let dx = -two * x * a_s2;
        [dx * (-two / self.fwhm), dx * (-x / self.fwhm), shape]
    }
}

/// Sum of Lorentzian components on an additive baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumModel<T> {
    pub components: Vec<Lorentzian<T>>,
    pub baseline: T,
}

impl<T: Real> SpectrumModel<T> {
    pub fn new(components: Vec<Lorentzian<T>>, baseline: T) -> Result<Self> {
        for c in &components {
            c.validate()?;
        }
        if !baseline.is_finite() {
            return invalid("baseline must be finite");
        }
        Ok(Self { components, baseline })
    }

    pub fn single(center: T, fwhm: T, amplitude: T) -> Result<Self> {
        Self::new(vec![Lorentzian::new(center, fwhm, amplitude)?], T::zero())
    }

    /// Baseline plus every component, summed in component order.
    pub fn eval(&self, f: T) -> T {
        self.components.iter().fold(self.baseline, |acc, c| acc + c.eval(f))
    }

    pub fn sample(&self, grid: &[T]) -> Vec<T> {
        grid.iter().map(|&f| self.eval(f)).collect()
    }

    /// Copy shifted by `df` along the frequency axis.
    pub fn shifted(&self, df: T) -> Self {
        Self {
            components: self.components.iter().map(|c| Lorentzian { center: c.center + df, ..*c }).collect(),
            baseline: self.baseline,
        }
    }
}

/// Sampled `(frequency, signal)` data with optional per-point uncertainties.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum<T> {
    pub frequency: Vec<T>,
    pub signal: Vec<T>,
    pub sigma: Option<Vec<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn new(frequency: Vec<T>, signal: Vec<T>, sigma: Option<Vec<T>>) -> Result<Self> {
        if frequency.len() != signal.len() || sigma.as_ref().is_some_and(|s| s.len() != frequency.len()) {
            return invalid("frequency, signal and sigma columns must have equal length");
        }
        Ok(Self { frequency, signal, sigma })
    }

    pub fn len(&self) -> usize {
        self.frequency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequency.is_empty()
    }

    pub fn with_sigma(mut self, sigma: Vec<T>) -> Result<Self> {
        if sigma.len() != self.frequency.len() {
            return invalid("sigma column length mismatch");
        }
        self.sigma = Some(sigma);
        Ok(self)
    }

    /// Writes the CSV representation (header row included).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        match &self.sigma {
            Some(_) => writeln!(w, "frequency_hz,signal,sigma")?,
            None => writeln!(w, "frequency_hz,signal")?,
        }
        for i in 0..self.len() {
            write!(w, "{},{}", fmt_sig(self.frequency[i].to_f64_lossy()), fmt_sig(self.signal[i].to_f64_lossy()))?;
            if let Some(s) = &self.sigma {
                write!(w, ",{}", fmt_sig(s[i].to_f64_lossy()))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Parses the CSV representation. A header row is required; blank lines and
    /// lines starting with `#` are skipped.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate().filter(|(_, l)| {
            l.as_ref().map(|s| !s.trim().is_empty() && !s.trim_start().starts_with('#')).unwrap_or(true)
        });
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty file".into() })?;
        let header = header?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let with_sigma = match cols.as_slice() {
            ["frequency_hz", "signal"] => false,
            ["frequency_hz", "signal", "sigma"] => true,
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header `frequency_hz,signal[,sigma]`, got `{header}`"),
                })
            }
        };
        let (mut f, mut y, mut s) = (Vec::new(), Vec::new(), Vec::new());
        for (idx, line) in lines {
            let line = line?;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let expected = if with_sigma { 3 } else { 2 };
            if fields.len() != expected {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {expected} columns, got {}", fields.len()),
                });
            }
            let parse = |x: &str| -> Result<T> {
                x.parse::<f64>().map(T::lit).map_err(|e| Error::Parse { line: idx + 1, message: format!("`{x}`: {e}") })
            };
            f.push(parse(fields[0])?);
            y.push(parse(fields[1])?);
            if with_sigma {
                s.push(parse(fields[2])?);
            }
        }
        Self::new(f, y, with_sigma.then_some(s))
    }
}

/// Uniform grid of `points` frequencies from `start` to `stop` inclusive.
pub fn linear_grid<T: Real>(start: T, stop: T, points: usize) -> Result<Vec<T>> {
    if points < 2 || !(stop > start) {
        return invalid("grid needs at least two points and stop > start");
    }
    let step = (stop - start) / T::from_usize_lossy(points - 1);
    Ok((0..points).map(|i| start + step * T::from_usize_lossy(i)).collect())
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Formats with 12 significant digits, dropping trailing zeros (like C's `%.12g`).
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, mantissa.parse::<f64>().unwrap() * 10f64.powi(exp));
        trim_zeros(&s)
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}
