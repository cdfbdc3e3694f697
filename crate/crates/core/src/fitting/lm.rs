use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::spectrum::{Lorentzian, Spectrum};

use super::gamma::goodness_of_fit;

/// Q below which a model is rejected when comparing fits.
pub const DEFAULT_Q_THRESHOLD: f64 = 1e-3;

const LAMBDA_START: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e20;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions<T> {
    pub max_iterations: usize,
    /// Starting components; generated by peak detection when absent.
    pub initial_guess: Option<Vec<Lorentzian<T>>>,
    pub initial_baseline: Option<T>,
    /// Data are ±Δ averages: each component contributes `½[L(x − c) + L(x + c)]`
    /// and component 0 (the carrier) is pinned at zero detuning.
    pub folded: bool,
    /// `(component index, center)` pairs held fixed during the fit.
    pub fixed_centers: Vec<(usize, T)>,
    /// Rejection threshold used by [`compare_models`].
    pub q_threshold: T,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            initial_guess: None,
            initial_baseline: None,
            folded: false,
            fixed_centers: Vec::new(),
            q_threshold: T::lit(DEFAULT_Q_THRESHOLD),
        }
    }
}

impl<T: Real> FitOptions<T> {
    pub fn folded() -> Self {
        Self { folded: true, ..Self::default() }
    }

    fn pinned_center(&self, k: usize) -> Option<T> {
        if self.folded && k == 0 {
            return Some(T::zero());
        }
        self.fixed_centers.iter().find(|(i, _)| *i == k).map(|&(_, c)| c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedComponent<T> {
    pub center: T,
    pub fwhm: T,
    pub amplitude: T,
    pub center_err: T,
    pub fwhm_err: T,
    pub amplitude_err: T,
    pub center_fixed: bool,
}

impl<T: Real> FittedComponent<T> {
    pub fn line(&self) -> Lorentzian<T> {
        Lorentzian { center: self.center, fwhm: self.fwhm, amplitude: self.amplitude }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult<T> {
    pub components: Vec<FittedComponent<T>>,
    pub baseline: T,
    pub baseline_err: T,
    /// Covariance over `[c₀, w₀, a₀, c₁, …, baseline]`; rows of fixed parameters are zero.
    pub covariance: Vec<Vec<T>>,
    pub chi_square: T,
    pub dof: usize,
    pub q_value: T,
    pub converged: bool,
    pub iterations: usize,
    pub folded: bool,
    /// Largest χ² gradient component times that parameter's standard error.
    pub gradient_norm: T,
    pub warnings: Vec<String>,
}

impl<T: Real> FitResult<T> {
    pub fn lines(&self) -> Vec<Lorentzian<T>> {
        self.components.iter().map(FittedComponent::line).collect()
    }

    pub fn eval(&self, x: T) -> T {
        model_value(&self.lines(), self.baseline, self.folded, x)
    }

    /// Covariance of the amplitudes of components `i` and `j`.
    pub fn amplitude_covariance(&self, i: usize, j: usize) -> T {
        self.covariance[3 * i + 2][3 * j + 2]
    }

    /// Absolute differences between consecutive fitted centers, sorted by center.
    pub fn splittings(&self) -> Vec<T> {
        let mut c: Vec<T> = self.components.iter().map(|c| c.center).collect();
        c.sort_by(|a, b| a.partial_cmp(b).expect("finite centers"));
        c.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Model value at `x` for components with the given parameterisation.
pub fn model_value<T: Real>(components: &[Lorentzian<T>], baseline: T, folded: bool, x: T) -> T {
    components.iter().fold(baseline, |acc, c| {
        if folded {
            let mirror = Lorentzian { center: -c.center, ..*c };
            acc + T::lit(0.5) * (c.eval(x) + mirror.eval(x))
        } else {
            acc + c.eval(x)
        }
    })
}

/// Analytic gradient of [`model_value`] with respect to
/// `[c₀, w₀, a₀, c₁, w₁, a₁, …, baseline]`.
pub fn model_gradient<T: Real>(components: &[Lorentzian<T>], folded: bool, x: T) -> Vec<T> {
    let mut g = Vec::with_capacity(3 * components.len() + 1);
    let half = T::lit(0.5);
    for c in components {
        let d = c.gradient(x);
        if folded {
            let m = Lorentzian { center: -c.center, ..*c }.gradient(x);
            g.extend_from_slice(&[half * (d[0] - m[0]), half * (d[1] + m[1]), half * (d[2] + m[2])]);
        } else {
            g.extend_from_slice(&d);
        }
    }
    g.push(T::one());
    g
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Param {
    Center(usize),
    LnFwhm(usize),
    LnAmplitude(usize),
    Baseline,
}

impl Param {
    fn natural_index(self, n_components: usize) -> usize {
        match self {
            Param::Center(k) => 3 * k,
            Param::LnFwhm(k) => 3 * k + 1,
            Param::LnAmplitude(k) => 3 * k + 2,
            Param::Baseline => 3 * n_components,
        }
    }

    fn describe(self) -> String {
        match self {
            Param::Center(k) => format!("component {k} center"),
            Param::LnFwhm(k) => format!("component {k} fwhm"),
            Param::LnAmplitude(k) => format!("component {k} amplitude"),
            Param::Baseline => "baseline".into(),
        }
    }
}

/// Internal parameterisation: centers divided by `scale`, logarithms of FWHM and
/// amplitude, raw baseline.
struct Problem<'a, T> {
    x: &'a [T],
    y: &'a [T],
    sigma: &'a [T],
    folded: bool,
    scale: T,
    layout: Vec<Param>,
    pinned: Vec<Option<T>>,
}

impl<'a, T: Real> Problem<'a, T> {
    fn unpack(&self, p: &[T]) -> (Vec<Lorentzian<T>>, T) {
        let mut comps: Vec<Lorentzian<T>> = self
            .pinned
            .iter()
            .map(|pin| Lorentzian { center: pin.unwrap_or(T::zero()), fwhm: T::one(), amplitude: T::one() })
            .collect();
        let mut baseline = T::zero();
        for (&param, &v) in self.layout.iter().zip(p) {
            match param {
                Param::Center(k) => comps[k].center = v * self.scale,
                Param::LnFwhm(k) => comps[k].fwhm = v.exp(),
                Param::LnAmplitude(k) => comps[k].amplitude = v.exp(),
                Param::Baseline => baseline = v,
            }
        }
        (comps, baseline)
    }

    fn pack(&self, comps: &[Lorentzian<T>], baseline: T) -> Vec<T> {
        self.layout
            .iter()
            .map(|&param| match param {
                Param::Center(k) => comps[k].center / self.scale,
                Param::LnFwhm(k) => comps[k].fwhm.ln(),
                Param::LnAmplitude(k) => comps[k].amplitude.ln(),
                Param::Baseline => baseline,
            })
            .collect()
    }

    /// Derivative of each natural parameter with respect to its internal one.
    fn chain_factors(&self, comps: &[Lorentzian<T>]) -> Vec<T> {
        self.layout
            .iter()
            .map(|&param| match param {
                Param::Center(_) => self.scale,
                Param::LnFwhm(k) => comps[k].fwhm,
                Param::LnAmplitude(k) => comps[k].amplitude,
                Param::Baseline => T::one(),
            })
            .collect()
    }

    /// `χ²(trial) − χ²(current)` summed per point as `(r₁ − r₀)(r₁ + r₀)`, which
    /// resolves changes far below the rounding error of χ² itself.
    fn chi_square_change(&self, current: &[T], trial: &[T]) -> T {
        let (c0, b0) = self.unpack(current);
        let (c1, b1) = self.unpack(trial);
        self.x.iter().zip(self.y).zip(self.sigma).fold(T::zero(), |acc, ((&x, &y), &s)| {
            let m0 = model_value(&c0, b0, self.folded, x);
            let m1 = model_value(&c1, b1, self.folded, x);
            let (r0, r1) = ((y - m0) / s, (y - m1) / s);
            acc + (m0 - m1) / s * (r1 + r0)
        })
    }

    /// χ², `JᵀJ` and `Jᵀr` with `r = (y − m)/σ` and `J = ∂m/∂p / σ`.
    fn normal_equations(&self, p: &[T]) -> (T, Matrix<T>, Vec<T>) {
        let (comps, b) = self.unpack(p);
        let n_comp = comps.len();
        let chain = self.chain_factors(&comps);
        let np = self.layout.len();
        let mut a = Matrix::zeros(np);
        let mut g = vec![T::zero(); np];
        let mut chi2 = T::zero();
        let mut row = vec![T::zero(); np];
        for ((&x, &y), &s) in self.x.iter().zip(self.y).zip(self.sigma) {
            let r = (y - model_value(&comps, b, self.folded, x)) / s;
            chi2 = chi2 + r * r;
            let nat = model_gradient(&comps, self.folded, x);
            for (j, &param) in self.layout.iter().enumerate() {
                row[j] = nat[param.natural_index(n_comp)] * chain[j] / s;
            }
            for i in 0..np {
                g[i] = g[i] + row[i] * r;
                for j in 0..=i {
                    a[(i, j)] = a[(i, j)] + row[i] * row[j];
                }
            }
        }
        for i in 0..np {
            for j in 0..i {
                a[(j, i)] = a[(i, j)];
            }
        }
        (chi2, a, g)
    }
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Largest `|∂χ²/∂pᵢ| · σᵢ`: the χ² gradient measured per standard error, which
/// does not depend on how the parameters are scaled. Falls back to the raw
/// gradient when `JᵀJ` is singular.
fn scaled_gradient<T: Real>(a: &Matrix<T>, g: &[T]) -> T {
    match a.inverse() {
        Ok(inv) => g
            .iter()
            .enumerate()
            .fold(T::zero(), |m, (i, &gi)| m.max(T::lit(2.0) * gi.abs() * inv[(i, i)].max(T::zero()).sqrt())),
        Err(_) => T::lit(2.0) * max_abs(g),
    }
}

fn median<T: Real>(mut v: Vec<T>) -> T {
    if v.is_empty() {
        return T::zero();
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite data"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        T::lit(0.5) * (v[n / 2 - 1] + v[n / 2])
    }
}

fn moving_average<T: Real>(y: &[T], half_window: usize) -> Vec<T> {
    (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(half_window);
            let hi = (i + half_window + 1).min(y.len());
            y[lo..hi].iter().fold(T::zero(), |a, &b| a + b) / T::from_usize_lossy(hi - lo)
        })
        .collect()
}

/// Deterministic starting point: 5-point moving average, local maxima above
/// `baseline + 3·MAD noise`, FWHM seeded at four grid steps. Slots that peak
/// detection cannot fill are seeded at the largest remaining residual.
pub fn initial_guess<T: Real>(
    data: &Spectrum<T>,
    n_components: usize,
    options: &FitOptions<T>,
) -> Result<(Vec<Lorentzian<T>>, T)> {
    let x = &data.frequency;
    let y = &data.signal;
    if x.len() < 3 {
        return invalid("need at least three points to seed a fit");
    }
    let smooth = moving_average(y, 2);
    let mut sorted = smooth.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite data"));
    let baseline = options.initial_baseline.unwrap_or(sorted[sorted.len() / 10]);
    let dev: Vec<T> = y.iter().zip(&smooth).map(|(&a, &b)| a - b).collect();
    let med = median(dev.clone());
    let noise = T::lit(1.4826) * median(dev.iter().map(|&d| (d - med).abs()).collect());
    let step = median(x.windows(2).map(|w| (w[1] - w[0]).abs()).collect());
    let fwhm = T::lit(4.0) * step.max(T::min_positive_value());
    let range = sorted[sorted.len() - 1] - sorted[0];
    let floor_amp = (range * T::lit(1e-3)).max(noise).max(T::min_positive_value().sqrt());

    let nearest = |c: T| -> usize {
        (0..x.len())
            .min_by(|&a, &b| (x[a] - c).abs().partial_cmp(&(x[b] - c).abs()).expect("finite"))
            .expect("non-empty")
    };
    let eval_guess = |guesses: &[Lorentzian<T>], xi: T| -> T {
        guesses.iter().fold(T::zero(), |acc, g| {
            if options.folded {
                acc + T::lit(0.5) * (g.eval(xi) + Lorentzian { center: -g.center, ..*g }.eval(xi))
            } else {
                acc + g.eval(xi)
            }
        })
    };

    let mut slots: Vec<Option<Lorentzian<T>>> = vec![None; n_components];
    for (k, slot) in slots.iter_mut().enumerate() {
        if let Some(c) = options.pinned_center(k) {
            let a = (smooth[nearest(c)] - baseline).max(floor_amp);
            *slot = Some(Lorentzian { center: c, fwhm, amplitude: a });
        }
    }

    let n = x.len();
    let threshold = baseline + T::lit(3.0) * noise;
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || smooth[i] > smooth[i - 1];
            let right = i == n - 1 || smooth[i] >= smooth[i + 1];
            left && right && smooth[i] > threshold
        })
        .collect();
    peaks.sort_by(|&a, &b| smooth[b].partial_cmp(&smooth[a]).expect("finite"));

    let mut free: Vec<Lorentzian<T>> = Vec::new();
    let n_free = slots.iter().filter(|s| s.is_none()).count();
    let too_close = |c: T, placed: &[Lorentzian<T>]| placed.iter().any(|g| (g.center - c).abs() < T::lit(0.5) * fwhm);
    for &i in &peaks {
        if free.len() == n_free {
            break;
        }
        let placed: Vec<Lorentzian<T>> = slots.iter().flatten().copied().chain(free.iter().copied()).collect();
        if too_close(x[i], &placed) {
            continue;
        }
        let a = (smooth[i] - baseline - eval_guess(&placed, x[i])).max(floor_amp);
        free.push(Lorentzian { center: x[i], fwhm, amplitude: a });
    }
    while free.len() < n_free {
        let placed: Vec<Lorentzian<T>> = slots.iter().flatten().copied().chain(free.iter().copied()).collect();
        let best = (0..n)
            .filter(|&i| !too_close(x[i], &placed))
            .map(|i| (i, smooth[i] - baseline - eval_guess(&placed, x[i])))
            .fold(None::<(usize, T)>, |best, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            });
        let (i, r) = match best {
            Some(b) => b,
            None => (n / 2, floor_amp),
        };
        free.push(Lorentzian { center: x[i], fwhm, amplitude: r.max(floor_amp) });
    }
    free.sort_by(|a, b| a.center.partial_cmp(&b.center).expect("finite"));
    let mut free = free.into_iter();
    let guesses = slots.into_iter().map(|s| s.unwrap_or_else(|| free.next().expect("slot count matches"))).collect();
    Ok((guesses, baseline))
}

/// Fits `n_components` Lorentzians plus a shared baseline by Levenberg-Marquardt.
///
/// Minimises `χ² = Σ ((y − m)/σ)²`. FWHM and amplitudes are fitted through their
/// logarithms, so both stay positive. The covariance is the inverse of `JᵀJ` at
/// the solution, mapped back to natural parameters. A fit that exhausts the
/// iteration budget is returned with `converged = false`.
pub fn fit_lorentzian_sum<T: Real>(
    data: &Spectrum<T>,
    n_components: usize,
    options: &FitOptions<T>,
) -> Result<FitResult<T>> {
    if n_components == 0 {
        return invalid("at least one component is required");
    }
    let sigma = data.sigma.as_ref().ok_or_else(|| Error::InvalidInput("fit requires per-point sigmas".into()))?;
    if sigma.iter().any(|&s| !(s > T::zero()) || !s.is_finite()) {
        return invalid("all sigmas must be positive and finite");
    }
    if data.signal.iter().chain(&data.frequency).any(|v| !v.is_finite()) {
        return invalid("data contain non-finite values");
    }
    if data.len() < 3 * n_components + 2 {
        return invalid(format!(
            "{} components need at least {} points, got {}",
            n_components,
            3 * n_components + 2,
            data.len()
        ));
    }
    for &(k, _) in &options.fixed_centers {
        if k >= n_components {
            return invalid(format!("fixed center refers to missing component {k}"));
        }
    }

    let (guess, baseline0) = match &options.initial_guess {
        Some(g) if g.len() == n_components => {
            for c in g {
                c.validate()?;
                if c.amplitude == T::zero() {
                    return invalid("initial amplitudes must be positive");
                }
            }
            let mut g = g.clone();
            for (k, c) in g.iter_mut().enumerate() {
                if let Some(pin) = options.pinned_center(k) {
                    c.center = pin;
                }
            }
            let (_, b) = initial_guess(data, n_components, options)?;
            (g, options.initial_baseline.unwrap_or(b))
        }
        Some(g) => return invalid(format!("initial guess has {} components, expected {n_components}", g.len())),
        None => initial_guess(data, n_components, options)?,
    };

    let pinned: Vec<Option<T>> = (0..n_components).map(|k| options.pinned_center(k)).collect();
    let mut layout = Vec::new();
    for (k, pin) in pinned.iter().enumerate() {
        if pin.is_none() {
            layout.push(Param::Center(k));
        }
        layout.push(Param::LnFwhm(k));
        layout.push(Param::LnAmplitude(k));
    }
    layout.push(Param::Baseline);
    let n_free = layout.len();
    if data.len() <= n_free {
        return invalid("no degrees of freedom left");
    }
    let dof = data.len() - n_free;

    let span = data.frequency.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let problem = Problem {
        x: &data.frequency,
        y: &data.signal,
        sigma,
        folded: options.folded,
        scale: span.max(T::one()),
        layout,
        pinned,
    };

    let gtol = T::tolerance(1e-10, 1e3);
    let accept_gtol = T::tolerance(1e-6, 1e5);
    let mut p = problem.pack(&guess, baseline0);
    let (mut chi2, mut a, mut g) = problem.normal_equations(&p);
    let mut lambda = T::lit(LAMBDA_START);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        let grad_norm = scaled_gradient(&a, &g);
        if grad_norm <= gtol * chi2.max(T::one()) {
            converged = true;
            break;
        }
        iterations += 1;
        let mut stepped = false;
        while lambda < T::lit(LAMBDA_MAX) {
            let mut damped = a.clone();
            for i in 0..n_free {
                let d = a[(i, i)].max(T::min_positive_value());
                damped[(i, i)] = a[(i, i)] + lambda * d;
            }
            if let Ok(delta) = damped.solve(&g) {
                let trial: Vec<T> = p.iter().zip(&delta).map(|(&pi, &di)| pi + di).collect();
                let change = problem.chi_square_change(&p, &trial);
                if change.is_finite() && change < T::zero() {
                    p = trial;
                    lambda = (lambda * T::lit(0.1)).max(T::lit(1e-12));
                    stepped = true;
                    break;
                }
            }
            lambda = lambda * T::lit(10.0);
        }
        if !stepped {
            // No descent direction left at working precision.
            converged = scaled_gradient(&a, &g) <= accept_gtol * chi2.max(T::one());
            break;
        }
        let next = problem.normal_equations(&p);
        chi2 = next.0;
        a = next.1;
        g = next.2;
    }

    let (comps, baseline) = problem.unpack(&p);
    let n_comp = comps.len();
    let inverse = a.inverse().map_err(|col| Error::RankDeficient { parameter: problem.layout[col].describe() })?;
    let chain = problem.chain_factors(&comps);
    let dim = 3 * n_comp + 1;
    let mut covariance = vec![vec![T::zero(); dim]; dim];
    for (i, pi) in problem.layout.iter().enumerate() {
        for (j, pj) in problem.layout.iter().enumerate() {
            covariance[pi.natural_index(n_comp)][pj.natural_index(n_comp)] = chain[i] * chain[j] * inverse[(i, j)];
        }
    }
    let err = |idx: usize| covariance[idx][idx].max(T::zero()).sqrt();
    let components: Vec<FittedComponent<T>> = comps
        .iter()
        .enumerate()
        .map(|(k, c)| FittedComponent {
            center: c.center,
            fwhm: c.fwhm,
            amplitude: c.amplitude,
            center_err: err(3 * k),
            fwhm_err: err(3 * k + 1),
            amplitude_err: err(3 * k + 2),
            center_fixed: problem.pinned[k].is_some(),
        })
        .collect();

    let mut warnings = Vec::new();
    for i in 0..n_comp {
        for j in i + 1..n_comp {
            let (ci, cj) = (&components[i], &components[j]);
            if (ci.center - cj.center).abs() < T::lit(0.25) * ci.fwhm.min(cj.fwhm) {
                warnings.push(format!("components {i} and {j} are closer than a quarter FWHM; the pair is degenerate"));
            }
        }
    }
    if !converged {
        warnings.push(format!("no convergence after {iterations} iterations"));
    }

    Ok(FitResult {
        components,
        baseline,
        baseline_err: err(3 * n_comp),
        covariance,
        chi_square: chi2,
        dof,
        q_value: goodness_of_fit(chi2, dof)?,
        converged,
        iterations,
        folded: options.folded,
        gradient_norm: scaled_gradient(&a, &g),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The model with fewer components is adequate.
    PreferSimpler,
    /// Only the richer model survives the Q threshold.
    PreferRicher,
    /// Both component counts are equal.
    NoPreference,
    /// Neither model reaches the threshold.
    NeitherAcceptable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelComparison<T> {
    pub components_a: usize,
    pub components_b: usize,
    pub fit_a: Result<FitResult<T>>,
    pub fit_b: Result<FitResult<T>>,
    pub verdict: Verdict,
    /// Component count of the preferred model, if any.
    pub preferred: Option<usize>,
    pub summary: String,
}

/// Fits both component counts and applies the Q-threshold rule: the richer
/// model wins only if it reaches `q_threshold` while the simpler one does not.
pub fn compare_models<T: Real>(
    data: &Spectrum<T>,
    components_a: usize,
    components_b: usize,
    options: &FitOptions<T>,
) -> ModelComparison<T> {
    let fit = |n: usize| {
        let mut o = options.clone();
        if o.initial_guess.as_ref().is_some_and(|g| g.len() != n) {
            o.initial_guess = None;
        }
        o.fixed_centers.retain(|&(k, _)| k < n);
        fit_lorentzian_sum(data, n, &o)
    };
    let fit_a = fit(components_a);
    let fit_b = if components_a == components_b { fit_a.clone() } else { fit(components_b) };
    let thr = options.q_threshold;
    let q = |r: &Result<FitResult<T>>| match r {
        Ok(f) if f.converged => Some(f.q_value),
        _ => None,
    };
    let ok = |r: &Result<FitResult<T>>| q(r).is_some_and(|v| v >= thr);
    let (simple_n, rich_n, simple, rich) = if components_a <= components_b {
        (components_a, components_b, &fit_a, &fit_b)
    } else {
        (components_b, components_a, &fit_b, &fit_a)
    };
    let (verdict, preferred) = if components_a == components_b {
        (Verdict::NoPreference, None)
    } else if ok(simple) {
        (Verdict::PreferSimpler, Some(simple_n))
    } else if ok(rich) {
        (Verdict::PreferRicher, Some(rich_n))
    } else {
        (Verdict::NeitherAcceptable, None)
    };
    let fmt_q = |r: &Result<FitResult<T>>| match r {
        Ok(f) => format!("Q = {:.3e}{}", f.q_value.to_f64_lossy(), if f.converged { "" } else { " (not converged)" }),
        Err(e) => format!("failed: {e}"),
    };
    let summary = format!(
        "{} component(s): {}; {} component(s): {}; threshold {:.1e} -> {}",
        components_a,
        fmt_q(&fit_a),
        components_b,
        fmt_q(&fit_b),
        thr.to_f64_lossy(),
        match preferred {
            Some(n) => format!("prefer {n} component(s)"),
            None if verdict == Verdict::NoPreference => "no preference".into(),
            None => "neither model acceptable".into(),
        }
    );
    ModelComparison { components_a, components_b, fit_a, fit_b, verdict, preferred, summary }
}
