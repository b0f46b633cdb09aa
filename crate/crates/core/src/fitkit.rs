//! Weighted nonlinear least squares for the four model families every
//! measured curve is reduced with: time sinusoid, phase sinusoid,
//! exponential decay and thermal sideband flops.
//!
//! The minimizer is a damped Gauss-Newton iteration with a
//! Levenberg-style damping schedule; parameter uncertainties come from the
//! inverse of the undamped normal matrix at the optimum.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion;

/// Model family; parameter layout is documented per variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Model {
    /// f(t) = A/2 cos(pi t / tau_pi) + y0, params `[a, tau_pi, y0]`.
    SinTime,
    /// f(phi) = A/2 sin(phi + phi0) + y0, params `[a, phi0, y0]`.
    SinPhase,
    /// f(t) = a exp(-t / tau) + c, params `[a, tau, c]`.
    ExpDecay,
    /// Thermal sideband flop at fixed Lamb-Dicke parameter and sideband
    /// order, params `[nbar, omega0]`.
    ThermalFlop { eta: f64, order: i32 },
}

impl Model {
    pub fn param_count(&self) -> usize {
        match self {
            Model::ThermalFlop { .. } => 2,
            _ => 3,
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            Model::SinTime => &["a", "tau_pi", "y0"],
            Model::SinPhase => &["a", "phi0", "y0"],
            Model::ExpDecay => &["a", "tau", "c"],
            Model::ThermalFlop { .. } => &["nbar", "omega0"],
        }
    }

    pub fn eval(&self, params: &[f64], x: f64) -> f64 {
        match *self {
            Model::SinTime => {
                params[0] / 2.0 * (std::f64::consts::PI * x / params[1]).cos() + params[2]
            }
            Model::SinPhase => params[0] / 2.0 * (x + params[1]).sin() + params[2],
            Model::ExpDecay => params[0] * (-x / params[1]).exp() + params[2],
            Model::ThermalFlop { eta, order } => {
                let nbar = params[0].max(0.0);
                motion::thermal_flop(x, nbar, eta, params[1], order).unwrap_or(f64::NAN)
            }
        }
    }

    fn jacobian_row(&self, params: &[f64], x: f64, out: &mut [f64]) {
        match *self {
            Model::SinTime => {
                let arg = std::f64::consts::PI * x / params[1];
                out[0] = 0.5 * arg.cos();
                out[1] = params[0] / 2.0 * arg.sin() * arg / params[1];
                out[2] = 1.0;
            }
            Model::SinPhase => {
                out[0] = 0.5 * (x + params[1]).sin();
                out[1] = params[0] / 2.0 * (x + params[1]).cos();
                out[2] = 1.0;
            }
            Model::ExpDecay => {
                let e = (-x / params[1]).exp();
                out[0] = e;
                out[1] = params[0] * e * x / (params[1] * params[1]);
                out[2] = 1.0;
            }
            Model::ThermalFlop { .. } => {
                // no closed form; central differences
                for k in 0..2 {
                    let h = 1e-6 * params[k].abs().max(1e-3);
                    let mut plus = params.to_vec();
                    let mut minus = params.to_vec();
                    plus[k] += h;
                    minus[k] -= h;
                    out[k] = (self.eval(&plus, x) - self.eval(&minus, x)) / (2.0 * h);
                }
            }
        }
    }
}

/// Fitted parameters with their 1-sigma uncertainties.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<f64>,
    pub one_sigma: Vec<f64>,
    pub chi2: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn param(&self, idx: usize) -> f64 {
        self.params[idx]
    }
}

trait Residuals {
    fn n_params(&self) -> usize;
    fn eval(&self, params: &[f64], x: f64) -> f64;
    fn jacobian_row(&self, params: &[f64], x: f64, out: &mut [f64]);
    /// Post-fit cleanup (phase wrapping).
    fn finalize(&self, _params: &mut [f64]) {}
}

struct ModelResiduals(Model);

impl Residuals for ModelResiduals {
    fn n_params(&self) -> usize {
        self.0.param_count()
    }
    fn eval(&self, params: &[f64], x: f64) -> f64 {
        self.0.eval(params, x)
    }
    fn jacobian_row(&self, params: &[f64], x: f64, out: &mut [f64]) {
        self.0.jacobian_row(params, x, out)
    }
    fn finalize(&self, params: &mut [f64]) {
        if self.0 == Model::SinPhase {
            // wrap phase to (-pi, pi]; absorb a sign flip of A into the phase
            if params[0] < 0.0 {
                params[0] = -params[0];
                params[1] += std::f64::consts::PI;
            }
            let mut phi = params[1].rem_euclid(2.0 * std::f64::consts::PI);
            if phi > std::f64::consts::PI {
                phi -= 2.0 * std::f64::consts::PI;
            }
            params[1] = phi;
        }
    }
}

const MAX_ITER: usize = 500;
const CHI2_REL_TOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-12;

fn chi2_of(model: &dyn Residuals, data: &[(f64, f64, f64)], params: &[f64]) -> f64 {
    data.iter()
        .map(|&(x, y, s)| {
            let r = (y - model.eval(params, x)) / s;
            r * r
        })
        .sum()
}

fn fit_core(
    model: &dyn Residuals,
    data: &[(f64, f64, f64)],
    init: &[f64],
) -> Result<FitResult> {
    let np = model.n_params();
    if init.len() != np {
        return Err(Error::domain(format!(
            "expected {np} initial parameters, got {}",
            init.len()
        )));
    }
    if data.len() < np {
        return Err(Error::Underdetermined(format!(
            "{} data points for {np} parameters",
            data.len()
        )));
    }
    if data.iter().any(|&(_, _, s)| s <= 0.0 || !s.is_finite()) {
        return Err(Error::domain("all sigma must be positive".to_string()));
    }

    let mut params = init.to_vec();
    let mut chi2 = chi2_of(model, data, &params);
    if !chi2.is_finite() {
        return Err(Error::domain("initial parameters give non-finite chi2".to_string()));
    }

    let mut damping = 0.0; // set from the first normal matrix
    let mut converged = false;
    let mut iterations = 0;
    let mut row = vec![0.0; np];

    for iter in 0..MAX_ITER {
        iterations = iter + 1;
        // weighted Jacobian and residual vector
        let mut normal = DMatrix::<f64>::zeros(np, np);
        let mut grad = DVector::<f64>::zeros(np);
        for &(x, y, s) in data {
            model.jacobian_row(&params, x, &mut row);
            let r = (y - model.eval(&params, x)) / s;
            for i in 0..np {
                let ji = row[i] / s;
                grad[i] += ji * r;
                for j in 0..np {
                    normal[(i, j)] += ji * row[j] / s;
                }
            }
        }
        if normal.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateFit("non-finite normal matrix".to_string()));
        }
        if damping == 0.0 {
            let max_diag = (0..np).map(|i| normal[(i, i)]).fold(0.0, f64::max);
            if max_diag <= 0.0 {
                return Err(Error::DegenerateFit("zero normal matrix".to_string()));
            }
            damping = 1e-3 * max_diag;
        }

        // try steps, inflating the damping until one is accepted
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = normal.clone();
            for i in 0..np {
                damped[(i, i)] += damping;
            }
            let Some(step) = damped.lu().solve(&grad) else {
                damping *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, d)| p + d).collect();
            let trial_chi2 = chi2_of(model, data, &trial);
            if trial_chi2.is_finite() && trial_chi2 <= chi2 {
                let rel_drop = (chi2 - trial_chi2) / chi2.max(f64::MIN_POSITIVE);
                let step_norm = step.norm();
                params = trial;
                chi2 = trial_chi2;
                damping /= 3.0;
                accepted = true;
                if rel_drop < CHI2_REL_TOL || step_norm < STEP_TOL {
                    converged = true;
                }
                break;
            }
            damping *= 10.0;
        }
        if !accepted {
            // no downhill step found at any damping: stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }

    // covariance from the undamped normal matrix at the optimum
    let mut normal = DMatrix::<f64>::zeros(np, np);
    for &(x, _, s) in data {
        model.jacobian_row(&params, x, &mut row);
        for i in 0..np {
            for j in 0..np {
                normal[(i, j)] += row[i] * row[j] / (s * s);
            }
        }
    }
    let covariance = normal
        .try_inverse()
        .ok_or_else(|| Error::DegenerateFit("singular normal matrix at optimum".to_string()))?;
    if (0..np).any(|i| covariance[(i, i)] < 0.0 || !covariance[(i, i)].is_finite()) {
        return Err(Error::DegenerateFit("invalid covariance at optimum".to_string()));
    }

    model.finalize(&mut params);
    Ok(FitResult {
        one_sigma: (0..np).map(|i| covariance[(i, i)].sqrt()).collect(),
        params,
        chi2,
        converged,
        iterations,
    })
}

/// Weighted least-squares fit of `model` to `(x, y, sigma)` triples.
pub fn fit(model: Model, data: &[(f64, f64, f64)], init: &[f64]) -> Result<FitResult> {
    fit_core(&ModelResiduals(model), data, init)
}

/// Starting parameters estimated from the data; the flag is true when the
/// data cannot constrain the model (constant input).
pub fn init_guess(model: Model, data: &[(f64, f64, f64)]) -> (Vec<f64>, bool) {
    let n = data.len() as f64;
    let ymin = data.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
    let ymax = data.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
    let ymean = data.iter().map(|d| d.1).sum::<f64>() / n;
    let range = ymax - ymin;
    let degenerate = range <= 1e-12 * ymean.abs().max(1.0);

    match model {
        Model::SinTime => {
            if degenerate {
                return (vec![0.0, 1.0, ymean], true);
            }
            let freq = fourier_peak(data);
            // A/2 cos(pi t / tau_pi): period is 2 tau_pi
            let tau_pi = 1.0 / (2.0 * freq);
            (vec![range, tau_pi, ymean], false)
        }
        Model::SinPhase => {
            if degenerate {
                return (vec![0.0, 0.0, ymean], true);
            }
            let c: f64 = data.iter().map(|&(x, y, _)| (y - ymean) * x.cos()).sum();
            let s: f64 = data.iter().map(|&(x, y, _)| (y - ymean) * x.sin()).sum();
            (vec![range, c.atan2(s), ymean], false)
        }
        Model::ExpDecay => {
            if degenerate {
                return (vec![0.0, 1.0, ymean], true);
            }
            let rising = data.last().unwrap().1 > first_y(data);
            init_exp(data, rising)
        }
        Model::ThermalFlop { eta, .. } => {
            if degenerate {
                return (vec![0.1, 1.0], true);
            }
            let freq = fourier_peak(data);
            let omega_sideband = 2.0 * std::f64::consts::PI * freq;
            // invert the leading-order blue-sideband relation
            let omega0 = omega_sideband / (eta.abs().max(1e-6) * (-eta * eta / 2.0).exp());
            (vec![0.2, omega0], false)
        }
    }
}

fn first_y(data: &[(f64, f64, f64)]) -> f64 {
    data[0].1
}

fn init_exp(data: &[(f64, f64, f64)], rising: bool) -> (Vec<f64>, bool) {
    let ymin = data.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
    let ymax = data.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
    let range = ymax - ymin;
    // offset guess slightly beyond the data so all residuals are positive
    let c0 = if rising {
        ymax + 0.05 * range
    } else {
        ymin - 0.05 * range
    };
    // weighted linear regression of ln|y - c0| against x
    let pts: Vec<(f64, f64)> = data
        .iter()
        .filter(|&&(_, y, _)| (y - c0).abs() > 1e-12 * range)
        .map(|&(x, y, _)| (x, (y - c0).abs().ln()))
        .collect();
    if pts.len() < 2 {
        return (vec![0.0, 1.0, c0], true);
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return (vec![0.0, 1.0, c0], true);
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let span = data.last().unwrap().0 - data[0].0;
    let tau = if slope < 0.0 { -1.0 / slope } else { span.abs().max(1e-12) };
    let a = intercept.exp() * if rising { -1.0 } else { 1.0 };
    (vec![a, tau, c0], false)
}

/// Dominant frequency of (possibly unevenly sampled) data by direct
/// evaluation of the periodogram on a dense trial grid.
fn fourier_peak(data: &[(f64, f64, f64)]) -> f64 {
    let ymean = data.iter().map(|d| d.1).sum::<f64>() / data.len() as f64;
    let xmin = data.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    let xmax = data.iter().map(|d| d.0).fold(f64::NEG_INFINITY, f64::max);
    let span = (xmax - xmin).max(f64::MIN_POSITIVE);
    let mut min_dx = f64::INFINITY;
    let mut xs: Vec<f64> = data.iter().map(|d| d.0).collect();
    xs.sort_by(f64::total_cmp);
    for w in xs.windows(2) {
        let dx = w[1] - w[0];
        if dx > 0.0 {
            min_dx = min_dx.min(dx);
        }
    }
    let f_min = 0.5 / span;
    let f_max = 0.5 / min_dx;
    let steps = 4000;
    let mut best = (f_min, 0.0);
    for k in 0..=steps {
        let f = f_min + (f_max - f_min) * k as f64 / steps as f64;
        let omega = 2.0 * std::f64::consts::PI * f;
        let mut re = 0.0;
        let mut im = 0.0;
        for &(x, y, _) in data {
            re += (y - ymean) * (omega * x).cos();
            im += (y - ymean) * (omega * x).sin();
        }
        let power = re * re + im * im;
        if power > best.1 {
            best = (f, power);
        }
    }
    best.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayForm {
    Exponential,
    Gaussian,
}

struct CoherenceModel {
    exponent: f64,
}

impl Residuals for CoherenceModel {
    fn n_params(&self) -> usize {
        1
    }
    fn eval(&self, params: &[f64], x: f64) -> f64 {
        (-(x / params[0]).powf(self.exponent)).exp()
    }
    fn jacobian_row(&self, params: &[f64], x: f64, out: &mut [f64]) {
        let u = (x / params[0]).powf(self.exponent);
        out[0] = (-u).exp() * self.exponent * u / params[0];
    }
}

/// Coherence time from fringe amplitudes: fits A(tau) = exp(-(tau/T2)^p)
/// with p = 1 (exponential) or p = 2 (Gaussian) and returns
/// (T2, sigma_T2, chi2). T2 is the 1/e time by construction.
pub fn coherence_time(
    amplitudes: &[(f64, f64, f64)],
    form: DecayForm,
) -> Result<(f64, f64, f64)> {
    if amplitudes.len() < 2 {
        return Err(Error::Underdetermined(
            "coherence fit needs at least two amplitudes".to_string(),
        ));
    }
    let p = match form {
        DecayForm::Exponential => 1.0,
        DecayForm::Gaussian => 2.0,
    };
    // initial guess from the most-decayed usable point
    let mut t0 = None;
    for &(tau, a, _) in amplitudes {
        if tau > 0.0 && a > 0.0 && a < 1.0 {
            let guess = tau / (-a.ln()).powf(1.0 / p);
            t0 = Some(t0.map_or(guess, f64::min));
        }
    }
    let t0 = t0.ok_or_else(|| {
        Error::DegenerateFit("no amplitude strictly between 0 and 1".to_string())
    })?;
    let model = CoherenceModel { exponent: p };
    let result = fit_core(&model, amplitudes, &[t0])?;
    Ok((result.params[0], result.one_sigma[0], result.chi2))
}
