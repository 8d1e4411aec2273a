//! Integration of the bracket flow in its four formulations: reduced
//! `(a, b, c)` coordinates, all 24 bracket components, the norm-fixing
//! normalized flow, and the evolving inner product with fixed bracket.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bachforms::{closed_form_bach, normalization_r, ode_rhs, scalar_curvature, GaugeSkew};
use crate::curvature::{CurvatureBundle, MetricSpec};
use crate::error::{Error, Result};
use crate::integrator::{dopri5, interpolate, Control, Step, StepControl};
use crate::nilalg::{BracketTensor, Mat4, TriBracket};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: Option<f64>,
    pub max_steps: usize,
    /// Full flow only: subtract the skew gauge `R` from `B`.
    pub gauged: bool,
    pub conv_tol: f64,
    pub conv_window: usize,
    pub stop_on_convergence: bool,
    /// Normalized flow only: rescale the initial bracket to norm 2.
    pub rescale_to_norm2: bool,
    /// Uniform output grid for CSV export; integrator steps when `None`.
    pub sample_dt: Option<f64>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_max: None,
            max_steps: 2_000_000,
            gauged: true,
            conv_tol: 1e-8,
            conv_window: 10,
            stop_on_convergence: false,
            rescale_to_norm2: false,
            sample_dt: None,
        }
    }
}

impl FlowOptions {
    pub fn step_control(&self) -> StepControl {
        StepControl {
            rtol: self.rtol,
            atol: self.atol,
            h_init: None,
            h_max: self.h_max.unwrap_or(f64::INFINITY),
            max_steps: self.max_steps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    Reduced,
    Full { gauged: bool },
    Normalized,
    Metric,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowState {
    Tri(TriBracket),
    Bracket(BracketTensor),
    Metric(Mat4),
}

/// Monitor channels recorded with every sample. For the metric flow the
/// bracket-valued channels refer to the isometric bracket at the identity
/// and `a, b, c` are NaN.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Monitors {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub norm2: f64,
    pub scalar_curv: f64,
    pub log_ac: f64,
    pub b2_over_a2: f64,
    pub r: f64,
    pub lambda_scale: f64,
    pub tau: f64,
    pub off_structure_max: f64,
    pub bach_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowSample {
    pub t: f64,
    pub state: FlowState,
    pub monitors: Monitors,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedEnd,
    Converged,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowMeta {
    pub kind: FlowKind,
    pub options: FlowOptions,
    pub t_end: f64,
    pub accepted_steps: usize,
    pub termination: Termination,
    /// First time at which the convergence window was satisfied.
    pub converged_at: Option<f64>,
}

/// `lambda(t)`, `tau(t)` and the normalization function `r` at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationState {
    pub lambda_scale: f64,
    pub tau: f64,
    pub r: f64,
}

impl NormalizationState {
    pub fn initial(r: f64) -> Self {
        Self { lambda_scale: 1.0, tau: 0.0, r }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowTrajectory {
    pub samples: Vec<FlowSample>,
    pub meta: FlowMeta,
    #[serde(skip)]
    steps: Vec<Step>,
    /// Fixed bracket of the metric flow.
    #[serde(skip)]
    mu0: Option<BracketTensor>,
}

/// Violations and margins of the trajectory invariants.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantReport {
    pub strictly_increasing: bool,
    /// Largest sample-to-sample increase of `|mu|^2`.
    pub max_norm_increase: f64,
    /// Largest `|mu|^2 - sqrt(6/t)` over samples with `t >= 1`.
    pub decay_envelope_excess: f64,
    /// Smallest finite-difference slack of `d|mu|^2/dt <= -|mu|^6 / 12`.
    pub min_norm_rate_slack: f64,
    /// Largest `| |mu| - |mu_0| |`.
    pub max_norm_drift: f64,
    pub max_off_structure: f64,
    /// Names and values of the violated invariants.
    pub violations: Vec<String>,
    pub ok: bool,
}

pub const NORM_INCREASE_TOL: f64 = 1e-12;
pub const DECAY_ENVELOPE_TOL: f64 = 1e-8;
pub const NORM_RATE_SLACK_TOL: f64 = 1e-6;
pub const NORM_DRIFT_TOL: f64 = 1e-6;

impl FlowTrajectory {
    pub fn kind(&self) -> FlowKind {
        self.meta.kind
    }

    /// End of the integrated interval.
    pub fn horizon(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.t)
    }

    pub fn last(&self) -> &FlowSample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    /// Dense state vector at `t`, `None` outside the integrated interval.
    pub fn state_vector_at(&self, t: f64) -> Option<Vec<f64>> {
        interpolate(&self.steps, t)
    }

    /// The `(a, b, c)` structure constants at `t` (reduced, normalized and
    /// full flows).
    pub fn tri_at(&self, t: f64) -> Option<TriBracket> {
        let y = self.state_vector_at(t)?;
        match self.meta.kind {
            FlowKind::Reduced | FlowKind::Normalized => Some(TriBracket::unchecked(y[0], y[1], y[2])),
            FlowKind::Full { .. } => Some(TriBracket::from_bracket(&bracket_from(&y))),
            FlowKind::Metric => None,
        }
    }

    pub fn sample_at(&self, t: f64) -> Option<FlowSample> {
        let y = self.state_vector_at(t)?;
        Some(make_sample(self.meta.kind, t, &y, self.mu0.as_ref()))
    }

    /// Samples on `0, dt, 2dt, ...` up to the horizon, which is included.
    pub fn uniform_samples(&self, dt: f64) -> Vec<FlowSample> {
        let end = self.horizon();
        let t0 = self.steps.first().map_or(0.0, |s| s.t);
        let n = ((end - t0) / dt).floor() as usize;
        let mut out: Vec<FlowSample> = (0..=n).filter_map(|i| self.sample_at(t0 + i as f64 * dt)).collect();
        if out.last().is_none_or(|s| s.t < end) {
            out.extend(self.sample_at(end));
        }
        out
    }

    /// Samples for export: the uniform grid if requested, else the steps.
    pub fn output_samples(&self) -> Vec<FlowSample> {
        match self.meta.options.sample_dt {
            Some(dt) if dt > 0.0 => self.uniform_samples(dt),
            _ => self.samples.clone(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_csv(w, &self.output_samples())
    }

    pub fn invariants(&self) -> InvariantReport {
        let s = &self.samples;
        let strictly_increasing = s.windows(2).all(|w| w[1].t > w[0].t);
        let norm = |i: usize| s[i].monitors.norm2;
        let n0 = norm(0);
        let max_norm_increase = s.windows(2).map(|w| w[1].monitors.norm2 - w[0].monitors.norm2).fold(f64::NEG_INFINITY, f64::max);
        let decay_envelope_excess = s
            .iter()
            .filter(|x| x.t >= 1.0)
            .map(|x| x.monitors.norm2 - (6.0 / x.t).sqrt())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut min_norm_rate_slack = f64::INFINITY;
        for i in 1..s.len().saturating_sub(1) {
            let (h0, h1) = (s[i].t - s[i - 1].t, s[i + 1].t - s[i].t);
            // second-order three-point derivative on a nonuniform grid
            let d = (-h1 / (h0 * (h0 + h1))) * norm(i - 1) + ((h1 - h0) / (h0 * h1)) * norm(i) + (h0 / (h1 * (h0 + h1))) * norm(i + 1);
            let slack = -norm(i).powi(3) / 12.0 - d;
            min_norm_rate_slack = min_norm_rate_slack.min(slack);
        }
        let max_norm_drift = s.iter().map(|x| (x.monitors.norm2.sqrt() - n0.sqrt()).abs()).fold(0.0, f64::max);
        let max_off_structure = s.iter().map(|x| x.monitors.off_structure_max).fold(0.0, f64::max);
        let max_norm_increase = max_norm_increase.max(0.0);
        let mut violations = Vec::new();
        if !strictly_increasing {
            violations.push("time samples not strictly increasing".to_string());
        }
        match self.meta.kind {
            FlowKind::Normalized => {
                if !(max_norm_drift < NORM_DRIFT_TOL) {
                    violations.push(format!("norm drift {max_norm_drift:e} >= {NORM_DRIFT_TOL:e}"));
                }
            }
            _ => {
                if !(max_norm_increase <= NORM_INCREASE_TOL * n0.max(1.0)) {
                    violations.push(format!("norm increased by {max_norm_increase:e} between samples"));
                }
                if decay_envelope_excess > DECAY_ENVELOPE_TOL {
                    violations.push(format!("decay envelope exceeded by {decay_envelope_excess:e}"));
                }
                if min_norm_rate_slack < -NORM_RATE_SLACK_TOL {
                    violations.push(format!("norm rate slack {min_norm_rate_slack:e} < -{NORM_RATE_SLACK_TOL:e}"));
                }
            }
        }
        InvariantReport {
            strictly_increasing,
            max_norm_increase,
            decay_envelope_excess,
            min_norm_rate_slack,
            max_norm_drift,
            max_off_structure,
            ok: violations.is_empty(),
            violations,
        }
    }
}

pub const CSV_HEADER: [&str; 12] =
    ["t", "a", "b", "c", "norm2", "scalar_curv", "log_ac", "b2_over_a2", "r", "lambda_scale", "tau", "off_structure_max"];

/// CSV with the mandatory header; every number has 17 significant digits.
pub fn write_csv<W: Write>(mut w: W, samples: &[FlowSample]) -> io::Result<()> {
    writeln!(w, "{}", CSV_HEADER.join(","))?;
    for s in samples {
        let m = &s.monitors;
        let row = [s.t, m.a, m.b, m.c, m.norm2, m.scalar_curv, m.log_ac, m.b2_over_a2, m.r, m.lambda_scale, m.tau, m.off_structure_max];
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

fn bracket_from(y: &[f64]) -> BracketTensor {
    let mut e = [0.0; 24];
    e.copy_from_slice(&y[..24]);
    BracketTensor::from_entries(e)
}

fn gram_from(y: &[f64]) -> Mat4 {
    let m = Mat4::from_row_slice(&y[..16]);
    0.5 * (m + m.transpose())
}

fn tri_monitors(p: &TriBracket) -> Monitors {
    Monitors {
        a: p.a,
        b: p.b,
        c: p.c,
        norm2: p.norm_sq(),
        scalar_curv: scalar_curvature(p),
        log_ac: (p.a / p.c).ln(),
        b2_over_a2: p.b * p.b / (p.a * p.a),
        r: 0.0,
        lambda_scale: 1.0,
        tau: 0.0,
        off_structure_max: 0.0,
        bach_norm: closed_form_bach(p).matrix().norm(),
    }
}

fn bracket_monitors(mu: &BracketTensor, bundle: &CurvatureBundle) -> Monitors {
    let p = TriBracket::from_bracket(mu);
    Monitors {
        norm2: mu.norm_sq(),
        scalar_curv: bundle.scalar,
        off_structure_max: mu.off_structure_max(),
        bach_norm: bundle.bach_norm(),
        ..tri_monitors(&p)
    }
}

/// Orthonormalizing frame `h` with `h^T h = G`.
fn frame_of(gram: &Mat4) -> Option<Mat4> {
    gram.cholesky().map(|ch| ch.l().transpose())
}

fn make_sample(kind: FlowKind, t: f64, y: &[f64], mu0: Option<&BracketTensor>) -> FlowSample {
    match kind {
        FlowKind::Reduced => {
            let p = TriBracket::unchecked(y[0], y[1], y[2]);
            FlowSample { t, state: FlowState::Tri(p), monitors: Monitors { tau: t, ..tri_monitors(&p) } }
        }
        FlowKind::Normalized => {
            let p = TriBracket::unchecked(y[0], y[1], y[2]);
            let monitors = Monitors { r: normalization_r(&p), lambda_scale: y[3], tau: y[4], ..tri_monitors(&p) };
            FlowSample { t, state: FlowState::Tri(p), monitors }
        }
        FlowKind::Full { .. } => {
            let mu = bracket_from(y);
            let bundle = CurvatureBundle::compute(&mu, &MetricSpec::identity());
            let monitors = Monitors { tau: t, ..bracket_monitors(&mu, &bundle) };
            FlowSample { t, state: FlowState::Bracket(mu), monitors }
        }
        FlowKind::Metric => {
            let gram = gram_from(y);
            let mu0 = mu0.expect("metric flow keeps its bracket");
            let nan = f64::NAN;
            let monitors = match (MetricSpec::new(gram), frame_of(&gram)) {
                (Ok(g), Some(h)) => {
                    let bundle = CurvatureBundle::compute(mu0, &g);
                    let mu = mu0.gl_action(&h).unwrap_or_else(|_| BracketTensor::zero());
                    Monitors {
                        a: nan,
                        b: nan,
                        c: nan,
                        log_ac: nan,
                        b2_over_a2: nan,
                        norm2: mu.norm_sq(),
                        scalar_curv: bundle.scalar,
                        bach_norm: bundle.bach_norm(),
                        off_structure_max: nan,
                        r: 0.0,
                        lambda_scale: 1.0,
                        tau: t,
                    }
                }
                _ => Monitors {
                    a: nan,
                    b: nan,
                    c: nan,
                    norm2: nan,
                    scalar_curv: nan,
                    log_ac: nan,
                    b2_over_a2: nan,
                    r: 0.0,
                    lambda_scale: 1.0,
                    tau: t,
                    off_structure_max: nan,
                    bach_norm: nan,
                },
            };
            FlowSample { t, state: FlowState::Metric(gram), monitors }
        }
    }
}

/// Trailing-window convergence test on `max(|a - c|, |b|, |a'|)`.
struct ConvergenceWindow {
    tol: f64,
    size: usize,
    run: usize,
    converged_at: Option<f64>,
}

impl ConvergenceWindow {
    fn new(opts: &FlowOptions) -> Self {
        Self { tol: opts.conv_tol, size: opts.conv_window.max(1), run: 0, converged_at: None }
    }

    fn push(&mut self, t: f64, y: &[f64], dy: &[f64]) -> bool {
        let dist = (y[0] - y[2]).abs().max(y[1].abs()).max(dy[0].abs());
        self.run = if dist < self.tol { self.run + 1 } else { 0 };
        if self.run >= self.size && self.converged_at.is_none() {
            self.converged_at = Some(t);
        }
        self.converged_at.is_some()
    }
}

fn finish(
    kind: FlowKind,
    opts: &FlowOptions,
    t_end: f64,
    steps: Vec<Step>,
    mu0: Option<BracketTensor>,
    converged_at: Option<f64>,
) -> FlowTrajectory {
    let samples = if matches!(kind, FlowKind::Full { .. } | FlowKind::Metric) {
        steps.par_iter().map(|s| make_sample(kind, s.t, &s.y, mu0.as_ref())).collect()
    } else {
        steps.iter().map(|s| make_sample(kind, s.t, &s.y, mu0.as_ref())).collect()
    };
    let last_t = steps.last().map_or(0.0, |s| s.t);
    let termination = if last_t < t_end { Termination::Converged } else { Termination::ReachedEnd };
    FlowTrajectory {
        samples,
        meta: FlowMeta {
            kind,
            options: opts.clone(),
            t_end,
            accepted_steps: steps.len() - 1,
            termination,
            converged_at,
        },
        steps,
        mu0,
    }
}

fn check_t_end(t_end: f64) -> Result<()> {
    if t_end > 0.0 && t_end.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("t_end must be positive and finite, got {t_end}")))
    }
}

/// Reduced gauged flow on the slice.
pub fn integrate_reduced(p0: &TriBracket, t_end: f64, opts: &FlowOptions) -> Result<FlowTrajectory> {
    check_t_end(t_end)?;
    if !p0.in_slice() {
        return Err(Error::OutsideSlice { a: p0.a, b: p0.b, c: p0.c });
    }
    let mut window = ConvergenceWindow::new(opts);
    let steps = dopri5(
        |_, y, dy| {
            let d = ode_rhs(&TriBracket::unchecked(y[0], y[1], y[2]));
            dy.copy_from_slice(&d);
        },
        0.0,
        &p0.as_array(),
        t_end,
        &opts.step_control(),
        |s| {
            if !(s.y[0] > 0.0 && s.y[2] > 0.0) {
                return Err(Error::ConstraintViolation { t: s.t, what: format!("left the slice at {:?}", s.y) });
            }
            let done = window.push(s.t, &s.y, &s.dy);
            Ok(if done && opts.stop_on_convergence { Control::Stop } else { Control::Continue })
        },
    )?;
    Ok(finish(FlowKind::Reduced, opts, t_end, steps, None, window.converged_at))
}

/// `(1/2) pi(B - R) mu` (gauged) or `(1/2) pi(B) mu` with `B` from the
/// curvature oracle at the identity inner product.
pub fn full_generator(mu: &BracketTensor, gauged: bool) -> BracketTensor {
    let b = CurvatureBundle::compute(mu, &MetricSpec::identity()).bach_endo;
    let l = if gauged { b - GaugeSkew::for_operator(&b).matrix } else { b };
    mu.pi_rep(&l).scale(0.5)
}

/// Flow of all 24 bracket components.
pub fn integrate_full(mu0: &BracketTensor, t_end: f64, opts: &FlowOptions) -> Result<FlowTrajectory> {
    check_t_end(t_end)?;
    mu0.validate()?;
    let gauged = opts.gauged;
    let steps = dopri5(
        |_, y, dy| dy.copy_from_slice(full_generator(&bracket_from(y), gauged).entries()),
        0.0,
        mu0.entries(),
        t_end,
        &opts.step_control(),
        |_| Ok(Control::Continue),
    )?;
    Ok(finish(FlowKind::Full { gauged }, opts, t_end, steps, None, None))
}

/// `-<pi(B) mu, mu> / |mu|^2`: equals `normalization_r` on `|mu| = 2`, but
/// keeps `d|mu|^2/dt = 0` off the sphere as well, so rounding errors in the
/// norm are not amplified.
pub fn norm_fixing_r(p: &TriBracket) -> f64 {
    let n = p.norm_sq();
    if n == 0.0 {
        0.0
    } else {
        4.0 * normalization_r(p) / n
    }
}

/// Norm-fixing normalized flow; the state carries `lambda` and `tau` along.
pub fn integrate_normalized(p0: &TriBracket, t_end: f64, opts: &FlowOptions) -> Result<FlowTrajectory> {
    check_t_end(t_end)?;
    if !p0.in_slice() {
        return Err(Error::OutsideSlice { a: p0.a, b: p0.b, c: p0.c });
    }
    let norm = p0.norm_sq().sqrt();
    let p0 = if opts.rescale_to_norm2 {
        p0.scale(2.0 / norm)
    } else if (norm - 2.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("normalized flow needs |mu| = 2, got {norm}")));
    } else {
        *p0
    };
    let mut window = ConvergenceWindow::new(opts);
    let y0 = [p0.a, p0.b, p0.c, 1.0, 0.0];
    let steps = dopri5(
        |_, y, dy| {
            let p = TriBracket::unchecked(y[0], y[1], y[2]);
            let r = norm_fixing_r(&p);
            let d = ode_rhs(&p);
            for i in 0..3 {
                dy[i] = d[i] + 0.5 * r * y[i];
            }
            dy[3] = 0.5 * r * y[3];
            dy[4] = y[3].powi(4);
        },
        0.0,
        &y0,
        t_end,
        &opts.step_control(),
        |s| {
            if !(s.y[0] > 0.0 && s.y[2] > 0.0) {
                return Err(Error::ConstraintViolation { t: s.t, what: format!("left the slice at {:?}", &s.y[..3]) });
            }
            let n = (s.y[0].powi(2) + s.y[1].powi(2) + s.y[2].powi(2)).sqrt();
            if (n - 2.0).abs() > NORM_DRIFT_TOL {
                return Err(Error::ConstraintViolation { t: s.t, what: format!("norm drifted to {n}") });
            }
            let done = window.push(s.t, &s.y, &s.dy);
            Ok(if done && opts.stop_on_convergence { Control::Stop } else { Control::Continue })
        },
    )?;
    Ok(finish(FlowKind::Normalized, opts, t_end, steps, None, window.converged_at))
}

/// Fixed bracket, evolving inner product `G' = B(G)`.
pub fn integrate_metric(mu0: &BracketTensor, g0: &MetricSpec, t_end: f64, opts: &FlowOptions) -> Result<FlowTrajectory> {
    check_t_end(t_end)?;
    mu0.validate()?;
    let y0: Vec<f64> = g0.gram().transpose().iter().copied().collect();
    let steps = dopri5(
        |_, y, dy| {
            // outside the cone the step is rejected by the PD check below
            let b = match MetricSpec::new(gram_from(y)) {
                Ok(g) => CurvatureBundle::compute(mu0, &g).bach,
                Err(_) => Mat4::from_element(f64::NAN),
            };
            dy.copy_from_slice(b.transpose().as_slice());
        },
        0.0,
        &y0,
        t_end,
        &opts.step_control(),
        |s| match MetricSpec::new(gram_from(&s.y)) {
            Ok(_) => Ok(Control::Continue),
            Err(_) => Err(Error::MetricDegenerated { t: s.t }),
        },
    )?;
    Ok(finish(FlowKind::Metric, opts, t_end, steps, Some(mu0.clone()), None))
}

/// Parallel reduced-flow sweep; one result per initial point, in order.
pub fn sweep_reduced(points: &[TriBracket], t_end: f64, opts: &FlowOptions) -> Vec<Result<FlowTrajectory>> {
    points.par_iter().map(|p| integrate_reduced(p, t_end, opts)).collect()
}

/// Integrates `lambda' = r lambda / 2`, `tau' = lambda^4` for a given `r(t)`.
pub fn rescaling(r: impl Fn(f64) -> f64, t_end: f64, ctl: &StepControl) -> Result<Vec<(f64, NormalizationState)>> {
    check_t_end(t_end)?;
    let steps = dopri5(
        |t, y, dy| {
            dy[0] = 0.5 * r(t) * y[0];
            dy[1] = y[0].powi(4);
        },
        0.0,
        &[1.0, 0.0],
        t_end,
        ctl,
        |_| Ok(Control::Continue),
    )?;
    Ok(steps.iter().map(|s| (s.t, NormalizationState { lambda_scale: s.y[0], tau: s.y[1], r: r(s.t) })).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reparametrization {
    pub history: Vec<(f64, NormalizationState)>,
    /// `max_t |mu^r(t) - lambda(t) mu(tau(t))|`.
    pub max_mismatch: f64,
}

/// Recovers `lambda, tau` from the `r` history of a normalized run and
/// compares it against the rescaled un-normalized trajectory.
pub fn reparametrize(base: &FlowTrajectory, normalized: &FlowTrajectory, ctl: &StepControl) -> Result<Reparametrization> {
    if base.kind() != FlowKind::Reduced || normalized.kind() != FlowKind::Normalized {
        return Err(Error::InvalidInput("reparametrize needs a reduced base and a normalized run".into()));
    }
    let t_end = normalized.horizon();
    let r_of = |t: f64| normalized.tri_at(t.min(t_end)).map_or(f64::NAN, |p| norm_fixing_r(&p));
    let history = rescaling(r_of, t_end, ctl)?;
    let horizon = base.horizon();
    let mut max_mismatch: f64 = 0.0;
    for (t, st) in &history {
        if st.tau > horizon {
            return Err(Error::ExtendBaseTrajectory { tau: st.tau, horizon });
        }
        let pr = normalized.tri_at(*t).expect("inside normalized span");
        let pb = base.tri_at(st.tau).expect("inside base span").scale(st.lambda_scale);
        let d = ((pr.a - pb.a).powi(2) + (pr.b - pb.b).powi(2) + (pr.c - pb.c).powi(2)).sqrt();
        max_mismatch = max_mismatch.max(d);
    }
    Ok(Reparametrization { history, max_mismatch })
}
