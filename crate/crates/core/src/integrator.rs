//! Dormand-Prince 5(4) with FSAL, PI-free classic step control and cubic
//! Hermite dense output between accepted steps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; estimated from the derivative when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10, h_init: None, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

/// An accepted state with its derivative (for Hermite interpolation).
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub t: f64,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

pub enum Control {
    Continue,
    Stop,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights are the last row of A; error = y5 - y4
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, returning every accepted
/// step (the initial state first). `on_step` sees each accepted step and may
/// stop the integration early or reject the state with an error.
pub fn dopri5<F, S>(mut f: F, t0: f64, y0: &[f64], t_end: f64, ctl: &StepControl, mut on_step: S) -> Result<Vec<Step>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(&Step) -> Result<Control>,
{
    if !(t_end > t0) {
        return Err(Error::InvalidInput(format!("t_end = {t_end} must exceed t0 = {t0}")));
    }
    if !(ctl.rtol > 0.0 && ctl.atol > 0.0) {
        return Err(Error::InvalidInput("tolerances must be positive".into()));
    }
    let n = y0.len();
    let mut k = vec![vec![0.0; n]; 7];
    let mut y = y0.to_vec();
    let mut t = t0;
    f(t, &y, &mut k[0]);
    let first = Step { t, y: y.clone(), dy: k[0].clone() };
    let mut steps = vec![first];
    if let Control::Stop = on_step(&steps[0])? {
        return Ok(steps);
    }

    let mut h = ctl.h_init.unwrap_or_else(|| initial_step(&y, &k[0], ctl, t_end - t0));
    h = h.min(ctl.h_max).min(t_end - t0);
    let mut ytmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut accepted = 0usize;

    while t < t_end {
        if accepted >= ctl.max_steps {
            return Err(Error::TooManySteps(ctl.max_steps));
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += h * a * k[j][i];
                }
                ytmp[i] = acc;
            }
            let (before, after) = k.split_at_mut(s);
            let _ = before;
            f(t + C[s] * h, &ytmp, &mut after[0]);
        }
        // stage 7 was evaluated at the fifth-order solution
        y5.copy_from_slice(&ytmp);
        let mut err = 0.0;
        for i in 0..n {
            let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * h;
            let sc = ctl.atol + ctl.rtol * y[i].abs().max(y5[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            h *= 0.2;
        } else if err <= 1.0 {
            t = if last { t_end } else { t + h };
            y.copy_from_slice(&y5);
            k.swap(0, 6);
            accepted += 1;
            let step = Step { t, y: y.clone(), dy: k[0].clone() };
            let ctrl = on_step(&step)?;
            steps.push(step);
            if let Control::Stop = ctrl {
                break;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(ctl.h_max);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StiffSegment { t, h });
        }
    }
    Ok(steps)
}

fn initial_step(y: &[f64], dy: &[f64], ctl: &StepControl, span: f64) -> f64 {
    let scale = |i: usize| ctl.atol + ctl.rtol * y[i].abs();
    let n = y.len().max(1) as f64;
    let d0 = (y.iter().enumerate().map(|(i, v)| (v / scale(i)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (dy.iter().enumerate().map(|(i, v)| (v / scale(i)).powi(2)).sum::<f64>() / n).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span)
}

/// Cubic Hermite interpolation on `[s0.t, s1.t]`.
pub fn hermite(s0: &Step, s1: &Step, t: f64) -> Vec<f64> {
    let h = s1.t - s0.t;
    if h == 0.0 {
        return s0.y.clone();
    }
    let th = (t - s0.t) / h;
    let h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
    let h10 = th * (1.0 - th) * (1.0 - th);
    let h01 = th * th * (3.0 - 2.0 * th);
    let h11 = th * th * (th - 1.0);
    (0..s0.y.len())
        .map(|i| h00 * s0.y[i] + h10 * h * s0.dy[i] + h01 * s1.y[i] + h11 * h * s1.dy[i])
        .collect()
}

/// Dense evaluation of a step sequence; `None` outside its time span.
pub fn interpolate(steps: &[Step], t: f64) -> Option<Vec<f64>> {
    let first = steps.first()?;
    let last = steps.last()?;
    if t < first.t || t > last.t {
        return None;
    }
    let idx = steps.partition_point(|s| s.t < t);
    if idx == 0 {
        return Some(first.y.clone());
    }
    Some(hermite(&steps[idx - 1], &steps[idx], t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_decay() {
        let ctl = StepControl::default();
        let steps = dopri5(|_, y, dy| dy[0] = -y[0], 0.0, &[1.0], 5.0, &ctl, |_| Ok(Control::Continue)).unwrap();
        let last = steps.last().unwrap();
        assert_eq!(last.t, 5.0);
        assert_abs_diff_eq!(last.y[0], (-5.0f64).exp(), epsilon = 1e-9);
        assert!(steps.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let ctl = StepControl { rtol: 1e-11, atol: 1e-11, ..Default::default() };
        let steps = dopri5(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[0.0, 1.0],
            10.0,
            &ctl,
            |_| Ok(Control::Continue),
        )
        .unwrap();
        for t in [0.37, 2.9, 7.77] {
            let y = interpolate(&steps, t).unwrap();
            assert!((y[0] - t.sin()).abs() < 1e-5);
        }
        assert!(interpolate(&steps, 10.5).is_none());
    }

    #[test]
    fn early_stop_and_errors() {
        let ctl = StepControl::default();
        let steps =
            dopri5(|_, _, dy| dy[0] = 1.0, 0.0, &[0.0], 10.0, &ctl, |s| Ok(if s.t > 1.0 { Control::Stop } else { Control::Continue }))
                .unwrap();
        assert!(steps.last().unwrap().t < 10.0);
        assert!(dopri5(|_, _, dy| dy[0] = 1.0, 1.0, &[0.0], 0.5, &ctl, |_| Ok(Control::Continue)).is_err());
        // finite-time blow-up y' = y^2 from y(0) = 1 at t = 1
        let r = dopri5(|_, y, dy| dy[0] = y[0] * y[0], 0.0, &[1.0], 2.0, &ctl, |_| Ok(Control::Continue));
        assert!(matches!(r, Err(Error::StiffSegment { .. }) | Err(Error::TooManySteps(_))));
    }
}
