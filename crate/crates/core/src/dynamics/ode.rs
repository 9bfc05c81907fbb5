//! Fixed-order RK4 driver with step halving keyed to norm growth.

use super::StopReason;

/// Step-size policy shared by the coupled and the second-order integrators.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepPolicy {
    pub dt: f64,
    pub growth_bound: f64,
    pub t_end: Option<f64>,
    pub max_steps: usize,
}

impl StepPolicy {
    /// Smallest admissible step at state `y`: `dt·2⁻²⁰` measured in the
    /// state's own time scale `1/(1 + max|y|)`.
    fn floor(&self, y: &[f64]) -> f64 {
        let peak = y.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        self.dt * 2f64.powi(-20) / (1.0 + peak)
    }
}

pub(crate) enum Control {
    Continue,
    Stop(StopReason),
}

#[derive(Debug)]
pub(crate) struct Underflow {
    pub t: f64,
    pub y: Vec<f64>,
    pub steps: usize,
}

pub(crate) struct Finished {
    pub t: f64,
    pub y: Vec<f64>,
    pub reason: StopReason,
    pub steps: usize,
}

fn growth(y: &[f64]) -> f64 {
    y.iter().map(|x| x * x).sum::<f64>().ln_1p()
}

fn rk4<F>(y: &[f64], h: f64, rhs: &F, out: &mut Vec<f64>, scratch: &mut [Vec<f64>; 5])
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = y.len();
    let [k1, k2, k3, k4, tmp] = scratch;
    rhs(y, k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    rhs(tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    rhs(tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    rhs(tmp, k4);
    out.clear();
    out.extend((0..n).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])));
}

/// Advances `y' = rhs(y)` from `t0`. `observe` sees every accepted step and
/// may stop the run. A step is rejected and halved when it is non-finite or
/// raises `ln(1 + |y|²)` by more than the growth bound; it is doubled back
/// (up to `dt`) after quiet steps.
pub(crate) fn drive<F, O>(
    y0: Vec<f64>,
    t0: f64,
    policy: &StepPolicy,
    rhs: F,
    mut observe: O,
) -> Result<Finished, Underflow>
where
    F: Fn(&[f64], &mut [f64]),
    O: FnMut(f64, &[f64], usize) -> Control,
{
    let n = y0.len();
    let mut scratch = [
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    ];
    let mut y = y0;
    let mut next = Vec::with_capacity(n);
    let mut t = t0;
    let mut h_nominal = policy.dt;
    let mut steps = 0;
    let mut g_now = growth(&y);

    loop {
        if steps >= policy.max_steps {
            return Ok(Finished {
                t,
                y,
                reason: StopReason::MaxSteps,
                steps,
            });
        }
        let mut h = h_nominal;
        if let Some(end) = policy.t_end {
            let remaining = end - t;
            if remaining <= 1e-14 * end.abs().max(1.0) {
                return Ok(Finished {
                    t,
                    y,
                    reason: StopReason::Horizon,
                    steps,
                });
            }
            h = h.min(remaining);
        }
        rk4(&y, h, &rhs, &mut next, &mut scratch);
        let g_next = growth(&next);
        let increment = (g_next - g_now).abs();
        if !g_next.is_finite() || !(increment <= policy.growth_bound) {
            if 0.5 * h < policy.floor(&y) {
                return Err(Underflow { t, y, steps });
            }
            h_nominal = 0.5 * h;
            continue;
        }

        let reached_end = policy.t_end.is_some_and(|end| h >= end - t);
        t = if reached_end {
            policy.t_end.unwrap()
        } else {
            t + h
        };
        std::mem::swap(&mut y, &mut next);
        g_now = g_next;
        steps += 1;
        if increment < 0.25 * policy.growth_bound && h >= h_nominal {
            h_nominal = (2.0 * h_nominal).min(policy.dt);
        }
        if let Control::Stop(reason) = observe(t, &y, steps) {
            return Ok(Finished {
                t,
                y,
                reason,
                steps,
            });
        }
        if reached_end {
            return Ok(Finished {
                t,
                y,
                reason: StopReason::Horizon,
                steps,
            });
        }
    }
}
