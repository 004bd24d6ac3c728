//! Dormand–Prince 5(4) with PI step control, for small fixed-size systems.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-13,
            h_init: 1e-3,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeFailure {
    StepUnderflow { t: f64, h: f64 },
    TooManySteps { t: f64 },
    NonFinite { t: f64 },
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// error coefficients: 5th-order minus embedded 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive integrator state. `advance_to` lands exactly on the requested time.
pub struct Dopri5<F, const N: usize> {
    rhs: F,
    t: f64,
    y: [f64; N],
    h: f64,
    opts: Dopri5Options,
    steps: usize,
    err_prev: f64,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

impl<F, const N: usize> Dopri5<F, N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    pub fn new(rhs: F, t0: f64, y0: [f64; N], opts: Dopri5Options) -> Self {
        Self {
            rhs,
            t: t0,
            y: y0,
            h: opts.h_init,
            opts,
            steps: 0,
            err_prev: 1e-4,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64; N] {
        &self.y
    }

    pub fn advance_to(&mut self, t_end: f64) -> Result<(), OdeFailure> {
        let dir = if t_end >= self.t { 1.0 } else { -1.0 };
        while (t_end - self.t) * dir > 0.0 {
            if self.steps >= self.opts.max_steps {
                return Err(OdeFailure::TooManySteps { t: self.t });
            }
            let remaining = t_end - self.t;
            let mut h = self.h.abs().min(remaining.abs()) * dir;
            let landing = h.abs() >= remaining.abs();
            if landing {
                h = remaining;
            }
            let (y_new, err) = self.trial(h);
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                if h.abs() <= self.opts.h_min {
                    return Err(OdeFailure::NonFinite { t: self.t });
                }
                self.h = h.abs() * 0.2;
                continue;
            }
            self.steps += 1;
            if err <= 1.0 {
                self.t = if landing { t_end } else { self.t + h };
                self.y = y_new;
                let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * self.err_prev.powf(0.4 / 5.0);
                self.err_prev = err.max(1e-4);
                self.h = h.abs() * fac.clamp(0.2, 5.0);
            } else {
                let fac = 0.9 * err.powf(-1.0 / 5.0);
                self.h = h.abs() * fac.clamp(0.1, 1.0);
                if self.h < self.opts.h_min {
                    return Err(OdeFailure::StepUnderflow {
                        t: self.t,
                        h: self.h,
                    });
                }
            }
        }
        Ok(())
    }

    fn trial(&mut self, h: f64) -> ([f64; N], f64) {
        let (t, y) = (self.t, self.y);
        let f = &mut self.rhs;
        let k1 = f(t, &y);
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(t + h, &y_new);
        let mut err = 0.0f64;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.opts.atol + self.opts.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / scale).abs());
        }
        (y_new, err)
    }
}
