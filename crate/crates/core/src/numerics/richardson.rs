//! Central differences refined by Richardson extrapolation (Ridders' tableau).

/// A derivative estimate together with the tableau's error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    pub error: f64,
}

const SHRINK: f64 = 1.4;
const SHRINK2: f64 = SHRINK * SHRINK;
const TABLE: usize = 10;
const SAFE: f64 = 2.0;

/// Derivative of `f` at `x` starting from step `h`.
///
/// Successive central differences at `h / 1.4^i` are extrapolated to zero step;
/// the entry with the smallest error estimate wins, and the iteration stops once
/// higher orders start to lose precision.
pub fn derivative<F, E>(mut f: F, x: f64, h: f64) -> Result<Derivative, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    assert!(h > 0.0, "initial step must be positive");
    let mut a = [[0.0f64; TABLE]; TABLE];
    let mut hh = h;
    a[0][0] = (f(x + hh)? - f(x - hh)?) / (2.0 * hh);
    let mut best = Derivative {
        value: a[0][0],
        error: f64::INFINITY,
    };
    for i in 1..TABLE {
        hh /= SHRINK;
        a[0][i] = (f(x + hh)? - f(x - hh)?) / (2.0 * hh);
        let mut fac = SHRINK2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= SHRINK2;
            let err = (a[j][i] - a[j - 1][i])
                .abs()
                .max((a[j][i] - a[j - 1][i - 1]).abs());
            if err <= best.error {
                best = Derivative {
                    value: a[j][i],
                    error: err,
                };
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= SAFE * best.error {
            break;
        }
    }
    Ok(best)
}

/// One-sided (forward for `h > 0`, backward for `h < 0`) three-point difference,
/// second order, refined with one Richardson level.
pub fn one_sided<F, E>(mut f: F, x: f64, h: f64) -> Result<Derivative, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let f0 = f(x)?;
    let mut stencil = |h: f64| -> Result<f64, E> {
        Ok((-3.0 * f0 + 4.0 * f(x + h)? - f(x + 2.0 * h)?) / (2.0 * h))
    };
    let coarse = stencil(h)?;
    let fine = stencil(h / 2.0)?;
    Ok(Derivative {
        value: (4.0 * fine - coarse) / 3.0,
        error: (fine - coarse).abs(),
    })
}
