//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

// Published nodes and weights, kept at full printed precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F, E>(f: &mut F, lo: f64, hi: f64) -> Result<(f64, f64), E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center)?;
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx)? + f(center + dx)?;
        kron += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    Ok((kron * half, ((kron - gauss) * half).abs()))
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// `b < a` is allowed and flips the sign. A result with `converged == false`
/// carries the best estimate reached within `max_segments` bisections.
pub fn integrate<F, E>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_segments: usize,
) -> Result<Quadrature, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            converged: true,
            evaluations: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (value, error) = kronrod(&mut f, lo, hi)?;
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        lo,
        hi,
        value,
        error,
    });
    let mut total_err = error;

    while total_err > tol && heap.len() < max_segments {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Segment cannot be split further in floating point.
            heap.push(worst);
            break;
        }
        let (lv, le) = kronrod(&mut f, worst.lo, mid)?;
        let (rv, re) = kronrod(&mut f, mid, worst.hi)?;
        evaluations += 30;
        total_err += le + re - worst.error;
        heap.push(Segment {
            lo: worst.lo,
            hi: mid,
            value: lv,
            error: le,
        });
        heap.push(Segment {
            lo: mid,
            hi: worst.hi,
            value: rv,
            error: re,
        });
    }

    // Re-sum to shed the drift of the running updates.
    let (mut value, mut error) = (0.0, 0.0);
    for s in heap.iter() {
        value += s.value;
        error += s.error;
    }
    Ok(Quadrature {
        value: sign * value,
        error,
        converged: error <= tol,
        evaluations,
    })
}
