//! Independent real solutions of the stationary Schrödinger equation
//! `phi'' = (2m/hbar^2)(V - E) phi`.

use crate::{Error, Interval, PhysicalConstants, Potential, Result};

/// Value and first two derivatives of one solution at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisPoint {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSample {
    pub x: f64,
    pub phi1: BasisPoint,
    pub phi2: BasisPoint,
}

impl BasisSample {
    /// Pointwise Wronskian `phi1 phi2' - phi2 phi1'`.
    pub fn wronskian(&self) -> f64 {
        self.phi1.value * self.phi2.first - self.phi2.value * self.phi1.first
    }
}

/// Smallest step the resolution bound is clamped to.
pub const MIN_STEP: f64 = 1e-6;
/// Fraction of the local reduced wavelength a step may cover.
pub const RESOLUTION: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct SolutionBasis {
    constants: PhysicalConstants,
    energy: f64,
    domain: Interval,
    wronskian: f64,
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    Free { k: f64, x0: f64 },
    Numeric(NumericGrid),
}

/// `(phi, phi')` for both members.
type Pair = [[f64; 2]; 2];

#[derive(Debug, Clone)]
struct NumericGrid {
    potential: Potential,
    anchor: f64,
    step: f64,
    xs: Vec<f64>,
    states: Vec<Pair>,
}

/// `phi1 = cos(k (x - x0))`, `phi2 = sin(k (x - x0))`, `k = sqrt(2mE)/hbar`; `W = k`.
pub fn free_particle_basis(
    constants: PhysicalConstants,
    energy: f64,
    x0: f64,
) -> Result<SolutionBasis> {
    if !(energy.is_finite() && energy > 0.0) {
        return Err(Error::InvalidEnergy {
            energy,
            reason: "free-particle energy must be positive",
        });
    }
    if !x0.is_finite() {
        return Err(Error::InvalidParameter {
            name: "x0",
            value: x0,
        });
    }
    let k = constants.wavenumber(energy);
    Ok(SolutionBasis {
        constants,
        energy,
        domain: Interval::real_line(),
        wronskian: k,
        repr: Repr::Free { k, x0 },
    })
}

/// Numerical basis with `phi1 = 1, phi1' = 0, phi2 = 0, phi2' = 1` (so
/// `W = 1`) at the lowest sampled point of `V` in `domain`, leftmost on ties.
///
/// Starting at the bottom of the well keeps both solutions from growing
/// through two forbidden regions in a row, which would swamp `W` in
/// cancellation.
pub fn numeric_basis(
    constants: PhysicalConstants,
    potential: &Potential,
    energy: f64,
    domain: Interval,
    step: f64,
) -> Result<SolutionBasis> {
    let anchor = if domain.is_finite() {
        domain
            .linspace(1025)
            .into_iter()
            .fold((domain.lo(), f64::INFINITY), |best, x| {
                let v = potential.value(x);
                if v < best.1 {
                    (x, v)
                } else {
                    best
                }
            })
            .0
    } else {
        domain.lo()
    };
    numeric_basis_anchored(constants, potential, energy, domain, step, anchor)
}

/// As [`numeric_basis`], with the initial conditions imposed at `anchor`
/// and the solutions integrated outward to both ends of `domain`.
pub fn numeric_basis_anchored(
    constants: PhysicalConstants,
    potential: &Potential,
    energy: f64,
    domain: Interval,
    step: f64,
    anchor: f64,
) -> Result<SolutionBasis> {
    if !energy.is_finite() {
        return Err(Error::InvalidEnergy {
            energy,
            reason: "energy must be finite",
        });
    }
    if !domain.is_finite() {
        return Err(Error::InvalidInterval {
            lo: domain.lo(),
            hi: domain.hi(),
        });
    }
    domain.check(anchor)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidStep { step });
    }
    potential.try_value(domain.lo())?;
    potential.try_value(domain.hi())?;
    check_resolution(constants, potential, energy, domain, step)?;

    let walker = Walker::new(constants, potential, energy, step);
    let mut forward = Vec::new();
    walker.walk(anchor, domain.hi(), |x, s| forward.push((x, *s)))?;
    let mut backward = Vec::new();
    walker.walk(anchor, domain.lo(), |x, s| backward.push((x, *s)))?;

    // backward[0] and forward[0] are both the anchor.
    let mut xs = Vec::with_capacity(forward.len() + backward.len());
    let mut states = Vec::with_capacity(xs.capacity());
    for (x, s) in backward.iter().skip(1).rev().chain(forward.iter()) {
        xs.push(*x);
        states.push(*s);
    }
    Ok(SolutionBasis {
        constants,
        energy,
        domain,
        wronskian: 1.0,
        repr: Repr::Numeric(NumericGrid {
            potential: potential.clone(),
            anchor,
            step,
            xs,
            states,
        }),
    })
}

/// Largest admissible step for `energy` over `domain`.
pub fn resolution_bound(
    constants: PhysicalConstants,
    potential: &Potential,
    energy: f64,
    domain: Interval,
) -> (f64, f64) {
    let max_kinetic = (energy - potential.min_over(domain))
        .abs()
        .max((energy - potential.max_over(domain)).abs());
    let bound = if max_kinetic > 0.0 {
        (RESOLUTION * constants.hbar() / (2.0 * constants.mass() * max_kinetic).sqrt())
            .max(MIN_STEP)
    } else {
        f64::INFINITY
    };
    (bound, max_kinetic)
}

fn check_resolution(
    constants: PhysicalConstants,
    potential: &Potential,
    energy: f64,
    domain: Interval,
    step: f64,
) -> Result<()> {
    let (bound, max_kinetic) = resolution_bound(constants, potential, energy, domain);
    if step > bound {
        return Err(Error::StepTooCoarse {
            step,
            bound,
            max_kinetic,
        });
    }
    Ok(())
}

impl SolutionBasis {
    pub fn constants(&self) -> PhysicalConstants {
        self.constants
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// The Wronskian constant fixed at construction.
    pub fn wronskian(&self) -> f64 {
        self.wronskian
    }

    /// Where `phi1 = 1, phi2 = 0` holds.
    pub fn anchor(&self) -> f64 {
        match &self.repr {
            Repr::Free { x0, .. } => *x0,
            Repr::Numeric(g) => g.anchor,
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.repr, Repr::Free { .. })
    }

    pub fn potential(&self) -> Potential {
        match &self.repr {
            Repr::Free { .. } => Potential::Free,
            Repr::Numeric(g) => g.potential.clone(),
        }
    }

    /// Integration step for numeric bases.
    pub fn step(&self) -> Option<f64> {
        match &self.repr {
            Repr::Free { .. } => None,
            Repr::Numeric(g) => Some(g.step),
        }
    }

    /// Grid nodes of a numeric basis (empty for the analytic one).
    pub fn nodes(&self) -> &[f64] {
        match &self.repr {
            Repr::Free { .. } => &[],
            Repr::Numeric(g) => &g.xs,
        }
    }

    /// Restricts the domain; fails if `domain` is not inside the current one.
    pub fn restricted(mut self, domain: Interval) -> Result<Self> {
        if !self.domain.contains_interval(&domain) {
            return Err(Error::IntervalOutsideDomain {
                interval: domain,
                domain: self.domain,
            });
        }
        self.domain = domain;
        Ok(self)
    }

    /// Test hook: multiplies the stored Wronskian constant, leaving the
    /// solutions untouched. Used to verify that the identity suite notices.
    #[doc(hidden)]
    pub fn with_wronskian_scale(mut self, scale: f64) -> Self {
        self.wronskian *= scale;
        self
    }

    pub fn eval(&self, x: f64) -> Result<BasisSample> {
        self.domain.check(x)?;
        match &self.repr {
            Repr::Free { k, x0 } => {
                let (s, c) = (k * (x - x0)).sin_cos();
                let k2 = k * k;
                Ok(BasisSample {
                    x,
                    phi1: BasisPoint {
                        value: c,
                        first: -k * s,
                        second: -k2 * c,
                    },
                    phi2: BasisPoint {
                        value: s,
                        first: k * c,
                        second: -k2 * s,
                    },
                })
            }
            Repr::Numeric(g) => {
                let i = g.node_toward_anchor(x);
                let walker = Walker::new(self.constants, &g.potential, self.energy, g.step);
                let state = if g.xs[i] == x {
                    g.states[i]
                } else {
                    walker.propagate(g.xs[i], x - g.xs[i], &g.states[i])?
                };
                walker.sample(x, &state)
            }
        }
    }

    /// Index of the grid node from which `x` is reached when walking outward
    /// from the anchor.
    pub(crate) fn node_toward_anchor(&self, x: f64) -> Option<usize> {
        match &self.repr {
            Repr::Free { .. } => None,
            Repr::Numeric(g) => Some(g.node_toward_anchor(x)),
        }
    }

    pub(crate) fn walker(&self, energy: f64) -> Option<Walker<'_>> {
        match &self.repr {
            Repr::Free { .. } => None,
            Repr::Numeric(g) => Some(Walker::new(self.constants, &g.potential, energy, g.step)),
        }
    }

    /// Max relative deviation of the pointwise Wronskian from its value at the
    /// anchor, over the grid nodes (or over `xs` for the analytic basis).
    pub fn wronskian_drift(&self, xs: &[f64]) -> Result<f64> {
        let w0 = self
            .eval(self.anchor().clamp(self.domain.lo(), self.domain.hi()))?
            .wronskian();
        let points: Vec<f64> = if self.nodes().is_empty() {
            xs.to_vec()
        } else {
            self.nodes().to_vec()
        };
        let mut worst = 0.0f64;
        for x in points {
            worst = worst.max((self.eval(x)?.wronskian() - w0).abs() / w0.abs());
        }
        Ok(worst)
    }

    /// Max scaled Schrödinger residual `|phi'' + (2m/hbar^2)(E - V) phi|`.
    ///
    /// For the analytic basis `phi''` is the closed-form second derivative at
    /// each of `xs`. For numeric bases the integrated `phi'` is differentiated
    /// with a fourth-order stencil on the interior nodes, and the residual is
    /// scaled by `max(1, |phi|, |phi'|)`.
    pub fn schrodinger_residual(&self, xs: &[f64]) -> Result<f64> {
        let coupling = self.constants.coupling();
        match &self.repr {
            Repr::Free { .. } => {
                let mut worst = 0.0f64;
                for &x in xs {
                    let s = self.eval(x)?;
                    for p in [s.phi1, s.phi2] {
                        worst = worst.max((p.second + coupling * self.energy * p.value).abs());
                    }
                }
                Ok(worst)
            }
            Repr::Numeric(g) => {
                let mut worst = 0.0f64;
                let h = g.step;
                for i in 2..g.xs.len().saturating_sub(2) {
                    let uniform = (1..=2).all(|d| {
                        ((g.xs[i + d] - g.xs[i]) - d as f64 * h).abs() < 1e-9 * h
                            && ((g.xs[i] - g.xs[i - d]) - d as f64 * h).abs() < 1e-9 * h
                    });
                    if !uniform {
                        continue;
                    }
                    let q = coupling * (g.potential.value(g.xs[i]) - self.energy);
                    for m in 0..2 {
                        let d = |j: usize| g.states[j][m][1];
                        let fd =
                            (-d(i + 2) + 8.0 * d(i + 1) - 8.0 * d(i - 1) + d(i - 2)) / (12.0 * h);
                        let [phi, dphi] = g.states[i][m];
                        let scale = 1f64.max(phi.abs()).max(dphi.abs());
                        worst = worst.max((fd - q * phi).abs() / scale);
                    }
                }
                Ok(worst)
            }
        }
    }
}

impl NumericGrid {
    /// Index of the node bracketing `x` on the anchor side.
    fn node_toward_anchor(&self, x: f64) -> usize {
        let n = self.xs.len();
        if x >= self.anchor {
            // last node <= x
            self.xs
                .partition_point(|&k| k <= x)
                .saturating_sub(1)
                .min(n - 1)
        } else {
            // first node >= x
            self.xs.partition_point(|&k| k < x).min(n - 1)
        }
    }
}

/// Fourth-order Magnus stepping over the node lattice `anchor + j * step`.
///
/// The one-step propagator is the exponential of a traceless 2x2 matrix, so
/// its determinant (and with it the Wronskian) is one up to rounding.
pub(crate) struct Walker<'a> {
    potential: &'a Potential,
    coupling: f64,
    energy: f64,
    step: f64,
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // sqrt(3) / 6
const COMMUTATOR: f64 = 0.144_337_567_297_406_45; // sqrt(3) / 12

impl<'a> Walker<'a> {
    pub(crate) fn new(
        constants: PhysicalConstants,
        potential: &'a Potential,
        energy: f64,
        step: f64,
    ) -> Self {
        Self {
            potential,
            coupling: constants.coupling(),
            energy,
            step,
        }
    }

    fn q(&self, x: f64) -> Result<f64> {
        Ok(self.coupling * (self.potential.try_value(x)? - self.energy))
    }

    pub(crate) fn propagate(&self, x: f64, h: f64, state: &Pair) -> Result<Pair> {
        let q1 = self.q(x + (0.5 - GAUSS_OFFSET) * h)?;
        let q2 = self.q(x + (0.5 + GAUSS_OFFSET) * h)?;
        let alpha = COMMUTATOR * h * h * (q1 - q2);
        let lower = 0.5 * h * (q1 + q2);
        let s2 = alpha * alpha + h * lower;
        let (c, sh) = if s2 > 0.0 {
            let s = s2.sqrt();
            (s.cosh(), s.sinh() / s)
        } else if s2 < 0.0 {
            let r = (-s2).sqrt();
            (r.cos(), r.sin() / r)
        } else {
            (1.0, 1.0)
        };
        // exp(Omega) = c I + sh Omega, Omega = [[alpha, h], [lower, -alpha]]
        let m = [[c + sh * alpha, sh * h], [sh * lower, c - sh * alpha]];
        let apply = |y: [f64; 2]| {
            [
                m[0][0] * y[0] + m[0][1] * y[1],
                m[1][0] * y[0] + m[1][1] * y[1],
            ]
        };
        Ok([apply(state[0]), apply(state[1])])
    }

    /// Walks from `anchor` (canonical initial conditions) through the lattice
    /// nodes toward `target`, then sub-steps onto `target`. `visit` sees every
    /// node including the anchor and the target.
    pub(crate) fn walk(
        &self,
        anchor: f64,
        target: f64,
        mut visit: impl FnMut(f64, &Pair),
    ) -> Result<Pair> {
        let mut state: Pair = [[1.0, 0.0], [0.0, 1.0]];
        visit(anchor, &state);
        if target == anchor {
            return Ok(state);
        }
        let dir = if target > anchor { 1.0 } else { -1.0 };
        let h = self.step * dir;
        let mut x = anchor;
        let mut j = 1.0f64;
        loop {
            let next = anchor + j * h;
            if (next - target) * dir > 0.0 {
                break;
            }
            state = self.propagate(x, next - x, &state)?;
            x = next;
            visit(x, &state);
            if x == target {
                return Ok(state);
            }
            j += 1.0;
        }
        state = self.propagate(x, target - x, &state)?;
        visit(target, &state);
        Ok(state)
    }

    pub(crate) fn sample(&self, x: f64, state: &Pair) -> Result<BasisSample> {
        let q = self.q(x)?;
        let point = |s: [f64; 2]| BasisPoint {
            value: s[0],
            first: s[1],
            second: q * s[0],
        };
        Ok(BasisSample {
            x,
            phi1: point(state[0]),
            phi2: point(state[1]),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn natural() -> PhysicalConstants {
        PhysicalConstants::natural()
    }

    #[test]
    fn free_basis_wavenumber_and_wronskian() {
        let b = free_particle_basis(natural(), 0.5, 0.0).unwrap();
        assert_eq!(b.wronskian(), 1.0);
        let b = free_particle_basis(natural(), 2.0, 0.0).unwrap();
        assert_eq!(b.wronskian(), 2.0);
    }

    #[test]
    fn free_basis_at_anchor() {
        let b = free_particle_basis(natural(), 0.5, 0.0).unwrap();
        let s = b.eval(0.0).unwrap();
        assert_eq!((s.phi1.value, s.phi2.value), (1.0, 0.0));
    }

    #[test]
    fn free_basis_rejects_non_positive_energy() {
        assert!(matches!(
            free_particle_basis(natural(), 0.0, 0.0),
            Err(Error::InvalidEnergy { .. })
        ));
        assert!(free_particle_basis(natural(), -1.0, 0.0).is_err());
    }

    #[test]
    fn free_basis_invariants_on_grid() {
        let b = free_particle_basis(natural(), 0.5, 0.3).unwrap();
        let xs = Interval::new(-20.0, 20.0).unwrap().linspace(1001);
        assert!(b.wronskian_drift(&xs).unwrap() <= 1e-8);
        assert!(b.schrodinger_residual(&xs).unwrap() <= 1e-8);
    }

    #[test]
    fn zero_length_domain_gives_initial_conditions() {
        let v = Potential::harmonic(1.0, 0.0).unwrap();
        let d = Interval::new(1.5, 1.5).unwrap();
        let b = numeric_basis(natural(), &v, 0.5, d, 1e-3).unwrap();
        assert_eq!(b.nodes(), &[1.5]);
        let s = b.eval(1.5).unwrap();
        assert_eq!(
            (s.phi1.value, s.phi1.first, s.phi2.value, s.phi2.first),
            (1.0, 0.0, 0.0, 1.0)
        );
    }

    #[test]
    fn numeric_free_matches_analytic_after_rescaling() {
        let d = Interval::new(0.0, 10.0).unwrap();
        let num = numeric_basis(natural(), &Potential::Free, 0.5, d, 1e-3).unwrap();
        let ana = free_particle_basis(natural(), 0.5, 0.0).unwrap();
        let k = ana.wronskian();
        for x in d.linspace(997) {
            let (n, a) = (num.eval(x).unwrap(), ana.eval(x).unwrap());
            assert!((n.phi1.value - a.phi1.value).abs() <= 1e-7);
            assert!((k * n.phi2.value - a.phi2.value).abs() <= 1e-7);
        }
        assert!(num.schrodinger_residual(&[]).unwrap() <= 1e-6);
    }

    #[test]
    fn harmonic_wronskian_constancy() {
        let v = Potential::harmonic(1.0, 0.0).unwrap();
        let d = Interval::new(-6.0, 6.0).unwrap();
        let b = numeric_basis(natural(), &v, 0.5, d, 1e-3).unwrap();
        let drift = b.wronskian_drift(&[]).unwrap();
        assert!(drift <= 1e-8, "drift {drift}");
        assert!(b.schrodinger_residual(&[]).unwrap() <= 1e-6);
    }

    #[test]
    fn coarse_step_refused() {
        let v = Potential::harmonic(1.0, 0.0).unwrap();
        let d = Interval::new(-6.0, 6.0).unwrap();
        // bound = 0.05 / sqrt(2 * 17.5) ~ 8.45e-3
        let err = numeric_basis(natural(), &v, 0.5, d, 0.01).unwrap_err();
        assert!(matches!(err, Error::StepTooCoarse { .. }), "{err}");
        assert!(numeric_basis(natural(), &v, 0.5, d, 8e-3).is_ok());
    }

    #[test]
    fn undefined_potential_is_domain_error() {
        let v = Potential::tabulated(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.1, 0.2, 0.3]).unwrap();
        let d = Interval::new(0.0, 4.0).unwrap();
        assert!(matches!(
            numeric_basis(natural(), &v, 1.0, d, 1e-3),
            Err(Error::NonFinitePotential { .. })
        ));
    }

    #[test]
    fn anchored_basis_has_canonical_values_at_anchor() {
        let v = Potential::harmonic(1.0, 0.0).unwrap();
        let d = Interval::new(-4.0, 4.0).unwrap();
        let b = numeric_basis_anchored(natural(), &v, 1.5, d, 1e-3, 0.7).unwrap();
        let s = b.eval(0.7).unwrap();
        assert_eq!((s.phi1.value, s.phi2.value, s.wronskian()), (1.0, 0.0, 1.0));
        assert!(b.wronskian_drift(&[]).unwrap() <= 1e-10);
    }

    #[test]
    fn magnus_is_fourth_order() {
        // Linear potential: compare phi at x = 2 for steps h and h/2 against h/8.
        let v = Potential::linear(1.0, 0.0).unwrap();
        let d = Interval::new(0.0, 2.0).unwrap();
        let at = |h: f64| {
            numeric_basis(natural(), &v, 0.3, d, h)
                .unwrap()
                .eval(2.0)
                .unwrap()
                .phi2
                .value
        };
        let reference = at(0.025 / 8.0);
        let e1 = (at(0.025) - reference).abs();
        let e2 = (at(0.0125) - reference).abs();
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "convergence ratio {ratio}");
    }

    #[test]
    fn off_grid_dense_output_is_accurate() {
        let d = Interval::new(0.0, 5.0).unwrap();
        let v = Potential::linear(0.2, 0.0).unwrap();
        let coarse = numeric_basis(natural(), &v, 2.0, d, 1e-2).unwrap();
        let fine = numeric_basis(natural(), &v, 2.0, d, 1e-3).unwrap();
        for &x in &[0.0137, 1.23456, 4.9999] {
            let (c, f) = (coarse.eval(x).unwrap(), fine.eval(x).unwrap());
            assert!((c.phi1.value - f.phi1.value).abs() < 1e-8);
            assert!((c.phi2.first - f.phi2.first).abs() < 1e-8);
        }
    }
}
