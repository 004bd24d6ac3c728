//! The quantum reduced action `S0 = hbar * arctan(a phi2/phi1 + b) + hbar * lambda`,
//! branch-unwrapped, with its x- and E-derivatives.

use std::f64::consts::PI;

use crate::basis::{free_particle_basis, numeric_basis_anchored, BasisSample, SolutionBasis};
use crate::numerics::{quadrature, richardson};
use crate::{Error, Interval, PhysicalConstants, Potential, Result};

/// Constants of the motion selecting one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Microstate {
    pub energy: f64,
    pub a: f64,
    pub b: f64,
    pub x0: f64,
    pub t0: f64,
    /// Additive branch constant; `S0` is offset by `hbar * lambda`.
    pub lambda: f64,
}

impl Microstate {
    pub fn new(energy: f64, a: f64, b: f64, x0: f64) -> Result<Self> {
        let m = Self {
            energy,
            a,
            b,
            x0,
            t0: 0.0,
            lambda: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    /// `(a, b) = (1, 0)`: the microstate whose motion is classical.
    pub fn classical(energy: f64, x0: f64) -> Result<Self> {
        Self::new(energy, 1.0, 0.0, x0)
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_energy(mut self, energy: f64) -> Self {
        self.energy = energy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() || self.a == 0.0 {
            return Err(Error::DegenerateMicrostate { a: self.a });
        }
        if !self.energy.is_finite() {
            return Err(Error::InvalidEnergy {
                energy: self.energy,
                reason: "energy must be finite",
            });
        }
        for (name, value) in [
            ("b", self.b),
            ("x0", self.x0),
            ("t0", self.t0),
            ("lambda", self.lambda),
        ] {
            if !value.is_finite() {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

/// Coefficients of the same action written as `arctan(a35 tan(.) + b35)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvertedParams {
    pub a35: f64,
    pub b35: f64,
}

/// `(a, b) -> (1/a, -b/a)`. An involution.
pub fn convert_params(a: f64, b: f64) -> Result<ConvertedParams> {
    if !a.is_finite() || a == 0.0 {
        return Err(Error::DegenerateMicrostate { a });
    }
    Ok(ConvertedParams {
        a35: 1.0 / a,
        b35: -b / a,
    })
}

/// Continuous branch of `arctan(a tan(theta) + b)` with value `arctan(b)` at
/// `theta = 0`; it advances by `pi * sign(a)` per half-turn of `theta`.
pub fn unwrapped_angle(a: f64, b: f64, theta: f64) -> f64 {
    let n = (theta / PI).round();
    let r = theta - n * PI;
    let (s, c) = r.sin_cos();
    (a * s + b * c).atan2(c) + n * PI * a.signum()
}

fn wrap_pi(d: f64) -> f64 {
    d - 2.0 * PI * (d / (2.0 * PI)).round()
}

/// How energy derivatives choose their difference step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FdPolicy {
    /// Ridders–Richardson tableau starting at `initial * (E - V_min)`.
    Richardson { initial: f64 },
    /// Plain central difference with a fixed step.
    Fixed { step: f64 },
}

impl Default for FdPolicy {
    fn default() -> Self {
        FdPolicy::Richardson { initial: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDerivative {
    pub value: f64,
    pub error: f64,
    /// Set when the central difference was unavailable and a one-sided
    /// stencil was used instead.
    pub degraded: bool,
}

/// First three x-derivatives of `S0`, from the basis and the ODE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionDerivatives {
    pub first: f64,
    pub second: f64,
    pub third: f64,
}

#[derive(Debug, Clone)]
enum Recipe {
    Free,
    Numeric { domain: Interval, step: f64 },
}

/// `S0` bound to a solution basis and a microstate. Immutable; cheap to share.
#[derive(Debug, Clone)]
pub struct ReducedAction {
    constants: PhysicalConstants,
    microstate: Microstate,
    potential: Potential,
    basis: SolutionBasis,
    recipe: Recipe,
    /// Unwrapped `arctan` branch at every numeric grid node.
    angles: Vec<f64>,
    fd: FdPolicy,
    wronskian_scale: f64,
}

struct Pair {
    f: [f64; 3],
    g: [f64; 3],
}

impl ReducedAction {
    /// Free particle, analytic basis anchored at `x0`, domain the real line.
    pub fn free(constants: PhysicalConstants, microstate: Microstate) -> Result<Self> {
        microstate.validate()?;
        let basis = free_particle_basis(constants, microstate.energy, microstate.x0)?;
        Ok(Self {
            constants,
            microstate,
            potential: Potential::Free,
            basis,
            recipe: Recipe::Free,
            angles: Vec::new(),
            fd: FdPolicy::default(),
            wronskian_scale: 1.0,
        })
    }

    /// Numeric basis over `domain` with initial conditions at `x0`.
    pub fn numeric(
        constants: PhysicalConstants,
        potential: Potential,
        microstate: Microstate,
        domain: Interval,
        step: f64,
    ) -> Result<Self> {
        microstate.validate()?;
        let basis = numeric_basis_anchored(
            constants,
            &potential,
            microstate.energy,
            domain,
            step,
            microstate.x0,
        )?;
        let mut ra = Self {
            constants,
            microstate,
            potential,
            basis,
            recipe: Recipe::Numeric { domain, step },
            angles: Vec::new(),
            fd: FdPolicy::default(),
            wronskian_scale: 1.0,
        };
        ra.angles = ra.node_angles()?;
        Ok(ra)
    }

    /// Builds the analytic basis for the free potential, the numeric one otherwise.
    pub fn for_potential(
        constants: PhysicalConstants,
        potential: Potential,
        microstate: Microstate,
        domain: Interval,
        step: f64,
    ) -> Result<Self> {
        match potential {
            Potential::Free => Self::free(constants, microstate)?.with_domain(domain),
            other => Self::numeric(constants, other, microstate, domain, step),
        }
    }

    /// Restricts the domain of an analytic basis. Numeric bases already carry
    /// their own; for them this must be a sub-interval.
    pub fn with_domain(mut self, domain: Interval) -> Result<Self> {
        self.basis = self.basis.restricted(domain)?;
        Ok(self)
    }

    pub fn with_fd_policy(mut self, fd: FdPolicy) -> Self {
        self.fd = fd;
        self
    }

    /// Test hook, see [`SolutionBasis::with_wronskian_scale`].
    #[doc(hidden)]
    pub fn with_wronskian_scale(mut self, scale: f64) -> Self {
        self.basis = self.basis.with_wronskian_scale(scale);
        self.wronskian_scale *= scale;
        self
    }

    /// Rebuilds the basis at energy `energy`, holding `(a, b, x0, t0, lambda)`.
    pub fn at_energy(&self, energy: f64) -> Result<Self> {
        let microstate = self.microstate.with_energy(energy);
        let rebuilt = match &self.recipe {
            Recipe::Free => {
                Self::free(self.constants, microstate)?.with_domain(self.basis.domain())?
            }
            Recipe::Numeric { domain, step } => Self::numeric(
                self.constants,
                self.potential.clone(),
                microstate,
                *domain,
                *step,
            )?,
        };
        Ok(rebuilt
            .with_fd_policy(self.fd)
            .with_wronskian_scale(self.wronskian_scale))
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.constants
    }

    pub fn microstate(&self) -> &Microstate {
        &self.microstate
    }

    pub fn energy(&self) -> f64 {
        self.microstate.energy
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn basis(&self) -> &SolutionBasis {
        &self.basis
    }

    pub fn domain(&self) -> Interval {
        self.basis.domain()
    }

    pub fn fd_policy(&self) -> FdPolicy {
        self.fd
    }

    pub fn is_free(&self) -> bool {
        matches!(self.recipe, Recipe::Free)
    }

    /// `hbar * arctan(b) + hbar * lambda`, the action at `x0`.
    pub fn anchor_action(&self) -> f64 {
        self.constants.hbar() * (self.microstate.b.atan() + self.microstate.lambda)
    }

    fn pair(&self, s: &BasisSample) -> Pair {
        let Microstate { a, b, .. } = self.microstate;
        let (p1, p2) = (s.phi1, s.phi2);
        Pair {
            f: [p1.value, p1.first, p1.second],
            g: [
                a * p2.value + b * p1.value,
                a * p2.first + b * p1.first,
                a * p2.second + b * p1.second,
            ],
        }
    }

    fn raw_angle(&self, s: &BasisSample) -> f64 {
        let p = self.pair(s);
        p.g[0].atan2(p.f[0])
    }

    fn node_angles(&self) -> Result<Vec<f64>> {
        let nodes = self.basis.nodes();
        let anchor = self.microstate.x0;
        let start = nodes.partition_point(|&k| k < anchor);
        debug_assert_eq!(nodes[start], anchor);
        let mut angles = vec![0.0; nodes.len()];
        angles[start] = self.microstate.b.atan();
        for i in start + 1..nodes.len() {
            let raw = self.raw_angle(&self.basis.eval(nodes[i])?);
            angles[i] = angles[i - 1] + wrap_pi(raw - angles[i - 1]);
        }
        for i in (0..start).rev() {
            let raw = self.raw_angle(&self.basis.eval(nodes[i])?);
            angles[i] = angles[i + 1] + wrap_pi(raw - angles[i + 1]);
        }
        Ok(angles)
    }

    /// Unwrapped angle `S0 / hbar - lambda`.
    fn angle(&self, x: f64) -> Result<f64> {
        self.domain().check(x)?;
        match self.recipe {
            Recipe::Free => {
                let k = self.basis.wronskian() / self.wronskian_scale;
                let Microstate { a, b, x0, .. } = self.microstate;
                Ok(unwrapped_angle(a, b, k * (x - x0)))
            }
            Recipe::Numeric { .. } => {
                let i = self
                    .basis
                    .node_toward_anchor(x)
                    .expect("numeric basis has nodes");
                let raw = self.raw_angle(&self.basis.eval(x)?);
                Ok(self.angles[i] + wrap_pi(raw - self.angles[i]))
            }
        }
    }

    /// The reduced action, continuous and monotone in `x`.
    pub fn s0(&self, x: f64) -> Result<f64> {
        Ok(self.constants.hbar() * (self.angle(x)? + self.microstate.lambda))
    }

    /// Second realization of `S0`: quadrature of the conjugate momentum from `x0`.
    pub fn s0_by_quadrature(&self, x: f64, tol: f64) -> Result<f64> {
        self.domain().check(x)?;
        let q = quadrature::integrate(
            |q| self.conjugate_momentum(q),
            self.microstate.x0,
            x,
            tol,
            10_000,
        )?;
        Ok(self.anchor_action() + q.value)
    }

    /// `dS0/dx = hbar a W / (phi1^2 + (a phi2 + b phi1)^2)`.
    pub fn conjugate_momentum(&self, x: f64) -> Result<f64> {
        let s = self.basis.eval(x)?;
        Ok(self.momentum_from(&s, self.basis.wronskian()))
    }

    fn momentum_from(&self, s: &BasisSample, wronskian: f64) -> f64 {
        let p = self.pair(s);
        let d = p.f[0] * p.f[0] + p.g[0] * p.g[0];
        debug_assert!(
            d > 0.0,
            "phi1 and a phi2 + b phi1 vanish together at x = {}",
            s.x
        );
        self.constants.hbar() * self.microstate.a * wronskian / d
    }

    /// `S0'`, `S0''`, `S0'''` by the chain rule, with `phi''` from the ODE.
    pub fn derivatives(&self, x: f64) -> Result<ActionDerivatives> {
        let s = self.basis.eval(x)?;
        let p = self.pair(&s);
        let [f, f1, f2] = p.f;
        let [g, g1, g2] = p.g;
        let d = f * f + g * g;
        let d1 = 2.0 * (f * f1 + g * g1);
        let d2 = 2.0 * (f1 * f1 + g1 * g1 + f * f2 + g * g2);
        let first = self.momentum_from(&s, self.basis.wronskian());
        Ok(ActionDerivatives {
            first,
            second: -first * d1 / d,
            third: -first * (d2 / d - 2.0 * (d1 / d) * (d1 / d)),
        })
    }

    /// `S0'^2/2m + V - E + (hbar^2/4m) [S0'''/S0' - 3/2 (S0''/S0')^2]`.
    pub fn qshje_residual(&self, x: f64) -> Result<f64> {
        let ActionDerivatives {
            first,
            second,
            third,
        } = self.derivatives(x)?;
        let m = self.constants.mass();
        let hbar = self.constants.hbar();
        let v = self.potential.try_value(x)?;
        let ratio = second / first;
        let bracket = third / first - 1.5 * ratio * ratio;
        Ok(first * first / (2.0 * m) + v - self.energy() + hbar * hbar / (4.0 * m) * bracket)
    }

    /// `(S0, S0')` at `x` for the basis rebuilt at `energy`.
    ///
    /// Numeric bases are re-integrated only from `x0` to `x`, over the same
    /// node lattice as the full basis, so the result matches a full rebuild.
    pub fn perturbed(&self, energy: f64, x: f64) -> Result<(f64, f64)> {
        self.domain().check(x)?;
        let hbar = self.constants.hbar();
        let lambda = self.microstate.lambda;
        match self.recipe {
            Recipe::Free => {
                let basis = free_particle_basis(self.constants, energy, self.microstate.x0)?;
                let Microstate { a, b, x0, .. } = self.microstate;
                let k = basis.wronskian();
                let s = basis.eval(x)?;
                let s0 = hbar * (unwrapped_angle(a, b, k * (x - x0)) + lambda);
                Ok((s0, self.momentum_from(&s, k * self.wronskian_scale)))
            }
            Recipe::Numeric { .. } => {
                let walker = self.basis.walker(energy).expect("numeric basis");
                let mut angle = self.microstate.b.atan();
                let mut first = true;
                let state = walker.walk(self.microstate.x0, x, |_, st| {
                    if first {
                        first = false;
                        return;
                    }
                    let g = self.microstate.a * st[1][0] + self.microstate.b * st[0][0];
                    angle += wrap_pi(g.atan2(st[0][0]) - angle);
                })?;
                let s = walker.sample(x, &state)?;
                Ok((
                    hbar * (angle + lambda),
                    self.momentum_from(&s, self.wronskian_scale),
                ))
            }
        }
    }

    /// Lowest potential value the energy may be perturbed down to.
    fn energy_floor(&self) -> f64 {
        match self.recipe {
            Recipe::Free => 0.0,
            Recipe::Numeric { domain, .. } => self.potential.min_over(domain),
        }
    }

    /// Largest energy step that shifts the phase `k (x - x0)` by about 0.02 rad,
    /// so the first tableau column already resolves the oscillation at `x`.
    fn phase_limited_step(&self, x: f64, gap: f64) -> f64 {
        let c = self.constants;
        let distance = (x - self.microstate.x0).abs();
        if distance == 0.0 {
            return f64::INFINITY;
        }
        let k = c.wavenumber(gap);
        0.02 * c.hbar() * c.hbar() * k / (c.mass() * distance)
    }

    fn energy_derivative(&self, x: f64, pick: fn((f64, f64)) -> f64) -> Result<EnergyDerivative> {
        self.domain().check(x)?;
        let e = self.energy();
        let gap = e - self.energy_floor();
        let f = |en: f64| self.perturbed(en, x).map(pick);
        let one_sided = |h: f64| -> Result<EnergyDerivative> {
            let d = richardson::one_sided(f, e, h)?;
            Ok(EnergyDerivative {
                value: d.value,
                error: d.error,
                degraded: true,
            })
        };
        match self.fd {
            FdPolicy::Richardson { initial } => {
                if gap <= 0.0 {
                    return one_sided(initial * e.abs().max(1.0) * 1e-2);
                }
                let d = richardson::derivative(
                    f,
                    e,
                    (initial * gap).min(self.phase_limited_step(x, gap)),
                )?;
                Ok(EnergyDerivative {
                    value: d.value,
                    error: d.error,
                    degraded: false,
                })
            }
            FdPolicy::Fixed { step } => {
                if gap <= 0.0 {
                    return one_sided(step);
                }
                let h = step.min(0.5 * gap);
                let value = (f(e + h)? - f(e - h)?) / (2.0 * h);
                Ok(EnergyDerivative {
                    value,
                    error: f64::NAN,
                    degraded: false,
                })
            }
        }
    }

    /// `dS0/dE` at fixed `x`: by Jacobi's theorem, the elapsed time `t - t0`.
    pub fn s0_energy_derivative(&self, x: f64) -> Result<EnergyDerivative> {
        self.energy_derivative(x, |(s0, _)| s0)
    }

    /// `d(dS0/dx)/dE` at fixed `x`: the reciprocal group velocity.
    pub fn momentum_energy_derivative(&self, x: f64) -> Result<EnergyDerivative> {
        self.energy_derivative(x, |(_, p)| p)
    }
}
