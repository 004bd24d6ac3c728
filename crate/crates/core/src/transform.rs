//! The quantum coordinate transform with forbidden-region refusal, and the
//! identity checks tying the engines together: Jacobi's theorem, the Legendre
//! duals between `S0` and the negated principal function, the QSHJE residual,
//! the Lagrangian rate, and the conjugate-momentum action law.

use std::fmt;

use rayon::prelude::*;

use crate::numerics::quadrature;
use crate::trajectory::{self, FreeParticleClosedForm, Velocity};
use crate::{convert_params, Error, Interval, Microstate, Potential, ReducedAction, Result};

pub const DEFAULT_EPS_TURN: f64 = 1e-10;
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Allowed,
    Forbidden,
    Turning,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Allowed => "allowed",
            Region::Forbidden => "forbidden",
            Region::Turning => "turning",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `allowed` if `E - V > eps_turn`, `forbidden` if `E - V < -eps_turn`,
/// `turning` otherwise. An undefined potential counts as forbidden.
pub fn classify_region(potential: &Potential, energy: f64, x: f64, eps_turn: f64) -> Region {
    let kinetic = energy - potential.value(x);
    if kinetic > eps_turn {
        Region::Allowed
    } else if kinetic < -eps_turn || kinetic.is_nan() {
        Region::Forbidden
    } else {
        Region::Turning
    }
}

/// First point on the path `from -> to` that is not classically allowed.
fn first_obstruction(
    potential: &Potential,
    energy: f64,
    from: f64,
    to: f64,
    eps_turn: f64,
) -> Option<(f64, Region)> {
    let start = classify_region(potential, energy, from, eps_turn);
    if start != Region::Allowed {
        return Some((from, start));
    }
    let span = Interval::spanning(from, to).ok()?;
    let mut crossings: Vec<f64> = potential
        .turning_points(energy)
        .into_iter()
        .filter(|x| span.contains(*x))
        .collect();
    if to < from {
        crossings.reverse();
    }
    if let Some(&x) = crossings.first() {
        return Some((x, Region::Turning));
    }
    let end = classify_region(potential, energy, to, eps_turn);
    (end != Region::Allowed).then_some((to, end))
}

/// `x_hat = integral from x_ref to x of S0'(q) / sqrt(2m (E - V(q))) dq`.
///
/// Defined only when the whole path stays in one classically allowed
/// component; anything else is refused with the first offending point.
pub fn quantum_transform(
    ra: &ReducedAction,
    x_ref: f64,
    x: f64,
    quad_tol: f64,
    eps_turn: f64,
) -> Result<f64> {
    let domain = ra.domain();
    domain.check(x_ref)?;
    domain.check(x)?;
    let energy = ra.energy();
    if let Some((at, region)) = first_obstruction(ra.potential(), energy, x_ref, x, eps_turn) {
        return Err(Error::ForbiddenRegion {
            from: x_ref,
            to: x,
            x: at,
            region: region.as_str(),
        });
    }
    let two_m = 2.0 * ra.constants().mass();
    let integrand = |q: f64| -> Result<f64> {
        let kinetic = energy - ra.potential().try_value(q)?;
        Ok(ra.conjugate_momentum(q)? / (two_m * kinetic).sqrt())
    };
    let q = quadrature::integrate(integrand, x_ref, x, quad_tol, 20_000)?;
    if !q.converged {
        return Err(Error::NoConvergence {
            what: "quantum transform quadrature",
            detail: format!("error estimate {} above tolerance {quad_tol}", q.error),
        });
    }
    Ok(q.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformRow {
    pub x: f64,
    /// `None` outside the allowed region.
    pub x_hat: Option<f64>,
    pub region: Region,
    /// The lower limit used for this row.
    pub anchor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformTable {
    pub x_ref: f64,
    pub samples: Vec<TransformRow>,
}

/// Tabulates the transform at each of `xs` (ascending).
///
/// Rows reachable from `x_ref` without leaving the allowed region use `x_ref`
/// as the lower limit; other allowed components are anchored at their first
/// sample and are not related to each other.
pub fn transform_table(
    ra: &ReducedAction,
    x_ref: f64,
    xs: &[f64],
    quad_tol: f64,
    eps_turn: f64,
) -> Result<TransformTable> {
    let energy = ra.energy();
    let potential = ra.potential();
    let mut plan = Vec::with_capacity(xs.len());
    let mut component_anchor: Option<f64> = None;
    let mut prev: Option<f64> = None;
    for &x in xs {
        let region = classify_region(potential, energy, x, eps_turn);
        if region != Region::Allowed {
            component_anchor = None;
            prev = None;
            plan.push((x, region, None));
            continue;
        }
        if let Some(p) = prev {
            if first_obstruction(potential, energy, p, x, eps_turn).is_some() {
                component_anchor = None;
            }
        }
        prev = Some(x);
        let anchor = if first_obstruction(potential, energy, x_ref, x, eps_turn).is_none()
            && ra.domain().contains(x_ref)
        {
            x_ref
        } else {
            *component_anchor.get_or_insert(x)
        };
        plan.push((x, region, Some(anchor)));
    }
    let samples = plan
        .into_par_iter()
        .map(|(x, region, anchor)| {
            let x_hat = match anchor {
                Some(a) => Some(quantum_transform(ra, a, x, quad_tol, eps_turn)?),
                None => None,
            };
            Ok(TransformRow {
                x,
                x_hat,
                region,
                anchor,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransformTable { x_ref, samples })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityEntry {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdentityReport {
    pub entries: Vec<IdentityEntry>,
}

impl IdentityReport {
    /// Records `residual <= tolerance`; NaN fails.
    pub fn push(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        self.entries.push(IdentityEntry {
            name: name.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        });
    }

    pub fn extend(&mut self, other: IdentityReport) {
        self.entries.extend(other.entries);
    }

    pub fn overall(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn get(&self, name: &str) -> Option<&IdentityEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Residuals of the two Legendre duals at `x`, offsets anchored at `(x0, t0)`.
///
/// With `t` from [`trajectory::time_of_position`] and `calS = E (t - t0) - (S0 - S0(x0))`:
/// * `legendre_s0`: `|S0 - (t dcalS/dt - calS)|` with `dcalS/dt = E`;
/// * `legendre_action`: `|calS - (E dS0/dE - S0)|` with `dS0/dE` by Richardson,
///   which is Jacobi's theorem scaled by `E`.
pub fn legendre_dual_check(ra: &ReducedAction, x: f64, tol: f64) -> Result<IdentityReport> {
    let x0 = ra.microstate().x0;
    let t0 = ra.microstate().t0;
    let e = ra.energy();
    let t_rel = trajectory::time_of_position(ra, x)? - t0;
    let d_s0 = ra.s0(x)? - ra.s0(x0)?;
    let action = e * t_rel - d_s0;
    let ds0_de = ra.s0_energy_derivative(x)?.value;

    let mut report = IdentityReport::default();
    report.push("legendre_s0", (d_s0 - (t_rel * e - action)).abs(), tol);
    report.push("legendre_action", (action - (e * ds0_de - d_s0)).abs(), tol);
    Ok(report)
}

/// The two routes to the quantum Lagrangian `dS/dt` at `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LagrangianRate {
    Defined {
        /// `S0' v - S0'^2/2m - V - (hbar^2/4m)[S0'''/S0' - 3/2 (S0''/S0')^2]`
        displayed: f64,
        /// `S0' v - E`
        reduced: f64,
    },
    /// `x` sits on a group-velocity singularity.
    Undefined,
}

/// Evaluates the Lagrangian rate with `v` the group velocity.
pub fn lagrangian_rate(ra: &ReducedAction, x: f64) -> Result<LagrangianRate> {
    let v = match trajectory::group_velocity(ra, x)? {
        Velocity::Finite(v) => v,
        Velocity::Infinite => return Ok(LagrangianRate::Undefined),
    };
    // Local scan: x inside a refined singular bracket has no usable velocity.
    let domain = ra.domain();
    let reach = 1e-6f64.max(1e-6 * x.abs());
    let local = Interval::new((x - reach).max(domain.lo()), (x + reach).min(domain.hi()))?;
    let near = trajectory::find_singularities(ra, local)?;
    if near.roots.iter().any(|r| r.bracket.contains(x)) {
        return Ok(LagrangianRate::Undefined);
    }
    let d = ra.derivatives(x)?;
    let c = ra.constants();
    let m = c.mass();
    let hbar = c.hbar();
    let potential = ra.potential().try_value(x)?;
    let ratio = d.second / d.first;
    let bracket = d.third / d.first - 1.5 * ratio * ratio;
    let displayed =
        d.first * v - d.first * d.first / (2.0 * m) - potential - hbar * hbar / (4.0 * m) * bracket;
    Ok(LagrangianRate::Defined {
        displayed,
        reduced: d.first * v - ra.energy(),
    })
}

/// Tolerances for [`identity_suite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteTolerances {
    /// Relative (absolute below 1), Jacobi time vs. Richardson `dS0/dE`.
    pub jacobi: f64,
    /// Absolute, QSHJE residual.
    pub qshje: f64,
    /// Absolute, both Legendre duals.
    pub legendre: f64,
    /// Relative (absolute below 1), closed forms vs. difference routes.
    pub conformance: f64,
    /// Absolute, `S0(x(t)) - S0(x0) - integral of 2 (E - V) dt`.
    pub action_rate: f64,
}

impl Default for SuiteTolerances {
    fn default() -> Self {
        Self {
            jacobi: 1e-6,
            qshje: 1e-9,
            legendre: 1e-6,
            conformance: 1e-6,
            action_rate: 1e-6,
        }
    }
}

/// Relative difference, absolute below unit magnitude.
fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Runs every identity at the positions `xs` and along a conjugate-momentum
/// trace over `t_range`. Each entry reports the worst residual.
pub fn identity_suite(
    ra: &ReducedAction,
    xs: &[f64],
    t_range: Interval,
    t_step: f64,
    tol: SuiteTolerances,
    bd: trajectory::BdOptions,
) -> Result<IdentityReport> {
    let t0 = ra.microstate().t0;
    let singular = match Interval::new(
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    ) {
        Ok(span) => Some(trajectory::find_singularities(ra, span)?),
        Err(_) => None,
    };
    let near = |x: f64| singular.as_ref().is_some_and(|s| s.is_near(x));

    struct Point {
        jacobi: f64,
        qshje: f64,
        legendre_s0: f64,
        legendre_action: f64,
        group: f64,
        bd: f64,
    }
    let points = xs
        .par_iter()
        .map(|&x| -> Result<Point> {
            let t_rel = trajectory::time_of_position(ra, x)? - t0;
            let ds0_de = ra.s0_energy_derivative(x)?.value;
            let legendre = legendre_dual_check(ra, x, tol.legendre)?;
            let (group, bd) = match FreeParticleClosedForm::new(ra) {
                Some(cf) if !near(x) => {
                    let fd = trajectory::group_velocity_by_difference(ra, x)?;
                    let closed = cf.group_velocity(x);
                    let group = match (closed, fd) {
                        (Velocity::Finite(c), Velocity::Finite(f)) => relative(c, f),
                        _ => f64::INFINITY,
                    };
                    (
                        group,
                        relative(cf.bd_velocity(x), trajectory::bd_velocity(ra, x)?),
                    )
                }
                _ => (0.0, 0.0),
            };
            Ok(Point {
                jacobi: relative(t_rel, ds0_de),
                qshje: ra.qshje_residual(x)?.abs(),
                legendre_s0: legendre.get("legendre_s0").map_or(f64::NAN, |e| e.residual),
                legendre_action: legendre
                    .get("legendre_action")
                    .map_or(f64::NAN, |e| e.residual),
                group,
                bd,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = |f: fn(&Point) -> f64| {
        points.iter().map(f).fold(
            0.0,
            |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) },
        )
    };

    let mut report = IdentityReport::default();
    report.push("jacobi", worst(|p| p.jacobi), tol.jacobi);
    report.push("legendre_s0", worst(|p| p.legendre_s0), tol.legendre);
    report.push(
        "legendre_action",
        worst(|p| p.legendre_action),
        tol.legendre,
    );
    report.push("qshje", worst(|p| p.qshje), tol.qshje);
    if ra.is_free() {
        report.push(
            "closed_form_group_velocity",
            worst(|p| p.group),
            tol.conformance,
        );
        report.push("closed_form_bd_velocity", worst(|p| p.bd), tol.conformance);
    }

    let Microstate { a, b, .. } = *ra.microstate();
    let once = convert_params(a, b)?;
    let twice = convert_params(once.a35, once.b35)?;
    report.push(
        "convert_params_involution",
        (twice.a35 - a).abs() + (twice.b35 - b).abs(),
        0.0,
    );

    let tr = trajectory::trace_bd(ra, t_range, t_step, bd)?;
    let s_start = ra.s0(ra.microstate().x0)?;
    let mut rate = 0.0f64;
    for s in &tr.samples {
        let integral = s.kinetic_action.unwrap_or(f64::NAN);
        rate = rate.max((ra.s0(s.x)? - s_start - integral).abs());
    }
    report.push("bd_action_rate", rate, tol.action_rate);
    Ok(report)
}
