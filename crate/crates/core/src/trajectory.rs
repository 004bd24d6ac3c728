//! The two laws of motion: Floyd's Jacobi-theorem trajectories with their
//! group velocity, and the conjugate-momentum law `S0' = 2 (E - V) / v`.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;

use crate::action::Microstate;
use crate::numerics::ode::{Dopri5, Dopri5Options};
use crate::numerics::roots::bisect;
use crate::transform::{classify_region, Region};
use crate::{Error, Interval, ReducedAction, Result};

/// Closed forms for the free particle, obtained by differentiating the
/// unwrapped action:
///
/// ```text
/// A(x)     = 1 + a^2 + b^2 + sigma cos(2k(x - x0) - gamma)
/// t - t0   = a sqrt(2m/E) (x - x0) / A
/// v_group  = (1/a) A^2 / [sqrt(2m/E) A + 4 m sigma sin(2k(x - x0) - gamma) (x - x0) / hbar]
/// v_bd     = (1/a) sqrt(E/2m) A
/// ```
///
/// with `sigma = hypot(1 + b^2 - a^2, 2ab)` and `gamma = atan2(2ab, 1 + b^2 - a^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParticleClosedForm {
    a: f64,
    b: f64,
    sigma: f64,
    gamma: f64,
    k: f64,
    energy: f64,
    mass: f64,
    hbar: f64,
    x0: f64,
}

impl FreeParticleClosedForm {
    /// `None` unless `ra` is the analytic free-particle action.
    pub fn new(ra: &ReducedAction) -> Option<Self> {
        if !ra.is_free() {
            return None;
        }
        let c = ra.constants();
        let Microstate {
            energy, a, b, x0, ..
        } = *ra.microstate();
        let cos_coef = 1.0 + b * b - a * a;
        let sin_coef = 2.0 * a * b;
        Some(Self {
            a,
            b,
            sigma: cos_coef.hypot(sin_coef),
            gamma: sin_coef.atan2(cos_coef),
            k: c.wavenumber(energy),
            energy,
            mass: c.mass(),
            hbar: c.hbar(),
            x0,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `sigma^2` from the expanded polynomial in `(a, b)`.
    pub fn sigma_squared_polynomial(&self) -> f64 {
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        a2 * a2 + b2 * b2 + 1.0 + 2.0 * a2 * b2 + 2.0 * b2 - 2.0 * a2
    }

    fn phase(&self, x: f64) -> f64 {
        2.0 * self.k * (x - self.x0) - self.gamma
    }

    /// The envelope `A(x) > 0`.
    pub fn envelope(&self, x: f64) -> f64 {
        1.0 + self.a * self.a + self.b * self.b + self.sigma * self.phase(x).cos()
    }

    pub fn elapsed_time(&self, x: f64) -> f64 {
        self.a * (2.0 * self.mass / self.energy).sqrt() * (x - self.x0) / self.envelope(x)
    }

    /// Denominator of the group velocity; its sign changes are the singularities.
    pub fn group_velocity_denominator(&self, x: f64) -> f64 {
        let u = x - self.x0;
        (2.0 * self.mass / self.energy).sqrt() * self.envelope(x)
            + 4.0 * self.mass * self.sigma * self.phase(x).sin() * u / self.hbar
    }

    /// `dt/dx`, smooth everywhere.
    pub fn reciprocal_group_velocity(&self, x: f64) -> f64 {
        let env = self.envelope(x);
        self.a * self.group_velocity_denominator(x) / (env * env)
    }

    pub fn group_velocity(&self, x: f64) -> Velocity {
        let env = self.envelope(x);
        let den = self.a * self.group_velocity_denominator(x);
        if den == 0.0 {
            Velocity::Infinite
        } else {
            Velocity::Finite(env * env / den)
        }
    }

    pub fn bd_velocity(&self, x: f64) -> f64 {
        (self.energy / (2.0 * self.mass)).sqrt() * self.envelope(x) / self.a
    }
}

/// A velocity that may be infinite at isolated points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Velocity {
    Finite(f64),
    Infinite,
}

impl Velocity {
    pub fn value(&self) -> f64 {
        match self {
            Velocity::Finite(v) => *v,
            Velocity::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Velocity::Finite(v) => Some(*v),
            Velocity::Infinite => None,
        }
    }

    fn from_reciprocal(r: f64) -> Self {
        if r == 0.0 || !r.is_finite() {
            Velocity::Infinite
        } else {
            Velocity::Finite(1.0 / r)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flag {
    NearSingularity,
    ForbiddenRegion,
    DegradedAccuracy,
    Truncated,
}

impl Flag {
    pub const ALL: [Flag; 4] = [
        Flag::NearSingularity,
        Flag::ForbiddenRegion,
        Flag::DegradedAccuracy,
        Flag::Truncated,
    ];

    pub fn token(&self) -> &'static str {
        match self {
            Flag::NearSingularity => "near_singularity",
            Flag::ForbiddenRegion => "forbidden_region",
            Flag::DegradedAccuracy => "degraded_accuracy",
            Flag::Truncated => "truncated",
        }
    }

    fn bit(&self) -> u8 {
        1 << (*self as u8)
    }
}

/// Small set of [`Flag`]s; iteration order is fixed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Flags(u8);

impl Flags {
    pub fn insert(&mut self, flag: Flag) {
        self.0 |= flag.bit();
    }

    pub fn with(mut self, flag: Flag) -> Self {
        self.insert(flag);
        self
    }

    pub fn contains(&self, flag: Flag) -> bool {
        self.0 & flag.bit() != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Flag> + '_ {
        Flag::ALL.into_iter().filter(|f| self.contains(*f))
    }
}

impl fmt::Display for Flags {
    /// `;`-joined tokens.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, flag) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            f.write_str(flag.token())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryEngine {
    Floyd,
    Bd,
}

impl TrajectoryEngine {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrajectoryEngine::Floyd => "floyd",
            TrajectoryEngine::Bd => "bd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x: f64,
    pub t: f64,
    pub v: Velocity,
    pub flags: Flags,
    /// `integral of 2 (E - V) dt` along a conjugate-momentum trace.
    pub kinetic_action: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub engine: TrajectoryEngine,
    pub microstate: Microstate,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn is_truncated(&self) -> bool {
        self.samples
            .last()
            .is_some_and(|s| s.flags.contains(Flag::Truncated))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singularity {
    /// Midpoint of the refined bracket.
    pub x_star: f64,
    /// Bracket of the sign change, at most 1e-10 wide.
    pub bracket: Interval,
    /// The scan cell in which the sign change was first detected.
    pub scan_bracket: Interval,
    /// `t(bracket.hi) - t(bracket.lo)`.
    pub transit_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularitySet {
    pub roots: Vec<Singularity>,
    pub scan_step: f64,
}

impl SingularitySet {
    /// Whether `x` lies in the scan cell of some root.
    pub fn is_near(&self, x: f64) -> bool {
        self.roots.iter().any(|r| r.scan_bracket.contains(x))
    }
}

pub const BRACKET_WIDTH: f64 = 1e-10;

fn elapsed(ra: &ReducedAction, x: f64) -> Result<(f64, bool)> {
    match FreeParticleClosedForm::new(ra) {
        Some(cf) => {
            ra.domain().check(x)?;
            Ok((cf.elapsed_time(x), false))
        }
        None => {
            let d = ra.s0_energy_derivative(x)?;
            Ok((d.value, d.degraded))
        }
    }
}

/// `t = t0 + dS0/dE` (Jacobi's theorem); closed form for the free particle.
pub fn time_of_position(ra: &ReducedAction, x: f64) -> Result<f64> {
    Ok(ra.microstate().t0 + elapsed(ra, x)?.0)
}

fn reciprocal_group(ra: &ReducedAction, x: f64) -> Result<(f64, bool)> {
    match FreeParticleClosedForm::new(ra) {
        Some(cf) => {
            ra.domain().check(x)?;
            Ok((cf.reciprocal_group_velocity(x), false))
        }
        None => {
            let d = ra.momentum_energy_derivative(x)?;
            Ok((d.value, d.degraded))
        }
    }
}

/// `dt/dx = d(dS0/dx)/dE`, the reciprocal of the group velocity.
pub fn reciprocal_group_velocity(ra: &ReducedAction, x: f64) -> Result<f64> {
    Ok(reciprocal_group(ra, x)?.0)
}

/// Turns `dt/dx` into a velocity. A value small enough to sit within half a
/// bracket width of a sign change is reported as infinite.
fn resolve_velocity(ra: &ReducedAction, x: f64, recip: f64) -> Result<Velocity> {
    let v = Velocity::from_reciprocal(recip);
    let kinetic = ra.energy() - ra.potential().value(x);
    let scale = if kinetic > 0.0 {
        1.0 / ra.constants().classical_speed(kinetic)
    } else {
        1.0
    };
    if v == Velocity::Infinite || recip.abs() > 1e-6 * scale {
        return Ok(v);
    }
    let h = 0.5 * BRACKET_WIDTH;
    let domain = ra.domain();
    if !(domain.contains(x - h) && domain.contains(x + h)) {
        return Ok(v);
    }
    let lo = reciprocal_group(ra, x - h)?.0;
    let hi = reciprocal_group(ra, x + h)?.0;
    Ok(if lo.signum() != hi.signum() {
        Velocity::Infinite
    } else {
        v
    })
}

/// `[d(dS0/dx)/dE]^-1`; closed form for the free particle.
///
/// Within half a bracket width of a sign change of `dt/dx` the result is
/// [`Velocity::Infinite`].
pub fn group_velocity(ra: &ReducedAction, x: f64) -> Result<Velocity> {
    resolve_velocity(ra, x, reciprocal_group(ra, x)?.0)
}

/// Group velocity through the Richardson energy derivative of the conjugate
/// momentum, regardless of whether a closed form exists.
pub fn group_velocity_by_difference(ra: &ReducedAction, x: f64) -> Result<Velocity> {
    Ok(Velocity::from_reciprocal(
        ra.momentum_energy_derivative(x)?.value,
    ))
}

/// `2 (E - V(x)) / S0'(x)`.
pub fn bd_velocity(ra: &ReducedAction, x: f64) -> Result<f64> {
    let v = ra.potential().try_value(x)?;
    Ok(2.0 * (ra.energy() - v) / ra.conjugate_momentum(x)?)
}

/// `E / S0'(x)`, the speed of surfaces of constant `S = S0 - E t`.
pub fn phase_velocity(ra: &ReducedAction, x: f64) -> Result<f64> {
    Ok(ra.energy() / ra.conjugate_momentum(x)?)
}

fn scan_step(ra: &ReducedAction, interval: Interval) -> f64 {
    let c = ra.constants();
    let kinetic = ra.energy() - ra.potential().min_over(interval);
    if kinetic > 0.0 {
        PI * c.hbar() / (2.0 * c.mass() * kinetic).sqrt() / 20.0
    } else {
        interval.len() / 1000.0
    }
}

/// Locates sign changes of `dt/dx` on `interval`, where the group velocity diverges.
pub fn find_singularities(ra: &ReducedAction, interval: Interval) -> Result<SingularitySet> {
    let domain = ra.domain();
    if !domain.contains_interval(&interval) || !interval.is_finite() {
        return Err(Error::IntervalOutsideDomain { interval, domain });
    }
    let step = scan_step(ra, interval);
    if let Some(cf) = FreeParticleClosedForm::new(ra) {
        if cf.sigma() == 0.0 {
            return Ok(SingularitySet {
                roots: Vec::new(),
                scan_step: step,
            });
        }
    }
    if interval.is_degenerate() {
        return Ok(SingularitySet {
            roots: Vec::new(),
            scan_step: step,
        });
    }
    let cells = (interval.len() / step).ceil().max(1.0) as usize;
    let grid = interval.linspace(cells + 1);
    let values = grid
        .par_iter()
        .map(|&x| reciprocal_group_velocity(ra, x))
        .collect::<Result<Vec<f64>>>()?;

    let mut roots = Vec::new();
    for i in 0..cells {
        let (lo, hi) = (grid[i], grid[i + 1]);
        let (f_lo, f_hi) = (values[i], values[i + 1]);
        // A zero landing exactly on a node is attributed to the cell on its right.
        let straddles = (f_lo == 0.0) || (f_lo.signum() != f_hi.signum() && f_hi != 0.0);
        if !straddles {
            continue;
        }
        let mut failure = None;
        let bracket = bisect(
            |x| match reciprocal_group_velocity(ra, x) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            lo,
            hi,
            BRACKET_WIDTH,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let Some((b_lo, b_hi)) = bracket else {
            continue;
        };
        let transit_time = time_of_position(ra, b_hi)? - time_of_position(ra, b_lo)?;
        if !transit_time.is_finite() {
            return Err(Error::NoConvergence {
                what: "singularity transit time",
                detail: format!("non-finite elapsed time across [{b_lo}, {b_hi}]"),
            });
        }
        roots.push(Singularity {
            x_star: 0.5 * (b_lo + b_hi),
            bracket: Interval::new(b_lo, b_hi)?,
            scan_bracket: Interval::new(lo, hi)?,
            transit_time,
        });
    }
    Ok(SingularitySet {
        roots,
        scan_step: step,
    })
}

/// Samples the Jacobi-theorem trajectory on a uniform x-grid.
pub fn trace_floyd(ra: &ReducedAction, x_range: Interval, samples: usize) -> Result<Trajectory> {
    if samples < 2 {
        return Err(Error::TooFewSamples { samples, min: 2 });
    }
    let singular = find_singularities(ra, x_range)?;
    let energy = ra.energy();
    let rows = x_range
        .linspace(samples)
        .into_par_iter()
        .map(|x| {
            let (dt, t_degraded) = elapsed(ra, x)?;
            let (recip, v_degraded) = reciprocal_group(ra, x)?;
            let v = resolve_velocity(ra, x, recip)?;
            let mut flags = Flags::default();
            if singular.is_near(x) || v == Velocity::Infinite {
                flags.insert(Flag::NearSingularity);
            }
            if t_degraded || v_degraded {
                flags.insert(Flag::DegradedAccuracy);
            }
            if classify_region(
                ra.potential(),
                energy,
                x,
                crate::transform::DEFAULT_EPS_TURN,
            ) != Region::Allowed
            {
                flags.insert(Flag::ForbiddenRegion);
            }
            Ok(Sample {
                x,
                t: ra.microstate().t0 + dt,
                v,
                flags,
                kinetic_action: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        engine: TrajectoryEngine::Floyd,
        microstate: *ra.microstate(),
        samples: rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdOptions {
    /// Keep integrating (and emitting rows) in classically forbidden regions.
    pub continue_forbidden: bool,
    pub eps_turn: f64,
    pub ode: Dopri5Options,
}

impl Default for BdOptions {
    fn default() -> Self {
        Self {
            continue_forbidden: false,
            eps_turn: crate::transform::DEFAULT_EPS_TURN,
            ode: Dopri5Options::default(),
        }
    }
}

/// Integrates `dx/dt = 2 (E - V(x)) / S0'(x)` from `x(t_start) = x0`, emitting
/// a sample every `step` in time.
///
/// Alongside `x` the integrator carries `integral of 2 (E - V) dt`, which the
/// law of motion makes equal to `S0(x(t)) - S0(x0)`.
pub fn trace_bd(
    ra: &ReducedAction,
    t_range: Interval,
    step: f64,
    opts: BdOptions,
) -> Result<Trajectory> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidStep { step });
    }
    if !t_range.is_finite() {
        return Err(Error::InvalidInterval {
            lo: t_range.lo(),
            hi: t_range.hi(),
        });
    }
    let energy = ra.energy();
    let x0 = ra.microstate().x0;
    let potential = ra.potential();
    let region_flags = |x: f64| -> (Flags, bool) {
        match classify_region(potential, energy, x, opts.eps_turn) {
            Region::Allowed => (Flags::default(), false),
            _ if opts.continue_forbidden => (Flags::default().with(Flag::ForbiddenRegion), false),
            _ => (
                Flags::default()
                    .with(Flag::ForbiddenRegion)
                    .with(Flag::Truncated),
                true,
            ),
        }
    };
    let velocity = |x: f64| bd_velocity(ra, x).unwrap_or(f64::NAN);

    let mut samples = Vec::new();
    let (flags, halt) = region_flags(x0);
    samples.push(Sample {
        x: x0,
        t: t_range.lo(),
        v: Velocity::Finite(velocity(x0)),
        flags,
        kinetic_action: Some(0.0),
    });
    if halt {
        return Ok(Trajectory {
            engine: TrajectoryEngine::Bd,
            microstate: *ra.microstate(),
            samples,
        });
    }

    let rhs = |_t: f64, y: &[f64; 2]| {
        let x = y[0];
        match potential.try_value(x) {
            Ok(v) => [velocity(x), 2.0 * (energy - v)],
            Err(_) => [f64::NAN, f64::NAN],
        }
    };
    let mut ode = Dopri5::new(
        rhs,
        t_range.lo(),
        [x0, 0.0],
        Dopri5Options {
            h_init: opts.ode.h_init.min(step),
            ..opts.ode
        },
    );
    let n = (t_range.len() / step).round() as usize;
    for i in 1..=n {
        let t = if i == n {
            t_range.hi()
        } else {
            t_range.lo() + step * i as f64
        };
        if let Err(_failure) = ode.advance_to(t) {
            if let Some(last) = samples.last_mut() {
                last.flags.insert(Flag::Truncated);
            }
            break;
        }
        let [x, action] = *ode.state();
        let (flags, halt) = region_flags(x);
        samples.push(Sample {
            x,
            t,
            v: Velocity::Finite(velocity(x)),
            flags,
            kinetic_action: Some(action),
        });
        if halt {
            break;
        }
    }
    Ok(Trajectory {
        engine: TrajectoryEngine::Bd,
        microstate: *ra.microstate(),
        samples,
    })
}

/// Position along the free-particle conjugate-momentum trajectory written in
/// closed form: `x(t) = x0 + (hbar / sqrt(2mE)) * unwrap(arctan[a tan(2Et/hbar) + b])`.
///
/// The matching action is the one built from `convert_params(a, b)`: it
/// satisfies `S0(x(t)) = 2 E t`.
pub fn bd_free_position(
    constants: crate::PhysicalConstants,
    energy: f64,
    a: f64,
    b: f64,
    x0: f64,
    t: f64,
) -> f64 {
    let hbar = constants.hbar();
    let phase = 2.0 * energy * t / hbar;
    x0 + crate::action::unwrapped_angle(a, b, phase) / constants.wavenumber(energy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub x: f64,
    /// Jacobi-theorem time.
    pub t: f64,
    pub v_group: Velocity,
    pub v_bd: f64,
    pub v_phase: f64,
    pub momentum: f64,
    pub s0: f64,
    /// `|v_group - v_bd|`, infinite where the group velocity is.
    pub abs_diff: f64,
    pub flags: Flags,
}

#[derive(Debug, Clone)]
pub struct EngineComparison {
    pub rows: Vec<ComparisonRow>,
    pub max_abs_diff: f64,
    pub max_abs_bd: f64,
    /// Positions of the largest finite divergences, largest first.
    pub divergence_peaks: Vec<(f64, f64)>,
    pub singularities: SingularitySet,
}

const PEAKS: usize = 5;

/// Evaluates both laws of motion (and the phase velocity) on a uniform grid.
pub fn compare_engines(
    ra: &ReducedAction,
    x_range: Interval,
    samples: usize,
    opts: BdOptions,
) -> Result<EngineComparison> {
    if samples < 2 {
        return Err(Error::TooFewSamples { samples, min: 2 });
    }
    let energy = ra.energy();
    let xs = x_range.linspace(samples);
    // Rows stop at the first non-allowed position unless continuation is on.
    let cut = if opts.continue_forbidden {
        xs.len()
    } else {
        xs.iter()
            .position(|&x| {
                classify_region(ra.potential(), energy, x, opts.eps_turn) != Region::Allowed
            })
            .map_or(xs.len(), |i| i + 1)
    };
    let singularities = find_singularities(ra, x_range)?;
    let mut rows = xs[..cut]
        .par_iter()
        .map(|&x| {
            let (dt, t_degraded) = elapsed(ra, x)?;
            let (recip, v_degraded) = reciprocal_group(ra, x)?;
            let v_group = resolve_velocity(ra, x, recip)?;
            let momentum = ra.conjugate_momentum(x)?;
            let v_bd = bd_velocity(ra, x)?;
            let mut flags = Flags::default();
            if singularities.is_near(x) || v_group == Velocity::Infinite {
                flags.insert(Flag::NearSingularity);
            }
            if t_degraded || v_degraded {
                flags.insert(Flag::DegradedAccuracy);
            }
            if classify_region(ra.potential(), energy, x, opts.eps_turn) != Region::Allowed {
                flags.insert(Flag::ForbiddenRegion);
            }
            Ok(ComparisonRow {
                x,
                t: ra.microstate().t0 + dt,
                v_group,
                v_bd,
                v_phase: energy / momentum,
                momentum,
                s0: ra.s0(x)?,
                abs_diff: (v_group.value() - v_bd).abs(),
                flags,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if cut < xs.len() {
        if let Some(last) = rows.last_mut() {
            last.flags.insert(Flag::Truncated);
        }
    }

    let finite: Vec<&ComparisonRow> = rows.iter().filter(|r| r.abs_diff.is_finite()).collect();
    let max_abs_diff = finite.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    let max_abs_bd = rows.iter().map(|r| r.v_bd.abs()).fold(0.0, f64::max);
    let mut peaks: Vec<(f64, f64)> = finite.iter().map(|r| (r.x, r.abs_diff)).collect();
    peaks.sort_by(|p, q| q.1.total_cmp(&p.1).then(p.0.total_cmp(&q.0)));
    peaks.truncate(PEAKS);
    Ok(EngineComparison {
        rows,
        max_abs_diff,
        max_abs_bd,
        divergence_peaks: peaks,
        singularities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::PhysicalConstants;

    fn free(e: f64, a: f64, b: f64) -> ReducedAction {
        ReducedAction::free(
            PhysicalConstants::natural(),
            Microstate::new(e, a, b, 0.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn sigma_matches_polynomial_and_vanishes_only_classically() {
        for (a, b) in [
            (2.0, 0.5),
            (1.0, 0.0),
            (-1.0, 0.0),
            (0.3, -1.1),
            (1.0, 1e-3),
        ] {
            let cf = FreeParticleClosedForm::new(&free(0.5, a, b)).unwrap();
            assert!((cf.sigma() * cf.sigma() - cf.sigma_squared_polynomial()).abs() <= 1e-12);
            assert_eq!(cf.sigma() == 0.0, b == 0.0 && a.abs() == 1.0);
        }
    }

    #[test]
    fn envelope_is_positive_and_anchored() {
        let cf = FreeParticleClosedForm::new(&free(0.5, 2.0, 0.5)).unwrap();
        assert!((cf.envelope(0.0) - 2.0 * 1.25).abs() < 1e-14);
        for i in 0..2000 {
            assert!(cf.envelope(i as f64 * 0.01 - 10.0) > 0.0);
        }
    }

    #[test]
    fn classical_time_and_velocity() {
        let ra = free(0.5, 1.0, 0.0);
        for x in [-3.0, 0.0, 2.5, 10.0] {
            assert!((time_of_position(&ra, x).unwrap() - x).abs() < 1e-14);
            assert!((group_velocity(&ra, x).unwrap().value() - 1.0).abs() < 1e-14);
            assert!((bd_velocity(&ra, x).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn anchor_examples() {
        let ra = free(0.5, 2.0, 0.0);
        assert!((group_velocity(&ra, 0.0).unwrap().value() - 0.5).abs() < 1e-15);
        assert!((bd_velocity(&ra, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((phase_velocity(&ra, 0.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(time_of_position(&ra, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn phase_velocity_is_half_bd_velocity_for_free_particle() {
        let ra = free(0.7, 1.3, -0.4);
        for x in [-1.0, 0.2, 5.5] {
            let ratio = bd_velocity(&ra, x).unwrap() / phase_velocity(&ra, x).unwrap();
            assert!((ratio - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn no_singularities_classically() {
        let ra = free(0.5, 1.0, 0.0);
        let set = find_singularities(&ra, Interval::new(0.0, 100.0).unwrap()).unwrap();
        assert!(set.roots.is_empty());
    }

    #[test]
    fn singularities_far_from_anchor() {
        let ra = free(0.5, 2.0, 0.0);
        let set = find_singularities(&ra, Interval::new(10.0 * PI, 12.0 * PI).unwrap()).unwrap();
        assert!(!set.roots.is_empty());
        let cf = FreeParticleClosedForm::new(&ra).unwrap();
        for r in &set.roots {
            assert!(r.bracket.len() <= BRACKET_WIDTH);
            let (lo, hi) = (r.bracket.lo(), r.bracket.hi());
            assert!(
                cf.group_velocity_denominator(lo).signum()
                    != cf.group_velocity_denominator(hi).signum()
            );
            assert!(r.transit_time.is_finite());
        }
    }

    #[test]
    fn singularity_interval_outside_domain() {
        let ra = free(0.5, 2.0, 0.0)
            .with_domain(Interval::new(-5.0, 5.0).unwrap())
            .unwrap();
        assert!(matches!(
            find_singularities(&ra, Interval::new(0.0, 6.0).unwrap()),
            Err(Error::IntervalOutsideDomain { .. })
        ));
    }

    #[test]
    fn floyd_classical_trace() {
        let ra = free(0.5, 1.0, 0.0);
        let tr = trace_floyd(&ra, Interval::new(0.0, 10.0).unwrap(), 11).unwrap();
        assert_eq!(tr.samples.len(), 11);
        for (i, s) in tr.samples.iter().enumerate() {
            assert!((s.t - i as f64).abs() < 1e-14);
            assert!(s.flags.is_empty());
        }
        assert!(trace_floyd(&ra, Interval::new(0.0, 1.0).unwrap(), 1).is_err());
    }

    #[test]
    fn floyd_time_increases_where_velocity_positive() {
        let ra = free(0.5, 2.0, 0.0);
        let tr = trace_floyd(&ra, Interval::new(0.0, 40.0).unwrap(), 4001).unwrap();
        for w in tr.samples.windows(2) {
            let (p, q) = (&w[0], &w[1]);
            if let (Some(v1), Some(v2)) = (p.v.finite(), q.v.finite()) {
                if v1 > 0.0 && v2 > 0.0 && !p.flags.contains(Flag::NearSingularity) {
                    assert!(q.t > p.t, "t not increasing at x = {}", p.x);
                }
            }
        }
        assert!(tr
            .samples
            .iter()
            .any(|s| s.flags.contains(Flag::NearSingularity)));
    }

    #[test]
    fn bd_classical_trace() {
        let ra = free(0.5, 1.0, 0.0);
        let tr = trace_bd(
            &ra,
            Interval::new(0.0, 5.0).unwrap(),
            0.5,
            BdOptions::default(),
        )
        .unwrap();
        assert_eq!(tr.samples.len(), 11);
        for s in &tr.samples {
            assert!((s.x - s.t).abs() < 1e-11, "{s:?}");
        }
    }

    #[test]
    fn bd_halts_at_turning_point_by_default() {
        let v = crate::Potential::harmonic(1.0, 0.0).unwrap();
        let ra = ReducedAction::numeric(
            PhysicalConstants::natural(),
            v,
            Microstate::new(0.5, 1.0, 0.0, 1.5).unwrap(),
            Interval::new(-4.0, 4.0).unwrap(),
            1e-3,
        )
        .unwrap();
        let tr = trace_bd(
            &ra,
            Interval::new(0.0, 1.0).unwrap(),
            0.1,
            BdOptions::default(),
        )
        .unwrap();
        assert_eq!(tr.samples.len(), 1);
        assert!(tr.is_truncated());
        let opts = BdOptions {
            continue_forbidden: true,
            ..BdOptions::default()
        };
        let tr = trace_bd(&ra, Interval::new(0.0, 1.0).unwrap(), 0.1, opts).unwrap();
        assert_eq!(tr.samples.len(), 11);
        assert!(tr
            .samples
            .iter()
            .all(|s| s.flags.contains(Flag::ForbiddenRegion)));
        // forbidden region: v_bd has the opposite sign to the momentum
        assert!(tr.samples[0].v.value() < 0.0);
    }

    #[test]
    fn closed_form_bd_position_inverts_converted_action() {
        let c = PhysicalConstants::natural();
        let (a, b) = (2.0, 0.5);
        let p = crate::convert_params(a, b).unwrap();
        let ra35 =
            ReducedAction::free(c, Microstate::new(0.5, p.a35, p.b35, 0.0).unwrap()).unwrap();
        for t in [-3.0, -0.2, 0.0, 0.9, 7.3] {
            let x = bd_free_position(c, 0.5, a, b, 0.0, t);
            assert!(
                (ra35.s0(x).unwrap() - 2.0 * 0.5 * t).abs() < 1e-12,
                "t = {t}"
            );
        }
    }

    #[test]
    fn comparison_classical_and_anchor() {
        let ra = free(0.5, 1.0, 0.0);
        let cmp = compare_engines(
            &ra,
            Interval::new(0.0, 10.0).unwrap(),
            101,
            BdOptions::default(),
        )
        .unwrap();
        assert!(cmp.max_abs_diff <= 1e-9);

        let ra = free(0.5, 2.0, 0.0);
        let cmp = compare_engines(
            &ra,
            Interval::new(0.0, 3.0).unwrap(),
            301,
            BdOptions::default(),
        )
        .unwrap();
        assert!(cmp.rows[0].abs_diff <= 1e-12);
        // Pointwise the gap is spiky near poles; the secular part shows in the
        // period-averaged reciprocal gap, which grows with |x - x0|.
        let mean_gap = |lo: f64| {
            let xs = Interval::new(lo, lo + PI).unwrap().linspace(200);
            xs.iter()
                .map(|&x| {
                    (reciprocal_group_velocity(&ra, x).unwrap()
                        - 1.0 / bd_velocity(&ra, x).unwrap())
                    .abs()
                })
                .sum::<f64>()
                / 200.0
        };
        let (near, mid, far) = (mean_gap(0.0), mean_gap(5.0 * PI), mean_gap(20.0 * PI));
        assert!(near < mid && mid < far, "{near} {mid} {far}");
    }

    #[test]
    fn comparison_truncates_at_forbidden_region() {
        let v = crate::Potential::harmonic(1.0, 0.0).unwrap();
        let ra = ReducedAction::numeric(
            PhysicalConstants::natural(),
            v,
            Microstate::new(0.5, 1.0, 0.0, 0.0).unwrap(),
            Interval::new(-3.0, 3.0).unwrap(),
            1e-3,
        )
        .unwrap();
        let cmp = compare_engines(
            &ra,
            Interval::new(0.0, 2.0).unwrap(),
            21,
            BdOptions::default(),
        )
        .unwrap();
        let last = cmp.rows.last().unwrap();
        assert!(last.flags.contains(Flag::Truncated) && last.flags.contains(Flag::ForbiddenRegion));
        assert!(cmp.rows.len() < 21);
    }

    #[test]
    fn flags_render_in_fixed_order() {
        let f = Flags::default()
            .with(Flag::Truncated)
            .with(Flag::NearSingularity);
        assert_eq!(f.to_string(), "near_singularity;truncated");
        assert_eq!(Flags::default().to_string(), "");
    }
}
