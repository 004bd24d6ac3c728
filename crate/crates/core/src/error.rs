use thiserror::Error;

use crate::Interval;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid energy {energy}: {reason}")]
    InvalidEnergy { energy: f64, reason: &'static str },

    #[error("invalid physical constants: hbar = {hbar}, mass = {mass} (both must be positive and finite)")]
    InvalidConstants { hbar: f64, mass: f64 },

    #[error("degenerate microstate: a = {a} (a must be finite and nonzero)")]
    DegenerateMicrostate { a: f64 },

    #[error("invalid microstate parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("x = {x} lies outside the domain {domain}")]
    OutsideDomain { x: f64, domain: Interval },

    #[error("interval {interval} exceeds the domain {domain}")]
    IntervalOutsideDomain {
        interval: Interval,
        domain: Interval,
    },

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("potential is not finite at x = {x}")]
    NonFinitePotential { x: f64 },

    #[error("step {step} does not resolve the local wavelength (bound {bound}, max |E - V| = {max_kinetic})")]
    StepTooCoarse {
        step: f64,
        bound: f64,
        max_kinetic: f64,
    },

    #[error("invalid step {step}")]
    InvalidStep { step: f64 },

    #[error("invalid sample count {samples} (need at least {min})")]
    TooFewSamples { samples: usize, min: usize },

    #[error("path from {from} to {to} meets the {region} region at x = {x}")]
    ForbiddenRegion {
        from: f64,
        to: f64,
        x: f64,
        region: &'static str,
    },

    #[error("tabulated potential: {0}")]
    Table(String),

    #[error("{what} failed to converge: {detail}")]
    NoConvergence { what: &'static str, detail: String },
}
