//! Acoustic material data and boundary condition specifications.

use std::fmt;
use std::sync::Arc;

use crate::diagnostics::membrane_exact;
use crate::error::{Error, Result};

/// Homogeneous acoustic material of one mesh region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    /// Density in kg each cubic metre.
    pub rho: f64,
    /// Speed of sound in m/s.
    pub c: f64,
}

impl Material {
    pub fn new(rho: f64, c: f64) -> Result<Self> {
        if rho <= 0.0 || c <= 0.0 {
            return Err(Error::Config(format!(
                "material requires rho > 0 and c > 0, got rho = {rho}, c = {c}"
            )));
        }
        Ok(Self { rho, c })
    }

    /// Upwind penalty for the pressure flux, tau = rho c (impedance).
    pub fn tau(&self) -> f64 {
        self.rho * self.c
    }

    /// Upwind penalty for the velocity flux, gamma = 1/(rho c).
    pub fn gamma(&self) -> f64 {
        1.0 / (self.rho * self.c)
    }
}

/// Time- and space-dependent scalar boundary data.
#[derive(Clone)]
pub enum PressureData {
    Zero,
    Constant(f64),
    /// Analytical vibrating-membrane pressure with the given mode count.
    Membrane { modes: usize },
    Custom(Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>),
}

impl PressureData {
    pub fn eval(&self, x: [f64; 2], t: f64) -> f64 {
        match self {
            PressureData::Zero => 0.0,
            PressureData::Constant(v) => *v,
            PressureData::Membrane { modes } => membrane_exact(*modes, x, t).0,
            PressureData::Custom(f) => f(x, t),
        }
    }
}

impl fmt::Debug for PressureData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PressureData::Zero => write!(f, "Zero"),
            PressureData::Constant(v) => write!(f, "Constant({v})"),
            PressureData::Membrane { modes } => write!(f, "Membrane {{ modes: {modes} }}"),
            PressureData::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Time- and space-dependent vector boundary data.
#[derive(Clone)]
pub enum VelocityData {
    Zero,
    Constant([f64; 2]),
    Membrane { modes: usize },
    Custom(Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>),
}

impl VelocityData {
    pub fn eval(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        match self {
            VelocityData::Zero => [0.0, 0.0],
            VelocityData::Constant(v) => *v,
            VelocityData::Membrane { modes } => membrane_exact(*modes, x, t).1,
            VelocityData::Custom(f) => f(x, t),
        }
    }
}

impl fmt::Debug for VelocityData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VelocityData::Zero => write!(f, "Zero"),
            VelocityData::Constant(v) => write!(f, "Constant({v:?})"),
            VelocityData::Membrane { modes } => write!(f, "Membrane {{ modes: {modes} }}"),
            VelocityData::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Boundary condition attached to one boundary tag.
#[derive(Debug, Clone)]
pub enum BoundaryCondition {
    PressureDirichlet(PressureData),
    VelocityDirichlet(VelocityData),
    /// Admittance boundary; Y = 0 is a reflecting wall, Y = 1 first-order absorbing.
    Admittance(f64),
}
