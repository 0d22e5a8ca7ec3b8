//! Numerical fluxes and the mirror-principle boundary closure.

use crate::material::{BoundaryCondition, Material};

/// Pressure/velocity trace at one face quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceState {
    pub p: f64,
    pub u: [f64; 2],
}

impl TraceState {
    pub fn new(p: f64, u: [f64; 2]) -> Self {
        Self { p, u }
    }
}

/// Lax–Friedrichs flux for a single material:
/// p* = {p} + tau/2 [[u]]_n,  u* = {u} + gamma/2 [[p]]_n.
pub fn lax_friedrichs_flux(
    minus: TraceState,
    plus: TraceState,
    tau: f64,
    gamma: f64,
    n: [f64; 2],
) -> (f64, [f64; 2]) {
    let jump_un = (minus.u[0] - plus.u[0]) * n[0] + (minus.u[1] - plus.u[1]) * n[1];
    let jump_p = minus.p - plus.p;
    let p_star = 0.5 * (minus.p + plus.p) + 0.5 * tau * jump_un;
    let u_star = [
        0.5 * (minus.u[0] + plus.u[0]) + 0.5 * gamma * jump_p * n[0],
        0.5 * (minus.u[1] + plus.u[1]) + 0.5 * gamma * jump_p * n[1],
    ];
    (p_star, u_star)
}

/// LDG flux with self-adapting upwinding for (possibly) different materials on
/// the two sides; reduces to the Lax–Friedrichs flux for equal materials.
pub fn ldg_nci_flux(
    minus: TraceState,
    plus: TraceState,
    mat_minus: Material,
    mat_plus: Material,
    n: [f64; 2],
) -> (f64, [f64; 2]) {
    let (tm, tp) = (mat_minus.tau(), mat_plus.tau());
    let (gm, gp) = (mat_minus.gamma(), mat_plus.gamma());
    let jump_p = minus.p - plus.p;
    let jump_un = (minus.u[0] - plus.u[0]) * n[0] + (minus.u[1] - plus.u[1]) * n[1];
    let p_star = minus.p - tm / (tm + tp) * jump_p + tm * tp / (tm + tp) * jump_un;
    let gfac = gm * gp / (gm + gp);
    let ufac = gm / (gm + gp);
    let u_star = [
        minus.u[0] - ufac * (minus.u[0] - plus.u[0]) + gfac * jump_p * n[0],
        minus.u[1] - ufac * (minus.u[1] - plus.u[1]) + gfac * jump_p * n[1],
    ];
    (p_star, u_star)
}

/// Exterior ghost trace for a boundary face, constructed by the mirror principle:
/// p+ = -p- + 2 g_p on pressure Dirichlet boundaries, u+ = -u- + 2 g_u on
/// velocity Dirichlet boundaries, and u+ = (2Y/(rho c) p- - u-.n) n with p+ = p-
/// on admittance boundaries.
pub fn mirror_exterior_state(
    bc: &BoundaryCondition,
    minus: TraceState,
    n: [f64; 2],
    x: [f64; 2],
    t: f64,
    mat: Material,
) -> TraceState {
    match bc {
        BoundaryCondition::PressureDirichlet(g) => {
            let gp = g.eval(x, t);
            TraceState::new(-minus.p + 2.0 * gp, minus.u)
        }
        BoundaryCondition::VelocityDirichlet(g) => {
            let gu = g.eval(x, t);
            TraceState::new(
                minus.p,
                [-minus.u[0] + 2.0 * gu[0], -minus.u[1] + 2.0 * gu[1]],
            )
        }
        BoundaryCondition::Admittance(y) => {
            let un = minus.u[0] * n[0] + minus.u[1] * n[1];
            let coeff = 2.0 * y / (mat.rho * mat.c) * minus.p - un;
            TraceState::new(minus.p, [coeff * n[0], coeff * n[1]])
        }
    }
}
