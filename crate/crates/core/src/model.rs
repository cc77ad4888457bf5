//! A reduced model: the functional `Φ`, the map `g = (Φ')⁻¹₊` and, when the
//! model comes from a phase-space Casimir, the function `Q` itself.

use crate::convex::{
    emden_rhs, make_polytrope_phi, make_polytrope_q, phi_from_q, ConvexScalarFunction, GFunction, Homogeneity,
};
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct Model {
    phi: ConvexScalarFunction,
    g: GFunction,
    q: Option<ConvexScalarFunction>,
}

impl Model {
    /// `Φ = (velocity_reduce(Q*))*` and `g` from the velocity integral of `(Q')⁻¹`.
    pub fn from_q(q: ConvexScalarFunction) -> Result<Self> {
        let phi = phi_from_q(&q)?;
        let g = emden_rhs(&q)?;
        Ok(Self { phi, g, q: Some(q) })
    }

    /// `Q(f) = f^{1+1/k}`.
    pub fn q_polytrope(k: f64) -> Result<Self> {
        Self::from_q(make_polytrope_q(k)?)
    }

    /// `Φ(ρ) = ρ^{1+1/n}` without an underlying `Q`; covers every `n > 0`.
    pub fn phi_polytrope(n: f64) -> Result<Self> {
        Self::from_phi(make_polytrope_phi(n)?)
    }

    pub fn from_phi(phi: ConvexScalarFunction) -> Result<Self> {
        let g = GFunction::from_phi(&phi)?;
        Ok(Self { phi, g, q: None })
    }

    pub fn phi(&self) -> &ConvexScalarFunction {
        &self.phi
    }

    pub fn g(&self) -> &GFunction {
        &self.g
    }

    pub fn q(&self) -> Option<&ConvexScalarFunction> {
        self.q.as_ref()
    }

    pub fn homogeneity(&self) -> Option<Homogeneity> {
        self.g.homogeneity()
    }
}
