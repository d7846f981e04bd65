//! The guidance-field abstraction consumed by the trajectory integrator.

/// Node treatment shared by every field: where `|psi|^2` falls below
/// `eps_node` times its reference maximum the velocity magnitude is capped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeClamp {
    pub eps_node: f64,
    pub v_max: f64,
}

impl NodeClamp {
    pub const DEFAULT_EPS_NODE: f64 = 1e-12;

    /// Cap `100 * span / dt`.
    pub fn for_step(span: f64, dt: f64) -> Self {
        NodeClamp { eps_node: Self::DEFAULT_EPS_NODE, v_max: 1e2 * span / dt }
    }

    /// Applies the cap in place; `rel_density` is `|psi|^2 / max |psi|^2`.
    #[inline]
    pub fn apply(&self, rel_density: f64, v: &mut [f64]) -> bool {
        if rel_density >= self.eps_node {
            return false;
        }
        let speed = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if speed > self.v_max || !speed.is_finite() {
            if speed.is_finite() && speed > 0.0 {
                let s = self.v_max / speed;
                v.iter_mut().for_each(|c| *c *= s);
            } else {
                v.iter_mut().for_each(|c| *c = 0.0);
            }
            return true;
        }
        false
    }
}

/// A configuration-space velocity field `v(x, t)`.
///
/// Evaluation is split in two: [`GuidanceField::slice`] precomputes whatever
/// depends only on time (phases, interpolation weights), so that many
/// particles sharing a time can reuse it.
pub trait GuidanceField: Sync {
    type Slice: Send + Sync;

    fn dim(&self) -> usize;

    fn slice(&self, t: f64) -> Self::Slice;

    /// Writes the velocity at `x` into `v` and returns `|psi|^2` relative to
    /// the field's reference maximum (`f64::INFINITY` when the guidance law
    /// has no nodes).
    fn velocity(&self, slice: &Self::Slice, x: &[f64], v: &mut [f64]) -> f64;

    /// Region particles may occupy.
    fn contains(&self, x: &[f64]) -> bool;

    /// Maps a point that stepped marginally past a hard wall back inside
    /// and reports whether the result is admissible.
    fn confine(&self, x: &mut [f64]) -> bool {
        self.contains(x)
    }

    /// Length scale used by the step-halving rule (grid spacing or its
    /// analytic stand-in).
    fn spacing(&self) -> f64;

    /// Largest extent of the domain; sets the node velocity cap.
    fn span(&self) -> f64;
}

/// Guidance of the pointer-coupling Hamiltonian `a x p_y`: `x' = 0`,
/// `y' = a x`, independent of the wavefunction.
#[derive(Debug, Clone, Copy)]
pub struct PointerCouplingField {
    pub coupling: f64,
    pub bounds: [(f64, f64); 2],
    pub spacing: f64,
}

impl GuidanceField for PointerCouplingField {
    type Slice = ();

    fn dim(&self) -> usize {
        2
    }

    fn slice(&self, _t: f64) -> Self::Slice {}

    #[inline]
    fn velocity(&self, _slice: &(), x: &[f64], v: &mut [f64]) -> f64 {
        v[0] = 0.0;
        v[1] = self.coupling * x[0];
        f64::INFINITY
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.bounds.iter().zip(x).all(|(&(lo, hi), &xi)| xi >= lo && xi <= hi)
    }

    fn spacing(&self) -> f64 {
        self.spacing
    }

    fn span(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max)
    }
}
