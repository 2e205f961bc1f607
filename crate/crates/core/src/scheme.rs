//! Semi-discrete staggered Lagrangian scheme.
//!
//! With `h` the mass per cell, `K(rho) = rho mu_eps(rho)` and `F_i = K(rho_i) (u_{i+1} - u_i) / h`
//! the viscous stress in cell `i`, the system of ODEs is
//!
//! ```text
//! d rho_i / dt = -rho_i^2 (u_{i+1} - u_i) / h
//! d u_j   / dt = ( -(p(rho_j) - p(rho_{j-1})) + (F_j - F_{j-1}) ) / h
//! ```
//!
//! Cell `j` is the right neighbour of node `j`. Cells outside the grid are
//! resolved by [`apply_bc`].

use crate::error::{Error, Result};
use crate::params::{Constitutive, ModelParams};
use crate::scalar::Scalar;
use crate::state::{BoundaryCondition, StaggeredState};

#[derive(Clone, Debug, PartialEq)]
pub struct StateDerivative<T> {
    pub drho: Vec<T>,
    pub du: Vec<T>,
    /// Velocity of node 0 in physical space.
    pub dorigin: T,
}

impl<T: Scalar> StateDerivative<T> {
    pub fn zeros_like(s: &StaggeredState<T>) -> Self {
        StateDerivative {
            drho: vec![T::zero(); s.rho.len()],
            du: vec![T::zero(); s.u.len()],
            dorigin: T::zero(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.drho
            .iter()
            .chain(self.du.iter())
            .fold(self.dorigin.abs(), |m, v| m.max(v.abs()))
    }
}

/// Boundary-resolved view of a state. Cell indices run over `-1..=N`, node
/// indices over `-1..=N+1` (one ghost on each side).
#[derive(Clone, Copy, Debug)]
pub struct GhostView<'a, T> {
    state: &'a StaggeredState<T>,
}

pub fn apply_bc<T: Scalar>(s: &StaggeredState<T>) -> GhostView<'_, T> {
    GhostView { state: s }
}

impl<T: Scalar> GhostView<'_, T> {
    fn n(&self) -> isize {
        self.state.rho.len() as isize
    }

    pub fn rho(&self, cell: isize) -> T {
        let n = self.n();
        let s = self.state;
        if (0..n).contains(&cell) {
            return s.rho[cell as usize];
        }
        match s.bc {
            BoundaryCondition::Periodic => s.rho[cell.rem_euclid(n) as usize],
            bc => {
                let left = cell < 0;
                let free = if left { bc.left_is_free() } else { bc.right_is_free() };
                if free {
                    T::zero()
                } else if left {
                    s.rho[(-1 - cell).clamp(0, n - 1) as usize]
                } else {
                    s.rho[(2 * n - 1 - cell).clamp(0, n - 1) as usize]
                }
            }
        }
    }

    pub fn u(&self, node: isize) -> T {
        let s = self.state;
        let len = s.u.len() as isize;
        match s.bc {
            BoundaryCondition::Periodic => s.u[node.rem_euclid(len) as usize],
            bc => {
                if (0..len).contains(&node) {
                    s.u[node as usize]
                } else if node < 0 {
                    // Zero ghost at a wall; at a free end the ghost cell has no
                    // density, so its value never enters a flux. Copy to keep it finite.
                    if bc.left_is_free() {
                        s.u[0]
                    } else {
                        T::zero()
                    }
                } else if bc.right_is_free() {
                    s.u[(len - 1) as usize]
                } else {
                    T::zero()
                }
            }
        }
    }

    /// `p(rho)` in a (possibly ghost) cell.
    pub fn pressure(&self, law: &Constitutive<T>, cell: isize) -> T {
        law.pressure(self.rho(cell))
    }

    /// Viscous stress `K(rho) (u_right - u_left) / h` in a (possibly ghost) cell.
    pub fn viscous_flux(&self, law: &Constitutive<T>, cell: isize) -> T {
        let k = law.diffusivity(self.rho(cell));
        if k == T::zero() {
            return T::zero();
        }
        k * (self.u(cell + 1) - self.u(cell)) / self.state.h
    }
}

/// Reusable evaluator of the right-hand side.
#[derive(Clone, Debug)]
pub struct Scheme<T> {
    law: Constitutive<T>,
    // Net stress -p + F per cell, with one ghost on each side.
    stress: Vec<T>,
}

impl<T: Scalar> Scheme<T> {
    pub fn new(p: &ModelParams<T>) -> Self {
        Scheme {
            law: Constitutive::new(p),
            stress: Vec::new(),
        }
    }

    pub fn law(&self) -> &Constitutive<T> {
        &self.law
    }

    pub fn rhs_into(&mut self, s: &StaggeredState<T>, out: &mut StateDerivative<T>) -> Result<()> {
        s.check_positive()?;
        let n = s.rho.len();
        let h = s.h;
        let inv_h = T::one() / h;
        let law = self.law;
        let view = apply_bc(s);

        out.drho.resize(n, T::zero());
        out.du.resize(s.u.len(), T::zero());

        self.stress.clear();
        self.stress.reserve(n + 2);
        for cell in -1..=(n as isize) {
            let rho = view.rho(cell);
            let sigma = if rho > T::zero() {
                let k = law.diffusivity(rho);
                let grad = (view.u(cell + 1) - view.u(cell)) * inv_h;
                k * grad - law.pressure(rho)
            } else {
                T::zero()
            };
            self.stress.push(sigma);
        }

        for (i, d) in out.drho.iter_mut().enumerate() {
            let r = s.rho[i];
            *d = -r * r * (s.u_right(i) - s.u[i]) * inv_h;
        }
        if let Some(k) = s.pinned_cell {
            out.drho[k] = T::zero();
        }

        // stress[c + 1] holds cell c.
        for (j, d) in out.du.iter_mut().enumerate() {
            *d = (self.stress[j + 1] - self.stress[j]) * inv_h;
        }
        if s.bc.left_is_wall() {
            out.du[0] = T::zero();
        }
        if s.bc.right_is_wall() {
            out.du[n] = T::zero();
        }
        out.dorigin = if s.bc.left_is_wall() { T::zero() } else { s.u[0] };
        Ok(())
    }

    pub fn rhs(&mut self, s: &StaggeredState<T>) -> Result<StateDerivative<T>> {
        let mut out = StateDerivative::zeros_like(s);
        self.rhs_into(s, &mut out)?;
        Ok(out)
    }
}

/// Right-hand side of the semi-discrete system.
pub fn rhs<T: Scalar>(s: &StaggeredState<T>, p: &ModelParams<T>) -> Result<StateDerivative<T>> {
    Scheme::new(p).rhs(s)
}

/// Residuals of the discrete momentum identities around a pinned vacuum cell `k`:
///
/// ```text
/// n > k:  K(rho_n) (u_{n+1} - u_n) / h =  sum_{j=k+1}^{n} du_j/dt h + p(rho_n)
/// n < k:  K(rho_n) (u_{n+1} - u_n) / h = -sum_{j=n+1}^{k} du_j/dt h + p(rho_n)
/// ```
///
/// Returns `LHS - RHS` per cell (zero at the pinned cell).
#[allow(clippy::needless_range_loop)]
pub fn momentum_identity_residual<T: Scalar>(
    s: &StaggeredState<T>,
    d: &StateDerivative<T>,
    p: &ModelParams<T>,
) -> Result<Vec<T>> {
    let k = s
        .pinned_cell
        .ok_or_else(|| Error::Precondition("momentum identity needs a pinned cell".into()))?;
    if d.du.len() != s.u.len() {
        return Err(Error::InvalidState("derivative layout does not match state".into()));
    }
    let law = Constitutive::new(p);
    let n = s.n_cells();
    let mut res = vec![T::zero(); n];

    let mut acc = T::zero();
    for c in (k + 1)..n {
        acc = acc + d.du[c] * s.h;
        let lhs = law.diffusivity(s.rho[c]) * s.du_dy(c);
        res[c] = lhs - (acc + law.pressure(s.rho[c]));
    }
    let mut acc = T::zero();
    for c in (0..k).rev() {
        acc = acc + d.du[c + 1] * s.h;
        let lhs = law.diffusivity(s.rho[c]) * s.du_dy(c);
        res[c] = lhs - (law.pressure(s.rho[c]) - acc);
    }
    Ok(res)
}
