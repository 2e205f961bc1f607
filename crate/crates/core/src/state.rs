//! State containers for the staggered Lagrangian grid and its Eulerian image.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    /// `u = 0` at both ends.
    Dirichlet,
    Periodic,
    /// Vacuum (free) end on the left, no-slip wall on the right.
    FreeLeft,
    /// No-slip wall on the left, vacuum (free) end on the right.
    FreeRight,
    FreeBoth,
}

impl BoundaryCondition {
    pub const ALL: [BoundaryCondition; 5] = [
        BoundaryCondition::Dirichlet,
        BoundaryCondition::Periodic,
        BoundaryCondition::FreeLeft,
        BoundaryCondition::FreeRight,
        BoundaryCondition::FreeBoth,
    ];

    /// Number of velocity nodes for `n` density cells.
    pub fn velocity_len(self, n: usize) -> usize {
        match self {
            BoundaryCondition::Periodic => n,
            _ => n + 1,
        }
    }

    pub fn left_is_wall(self) -> bool {
        matches!(self, BoundaryCondition::Dirichlet | BoundaryCondition::FreeRight)
    }

    pub fn right_is_wall(self) -> bool {
        matches!(self, BoundaryCondition::Dirichlet | BoundaryCondition::FreeLeft)
    }

    pub fn left_is_free(self) -> bool {
        matches!(self, BoundaryCondition::FreeLeft | BoundaryCondition::FreeBoth)
    }

    pub fn right_is_free(self) -> bool {
        matches!(self, BoundaryCondition::FreeRight | BoundaryCondition::FreeBoth)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Periodic => "periodic",
            BoundaryCondition::FreeLeft => "free-left",
            BoundaryCondition::FreeRight => "free-right",
            BoundaryCondition::FreeBoth => "free-both",
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundaryCondition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        BoundaryCondition::ALL
            .into_iter()
            .find(|bc| bc.as_str() == s)
            .ok_or_else(|| format!("unknown boundary condition `{s}`"))
    }
}

/// Lagrangian state: cell `i` holds the density `rho[i]` between velocity nodes
/// `i` and `i + 1` (node `N` wraps to node 0 under periodic conditions).
#[derive(Clone, Debug, PartialEq)]
pub struct StaggeredState<T> {
    /// Mass carried by each cell.
    pub h: T,
    pub t: T,
    pub rho: Vec<T>,
    pub u: Vec<T>,
    pub bc: BoundaryCondition,
    /// Cell held at exactly zero density.
    pub pinned_cell: Option<usize>,
    /// Eulerian position of velocity node 0; it moves with the fluid unless node 0 is a wall.
    pub origin: T,
}

impl<T: Scalar> StaggeredState<T> {
    /// Builds a state on `[0, ..)` with `h = 1 / N` and checks every invariant.
    pub fn new(
        rho: Vec<T>,
        u: Vec<T>,
        bc: BoundaryCondition,
        pinned_cell: Option<usize>,
    ) -> Result<Self> {
        let h = T::one() / T::from_usize_lossy(rho.len().max(1));
        let s = StaggeredState {
            h,
            t: T::zero(),
            rho,
            u,
            bc,
            pinned_cell,
            origin: T::zero(),
        };
        s.validate()?;
        Ok(s)
    }

    /// Uniform density and velocity.
    pub fn uniform(n: usize, rho: T, u: T, bc: BoundaryCondition) -> Result<Self> {
        let mut u = vec![u; bc.velocity_len(n)];
        if bc.left_is_wall() {
            u[0] = T::zero();
        }
        if bc.right_is_wall() {
            u[n] = T::zero();
        }
        let mut s = StaggeredState::new(vec![rho; n], u, bc, None)?;
        s.h = rho / T::from_usize_lossy(n);
        Ok(s)
    }

    pub fn n_cells(&self) -> usize {
        self.rho.len()
    }

    pub fn is_pinned(&self, cell: usize) -> bool {
        self.pinned_cell == Some(cell)
    }

    /// Velocity at the right face of `cell`.
    #[inline]
    pub fn u_right(&self, cell: usize) -> T {
        if cell + 1 == self.u.len() && self.bc == BoundaryCondition::Periodic {
            self.u[0]
        } else {
            self.u[cell + 1]
        }
    }

    /// `(u_right - u_left) / h` for `cell`.
    #[inline]
    pub fn du_dy(&self, cell: usize) -> T {
        (self.u_right(cell) - self.u[cell]) / self.h
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rho.len();
        if n == 0 {
            return Err(Error::InvalidState("no cells".into()));
        }
        if !(self.h > T::zero()) || !self.h.is_finite() {
            return Err(Error::InvalidState("mass step must be positive".into()));
        }
        if self.u.len() != self.bc.velocity_len(n) {
            return Err(Error::InvalidState(format!(
                "{} velocity nodes for {} cells under {} conditions",
                self.u.len(),
                n,
                self.bc
            )));
        }
        if let Some(k) = self.pinned_cell {
            if k >= n {
                return Err(Error::InvalidState(format!("pinned cell {k} out of range")));
            }
            if n.is_multiple_of(2) {
                return Err(Error::InvalidState("pinning requires an odd cell count".into()));
            }
            if self.rho[k] != T::zero() {
                return Err(Error::InvalidState("pinned cell must have zero density".into()));
            }
        }
        self.check_positive()?;
        if self.u.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite velocity".into()));
        }
        if self.bc.left_is_wall() && self.u[0] != T::zero() {
            return Err(Error::InvalidState("wall velocity at node 0 must vanish".into()));
        }
        if self.bc.right_is_wall() && self.u[n] != T::zero() {
            return Err(Error::InvalidState("wall velocity at node N must vanish".into()));
        }
        Ok(())
    }

    /// Every non-pinned density is positive and finite.
    pub fn check_positive(&self) -> Result<()> {
        for (i, &r) in self.rho.iter().enumerate() {
            if self.is_pinned(i) {
                continue;
            }
            if !(r > T::zero()) || !r.is_finite() {
                return Err(Error::NonPositiveDensity {
                    cell: i,
                    value: r.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }

    /// Lagrangian volume `sum h / rho` over non-pinned cells.
    pub fn volume(&self) -> T {
        self.rho
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.is_pinned(*i))
            .map(|(_, &r)| self.h / r)
            .sum()
    }

    /// Total mass `N h`, counting a pinned cell.
    pub fn total_mass(&self) -> T {
        self.h * T::from_usize_lossy(self.n_cells())
    }
}

/// Field in physical coordinates: `rho[i]` is the density on `[x[i], x[i+1]]`
/// and `u[j]` the velocity at `x[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EulerianField<T> {
    pub x: Vec<T>,
    pub rho: Vec<T>,
    pub u: Vec<T>,
    pub t: T,
}

impl<T: Scalar> EulerianField<T> {
    pub fn new(x: Vec<T>, rho: Vec<T>, u: Vec<T>, t: T) -> Result<Self> {
        let f = EulerianField { x, rho, u, t };
        f.validate()?;
        Ok(f)
    }

    /// Cell-midpoint sampling of `rho_fn`, `u_fn` on `cells` uniform cells of `[0, 1]`.
    pub fn sample(cells: usize, rho_fn: impl Fn(T) -> T, u_fn: impl Fn(T) -> T) -> Result<Self> {
        let dx = T::one() / T::from_usize_lossy(cells);
        let x: Vec<T> = (0..=cells).map(|i| T::from_usize_lossy(i) * dx).collect();
        let rho = (0..cells)
            .map(|i| rho_fn((T::from_usize_lossy(i) + T::lit(0.5)) * dx))
            .collect();
        let u = x.iter().map(|&xi| u_fn(xi)).collect();
        EulerianField::new(x, rho, u, T::zero())
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.rho.len();
        if m == 0 || self.x.len() != m + 1 || self.u.len() != m + 1 {
            return Err(Error::InvalidState(format!(
                "field needs m+1 nodes for m cells (x: {}, rho: {}, u: {})",
                self.x.len(),
                m,
                self.u.len()
            )));
        }
        if self.x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidState("node positions must increase".into()));
        }
        if let Some(i) = self.rho.iter().position(|r| !(*r >= T::zero()) || !r.is_finite()) {
            return Err(Error::NonPositiveDensity {
                cell: i,
                value: self.rho[i].to_f64_lossy(),
            });
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.rho.len()
    }

    pub fn widths(&self) -> impl Iterator<Item = T> + '_ {
        self.x.windows(2).map(|w| w[1] - w[0])
    }

    pub fn length(&self) -> T {
        self.x[self.x.len() - 1] - self.x[0]
    }

    /// `|length - 1|`: how far the reconstruction misses the unit domain.
    pub fn endpoint_defect(&self) -> T {
        (self.length() - T::one()).abs()
    }

    pub fn mass(&self) -> T {
        self.rho.iter().zip(self.widths()).map(|(&r, w)| r * w).sum()
    }

    /// Cumulative mass at every node.
    pub fn cumulative_mass(&self) -> Vec<T> {
        let mut acc = T::zero();
        let mut out = Vec::with_capacity(self.x.len());
        out.push(acc);
        for (&r, w) in self.rho.iter().zip(self.widths()) {
            acc = acc + r * w;
            out.push(acc);
        }
        out
    }

    pub fn midpoints(&self) -> Vec<T> {
        self.x
            .windows(2)
            .map(|w| (w[0] + w[1]) * T::lit(0.5))
            .collect()
    }
}
