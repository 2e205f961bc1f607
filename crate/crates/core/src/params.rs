//! Model parameters and the constitutive relations built from them.
//!
//! Pressure is the gamma law `p(rho) = a1 rho^gamma`; the viscosity is
//! `mu_eps(rho) = a2 rho^alpha + eps rho^theta`, where the `eps` term is the
//! regularizer that keeps approximate solutions away from vacuum.

use crate::error::{Error, Result};
use crate::scalar::{Exponent, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub alpha: T,
    pub gamma: T,
    pub a1: T,
    pub a2: T,
    pub eps: T,
    pub theta: T,
    pub n_reg: u32,
    /// Moment exponent; carried for reporting only.
    pub nu: T,
    /// Coefficient of the regularized initial-density floor.
    pub c0_floor: T,
}

impl<T: Scalar> Default for ModelParams<T> {
    /// Viscous shallow-water values: `alpha = 1`, `gamma = 2`, no regularization.
    fn default() -> Self {
        ModelParams {
            alpha: T::one(),
            gamma: T::lit(2.0),
            a1: T::one(),
            a2: T::one(),
            eps: T::zero(),
            theta: T::lit(0.25),
            n_reg: 2,
            nu: T::one(),
            c0_floor: T::one(),
        }
    }
}

/// Result of a successful [`validate_params`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamCheck {
    /// `gamma > max(1, alpha)`, required for short-time vacuum structure.
    pub short_time: bool,
}

pub fn validate_params<T: Scalar>(p: &ModelParams<T>) -> Result<ParamCheck> {
    let half = T::lit(0.5);
    let finite = [p.alpha, p.gamma, p.a1, p.a2, p.eps, p.theta, p.nu, p.c0_floor];
    if let Some(v) = finite.iter().find(|v| !v.is_finite()) {
        return Err(Error::constraint("all parameters finite", *v));
    }
    if !(p.alpha > half) {
        return Err(Error::constraint("alpha > 1/2", p.alpha));
    }
    if !(p.gamma > p.alpha * half) {
        return Err(Error::constraint("gamma > alpha/2", p.gamma));
    }
    if !(p.gamma >= T::one()) {
        return Err(Error::constraint("gamma >= 1", p.gamma));
    }
    if !(p.a1 > T::zero()) {
        return Err(Error::constraint("a1 > 0", p.a1));
    }
    if !(p.a2 > T::zero()) {
        return Err(Error::constraint("a2 > 0", p.a2));
    }
    if !(p.eps >= T::zero()) {
        return Err(Error::constraint("eps >= 0", p.eps));
    }
    if p.eps > T::zero() && !(p.theta > T::zero() && p.theta < half) {
        return Err(Error::constraint("0 < theta < 1/2", p.theta));
    }
    if p.n_reg < 2 {
        return Err(Error::constraint("n_reg >= 2", T::from_u32(p.n_reg).unwrap()));
    }
    if !(p.nu > T::zero()) {
        return Err(Error::constraint("nu > 0", p.nu));
    }
    if !(p.c0_floor > T::zero()) {
        return Err(Error::constraint("c0_floor > 0", p.c0_floor));
    }
    Ok(ParamCheck {
        short_time: p.gamma > T::one().max(p.alpha),
    })
}

/// `pi(rho)`: `rho log rho` for `gamma = 1`, `rho^gamma / (gamma - 1)` otherwise.
pub fn pi_fn<T: Scalar>(rho: T, gamma: T) -> T {
    if rho <= T::zero() {
        return T::zero();
    }
    if gamma == T::one() {
        rho * rho.ln()
    } else {
        rho.powf(gamma) / (gamma - T::one())
    }
}

/// `pi(rho) / rho`, the internal energy per unit mass.
pub fn specific_entropy<T: Scalar>(rho: T, gamma: T) -> Result<T> {
    if gamma == T::one() {
        if rho > T::zero() {
            Ok(rho.ln())
        } else {
            Err(Error::EntropyDomain)
        }
    } else if rho > T::zero() {
        Ok(rho.powf(gamma - T::one()) / (gamma - T::one()))
    } else if rho == T::zero() {
        Ok(T::zero())
    } else {
        Err(Error::NonPositiveDensity {
            cell: 0,
            value: rho.to_f64_lossy(),
        })
    }
}

/// Regularized viscosity `a2 rho^alpha + eps rho^theta`.
pub fn mu_eps<T: Scalar>(rho: T, p: &ModelParams<T>) -> T {
    if rho <= T::zero() {
        return T::zero();
    }
    let mut mu = p.a2 * rho.powf(p.alpha);
    if p.eps > T::zero() {
        mu = mu + p.eps * rho.powf(p.theta);
    }
    mu
}

/// Admissible vacuum-profile exponents: Lagrangian `beta` and Eulerian `sigma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentWindow<T> {
    pub beta_minus: T,
    pub beta_plus: T,
    pub sigma_minus: T,
    pub sigma_plus: T,
}

impl<T: Scalar> ExponentWindow<T> {
    pub fn contains_sigma(&self, sigma: T) -> bool {
        sigma > self.sigma_minus && sigma < self.sigma_plus
    }

    pub fn contains_beta(&self, beta: T) -> bool {
        beta > self.beta_minus && beta < self.beta_plus
    }
}

/// `sigma = beta / (1 - beta)`; `beta = 1` maps to infinity.
pub fn sigma_from_beta<T: Scalar>(beta: T) -> T {
    if beta >= T::one() {
        T::infinity()
    } else {
        beta / (T::one() - beta)
    }
}

/// Inverse of [`sigma_from_beta`].
pub fn beta_from_sigma<T: Scalar>(sigma: T) -> T {
    if sigma.is_infinite() {
        T::one()
    } else {
        sigma / (T::one() + sigma)
    }
}

pub fn exponent_window<T: Scalar>(alpha: T, gamma: T, n: u32) -> Result<ExponentWindow<T>> {
    if n < 2 {
        return Err(Error::constraint("n_reg >= 2", T::from_u32(n).unwrap()));
    }
    let n = T::from_u32(n).unwrap();
    let one = T::one();
    let two = T::lit(2.0);
    let beta_minus = (one / (two * alpha)).max((one / gamma) * (one - one / (two * n)));
    let beta_plus = one
        .min((one / alpha) * (one - one / (two * n)))
        .min((T::lit(4.0) - one / n) / (one + T::lit(3.0) * alpha));
    if !(beta_minus < beta_plus) {
        return Err(Error::EmptyWindow {
            beta_minus: beta_minus.to_f64_lossy(),
            beta_plus: beta_plus.to_f64_lossy(),
        });
    }
    Ok(ExponentWindow {
        beta_minus,
        beta_plus,
        sigma_minus: sigma_from_beta(beta_minus),
        sigma_plus: sigma_from_beta(beta_plus),
    })
}

/// Precomputed constitutive laws evaluated in the hot loop of the scheme.
#[derive(Clone, Copy, Debug)]
pub struct Constitutive<T> {
    a1: T,
    a2: T,
    eps: T,
    gamma: T,
    pressure_exp: Exponent<T>,
    visc_exp: Exponent<T>,
    reg_exp: Exponent<T>,
    sound_exp: Exponent<T>,
}

impl<T: Scalar> Constitutive<T> {
    pub fn new(p: &ModelParams<T>) -> Self {
        Constitutive {
            a1: p.a1,
            a2: p.a2,
            eps: p.eps,
            gamma: p.gamma,
            pressure_exp: Exponent::new(p.gamma),
            visc_exp: Exponent::new(T::one() + p.alpha),
            reg_exp: Exponent::new(T::one() + p.theta),
            sound_exp: Exponent::new(p.gamma - T::one()),
        }
    }

    /// `p(rho) = a1 rho^gamma`.
    #[inline]
    pub fn pressure(&self, rho: T) -> T {
        if rho <= T::zero() {
            return T::zero();
        }
        self.a1 * self.pressure_exp.pow(rho)
    }

    /// Lagrangian diffusion coefficient `K(rho) = rho mu_eps(rho)`.
    #[inline]
    pub fn diffusivity(&self, rho: T) -> T {
        if rho <= T::zero() {
            return T::zero();
        }
        let k = self.a2 * self.visc_exp.pow(rho);
        if self.eps > T::zero() {
            k + self.eps * self.reg_exp.pow(rho)
        } else {
            k
        }
    }

    /// Eulerian sound speed `sqrt(a1 gamma rho^(gamma - 1))`.
    #[inline]
    pub fn sound_speed(&self, rho: T) -> T {
        if rho <= T::zero() {
            return T::zero();
        }
        (self.a1 * self.gamma * self.sound_exp.pow(rho)).sqrt()
    }

    /// Internal energy per unit mass including the pressure coefficient: `a1 pi(rho) / rho`.
    #[inline]
    pub fn internal_energy(&self, rho: T) -> Result<T> {
        Ok(self.a1 * specific_entropy(rho, self.gamma)?)
    }
}
