//! Contract ingredients, their standing assumptions, and the closed-form
//! bond value on the degenerate edge `x = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Unvalidated parameter record, as read from a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub sigma: f64,
    pub r: f64,
    pub q: f64,
    pub c: f64,
    pub gamma: f64,
    pub face_value: f64,
    pub maturity: f64,
}

/// Non-fatal observations made while validating parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AssumptionFlags {
    /// `q > r`. Common in the literature to forbid, accepted here.
    pub dividend_exceeds_rate: bool,
}

/// Validated model ingredients. Units are years and cash.
///
/// Construction goes through [`ModelParams::validate`], which enforces
/// `c < r K` (the call barrier stays inactive) and `c < q K` (conversion can
/// be optimal somewhere below `K / gamma`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    sigma: T,
    r: T,
    q: T,
    c: T,
    gamma: T,
    face: T,
    maturity: T,
    flags: AssumptionFlags,
}

/// Space-time extent `(0, K/gamma) x (0, T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain<T> {
    pub x_max: T,
    pub horizon: T,
}

fn finite(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { field })
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositive {
            field,
            value: v,
            bound: "> 0",
        })
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositive {
            field,
            value: v,
            bound: ">= 0",
        })
    }
}

impl<T: Scalar> ModelParams<T> {
    pub fn validate(raw: &RawParams) -> Result<Self> {
        let fields = [
            ("sigma", raw.sigma),
            ("r", raw.r),
            ("q", raw.q),
            ("c", raw.c),
            ("gamma", raw.gamma),
            ("face_value", raw.face_value),
            ("maturity", raw.maturity),
        ];
        for (name, v) in fields {
            finite(name, v)?;
        }
        positive("sigma", raw.sigma)?;
        positive("r", raw.r)?;
        non_negative("q", raw.q)?;
        non_negative("c", raw.c)?;
        positive("gamma", raw.gamma)?;
        positive("face_value", raw.face_value)?;
        positive("maturity", raw.maturity)?;

        let rk = raw.r * raw.face_value;
        if raw.c >= rk {
            return Err(Error::UpperObstacleActive { c: raw.c, rk });
        }
        let qk = raw.q * raw.face_value;
        if raw.c >= qk {
            return Err(Error::NoFreeBoundary { c: raw.c, qk });
        }

        let params = Self {
            sigma: T::lit(raw.sigma),
            r: T::lit(raw.r),
            q: T::lit(raw.q),
            c: T::lit(raw.c),
            gamma: T::lit(raw.gamma),
            face: T::lit(raw.face_value),
            maturity: T::lit(raw.maturity),
            flags: AssumptionFlags {
                dividend_exceeds_rate: raw.q > raw.r,
            },
        };
        assert!(
            params.exercise_lower_bound() < params.x_max(),
            "c < qK must place the conversion bound inside the domain"
        );
        Ok(params)
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }
    pub fn r(&self) -> T {
        self.r
    }
    pub fn q(&self) -> T {
        self.q
    }
    pub fn c(&self) -> T {
        self.c
    }
    pub fn gamma(&self) -> T {
        self.gamma
    }
    /// Face value, equal to the call price `K`.
    pub fn face(&self) -> T {
        self.face
    }
    pub fn maturity(&self) -> T {
        self.maturity
    }
    pub fn flags(&self) -> AssumptionFlags {
        self.flags
    }

    /// Conversion-parity spot `K / gamma`, the right edge of the domain.
    pub fn x_max(&self) -> T {
        self.face / self.gamma
    }

    pub fn domain(&self) -> Domain<T> {
        Domain {
            x_max: self.x_max(),
            horizon: self.maturity,
        }
    }

    /// Round-trips back to an `f64` record (used by manifests).
    pub fn to_raw(&self) -> RawParams {
        RawParams {
            sigma: self.sigma.as_f64(),
            r: self.r.as_f64(),
            q: self.q.as_f64(),
            c: self.c.as_f64(),
            gamma: self.gamma.as_f64(),
            face_value: self.face.as_f64(),
            maturity: self.maturity.as_f64(),
        }
    }

    /// Returns a copy with a different coupon, re-validated.
    pub fn with_coupon(&self, c: f64) -> Result<Self> {
        let mut raw = self.to_raw();
        raw.c = c;
        Self::validate(&raw)
    }

    /// Value of the bond when the stock is worthless:
    /// `K e^{-r(T-t)} + (c/r)(1 - e^{-r(T-t)})`.
    pub fn boundary_value_x0(&self, t: T) -> Result<T> {
        if !(t >= T::zero() && t <= self.maturity) {
            return Err(Error::TimeOutOfRange {
                t: t.as_f64(),
                horizon: self.maturity.as_f64(),
            });
        }
        Ok(zero_stock_value(self.face, self.r, self.c, self.maturity - t))
    }

    /// `c / (q gamma)`: conversion never happens to the left of this spot.
    pub fn exercise_lower_bound(&self) -> T {
        self.c / (self.q * self.gamma)
    }
}

/// Closed-form zero-stock bond value with `tau` years to maturity.
///
/// Written with `expm1` so that `tau -> 0` and `c -> rK` stay accurate.
pub fn zero_stock_value<T: Scalar>(face: T, r: T, c: T, tau: T) -> T {
    let accrued = -(-r * tau).exp_m1();
    face - (face - c / r) * accrued
}
