//! Pricing, hedging and calibration with piecewise constant local variance
//! gamma (PCLVG) models: closed-form prices at the barrier, exact static
//! hedges of up-and-out puts, beliefs on implied skew, risk-reversal
//! portfolios that trade the skew, and belief-improved barrier
//! super-replication.

pub mod bs;
pub mod pclvg;
pub mod surface;
pub mod beliefs;
pub mod rtis;
pub mod hedging;
pub mod calibration;
