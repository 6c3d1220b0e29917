//! Gradient descent-ascent (GDA) for smooth convex-concave saddle-point
//! problems `min_x max_y F(x, y)`.
//!
//! The crate provides
//!
//! * closed-form one-step contraction factors and optimal steps ([`rates`]),
//! * saddle-function oracles with known solution sets ([`oracles`]),
//! * the GDA iteration itself ([`gda`]),
//! * worst-case and no-contraction instances ([`tight`]),
//! * interpolation and quadratic-gradient-growth checks ([`interpolation`]),
//! * explicit dual certificates for the rates ([`certificates`]),
//! * performance-estimation SDPs with a small dense solver ([`pep`]).

pub mod certificates;
pub mod error;
pub mod gda;
pub mod interpolation;
pub mod oracles;
pub mod params;
pub mod pep;
pub mod rates;
pub mod tight;

pub use error::{Error, Result};
pub use params::{ProblemParams, StepInterval};
