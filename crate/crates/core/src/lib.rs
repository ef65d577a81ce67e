//! Exact p-adic and rational tools for polynomial self-maps near a fixed point:
//! linearizing conjugacies, invariant neighbourhoods, algebraic series recursions
//! and orbit-closure probes.

pub mod arith;
pub mod dynamics;
pub mod eisenstein;
pub mod linalg;
pub mod linearize;
pub mod orbit;
pub mod padic;
pub mod ring;
pub mod series;

pub use arith::Rational;
pub use padic::{PAdicNumber, PadicError};
pub use ring::{CoeffRing, PAdicField, Rationals};
pub use series::{MultiIndex, MultiSeries, QSeries, SeriesError, SeriesTuple};
