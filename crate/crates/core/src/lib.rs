//! Non-periodic Toda flows on conjugacy classes of traceless complex matrices
//! with simple spectrum.
//!
//! The crate computes the flow `X' = [X, π_k f(X)]` three independent ways:
//!
//! * adaptive Dormand–Prince integration of the Lax equation ([`flow::integrate_rk`]),
//! * Symes' QR propagator `X(t) = κ(exp(t f(X)))⁻¹ X κ(exp(t f(X)))` ([`flow::symes_flow`]),
//! * the diagonalizing `(Y, Z)` chart, in which every coordinate evolves by a
//!   single complex exponential ([`charts`], [`flow::chart_flow`]).
//!
//! Real forms (`sl_n(R)`, `sl_m(H)`, conjugated `su(p,q)`) and the `so_C(5)`
//! example live in [`realforms`] and [`iwasawa`].

pub mod charts;
pub mod eigen;
pub mod error;
pub mod expm;
pub mod factor;
pub mod flow;
pub mod iwasawa;
pub mod matrix;
pub mod realforms;
pub mod sample;

pub use charts::{ChartCenter, ChartPoint, Form, Profile};
pub use error::{Result, TodaError};
pub use factor::{FactorPair, FactorTriple};
pub use flow::{ComparisonReport, Method, Trajectory};
pub use iwasawa::{AlgebraKind, HierarchyPoly, IwasawaContext};
pub use matrix::{CMatrix, Tolerance, C64};
pub use realforms::{RealChartPoint, RealFormTag};
