//! Exact-arithmetic engine for log surfaces.
//!
//! Normal projective surfaces are represented combinatorially through a
//! resolution: curves, intersection numbers, and a contracted set. On top of
//! that sit the log pullback, the klt / lc / MRLC / GMRLC classification
//! predicates, extremal-ray contraction, and a minimal model program driver
//! that terminates in a good minimal model or a Mori fiber space. A toric
//! backend builds models with certified-complete curve universes from
//! complete two-dimensional fans.
//!
//! No floating point anywhere: all coefficients are arbitrary-precision
//! rationals and every equality in the test suites is exact.
//!
//! ```
//! use mmp_surface::{classify, config_from_fan, run_mmp, Divisor, Fan2D, MmpOptions};
//!
//! // The Hirzebruch surface F1 from its fan.
//! let surface = config_from_fan(&Fan2D::new(vec![(1, 0), (0, 1), (-1, 1), (0, -1)]))?;
//!
//! // Smooth with empty boundary: klt, hence everything below it.
//! let report = classify(&surface.model, &Divisor::zero())?;
//! assert!(report.klt.is_true() && report.gmrlc.is_true());
//!
//! // One birational contraction (the (-1)-section), then a Mori fiber
//! // space over a point.
//! let opts = MmpOptions { toric: Some(&surface), ..Default::default() };
//! let trace = run_mmp(&surface.model, &Divisor::zero(), &surface.universe, &opts)?;
//! assert_eq!(trace.steps.len(), 1);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod discrepancy;
pub mod exactlin;
pub mod mmp;
pub mod surface;
pub mod toric;

pub use discrepancy::{classify, ClassificationReport, ClassifyOptions, Verdict};
pub use exactlin::{QMatrix, Rational};
pub use mmp::{run_mmp, MmpOptions, MmpOutcome, MmpTrace, RayCandidate};
pub use surface::{CurveConfig, CurveId, CurveRecord, Divisor, SingularModel, Violation};
pub use toric::{config_from_fan, Fan2D, ToricSurface};
