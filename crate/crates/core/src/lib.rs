//! Replication analysis for two-arm (AB between-subjects) experiments.
//!
//! The crate has two halves that share one set of numerical primitives:
//!
//! * Monte Carlo studies ([`simlab`]) showing how much p-values and Cohen's d
//!   move between exact replications of the same experiment, and how pooling
//!   replications with a random-effects model tames that variability.
//! * A meta-analysis toolkit ([`meta`]) for real replication families:
//!   fixed- and random-effects pooling (DerSimonian–Laird or REML), Q, I² with
//!   its confidence interval, prediction intervals, subgroup analysis and a
//!   single-moderator meta-regression, with forest plots from [`report`].
//!
//! The `replimeta` binary wraps both behind `simulate`, `analyze` and
//! `verify` subcommands; see [`cli`].
//!
//! ```
//! use replimeta::experiment::{cohens_d, student_t_test, GroupSummary};
//!
//! let control = GroupSummary::new(20, 51.42, 9.73).unwrap();
//! let treatment = GroupSummary::new(20, 57.49, 8.30).unwrap();
//! let test = student_t_test(&control, &treatment).unwrap();
//! assert_eq!(test.df, 38.0);
//! assert!((cohens_d(&control, &treatment).unwrap() - 0.67).abs() < 0.005);
//! ```

pub mod cli;
pub mod error;
pub mod experiment;
pub mod meta;
pub mod report;
pub mod simlab;
pub mod statdist;

pub use error::{Error, Result};
