//! Distribution functions and the random source used by the simulations.
//!
//! Only what the rest of the crate needs: normal, Student t, noncentral t
//! and chi-square CDFs/quantiles, plus a splittable random stream. The t and
//! chi-square routines go through the regularized incomplete beta and gamma
//! functions in [`special`], evaluated by continued fractions.

mod chi_squared;
mod normal;
mod rng;
mod root;
pub mod special;
mod student_t;

pub use chi_squared::{chisq_cdf, chisq_pdf, chisq_quantile, chisq_sf};
pub use normal::{norm_cdf, norm_pdf, norm_quantile};
pub use rng::{normal_from_uniform, sample_normal, RandomStream};
pub use student_t::{noncentral_t_cdf, t_cdf, t_pdf, t_quantile, t_sf};
