//! Numerical kernels shared by the generators, execution models and analysis.

mod linalg;
mod normal;
mod optim;
mod rank;

pub use linalg::{
    cholesky_factor, mvn_sample, mvn_sample_factored, sample_mean_cov, CovarianceMatrix,
    LowerTriangular, PSD_TOLERANCE,
};
pub use normal::{
    bivariate_norm_cdf, norm_cdf, norm_pdf, norm_quantile, norm_sf, std_normal_cdf, std_normal_quantile,
};
pub use optim::{brent_minimize, Minimum};
pub use rank::{kendall_tau, pseudo_observations, EmpiricalMargin};
