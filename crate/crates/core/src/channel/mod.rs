//! Large-scale fading and temporally correlated small-scale fading.

mod ar;
mod bessel;
mod pathloss;

pub use ar::{
    fit_ar_model, fit_ar_model_with_loading, fit_jakes, jakes_autocorrelation, jakes_sequence,
    step_fading, ArFadingModel, FadingState, DEFAULT_LOADING,
};
pub use bessel::bessel_j0;
pub use pathloss::{sample_large_scale, three_slope_pathloss, LargeScale, PathLossParams};
