//! Adaptive Dormand–Prince integration with dense output, blow-up
//! detection and pullback limits.

mod cache;
mod dopri;
mod trajectory;

pub use cache::{cache_key, decode, encode, TrajectoryCache};
pub use dopri::{
    integrate, integrate_fn, pullback_limit, IntegratorSettings, PullbackOutcome, PullbackRule,
    PULLBACK_HORIZONS, PULLBACK_TOL,
};
pub use trajectory::{csv_number, Direction, Status, Trajectory};
