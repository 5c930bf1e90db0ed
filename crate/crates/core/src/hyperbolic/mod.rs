//! Hyperbolic and extremal bounded solutions: dichotomy estimates,
//! frozen-equation triples, `R_f` membership and continuation.

mod continuation;
mod dichotomy;
mod triple;

pub use continuation::{
    continue_hyperbolic, perturbation_norm, Continuation, ContinuationSummary, FIXED_POINT_TOL,
    KERNEL_CUTOFF, MAX_ITERATIONS,
};
pub use dichotomy::{
    dichotomy_exponent, dichotomy_exponent_on, uniform_separation, uniform_separation_on,
    DichotomyEstimate, Hyperbolicity, DEFAULT_MARGIN, DEFAULT_WINDOW,
};
pub use triple::{
    extremal_solution, frozen_triple, in_Rf, HyperbolicTriple, NotFound, RfCertificate, Side,
    SolverSettings, TripleOutcome, TripleSummary, COERCIVITY_SEARCH_BOUND, RF_SPAN,
    SEPARATION_THRESHOLD,
};
pub(crate) use triple::{signed_min_gap, triple_on};
