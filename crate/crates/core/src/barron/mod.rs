//! Barron-class functions as finite Fourier sums, and the bump-lattice
//! family used for entropy lower bounds.

mod bump;
mod fourier;

pub use bump::{
    bump_1d, bump_profile, estimate_bump_fourier_moment, scale_for_budget, select_signs, BumpDescriptor, BumpFamily,
    BumpMember, BumpProfile, MomentEstimate, MomentEstimator, SignSelection,
};
pub use fourier::{sample_boundary_rep, BarronFourierRep, RepDocument, DEFAULT_KAPPA_REP};
