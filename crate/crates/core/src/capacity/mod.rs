//! Capacity functionals: Newton capacity, the local capacity of a cube, the
//! strange term, and the penalized functional with its conductivity tensor.

mod local;
mod newton;
mod penalized;
mod strange;

pub use local::{cube_at, local_capacity, local_capacity_minimizer, CapacityEstimate, LocalMinimizer};
pub use newton::{ball_capacity_truncated, newton_capacity, NewtonCapacity, Truncation};
pub use penalized::{conductivity_tensor, penalized_functional, penalty, ConductivityTensor, PenalizedResult};
pub use strange::{
    check_scales, mean_and_std, strange_term, CapacityRow, MaskFamily, StrangeTermEstimate, StrangeTermOptions,
};

#[cfg(test)]
mod tests;
