//! Numerical toolkit for the rest-frame instant form of relativistic dynamics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod numerics;
pub mod kinematics;
pub mod nbody;
pub mod gauge;
pub mod york;
pub mod checks;
