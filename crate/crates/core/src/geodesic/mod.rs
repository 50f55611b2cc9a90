//! Hyperbolic conjugacy classes of `SL_2(Z)` and of its principal congruence
//! subgroups, and the geodesic counting functions built from them.

pub mod forms;
pub mod pell;
pub mod congruence;
pub mod counting;
