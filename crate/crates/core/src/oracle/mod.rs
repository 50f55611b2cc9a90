//! Brute-force counterparts of the closed forms: unit indices by enumeration,
//! explicit embeddings of the torus, and orbital integrals assembled from
//! matrix and quaternion congruence tests.

pub mod index;
pub mod embed;
pub mod orbital;
pub mod coverage;
pub mod radical;
