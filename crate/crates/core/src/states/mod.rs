//! The `rho_b` family, product vectors in ranges, the edge test and the
//! best-separable-approximation decomposition.

pub mod bsa;
pub mod family;
pub mod poly;
pub mod range;

pub use family::{rho_b, rho_tilde, symmetry_generator, tilde_transform, u_b, v_b};
pub use range::{
    certify_edge, max_subtraction, product_vectors_in_range, EdgeCertificate, EdgeMethod, EdgeVerdict,
    RangeProducts,
};
pub use bsa::{bsa_decompose, BsaResult, BsaStatus};
