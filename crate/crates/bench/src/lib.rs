//! Fixed benchmark inputs shared by the bench targets.

use gpc_core::catalog::{geometric_state, photon_target, singlet};
use gpc_core::kernel::ComplexMatrix;
use gpc_core::product::{integer_multiplication, symmetric_photon, trilinear_geometric, wedge};
use gpc_core::random::{gaussian_matrix, stream_rng};
use gpc_core::{GeneralProduct, StateVector};

pub fn random_matrix(rows: usize, cols: usize) -> ComplexMatrix {
    gaussian_matrix(&mut stream_rng(0, 0), rows, cols)
}

/// Named (product, target) pairs covering each certificate path.
pub fn cases() -> Vec<(&'static str, GeneralProduct, StateVector)> {
    vec![
        ("wedge_singlet", wedge(2).unwrap(), singlet()),
        ("photon_4mode", symmetric_photon(4).unwrap(), photon_target(4).unwrap()),
        (
            "trilinear_q0.5",
            trilinear_geometric(16).unwrap(),
            geometric_state(0.5, 16).unwrap(),
        ),
        (
            "prime_13",
            integer_multiplication(100).unwrap(),
            StateVector::basis(99, 11).unwrap(),
        ),
    ]
}
