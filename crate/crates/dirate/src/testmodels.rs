//! Reference models shared by the unit tests.

use nalgebra::DMatrix;

use crate::model::{Partition, VarModel};

/// Three channels: x white, y[k] = x[k-1] + e_y[k], z white; unit noises.
/// R[0] = diag(1, 2, 1), exact rate x→y‖z equal to ln(2)/2, spectral band
/// (3 ∓ √5)/2.
pub(crate) fn w1() -> VarModel {
    let mut f1 = DMatrix::zeros(3, 3);
    f1[(1, 0)] = 1.0;
    VarModel::new(
        vec![f1],
        DMatrix::identity(3, 3),
        Partition::new(vec![0], vec![1], vec![2]),
    )
    .unwrap()
}

/// x is AR(1) with pole 0.9; y[k+1] = 0.5 y[k] + 0.5 x[k] + e_y; z white;
/// unit noises. Persistent coupling, exact rate ≈ 0.2129276348.
pub(crate) fn w2() -> VarModel {
    let mut f1 = DMatrix::zeros(3, 3);
    f1[(0, 0)] = 0.9;
    f1[(1, 0)] = 0.5;
    f1[(1, 1)] = 0.5;
    VarModel::new(
        vec![f1],
        DMatrix::identity(3, 3),
        Partition::new(vec![0], vec![1], vec![2]),
    )
    .unwrap()
}

/// Three mutually independent channels (x AR 0.5, y AR 0.3, z white); the
/// directed-information rate x→y‖z is exactly zero.
pub(crate) fn decoupled() -> VarModel {
    let f1 = DMatrix::from_diagonal(&nalgebra::dvector![0.5, 0.3, 0.0]);
    VarModel::new(
        vec![f1],
        DMatrix::identity(3, 3),
        Partition::new(vec![0], vec![1], vec![2]),
    )
    .unwrap()
}

/// Two independent white channels, empty z; rate zero, spectral band exactly
/// [1, 1], and the error bound is genuinely valid at desk-scale N.
pub(crate) fn white2() -> VarModel {
    VarModel::new(
        vec![DMatrix::zeros(2, 2)],
        DMatrix::identity(2, 2),
        Partition::new(vec![0], vec![1], vec![]),
    )
    .unwrap()
}
