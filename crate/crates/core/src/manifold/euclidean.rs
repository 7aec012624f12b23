use nalgebra::DMatrix;

use super::AmbientTangent;

pub(super) fn basis(dim: usize) -> Vec<AmbientTangent> {
    (0..dim)
        .map(|i| {
            let mut e = DMatrix::zeros(dim, 1);
            e[(i, 0)] = 1.0;
            e
        })
        .collect()
}
