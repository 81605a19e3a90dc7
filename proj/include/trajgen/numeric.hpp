#pragma once

#include <Eigen/Dense>

namespace trajgen {

struct SingularSpectrum {
    Eigen::VectorXd values;  //!< singular values, descending
    double threshold = 0.0;  //!< cutoff used for the rank decision
    int rank = 0;
};

/**
 * Numerical rank via SVD with the cutoff max(rows, cols) * eps * sigma_max.
 * A zero matrix has rank 0 and threshold 0.
 */
SingularSpectrum singular_spectrum(const Eigen::MatrixXd& mat);

int numerical_rank(const Eigen::MatrixXd& mat);

/** Orthonormal basis of the right null space at the same cutoff; n_cols x nullity. */
Eigen::MatrixXd null_space_basis(const Eigen::MatrixXd& mat);

}  // namespace trajgen
