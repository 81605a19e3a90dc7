#include "trajgen/numeric.hpp"

#include <limits>

namespace trajgen {

SingularSpectrum singular_spectrum(const Eigen::MatrixXd& mat) {
    SingularSpectrum out;
    if (mat.size() == 0) return out;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(mat);
    out.values = svd.singularValues();
    const double eps = std::numeric_limits<double>::epsilon();
    out.threshold = static_cast<double>(std::max(mat.rows(), mat.cols())) * eps * out.values(0);
    out.rank = 0;
    for (int i = 0; i < out.values.size(); ++i)
        if (out.values(i) > out.threshold) ++out.rank;
    return out;
}

int numerical_rank(const Eigen::MatrixXd& mat) { return singular_spectrum(mat).rank; }

Eigen::MatrixXd null_space_basis(const Eigen::MatrixXd& mat) {
    if (mat.size() == 0) return Eigen::MatrixXd::Identity(mat.cols(), mat.cols());
    Eigen::BDCSVD<Eigen::MatrixXd> svd(mat, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double eps = std::numeric_limits<double>::epsilon();
    const double thresh = static_cast<double>(std::max(mat.rows(), mat.cols())) * eps * (sv.size() ? sv(0) : 0.0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > thresh) ++rank;
    return svd.matrixV().rightCols(mat.cols() - rank);
}

}  // namespace trajgen
