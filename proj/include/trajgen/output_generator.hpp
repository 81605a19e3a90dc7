#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "trajgen/hankel.hpp"

namespace trajgen {

/**
 * Window state for output feedback: the last t0 outputs and the t0 - 1 inputs
 * that preceded the final one.  Flattened as [outputs oldest-first; inputs
 * oldest-first], total t0*q + (t0-1)*m entries.
 */
struct ExtendedState {
    Eigen::MatrixXd y_window;  //!< q x t0
    Eigen::MatrixXd u_window;  //!< m x (t0 - 1)

    Eigen::VectorXd flatten() const;
    static ExtendedState from_flat(const Eigen::VectorXd& v, int t0, int m, int q);
};

using WindowSampler = std::function<ExtendedState(std::mt19937_64&)>;

/** Uniform draw over the record's sliding windows; every draw is feasible by construction. */
WindowSampler historic_window_sampler(const DataRecord& record, int t0);

/**
 * Constraint matrix of the output feedback loop u = theta * y + w over window
 * positions t0-1 .. T-1, stacked over the window state rows:
 *   [ H_u^{t0-1:T-1} - blockdiag(theta) * H_y^{t0-1:T-1} ;
 *     H_y^{0:t0-1} ;
 *     H_u^{0:t0-2} ].
 * theta is m x q; the block diagonal carries T - t0 + 1 copies.
 */
Eigen::MatrixXd build_g_theta_output(const HankelMatrix& h, const Eigen::MatrixXd& theta, int t0);

/**
 * On-policy generator when only outputs are measured.  The constraint matrix
 * may lose row rank, so coefficients come from its retained eigenpairs
 * (lambda_i, p_i) of G G^T, obtained through an SVD of G itself: squaring the
 * matrix would push the genuinely nonzero spectrum of ill-conditioned records
 * below the noise floor of the true zeros.  eig_tol > 0 retains eigenvalues
 * above eig_tol * lambda_max; eig_tol <= 0 (default) uses the machine-precision
 * rank threshold max(rows, cols) * eps * sigma_max on the singular values.  An
 * infeasible right-hand side (outside the range of G) is reported as an error
 * instead of being silently projected.
 */
class OutputGenerator {
  public:
    OutputGenerator(const HankelMatrix& h, const Eigen::MatrixXd& theta, int t0,
                    double eig_tol = 0.0, double feas_tol = 1e-6);

    const Eigen::MatrixXd& g_theta() const { return g_; }
    const Eigen::MatrixXd& theta_snapshot() const { return theta_; }
    int t0() const { return t0_; }
    int depth() const { return depth_; }
    int steps() const { return depth_ - t0_ + 1; }
    int retained_modes() const { return static_cast<int>(lambda_.size()); }

    /**
     * Coefficient g with G g = rhs, rhs = [w(t0-1); ...; w(T-1); window state].
     * Throws std::runtime_error when rhs lies outside the range of G (relative
     * residual above feas_tol), which flags an infeasible window state.
     */
    Eigen::VectorXd coefficient(const Eigen::VectorXd& rhs) const;

    /**
     * Closed-loop continuation of chi0 under perturbations w (m x steps());
     * covers window positions t0-1 .. T-1, so column 0 overlaps the final
     * entry of chi0's output window.
     */
    Trajectory generate(const ExtendedState& chi0, const Eigen::MatrixXd& w) const;

    /** Batch analogue of StateGenerator::generate_batch with window draws. */
    std::vector<Trajectory> generate_batch(int count, double sigma, std::uint64_t seed,
                                           const WindowSampler& window_sampler, int jobs = 1) const;

  private:
    Eigen::MatrixXd slice_u_, slice_y_;  // window rows t0-1 .. T-1 of the record views
    Eigen::MatrixXd theta_;
    Eigen::MatrixXd g_;
    Eigen::MatrixXd modes_;        // eigenvectors of G G^T kept, (T*m + t0*q) x s
    Eigen::MatrixXd right_modes_;  // matching right singular vectors, cols x s
    Eigen::VectorXd lambda_;       // eigenvalues kept, descending
    double feas_tol_;
    int t0_, depth_, m_, q_;
};

}  // namespace trajgen
