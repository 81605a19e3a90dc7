#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "trajgen/hankel.hpp"

namespace trajgen {

/** Draws one initial state from a caller-owned distribution. */
using InitSampler = std::function<Eigen::VectorXd(std::mt19937_64&)>;

/** Uniform draw over the states stored in the record (outputs must be full state). */
InitSampler historic_state_sampler(const DataRecord& record);

/** Uniform draw over an axis-aligned box, for tests and ablations. */
InitSampler box_state_sampler(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

/**
 * Constraint matrix of the closed loop u = theta * x + w:
 *   [ H_u - blockdiag(theta, ..., theta) * H_x ;  first state block row of H_x ].
 * The record behind h must carry full state measurements; theta is m x n.
 * The product against the block diagonal is formed block row by block row.
 */
Eigen::MatrixXd build_g_theta_state(const HankelMatrix& h, const Eigen::MatrixXd& theta);

/**
 * On-policy trajectory generator for state feedback.  Owns copies of the
 * Hankel blocks and the factorization of its constraint matrix, so instances
 * are immutable and safe to share between threads.
 *
 * Construction verifies rank(G_theta) = depth*m + n and throws otherwise.
 */
class StateGenerator {
  public:
    StateGenerator(const HankelMatrix& h, const Eigen::MatrixXd& theta);

    const Eigen::MatrixXd& g_theta() const { return g_; }
    const Eigen::MatrixXd& theta_snapshot() const { return theta_; }
    int depth() const { return depth_; }
    int state_dim() const { return n_; }

    /**
     * Minimum-norm coefficient vector with G_theta * g = rhs, where rhs stacks
     * [w(0); ...; w(T-1); x(0)].  Solved through the cached orthogonal
     * factorization with one refinement pass; never forms (G G^T)^{-1}.
     */
    Eigen::VectorXd min_norm_coefficient(const Eigen::VectorXd& rhs) const;

    /** Trajectory of the closed loop from x0 under perturbations w (m x depth). */
    Trajectory generate(const Eigen::VectorXd& x0, const Eigen::MatrixXd& w) const;

    /**
     * count trajectories with i.i.d. N(0, sigma^2) perturbations and initial
     * states from init_sampler.  Trajectory i draws from a stream derived from
     * (seed, i), so results are reproducible for any jobs count.
     */
    std::vector<Trajectory> generate_batch(int count, double sigma, std::uint64_t seed,
                                           const InitSampler& init_sampler, int jobs = 1) const;

  private:
    Eigen::MatrixXd h_u_, h_x_;   // depth-blocked record views
    Eigen::MatrixXd theta_;
    Eigen::MatrixXd g_;           // (depth*m + n) x cols
    Eigen::MatrixXd thin_q_;      // cols x (depth*m + n), orthonormal columns spanning range(G^T)
    Eigen::MatrixXd r_;           // upper triangular factor
    Eigen::PermutationMatrix<Eigen::Dynamic> perm_;
    int depth_, n_, m_;
};

}  // namespace trajgen
