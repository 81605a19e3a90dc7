#pragma once

#include <Eigen/Dense>

namespace trajgen {

/** One input/output run of fixed length; column k holds the values at step k. */
struct Trajectory {
    Eigen::MatrixXd u;  //!< m x length
    Eigen::MatrixXd y;  //!< q x length

    int length() const { return static_cast<int>(u.cols()); }
};

/**
 * Discrete-time plant x(k+1) = A x(k) + B u(k), y(k) = C x(k).
 *
 * Construction validates dimensions and requires (A, C) observable; the
 * smallest window length that pins down the state (the lag) is cached.
 */
class LtiSystem {
  public:
    LtiSystem(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C);

    int n() const { return static_cast<int>(a_.rows()); }
    int m() const { return static_cast<int>(b_.cols()); }
    int q() const { return static_cast<int>(c_.rows()); }
    int lag() const { return lag_; }

    const Eigen::MatrixXd& A() const { return a_; }
    const Eigen::MatrixXd& B() const { return b_; }
    const Eigen::MatrixXd& C() const { return c_; }

    Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
    Eigen::VectorXd output(const Eigen::VectorXd& x) const { return c_ * x; }

    /** Run the plant over the columns of u_seq; y(k) is read out before stepping. */
    Trajectory rollout(const Eigen::VectorXd& x0, const Eigen::MatrixXd& u_seq) const;

    /** State sequence of the same run, n x (len + 1); the extra column is the final state. */
    Eigen::MatrixXd rollout_states(const Eigen::VectorXd& x0, const Eigen::MatrixXd& u_seq) const;

  private:
    Eigen::MatrixXd a_, b_, c_;
    int lag_;
};

/** Stacked maps C, CA, ..., CA^{ell-1}; (ell*q) x n. */
Eigen::MatrixXd observability_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C, int ell);

/**
 * Smallest ell with rank(observability_matrix(A, C, ell)) == n.
 * Throws std::invalid_argument when no ell <= n reaches full rank.
 */
int compute_lag(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C);

/**
 * Forced-response matrix for windows of length t: block (i, j) = C A^{i-j-1} B
 * for i > j and zero otherwise, so the first block row is zero.  (t*q) x (t*m).
 */
Eigen::MatrixXd toeplitz_matrix(const LtiSystem& sys, int t);

struct ExtendedDynamics {
    Eigen::MatrixXd A_ext;  //!< square, side t0*q + (t0-1)*m
    Eigen::MatrixXd B_ext;  //!< (t0*q + (t0-1)*m) x m
};

/**
 * Transition matrices for the window state
 *   X(k) = [y(k-t0+1); ...; y(k); u(k-t0+1); ...; u(k-1)],
 * which evolves as X(k+1) = A_ext X(k) + B_ext u(k).  Requires t0 >= lag so the
 * window determines the underlying plant state; the reconstruction uses a
 * least-squares solve against the observability matrix rather than an explicit
 * inverse.  With C = I and t0 = 1 this reduces to (A, B).
 */
ExtendedDynamics extended_transition_matrices(const LtiSystem& sys, int t0);

}  // namespace trajgen
