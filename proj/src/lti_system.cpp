#include "trajgen/lti_system.hpp"

#include <stdexcept>
#include <string>

#include "trajgen/numeric.hpp"

namespace trajgen {

LtiSystem::LtiSystem(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C)
    : a_(std::move(A)), b_(std::move(B)), c_(std::move(C)) {
    if (a_.rows() != a_.cols()) throw std::invalid_argument("LtiSystem: A must be square");
    if (b_.rows() != a_.rows()) throw std::invalid_argument("LtiSystem: B row count must match A");
    if (c_.cols() != a_.rows()) throw std::invalid_argument("LtiSystem: C column count must match A");
    if (b_.cols() < 1 || c_.rows() < 1) throw std::invalid_argument("LtiSystem: empty input or output map");
    lag_ = compute_lag(a_, c_);
}

Eigen::VectorXd LtiSystem::step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    if (x.size() != n() || u.size() != m()) throw std::invalid_argument("LtiSystem::step: dimension mismatch");
    return a_ * x + b_ * u;
}

Trajectory LtiSystem::rollout(const Eigen::VectorXd& x0, const Eigen::MatrixXd& u_seq) const {
    if (x0.size() != n()) throw std::invalid_argument("LtiSystem::rollout: bad initial state");
    if (u_seq.rows() != m()) throw std::invalid_argument("LtiSystem::rollout: bad input row count");
    const int len = static_cast<int>(u_seq.cols());
    Trajectory traj;
    traj.u = u_seq;
    traj.y.resize(q(), len);
    Eigen::VectorXd x = x0;
    for (int k = 0; k < len; ++k) {
        traj.y.col(k) = c_ * x;
        x = a_ * x + b_ * u_seq.col(k);
    }
    return traj;
}

Eigen::MatrixXd LtiSystem::rollout_states(const Eigen::VectorXd& x0, const Eigen::MatrixXd& u_seq) const {
    if (x0.size() != n()) throw std::invalid_argument("LtiSystem::rollout_states: bad initial state");
    if (u_seq.rows() != m()) throw std::invalid_argument("LtiSystem::rollout_states: bad input row count");
    const int len = static_cast<int>(u_seq.cols());
    Eigen::MatrixXd xs(n(), len + 1);
    xs.col(0) = x0;
    for (int k = 0; k < len; ++k) xs.col(k + 1) = a_ * xs.col(k) + b_ * u_seq.col(k);
    return xs;
}

Eigen::MatrixXd observability_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C, int ell) {
    if (ell < 1) throw std::invalid_argument("observability_matrix: ell must be positive");
    const int n = static_cast<int>(A.rows());
    const int q = static_cast<int>(C.rows());
    Eigen::MatrixXd obs(ell * q, n);
    Eigen::MatrixXd block = C;
    for (int i = 0; i < ell; ++i) {
        obs.middleRows(i * q, q) = block;
        if (i + 1 < ell) block = block * A;
    }
    return obs;
}

int compute_lag(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C) {
    const int n = static_cast<int>(A.rows());
    for (int ell = 1; ell <= n; ++ell) {
        if (numerical_rank(observability_matrix(A, C, ell)) == n) return ell;
    }
    throw std::invalid_argument("compute_lag: (A, C) is not observable");
}

Eigen::MatrixXd toeplitz_matrix(const LtiSystem& sys, int t) {
    if (t < 1) throw std::invalid_argument("toeplitz_matrix: t must be positive");
    const int q = sys.q(), m = sys.m();
    Eigen::MatrixXd toep = Eigen::MatrixXd::Zero(t * q, t * m);
    // markov(d) = C A^{d-1} B fills every block diagonal i - j = d.
    Eigen::MatrixXd power = sys.B();
    for (int d = 1; d < t; ++d) {
        const Eigen::MatrixXd markov = sys.C() * power;
        for (int j = 0; j + d < t; ++j) toep.block((j + d) * q, j * m, q, m) = markov;
        power = sys.A() * power;
    }
    return toep;
}

ExtendedDynamics extended_transition_matrices(const LtiSystem& sys, int t0) {
    if (t0 < 1) throw std::invalid_argument("extended_transition_matrices: t0 must be positive");
    if (t0 < sys.lag())
        throw std::invalid_argument("extended_transition_matrices: t0 below the lag of (A, C), window does not determine the state");
    const int n = sys.n(), m = sys.m(), q = sys.q();
    const int ydim = t0 * q, udim = (t0 - 1) * m;
    const int N = ydim + udim;

    const Eigen::MatrixXd obs = observability_matrix(sys.A(), sys.C(), t0);
    // State reconstruction map: least-squares pseudo-inverse of the observability matrix.
    const Eigen::MatrixXd obs_pinv =
        obs.completeOrthogonalDecomposition().solve(Eigen::MatrixXd::Identity(ydim, ydim));

    Eigen::MatrixXd a_pow = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < t0; ++i) a_pow = sys.A() * a_pow;  // A^{t0}
    const Eigen::MatrixXd my = sys.C() * a_pow * obs_pinv;  // q x ydim

    ExtendedDynamics ext;
    ext.A_ext = Eigen::MatrixXd::Zero(N, N);
    ext.B_ext = Eigen::MatrixXd::Zero(N, m);

    // Shift rows: y(k-t0+2..k) move up one slot, same for the input window.
    if (t0 > 1) {
        ext.A_ext.block(0, q, (t0 - 1) * q, (t0 - 1) * q).setIdentity();
        if (t0 > 2)
            ext.A_ext.block(ydim + 0, ydim + m, (t0 - 2) * m, (t0 - 2) * m).setIdentity();
        ext.B_ext.block(ydim + (t0 - 2) * m, 0, m, m).setIdentity();
    }

    // New output row: y(k+1) from the reconstructed state plus the forced response.
    ext.A_ext.block((t0 - 1) * q, 0, q, ydim) = my;
    if (t0 > 1) {
        const Eigen::MatrixXd toep = toeplitz_matrix(sys, t0).leftCols(udim);  // inputs u(0..t0-2) -> y(0..t0-1)
        Eigen::MatrixXd forced(q, udim);  // inputs u(0..t0-2) -> y(t0)
        Eigen::MatrixXd power = sys.B();
        for (int j = t0 - 2; j >= 0; --j) {
            power = sys.A() * power;
            forced.middleCols(j * m, m) = sys.C() * power;
        }
        ext.A_ext.block((t0 - 1) * q, ydim, q, udim) = forced - my * toep;
    }
    ext.B_ext.block((t0 - 1) * q, 0, q, m) = sys.C() * sys.B();
    return ext;
}

}  // namespace trajgen
