#include "trajgen/verification.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "trajgen/numeric.hpp"
#include "trajgen/random.hpp"
#include "trajgen/state_generator.hpp"

namespace trajgen {
namespace {

Eigen::MatrixXd draw_uniform(std::mt19937_64& rng, int rows, int cols, double scale) {
    std::uniform_real_distribution<double> unif(-scale, scale);
    Eigen::MatrixXd out(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) out(i, j) = unif(rng);
    return out;
}

Eigen::MatrixXd draw_normal(std::mt19937_64& rng, int rows, int cols, double sigma) {
    std::normal_distribution<double> gauss(0.0, sigma);
    Eigen::MatrixXd out(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) out(i, j) = sigma > 0.0 ? gauss(rng) : 0.0;
    return out;
}

double trajectory_gap(const Trajectory& got, const Trajectory& want) {
    const double scale = std::max({1.0, want.u.cwiseAbs().maxCoeff(), want.y.cwiseAbs().maxCoeff()});
    const double du = (got.u - want.u).cwiseAbs().maxCoeff();
    const double dy = (got.y - want.y).cwiseAbs().maxCoeff();
    return std::max(du, dy) / scale;
}

/** Closed loop u = theta * y + w on the true plant, read out as a trajectory. */
Trajectory closed_loop_oracle(const LtiSystem& plant, const Eigen::MatrixXd& theta,
                              const Eigen::VectorXd& x0, const Eigen::MatrixXd& w) {
    const int len = static_cast<int>(w.cols());
    Trajectory traj;
    traj.u.resize(plant.m(), len);
    traj.y.resize(plant.q(), len);
    Eigen::VectorXd x = x0;
    for (int k = 0; k < len; ++k) {
        const Eigen::VectorXd y = plant.output(x);
        const Eigen::VectorXd u = theta * y + w.col(k);
        traj.y.col(k) = y;
        traj.u.col(k) = u;
        x = plant.step(x, u);
    }
    return traj;
}

NullspaceCheck cross_project(const Eigen::MatrixXd& stacked, const Eigen::MatrixXd& g,
                             int state_dim, int depth, int m) {
    NullspaceCheck out;
    const Eigen::MatrixXd basis_h = null_space_basis(stacked);
    const Eigen::MatrixXd basis_g = null_space_basis(g);
    out.nullity_h = static_cast<int>(basis_h.cols());
    out.nullity_g = static_cast<int>(basis_g.cols());
    out.rank_g = numerical_rank(g);
    out.required = state_dim + depth * m;

    // Each basis must lie in the span of the other; orthonormal columns make
    // the projector a plain product.
    double worst = 0.0;
    if (basis_h.cols() > 0) {
        const Eigen::MatrixXd resid = basis_h - basis_g * (basis_g.transpose() * basis_h);
        worst = std::max(worst, resid.cwiseAbs().maxCoeff());
    }
    if (basis_g.cols() > 0) {
        const Eigen::MatrixXd resid = basis_g - basis_h * (basis_h.transpose() * basis_g);
        worst = std::max(worst, resid.cwiseAbs().maxCoeff());
    }
    out.max_residual = worst;
    return out;
}

}  // namespace

Eigen::VectorXd state_from_window(const LtiSystem& plant, const ExtendedState& chi) {
    const int t0 = static_cast<int>(chi.y_window.cols());
    if (t0 < plant.lag()) throw std::invalid_argument("window shorter than the plant lag");
    const Eigen::MatrixXd obs = observability_matrix(plant.A(), plant.C(), t0);
    Eigen::VectorXd stacked_y(static_cast<Eigen::Index>(t0) * plant.q());
    for (int k = 0; k < t0; ++k) stacked_y.segment(k * plant.q(), plant.q()) = chi.y_window.col(k);
    if (t0 > 1) {
        const Eigen::MatrixXd toep =
            toeplitz_matrix(plant, t0).leftCols(static_cast<Eigen::Index>(t0 - 1) * plant.m());
        Eigen::VectorXd stacked_u(static_cast<Eigen::Index>(t0 - 1) * plant.m());
        for (int k = 0; k + 1 < t0; ++k)
            stacked_u.segment(k * plant.m(), plant.m()) = chi.u_window.col(k);
        stacked_y -= toep * stacked_u;
    }
    Eigen::VectorXd x = obs.completeOrthogonalDecomposition().solve(stacked_y);
    for (int k = 0; k + 1 < t0; ++k) x = plant.step(x, chi.u_window.col(k));
    return x;
}

EquivalenceResult verify_state_equivalence(const LtiSystem& plant, const DataRecord& record,
                                           int depth, int trials, std::uint64_t seed,
                                           double theta_scale, const Eigen::MatrixXd* fixed_theta) {
    if (plant.q() != plant.n()) throw std::invalid_argument("state equivalence needs full state outputs");
    const HankelMatrix h(record, depth);
    EquivalenceResult result;
    result.trials = trials;
    for (int t = 0; t < trials; ++t) {
        auto rng = make_stream(mix_seed(seed, static_cast<std::uint64_t>(t)));
        const Eigen::MatrixXd theta =
            fixed_theta ? *fixed_theta : draw_uniform(rng, plant.m(), plant.n(), theta_scale);
        const Eigen::MatrixXd x0 = draw_normal(rng, plant.n(), 1, 1.0);
        const Eigen::MatrixXd w = draw_normal(rng, plant.m(), depth, 0.5);
        const StateGenerator gen(h, theta);
        const Trajectory got = gen.generate(x0.col(0), w);
        const Trajectory want = closed_loop_oracle(plant, theta, x0.col(0), w);
        const double gap = trajectory_gap(got, want);
        if (gap >= result.max_rel_err) {
            result.max_rel_err = gap;
            result.worst_generated = got;
            result.worst_reference = want;
        }
    }
    return result;
}

EquivalenceResult verify_output_equivalence(const LtiSystem& plant, const DataRecord& record,
                                            int depth, int t0, int trials, std::uint64_t seed,
                                            double theta_scale, const Eigen::MatrixXd* fixed_theta) {
    const HankelMatrix h(record, depth);
    const WindowSampler sampler = historic_window_sampler(record, t0);
    EquivalenceResult result;
    result.trials = trials;
    for (int t = 0; t < trials; ++t) {
        auto rng = make_stream(mix_seed(seed, static_cast<std::uint64_t>(t)));
        const Eigen::MatrixXd theta =
            fixed_theta ? *fixed_theta : draw_uniform(rng, plant.m(), plant.q(), theta_scale);
        const ExtendedState chi = sampler(rng);
        const int steps = depth - t0 + 1;
        const Eigen::MatrixXd w = draw_normal(rng, plant.m(), steps, 0.5);
        const OutputGenerator gen(h, theta, t0);
        const Trajectory got = gen.generate(chi, w);
        const Eigen::VectorXd x_end = state_from_window(plant, chi);
        const Trajectory want = closed_loop_oracle(plant, theta, x_end, w);
        const double gap = trajectory_gap(got, want);
        if (gap >= result.max_rel_err) {
            result.max_rel_err = gap;
            result.worst_generated = got;
            result.worst_reference = want;
        }
    }
    return result;
}

NullspaceCheck nullspace_equivalence_state(const HankelMatrix& h, const Eigen::MatrixXd& theta,
                                           int state_dim) {
    return cross_project(h.stacked(), build_g_theta_state(h, theta), state_dim, h.depth(), h.m());
}

NullspaceCheck nullspace_equivalence_output(const HankelMatrix& h, const Eigen::MatrixXd& theta,
                                            int t0, int state_dim) {
    return cross_project(h.stacked(), build_g_theta_output(h, theta, t0), state_dim, h.depth(),
                         h.m());
}

}  // namespace trajgen
