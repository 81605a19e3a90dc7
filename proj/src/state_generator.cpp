#include "trajgen/state_generator.hpp"

#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "trajgen/numeric.hpp"
#include "trajgen/random.hpp"

namespace trajgen {

InitSampler historic_state_sampler(const DataRecord& record) {
    if (record.length() < 1)
        throw std::invalid_argument("historic_state_sampler: record is empty");
    Eigen::MatrixXd states = record.y;
    return [states](std::mt19937_64& rng) {
        std::uniform_int_distribution<int> pick(0, static_cast<int>(states.cols()) - 1);
        return Eigen::VectorXd(states.col(pick(rng)));
    };
}

InitSampler box_state_sampler(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    if (lo.size() != hi.size()) throw std::invalid_argument("box_state_sampler: bound dimension mismatch");
    if ((lo.array() > hi.array()).any())
        throw std::invalid_argument("box_state_sampler: lower bound exceeds upper bound");
    return [lo, hi](std::mt19937_64& rng) {
        Eigen::VectorXd x(lo.size());
        for (int i = 0; i < lo.size(); ++i) {
            std::uniform_real_distribution<double> unif(lo(i), hi(i));
            x(i) = unif(rng);
        }
        return x;
    };
}

Eigen::MatrixXd build_g_theta_state(const HankelMatrix& h, const Eigen::MatrixXd& theta) {
    const int t = h.depth(), m = h.m(), n = h.q();
    if (theta.rows() != m || theta.cols() != n)
        throw std::invalid_argument("build_g_theta_state: theta must be m x n for a full-state record");
    Eigen::MatrixXd g(t * m + n, h.cols());
    for (int k = 0; k < t; ++k)
        g.middleRows(k * m, m) = h.input_rows(k, k) - theta * h.output_rows(k, k);
    g.bottomRows(n) = h.output_rows(0, 0);
    return g;
}

StateGenerator::StateGenerator(const HankelMatrix& h, const Eigen::MatrixXd& theta)
    : h_u_(h.inputs()), h_x_(h.outputs()), theta_(theta),
      depth_(h.depth()), n_(h.q()), m_(h.m()) {
    g_ = build_g_theta_state(h, theta);
    const int rows = static_cast<int>(g_.rows());
    const int cols = static_cast<int>(g_.cols());
    if (cols < rows)
        throw std::invalid_argument("StateGenerator: record too short, constraint matrix has more rows than columns");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(g_.transpose());
    r_ = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();
    thin_q_ = qr.householderQ() * Eigen::MatrixXd::Identity(cols, rows);
    perm_ = qr.colsPermutation();

    const double eps = std::numeric_limits<double>::epsilon();
    const double tol = static_cast<double>(std::max(rows, cols)) * eps * std::abs(r_(0, 0));
    int rank = 0;
    for (int i = 0; i < rows; ++i)
        if (std::abs(r_(i, i)) > tol) ++rank;
    // Pivoted-QR diagonals can undershoot the trailing singular values by
    // orders of magnitude, so a failed pivot count alone must not reject the
    // record; confirm against the exact spectrum first.
    if (rank != rows) rank = numerical_rank(g_);
    if (rank != rows)
        throw std::runtime_error("StateGenerator: rank(G_theta) = " + std::to_string(rank) +
                                 ", need " + std::to_string(rows) +
                                 "; the record does not certify this depth");
}

Eigen::VectorXd StateGenerator::min_norm_coefficient(const Eigen::VectorXd& rhs) const {
    if (rhs.size() != g_.rows()) throw std::invalid_argument("min_norm_coefficient: bad rhs dimension");
    // G^T P = Q R, so G g = rhs becomes R^T (Q^T g) = P^T rhs; the Q-range
    // solution is the minimum-norm one.
    Eigen::VectorXd z = r_.triangularView<Eigen::Upper>().transpose().solve(perm_.transpose() * rhs);
    Eigen::VectorXd g = thin_q_ * z;
    // One refinement pass keeps the residual near machine level even when the
    // record spans many orders of magnitude.
    Eigen::VectorXd resid = rhs - g_ * g;
    z = r_.triangularView<Eigen::Upper>().transpose().solve(perm_.transpose() * resid);
    g += thin_q_ * z;
    return g;
}

Trajectory StateGenerator::generate(const Eigen::VectorXd& x0, const Eigen::MatrixXd& w) const {
    if (x0.size() != n_) throw std::invalid_argument("StateGenerator::generate: bad x0 dimension");
    if (w.rows() != m_ || w.cols() != depth_)
        throw std::invalid_argument("StateGenerator::generate: perturbations must be m x depth");
    Eigen::VectorXd rhs(depth_ * m_ + n_);
    for (int k = 0; k < depth_; ++k) rhs.segment(k * m_, m_) = w.col(k);
    rhs.tail(n_) = x0;
    const Eigen::VectorXd g = min_norm_coefficient(rhs);
    const Eigen::VectorXd uvec = h_u_ * g;
    const Eigen::VectorXd yvec = h_x_ * g;
    Trajectory traj;
    traj.u = Eigen::Map<const Eigen::MatrixXd>(uvec.data(), m_, depth_);
    traj.y = Eigen::Map<const Eigen::MatrixXd>(yvec.data(), n_, depth_);
    return traj;
}

std::vector<Trajectory> StateGenerator::generate_batch(int count, double sigma, std::uint64_t seed,
                                                       const InitSampler& init_sampler, int jobs) const {
    if (count < 0) throw std::invalid_argument("generate_batch: negative count");
    std::vector<Trajectory> out(static_cast<std::size_t>(count));
    auto worker = [&](int first, int stride) {
        for (int i = first; i < count; i += stride) {
            auto rng = make_stream(mix_seed(seed, static_cast<std::uint64_t>(i)));
            const Eigen::VectorXd x0 = init_sampler(rng);
            std::normal_distribution<double> gauss(0.0, 1.0);
            Eigen::MatrixXd w(m_, depth_);
            for (int k = 0; k < depth_; ++k)
                for (int j = 0; j < m_; ++j) w(j, k) = sigma * gauss(rng);
            out[static_cast<std::size_t>(i)] = generate(x0, w);
        }
    };
    if (jobs <= 1 || count <= 1) {
        worker(0, 1);
    } else {
        const int workers = std::min(jobs, count);
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker, t, workers);
        for (auto& th : pool) th.join();
    }
    return out;
}

}  // namespace trajgen
