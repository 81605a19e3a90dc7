#include "trajgen/output_generator.hpp"

#include <stdexcept>
#include <string>
#include <thread>

#include "trajgen/random.hpp"

namespace trajgen {

Eigen::VectorXd ExtendedState::flatten() const {
    const int ylen = static_cast<int>(y_window.size());
    const int ulen = static_cast<int>(u_window.size());
    Eigen::VectorXd v(ylen + ulen);
    v.head(ylen) = Eigen::Map<const Eigen::VectorXd>(y_window.data(), ylen);
    v.tail(ulen) = Eigen::Map<const Eigen::VectorXd>(u_window.data(), ulen);
    return v;
}

ExtendedState ExtendedState::from_flat(const Eigen::VectorXd& v, int t0, int m, int q) {
    if (t0 < 1) throw std::invalid_argument("ExtendedState: t0 must be positive");
    if (v.size() != t0 * q + (t0 - 1) * m)
        throw std::invalid_argument("ExtendedState: flat vector has wrong length");
    ExtendedState chi;
    chi.y_window = Eigen::Map<const Eigen::MatrixXd>(v.data(), q, t0);
    chi.u_window = Eigen::Map<const Eigen::MatrixXd>(v.data() + t0 * q, m, t0 - 1);
    return chi;
}

WindowSampler historic_window_sampler(const DataRecord& record, int t0) {
    if (t0 < 1) throw std::invalid_argument("historic_window_sampler: t0 must be positive");
    if (record.length() < t0) throw std::invalid_argument("historic_window_sampler: record shorter than t0");
    const Eigen::MatrixXd u = record.u;
    const Eigen::MatrixXd y = record.y;
    const int last = record.length() - t0;
    return [u, y, t0, last](std::mt19937_64& rng) {
        std::uniform_int_distribution<int> pick(0, last);
        const int j = pick(rng);
        ExtendedState chi;
        chi.y_window = y.middleCols(j, t0);
        chi.u_window = u.middleCols(j, t0 - 1);
        return chi;
    };
}

Eigen::MatrixXd build_g_theta_output(const HankelMatrix& h, const Eigen::MatrixXd& theta, int t0) {
    const int t = h.depth(), m = h.m(), q = h.q();
    if (t0 < 1 || t0 > t) throw std::invalid_argument("build_g_theta_output: need 1 <= t0 <= depth");
    if (theta.rows() != m || theta.cols() != q)
        throw std::invalid_argument("build_g_theta_output: theta must be m x q");
    const int steps = t - t0 + 1;
    Eigen::MatrixXd g(t * m + t0 * q, h.cols());
    for (int k = 0; k < steps; ++k)
        g.middleRows(k * m, m) = h.input_rows(t0 - 1 + k, t0 - 1 + k) - theta * h.output_rows(t0 - 1 + k, t0 - 1 + k);
    g.middleRows(steps * m, t0 * q) = h.output_rows(0, t0 - 1);
    if (t0 > 1) g.bottomRows((t0 - 1) * m) = h.input_rows(0, t0 - 2);
    return g;
}

OutputGenerator::OutputGenerator(const HankelMatrix& h, const Eigen::MatrixXd& theta, int t0,
                                 double eig_tol, double feas_tol)
    : theta_(theta), feas_tol_(feas_tol), t0_(t0), depth_(h.depth()), m_(h.m()), q_(h.q()) {
    g_ = build_g_theta_output(h, theta, t0);
    slice_u_ = h.input_rows(t0 - 1, depth_ - 1);
    slice_y_ = h.output_rows(t0 - 1, depth_ - 1);

    // Eigenpairs of G G^T without forming the product: the left singular
    // vectors of G are its eigenvectors and the squared singular values its
    // eigenvalues.  Records from unstable plants put the genuine end of the
    // spectrum many orders below sigma_max, where the squared product could
    // not tell it from the true zeros of a row-rank-deficient G.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(g_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();  // descending
    const double smax = sigma.size() > 0 ? sigma(0) : 0.0;
    if (!(smax > 0.0)) throw std::runtime_error("OutputGenerator: constraint matrix is zero");
    const double cutoff =
        eig_tol > 0.0 ? std::sqrt(eig_tol) * smax
                      : static_cast<double>(std::max(g_.rows(), g_.cols())) *
                            std::numeric_limits<double>::epsilon() * smax;
    int kept = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > cutoff) ++kept;
    if (kept == 0) throw std::runtime_error("OutputGenerator: constraint matrix is zero");
    lambda_ = sigma.head(kept).array().square();
    modes_ = svd.matrixU().leftCols(kept);
    right_modes_ = svd.matrixV().leftCols(kept);
}

Eigen::VectorXd OutputGenerator::coefficient(const Eigen::VectorXd& rhs) const {
    if (rhs.size() != g_.rows()) throw std::invalid_argument("OutputGenerator::coefficient: bad rhs dimension");
    // G^T P Lambda^{-1} P^T r collapses to V Sigma^{-1} P^T r through the SVD
    // factors; iterative refinement recovers the digits the raw solve loses to
    // the record's conditioning.
    const auto apply_pinv = [&](const Eigen::VectorXd& r) {
        Eigen::VectorXd proj = modes_.transpose() * r;
        proj.array() /= lambda_.array().sqrt();
        return Eigen::VectorXd(right_modes_ * proj);
    };
    Eigen::VectorXd g = apply_pinv(rhs);
    Eigen::VectorXd resid = rhs - g_ * g;
    g += apply_pinv(resid);
    resid = rhs - g_ * g;
    g += apply_pinv(resid);
    resid = rhs - g_ * g;
    // Backward-error feasibility test: an infeasible rhs leaves a residual
    // comparable to rhs itself, while a feasible one bottoms out at the
    // rounding floor of forming G * g, which scales with sigma_max * |g|.
    const double scale = rhs.norm() + std::sqrt(lambda_(0)) * g.norm();
    if (scale > 0.0 && resid.norm() > feas_tol_ * scale)
        throw std::runtime_error(
            "OutputGenerator: right-hand side outside the range of G_theta (backward error " +
            std::to_string(resid.norm() / scale) + "); the window state is not realizable");
    return g;
}

Trajectory OutputGenerator::generate(const ExtendedState& chi0, const Eigen::MatrixXd& w) const {
    const int k = steps();
    if (chi0.y_window.rows() != q_ || chi0.y_window.cols() != t0_ ||
        chi0.u_window.rows() != m_ || chi0.u_window.cols() != t0_ - 1)
        throw std::invalid_argument("OutputGenerator::generate: window state has wrong shape");
    if (w.rows() != m_ || w.cols() != k)
        throw std::invalid_argument("OutputGenerator::generate: perturbations must be m x steps");
    Eigen::VectorXd rhs(g_.rows());
    for (int i = 0; i < k; ++i) rhs.segment(i * m_, m_) = w.col(i);
    rhs.tail(t0_ * q_ + (t0_ - 1) * m_) = chi0.flatten();
    const Eigen::VectorXd g = coefficient(rhs);
    const Eigen::VectorXd uvec = slice_u_ * g;
    const Eigen::VectorXd yvec = slice_y_ * g;
    Trajectory traj;
    traj.u = Eigen::Map<const Eigen::MatrixXd>(uvec.data(), m_, k);
    traj.y = Eigen::Map<const Eigen::MatrixXd>(yvec.data(), q_, k);
    return traj;
}

std::vector<Trajectory> OutputGenerator::generate_batch(int count, double sigma, std::uint64_t seed,
                                                        const WindowSampler& window_sampler, int jobs) const {
    if (count < 0) throw std::invalid_argument("generate_batch: negative count");
    std::vector<Trajectory> out(static_cast<std::size_t>(count));
    const int k = steps();
    auto worker = [&](int first, int stride) {
        for (int i = first; i < count; i += stride) {
            auto rng = make_stream(mix_seed(seed, static_cast<std::uint64_t>(i)));
            const ExtendedState chi0 = window_sampler(rng);
            std::normal_distribution<double> gauss(0.0, 1.0);
            Eigen::MatrixXd w(m_, k);
            for (int c = 0; c < k; ++c)
                for (int j = 0; j < m_; ++j) w(j, c) = sigma * gauss(rng);
            out[static_cast<std::size_t>(i)] = generate(chi0, w);
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
