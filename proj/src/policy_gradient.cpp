#include "trajgen/policy_gradient.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <thread>

#include "trajgen/numeric.hpp"
#include "trajgen/output_generator.hpp"
#include "trajgen/random.hpp"
#include "trajgen/state_generator.hpp"

namespace trajgen {

namespace {

// Key separating the final-evaluation draws from the training episodes.
constexpr std::uint64_t kTestStreamKey = 0x7e57a11ceULL;

void run_indexed(int count, int jobs, const std::function<void(int)>& body) {
    if (jobs <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    const int workers = std::min(jobs, count);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&, t] {
            for (int i = t; i < count; i += workers) body(i);
        });
    for (auto& th : pool) th.join();
}

Eigen::MatrixXd draw_perturbations(std::mt19937_64& rng, int m, int cols, double sigma) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd w(m, cols);
    for (int k = 0; k < cols; ++k)
        for (int j = 0; j < m; ++j) w(j, k) = sigma * gauss(rng);
    return w;
}

struct WindowReconstructor {
    // Least-squares map from an output window back to the state at the window
    // start, plus the forced-response correction for the window inputs.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> obs;
    Eigen::MatrixXd toep_trunc;

    WindowReconstructor(const LtiSystem& plant, int t0)
        : obs(observability_matrix(plant.A(), plant.C(), t0)),
          toep_trunc(toeplitz_matrix(plant, t0).leftCols((t0 - 1) * plant.m())) {}

    Eigen::VectorXd state_at_window_end(const LtiSystem& plant, const ExtendedState& chi) const {
        const int t0 = static_cast<int>(chi.y_window.cols());
        const Eigen::VectorXd yflat =
            Eigen::Map<const Eigen::VectorXd>(chi.y_window.data(), chi.y_window.size());
        const Eigen::VectorXd uflat =
            Eigen::Map<const Eigen::VectorXd>(chi.u_window.data(), chi.u_window.size());
        Eigen::VectorXd x = obs.solve(yflat - toep_trunc * uflat);
        for (int j = 0; j < t0 - 1; ++j) x = plant.step(x, chi.u_window.col(j));
        return x;
    }
};

Trajectory closed_loop_rollout(const LtiSystem& plant, const Eigen::VectorXd& x0,
                               const Eigen::MatrixXd& theta, const Eigen::MatrixXd& w) {
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

}  // namespace

TrainingDivergence::TrainingDivergence(int episode, double mean_cost)
    : std::runtime_error("training diverged at episode " + std::to_string(episode) +
                         ": mean episode cost " + std::to_string(mean_cost)),
      episode_(episode), mean_cost_(mean_cost) {}

double cost_l1(const Trajectory& traj, double input_weight) {
    return traj.y.cwiseAbs().sum() + input_weight * traj.u.cwiseAbs().sum();
}

Eigen::MatrixXd log_prob_grad(const Eigen::MatrixXd& theta, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& y, double sigma) {
    if (theta.rows() != u.size() || theta.cols() != y.size())
        throw std::invalid_argument("log_prob_grad: dimension mismatch");
    if (!(sigma > 0.0)) throw std::invalid_argument("log_prob_grad: sigma must be positive");
    return (u - theta * y) * y.transpose() / (sigma * sigma);
}

Eigen::MatrixXd reinforce_gradient(const std::vector<Trajectory>& batch, const Eigen::MatrixXd& theta,
                                   double sigma, const CostFn& cost_fn, bool use_baseline) {
    if (batch.empty()) throw std::invalid_argument("reinforce_gradient: empty batch");
    double baseline = 0.0;
    if (use_baseline) {
        for (const auto& traj : batch) baseline += cost_fn(traj);
        baseline /= static_cast<double>(batch.size());
    }
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(theta.rows(), theta.cols());
    for (const auto& traj : batch) {
        Eigen::MatrixXd score = Eigen::MatrixXd::Zero(theta.rows(), theta.cols());
        for (int k = 0; k < traj.length(); ++k)
            score += log_prob_grad(theta, traj.u.col(k), traj.y.col(k), sigma);
        grad += (cost_fn(traj) - baseline) * score;
    }
    return grad / static_cast<double>(batch.size());
}

double sigma_schedule(double sigma0, double decay, double sigma_min, int episode) {
    return std::max(sigma_min, sigma0 * std::pow(decay, episode));
}

TrainingLog train(const LtiSystem& plant, const DataRecord& record, const TrainingConfig& cfg,
                  SampleLedger& physical) {
    if (cfg.horizon_k < 1) throw std::invalid_argument("train: horizon_k must be positive");
    if (cfg.batch_q < 1) throw std::invalid_argument("train: batch_q must be positive");
    if (cfg.episodes < 0) throw std::invalid_argument("train: episodes must be non-negative");
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be positive");
    if (!(cfg.sigma0 > 0.0) || !(cfg.sigma_min > 0.0) || !(cfg.sigma_decay > 0.0) || cfg.sigma_decay > 1.0)
        throw std::invalid_argument("train: exploration schedule parameters out of range");
    const bool state_mode = (cfg.t0 == 0);
    if (!state_mode && cfg.t0 < plant.lag())
        throw std::invalid_argument("train: t0 must be at least the plant lag for output feedback");
    if (state_mode && record.y.rows() != plant.n())
        throw std::invalid_argument("train: state feedback needs a full-state record");

    const int K = cfg.horizon_k;
    const int T = state_mode ? K : K + cfg.t0 - 1;
    const int m = static_cast<int>(record.u.rows());
    const int ydim = static_cast<int>(record.y.rows());
    const bool generate = (cfg.mode == TrainingMode::generate);

    const HankelMatrix h(record, T);
    // Training starts where evaluation will look: box states for state
    // feedback (any state is realizable for the generator), historic windows
    // for output feedback (realizability requires a recorded window).
    const InitSampler init =
        state_mode ? box_state_sampler(Eigen::VectorXd::Constant(plant.n(), -cfg.test_box),
                                       Eigen::VectorXd::Constant(plant.n(), cfg.test_box))
                   : InitSampler{};
    const WindowSampler windows = state_mode ? WindowSampler{} : historic_window_sampler(record, cfg.t0);
    const std::unique_ptr<WindowReconstructor> recon =
        state_mode ? nullptr : std::make_unique<WindowReconstructor>(plant, cfg.t0);

    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(m, ydim);
    double sigma = sigma_schedule(cfg.sigma0, cfg.sigma_decay, cfg.sigma_min, 0);

    TrainingLog log;
    log.rows.reserve(static_cast<std::size_t>(cfg.episodes));
    std::int64_t generated_total = 0;

    std::vector<Trajectory> batch(static_cast<std::size_t>(cfg.batch_q));
    for (int e = 0; e < cfg.episodes; ++e) {
        const auto t_start = std::chrono::steady_clock::now();
        std::unique_ptr<StateGenerator> sgen;
        std::unique_ptr<OutputGenerator> ogen;
        if (generate) {
            if (state_mode)
                sgen = std::make_unique<StateGenerator>(h, theta);
            else
                ogen = std::make_unique<OutputGenerator>(h, theta, cfg.t0);
        }

        run_indexed(cfg.batch_q, cfg.jobs, [&](int i) {
            auto rng = trajectory_stream(cfg.seed, static_cast<std::uint64_t>(e),
                                         static_cast<std::uint64_t>(i));
            if (state_mode) {
                const Eigen::VectorXd x0 = init(rng);
                const Eigen::MatrixXd w = draw_perturbations(rng, m, K, sigma);
                if (generate) {
                    batch[static_cast<std::size_t>(i)] = sgen->generate(x0, w);
                } else {
                    batch[static_cast<std::size_t>(i)] = closed_loop_rollout(plant, x0, theta, w);
                    physical.add(K);
                }
            } else {
                const ExtendedState chi0 = windows(rng);
                const Eigen::MatrixXd w = draw_perturbations(rng, m, K, sigma);
                if (generate) {
                    batch[static_cast<std::size_t>(i)] = ogen->generate(chi0, w);
                } else {
                    const Eigen::VectorXd x0 = recon->state_at_window_end(plant, chi0);
                    batch[static_cast<std::size_t>(i)] = closed_loop_rollout(plant, x0, theta, w);
                    physical.add(K);
                }
            }
        });

        double mean_cost = 0.0;
        for (const auto& traj : batch) mean_cost += cost_l1(traj, cfg.cost_weight);
        mean_cost /= static_cast<double>(cfg.batch_q);
        if (!std::isfinite(mean_cost) || mean_cost > cfg.cost_ceiling)
            throw TrainingDivergence(e, mean_cost);

        const Eigen::MatrixXd grad = reinforce_gradient(
            batch, theta, sigma, [&](const Trajectory& t) { return cost_l1(t, cfg.cost_weight); },
            cfg.use_baseline);
        theta -= cfg.learning_rate * grad;
        if (cfg.log_theta) log.theta_rows.push_back(theta);
        if (generate) generated_total += static_cast<std::int64_t>(cfg.batch_q) * K;

        const double wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
        log.rows.push_back({e, mean_cost, sigma, physical.value(), generated_total, wall_ms});
        sigma = sigma_schedule(cfg.sigma0, cfg.sigma_decay, cfg.sigma_min, e + 1);
    }

    // Deterministic policy evaluation on the plant over box-uniform test states;
    // identical draws for both modes at a given seed, not billed to the ledger.
    double test_cost = 0.0;
    const std::uint64_t test_seed = mix_seed(cfg.seed, kTestStreamKey);
    const Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(m, K);
    for (int j = 0; j < cfg.test_states; ++j) {
        auto rng = trajectory_stream(test_seed, 0, static_cast<std::uint64_t>(j));
        std::uniform_real_distribution<double> unif(-cfg.test_box, cfg.test_box);
        Eigen::VectorXd x0(plant.n());
        for (int i = 0; i < plant.n(); ++i) x0(i) = unif(rng);
        test_cost += cost_l1(closed_loop_rollout(plant, x0, theta, w0), cfg.cost_weight);
    }
    log.final_theta = theta;
    log.final_test_cost = cfg.test_states > 0 ? test_cost / cfg.test_states : 0.0;
    return log;
}

}  // namespace trajgen
