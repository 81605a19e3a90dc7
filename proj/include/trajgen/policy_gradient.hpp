#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajgen/hankel.hpp"
#include "trajgen/lti_system.hpp"

namespace trajgen {

enum class TrainingMode { sample, generate };

struct TrainingConfig {
    TrainingMode mode = TrainingMode::generate;
    int horizon_k = 30;        //!< cost window length K
    int batch_q = 10;          //!< trajectories per episode
    int episodes = 400;
    int t0 = 0;                //!< 0 for state feedback; >= lag for output feedback
    double learning_rate = 1e-3;
    double cost_weight = 0.1;  //!< input term weight in the stage cost
    double sigma0 = 0.5;
    double sigma_decay = 0.99;
    double sigma_min = 0.01;
    double cost_ceiling = 1e9;  //!< divergence guard on the episode mean cost
    std::uint64_t seed = 1;
    bool use_baseline = false;
    int jobs = 1;
    int test_states = 800;    //!< evaluation draws for the final deterministic test
    double test_box = 1.0;    //!< test states are uniform on [-test_box, test_box]^n
    bool log_theta = false;   //!< keep a per-episode snapshot of theta in the log
};

struct EpisodeRow {
    int episode;
    double mean_cost;
    double sigma;
    std::int64_t physical_samples;   //!< cumulative plant samples billed so far
    std::int64_t generated_samples;  //!< cumulative synthetic samples
    double wall_ms;
};

struct TrainingLog {
    std::vector<EpisodeRow> rows;
    std::vector<Eigen::MatrixXd> theta_rows;  //!< post-update gains, when requested
    Eigen::MatrixXd final_theta;
    double final_test_cost = 0.0;
};

/** Raised when the episode mean cost leaves the finite / below-ceiling region. */
class TrainingDivergence : public std::runtime_error {
  public:
    TrainingDivergence(int episode, double mean_cost);
    int episode() const { return episode_; }
    double mean_cost() const { return mean_cost_; }

  private:
    int episode_;
    double mean_cost_;
};

/** Sum over steps of ||y(k)||_1 + input_weight * ||u(k)||_1. */
double cost_l1(const Trajectory& traj, double input_weight);

/** Scalar objective evaluated on one trajectory. */
using CostFn = std::function<double(const Trajectory&)>;

/** Gradient in theta of log N(u; theta*y, sigma^2 I): (u - theta*y) y^T / sigma^2. */
Eigen::MatrixXd log_prob_grad(const Eigen::MatrixXd& theta, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& y, double sigma);

/**
 * Score-function estimate of the cost gradient from a batch: the mean over
 * trajectories of (cost - baseline) times the summed per-step score.  The
 * baseline, when enabled, is the batch mean cost.
 */
Eigen::MatrixXd reinforce_gradient(const std::vector<Trajectory>& batch, const Eigen::MatrixXd& theta,
                                   double sigma, const CostFn& cost_fn, bool use_baseline = false);

/** Exploration schedule max(sigma_min, sigma0 * decay^episode). */
double sigma_schedule(double sigma0, double decay, double sigma_min, int episode);

/**
 * Train a linear policy u = theta y + w with plain gradient descent on the
 * score-function estimate, starting from theta = 0.
 *
 * Both modes draw initial conditions and perturbations from identical streams
 * keyed by (seed, episode, trajectory index); they differ only in where the
 * trajectory comes from (plant rollout vs. record-based generation), so runs
 * with the same seed are comparable episode by episode.
 *
 * State-feedback episodes start from states uniform on the test box, the same
 * distribution the final evaluation uses; output-feedback episodes start from
 * windows of the historical record, the only initial conditions known to be
 * realizable without the plant model.
 *
 * `physical` must be the ledger that billed the record's collection when mode
 * is generate (its value then stays constant in the log); in sample mode pass
 * the ledger meant to absorb the rollout cost.  The final evaluation runs the
 * deterministic policy on the plant over `test_states` draws and is not billed.
 */
TrainingLog train(const LtiSystem& plant, const DataRecord& record, const TrainingConfig& cfg,
                  SampleLedger& physical);

}  // namespace trajgen
