#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajgen/lti_system.hpp"
#include "trajgen/policy_gradient.hpp"

namespace trajgen {

/**
 * Discretized open-loop unstable batch reactor, 4 states, 2 inputs, 0.1 s
 * sampling.  full_state selects C = I; otherwise only the first two states are
 * measured (lag 2).
 */
LtiSystem batch_reactor(bool full_state);

/** Radial distribution feeder: branch list over 1-based bus ids. */
struct NetworkBranch {
    int from;
    int to;
    double r_pu;
    double x_pu;
};

struct NetworkData {
    int buses = 0;
    int ref = 1;
    std::vector<NetworkBranch> branches;
    std::vector<int> measured;    //!< bus ids carrying sensors (non-ref)
    std::vector<int> controlled;  //!< bus ids carrying actuators (non-ref)
};

/**
 * Load a feeder file: header line buses=N,ref=B, optional measured=/controlled=
 * lines with ';'-separated bus ids, then a from,to,r_pu,x_pu table.  Validates
 * that the branches form a spanning tree with positive reactances; empty
 * measured/controlled lists default to all non-reference buses.
 */
NetworkData load_network(const std::string& path);
void write_network(const std::string& path, const NetworkData& net);

/** Bundled 33-bus radial feeder with 20 measured-and-controlled buses. */
NetworkData ieee33_network();

/**
 * Path-impedance sensitivity of bus voltages to reactive injections:
 * entry (i, j) is twice the summed reactance on the shared portion of the
 * paths from the reference bus to buses i and j.  Ordered by ascending bus id
 * over non-reference buses; symmetric positive definite on a tree.
 */
Eigen::MatrixXd reactance_sensitivity(const NetworkData& net);

/**
 * Voltage-deviation plant on the feeder.  Injections act through the
 * sensitivity matrix scaled by control_gain_dt; between control updates the
 * deviations relax through neighbor coupling (grounded graph Laplacian scaled
 * to `relaxation` at its largest mode), which is what makes partially measured
 * configurations observable.  y selects the measured buses.
 */
LtiSystem lindistflow_system(const NetworkData& net, double control_gain_dt,
                             double relaxation = 0.5);

/** Everything needed to run one named experiment end to end. */
struct ExperimentSpec {
    std::string name;
    LtiSystem plant;
    int t0 = 0;  //!< 0 for state feedback
    int horizon_k = 30;
    int data_length = 93;
    double input_scale = 1.0;
    double sample_period = 0.1;  //!< seconds per sample, reporting only
    double cost_weight = 0.1;
    double learning_rate = 1e-3;
    double sigma0 = 0.5;
    double sigma_decay = 0.99;
    double sigma_min = 0.01;
    int episodes = 400;
    int batch_q = 100;        //!< desk-scale batch; comparisons finish in minutes
    double cost_ceiling = 1e9;
    double test_box = 1.0;
    int paper_batch_q = 1200;  //!< full-scale batch of the source experiments
};

/** Registry lookup; throws std::invalid_argument for unknown names. */
ExperimentSpec experiment(const std::string& name);
std::vector<std::string> experiment_names();

/** One trained arm of a comparison. */
struct MethodResult {
    std::string method;  //!< "generate" or "sample_<Q>"
    TrainingLog log;
    std::int64_t physical_samples = 0;
    double wall_s = 0.0;
    bool diverged = false;        //!< the arm hit the divergence guard; log is empty
    int divergence_episode = -1;  //!< episode the guard fired at, when diverged
};

struct ComparisonOverrides {
    int episodes = -1;        //!< -1 keeps the registry default
    int generate_batch = -1;  //!< -1 keeps the registry batch (paper batch under paper_scale)
    std::vector<int> sample_q;  //!< sampling-arm batch sizes; empty = {10, 100, generate batch}
    bool paper_scale = false;   //!< use the full-scale batch of the source experiments
    std::uint64_t seed = 1;
    int jobs = 1;
    bool use_baseline = false;
    std::string out_dir;  //!< when set, per-arm logs and the report CSV land here
};

struct ComparisonReport {
    std::vector<MethodResult> methods;  //!< generate arm first, then sample arms ascending in Q
    double max_episode_gap = 0.0;  //!< vs. the equal-batch sample arm, max over episodes
    double final_test_gap = 0.0;   //!< relative difference of the deterministic test costs
};

/**
 * Collect one certified record, then train the generating arm and every
 * sampling arm from the same seed so equal-batch arms match draw for draw.
 * A diverging arm is reported in place without aborting the others.  The
 * parity gaps compare the generating arm against the sample arm of equal
 * batch size when one is present.  When out_dir is set, writes one
 * <method>_log.csv per arm plus report.csv and, when the equal-batch pair
 * exists, parity.csv with per-episode costs.
 */
ComparisonReport run_comparison(const ExperimentSpec& spec, const ComparisonOverrides& cfg);

}  // namespace trajgen
