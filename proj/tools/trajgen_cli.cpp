// Command line front end: collect | certify | generate | verify | train | compare.
// Exit codes: 0 success, 1 verification or training failure, 2 usage/config error.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajgen/benchmarks.hpp"
#include "trajgen/hankel.hpp"
#include "trajgen/io.hpp"
#include "trajgen/output_generator.hpp"
#include "trajgen/policy_gradient.hpp"
#include "trajgen/random.hpp"
#include "trajgen/state_generator.hpp"
#include "trajgen/verification.hpp"

namespace {

using namespace trajgen;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/** Problems with flags, config files or input artifacts; maps to exit code 2. */
class UsageError : public std::runtime_error {
  public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

std::string default_out_dir() {
    const char* env = std::getenv("TRAJGEN_OUT_DIR");
    return (env && *env) ? std::string(env) : std::string(".");
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw UsageError("cannot create output directory '" + dir + "': " + ec.message());
}

bool is_builtin(const std::string& name) {
    for (const auto& known : experiment_names())
        if (known == name) return true;
    return false;
}

/** Resolve --system: a registry name wins, anything else is read as a plant file. */
LtiSystem resolve_system(const std::string& spec_name, double* period_out = nullptr) {
    if (is_builtin(spec_name)) {
        ExperimentSpec spec = experiment(spec_name);
        if (period_out) *period_out = spec.sample_period;
        return spec.plant;
    }
    if (!std::filesystem::exists(spec_name))
        throw UsageError("--system '" + spec_name + "' is neither a builtin experiment (" +
                         [] {
                             std::string names;
                             for (const auto& n : experiment_names())
                                 names += (names.empty() ? "" : ", ") + n;
                             return names;
                         }() +
                         ") nor an existing plant file");
    if (period_out) *period_out = 1.0;
    try {
        return read_plant_file(spec_name);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

DataRecord load_record(const std::string& path) {
    try {
        return read_record_csv(path);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

// ---------------------------------------------------------------------------
// collect

struct CollectArgs {
    std::string system;
    int length = -1;
    double scale = -1.0;
    double period = -1.0;
    int depth = 0;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_collect(const CollectArgs& args) {
    double registry_period = 1.0;
    const LtiSystem plant = resolve_system(args.system, &registry_period);

    int length = args.length;
    double scale = args.scale;
    double period = args.period;
    if (is_builtin(args.system)) {
        const ExperimentSpec spec = experiment(args.system);
        if (length < 0) length = spec.data_length;
        if (scale < 0.0) scale = spec.input_scale;
    }
    if (length < 0) throw UsageError("--length is required for plant files");
    if (scale < 0.0) scale = 1.0;
    if (period <= 0.0) period = registry_period;

    std::string out = args.out.empty() ? join_path(default_out_dir(), "data.csv") : args.out;
    ensure_dir(std::filesystem::path(out).parent_path().string().empty()
                   ? "."
                   : std::filesystem::path(out).parent_path().string());

    SampleLedger ledger;
    DataRecord record;
    if (args.depth > 0) {
        try {
            record = collect_certified(plant, length, args.depth, scale, args.seed, 5, ledger);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "collect: %s\n", e.what());
            return kExitFailure;
        }
        const RankCertificate cert = rank_certificate(HankelMatrix(record, args.depth), plant.n());
        std::printf("certified depth %d: rank %d of %d required\n", args.depth, cert.rank,
                    cert.required);
    } else {
        record = collect_excitation_data(plant, length, scale, args.seed, ledger);
    }
    write_record_csv(out, record);
    std::printf("collected %d samples (%.6g s simulated at %.6g s per sample) -> %s\n",
                record.length(), record.length() * period, period, out.c_str());
    std::printf("physical_samples=%lld\n", static_cast<long long>(ledger.value()));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// certify

struct CertifyArgs {
    std::string data;
    int depth = 0;
    int state_dim = 0;
};

int cmd_certify(const CertifyArgs& args) {
    const DataRecord record = load_record(args.data);
    if (args.depth <= 0) throw UsageError("--depth must be positive");
    if (record.length() < args.depth)
        throw UsageError("record of length " + std::to_string(record.length()) +
                         " is shorter than depth " + std::to_string(args.depth));
    const HankelMatrix h(record, args.depth);
    const RankCertificate cert = rank_certificate(h, args.state_dim);
    std::printf("rank=%d required=%d sigma_min=%s sigma_max=%s threshold=%s\n", cert.rank,
                cert.required, format_value(cert.sigma_min).c_str(),
                format_value(cert.sigma_max).c_str(), format_value(cert.threshold).c_str());
    if (cert.companion_rank >= 0) std::printf("companion_rank=%d\n", cert.companion_rank);
    std::printf("certificate: %s\n", cert.ok ? "PASS" : "FAIL");
    return cert.ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
    std::string data;
    int depth = 0;
    int t0 = 0;
    std::string theta;
    int count = 1;
    double sigma = 0.5;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out_prefix;
};

int cmd_generate(const GenerateArgs& args) {
    const DataRecord record = load_record(args.data);
    if (args.depth <= 0) throw UsageError("--depth must be positive");
    const int m = static_cast<int>(record.u.rows());
    const int q = static_cast<int>(record.y.rows());

    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(m, q);
    if (!args.theta.empty()) {
        try {
            theta = read_matrix_csv(args.theta);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        if (theta.rows() != m || theta.cols() != q)
            throw UsageError("--theta must be " + std::to_string(m) + "x" + std::to_string(q) +
                             " for this record");
    }

    std::string prefix =
        args.out_prefix.empty() ? join_path(default_out_dir(), "traj") : args.out_prefix;
    const std::string parent = std::filesystem::path(prefix).parent_path().string();
    ensure_dir(parent.empty() ? "." : parent);

    const HankelMatrix h(record, args.depth);
    std::vector<Trajectory> batch;
    if (args.t0 == 0) {
        const StateGenerator gen(h, theta);
        batch = gen.generate_batch(args.count, args.sigma, args.seed,
                                   historic_state_sampler(record), args.jobs);
    } else {
        const OutputGenerator gen(h, theta, args.t0);
        batch = gen.generate_batch(args.count, args.sigma, args.seed,
                                   historic_window_sampler(record, args.t0), args.jobs);
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "_%03zu.csv", i);
        write_trajectory_csv(prefix + name, batch[i]);
    }
    const int len = batch.empty() ? 0 : batch.front().length();
    std::printf("generated %zu trajectories of length %d -> %s_*.csv\n", batch.size(), len,
                prefix.c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
    std::string system;
    std::string data;
    int depth = 0;
    int t0 = 0;
    std::string theta = "random";
    double theta_scale = 0.3;
    int trials = 50;
    double tol = 1e-6;
    std::uint64_t seed = 1;
    std::string out;
};

void report_worst_entry(const EquivalenceResult& res) {
    const Trajectory& got = res.worst_generated;
    const Trajectory& want = res.worst_reference;
    double worst = -1.0;
    char signal = 'u';
    int row = 0, step = 0;
    for (int k = 0; k < want.length(); ++k) {
        for (int i = 0; i < want.u.rows(); ++i) {
            const double d = std::abs(got.u(i, k) - want.u(i, k));
            if (d > worst) { worst = d; signal = 'u'; row = i; step = k; }
        }
        for (int i = 0; i < want.y.rows(); ++i) {
            const double d = std::abs(got.y(i, k) - want.y(i, k));
            if (d > worst) { worst = d; signal = 'y'; row = i; step = k; }
        }
    }
    std::printf("worst entry: %c_%d at step %d (abs gap %s)\n", signal, row, step,
                format_value(worst).c_str());
}

int cmd_verify(const VerifyArgs& args) {
    const LtiSystem plant = resolve_system(args.system);
    const DataRecord record = load_record(args.data);
    if (args.depth <= 0) throw UsageError("--depth must be positive");

    Eigen::MatrixXd fixed;
    const Eigen::MatrixXd* fixed_ptr = nullptr;
    if (args.theta != "random") {
        try {
            fixed = read_matrix_csv(args.theta);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        fixed_ptr = &fixed;
    }

    EquivalenceResult res;
    if (args.t0 == 0)
        res = verify_state_equivalence(plant, record, args.depth, args.trials, args.seed,
                                       args.theta_scale, fixed_ptr);
    else
        res = verify_output_equivalence(plant, record, args.depth, args.t0, args.trials, args.seed,
                                        args.theta_scale, fixed_ptr);

    std::printf("max relative error over %d trials: %s (tolerance %s)\n", res.trials,
                format_value(res.max_rel_err).c_str(), format_value(args.tol).c_str());
    if (args.trials == 0 || res.max_rel_err <= args.tol) {
        std::printf("verify: PASS\n");
        return kExitOk;
    }
    const std::string out = args.out.empty() ? default_out_dir() : args.out;
    ensure_dir(out);
    const std::string got_path = join_path(out, "verify_worst_generated.csv");
    const std::string want_path = join_path(out, "verify_worst_reference.csv");
    write_trajectory_csv(got_path, res.worst_generated);
    write_trajectory_csv(want_path, res.worst_reference);
    report_worst_entry(res);
    std::printf("offender written to %s and %s\n", got_path.c_str(), want_path.c_str());
    std::printf("verify: FAIL\n");
    return kExitFailure;
}

// ---------------------------------------------------------------------------
// train / compare configuration plumbing

/** One scalar setting sourced from (highest priority first) flag, config file, registry. */
struct Overrides {
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) != 0; }
    const std::string& get(const std::string& key) const { return values.at(key); }

    int get_int(const std::string& key) const {
        return static_cast<int>(parse_value(get(key), "config key " + key));
    }
    double get_double(const std::string& key) const {
        return parse_value(get(key), "config key " + key);
    }
    std::uint64_t get_seed(const std::string& key) const {
        const double v = parse_value(get(key), "config key " + key);
        return static_cast<std::uint64_t>(v);
    }
    bool get_bool(const std::string& key) const {
        const std::string& v = get(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw UsageError("config key " + key + " expects a boolean, got '" + v + "'");
    }
};

const std::set<std::string> kKnownKeys = {
    "experiment", "mode",        "episodes",   "batch_q",   "horizon_k", "t0",
    "alpha",      "cost_weight", "sigma0",     "sigma_decay", "sigma_min", "ceiling",
    "seed",       "jobs",        "baseline",   "test_states", "test_box",  "data",
    "length",     "scale",       "out",        "sample_q",  "paper_scale"};

Overrides load_config(const std::string& config_path,
                      const std::map<std::string, std::string>& flag_values) {
    Overrides o;
    if (!config_path.empty()) {
        std::map<std::string, std::string> file_values;
        try {
            file_values = parse_config_file(config_path);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        for (const auto& [key, value] : file_values) {
            if (!kKnownKeys.count(key)) throw UsageError("unknown config key: " + key);
            o.values[key] = value;
        }
    }
    for (const auto& [key, value] : flag_values) o.values[key] = value;  // flags win
    return o;
}

struct PreparedRun {
    ExperimentSpec spec;
    TrainingConfig tc;
    std::string out_dir;
    std::string data_path;  //!< external record, empty to collect fresh
    int data_length;
    double input_scale;
};

PreparedRun prepare_run(const Overrides& o, bool need_mode) {
    if (!o.has("experiment")) throw UsageError("missing config key: experiment");
    PreparedRun run{experiment(o.get("experiment")), TrainingConfig{}, "", "", 0, 1.0};
    const ExperimentSpec& spec = run.spec;

    TrainingConfig tc;
    tc.horizon_k = spec.horizon_k;
    tc.t0 = spec.t0;
    tc.learning_rate = spec.learning_rate;
    tc.cost_weight = spec.cost_weight;
    tc.sigma0 = spec.sigma0;
    tc.sigma_decay = spec.sigma_decay;
    tc.sigma_min = spec.sigma_min;
    tc.episodes = spec.episodes;
    tc.batch_q = spec.batch_q;
    tc.cost_ceiling = spec.cost_ceiling;
    tc.test_box = spec.test_box;

    if (need_mode) {
        if (!o.has("mode")) throw UsageError("missing config key: mode");
        const std::string& mode = o.get("mode");
        if (mode == "sample") tc.mode = TrainingMode::sample;
        else if (mode == "generate") tc.mode = TrainingMode::generate;
        else throw UsageError("config key mode expects sample|generate, got '" + mode + "'");
    }

    if (o.has("episodes")) tc.episodes = o.get_int("episodes");
    if (o.has("batch_q")) tc.batch_q = o.get_int("batch_q");
    if (o.has("horizon_k")) tc.horizon_k = o.get_int("horizon_k");
    if (o.has("t0")) tc.t0 = o.get_int("t0");
    if (o.has("alpha")) tc.learning_rate = o.get_double("alpha");
    if (o.has("cost_weight")) tc.cost_weight = o.get_double("cost_weight");
    if (o.has("sigma0")) tc.sigma0 = o.get_double("sigma0");
    if (o.has("sigma_decay")) tc.sigma_decay = o.get_double("sigma_decay");
    if (o.has("sigma_min")) tc.sigma_min = o.get_double("sigma_min");
    if (o.has("ceiling")) tc.cost_ceiling = o.get_double("ceiling");
    if (o.has("seed")) tc.seed = o.get_seed("seed");
    if (o.has("jobs")) tc.jobs = o.get_int("jobs");
    if (o.has("baseline")) tc.use_baseline = o.get_bool("baseline");
    if (o.has("test_states")) tc.test_states = o.get_int("test_states");
    if (o.has("test_box")) tc.test_box = o.get_double("test_box");

    run.tc = tc;
    run.out_dir = o.has("out") ? o.get("out") : default_out_dir();
    run.data_path = o.has("data") ? o.get("data") : "";
    run.data_length = o.has("length") ? o.get_int("length") : spec.data_length;
    run.input_scale = o.has("scale") ? o.get_double("scale") : spec.input_scale;
    return run;
}

void print_theta(const Eigen::MatrixXd& theta) {
    std::printf("theta (%d x %d):\n", static_cast<int>(theta.rows()),
                static_cast<int>(theta.cols()));
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
        std::string line;
        for (Eigen::Index j = 0; j < theta.cols(); ++j) {
            if (j) line += ",";
            line += format_value(theta(i, j));
        }
        std::printf("  %s\n", line.c_str());
    }
}

constexpr std::uint64_t kCollectSeedKey = 0xc011ec7ULL;

int cmd_train(const Overrides& o) {
    PreparedRun run = prepare_run(o, /*need_mode=*/true);
    ensure_dir(run.out_dir);

    const int depth = run.tc.t0 == 0 ? run.tc.horizon_k : run.tc.horizon_k + run.tc.t0 - 1;
    SampleLedger collect_ledger;
    DataRecord record;
    if (!run.data_path.empty()) {
        record = load_record(run.data_path);
        collect_ledger.add(record.length());
    } else {
        record = collect_certified(run.spec.plant, run.data_length, depth, run.input_scale,
                                   mix_seed(run.tc.seed, kCollectSeedKey), 5, collect_ledger);
    }

    SampleLedger rollout_ledger;
    SampleLedger& billed =
        run.tc.mode == TrainingMode::generate ? collect_ledger : rollout_ledger;
    const TrainingLog log = train(run.spec.plant, record, run.tc, billed);

    const std::string log_path = join_path(run.out_dir, "training_log.csv");
    write_training_log_csv(log_path, log);

    if (!log.rows.empty()) {
        const EpisodeRow& last = log.rows.back();
        std::printf("episodes=%d final_mean_cost=%s\n", static_cast<int>(log.rows.size()),
                    format_value(last.mean_cost).c_str());
    } else {
        std::printf("episodes=0 (no updates applied)\n");
    }
    std::printf("final_test_cost=%s\n", format_value(log.final_test_cost).c_str());
    std::printf("physical_samples=%lld\n", static_cast<long long>(billed.value()));
    const std::int64_t generated =
        log.rows.empty() ? 0 : log.rows.back().generated_samples;
    std::printf("generated_samples=%lld\n", static_cast<long long>(generated));
    print_theta(log.final_theta);
    std::printf("log -> %s\n", log_path.c_str());
    return kExitOk;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> out;
    for (const std::string& field : split_csv_line(text)) {
        if (field.empty()) continue;
        out.push_back(static_cast<int>(parse_value(field, what)));
    }
    return out;
}

int cmd_compare(const Overrides& o) {
    PreparedRun run = prepare_run(o, /*need_mode=*/false);
    ensure_dir(run.out_dir);

    ComparisonOverrides cmp;
    cmp.episodes = o.has("episodes") ? o.get_int("episodes") : -1;
    cmp.generate_batch = o.has("batch_q") ? o.get_int("batch_q") : -1;
    if (o.has("sample_q")) cmp.sample_q = parse_int_list(o.get("sample_q"), "config key sample_q");
    cmp.paper_scale = o.has("paper_scale") && o.get_bool("paper_scale");
    cmp.seed = run.tc.seed;
    cmp.jobs = run.tc.jobs;
    cmp.use_baseline = run.tc.use_baseline;
    cmp.out_dir = run.out_dir;

    const ComparisonReport report = run_comparison(run.spec, cmp);
    for (const MethodResult& m : report.methods) {
        if (m.diverged) {
            std::printf("%-12s diverged at episode %d (physical_samples=%lld, %.1f s)\n",
                        m.method.c_str(), m.divergence_episode,
                        static_cast<long long>(m.physical_samples), m.wall_s);
            continue;
        }
        const double final_train = m.log.rows.empty() ? 0.0 : m.log.rows.back().mean_cost;
        std::printf("%-12s physical_samples=%-10lld final_train_cost=%-14s "
                    "final_test_cost=%-14s (%.1f s)\n",
                    m.method.c_str(), static_cast<long long>(m.physical_samples),
                    format_value(final_train).c_str(),
                    format_value(m.log.final_test_cost).c_str(), m.wall_s);
    }
    std::printf("max_episode_gap=%s final_test_gap=%s\n",
                format_value(report.max_episode_gap).c_str(),
                format_value(report.final_test_gap).c_str());
    std::printf("reports -> %s\n", run.out_dir.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-driven trajectory generation and policy-gradient training"};
    app.require_subcommand(1);

    CollectArgs collect_args;
    CLI::App* collect = app.add_subcommand(
        "collect", "Excite a plant open loop and record the run to CSV");
    collect->add_option("--system", collect_args.system,
                        "Builtin experiment name or plant file")->required();
    collect->add_option("--length", collect_args.length,
                        "Samples to record (builtin default: registry length)");
    collect->add_option("--scale", collect_args.scale, "Input amplitude bound");
    collect->add_option("--period", collect_args.period, "Seconds per sample (reporting)");
    collect->add_option("--depth", collect_args.depth,
                        "Certify this window depth, redrawing on failure");
    collect->add_option("--seed", collect_args.seed, "RNG seed");
    collect->add_option("--out", collect_args.out, "Output CSV path");

    CertifyArgs certify_args;
    CLI::App* certify = app.add_subcommand(
        "certify", "Check the rank condition of a record at a window depth");
    certify->add_option("--data", certify_args.data, "Record CSV")->required();
    certify->add_option("--depth", certify_args.depth, "Window depth")->required();
    certify->add_option("--state-dim", certify_args.state_dim, "Plant state dimension")
        ->required();

    GenerateArgs generate_args;
    CLI::App* generate = app.add_subcommand(
        "generate", "Generate closed-loop trajectories from a record alone");
    generate->add_option("--data", generate_args.data, "Record CSV")->required();
    generate->add_option("--depth", generate_args.depth, "Trajectory length T")->required();
    generate->add_option("--t0", generate_args.t0,
                         "Window length for output feedback (0 = state feedback)");
    generate->add_option("--theta", generate_args.theta,
                         "Gain matrix CSV (default: zero gain)");
    generate->add_option("--count", generate_args.count, "Trajectories to generate");
    generate->add_option("--sigma", generate_args.sigma, "Perturbation standard deviation");
    generate->add_option("--seed", generate_args.seed, "RNG seed");
    generate->add_option("--jobs", generate_args.jobs, "Worker threads");
    generate->add_option("--out", generate_args.out_prefix, "Output path prefix");

    VerifyArgs verify_args;
    CLI::App* verify = app.add_subcommand(
        "verify", "Compare record-based generation against the true plant");
    verify->add_option("--system", verify_args.system,
                       "Builtin experiment name or plant file (the oracle)")->required();
    verify->add_option("--data", verify_args.data, "Record CSV")->required();
    verify->add_option("--depth", verify_args.depth, "Trajectory length T")->required();
    verify->add_option("--t0", verify_args.t0,
                       "Window length for output feedback (0 = state feedback)");
    verify->add_option("--theta", verify_args.theta,
                       "Gain matrix CSV or 'random' for per-trial draws");
    verify->add_option("--theta-scale", verify_args.theta_scale,
                       "Entry bound for random gains");
    verify->add_option("--trials", verify_args.trials, "Seeded draws to compare");
    verify->add_option("--tol", verify_args.tol, "Max relative error accepted");
    verify->add_option("--seed", verify_args.seed, "RNG seed");
    verify->add_option("--out", verify_args.out, "Directory for offender dumps on failure");

    std::string train_config, compare_config;
    std::map<std::string, std::string> train_flags, compare_flags;

    auto add_run_flags = [](CLI::App* cmd, std::string& config,
                            std::map<std::string, std::string>& flags, bool with_mode) {
        cmd->add_option("--config", config, "key=value configuration file");
        auto capture = [&flags](const std::string& key) {
            return [&flags, key](const std::string& value) { flags[key] = value; };
        };
        cmd->add_option_function<std::string>("--experiment", capture("experiment"),
                                              "Builtin experiment name");
        if (with_mode)
            cmd->add_option_function<std::string>("--mode", capture("mode"),
                                                  "sample | generate");
        cmd->add_option_function<std::string>("--episodes", capture("episodes"),
                                              "Training episodes");
        cmd->add_option_function<std::string>("--batch-q", capture("batch_q"),
                                              "Trajectories per episode");
        cmd->add_option_function<std::string>("--seed", capture("seed"), "RNG seed");
        cmd->add_option_function<std::string>("--jobs", capture("jobs"), "Worker threads");
        cmd->add_option_function<std::string>("--baseline", capture("baseline"),
                                              "Subtract the batch-mean baseline (true/false)");
        cmd->add_option_function<std::string>("--out", capture("out"), "Output directory");
        if (with_mode) {
            cmd->add_option_function<std::string>("--horizon", capture("horizon_k"),
                                                  "Cost window length K");
            cmd->add_option_function<std::string>("--t0", capture("t0"),
                                                  "Output-feedback window length");
            cmd->add_option_function<std::string>("--alpha", capture("alpha"), "Learning rate");
            cmd->add_option_function<std::string>("--cost-weight", capture("cost_weight"),
                                                  "Input weight in the stage cost");
            cmd->add_option_function<std::string>("--sigma0", capture("sigma0"),
                                                  "Initial exploration scale");
            cmd->add_option_function<std::string>("--sigma-decay", capture("sigma_decay"),
                                                  "Exploration decay per episode");
            cmd->add_option_function<std::string>("--sigma-min", capture("sigma_min"),
                                                  "Exploration floor");
            cmd->add_option_function<std::string>("--ceiling", capture("ceiling"),
                                                  "Divergence guard on the mean cost");
            cmd->add_option_function<std::string>("--test-states", capture("test_states"),
                                                  "Final evaluation draws");
            cmd->add_option_function<std::string>("--test-box", capture("test_box"),
                                                  "Half width of the test state box");
            cmd->add_option_function<std::string>("--data", capture("data"),
                                                  "Use this record CSV instead of collecting");
            cmd->add_option_function<std::string>("--length", capture("length"),
                                                  "Record length when collecting");
            cmd->add_option_function<std::string>("--scale", capture("scale"),
                                                  "Excitation amplitude when collecting");
        } else {
            cmd->add_option_function<std::string>(
                "--sample-q", capture("sample_q"),
                "Comma list of sampling-arm batch sizes (default 10,100 and the "
                "generating batch)");
            cmd->add_flag_function(
                "--paper-scale",
                [&flags](std::int64_t) { flags["paper_scale"] = "true"; },
                "Use the full published batch size for the generating arm");
        }
    };

    CLI::App* train_cmd = app.add_subcommand(
        "train", "Train a linear policy with the score-function gradient");
    add_run_flags(train_cmd, train_config, train_flags, /*with_mode=*/true);

    CLI::App* compare_cmd = app.add_subcommand(
        "compare", "Train both modes from one seed and report their gap");
    add_run_flags(compare_cmd, compare_config, compare_flags, /*with_mode=*/false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (collect->parsed()) return cmd_collect(collect_args);
        if (certify->parsed()) return cmd_certify(certify_args);
        if (generate->parsed()) return cmd_generate(generate_args);
        if (verify->parsed()) return cmd_verify(verify_args);
        if (train_cmd->parsed()) return cmd_train(load_config(train_config, train_flags));
        if (compare_cmd->parsed()) return cmd_compare(load_config(compare_config, compare_flags));
    } catch (const TrainingDivergence& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
