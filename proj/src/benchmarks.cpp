#include "trajgen/benchmarks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "trajgen/io.hpp"
#include "trajgen/random.hpp"

namespace trajgen {

namespace {

constexpr std::uint64_t kCollectKey = 0xc011ec7ULL;

// Branch impedances in ohms at 12.66 kV; converted below to per-unit on a
// 10 MVA base.  The widely circulated radial test feeder table.
struct RawBranch {
    int from, to;
    double r_ohm, x_ohm;
};

constexpr RawBranch kFeeder33[] = {
    {1, 2, 0.0922, 0.0477},   {2, 3, 0.4930, 0.2511},   {3, 4, 0.3660, 0.1864},
    {4, 5, 0.3811, 0.1941},   {5, 6, 0.8190, 0.7070},   {6, 7, 0.1872, 0.6188},
    {7, 8, 1.7114, 1.2351},   {8, 9, 1.0300, 0.7400},   {9, 10, 1.0400, 0.7400},
    {10, 11, 0.1966, 0.0650}, {11, 12, 0.3744, 0.1238}, {12, 13, 1.4680, 1.1550},
    {13, 14, 0.5416, 0.7129}, {14, 15, 0.5910, 0.5260}, {15, 16, 0.7463, 0.5450},
    {16, 17, 1.2890, 1.7210}, {17, 18, 0.7320, 0.5740}, {2, 19, 0.1640, 0.1565},
    {19, 20, 1.5042, 1.3554}, {20, 21, 0.4095, 0.4784}, {21, 22, 0.7089, 0.9373},
    {3, 23, 0.4512, 0.3083},  {23, 24, 0.8980, 0.7091}, {24, 25, 0.8960, 0.7011},
    {6, 26, 0.2030, 0.1034},  {26, 27, 0.2842, 0.1447}, {27, 28, 1.0590, 0.9337},
    {28, 29, 0.8042, 0.7006}, {29, 30, 0.5075, 0.2585}, {30, 31, 0.9744, 0.9630},
    {31, 32, 0.3105, 0.3619}, {32, 33, 0.3410, 0.5302},
};

constexpr double kZBase = 12.66e3 * 12.66e3 / 10e6;  // ohm

// Sensor/actuator placement: 20 buses chosen so that every unmonitored bus is
// within two hops of a monitored one and at least one sits exactly two hops
// away, which puts the lag of the partially measured plant at 3.
constexpr int kMonitored33[] = {2, 3, 4, 5, 6, 7, 8, 12, 13, 14, 15, 16,
                                19, 20, 23, 26, 27, 31, 32, 33};

void validate_network(const NetworkData& net) {
    if (net.buses < 2) throw std::invalid_argument("network: need at least two buses");
    if (net.ref < 1 || net.ref > net.buses) throw std::invalid_argument("network: reference bus out of range");
    if (static_cast<int>(net.branches.size()) != net.buses - 1)
        throw std::invalid_argument("network: a radial feeder over N buses needs exactly N-1 branches");
    std::vector<int> parent(static_cast<std::size_t>(net.buses) + 1);
    std::iota(parent.begin(), parent.end(), 0);
    const std::function<int(int)> find = [&](int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    };
    for (const auto& br : net.branches) {
        if (br.from < 1 || br.from > net.buses || br.to < 1 || br.to > net.buses || br.from == br.to)
            throw std::invalid_argument("network: branch endpoints out of range");
        if (!(br.x_pu > 0.0)) throw std::invalid_argument("network: branch reactance must be positive");
        if (br.r_pu < 0.0) throw std::invalid_argument("network: branch resistance must be nonnegative");
        const int ra = find(br.from), rb = find(br.to);
        if (ra == rb) throw std::invalid_argument("network: branches contain a cycle");
        parent[static_cast<std::size_t>(ra)] = rb;
    }
    const auto check_set = [&](const std::vector<int>& ids, const char* label) {
        std::set<int> seen;
        for (int b : ids) {
            if (b < 1 || b > net.buses || b == net.ref)
                throw std::invalid_argument(std::string("network: ") + label + " bus out of range or equal to reference");
            if (!seen.insert(b).second)
                throw std::invalid_argument(std::string("network: duplicate ") + label + " bus");
        }
    };
    check_set(net.measured, "measured");
    check_set(net.controlled, "controlled");
}

std::vector<int> all_non_ref(const NetworkData& net) {
    std::vector<int> out;
    for (int b = 1; b <= net.buses; ++b)
        if (b != net.ref) out.push_back(b);
    return out;
}

std::vector<int> parse_bus_list(const std::string& value, const std::string& context) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ';')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw std::runtime_error(context + ": '" + item + "' is not a bus id");
        }
    }
    return out;
}

}  // namespace

LtiSystem batch_reactor(bool full_state) {
    Eigen::MatrixXd A(4, 4), B(4, 2);
    A << 1.178, 0.001, 0.511, -0.403,
        -0.051, 0.661, -0.011, 0.061,
        0.076, 0.335, 0.560, 0.382,
        0.000, 0.335, 0.089, 0.849;
    B << 0.004, -0.087,
        0.467, 0.001,
        0.213, -0.235,
        0.213, -0.016;
    Eigen::MatrixXd C;
    if (full_state) {
        C = Eigen::MatrixXd::Identity(4, 4);
    } else {
        C = Eigen::MatrixXd::Zero(2, 4);
        C(0, 0) = 1.0;
        C(1, 1) = 1.0;
    }
    return LtiSystem(A, B, C);
}

NetworkData load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path + " for reading");
    NetworkData net;
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw std::runtime_error(path + ":1: empty file");
    ++lineno;
    {
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error(path + ":1: header needs key=value fields");
            const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
            if (key == "buses") net.buses = std::stoi(val);
            else if (key == "ref") net.ref = std::stoi(val);
            else throw std::runtime_error(path + ":1: unknown header field '" + key + "'");
        }
    }
    bool saw_table_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (line.rfind("measured=", 0) == 0) {
            net.measured = parse_bus_list(line.substr(9), path + ":" + std::to_string(lineno));
            continue;
        }
        if (line.rfind("controlled=", 0) == 0) {
            net.controlled = parse_bus_list(line.substr(11), path + ":" + std::to_string(lineno));
            continue;
        }
        if (!saw_table_header) {
            if (line.rfind("from,to,", 0) != 0)
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": expected column header from,to,r_pu,x_pu");
            saw_table_header = true;
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 4)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 4 fields");
        NetworkBranch br;
        const std::string ctx = path + ":" + std::to_string(lineno);
        br.from = static_cast<int>(parse_value(fields[0], ctx));
        br.to = static_cast<int>(parse_value(fields[1], ctx));
        br.r_pu = parse_value(fields[2], ctx);
        br.x_pu = parse_value(fields[3], ctx);
        net.branches.push_back(br);
    }
    if (net.measured.empty()) net.measured = all_non_ref(net);
    if (net.controlled.empty()) net.controlled = all_non_ref(net);
    validate_network(net);
    return net;
}

void write_network(const std::string& path, const NetworkData& net) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "buses=" << net.buses << ",ref=" << net.ref << "\n";
    const auto dump_set = [&](const char* label, const std::vector<int>& ids) {
        out << label << "=";
        for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? ";" : "") << ids[i];
        out << "\n";
    };
    dump_set("measured", net.measured);
    dump_set("controlled", net.controlled);
    out << "from,to,r_pu,x_pu\n";
    for (const auto& br : net.branches)
        out << br.from << "," << br.to << "," << format_value(br.r_pu) << "," << format_value(br.x_pu) << "\n";
}

NetworkData ieee33_network() {
    NetworkData net;
    net.buses = 33;
    net.ref = 1;
    for (const auto& raw : kFeeder33)
        net.branches.push_back({raw.from, raw.to, raw.r_ohm / kZBase, raw.x_ohm / kZBase});
    net.measured.assign(std::begin(kMonitored33), std::end(kMonitored33));
    net.controlled = net.measured;
    validate_network(net);
    return net;
}

Eigen::MatrixXd reactance_sensitivity(const NetworkData& net) {
    validate_network(net);
    const int n = net.buses - 1;
    // Adjacency with branch reactances, then root the tree at the reference.
    std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(net.buses) + 1);
    for (const auto& br : net.branches) {
        adj[static_cast<std::size_t>(br.from)].push_back({br.to, br.x_pu});
        adj[static_cast<std::size_t>(br.to)].push_back({br.from, br.x_pu});
    }
    std::vector<int> parent(static_cast<std::size_t>(net.buses) + 1, 0);
    std::vector<double> up_x(static_cast<std::size_t>(net.buses) + 1, 0.0);
    std::vector<int> order{net.ref};
    parent[static_cast<std::size_t>(net.ref)] = net.ref;
    for (std::size_t head = 0; head < order.size(); ++head) {
        const int b = order[head];
        for (const auto& [nb, x] : adj[static_cast<std::size_t>(b)]) {
            if (parent[static_cast<std::size_t>(nb)] == 0 && nb != net.ref) {
                parent[static_cast<std::size_t>(nb)] = b;
                up_x[static_cast<std::size_t>(nb)] = x;
                order.push_back(nb);
            }
        }
    }
    // Path from the reference to each bus as an ordered list of reactances.
    std::vector<std::vector<double>> path_x(static_cast<std::size_t>(net.buses) + 1);
    std::vector<std::vector<int>> path_bus(static_cast<std::size_t>(net.buses) + 1);
    for (int b = 1; b <= net.buses; ++b) {
        if (b == net.ref) continue;
        std::vector<double> xs;
        std::vector<int> bs;
        for (int cur = b; cur != net.ref; cur = parent[static_cast<std::size_t>(cur)]) {
            xs.push_back(up_x[static_cast<std::size_t>(cur)]);
            bs.push_back(cur);
        }
        std::reverse(xs.begin(), xs.end());
        std::reverse(bs.begin(), bs.end());
        path_x[static_cast<std::size_t>(b)] = std::move(xs);
        path_bus[static_cast<std::size_t>(b)] = std::move(bs);
    }
    const std::vector<int> ids = all_non_ref(net);
    Eigen::MatrixXd X(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const auto& bi = path_bus[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])];
            const auto& bj = path_bus[static_cast<std::size_t>(ids[static_cast<std::size_t>(j)])];
            const auto& xi = path_x[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])];
            double common = 0.0;
            for (std::size_t k = 0; k < std::min(bi.size(), bj.size()); ++k) {
                if (bi[k] != bj[k]) break;
                common += xi[k];
            }
            X(i, j) = X(j, i) = 2.0 * common;
        }
    }
    return X;
}

LtiSystem lindistflow_system(const NetworkData& net, double control_gain_dt, double relaxation) {
    validate_network(net);
    if (!(control_gain_dt > 0.0)) throw std::invalid_argument("lindistflow_system: control_gain_dt must be positive");
    if (relaxation < 0.0 || relaxation >= 1.0)
        throw std::invalid_argument("lindistflow_system: relaxation must lie in [0, 1)");
    const int n = net.buses - 1;
    const std::vector<int> ids = all_non_ref(net);
    std::vector<int> index(static_cast<std::size_t>(net.buses) + 1, -1);
    for (int i = 0; i < n; ++i) index[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])] = i;

    const Eigen::MatrixXd X = reactance_sensitivity(net);

    // Grounded Laplacian with susceptance weights; branches touching the
    // reference contribute only to the diagonal, so the matrix is positive
    // definite and the relaxed A is strictly stable.
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
    for (const auto& br : net.branches) {
        const double w = 1.0 / br.x_pu;
        const int i = index[static_cast<std::size_t>(br.from)];
        const int j = index[static_cast<std::size_t>(br.to)];
        if (i >= 0) lap(i, i) += w;
        if (j >= 0) lap(j, j) += w;
        if (i >= 0 && j >= 0) {
            lap(i, j) -= w;
            lap(j, i) -= w;
        }
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    if (relaxation > 0.0) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
        const double lmax = eig.eigenvalues()(n - 1);
        A -= (relaxation / lmax) * lap;
    }

    Eigen::MatrixXd B(n, static_cast<int>(net.controlled.size()));
    for (std::size_t c = 0; c < net.controlled.size(); ++c)
        B.col(static_cast<int>(c)) = control_gain_dt * X.col(index[static_cast<std::size_t>(net.controlled[c])]);

    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(static_cast<int>(net.measured.size()), n);
    for (std::size_t r = 0; r < net.measured.size(); ++r)
        C(static_cast<int>(r), index[static_cast<std::size_t>(net.measured[r])]) = 1.0;

    return LtiSystem(A, B, C);
}

ExperimentSpec experiment(const std::string& name) {
    if (name == "reactor_state") {
        return ExperimentSpec{name, batch_reactor(true), 0, 30, 93, 1.0, 0.1, 0.1,
                              1e-7, 0.5, 0.99, 0.01, 400, 100, 1e15, 1.0, 1200};
    }
    if (name == "reactor_partial") {
        return ExperimentSpec{name, batch_reactor(false), 2, 30, 96, 1.0, 0.1, 0.1,
                              1e-25, 0.5, 0.99, 0.01, 400, 100, 1e15, 1.0, 1000};
    }
    if (name == "voltage_state") {
        NetworkData net = ieee33_network();
        std::vector<int> all;
        for (int b = 2; b <= net.buses; ++b) all.push_back(b);
        net.measured = all;
        net.controlled = all;
        return ExperimentSpec{name, lindistflow_system(net, 1.0), 0, 20, 791, 1.0, 1.0, 0.3,
                              1e-7, 0.5, 0.99, 0.01, 500, 100, 1e9, 1.0, 1000};
    }
    if (name == "voltage_partial") {
        return ExperimentSpec{name, lindistflow_system(ieee33_network(), 1.0), 3, 20, 493, 1.0, 1.0, 0.3,
                              1e-8, 0.5, 0.99, 0.01, 500, 100, 1e9, 1.0, 1000};
    }
    throw std::invalid_argument("unknown experiment '" + name + "'; known: reactor_state, reactor_partial, voltage_state, voltage_partial");
}

std::vector<std::string> experiment_names() {
    return {"reactor_state", "reactor_partial", "voltage_state", "voltage_partial"};
}

ComparisonReport run_comparison(const ExperimentSpec& spec, const ComparisonOverrides& cfg) {
    const int T = spec.t0 == 0 ? spec.horizon_k : spec.horizon_k + spec.t0 - 1;
    SampleLedger collect_ledger;
    const DataRecord record = collect_certified(spec.plant, spec.data_length, T, spec.input_scale,
                                                mix_seed(cfg.seed, kCollectKey), 5, collect_ledger);

    const int gen_q = cfg.generate_batch > 0
                          ? cfg.generate_batch
                          : (cfg.paper_scale ? spec.paper_batch_q : spec.batch_q);
    std::vector<int> q_list = cfg.sample_q;
    if (q_list.empty()) q_list = {10, 100, gen_q};
    std::sort(q_list.begin(), q_list.end());
    q_list.erase(std::unique(q_list.begin(), q_list.end()), q_list.end());

    TrainingConfig tc;
    tc.horizon_k = spec.horizon_k;
    tc.episodes = cfg.episodes >= 0 ? cfg.episodes : spec.episodes;
    tc.t0 = spec.t0;
    tc.learning_rate = spec.learning_rate;
    tc.cost_weight = spec.cost_weight;
    tc.sigma0 = spec.sigma0;
    tc.sigma_decay = spec.sigma_decay;
    tc.sigma_min = spec.sigma_min;
    tc.cost_ceiling = spec.cost_ceiling;
    tc.seed = cfg.seed;
    tc.use_baseline = cfg.use_baseline;
    tc.jobs = cfg.jobs;
    tc.test_box = spec.test_box;

    ComparisonReport rep;
    auto train_arm = [&](const std::string& method, TrainingMode mode, int batch,
                         SampleLedger& ledger) {
        MethodResult res;
        res.method = method;
        const auto start = std::chrono::steady_clock::now();
        tc.mode = mode;
        tc.batch_q = batch;
        try {
            res.log = train(spec.plant, record, tc, ledger);
        } catch (const TrainingDivergence& e) {
            res.diverged = true;
            res.divergence_episode = e.episode();
        }
        res.physical_samples = ledger.value();
        res.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rep.methods.push_back(std::move(res));
    };

    train_arm("generate", TrainingMode::generate, gen_q, collect_ledger);
    for (int q : q_list) {
        SampleLedger sample_ledger;
        train_arm("sample_" + std::to_string(q), TrainingMode::sample, q, sample_ledger);
    }

    // Parity against the sampling arm of equal batch size, when both finished.
    const MethodResult& gen_arm = rep.methods.front();
    const MethodResult* peer = nullptr;
    for (const auto& m : rep.methods)
        if (m.method == "sample_" + std::to_string(gen_q)) peer = &m;
    if (peer && !gen_arm.diverged && !peer->diverged) {
        const std::size_t episodes = std::min(gen_arm.log.rows.size(), peer->log.rows.size());
        for (std::size_t e = 0; e < episodes; ++e) {
            const double cs = peer->log.rows[e].mean_cost;
            const double cg = gen_arm.log.rows[e].mean_cost;
            rep.max_episode_gap =
                std::max(rep.max_episode_gap, std::abs(cs - cg) / std::max(std::abs(cs), 1e-12));
        }
        rep.final_test_gap = std::abs(peer->log.final_test_cost - gen_arm.log.final_test_cost) /
                             std::max(std::abs(peer->log.final_test_cost), 1e-12);
    }

    if (!cfg.out_dir.empty()) {
        for (const auto& m : rep.methods)
            if (!m.diverged) write_training_log_csv(cfg.out_dir + "/" + m.method + "_log.csv", m.log);
        std::ofstream out(cfg.out_dir + "/report.csv");
        if (!out) throw std::runtime_error("cannot open " + cfg.out_dir + "/report.csv for writing");
        out << "method,final_train_cost,final_test_cost,physical_samples,wall_s,diverged\n";
        for (const auto& m : rep.methods) {
            const double final_train = m.log.rows.empty() ? 0.0 : m.log.rows.back().mean_cost;
            out << m.method << "," << format_value(final_train) << ","
                << format_value(m.log.final_test_cost) << "," << m.physical_samples << ","
                << format_value(m.wall_s) << "," << (m.diverged ? 1 : 0) << "\n";
        }
        if (peer && !gen_arm.diverged && !peer->diverged) {
            std::ofstream par(cfg.out_dir + "/parity.csv");
            if (!par) throw std::runtime_error("cannot open " + cfg.out_dir + "/parity.csv for writing");
            par << "episode,generate_mean_cost,sample_mean_cost,rel_gap\n";
            const std::size_t episodes = std::min(gen_arm.log.rows.size(), peer->log.rows.size());
            for (std::size_t e = 0; e < episodes; ++e) {
                const double cg = gen_arm.log.rows[e].mean_cost;
                const double cs = peer->log.rows[e].mean_cost;
                par << gen_arm.log.rows[e].episode << "," << format_value(cg) << ","
                    << format_value(cs) << "," << format_value(std::abs(cs - cg) / std::max(std::abs(cs), 1e-12))
                    << "\n";
            }
        }
    }
    return rep;
}

}  // namespace trajgen
