#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "test_support.hpp"
#include "trajgen/benchmarks.hpp"
#include "trajgen/hankel.hpp"
#include "trajgen/io.hpp"

using namespace trajgen;

namespace {

std::filesystem::path temp_dir(const char* tag) {
    const auto dir = std::filesystem::temp_directory_path() / (std::string("trajgen_test_") + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_CASE("reactor plant variants") {
    const LtiSystem full = batch_reactor(true);
    CHECK(full.n() == 4);
    CHECK(full.m() == 2);
    CHECK(full.q() == 4);
    CHECK(full.lag() == 1);
    CHECK(full.A()(0, 0) == 1.178);
    CHECK(full.A()(0, 3) == -0.403);
    CHECK(full.A()(3, 0) == 0.0);
    CHECK(full.B()(1, 0) == 0.467);
    CHECK(full.B()(0, 1) == -0.087);
    CHECK(full.C() == Eigen::MatrixXd::Identity(4, 4));
    // open-loop instability is the whole point of this plant
    CHECK(full.A().eigenvalues().cwiseAbs().maxCoeff() > 1.0);

    const LtiSystem part = batch_reactor(false);
    CHECK(part.q() == 2);
    CHECK(part.lag() == 2);
    CHECK(part.A() == full.A());
    CHECK(part.B() == full.B());
    CHECK(part.C().row(0) == Eigen::RowVector4d(1, 0, 0, 0));
    CHECK(part.C().row(1) == Eigen::RowVector4d(0, 1, 0, 0));
}

TEST_CASE("radial feeder description") {
    const NetworkData net = ieee33_network();
    CHECK(net.buses == 33);
    CHECK(net.ref == 1);
    CHECK(net.branches.size() == 32);
    CHECK(net.measured.size() == 20);
    CHECK(net.controlled == net.measured);
    CHECK(net.measured.front() == 2);
    CHECK(net.measured.back() == 33);

    SUBCASE("branch impedances are per-unit on a 10 MVA, 12.66 kV base") {
        const double z_base = 12.66e3 * 12.66e3 / 10e6;
        CHECK(net.branches[0].from == 1);
        CHECK(net.branches[0].to == 2);
        CHECK(net.branches[0].r_pu == doctest::Approx(0.0922 / z_base).epsilon(1e-12));
        CHECK(net.branches[0].x_pu == doctest::Approx(0.0477 / z_base).epsilon(1e-12));
        for (const auto& br : net.branches) {
            CHECK(br.x_pu > 0.0);
            CHECK(br.r_pu > 0.0);
        }
    }

    SUBCASE("the stored feeder file matches the embedded network") {
        const NetworkData disk = load_network(FEEDER_DATA_FILE);
        CHECK(disk.buses == net.buses);
        CHECK(disk.ref == net.ref);
        CHECK(disk.measured == net.measured);
        CHECK(disk.controlled == net.controlled);
        REQUIRE(disk.branches.size() == net.branches.size());
        for (std::size_t i = 0; i < net.branches.size(); ++i) {
            CHECK(disk.branches[i].from == net.branches[i].from);
            CHECK(disk.branches[i].to == net.branches[i].to);
            CHECK(disk.branches[i].r_pu == net.branches[i].r_pu);
            CHECK(disk.branches[i].x_pu == net.branches[i].x_pu);
        }
    }

    SUBCASE("round trip through a fresh file is exact") {
        const auto dir = temp_dir("feeder");
        const auto path = (dir / "net.csv").string();
        write_network(path, net);
        const NetworkData back = load_network(path);
        CHECK(back.buses == net.buses);
        CHECK(back.measured == net.measured);
        for (std::size_t i = 0; i < net.branches.size(); ++i) {
            CHECK(back.branches[i].x_pu == net.branches[i].x_pu);
        }
    }
}

TEST_CASE("feeder files are validated on load") {
    const auto dir = temp_dir("feederbad");

    SUBCASE("cycles are rejected") {
        const auto path = dir / "cycle.csv";
        write_text(path,
                   "buses=3,ref=1\n"
                   "measured=2\n"
                   "controlled=2\n"
                   "from,to,r_pu,x_pu\n"
                   "1,2,0.1,0.1\n"
                   "2,3,0.1,0.1\n");
        // 2 branches over 3 buses is a tree; make it a cycle by duplication
        CHECK_NOTHROW(load_network(path.string()));
        write_text(path,
                   "buses=3,ref=1\n"
                   "measured=2\n"
                   "controlled=2\n"
                   "from,to,r_pu,x_pu\n"
                   "1,2,0.1,0.1\n"
                   "2,1,0.1,0.1\n");
        CHECK_THROWS_AS(load_network(path.string()), std::invalid_argument);
    }

    SUBCASE("wrong branch count for a spanning tree is rejected") {
        const auto path = dir / "short.csv";
        write_text(path,
                   "buses=4,ref=1\n"
                   "measured=2\n"
                   "controlled=2\n"
                   "from,to,r_pu,x_pu\n"
                   "1,2,0.1,0.1\n"
                   "2,3,0.1,0.1\n");
        CHECK_THROWS_AS(load_network(path.string()), std::invalid_argument);
    }

    SUBCASE("malformed numbers name the file and line") {
        const auto path = dir / "garbled.csv";
        write_text(path,
                   "buses=3,ref=1\n"
                   "measured=2\n"
                   "controlled=2\n"
                   "from,to,r_pu,x_pu\n"
                   "1,2,0.1,0.1\n"
                   "2,3,oops,0.1\n");
        try {
            load_network(path.string());
            FAIL("expected a parse error");
        } catch (const std::exception& e) {
            const std::string msg = e.what();
            CHECK(msg.find("garbled.csv") != std::string::npos);
            CHECK(msg.find("6") != std::string::npos);
        }
    }

    SUBCASE("duplicate measured buses are rejected") {
        const auto path = dir / "dup.csv";
        write_text(path,
                   "buses=3,ref=1\n"
                   "measured=2;2\n"
                   "controlled=2\n"
                   "from,to,r_pu,x_pu\n"
                   "1,2,0.1,0.1\n"
                   "2,3,0.1,0.1\n");
        CHECK_THROWS_AS(load_network(path.string()), std::invalid_argument);
    }

    SUBCASE("a missing file is reported by name") {
        try {
            load_network((dir / "absent.csv").string());
            FAIL("expected an open error");
        } catch (const std::exception& e) {
            CHECK(std::string(e.what()).find("absent.csv") != std::string::npos);
        }
    }
}

TEST_CASE("voltage sensitivity to injected power") {
    SUBCASE("two buses: twice the branch reactance") {
        NetworkData net;
        net.buses = 2;
        net.ref = 1;
        net.branches = {{1, 2, 0.05, 0.2}};
        net.measured = {2};
        net.controlled = {2};
        const Eigen::MatrixXd R = reactance_sensitivity(net);
        REQUIRE(R.rows() == 1);
        CHECK(R(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
    }

    SUBCASE("chain of three: shared path to the root sets the off-diagonal") {
        NetworkData net;
        net.buses = 3;
        net.ref = 1;
        net.branches = {{1, 2, 0.0, 0.1}, {2, 3, 0.0, 0.3}};
        net.measured = {2, 3};
        net.controlled = {2, 3};
        const Eigen::MatrixXd R = reactance_sensitivity(net);
        REQUIRE(R.rows() == 2);
        // rows/cols ordered by bus id over non-reference buses
        CHECK(R(0, 0) == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(R(0, 1) == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(R(1, 0) == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(R(1, 1) == doctest::Approx(0.8).epsilon(1e-12));
    }

    SUBCASE("embedded feeder gives a symmetric positive definite matrix") {
        const Eigen::MatrixXd R = reactance_sensitivity(ieee33_network());
        REQUIRE(R.rows() == 32);
        CHECK((R - R.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
        CHECK(R.minCoeff() > 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(R);
        CHECK(eig.eigenvalues().minCoeff() > 0.0);
        // no entry can exceed its diagonal: the shared path is a subset
        for (int i = 0; i < 32; ++i)
            for (int j = 0; j < 32; ++j) CHECK(R(i, i) + 1e-15 >= R(i, j));
    }
}

TEST_CASE("feeder voltage plant") {
    SUBCASE("partially monitored feeder: 32 states, 20 in and out, lag 3") {
        const LtiSystem sys = lindistflow_system(ieee33_network(), 1.0);
        CHECK(sys.n() == 32);
        CHECK(sys.m() == 20);
        CHECK(sys.q() == 20);
        CHECK(sys.lag() == 3);
        CHECK(sys.A().eigenvalues().cwiseAbs().maxCoeff() < 1.0);
    }

    SUBCASE("fully monitored feeder: square and lag 1") {
        NetworkData net = ieee33_network();
        std::vector<int> all;
        for (int b = 2; b <= 33; ++b) all.push_back(b);
        net.measured = all;
        net.controlled = all;
        const LtiSystem sys = lindistflow_system(net, 1.0);
        CHECK(sys.n() == 32);
        CHECK(sys.m() == 32);
        CHECK(sys.q() == 32);
        CHECK(sys.lag() == 1);
        CHECK(sys.C() == Eigen::MatrixXd::Identity(32, 32));
        CHECK(sys.A().eigenvalues().cwiseAbs().maxCoeff() < 1.0);
    }

    SUBCASE("readout rows select the monitored buses") {
        const NetworkData net = ieee33_network();
        const LtiSystem sys = lindistflow_system(net, 1.0);
        for (std::size_t r = 0; r < net.measured.size(); ++r) {
            // non-reference buses are states in id order: bus b -> state b - 2
            const int col = net.measured[r] - 2;
            CHECK(sys.C()(static_cast<int>(r), col) == 1.0);
            CHECK(sys.C().row(static_cast<int>(r)).sum() == 1.0);
        }
    }

    SUBCASE("control channels push through the sensitivity matrix") {
        const NetworkData net = ieee33_network();
        const LtiSystem sys = lindistflow_system(net, 0.5);
        const Eigen::MatrixXd R = reactance_sensitivity(net);
        const LtiSystem faster = lindistflow_system(net, 1.0);
        // B scales linearly with the control gain and reads columns of R
        CHECK((2.0 * sys.B() - faster.B()).cwiseAbs().maxCoeff() <= 1e-14);
        const int col0 = net.controlled[0] - 2;
        // the first actuator's channel is the matching sensitivity column
        CHECK((faster.B().col(0) - R.col(col0)).cwiseAbs().maxCoeff() <= 1e-14);
    }
}

TEST_CASE("experiment registry") {
    const auto names = experiment_names();
    REQUIRE(names.size() == 4);
    CHECK(names[0] == "reactor_state");
    CHECK(names[1] == "reactor_partial");
    CHECK(names[2] == "voltage_state");
    CHECK(names[3] == "voltage_partial");
    CHECK_THROWS_AS(experiment("reactor"), std::invalid_argument);

    SUBCASE("reactor entries") {
        const ExperimentSpec rs = experiment("reactor_state");
        CHECK(rs.plant.q() == 4);
        CHECK(rs.t0 == 0);
        CHECK(rs.horizon_k == 30);
        CHECK(rs.data_length == 93);
        CHECK(rs.cost_weight == 0.1);
        CHECK(rs.episodes == 400);
        CHECK(rs.batch_q == 100);
        CHECK(rs.paper_batch_q == 1200);
        CHECK(rs.sample_period == 0.1);

        const ExperimentSpec rp = experiment("reactor_partial");
        CHECK(rp.plant.q() == 2);
        CHECK(rp.t0 == 2);
        CHECK(rp.data_length == 96);
        CHECK(rp.paper_batch_q == 1000);
    }

    SUBCASE("voltage entries") {
        const ExperimentSpec vs = experiment("voltage_state");
        CHECK(vs.plant.n() == 32);
        CHECK(vs.plant.q() == 32);
        CHECK(vs.t0 == 0);
        CHECK(vs.horizon_k == 20);
        CHECK(vs.cost_weight == 0.3);
        CHECK(vs.episodes == 500);
        CHECK(vs.paper_batch_q == 1000);
        CHECK(vs.data_length >= min_data_length(32, 32, 20));

        const ExperimentSpec vp = experiment("voltage_partial");
        CHECK(vp.plant.q() == 20);
        CHECK(vp.plant.m() == 20);
        CHECK(vp.t0 == 3);
        CHECK(vp.data_length == 493);
        CHECK(vp.data_length == min_data_length(32, 20, 22));
    }
}

TEST_CASE("comparison harness") {
    ExperimentSpec spec = experiment("reactor_state");
    spec.episodes = 3;
    spec.batch_q = 4;

    ComparisonOverrides cfg;
    cfg.sample_q = {4};
    cfg.seed = 2;

    SUBCASE("arms, ledgers, and parity artifacts") {
        const auto dir = temp_dir("cmp");
        cfg.out_dir = dir.string();
        const ComparisonReport rep = run_comparison(spec, cfg);
        REQUIRE(rep.methods.size() == 2);
        CHECK(rep.methods[0].method == "generate");
        CHECK(rep.methods[1].method == "sample_4");
        CHECK(rep.methods[0].physical_samples == 93);
        CHECK(rep.methods[1].physical_samples == 3LL * 4 * 30);
        CHECK_FALSE(rep.methods[0].diverged);
        CHECK_FALSE(rep.methods[1].diverged);
        CHECK(rep.methods[0].log.rows.size() == 3);
        CHECK(rep.max_episode_gap >= 0.0);
        CHECK(rep.max_episode_gap < 0.05);
        CHECK(rep.final_test_gap < 0.05);
        CHECK(std::filesystem::exists(dir / "generate_log.csv"));
        CHECK(std::filesystem::exists(dir / "sample_4_log.csv"));
        CHECK(std::filesystem::exists(dir / "report.csv"));
        CHECK(std::filesystem::exists(dir / "parity.csv"));

        std::ifstream report(dir / "report.csv");
        std::string header;
        std::getline(report, header);
        CHECK(header == "method,final_train_cost,final_test_cost,physical_samples,wall_s,diverged");
        int lines = 0;
        for (std::string line; std::getline(report, line);)
            if (!line.empty()) ++lines;
        CHECK(lines == 2);
    }

    SUBCASE("default arm list covers desk-scale batches") {
        cfg.sample_q.clear();
        cfg.generate_batch = 5;
        const ComparisonReport rep = run_comparison(spec, cfg);
        REQUIRE(rep.methods.size() == 4);
        CHECK(rep.methods[0].method == "generate");
        CHECK(rep.methods[1].method == "sample_5");
        CHECK(rep.methods[2].method == "sample_10");
        CHECK(rep.methods[3].method == "sample_100");
    }

    SUBCASE("a diverging arm is contained, not fatal") {
        spec.cost_ceiling = 1e-9;
        const ComparisonReport rep = run_comparison(spec, cfg);
        REQUIRE(rep.methods.size() == 2);
        for (const auto& mres : rep.methods) {
            CHECK(mres.diverged);
            CHECK(mres.divergence_episode == 0);
        }
    }

    SUBCASE("captured logs track the ledger row by row") {
        const ComparisonReport rep = run_comparison(spec, cfg);
        const auto& gen_rows = rep.methods[0].log.rows;
        for (const auto& row : gen_rows) {
            CHECK(row.physical_samples == 93);
        }
        const auto& smp_rows = rep.methods[1].log.rows;
        for (std::size_t e = 0; e < smp_rows.size(); ++e)
            CHECK(smp_rows[e].physical_samples == static_cast<std::int64_t>(e + 1) * 4 * 30);
    }
}
