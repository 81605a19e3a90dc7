#include <doctest.h>

#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "test_support.hpp"
#include "trajgen/benchmarks.hpp"
#include "trajgen/hankel.hpp"
#include "trajgen/numeric.hpp"
#include "trajgen/random.hpp"

using namespace trajgen;

TEST_CASE("shortest certifiable record length") {
    CHECK(min_data_length(4, 2, 30) == 93);
    CHECK(min_data_length(32, 20, 22) == 493);
    CHECK(min_data_length(1, 1, 1) == 2);
    CHECK_THROWS_AS(min_data_length(0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(min_data_length(1, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(min_data_length(1, 1, 0), std::invalid_argument);
}

TEST_CASE("open-loop excitation recording") {
    const LtiSystem sys = batch_reactor(true);

    SUBCASE("length zero yields an empty record and bills nothing") {
        SampleLedger ledger;
        const DataRecord rec = collect_excitation_data(sys, 0, 1.0, 42, ledger);
        CHECK(rec.length() == 0);
        CHECK(rec.u.rows() == 2);
        CHECK(rec.y.rows() == 4);
        CHECK(ledger.value() == 0);
    }

    SUBCASE("negative length is rejected") {
        CHECK_THROWS_AS(collect_excitation_data(sys, -1, 1.0, 42), std::invalid_argument);
    }

    SUBCASE("every recorded sample is billed") {
        SampleLedger ledger;
        collect_excitation_data(sys, 57, 1.0, 42, ledger);
        CHECK(ledger.value() == 57);
        collect_excitation_data(sys, 36, 1.0, 43, ledger);
        CHECK(ledger.value() == 93);
        ledger.reset();
        CHECK(ledger.value() == 0);
    }

    SUBCASE("same seed reproduces the record exactly") {
        SampleLedger ledger;
        const DataRecord a = collect_excitation_data(sys, 40, 1.0, 123, ledger);
        const DataRecord b = collect_excitation_data(sys, 40, 1.0, 123, ledger);
        CHECK(a.u == b.u);
        CHECK(a.y == b.y);
        const DataRecord c = collect_excitation_data(sys, 40, 1.0, 124, ledger);
        CHECK(a.u != c.u);
    }

    SUBCASE("inputs respect the excitation bound") {
        const DataRecord rec = collect_excitation_data(sys, 200, 0.25, 5);
        CHECK(rec.u.cwiseAbs().maxCoeff() <= 0.25);
        CHECK(rec.u.cwiseAbs().maxCoeff() > 0.1);
    }

    SUBCASE("default start state has unit norm") {
        const DataRecord rec = collect_excitation_data(sys, 3, 1.0, 9);
        // y(0) = C x(0) = x(0) for the fully measured plant
        CHECK(rec.y.col(0).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("a pinned start state is honored") {
        Eigen::VectorXd x0(4);
        x0 << 1.0, -2.0, 0.5, 0.25;
        const DataRecord rec = collect_excitation_data(sys, 3, 1.0, 9, SampleLedger::global(), &x0);
        CHECK((rec.y.col(0) - x0).norm() == 0.0);
    }

    SUBCASE("recorded run obeys the plant equations") {
        const DataRecord rec = collect_excitation_data(sys, 25, 1.0, 77);
        for (int k = 0; k + 1 < 25; ++k) {
            const Eigen::VectorXd next = sys.step(rec.y.col(k), rec.u.col(k));
            CHECK((rec.y.col(k + 1) - next).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("block-Hankel view of a record") {
    SUBCASE("scalar record windows slide one sample at a time") {
        DataRecord rec;
        rec.u.resize(1, 4);
        rec.u << 1.0, 2.0, 3.0, 4.0;
        rec.y = 2.0 * rec.u;
        const HankelMatrix h(rec, 2);
        CHECK(h.depth() == 2);
        CHECK(h.cols() == 3);
        Eigen::MatrixXd want(2, 3);
        want << 1.0, 2.0, 3.0, 2.0, 3.0, 4.0;
        CHECK(h.inputs() == want);
        CHECK(h.outputs() == 2.0 * want);
        CHECK(h.stacked().rows() == 4);
        CHECK(h.stacked().topRows(2) == want);
    }

    SUBCASE("record of exactly the window depth gives one column") {
        DataRecord rec;
        rec.u = Eigen::MatrixXd::Random(2, 5);
        rec.y = Eigen::MatrixXd::Random(3, 5);
        const HankelMatrix h(rec, 5);
        CHECK(h.cols() == 1);
        for (int k = 0; k < 5; ++k) {
            CHECK(h.inputs().col(0).segment(2 * k, 2) == rec.u.col(k));
            CHECK(h.outputs().col(0).segment(3 * k, 3) == rec.y.col(k));
        }
    }

    SUBCASE("sizes for the fully measured plant at its shortest record") {
        const DataRecord rec = collect_excitation_data(batch_reactor(true), 93, 1.0, 4);
        const HankelMatrix h(rec, 30);
        CHECK(h.m() == 2);
        CHECK(h.q() == 4);
        CHECK(h.cols() == 64);
        CHECK(h.inputs().rows() == 60);
        CHECK(h.outputs().rows() == 120);
        CHECK(h.stacked().rows() == 180);
    }

    SUBCASE("construction rejects bad shapes") {
        DataRecord rec;
        rec.u = Eigen::MatrixXd::Random(1, 4);
        rec.y = Eigen::MatrixXd::Random(1, 3);
        CHECK_THROWS_AS(HankelMatrix(rec, 2), std::invalid_argument);
        rec.y = Eigen::MatrixXd::Random(1, 4);
        CHECK_THROWS_AS(HankelMatrix(rec, 0), std::invalid_argument);
        CHECK_THROWS_AS(HankelMatrix(rec, 5), std::invalid_argument);
        CHECK_NOTHROW(HankelMatrix(rec, 4));
    }

    SUBCASE("column j is the record shifted by j") {
        const DataRecord rec = collect_excitation_data(batch_reactor(false), 40, 1.0, 8);
        const HankelMatrix h(rec, 6);
        for (int j = 0; j < h.cols(); ++j)
            for (int k = 0; k < 6; ++k) {
                CHECK(h.inputs().col(j).segment(2 * k, 2) == rec.u.col(k + j));
                CHECK(h.outputs().col(j).segment(2 * k, 2) == rec.y.col(k + j));
            }
    }

    SUBCASE("block row slices agree with the full stack") {
        const DataRecord rec = collect_excitation_data(batch_reactor(false), 40, 1.0, 8);
        const HankelMatrix h(rec, 6);
        CHECK(h.input_rows(0, 5) == h.inputs());
        CHECK(h.output_rows(0, 0) == h.outputs().topRows(2));
        CHECK(h.input_rows(2, 4) == h.inputs().middleRows(4, 6));
        CHECK_THROWS_AS(h.input_rows(-1, 2), std::out_of_range);
        CHECK_THROWS_AS(h.input_rows(3, 2), std::out_of_range);
        CHECK_THROWS_AS(h.output_rows(0, 6), std::out_of_range);
    }

    SUBCASE("windows of a fully measured run satisfy the one-step update") {
        const LtiSystem sys = batch_reactor(true);
        const DataRecord rec = collect_excitation_data(sys, 60, 1.0, 21);
        const HankelMatrix h(rec, 8);
        for (int k = 0; k + 1 < 8; ++k) {
            const Eigen::MatrixXd xk = h.output_rows(k, k);
            const Eigen::MatrixXd xk1 = h.output_rows(k + 1, k + 1);
            const Eigen::MatrixXd uk = h.input_rows(k, k);
            CHECK((xk1 - sys.A() * xk - sys.B() * uk).cwiseAbs().maxCoeff() <= 1e-11);
        }
    }
}

TEST_CASE("richness certificate for a record") {
    const LtiSystem sys = batch_reactor(true);

    SUBCASE("a genuinely exciting record certifies at full rank") {
        const DataRecord rec = collect_certified(sys, 93, 30, 1.0, 1);
        const HankelMatrix h(rec, 30);
        const RankCertificate cert = rank_certificate(h, 4);
        CHECK(cert.ok);
        CHECK(cert.rank == 64);
        CHECK(cert.required == 64);
        CHECK(cert.sigma_min > 0.0);
        CHECK(cert.sigma_max >= cert.sigma_min);
        CHECK(cert.threshold < cert.sigma_min);
        CHECK(cert.companion_rank == 64);
    }

    SUBCASE("an all-zero record fails with rank zero") {
        DataRecord rec;
        rec.u = Eigen::MatrixXd::Zero(2, 93);
        rec.y = Eigen::MatrixXd::Zero(4, 93);
        const RankCertificate cert = rank_certificate(HankelMatrix(rec, 30), 4);
        CHECK_FALSE(cert.ok);
        CHECK(cert.rank == 0);
        CHECK(cert.required == 64);
    }

    SUBCASE("too short a record cannot certify") {
        const DataRecord rec = collect_excitation_data(sys, 92, 1.0, 3);
        const RankCertificate cert = rank_certificate(HankelMatrix(rec, 30), 4);
        CHECK_FALSE(cert.ok);
        CHECK(cert.rank < cert.required);
    }

    SUBCASE("partial outputs skip the companion stack") {
        const LtiSystem part = batch_reactor(false);
        const DataRecord rec = collect_excitation_data(part, 96, 1.0, 3);
        const RankCertificate cert = rank_certificate(HankelMatrix(rec, 31), 4);
        CHECK(cert.companion_rank == -1);
    }

    SUBCASE("verdict is invariant to uniform scaling of the record") {
        DataRecord rec = collect_excitation_data(sys, 93, 1.0, 6);
        const bool base = rank_certificate(HankelMatrix(rec, 30), 4).ok;
        rec.u *= 1e-6;
        rec.y *= 1e-6;
        CHECK(rank_certificate(HankelMatrix(rec, 30), 4).ok == base);
        rec.u *= 1e12;
        rec.y *= 1e12;
        CHECK(rank_certificate(HankelMatrix(rec, 30), 4).ok == base);
    }
}

TEST_CASE("collect-and-certify loop") {
    const LtiSystem sys = batch_reactor(true);

    SUBCASE("certified record passes its own certificate and bills once per sample") {
        SampleLedger ledger;
        const DataRecord rec = collect_certified(sys, 93, 30, 1.0, 11, 5, ledger);
        CHECK(rec.length() == 93);
        CHECK(ledger.value() == 93);
        CHECK(rank_certificate(HankelMatrix(rec, 30), 4).ok);
    }

    SUBCASE("deterministic for a fixed seed") {
        SampleLedger ledger;
        const DataRecord a = collect_certified(sys, 93, 30, 1.0, 11, 5, ledger);
        const DataRecord b = collect_certified(sys, 93, 30, 1.0, 11, 5, ledger);
        CHECK(a.u == b.u);
        CHECK(a.y == b.y);
    }

    SUBCASE("hopeless request throws after billing every attempt") {
        SampleLedger ledger;
        // depth-30 windows need 93 samples; 50 can never certify
        CHECK_THROWS_AS(collect_certified(sys, 50, 30, 1.0, 11, 3, ledger), std::runtime_error);
        CHECK(ledger.value() == 150);
    }
}
