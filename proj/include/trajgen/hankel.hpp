#pragma once

#include <atomic>
#include <cstdint>

#include "trajgen/lti_system.hpp"

namespace trajgen {

/** One historic input/output record of length L; column k is sample k. */
struct DataRecord {
    Eigen::MatrixXd u;  //!< m x L
    Eigen::MatrixXd y;  //!< q x L

    int length() const { return static_cast<int>(u.cols()); }
};

/**
 * Counter of samples that touched a physical plant.  Shared freely between
 * threads; additions are atomic so concurrent collectors never lose updates.
 */
class SampleLedger {
  public:
    void add(std::int64_t k) { count_.fetch_add(k, std::memory_order_relaxed); }
    std::int64_t value() const { return count_.load(std::memory_order_relaxed); }
    void reset() { count_.store(0, std::memory_order_relaxed); }

    static SampleLedger& global();

  private:
    std::atomic<std::int64_t> count_{0};
};

/** Shortest record that can certify depth-t windows for an n-state, m-input plant. */
int min_data_length(int n, int m, int t);

/**
 * Excite the plant open loop with i.i.d. inputs uniform on [-input_scale, input_scale]
 * and record the run.  x0 defaults to a random unit-norm state drawn from the same
 * stream.  Every recorded sample is billed to the ledger.
 */
DataRecord collect_excitation_data(const LtiSystem& sys, int length, double input_scale,
                                   std::uint64_t seed, SampleLedger& ledger = SampleLedger::global(),
                                   const Eigen::VectorXd* x0 = nullptr);

/**
 * Depth-t block-Hankel view of a record.  Immutable once built; safe to share
 * across generator instances and threads.
 */
class HankelMatrix {
  public:
    HankelMatrix(const DataRecord& record, int depth);

    int depth() const { return depth_; }
    int cols() const { return static_cast<int>(h_u_.cols()); }
    int m() const { return m_; }
    int q() const { return q_; }

    const Eigen::MatrixXd& inputs() const { return h_u_; }   //!< (depth*m) x cols
    const Eigen::MatrixXd& outputs() const { return h_y_; }  //!< (depth*q) x cols

    /** [inputs; outputs] stacked, the object whose rank certifies the record. */
    Eigen::MatrixXd stacked() const;

    /** Input block rows k1..k2 inclusive. */
    Eigen::MatrixXd input_rows(int k1, int k2) const;
    /** Output block rows k1..k2 inclusive. */
    Eigen::MatrixXd output_rows(int k1, int k2) const;

  private:
    Eigen::MatrixXd h_u_, h_y_;
    int depth_, m_, q_;
};

struct RankCertificate {
    bool ok = false;
    int rank = 0;
    int required = 0;       //!< n + depth*m
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double threshold = 0.0;
    int companion_rank = -1;  //!< rank of [inputs; first output block row] when q == n, else -1
};

/**
 * Certify that the record is rich enough: numerical rank of the stacked Hankel
 * matrix must equal state_dim + depth * m.  When outputs are full state the
 * certificate also reports the rank of the smaller stack that pairs the input
 * rows with the first state row.
 */
RankCertificate rank_certificate(const HankelMatrix& h, int state_dim);

/**
 * Collect and certify in one go, redrawing with a fresh derived seed up to
 * max_attempts times if certification fails.  Failed attempts still bill the
 * ledger; plant time was spent either way.
 */
DataRecord collect_certified(const LtiSystem& sys, int length, int depth, double input_scale,
                             std::uint64_t seed, int max_attempts = 5,
                             SampleLedger& ledger = SampleLedger::global());

}  // namespace trajgen
