#pragma once

#include <cstdint>

#include "trajgen/hankel.hpp"
#include "trajgen/lti_system.hpp"
#include "trajgen/output_generator.hpp"

namespace trajgen {

/** Least-squares state consistent with the window, advanced to the window's final time. */
Eigen::VectorXd state_from_window(const LtiSystem& plant, const ExtendedState& chi);

struct EquivalenceResult {
    double max_rel_err = 0.0;  //!< worst trajectory error relative to the oracle's scale
    int trials = 0;
    Trajectory worst_generated;
    Trajectory worst_reference;
};

/**
 * Draw (theta, x0, w) tuples, generate each trajectory from the record alone
 * and compare against a ground-truth closed-loop rollout of the plant.
 * Gains have entries uniform on [-theta_scale, theta_scale]; x0 is standard
 * normal; perturbations are N(0, 0.25).  A caller-supplied fixed_theta pins
 * the gain while x0 and w still vary per trial.
 */
EquivalenceResult verify_state_equivalence(const LtiSystem& plant, const DataRecord& record,
                                           int depth, int trials, std::uint64_t seed,
                                           double theta_scale = 0.3,
                                           const Eigen::MatrixXd* fixed_theta = nullptr);

/**
 * Output-feedback analogue: window states come from the record's sliding
 * windows, the oracle reconstructs the hidden state and rolls the loop
 * forward, and the generated slice is compared over its full span.
 */
EquivalenceResult verify_output_equivalence(const LtiSystem& plant, const DataRecord& record,
                                            int depth, int t0, int trials, std::uint64_t seed,
                                            double theta_scale = 0.3,
                                            const Eigen::MatrixXd* fixed_theta = nullptr);

struct NullspaceCheck {
    double max_residual = 0.0;  //!< worst cross-projection residual between the two bases
    int nullity_h = 0;
    int nullity_g = 0;
    int rank_g = 0;
    int required = 0;  //!< n + depth*m
};

/** Compare null spaces of the stacked Hankel matrix and the state-feedback constraint matrix. */
NullspaceCheck nullspace_equivalence_state(const HankelMatrix& h, const Eigen::MatrixXd& theta,
                                           int state_dim);

/** Same check against the output-feedback constraint matrix. */
NullspaceCheck nullspace_equivalence_output(const HankelMatrix& h, const Eigen::MatrixXd& theta,
                                            int t0, int state_dim);

}  // namespace trajgen
