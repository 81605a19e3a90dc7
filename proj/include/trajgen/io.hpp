#pragma once

#include <map>
#include <string>

#include "trajgen/hankel.hpp"
#include "trajgen/lti_system.hpp"
#include "trajgen/output_generator.hpp"
#include "trajgen/policy_gradient.hpp"

namespace trajgen {

// All writers emit 17 significant digits so values survive a write/read round
// trip bit-exactly; readers throw std::runtime_error naming file and line on
// malformed input.

/** Record CSV: header k,u_0..u_{m-1},y_0..y_{q-1}, one row per sample. */
void write_record_csv(const std::string& path, const DataRecord& record);
DataRecord read_record_csv(const std::string& path);

/** Trajectory CSV, same column layout as a record. */
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path);

/** Training log CSV: episode,mean_cost,sigma,physical_samples,generated_samples,wall_ms. */
void write_training_log_csv(const std::string& path, const TrainingLog& log);

/** Plant file: header n=..,m=..,q=.. then A/B/C marker lines, each followed by its rows. */
void write_plant_file(const std::string& path, const LtiSystem& sys);
LtiSystem read_plant_file(const std::string& path);

/** Bare numeric CSV matrix, one row per line. */
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& mat);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

/** Window state file: header t0=..,m=..,q=.. then one flat CSV line. */
void write_window_file(const std::string& path, const ExtendedState& chi);
ExtendedState read_window_file(const std::string& path);

/**
 * Flat key=value configuration, one pair per line; '#' starts a comment and
 * blank lines are skipped.  Duplicate keys keep the last value.
 */
std::map<std::string, std::string> parse_config_file(const std::string& path);

/** Format one double with 17 significant digits (shared by every writer). */
std::string format_value(double v);

/** Split a CSV line on commas; fields are trimmed of surrounding whitespace. */
std::vector<std::string> split_csv_line(const std::string& line);

/** strtod with full-string validation; context goes into the error message. */
double parse_value(const std::string& field, const std::string& context);

}  // namespace trajgen
