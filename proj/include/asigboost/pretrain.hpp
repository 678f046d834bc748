#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asigboost/activation_loss.hpp"
#include "asigboost/data.hpp"
#include "asigboost/gbdt.hpp"

namespace asigboost {

/// Candidate activation shifts lo, lo + step, ..., hi. hi must be reachable
/// from lo in whole steps (within 1e-9); lo == hi gives a single value.
struct ShiftGrid {
    double lo = -3.0;
    double hi = 3.0;
    double step = 0.3;

    /// Parses "lo:hi:step".
    static ShiftGrid parse(std::string_view text);
    std::string to_string() const;
};

std::vector<double> shift_grid_values(const ShiftGrid& grid);

/// How each candidate shift is scored: repeated stratified hold-out AUC of
/// a focal model with the shifted activation.
struct EvalProtocol {
    int repeats = 3;
    double train_fraction = 0.7;
    std::uint64_t base_seed = 0;
    double focal_gamma = 2.0;
    double focal_alpha = 0.25;
    int jobs = 1;
};

struct ShiftSearch {
    double best_shift = 0.0;
    double best_auc = 0.0;
    std::vector<double> shifts;
    std::vector<double> mean_aucs;
};

/// Argmax of mean held-out AUC over the grid; ties go to the smallest shift.
ShiftSearch best_shift_for(const Dataset& dataset, const ShiftGrid& grid, const BoostConfig& config,
                           const EvalProtocol& protocol);

struct ShiftPoint {
    double ir = 0.0;
    double best_shift = 0.0;
    double best_auc = 0.0;
};

struct LogFit {
    AsigParams params;
    double r_squared;
};

/// Ordinary least squares of best_shift on ln(ir). Needs two distinct IRs,
/// all >= 1. The slope may come out negative.
LogFit fit_log_regression(std::span<const ShiftPoint> points);

struct PretrainResult {
    std::vector<ShiftPoint> points;
    AsigParams asig{0.0, 0.0};
    double r_squared = 1.0;
    std::uint64_t seed = 0;
    std::vector<std::string> skipped;  // "target: reason" for unusable IR targets

    /// Flat line-oriented document; see docs/file_formats.md.
    std::string serialize() const;
    static PretrainResult parse(std::string_view text);
};

/// `count` values from lo to hi evenly spaced in log scale.
std::vector<double> log_spaced(double lo, double hi, int count);

/// Resamples `baseline` to each IR target (seeded by `seed`), finds the best
/// shift for each, and fits shift = slope * ln(IR) + intercept.
PretrainResult pretrain_asig(const Dataset& baseline, std::span<const double> ir_targets, const ShiftGrid& grid,
                             const BoostConfig& config, const EvalProtocol& protocol, std::uint64_t seed);

}  // namespace asigboost
