#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "asigboost/activation_loss.hpp"
#include "asigboost/data.hpp"
#include "asigboost/gbdt.hpp"

namespace asigboost {

/// Mann-Whitney AUC: the fraction of (positive, negative) pairs where the
/// positive scores higher, ties counting one half. O(n log n) via average
/// ranks. Throws DataError unless both classes are present.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct EvalRecord {
    std::string classifier_name;
    double ir_achieved = 0.0;
    double auc_mean = 0.0;
    double auc_std = 0.0;  // population standard deviation over repeats
    int repeats = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<double> aucs;  // one per repeat, in seed order
};

/// Default display name for a loss: CE, Focal or ASIG.
std::string classifier_name(const LossSpec& spec);

/// Repeated stratified hold-out evaluation. Repeat r splits with seed
/// base_seed + r, trains on the train part (asig_focal takes that part's IR),
/// and scores the held-out part with predict_raw. Repeats run on up to
/// `jobs` threads; the record does not depend on `jobs`.
EvalRecord evaluate(const Dataset& dataset, const BoostConfig& config, const LossSpec& spec, int repeats,
                    double train_fraction, std::uint64_t base_seed, int jobs = 1);

/// A benchmark cell that could not be evaluated.
struct FailedCell {
    std::string classifier_name;
    double ir = 0.0;
    std::string reason;
};

/// Table-2 shaped AUC report: one row per IR (ascending), one column per
/// classifier in order of first appearance.
struct ReportTable {
    struct Cell {
        bool present = false;
        bool failed = false;
        double mean = 0.0;
        double std = 0.0;
        std::string reason;
    };

    std::vector<std::string> classifiers;
    std::vector<double> irs;
    std::vector<std::vector<Cell>> cells;  // [ir row][classifier]

    /// Columns: ir, then <name>_mean,<name>_std per classifier. Raw
    /// fractions in shortest round-trip form; missing cells are empty and
    /// failed cells are NA.
    std::string to_csv() const;
    /// "mean ± std" scaled by 100 with one decimal, padded columns.
    std::string to_markdown() const;
};

/// "86.1 ± 0.1" for mean 0.861, std 0.001.
std::string format_auc_cell(double mean, double std);

/// Throws ConfigError on duplicate (classifier, IR) pairs.
ReportTable aggregate_report(const std::vector<EvalRecord>& records, const std::vector<FailedCell>& failures = {});

}  // namespace asigboost
