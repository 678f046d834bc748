#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asigboost/activation_loss.hpp"
#include "asigboost/data.hpp"
#include "asigboost/matrix.hpp"
#include "asigboost/text_io.hpp"

namespace asigboost {

/// Starting raw score. `newton` minimises the configured loss over a
/// constant; `zero` starts at 0; `automatic` uses newton for cross-entropy
/// and zero for the focal family, where the activation shift then sets the
/// effective start at -g.
enum class InitScore { automatic, newton, zero };

std::string to_string(InitScore mode);
InitScore parse_init_score(std::string_view text);

struct BoostConfig {
    int num_rounds = 200;
    double learning_rate = 0.1;
    int max_leaves = 31;
    int max_depth = 6;
    int min_samples_leaf = 20;
    double l2_lambda = 1.0;
    int max_bins = 256;
    /// Cap on |unshrunk leaf output|; 0 disables the cap.
    double max_delta_step = 0.0;
    std::uint64_t seed = 0;
    InitScore init_score = InitScore::automatic;
    /// Threads used for histogram construction. Never affects the result.
    int workers = 1;

    void validate() const;

    /// Reads the keys named like the fields above; absent keys keep `base`.
    static BoostConfig from_doc(const KeyValueDoc& doc, BoostConfig base);
    static BoostConfig from_doc(const KeyValueDoc& doc);
    KeyValueDoc to_doc() const;
};

/// Per-feature quantile bin edges. A value v falls in bin
/// count(edges < v); NaN falls in the extra bin edges.size() + 1.
using BinEdges = std::vector<std::vector<double>>;

BinEdges build_bins(const Dataset& train, int max_bins);
std::uint16_t bin_index(std::span<const double> edges, double value);

/// Node of a regression tree stored in pre-order. Internal nodes send a row
/// left when its value is <= edges[feature][bin_threshold] (NaN follows
/// `missing_left`); leaves carry a raw-score increment.
struct TreeNode {
    int feature = -1;
    int bin_threshold = 0;
    bool missing_left = true;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return left < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> row, const BinEdges& edges) const;
    int num_splits() const;
    int depth() const;
};

struct BoostedModel {
    double base_score = 0.0;
    std::vector<Tree> trees;
    BinEdges bin_edges;
    LossSpec loss_spec_used;
    /// Activation shift g applied by predict_proba; 0 unless asig_focal.
    double shift = 0.0;
    std::vector<std::string> feature_names;

    std::vector<double> predict_raw(const Matrix& features) const;
    std::vector<double> predict_proba(const Matrix& features) const;

    /// Line-oriented text document; see docs/model_format.md.
    std::string serialize() const;
    static BoostedModel deserialize(std::string_view text);
};

/// Optional diagnostics collected while training.
struct TrainingTrace {
    /// Total training loss at the base score, then after every round.
    std::vector<double> total_loss;
    std::vector<double> split_gains;
    std::vector<std::size_t> leaf_sizes;
};

/// Newton boosting of depth- and leaf-capped regression trees on binned
/// features. Deterministic for fixed inputs, independent of row order and of
/// config.workers.
BoostedModel train(const Dataset& train, const BoostConfig& config, const LossSpec& spec,
                   TrainingTrace* trace = nullptr);

/// Constant raw score minimising the summed loss: at most 20 Newton steps from 0.
double optimal_constant_score(const PreparedLoss& loss, std::span<const std::uint8_t> labels);

}  // namespace asigboost
