#include <algorithm>
#include <cmath>
#include <numeric>

#include "asigboost/error.hpp"
#include "asigboost/gbdt.hpp"
#include "asigboost/parallel.hpp"

namespace asigboost {

namespace {

constexpr int kMaxBaseScoreSteps = 20;
constexpr double kMaxNewtonStep = 5.0;

struct Bin {
    double grad = 0.0;
    double hess = 0.0;
    std::uint32_t count = 0;
};

using Histogram = std::vector<std::vector<Bin>>;  // [feature][bin]

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    int threshold = 0;
    bool missing_left = true;

    bool valid() const { return feature >= 0; }
};

struct Leaf {
    std::vector<std::uint32_t> rows;
    double grad = 0.0;
    double hess = 0.0;
    int depth = 0;
    int node = 0;
    Histogram hist;
    SplitCandidate best;
};

struct BuildNode {
    int feature = -1;
    int threshold = 0;
    bool missing_left = true;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

// Everything the grower needs about the training rows, in canonical order.
struct BinnedData {
    std::vector<std::vector<std::uint16_t>> bins;  // [feature][row]
    std::vector<std::size_t> bins_per_feature;     // value bins + missing bin
};

class TreeGrower {
public:
    TreeGrower(const BinnedData& data, const BoostConfig& config, std::span<const double> grad,
               std::span<const double> hess)
        : data_{data}, config_{config}, grad_{grad}, hess_{hess} {}

    Tree grow(std::vector<double>& increment, TrainingTrace* trace) {
        nodes_.assign(1, BuildNode{});
        std::vector<Leaf> leaves(1);
        Leaf& root = leaves.front();
        root.rows.resize(grad_.size());
        std::iota(root.rows.begin(), root.rows.end(), 0U);
        sum_gradients(root);
        build_histogram(root);
        root.best = find_best_split(root);

        while (leaves.size() < static_cast<std::size_t>(config_.max_leaves)) {
            std::size_t pick = leaves.size();
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                if (!leaves[i].best.valid()) continue;
                if (pick == leaves.size() || leaves[i].best.gain > leaves[pick].best.gain) pick = i;
            }
            if (pick == leaves.size()) break;
            if (trace) trace->split_gains.push_back(leaves[pick].best.gain);
            auto [left, right] = split(std::move(leaves[pick]));
            leaves[pick] = std::move(left);
            leaves.insert(leaves.begin() + static_cast<std::ptrdiff_t>(pick) + 1, std::move(right));
        }

        for (const Leaf& leaf : leaves) {
            const double value = config_.learning_rate * output(leaf.grad, leaf.hess);
            nodes_[static_cast<std::size_t>(leaf.node)].value = value;
            for (const auto r : leaf.rows) increment[r] = value;
            if (trace) trace->leaf_sizes.push_back(leaf.rows.size());
        }

        Tree tree;
        tree.nodes.reserve(nodes_.size());
        to_preorder(0, tree);
        return tree;
    }

private:
    void sum_gradients(Leaf& leaf) const {
        leaf.grad = 0.0;
        leaf.hess = 0.0;
        for (const auto r : leaf.rows) {
            leaf.grad += grad_[r];
            leaf.hess += hess_[r];
        }
    }

    void build_histogram(Leaf& leaf) const {
        const std::size_t features = data_.bins.size();
        leaf.hist.assign(features, {});
        parallel_for(features, config_.workers, [&](std::size_t f) {
            auto& h = leaf.hist[f];
            h.assign(data_.bins_per_feature[f], Bin{});
            const auto& col = data_.bins[f];
            for (const auto r : leaf.rows) {
                Bin& b = h[col[r]];
                b.grad += grad_[r];
                b.hess += hess_[r];
                ++b.count;
            }
        });
    }

    static void subtract_histogram(const Histogram& parent, Leaf& child, const Leaf& sibling) {
        child.hist = parent;
        for (std::size_t f = 0; f < parent.size(); ++f)
            for (std::size_t b = 0; b < parent[f].size(); ++b) {
                child.hist[f][b].grad -= sibling.hist[f][b].grad;
                child.hist[f][b].hess -= sibling.hist[f][b].hess;
                child.hist[f][b].count -= sibling.hist[f][b].count;
            }
    }

    // Unshrunk leaf output, capped at max_delta_step when that is set.
    double output(double g, double h) const {
        const double w = -g / (h + config_.l2_lambda);
        if (config_.max_delta_step > 0.0) return std::clamp(w, -config_.max_delta_step, config_.max_delta_step);
        return w;
    }

    // Loss reduction of a leaf taking its output; G^2/(H+lambda) when uncapped.
    double score(double g, double h) const {
        if (config_.max_delta_step <= 0.0) return g * g / (h + config_.l2_lambda);
        const double w = output(g, h);
        return -(2.0 * g * w + (h + config_.l2_lambda) * w * w);
    }

    SplitCandidate find_best_split(const Leaf& leaf) const {
        const auto min_leaf = static_cast<std::uint32_t>(config_.min_samples_leaf);
        const auto n = static_cast<std::uint32_t>(leaf.rows.size());
        if (leaf.depth >= config_.max_depth || n < 2 * min_leaf) return {};

        const double parent = score(leaf.grad, leaf.hess);
        std::vector<SplitCandidate> per_feature(data_.bins.size());
        parallel_for(data_.bins.size(), config_.workers, [&](std::size_t f) {
            const auto& h = leaf.hist[f];
            const std::size_t value_bins = h.size() - 1;
            const Bin& missing = h.back();
            SplitCandidate best;
            Bin acc;
            for (std::size_t t = 0; t + 1 < value_bins; ++t) {
                acc.grad += h[t].grad;
                acc.hess += h[t].hess;
                acc.count += h[t].count;
                for (const bool missing_left : {true, false}) {
                    Bin left = acc;
                    if (missing_left) {
                        left.grad += missing.grad;
                        left.hess += missing.hess;
                        left.count += missing.count;
                    }
                    const std::uint32_t right_count = n - left.count;
                    if (left.count < min_leaf || right_count < min_leaf) continue;
                    const double gain =
                        0.5 * (score(left.grad, left.hess) +
                               score(leaf.grad - left.grad, leaf.hess - left.hess) - parent);
                    if (gain > 0.0 && gain > best.gain) {
                        best = {gain, static_cast<int>(f), static_cast<int>(t), missing_left};
                    }
                }
            }
            per_feature[f] = best;
        });

        // Feature-index order: equal gains keep the lowest feature.
        SplitCandidate best;
        for (const auto& c : per_feature)
            if (c.valid() && c.gain > best.gain) best = c;
        return best;
    }

    std::pair<Leaf, Leaf> split(Leaf parent) {
        const SplitCandidate s = parent.best;
        BuildNode& node = nodes_[static_cast<std::size_t>(parent.node)];
        node.feature = s.feature;
        node.threshold = s.threshold;
        node.missing_left = s.missing_left;
        node.left = static_cast<int>(nodes_.size());
        node.right = node.left + 1;
        const int left_id = node.left;
        const int right_id = node.right;
        nodes_.emplace_back();
        nodes_.emplace_back();

        const auto& col = data_.bins[static_cast<std::size_t>(s.feature)];
        const auto missing_bin = static_cast<std::uint16_t>(data_.bins_per_feature[static_cast<std::size_t>(s.feature)] - 1);
        Leaf left, right;
        for (const auto r : parent.rows) {
            const auto b = col[r];
            const bool go_left = b == missing_bin ? s.missing_left : b <= s.threshold;
            (go_left ? left : right).rows.push_back(r);
        }
        for (Leaf* child : {&left, &right}) {
            child->depth = parent.depth + 1;
            sum_gradients(*child);
        }
        left.node = left_id;
        right.node = right_id;

        Leaf& small = left.rows.size() <= right.rows.size() ? left : right;
        Leaf& large = &small == &left ? right : left;
        build_histogram(small);
        subtract_histogram(parent.hist, large, small);

        left.best = find_best_split(left);
        right.best = find_best_split(right);
        return {std::move(left), std::move(right)};
    }

    void to_preorder(int id, Tree& tree) const {
        const BuildNode& b = nodes_[static_cast<std::size_t>(id)];
        const auto index = tree.nodes.size();
        tree.nodes.emplace_back();
        if (b.left < 0) {
            tree.nodes[index].value = b.value;
            return;
        }
        tree.nodes[index].feature = b.feature;
        tree.nodes[index].bin_threshold = b.threshold;
        tree.nodes[index].missing_left = b.missing_left;
        tree.nodes[index].left = static_cast<int>(tree.nodes.size());
        to_preorder(b.left, tree);
        tree.nodes[index].right = static_cast<int>(tree.nodes.size());
        to_preorder(b.right, tree);
    }

    const BinnedData& data_;
    const BoostConfig& config_;
    std::span<const double> grad_;
    std::span<const double> hess_;
    std::vector<BuildNode> nodes_;
};

// NaN sorts after every number.
bool value_less(double a, double b) {
    if (std::isnan(a)) return false;
    if (std::isnan(b)) return true;
    return a < b;
}

// Lexicographic (features, label) order, so training never depends on the
// order rows arrive in.
std::vector<std::size_t> canonical_order(const Dataset& ds) {
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ra = ds.features.row(a);
        const auto rb = ds.features.row(b);
        for (std::size_t j = 0; j < ra.size(); ++j) {
            if (value_less(ra[j], rb[j])) return true;
            if (value_less(rb[j], ra[j])) return false;
        }
        return ds.labels[a] < ds.labels[b];
    });
    return order;
}

double initial_score(InitScore mode, LossKind kind, const PreparedLoss& loss, std::span<const std::uint8_t> labels) {
    switch (mode) {
        case InitScore::newton: return optimal_constant_score(loss, labels);
        case InitScore::zero: return 0.0;
        case InitScore::automatic: break;
    }
    return kind == LossKind::cross_entropy ? optimal_constant_score(loss, labels) : 0.0;
}

double total_loss(const PreparedLoss& loss, std::span<const double> scores, std::span<const std::uint8_t> labels) {
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) sum += loss.value(scores[i], labels[i]);
    return sum;
}

}  // namespace

std::string to_string(InitScore mode) {
    switch (mode) {
        case InitScore::automatic: return "auto";
        case InitScore::newton: return "newton";
        case InitScore::zero: return "zero";
    }
    return "?";
}

InitScore parse_init_score(std::string_view text) {
    if (text == "auto") return InitScore::automatic;
    if (text == "newton") return InitScore::newton;
    if (text == "zero") return InitScore::zero;
    throw ConfigError("init_score must be auto, newton or zero, got '" + std::string(text) + "'");
}

void BoostConfig::validate() const {
    if (num_rounds < 1) throw ConfigError("num_rounds must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning_rate must lie in (0, 1]");
    if (max_leaves < 2) throw ConfigError("max_leaves must be >= 2");
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
    if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda)) throw ConfigError("l2_lambda must be finite and >= 0");
    if (max_bins < 2 || max_bins > 256) throw ConfigError("max_bins must lie in [2, 256]");
    if (!(max_delta_step >= 0.0) || !std::isfinite(max_delta_step))
        throw ConfigError("max_delta_step must be finite and >= 0");
    if (workers < 1) throw ConfigError("workers must be >= 1");
}

BoostConfig BoostConfig::from_doc(const KeyValueDoc& doc) { return from_doc(doc, BoostConfig{}); }

BoostConfig BoostConfig::from_doc(const KeyValueDoc& doc, BoostConfig base) {
    static constexpr std::string_view kKeys[] = {"num_rounds", "learning_rate", "max_leaves", "max_depth",
                                                 "min_samples_leaf", "l2_lambda", "max_delta_step", "max_bins",
                                                 "seed", "init_score"};
    for (const auto& [key, value] : doc.entries())
        if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys))
            throw ConfigError("unknown boosting config key '" + key + "'");
    BoostConfig c = base;
    c.num_rounds = static_cast<int>(doc.get_int("num_rounds", c.num_rounds));
    c.learning_rate = doc.get_double("learning_rate", c.learning_rate);
    c.max_leaves = static_cast<int>(doc.get_int("max_leaves", c.max_leaves));
    c.max_depth = static_cast<int>(doc.get_int("max_depth", c.max_depth));
    c.min_samples_leaf = static_cast<int>(doc.get_int("min_samples_leaf", c.min_samples_leaf));
    c.l2_lambda = doc.get_double("l2_lambda", c.l2_lambda);
    c.max_delta_step = doc.get_double("max_delta_step", c.max_delta_step);
    c.max_bins = static_cast<int>(doc.get_int("max_bins", c.max_bins));
    c.seed = static_cast<std::uint64_t>(doc.get_int("seed", static_cast<std::int64_t>(c.seed)));
    if (doc.contains("init_score")) c.init_score = parse_init_score(*doc.get("init_score"));
    c.validate();
    return c;
}

KeyValueDoc BoostConfig::to_doc() const {
    KeyValueDoc doc;
    doc.set("num_rounds", std::to_string(num_rounds));
    doc.set("learning_rate", format_double(learning_rate));
    doc.set("max_leaves", std::to_string(max_leaves));
    doc.set("max_depth", std::to_string(max_depth));
    doc.set("min_samples_leaf", std::to_string(min_samples_leaf));
    doc.set("l2_lambda", format_double(l2_lambda));
    doc.set("max_delta_step", format_double(max_delta_step));
    doc.set("max_bins", std::to_string(max_bins));
    doc.set("seed", std::to_string(seed));
    doc.set("init_score", to_string(init_score));
    return doc;
}

double optimal_constant_score(const PreparedLoss& loss, std::span<const std::uint8_t> labels) {
    const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
    const double negatives = static_cast<double>(labels.size()) - positives;
    double z = 0.0;
    for (int step = 0; step < kMaxBaseScoreSteps; ++step) {
        const auto gp = loss.grad_hess(z, 1);
        const auto gn = loss.grad_hess(z, 0);
        const double g = positives * gp.grad + negatives * gn.grad;
        const double h = positives * gp.hess + negatives * gn.hess;
        const double delta = std::clamp(g / h, -kMaxNewtonStep, kMaxNewtonStep);
        z -= delta;
        if (std::abs(delta) < 1e-12) break;
    }
    return z;
}

BoostedModel train(const Dataset& train_set, const BoostConfig& config, const LossSpec& spec, TrainingTrace* trace) {
    config.validate();
    train_set.validate();
    const PreparedLoss loss(spec);
    if (train_set.positives() == 0 || train_set.negatives() == 0)
        throw DataError("train: training data must contain both classes");
    for (const double v : train_set.features.values())
        if (std::isinf(v)) throw DataError("train: infinite feature value");
    if (spec.kind == LossKind::asig_focal) {
        const double achieved = train_set.imbalance_ratio().value();
        if (std::abs(spec.ir->value() - achieved) > 0.5)
            throw ConfigError("train: asig_focal IR " + format_double(spec.ir->value()) +
                              " does not match the training data's IR " + format_double(achieved));
    }

    BoostedModel model;
    model.loss_spec_used = spec;
    model.shift = loss.shift();
    model.feature_names = train_set.feature_names;
    model.bin_edges = build_bins(train_set, config.max_bins);

    const auto order = canonical_order(train_set);
    const std::size_t n = order.size();
    const std::size_t features = train_set.features.cols();

    BinnedData data;
    data.bins.assign(features, std::vector<std::uint16_t>(n));
    data.bins_per_feature.resize(features);
    for (std::size_t f = 0; f < features; ++f) {
        data.bins_per_feature[f] = model.bin_edges[f].size() + 2;
        for (std::size_t i = 0; i < n; ++i)
            data.bins[f][i] = bin_index(model.bin_edges[f], train_set.features(order[i], f));
    }
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = train_set.labels[order[i]];

    model.base_score = initial_score(config.init_score, spec.kind, loss, labels);

    std::vector<double> scores(n, model.base_score);
    std::vector<double> grad(n), hess(n), increment(n);
    if (trace) trace->total_loss.push_back(total_loss(loss, scores, labels));

    model.trees.reserve(static_cast<std::size_t>(config.num_rounds));
    for (int round = 0; round < config.num_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto gh = loss.grad_hess(scores[i], labels[i]);
            grad[i] = gh.grad;
            hess[i] = gh.hess;
        }
        TreeGrower grower(data, config, grad, hess);
        model.trees.push_back(grower.grow(increment, trace));
        for (std::size_t i = 0; i < n; ++i) scores[i] += increment[i];
        if (trace) trace->total_loss.push_back(total_loss(loss, scores, labels));
    }
    return model;
}

double Tree::predict(std::span<const double> row, const BinEdges& edges) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const TreeNode& node = nodes[i];
        const double v = row[static_cast<std::size_t>(node.feature)];
        bool go_left;
        if (std::isnan(v))
            go_left = node.missing_left;
        else
            go_left = v <= edges[static_cast<std::size_t>(node.feature)][static_cast<std::size_t>(node.bin_threshold)];
        i = static_cast<std::size_t>(go_left ? node.left : node.right);
    }
    return nodes[i].value;
}

int Tree::num_splits() const {
    return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

int Tree::depth() const {
    std::vector<int> depth(nodes.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, depth[i]);
        if (!nodes[i].is_leaf()) {
            depth[static_cast<std::size_t>(nodes[i].left)] = depth[i] + 1;
            depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
        }
    }
    return deepest;
}

std::vector<double> BoostedModel::predict_raw(const Matrix& features) const {
    if (features.cols() != bin_edges.size())
        throw DataError("predict: model expects " + std::to_string(bin_edges.size()) + " features, got " +
                        std::to_string(features.cols()));
    std::vector<double> out(features.rows(), base_score);
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const auto row = features.row(i);
        double z = base_score;
        for (const Tree& t : trees) z += t.predict(row, bin_edges);
        out[i] = z;
    }
    return out;
}

std::vector<double> BoostedModel::predict_proba(const Matrix& features) const {
    auto scores = predict_raw(features);
    for (auto& s : scores) s = asig(s, shift);
    return scores;
}

}  // namespace asigboost
