#include <sstream>

#include "asigboost/error.hpp"
#include "asigboost/gbdt.hpp"

namespace asigboost {

namespace {

constexpr std::string_view kMagic = "asigboost-model";
constexpr int kVersion = 1;

void write_tree(const Tree& tree, std::size_t index, std::string& out) {
    const TreeNode& node = tree.nodes[index];
    if (node.is_leaf()) {
        out += "leaf " + format_double(node.value) + "\n";
        return;
    }
    out += "split " + std::to_string(node.feature) + " " + std::to_string(node.bin_threshold) + " " +
           (node.missing_left ? "L" : "R") + "\n";
    write_tree(tree, static_cast<std::size_t>(node.left), out);
    write_tree(tree, static_cast<std::size_t>(node.right), out);
}

std::string optional_number(const std::optional<double>& v) { return v ? format_double(*v) : "-"; }

class Reader {
public:
    explicit Reader(std::string_view text) : lines_{split(text, '\n')} {
        while (!lines_.empty() && lines_.back().empty()) lines_.pop_back();
    }

    std::vector<std::string> next() {
        if (pos_ >= lines_.size()) fail("unexpected end of document");
        ++pos_;
        std::vector<std::string> tokens;
        std::istringstream ss(lines_[pos_ - 1]);
        for (std::string t; ss >> t;) tokens.push_back(t);
        return tokens;
    }

    // The rest of the current line after the first `skip` tokens, verbatim.
    std::string tail(std::size_t skip) const {
        std::string_view line = lines_[pos_ - 1];
        for (std::size_t i = 0; i < skip; ++i) {
            line = line.substr(std::min(line.find(' '), line.size()));
            line.remove_prefix(std::min<std::size_t>(1, line.size()));
        }
        return std::string(line);
    }

    std::vector<std::string> expect(std::string_view keyword, std::size_t min_tokens) {
        auto t = next();
        if (t.empty() || t[0] != keyword || t.size() < min_tokens) fail("expected '" + std::string(keyword) + "'");
        return t;
    }

    bool done() const { return pos_ >= lines_.size(); }

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("model document line " + std::to_string(pos_) + ": " + what);
    }

    double number(const std::string& token) const {
        const auto v = parse_double(token);
        if (!v) fail("not a number: '" + token + "'");
        return *v;
    }

    long integer(const std::string& token) const {
        const auto v = parse_int(token);
        if (!v) fail("not an integer: '" + token + "'");
        return static_cast<long>(*v);
    }

private:
    std::vector<std::string> lines_;
    std::size_t pos_ = 0;
};

void read_tree(Reader& in, Tree& tree, std::size_t features, const BinEdges& edges, int depth) {
    if (depth > 64) in.fail("tree too deep");
    const auto t = in.next();
    const auto index = tree.nodes.size();
    tree.nodes.emplace_back();
    if (!t.empty() && t[0] == "leaf" && t.size() == 2) {
        tree.nodes[index].value = in.number(t[1]);
        return;
    }
    if (t.size() != 4 || t[0] != "split" || (t[3] != "L" && t[3] != "R")) in.fail("expected 'leaf' or 'split'");
    const long f = in.integer(t[1]);
    const long thr = in.integer(t[2]);
    if (f < 0 || static_cast<std::size_t>(f) >= features) in.fail("split feature out of range");
    if (thr < 0 || static_cast<std::size_t>(thr) >= edges[static_cast<std::size_t>(f)].size())
        in.fail("split threshold out of range");
    tree.nodes[index].feature = static_cast<int>(f);
    tree.nodes[index].bin_threshold = static_cast<int>(thr);
    tree.nodes[index].missing_left = t[3] == "L";
    tree.nodes[index].left = static_cast<int>(tree.nodes.size());
    read_tree(in, tree, features, edges, depth + 1);
    tree.nodes[index].right = static_cast<int>(tree.nodes.size());
    read_tree(in, tree, features, edges, depth + 1);
}

}  // namespace

std::string BoostedModel::serialize() const {
    std::string out;
    out += std::string(kMagic) + " " + std::to_string(kVersion) + "\n";
    const LossSpec& s = loss_spec_used;
    std::optional<double> slope, intercept, ir;
    if (s.asig) {
        slope = s.asig->slope();
        intercept = s.asig->intercept();
    }
    if (s.ir) ir = s.ir->value();
    out += "loss " + std::string(to_string(s.kind)) + " " + format_double(s.focal_gamma) + " " +
           format_double(s.focal_alpha) + " " + optional_number(slope) + " " + optional_number(intercept) + " " +
           optional_number(ir) + "\n";
    out += "shift " + format_double(shift) + "\n";
    out += "base_score " + format_double(base_score) + "\n";
    out += "features " + std::to_string(bin_edges.size()) + "\n";
    for (std::size_t f = 0; f < bin_edges.size(); ++f) {
        out += "feature " + std::to_string(f) + " " + std::to_string(bin_edges[f].size());
        for (const double e : bin_edges[f]) out += " " + format_double(e);
        out += "\n";
        out += "name " + (f < feature_names.size() ? feature_names[f] : std::string{}) + "\n";
    }
    out += "trees " + std::to_string(trees.size()) + "\n";
    for (std::size_t t = 0; t < trees.size(); ++t) {
        out += "tree " + std::to_string(t) + " " + std::to_string(trees[t].nodes.size()) + "\n";
        write_tree(trees[t], 0, out);
    }
    out += "end\n";
    return out;
}

BoostedModel BoostedModel::deserialize(std::string_view text) {
    Reader in(text);
    BoostedModel model;

    const auto header = in.next();
    if (header.size() != 2 || header[0] != kMagic) in.fail("not an asigboost model document");
    if (in.integer(header[1]) != kVersion)
        in.fail("unsupported model version " + header[1] + " (expected " + std::to_string(kVersion) + ")");

    const auto loss = in.expect("loss", 7);
    if (loss.size() != 7) in.fail("loss line needs 6 fields");
    LossSpec spec;
    spec.kind = parse_loss_kind(loss[1]);
    spec.focal_gamma = in.number(loss[2]);
    spec.focal_alpha = in.number(loss[3]);
    if (loss[4] != "-" || loss[5] != "-") spec.asig = AsigParams(in.number(loss[4]), in.number(loss[5]), true);
    if (loss[6] != "-") spec.ir = ImbalanceRatio(in.number(loss[6]));
    spec.validate();
    model.loss_spec_used = spec;

    model.shift = in.number(in.expect("shift", 2)[1]);
    model.base_score = in.number(in.expect("base_score", 2)[1]);

    const long features = in.integer(in.expect("features", 2)[1]);
    if (features < 0) in.fail("negative feature count");
    model.bin_edges.resize(static_cast<std::size_t>(features));
    model.feature_names.resize(static_cast<std::size_t>(features));
    for (std::size_t f = 0; f < static_cast<std::size_t>(features); ++f) {
        const auto line = in.expect("feature", 3);
        if (in.integer(line[1]) != static_cast<long>(f)) in.fail("feature index out of order");
        const long count = in.integer(line[2]);
        if (count < 0 || line.size() != static_cast<std::size_t>(count) + 3) in.fail("edge count mismatch");
        auto& edges = model.bin_edges[f];
        for (long e = 0; e < count; ++e) {
            edges.push_back(in.number(line[static_cast<std::size_t>(e) + 3]));
            if (edges.size() > 1 && !(edges.back() > edges[edges.size() - 2])) in.fail("bin edges must increase");
        }
        const auto name_line = in.next();
        if (name_line.empty() || name_line[0] != "name") in.fail("expected 'name'");
        model.feature_names[f] = in.tail(1);
    }

    const long trees = in.integer(in.expect("trees", 2)[1]);
    if (trees < 0) in.fail("negative tree count");
    model.trees.resize(static_cast<std::size_t>(trees));
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        const auto line = in.expect("tree", 3);
        if (in.integer(line[1]) != static_cast<long>(t)) in.fail("tree index out of order");
        const long nodes = in.integer(line[2]);
        read_tree(in, model.trees[t], model.bin_edges.size(), model.bin_edges, 0);
        if (static_cast<long>(model.trees[t].nodes.size()) != nodes) in.fail("tree node count mismatch");
    }
    in.expect("end", 1);
    if (!in.done()) in.fail("trailing content after 'end'");
    return model;
}

}  // namespace asigboost
