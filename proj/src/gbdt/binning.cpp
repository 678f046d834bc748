#include <algorithm>
#include <cmath>

#include "asigboost/error.hpp"
#include "asigboost/gbdt.hpp"

namespace asigboost {

namespace {

// A threshold t with a <= t < b.
double separating_edge(double a, double b) {
    const double mid = a + (b - a) / 2.0;
    return mid < b ? mid : a;
}

std::vector<double> feature_edges(std::vector<double> values, int max_bins) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    std::vector<double> edges;
    if (n < 2) return edges;

    std::size_t distinct = 1;
    for (std::size_t i = 1; i < n; ++i)
        if (values[i] != values[i - 1]) ++distinct;

    if (distinct <= static_cast<std::size_t>(max_bins)) {
        for (std::size_t i = 1; i < n; ++i)
            if (values[i] != values[i - 1]) edges.push_back(separating_edge(values[i - 1], values[i]));
        return edges;
    }

    // Quantile boundaries; a boundary inside a run of equal values moves to
    // the end of that run.
    const auto bins = static_cast<std::size_t>(max_bins);
    for (std::size_t b = 1; b < bins; ++b) {
        std::size_t i = std::max<std::size_t>(b * n / bins, 1);
        while (i < n && values[i] == values[i - 1]) ++i;
        if (i >= n) break;
        const double edge = separating_edge(values[i - 1], values[i]);
        if (edges.empty() || edge > edges.back()) edges.push_back(edge);
    }
    return edges;
}

}  // namespace

BinEdges build_bins(const Dataset& train, int max_bins) {
    if (max_bins < 2 || max_bins > 256) throw ConfigError("max_bins must lie in [2, 256]");
    if (train.size() == 0) throw DataError("build_bins: empty training set");
    BinEdges out(train.features.cols());
    std::vector<double> column;
    for (std::size_t f = 0; f < train.features.cols(); ++f) {
        column.clear();
        for (std::size_t i = 0; i < train.size(); ++i) {
            const double v = train.features(i, f);
            if (!std::isnan(v)) column.push_back(v);
        }
        out[f] = feature_edges(column, max_bins);
    }
    return out;
}

std::uint16_t bin_index(std::span<const double> edges, double value) {
    if (std::isnan(value)) return static_cast<std::uint16_t>(edges.size() + 1);
    return static_cast<std::uint16_t>(std::lower_bound(edges.begin(), edges.end(), value) - edges.begin());
}

}  // namespace asigboost
