#include "asigboost/synthetic.hpp"

#include "asigboost/error.hpp"
#include "asigboost/random.hpp"

namespace asigboost {

Dataset make_two_gaussian(const TwoGaussianOptions& options) {
    if (options.features == 0) throw ConfigError("two_gaussian: need at least one feature");
    const std::size_t n = options.negatives + options.positives;
    Dataset ds;
    ds.source_tag = "two_gaussian";
    ds.features = Matrix(n, options.features);
    ds.labels.assign(n, 0);
    for (std::size_t j = 0; j < options.features; ++j) ds.feature_names.push_back("x" + std::to_string(j));

    // Label layout first (uniform interleaving), then features, each from
    // its own stream.
    CounterRng layout(options.seed, 1);
    std::size_t remaining_pos = options.positives;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t left = n - i;
        if (layout.below(left) < remaining_pos) {
            ds.labels[i] = 1;
            --remaining_pos;
        }
    }
    CounterRng noise(options.seed, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double mean = ds.labels[i] ? options.separation : 0.0;
        for (std::size_t j = 0; j < options.features; ++j) ds.features(i, j) = mean + noise.normal();
    }
    return ds;
}

}  // namespace asigboost
