#pragma once

#include <cstddef>
#include <cstdint>

#include "asigboost/data.hpp"

namespace asigboost {

/// Negatives ~ N(0, I), positives ~ N(separation * 1, I) in `features`
/// dimensions. Rows are interleaved deterministically from the seed.
struct TwoGaussianOptions {
    std::size_t negatives = 20000;
    std::size_t positives = 1000;
    std::size_t features = 5;
    double separation = 0.6;
    std::uint64_t seed = 0;
};

Dataset make_two_gaussian(const TwoGaussianOptions& options);

}  // namespace asigboost
