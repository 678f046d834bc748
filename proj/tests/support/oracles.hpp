#pragma once
// Independent reference implementations and small generators used by the
// unit tests. Nothing here calls into the library's numerical code.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asigboost/data.hpp"
#include "asigboost/random.hpp"

namespace oracle {

/// Twice the Mann-Whitney pair count, by brute force over all pairs.
inline std::uint64_t twice_pair_wins(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    std::uint64_t twice = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            if (scores[i] > scores[j]) twice += 2;
            else if (scores[i] == scores[j]) twice += 1;
        }
    }
    return twice;
}

inline double brute_force_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    std::uint64_t pos = 0;
    for (const auto y : labels) pos += y;
    const std::uint64_t neg = labels.size() - pos;
    return static_cast<double>(twice_pair_wins(scores, labels)) / static_cast<double>(2 * pos * neg);
}

/// Textbook forms, written directly from the definitions with plain exp/log.
inline double plain_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double clamp_p(double p) { return std::fmin(std::fmax(p, 1e-12), 1.0 - 1e-12); }

inline double ce_loss(double z, int y) {
    return y ? -std::log(clamp_p(plain_sigmoid(z))) : -std::log(clamp_p(plain_sigmoid(-z)));
}

inline double focal_loss(double z, int y, double gamma, double alpha, double shift = 0.0) {
    const double p = clamp_p(plain_sigmoid(z - shift));
    const double q = clamp_p(plain_sigmoid(shift - z));
    if (y) return -alpha * std::pow(q, gamma) * std::log(p);
    return -(1.0 - alpha) * std::pow(p, gamma) * std::log(q);
}

/// Ordinary least squares y = a x + b through the raw normal equations
/// [Sxx Sx; Sx n] [a b]^T = [Sxy Sy]^T solved by Cramer's rule.
struct LineFit {
    double slope;
    double intercept;
    double r_squared;
};

inline LineFit normal_equations(const std::vector<double>& x, const std::vector<double>& y) {
    long double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<long double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += static_cast<long double>(x[i]) * x[i];
        sxy += static_cast<long double>(x[i]) * y[i];
    }
    const long double det = sxx * n - sx * sx;
    const long double a = (sxy * n - sx * sy) / det;
    const long double b = (sxx * sy - sx * sxy) / det;
    long double mean = sy / n, ss_tot = 0, ss_res = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        ss_tot += (y[i] - mean) * (y[i] - mean);
        const long double r = y[i] - (a * x[i] + b);
        ss_res += r * r;
    }
    return {static_cast<double>(a), static_cast<double>(b), static_cast<double>(1.0L - ss_res / ss_tot)};
}

/// Closed-form eigenvalues of the symmetric matrix [[a, b], [b, c]], largest first.
inline std::pair<double, double> eigen2x2(double a, double b, double c) {
    const double mid = 0.5 * (a + c);
    const double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    return {mid + rad, mid - rad};
}

/// Dataset with `pos` positives and `neg` negatives on `features` standard
/// normal columns; positives are shifted by `shift` in every column.
inline asigboost::Dataset gaussian_dataset(std::size_t neg, std::size_t pos, std::size_t features, double shift,
                                           std::uint64_t seed) {
    asigboost::CounterRng rng(seed, 77);
    asigboost::Dataset ds;
    const std::size_t n = neg + pos;
    ds.features = asigboost::Matrix(n, features);
    ds.labels.assign(n, 0);
    for (std::size_t j = 0; j < features; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    // Positives spread evenly through the rows.
    for (std::size_t k = 0; k < pos; ++k) ds.labels[k * n / pos] = 1;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < features; ++j) ds.features(i, j) = rng.normal() + (ds.labels[i] ? shift : 0.0);
    return ds;
}

}  // namespace oracle
