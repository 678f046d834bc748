#include <algorithm>
#include <cmath>
#include <numeric>

#include "asigboost/data.hpp"
#include "asigboost/error.hpp"

namespace asigboost {

namespace {

constexpr int kMaxIterations = 1000;
// Iterating with deflated^(2^kSquarings) keeps close eigenvalue pairs from
// stalling convergence.
constexpr int kSquarings = 6;

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void normalize(std::vector<double>& v) {
    const double n = std::sqrt(dot(v, v));
    for (auto& x : v) x /= n;
}

void orthogonalize(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
    for (const auto& b : basis) {
        const double proj = dot(v, b);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * b[i];
    }
}

std::vector<double> multiply(const Matrix& m, const std::vector<double>& v) {
    std::vector<double> out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) out[i] = dot(m.row(i), v);
    return out;
}

double frobenius(const Matrix& m) { return std::sqrt(dot(m.values(), m.values())); }

// Symmetric m raised to 2^kSquarings, rescaled to unit Frobenius norm at each step.
Matrix accelerated(const Matrix& m) {
    const std::size_t d = m.rows();
    Matrix p = m;
    for (int s = 0; s < kSquarings; ++s) {
        const double norm = frobenius(p);
        if (norm == 0.0) break;
        Matrix next(d, d);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = a; b < d; ++b) {
                double sum = 0.0;
                for (std::size_t c = 0; c < d; ++c) sum += p(a, c) * p(c, b);
                next(a, b) = next(b, a) = sum / (norm * norm);
            }
        p = std::move(next);
    }
    return p;
}

// Largest-magnitude loading made positive; earliest index wins ties.
void fix_sign(std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[best])) best = i;
    if (v[best] < 0)
        for (auto& x : v) x = -x;
}

}  // namespace

PcaResult pca_project(const Dataset& dataset, int components) {
    if (components != 1 && components != 2) throw ConfigError("pca: components must be 1 or 2");
    const std::size_t n = dataset.size();
    const std::size_t d = dataset.features.cols();
    if (n < 2) throw DataError("pca: at least 2 samples are required");
    if (static_cast<std::size_t>(components) > d) throw ConfigError("pca: more components than features");

    // z-score; zero-variance features contribute nothing.
    std::vector<double> mean(d, 0.0), scale(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += dataset.features(i, j);
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = dataset.features(i, j) - mean[j];
            scale[j] += c * c;
        }
    std::size_t informative = 0;
    for (auto& s : scale) {
        s = std::sqrt(s / static_cast<double>(n));
        if (s > 0.0) ++informative;
    }
    if (informative == 0) throw DataError("pca: every feature has zero variance");

    Matrix z(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            z(i, j) = scale[j] > 0.0 ? (dataset.features(i, j) - mean[j]) / scale[j] : 0.0;

    Matrix cov(d, d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = z.row(i);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = a; b < d; ++b) cov(a, b) += r[a] * r[b];
    }
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            cov(a, b) /= static_cast<double>(n);
            cov(b, a) = cov(a, b);
        }
    double trace = 0.0;
    for (std::size_t a = 0; a < d; ++a) trace += cov(a, a);

    PcaResult result;
    Matrix deflated = cov;
    for (int k = 0; k < components; ++k) {
        std::vector<double> v(d);
        for (std::size_t i = 0; i < d; ++i) v[i] = 1.0 + 0.1 * static_cast<double>(i);
        orthogonalize(v, result.components);
        normalize(v);

        const double tol = 1e-12 * std::max(1.0, trace);
        double lambda = 0.0;
        bool converged = frobenius(deflated) <= tol;  // remaining spectrum is numerically zero
        const Matrix power = converged ? deflated : accelerated(deflated);
        for (int it = 0; it < kMaxIterations && !converged; ++it) {
            const auto av = multiply(deflated, v);
            lambda = dot(v, av);
            double residual = 0.0;
            for (std::size_t i = 0; i < d; ++i) residual += (av[i] - lambda * v[i]) * (av[i] - lambda * v[i]);
            if (std::sqrt(residual) <= tol) {
                converged = true;
                break;
            }
            auto w = multiply(power, v);
            orthogonalize(w, result.components);
            const double norm = std::sqrt(dot(w, w));
            if (norm == 0.0) {
                lambda = 0.0;
                converged = true;
                break;
            }
            for (std::size_t i = 0; i < d; ++i) v[i] = w[i] / norm;
        }
        if (!converged) throw DataError("pca: power iteration did not converge in 1000 iterations");
        orthogonalize(v, result.components);
        normalize(v);
        fix_sign(v);
        lambda = std::max(lambda, 0.0);

        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) deflated(a, b) -= lambda * v[a] * v[b];

        result.eigenvalues.push_back(lambda);
        result.explained_variance_ratio.push_back(lambda / trace);
        result.components.push_back(std::move(v));
    }

    result.scores = Matrix(n, static_cast<std::size_t>(components));
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < components; ++k)
            result.scores(i, static_cast<std::size_t>(k)) = dot(z.row(i), result.components[static_cast<std::size_t>(k)]);
    return result;
}

}  // namespace asigboost
