#include "asigboost/activation_loss.hpp"

#include <algorithm>
#include <cmath>

#include "asigboost/error.hpp"

namespace asigboost {

namespace {

// log(sigmoid(s)) without forming sigmoid(s) first.
double log_sigmoid(double s) {
    return s >= 0.0 ? -std::log1p(std::exp(-s)) : s - std::log1p(std::exp(s));
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

AsigParams::AsigParams(double slope, double intercept, bool allow_negative_slope)
    : slope_{slope}, intercept_{intercept} {
    if (!std::isfinite(slope) || !std::isfinite(intercept)) throw ConfigError("asig parameters must be finite");
    if (slope < 0.0 && !allow_negative_slope)
        throw ConfigError("asig slope must be non-negative so the shift grows with IR, got " + format_double(slope));
}

std::string_view to_string(LossKind kind) {
    switch (kind) {
        case LossKind::cross_entropy: return "cross_entropy";
        case LossKind::focal: return "focal";
        case LossKind::asig_focal: return "asig_focal";
    }
    return "?";
}

LossKind parse_loss_kind(std::string_view text) {
    if (text == "cross_entropy" || text == "ce") return LossKind::cross_entropy;
    if (text == "focal") return LossKind::focal;
    if (text == "asig_focal" || text == "asig") return LossKind::asig_focal;
    throw ConfigError("unknown loss '" + std::string(text) + "' (expected ce, focal or asig)");
}

LossSpec LossSpec::cross_entropy() { return LossSpec{}; }

LossSpec LossSpec::focal(double gamma, double alpha) {
    LossSpec s;
    s.kind = LossKind::focal;
    s.focal_gamma = gamma;
    s.focal_alpha = alpha;
    s.validate();
    return s;
}

LossSpec LossSpec::asig_focal(AsigParams params, ImbalanceRatio ir, double gamma, double alpha) {
    LossSpec s;
    s.kind = LossKind::asig_focal;
    s.focal_gamma = gamma;
    s.focal_alpha = alpha;
    s.asig = params;
    s.ir = ir;
    s.validate();
    return s;
}

void LossSpec::validate() const {
    if (kind == LossKind::cross_entropy) return;
    if (!std::isfinite(focal_gamma) || focal_gamma < 0.0)
        throw ConfigError("focal gamma must be finite and >= 0, got " + format_double(focal_gamma));
    if (!(focal_alpha > 0.0 && focal_alpha < 1.0))
        throw ConfigError("focal alpha must lie in (0, 1), got " + format_double(focal_alpha));
    if (kind == LossKind::asig_focal) {
        if (!asig) throw ConfigError("asig_focal loss requires asig parameters");
        if (!ir) throw ConfigError("asig_focal loss requires the training imbalance ratio");
        if (ir->value() < 1.0) throw ConfigError("asig_focal loss requires IR >= 1");
    }
}

double LossSpec::shift() const {
    if (kind != LossKind::asig_focal) return 0.0;
    validate();
    return g_factor(*ir, *asig);
}

LossSpec LossSpec::with_ir(ImbalanceRatio new_ir) const {
    LossSpec s = *this;
    s.ir = new_ir;
    return s;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double g_factor(ImbalanceRatio ir, const AsigParams& params) {
    if (ir.value() < 1.0)
        throw ConfigError("g_factor: IR must be >= 1 (positives are the minority), got " + format_double(ir.value()));
    return params.slope() * std::log(ir.value()) + params.intercept();
}

double asig(double z, double g) { return sigmoid(z - g); }

PreparedLoss::PreparedLoss(const LossSpec& spec) : spec_{spec}, shift_{0.0} {
    spec_.validate();
    shift_ = spec_.shift();
}

double PreparedLoss::value(double z, int y) const {
    const double p = clamp_prob(asig(z, shift_));
    const double q = clamp_prob(asig(-z, -shift_));  // 1 - p without cancellation
    if (spec_.kind == LossKind::cross_entropy) return y == 1 ? -std::log(p) : -std::log(q);

    const double gamma = spec_.focal_gamma;
    if (y == 1) return -spec_.focal_alpha * std::pow(q, gamma) * std::log(p);
    return -(1.0 - spec_.focal_alpha) * std::pow(p, gamma) * std::log(q);
}

GradHess PreparedLoss::derivatives(double z, int y) const {
    const double s = z - shift_;
    const double p = sigmoid(s);
    const double q = sigmoid(-s);
    if (spec_.kind == LossKind::cross_entropy) return {y == 1 ? -q : p, p * q};

    const double gamma = spec_.focal_gamma;
    if (y == 1) {
        // L = -a q^g ln p, with dp/ds = p q.
        const double a = spec_.focal_alpha;
        const double ln_p = log_sigmoid(s);
        const double qg = std::pow(q, gamma);
        const double inner = gamma * p * ln_p - q;
        return {a * qg * inner, a * p * qg * (-gamma * inner + q * (gamma * ln_p + gamma + 1.0))};
    }
    // L = -b p^g ln q; mirror image of the positive case.
    const double b = 1.0 - spec_.focal_alpha;
    const double ln_q = log_sigmoid(-s);
    const double pg = std::pow(p, gamma);
    const double inner = gamma * q * ln_q - p;
    return {-b * pg * inner, b * q * pg * (-gamma * inner + p * (gamma * ln_q + gamma + 1.0))};
}

GradHess PreparedLoss::grad_hess(double z, int y) const {
    auto gh = derivatives(z, y);
    gh.hess = std::max(gh.hess, kHessianFloor);
    return gh;
}

double loss_value(const LossSpec& spec, double z, int y) { return PreparedLoss(spec).value(z, y); }

GradHess loss_derivatives(const LossSpec& spec, double z, int y) { return PreparedLoss(spec).derivatives(z, y); }

GradHess loss_grad_hess(const LossSpec& spec, double z, int y) { return PreparedLoss(spec).grad_hess(z, y); }

}  // namespace asigboost
