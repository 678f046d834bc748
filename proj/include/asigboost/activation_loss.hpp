#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "asigboost/data.hpp"

namespace asigboost {

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before logs.
inline constexpr double kProbClamp = 1e-12;
/// Lower bound applied to every Hessian handed to the booster.
inline constexpr double kHessianFloor = 1e-16;

/// Slope and intercept of the imbalance-dependent shift
/// g(IR) = slope * ln(IR) + intercept.
class AsigParams {
public:
    /// A negative slope makes g decrease with IR; it is rejected unless
    /// `allow_negative_slope` is set.
    AsigParams(double slope, double intercept, bool allow_negative_slope = false);

    double slope() const { return slope_; }
    double intercept() const { return intercept_; }

    friend bool operator==(const AsigParams&, const AsigParams&) = default;

private:
    double slope_;
    double intercept_;
};

enum class LossKind { cross_entropy, focal, asig_focal };

std::string_view to_string(LossKind kind);
/// Accepts the canonical names plus the short CLI forms ce / asig.
LossKind parse_loss_kind(std::string_view text);

struct LossSpec {
    LossKind kind = LossKind::cross_entropy;
    double focal_gamma = 2.0;
    double focal_alpha = 0.25;  // weight of positives; negatives get 1 - focal_alpha
    std::optional<AsigParams> asig;
    std::optional<ImbalanceRatio> ir;

    static LossSpec cross_entropy();
    static LossSpec focal(double gamma = 2.0, double alpha = 0.25);
    static LossSpec asig_focal(AsigParams params, ImbalanceRatio ir, double gamma = 2.0, double alpha = 0.25);

    /// Throws ConfigError when fields required by `kind` are missing or out of range.
    void validate() const;

    /// Activation shift: g_factor(ir, asig) for asig_focal, 0 otherwise.
    double shift() const;

    /// Same spec with `ir` replaced; used when the training fold changes.
    LossSpec with_ir(ImbalanceRatio new_ir) const;
};

struct GradHess {
    double grad;
    double hess;
};

/// Logistic function, stable for large |z|.
double sigmoid(double z);

/// g = slope * ln(IR) + intercept. IR below 1 is rejected.
double g_factor(ImbalanceRatio ir, const AsigParams& params);

/// Shifted sigmoid, sigmoid(z - g).
double asig(double z, double g);

/// A validated LossSpec with its shift resolved once, for per-sample use in
/// the training loop.
class PreparedLoss {
public:
    explicit PreparedLoss(const LossSpec& spec);

    const LossSpec& spec() const { return spec_; }
    double shift() const { return shift_; }

    double value(double z, int y) const;
    GradHess derivatives(double z, int y) const;
    GradHess grad_hess(double z, int y) const;

private:
    LossSpec spec_;
    double shift_;
};

/// Per-sample loss at raw score z for label y (0 or 1).
double loss_value(const LossSpec& spec, double z, int y);

/// Analytic first and second derivative of loss_value with respect to z,
/// before the Hessian floor. The focal Hessian can be negative.
GradHess loss_derivatives(const LossSpec& spec, double z, int y);

/// loss_derivatives with the Hessian floored at kHessianFloor.
GradHess loss_grad_hess(const LossSpec& spec, double z, int y);

}  // namespace asigboost
