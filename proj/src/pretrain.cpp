#include "asigboost/pretrain.hpp"

#include <algorithm>
#include <cmath>

#include "asigboost/error.hpp"
#include "asigboost/metrics.hpp"
#include "asigboost/parallel.hpp"

namespace asigboost {

namespace {

constexpr std::string_view kPretrainMagic = "asigboost-pretrain";
constexpr int kPretrainVersion = 1;

// Grid values are snapped to multiples of 1e-9 so 0.9 prints as 0.9.
double snap(double v) { return std::round(v * 1e9) / 1e9; }

}  // namespace

ShiftGrid ShiftGrid::parse(std::string_view text) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("shift grid must be lo:hi:step, got '" + std::string(text) + "'");
    ShiftGrid g;
    const auto lo = parse_double(parts[0]);
    const auto hi = parse_double(parts[1]);
    const auto step = parse_double(parts[2]);
    if (!lo || !hi || !step) throw ConfigError("shift grid has a non-numeric field: '" + std::string(text) + "'");
    g.lo = *lo;
    g.hi = *hi;
    g.step = *step;
    shift_grid_values(g);  // validates
    return g;
}

std::string ShiftGrid::to_string() const {
    return format_double(lo) + ":" + format_double(hi) + ":" + format_double(step);
}

std::vector<double> shift_grid_values(const ShiftGrid& grid) {
    if (!std::isfinite(grid.lo) || !std::isfinite(grid.hi) || !std::isfinite(grid.step))
        throw ConfigError("shift grid bounds must be finite");
    if (!(grid.step > 0.0)) throw ConfigError("shift grid step must be positive");
    if (grid.hi < grid.lo) throw ConfigError("shift grid needs lo <= hi");
    const double span = (grid.hi - grid.lo) / grid.step;
    if (span > 1e6) throw ConfigError("shift grid has too many points");
    const auto steps = static_cast<long>(std::llround(span));
    if (std::abs(grid.lo + static_cast<double>(steps) * grid.step - grid.hi) > 1e-9)
        throw ConfigError("shift grid " + grid.to_string() + ": hi is not reachable from lo in whole steps");
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(steps) + 1);
    for (long i = 0; i < steps; ++i) values.push_back(snap(grid.lo + static_cast<double>(i) * grid.step));
    values.push_back(grid.hi);
    return values;
}

ShiftSearch best_shift_for(const Dataset& dataset, const ShiftGrid& grid, const BoostConfig& config,
                           const EvalProtocol& protocol) {
    ShiftSearch out;
    out.shifts = shift_grid_values(grid);
    out.mean_aucs.assign(out.shifts.size(), 0.0);
    const ImbalanceRatio ir = dataset.imbalance_ratio();

    // Zero slope pins the shift to the grid value whatever the fold's IR.
    parallel_for(out.shifts.size(), protocol.jobs, [&](std::size_t k) {
        const LossSpec spec = LossSpec::asig_focal(AsigParams(0.0, out.shifts[k], true), ir, protocol.focal_gamma,
                                                   protocol.focal_alpha);
        out.mean_aucs[k] = evaluate(dataset, config, spec, protocol.repeats, protocol.train_fraction,
                                    protocol.base_seed)
                               .auc_mean;
    });

    std::size_t best = 0;
    for (std::size_t k = 1; k < out.shifts.size(); ++k)
        if (out.mean_aucs[k] > out.mean_aucs[best]) best = k;
    out.best_shift = out.shifts[best];
    out.best_auc = out.mean_aucs[best];
    return out;
}

LogFit fit_log_regression(std::span<const ShiftPoint> points) {
    std::vector<double> xs;
    for (const auto& p : points) {
        if (!(p.ir >= 1.0)) throw ConfigError("fit_log_regression: IR must be >= 1, got " + format_double(p.ir));
        if (!std::isfinite(p.best_shift)) throw ConfigError("fit_log_regression: non-finite shift");
        xs.push_back(std::log(p.ir));
    }
    {
        auto distinct = xs;
        std::sort(distinct.begin(), distinct.end());
        if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2)
            throw DataError("fit_log_regression: at least two distinct IRs are required");
    }

    const auto n = static_cast<double>(points.size());
    if (std::all_of(points.begin(), points.end(),
                    [&](const ShiftPoint& p) { return p.best_shift == points.front().best_shift; }))
        return {AsigParams(0.0, points.front().best_shift, true), 1.0};

    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        mean_x += xs[i];
        mean_y += points[i].best_shift;
    }
    mean_x /= n;
    mean_y /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double dx = xs[i] - mean_x;
        const double dy = points[i].best_shift - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    const double slope = sxy / sxx;
    const double intercept = mean_y - slope * mean_x;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double r = points[i].best_shift - (slope * xs[i] + intercept);
        ss_res += r * r;
    }
    return {AsigParams(slope, intercept, true), 1.0 - ss_res / syy};
}

std::vector<double> log_spaced(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw ConfigError("log_spaced: need 0 < lo <= hi and count >= 1");
    if (count == 1) return {lo};
    std::vector<double> out;
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < count; ++i) out.push_back(std::exp(a + (b - a) * i / (count - 1)));
    out.front() = lo;
    out.back() = hi;
    return out;
}

PretrainResult pretrain_asig(const Dataset& baseline, std::span<const double> ir_targets, const ShiftGrid& grid,
                             const BoostConfig& config, const EvalProtocol& protocol, std::uint64_t seed) {
    const auto shifts = shift_grid_values(grid);
    PretrainResult result;
    result.seed = seed;

    std::vector<Dataset> subsets;
    for (const double target : ir_targets) {
        try {
            subsets.push_back(resample_to_ir(baseline, ImbalanceRatio(target), seed));
        } catch (const DataError& e) {
            result.skipped.push_back(format_double(target) + ": " + e.what());
        }
    }

    // One work item per (subset, shift); each evaluates its repeats serially.
    const std::size_t k = shifts.size();
    std::vector<double> aucs(subsets.size() * k, 0.0);
    std::vector<std::string> failures(subsets.size());
    parallel_for(aucs.size(), protocol.jobs, [&](std::size_t item) {
        const Dataset& ds = subsets[item / k];
        const LossSpec spec = LossSpec::asig_focal(AsigParams(0.0, shifts[item % k], true), ds.imbalance_ratio(),
                                                   protocol.focal_gamma, protocol.focal_alpha);
        try {
            aucs[item] = evaluate(ds, config, spec, protocol.repeats, protocol.train_fraction, protocol.base_seed)
                             .auc_mean;
        } catch (const DataError& e) {
            aucs[item] = std::nan("");
            if (item % k == 0) failures[item / k] = e.what();
        }
    });

    for (std::size_t s = 0; s < subsets.size(); ++s) {
        const double ir = subsets[s].imbalance_ratio().value();
        if (std::isnan(aucs[s * k])) {
            result.skipped.push_back(format_double(ir) + ": " + failures[s]);
            continue;
        }
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (aucs[s * k + j] > aucs[s * k + best]) best = j;
        result.points.push_back({ir, shifts[best], aucs[s * k + best]});
    }
    if (result.points.size() < 2)
        throw DataError("pretrain: fewer than two usable IR targets (" + std::to_string(result.points.size()) + ")");

    const LogFit fit = fit_log_regression(result.points);
    result.asig = fit.params;
    result.r_squared = fit.r_squared;
    return result;
}

std::string PretrainResult::serialize() const {
    std::string out = std::string(kPretrainMagic) + " " + std::to_string(kPretrainVersion) + "\n";
    for (const auto& p : points)
        out += "point " + format_double(p.ir) + " " + format_double(p.best_shift) + " " + format_double(p.best_auc) + "\n";
    for (const auto& s : skipped) out += "skipped " + s + "\n";
    out += "alpha " + format_double(asig.slope()) + "\n";
    out += "beta " + format_double(asig.intercept()) + "\n";
    out += "r_squared " + format_double(r_squared) + "\n";
    out += "seed " + std::to_string(seed) + "\n";
    return out;
}

PretrainResult PretrainResult::parse(std::string_view text) {
    PretrainResult r;
    std::optional<double> alpha, beta, r2;
    std::optional<std::int64_t> seed;
    const auto lines = split(text, '\n');
    if (lines.empty() || lines.front() != std::string(kPretrainMagic) + " " + std::to_string(kPretrainVersion))
        throw ConfigError("not an asigboost pretrain document (version " + std::to_string(kPretrainVersion) + ")");
    auto number = [](const std::string& s) {
        const auto v = parse_double(s);
        if (!v) throw ConfigError("pretrain document: not a number: '" + s + "'");
        return *v;
    };
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (line.empty()) continue;
        const auto space = line.find(' ');
        const std::string key = line.substr(0, space);
        const std::string rest = space == std::string::npos ? "" : line.substr(space + 1);
        if (key == "point") {
            const auto f = split(rest, ' ');
            if (f.size() != 3) throw ConfigError("pretrain document: point needs ir, shift, auc");
            r.points.push_back({number(f[0]), number(f[1]), number(f[2])});
        } else if (key == "skipped") {
            r.skipped.push_back(rest);
        } else if (key == "alpha") {
            alpha = number(rest);
        } else if (key == "beta") {
            beta = number(rest);
        } else if (key == "r_squared") {
            r2 = number(rest);
        } else if (key == "seed") {
            seed = parse_int(rest);
            if (!seed) throw ConfigError("pretrain document: bad seed");
        } else {
            throw ConfigError("pretrain document: unknown line '" + line + "'");
        }
    }
    if (!alpha || !beta || !r2 || !seed) throw ConfigError("pretrain document: footer incomplete");
    r.asig = AsigParams(*alpha, *beta, true);
    r.r_squared = *r2;
    r.seed = static_cast<std::uint64_t>(*seed);
    return r;
}

}  // namespace asigboost
