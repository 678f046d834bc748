#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "asigboost/error.hpp"
#include "asigboost/metrics.hpp"
#include "asigboost/pretrain.hpp"
#include "asigboost/random.hpp"
#include "support/oracles.hpp"

using namespace asigboost;

namespace {

BoostConfig quick_config() {
    BoostConfig c;
    c.num_rounds = 10;
    c.max_leaves = 4;
    c.min_samples_leaf = 5;
    return c;
}

EvalProtocol quick_protocol() {
    EvalProtocol p;
    p.repeats = 2;
    return p;
}

}  // namespace

TEST_CASE("shift grid examples") {
    const auto def = shift_grid_values(ShiftGrid{});
    REQUIRE(def.size() == 21);
    CHECK(def.front() == -3.0);
    CHECK(def.back() == 3.0);
    CHECK(def[10] == 0.0);
    CHECK(def[11] == 0.3);
    CHECK(def[19] == 2.7);

    CHECK(shift_grid_values(ShiftGrid::parse("0:1:0.5")) == std::vector<double>{0.0, 0.5, 1.0});
    CHECK_THROWS_AS(ShiftGrid::parse("0:1:2"), ConfigError);
    CHECK_THROWS_AS(ShiftGrid::parse("0:0:0"), ConfigError);
    CHECK_THROWS_AS(ShiftGrid::parse("1:0:0.5"), ConfigError);
    CHECK_THROWS_AS(ShiftGrid::parse("0:1"), ConfigError);
    CHECK_THROWS_AS(ShiftGrid::parse("a:1:0.5"), ConfigError);
    CHECK(shift_grid_values(ShiftGrid::parse("0:0:1")) == std::vector<double>{0.0});
    CHECK(ShiftGrid::parse(ShiftGrid{}.to_string()).to_string() == "-3:3:0.3");
}

TEST_CASE("log-IR regression examples") {
    const std::vector<ShiftPoint> e = {{std::exp(1.0), 1.0, 0.8}, {std::exp(2.0), 2.0, 0.8}};
    const auto fit = fit_log_regression(e);
    CHECK(fit.params.slope() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(fit.params.intercept()) < 1e-12);
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<ShiftPoint> line = {{1.0, 0.5, 0}, {std::exp(1.0), 0.7, 0}, {std::exp(2.0), 0.9, 0}};
    const auto l = fit_log_regression(line);
    CHECK(l.params.slope() == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(l.params.intercept() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(l.r_squared == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<ShiftPoint> flat = {{20, 0.0, 0}, {200, 0.0, 0}};
    const auto f = fit_log_regression(flat);
    CHECK(f.params.slope() == 0.0);
    CHECK(f.params.intercept() == 0.0);
    CHECK(f.r_squared == 1.0);

    const std::vector<ShiftPoint> falling = {{20, 1.0, 0}, {200, -1.0, 0}};
    CHECK(fit_log_regression(falling).params.slope() < 0.0);

    CHECK_THROWS_AS(fit_log_regression(std::vector<ShiftPoint>{{20, 1, 0}}), DataError);
    CHECK_THROWS_AS(fit_log_regression(std::vector<ShiftPoint>{{20, 1, 0}, {20, 2, 0}}), DataError);
    CHECK_THROWS_AS(fit_log_regression(std::vector<ShiftPoint>{{0.5, 1, 0}, {20, 2, 0}}), ConfigError);
}

TEST_CASE("log-IR regression agrees with the normal-equations oracle") {
    CounterRng rng(50);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 3 + rng.below(30);
        const double a = rng.normal(), b = rng.normal();
        std::vector<ShiftPoint> pts;
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < n; ++i) {
            const double ir = 1.0 + 300.0 * rng.uniform();
            const double shift = a * std::log(ir) + b + 0.3 * rng.normal();
            pts.push_back({ir, shift, 0.7});
            xs.push_back(std::log(ir));
            ys.push_back(shift);
        }
        const auto fit = fit_log_regression(pts);
        const auto ref = oracle::normal_equations(xs, ys);
        CHECK(fit.params.slope() == doctest::Approx(ref.slope).epsilon(1e-9));
        CHECK(fit.params.intercept() == doctest::Approx(ref.intercept).epsilon(1e-9).scale(1.0));
        CHECK(fit.r_squared == doctest::Approx(ref.r_squared).epsilon(1e-9).scale(1.0));
        CHECK(fit.r_squared <= 1.0);

        // Residuals are orthogonal to the regressors.
        double sum_r = 0, sum_rx = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = ys[i] - (fit.params.slope() * xs[i] + fit.params.intercept());
            sum_r += r;
            sum_rx += r * xs[i];
        }
        CHECK(std::abs(sum_r) < 1e-9);
        CHECK(std::abs(sum_rx) < 1e-9);
    }
}

TEST_CASE("log_spaced") {
    const auto v = log_spaced(20, 200, 8);
    REQUIRE(v.size() == 8);
    CHECK(v.front() == 20.0);
    CHECK(v.back() == 200.0);
    for (std::size_t i = 1; i < v.size(); ++i)
        CHECK(std::log(v[i]) - std::log(v[i - 1]) == doctest::Approx(std::log(10.0) / 7).epsilon(1e-12));
    CHECK(log_spaced(5, 9, 1) == std::vector<double>{5});
    CHECK_THROWS_AS(log_spaced(0, 10, 3), ConfigError);
    CHECK_THROWS_AS(log_spaced(10, 5, 3), ConfigError);
}

TEST_CASE("best_shift_for picks an argmax from the grid") {
    const Dataset ds = oracle::gaussian_dataset(1000, 50, 3, 0.8, 3);
    const ShiftGrid grid = ShiftGrid::parse("-1:1:0.5");
    const auto search = best_shift_for(ds, grid, quick_config(), quick_protocol());
    REQUIRE(search.shifts == shift_grid_values(grid));
    CHECK(std::find(search.shifts.begin(), search.shifts.end(), search.best_shift) != search.shifts.end());
    const double top = *std::max_element(search.mean_aucs.begin(), search.mean_aucs.end());
    CHECK(search.best_auc == top);
    const auto first = std::find(search.mean_aucs.begin(), search.mean_aucs.end(), top) - search.mean_aucs.begin();
    CHECK(search.best_shift == search.shifts[static_cast<std::size_t>(first)]);

    // Each grid point is the evaluate score of a model trained at that shift.
    const LossSpec at_half = LossSpec::asig_focal(AsigParams(0, 0.5), ds.imbalance_ratio());
    CHECK(search.mean_aucs[3] == evaluate(ds, quick_config(), at_half, 2, 0.7, 0).auc_mean);

    EvalProtocol parallel = quick_protocol();
    parallel.jobs = 4;
    const auto again = best_shift_for(ds, grid, quick_config(), parallel);
    CHECK(again.mean_aucs == search.mean_aucs);
}

TEST_CASE("best_shift_for resolves ties to the smaller shift") {
    // Perfectly separable: every shift scores 1.
    Dataset ds = oracle::gaussian_dataset(300, 30, 2, 0.0, 4);
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.labels[i]) ds.features(i, 1) += 20.0;
    const auto search = best_shift_for(ds, ShiftGrid::parse("-1:1:0.5"), quick_config(), quick_protocol());
    for (const double a : search.mean_aucs) CHECK(a == 1.0);
    CHECK(search.best_shift == -1.0);
}

TEST_CASE("pretrain_asig on a singleton grid") {
    const Dataset base = oracle::gaussian_dataset(2000, 200, 2, 0.8, 5);
    const std::vector<double> targets = {20, 40, 60};
    const auto r = pretrain_asig(base, targets, ShiftGrid::parse("0:0:1"), quick_config(), quick_protocol(), 7);
    REQUIRE(r.points.size() == 3);
    for (const auto& p : r.points) CHECK(p.best_shift == 0.0);
    CHECK(r.asig.slope() == 0.0);
    CHECK(r.asig.intercept() == 0.0);
    CHECK(r.r_squared == 1.0);
    CHECK(r.points[0].ir == 20.0);
    CHECK(r.seed == 7);
}

TEST_CASE("pretrain_asig is deterministic and round-trips") {
    const Dataset base = oracle::gaussian_dataset(2000, 150, 3, 0.8, 6);
    const std::vector<double> targets = {20, 50, 1e6};
    const ShiftGrid grid = ShiftGrid::parse("-1:1:1");
    const auto a = pretrain_asig(base, targets, grid, quick_config(), quick_protocol(), 3);
    EvalProtocol parallel = quick_protocol();
    parallel.jobs = 3;
    const auto b = pretrain_asig(base, targets, grid, quick_config(), parallel, 3);
    CHECK(a.serialize() == b.serialize());
    REQUIRE(a.points.size() == 2);
    REQUIRE(a.skipped.size() == 1);

    const auto back = PretrainResult::parse(a.serialize());
    CHECK(back.serialize() == a.serialize());
    CHECK(back.asig == a.asig);
    CHECK(back.points.size() == 2);

    // Two points give an exact line.
    const auto fit = fit_log_regression(a.points);
    CHECK(fit.params == a.asig);

    CHECK_THROWS_AS(PretrainResult::parse("asigboost-pretrain 2\n"), ConfigError);
    CHECK_THROWS_AS(PretrainResult::parse("asigboost-pretrain 1\nalpha 1\n"), ConfigError);
    CHECK_THROWS_AS(PretrainResult::parse("asigboost-pretrain 1\nbogus 1\nalpha 0\nbeta 0\nr_squared 1\nseed 0\n"),
                    ConfigError);
    CHECK_THROWS_AS(pretrain_asig(base, std::vector<double>{20, 1e6}, grid, quick_config(), quick_protocol(), 3),
                    DataError);
}
