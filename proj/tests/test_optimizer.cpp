#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "amdreg/optimizer.hpp"

using namespace amdreg;

namespace {

// f(x) = |x - c|^2 with its exact gradient.
CostFn bowl(std::vector<double> c) {
    return [c](const std::vector<double>& x) {
        CostEval e;
        e.grad.assign(x.size(), 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            double d = x[i] - c[i];
            e.value += d * d;
            e.grad[i] = 2.0 * d;
        }
        return e;
    };
}

double dist_to(const std::vector<double>& x, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
    return std::sqrt(s);
}

} // namespace

TEST_CASE("the default configuration carries the documented termination values") {
    OptimizerConfig cfg;
    CHECK(cfg.gradient_magnitude_tolerance == 0.0001);
    CHECK(cfg.min_step_length == 0.0001);
    CHECK(cfg.relaxation == 0.99);
    CHECK(cfg.step_length == 0.5);
    CHECK(cfg.max_iterations == 3000);
    CHECK(cfg.schedule.empty());
}

TEST_CASE("invalid step length or relaxation is rejected") {
    OptimizerConfig cfg;
    cfg.step_length = 0.0;
    CHECK_THROWS_AS(minimize(bowl({0.0}), {1.0}, cfg), std::invalid_argument);
    cfg = OptimizerConfig{};
    cfg.relaxation = 1.0;
    CHECK_THROWS_AS(minimize(bowl({0.0}), {1.0}, cfg), std::invalid_argument);
    cfg.relaxation = 0.0;
    CHECK_THROWS_AS(minimize(bowl({0.0}), {1.0}, cfg), std::invalid_argument);
}

TEST_CASE("a single step moves along the unit gradient direction") {
    OptimizerConfig cfg;
    cfg.max_iterations = 1;
    MinimizeResult r = minimize(bowl({0.0, 0.0}), {3.0, 4.0}, cfg);
    // g = (6, 8), |g| = 10, step 0.5 along -g/|g|.
    CHECK(r.params[0] == doctest::Approx(3.0 - 0.5 * 0.6).epsilon(1e-15));
    CHECK(r.params[1] == doctest::Approx(4.0 - 0.5 * 0.8).epsilon(1e-15));
    CHECK(r.trace.reason == StopReason::max_iterations);
    CHECK(r.trace.entries.size() == 1);
}

TEST_CASE("the quadratic bowl converges under the default configuration") {
    std::vector<double> c{0.3, -0.7};
    MinimizeResult r = minimize(bowl(c), {1.07, 0.13}, OptimizerConfig{});

    // The iterate settles near the optimum well inside the iteration budget
    // and the run ends on a convergence criterion, not the budget.
    bool settled_early = false;
    for (const IterationRecord& e : r.trace.entries)
        if (e.iteration <= 500 && dist_to(e.params, c) <= 0.01) settled_early = true;
    CHECK(settled_early);
    bool converged = r.trace.reason == StopReason::step_tolerance ||
                     r.trace.reason == StopReason::gradient_tolerance;
    CHECK(converged);
    CHECK(int(r.trace.entries.size()) < 3000);
    CHECK(dist_to(r.params, c) < 0.01);

    // Relaxation only ever shrinks the step.
    for (std::size_t i = 1; i < r.trace.entries.size(); ++i)
        CHECK(r.trace.entries[i].step <= r.trace.entries[i - 1].step);

    // Iterations are recorded 1-based and consecutively.
    for (std::size_t i = 0; i < r.trace.entries.size(); ++i)
        CHECK(r.trace.entries[i].iteration == int(i) + 1);
}

TEST_CASE("the step relaxes exactly when the gradient flips against the previous one") {
    std::vector<double> c{0.0};
    MinimizeResult r = minimize(bowl(c), {0.8}, OptimizerConfig{});
    REQUIRE(r.trace.entries.size() > 3);
    for (std::size_t i = 1; i < r.trace.entries.size(); ++i) {
        double prev = r.trace.entries[i - 1].params[0];
        double cur = r.trace.entries[i].params[0];
        bool flipped = (prev - c[0]) * (cur - c[0]) < 0.0;
        double want = r.trace.entries[i - 1].step * (flipped ? 0.99 : 1.0);
        CHECK(r.trace.entries[i].step == doctest::Approx(want).epsilon(1e-15));
    }
}

TEST_CASE("an explicit schedule overrides relaxation and holds its last value") {
    OptimizerConfig cfg;
    cfg.schedule = {0.4, 0.3, 0.2, 0.1};
    cfg.max_iterations = 6;
    cfg.gradient_magnitude_tolerance = 0.0;
    cfg.min_step_length = 0.0;
    // Constant-magnitude oscillating gradient: every step flips sign.
    MinimizeResult r = minimize(bowl({0.0}), {0.05}, cfg);
    REQUIRE(r.trace.entries.size() == 6);
    const double want[6] = {0.4, 0.3, 0.2, 0.1, 0.1, 0.1};
    for (std::size_t i = 0; i < 6; ++i) CHECK(r.trace.entries[i].step == want[i]);
    CHECK(r.trace.reason == StopReason::max_iterations);
}

TEST_CASE("a start at the optimum terminates at iteration one on gradient tolerance") {
    MinimizeResult r = minimize(bowl({0.5}), {0.5}, OptimizerConfig{});
    CHECK(r.trace.reason == StopReason::gradient_tolerance);
    REQUIRE(r.trace.entries.size() == 1);
    CHECK(r.trace.entries[0].iteration == 1);
    CHECK(r.params[0] == 0.5);
}

TEST_CASE("an initial step below the minimum stops on step tolerance immediately") {
    OptimizerConfig cfg;
    cfg.step_length = 9e-5; // 9e-5 * 0.99 < 1e-4
    MinimizeResult r = minimize(bowl({0.0}), {1.0}, cfg);
    CHECK(r.trace.reason == StopReason::step_tolerance);
    CHECK(r.trace.entries.size() == 1);
    CHECK(r.params[0] == 1.0);
}

TEST_CASE("non-overlap and non-finite evaluations abort with the best iterate") {
    int calls = 0;
    CostFn tricky = [&calls](const std::vector<double>& x) {
        CostEval e;
        ++calls;
        e.value = (x[0] - 1.0) * (x[0] - 1.0);
        e.grad = {2.0 * (x[0] - 1.0)};
        if (calls == 4) e.non_overlap = true;
        return e;
    };
    OptimizerConfig cfg;
    MinimizeResult r = minimize(tricky, {3.0}, cfg);
    CHECK(r.trace.reason == StopReason::non_overlap);
    CHECK(r.trace.entries.size() == 3);
    // Best recorded iterate, not the aborted one.
    double best = 1e300;
    std::vector<double> best_x;
    for (const IterationRecord& e : r.trace.entries)
        if (e.distance < best) {
            best = e.distance;
            best_x = e.params;
        }
    CHECK(r.params == best_x);

    CostFn exploding = [](const std::vector<double>& x) {
        CostEval e;
        e.value = x[0] > 2.0 ? std::numeric_limits<double>::quiet_NaN() : x[0] * x[0];
        e.grad = {2.0 * x[0]};
        return e;
    };
    MinimizeResult r2 = minimize(exploding, {3.0}, cfg);
    CHECK(r2.trace.reason == StopReason::non_finite);
    CHECK(r2.trace.entries.empty());
    CHECK(r2.params[0] == 3.0);
}

TEST_CASE("stop reasons have stable names") {
    CHECK(std::string(stop_reason_name(StopReason::gradient_tolerance)) == "gradient_tolerance");
    CHECK(std::string(stop_reason_name(StopReason::step_tolerance)) == "step_tolerance");
    CHECK(std::string(stop_reason_name(StopReason::max_iterations)) == "max_iterations");
    CHECK(std::string(stop_reason_name(StopReason::non_overlap)) == "non_overlap");
    CHECK(std::string(stop_reason_name(StopReason::non_finite)) == "non_finite");
}

TEST_CASE("the iteration trace serializes to csv") {
    OptimizerConfig cfg;
    cfg.max_iterations = 3;
    MinimizeResult r = minimize(bowl({0.0}), {1.0}, cfg);
    std::ostringstream os;
    r.trace.write_csv(os);
    std::istringstream in(os.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "iteration,distance,grad_norm,step");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        int it = 0;
        double d = 0, gn = 0, st = 0;
        REQUIRE(std::sscanf(line.c_str(), "%d,%lg,%lg,%lg", &it, &d, &gn, &st) == 4);
        const IterationRecord& e = r.trace.entries[std::size_t(rows - 1)];
        CHECK(it == e.iteration);
        CHECK(d == e.distance);   // 17 significant digits round-trip exactly
        CHECK(gn == e.grad_norm);
        CHECK(st == e.step);
    }
    CHECK(rows == 3);
}
