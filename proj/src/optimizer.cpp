#include "amdreg/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace amdreg {

const char* stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::gradient_tolerance: return "gradient_tolerance";
        case StopReason::step_tolerance: return "step_tolerance";
        case StopReason::max_iterations: return "max_iterations";
        case StopReason::non_overlap: return "non_overlap";
        case StopReason::non_finite: return "non_finite";
    }
    return "unknown";
}

void IterationTrace::write_csv(std::ostream& os) const {
    os << "iteration,distance,grad_norm,step\n";
    char buf[128];
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", e.iteration, e.distance, e.grad_norm, e.step);
        os << buf;
    }
}

MinimizeResult minimize(const CostFn& cost, std::vector<double> x0, const OptimizerConfig& cfg) {
    if (!(cfg.step_length > 0.0)) throw std::invalid_argument("minimize: step_length must be > 0");
    if (!(cfg.relaxation > 0.0 && cfg.relaxation < 1.0))
        throw std::invalid_argument("minimize: relaxation must be in (0, 1)");
    MinimizeResult res;
    std::vector<double> x = std::move(x0);
    std::vector<double> g_prev;
    std::vector<double> best_x = x;
    double best_d = std::numeric_limits<double>::infinity();
    double lambda = cfg.step_length;
    const bool scheduled = !cfg.schedule.empty();

    for (int k = 1; k <= cfg.max_iterations; ++k) {
        CostEval e = cost(x);
        bool finite = std::isfinite(e.value);
        for (double gi : e.grad) finite = finite && std::isfinite(gi);
        if (!finite || e.non_overlap) {
            res.trace.reason = finite ? StopReason::non_overlap : StopReason::non_finite;
            res.params = best_x;
            return res;
        }
        double gn = 0.0;
        for (double gi : e.grad) gn += gi * gi;
        gn = std::sqrt(gn);
        if (scheduled) {
            std::size_t i = std::size_t(k - 1);
            lambda = cfg.schedule[i < cfg.schedule.size() ? i : cfg.schedule.size() - 1];
        } else if (!g_prev.empty()) {
            double dp = 0.0;
            for (std::size_t i = 0; i < e.grad.size(); ++i) dp += e.grad[i] * g_prev[i];
            if (dp < 0.0) lambda *= cfg.relaxation;
        }
        res.trace.entries.push_back({k, e.value, gn, lambda, x});
        if (e.value < best_d) {
            best_d = e.value;
            best_x = x;
        }
        if (gn < cfg.gradient_magnitude_tolerance) {
            res.trace.reason = StopReason::gradient_tolerance;
            res.params = x;
            return res;
        }
        if (lambda * cfg.relaxation < cfg.min_step_length) {
            res.trace.reason = StopReason::step_tolerance;
            res.params = x;
            return res;
        }
        double inv = lambda / gn;
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= inv * e.grad[i];
        g_prev = std::move(e.grad);
    }
    res.trace.reason = StopReason::max_iterations;
    res.params = x;
    return res;
}

} // namespace amdreg
