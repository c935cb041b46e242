#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace amdreg {

struct OptimizerConfig {
    double step_length = 0.5;                    // initial lambda
    double relaxation = 0.99;                    // lambda *= relaxation on gradient sign flip
    int max_iterations = 3000;
    double gradient_magnitude_tolerance = 1e-4;  // raw (unnormalized) gradient norm
    double min_step_length = 1e-4;               // stop when lambda * relaxation falls below
    std::vector<double> schedule;                // optional explicit per-iteration step lengths;
                                                 // when set, relaxation is not applied
};

enum class StopReason { gradient_tolerance, step_tolerance, max_iterations, non_overlap, non_finite };

const char* stop_reason_name(StopReason r);

struct IterationRecord {
    int iteration = 0;       // 1-based
    double distance = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;       // step length in effect this iteration
    std::vector<double> params;
};

struct IterationTrace {
    std::vector<IterationRecord> entries;
    StopReason reason = StopReason::max_iterations;

    // Columns: iteration,distance,grad_norm,step
    void write_csv(std::ostream& os) const;
};

struct CostEval {
    double value = 0.0;
    std::vector<double> grad;
    bool non_overlap = false;
};

using CostFn = std::function<CostEval(const std::vector<double>&)>;

struct MinimizeResult {
    std::vector<double> params;
    IterationTrace trace;
};

// Gradient descent along the unit gradient direction with step-length
// relaxation: x -= lambda * g / |g|, lambda *= r whenever g flips sign
// against the previous gradient. Stops on |g| < GMT, lambda * r < MSL, or
// after max_iterations. A non-overlap or non-finite evaluation aborts and
// returns the best recorded iterate.
MinimizeResult minimize(const CostFn& cost, std::vector<double> x0, const OptimizerConfig& cfg);

} // namespace amdreg
