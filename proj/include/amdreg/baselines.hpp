#pragma once

#include <vector>

#include "amdreg/image.hpp"
#include "amdreg/transform.hpp"

namespace amdreg {

struct MeasureResult {
    double value = 0.0;            // cost form: ssd, -pcc, -mi
    std::vector<double> grad;      // with respect to the forward parameters
    bool non_overlap = false;
    std::size_t overlap_count = 0;
};

// All three measures pair the reference image b sampled on-grid (restricted
// to mask_b) with the floating image a interpolated at T^{-1}(q); points
// whose pullback leaves a's grid are dropped.

// Mean squared intensity difference over the overlap. The gradient is
// analytic through the multilinear intensity interpolant and the
// inverse-parameter Jacobian.
MeasureResult ssd(const FuzzyImage& a, const FuzzyImage& b, const Transform& t,
                  const BinaryMask& mask_b);

// Negated Pearson correlation; central finite-difference gradient.
// A degenerate overlap (zero variance on either side) yields correlation 0.
MeasureResult pcc(const FuzzyImage& a, const FuzzyImage& b, const Transform& t,
                  const BinaryMask& mask_b);
double pcc_value(const FuzzyImage& a, const FuzzyImage& b, const Transform& t,
                 const BinaryMask& mask_b);

// Negated mutual information H_P + H_Q - H_PQ in nats from a bins x bins
// joint histogram; central finite-difference gradient.
MeasureResult mi(const FuzzyImage& a, const FuzzyImage& b, const Transform& t,
                 const BinaryMask& mask_b, int bins = 32);
double mi_value(const FuzzyImage& a, const FuzzyImage& b, const Transform& t,
                const BinaryMask& mask_b, int bins = 32);

} // namespace amdreg
