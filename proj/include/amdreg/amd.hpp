#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "amdreg/distance_maps.hpp"
#include "amdreg/image.hpp"
#include "amdreg/rng.hpp"
#include "amdreg/transform.hpp"

namespace amdreg {

enum class InterpMode { linear, nearest };

// Linear voxel indices of the points contributing to one direction of the
// distance. Generated sets hold unique in-mask indices; evaluation accepts
// arbitrary lists (duplicates simply double their weight).
struct SampleSet {
    std::vector<std::size_t> indices;
};

SampleSet full_sample_set(const BinaryMask& mask);
// max(1, floor(fraction * n_in_mask)) distinct in-mask indices, uniform
// without replacement. fraction >= 1 returns the full set in natural order.
SampleSet random_sample_set(const BinaryMask& mask, double fraction, Rng& rng);

// Inside the physical bounding box of the grid and the nearest voxel's mask
// bit is set.
bool mask_test(const BinaryMask& mask, const Vec& p);

// Interpolated distance and gradient lookup at level h of a stack. p must
// lie inside the grid bounds.
void interpolate_stack(const DistanceGradientStack& stack, int h, const Vec& p, InterpMode mode,
                       double& d, Vec& g);

struct PointDistance {
    double d = 0.0;                 // weighted distance contribution
    double w = 0.0;                 // weight (0 when the point is excluded)
    std::array<double, 12> grad{};  // weighted d(d)/d(params of T)
};

// Single-point contribution: transform v, mask-test against the target,
// quantize the source membership, look up the target stack and push the
// spatial gradient through the transform Jacobian.
PointDistance point_to_set_distance(const Vec& v, double mu, double w, const Transform& t,
                                    const BinaryMask& target_mask,
                                    const DistanceGradientStack& target_stack, InterpMode mode);

// One image's bundle for the distance evaluation.
struct ImageSide {
    const FuzzyImage* image = nullptr;
    const BinaryMask* mask = nullptr;
    const WeightMap* weights = nullptr;
    const DistanceGradientStack* stack = nullptr;
};

struct AmdResult {
    double value = 0.0;
    std::vector<double> grad;
    double total_weight = 0.0;
    bool non_overlap = false;
};

// Weight-normalized mean of point contributions from `from` transformed by t
// into `to`. When every point is excluded the distance saturates at
// d_max * alpha_mass with a zero gradient and the non_overlap flag set.
AmdResult asymmetric_amd(const ImageSide& from, const SampleSet& samples, const Transform& t,
                         const ImageSide& to, InterpMode mode);

struct SymmetricResult {
    double value = 0.0;
    std::vector<double> grad; // with respect to the forward parameters
    AmdResult forward;
    AmdResult reverse;
    bool non_overlap = false;
};

// 0.5 * (forward + reverse with the inverse transform); the reverse gradient
// is pulled back through the inverse-parameter Jacobian.
SymmetricResult symmetric_amd(const ImageSide& a, const ImageSide& b, const Transform& t,
                              InterpMode mode);
SymmetricResult symmetric_amd(const ImageSide& a, const ImageSide& b, const Transform& t,
                              InterpMode mode, const SampleSet& samples_a, const SampleSet& samples_b);

// Fresh uniform without-replacement sample sets on every call, drawn from rng.
SymmetricResult subsampled_amd(const ImageSide& a, const ImageSide& b, const Transform& t,
                               InterpMode mode, double fraction, Rng& rng);

} // namespace amdreg
