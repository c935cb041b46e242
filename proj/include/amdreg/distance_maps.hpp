#pragma once

#include <vector>

#include "amdreg/image.hpp"

namespace amdreg {

struct DistanceField {
    Grid grid;
    std::vector<double> d;
};

// ndim components per voxel, interleaved.
struct GradientField {
    Grid grid;
    std::vector<double> g;
};

// Distance values D[h] and gradients G[h] for cut levels h = 0..l.
// Storage is level-major; gradients keep ndim interleaved components per
// voxel. D[0] and G[0] are the zero fields for unidirectional stacks.
// alpha_mass is the total integrated cut mass, so every distance value lies
// in [0, d_max * alpha_mass].
struct DistanceGradientStack {
    Grid grid;
    AlphaLevels levels;
    double d_max = 0.0;
    bool bidirectional = false;
    double alpha_mass = 0.0;
    std::vector<double> d; // (l+1) * voxels
    std::vector<double> g; // (l+1) * voxels * ndim

    const double* level_d(int h) const { return d.data() + std::size_t(h) * grid.voxel_count(); }
    const double* level_g(int h) const {
        return g.data() + std::size_t(h) * grid.voxel_count() * std::size_t(grid.ndim);
    }
};

// Exact Euclidean distance to the set of inside voxels, honoring anisotropic
// spacing, saturated at d_max. Inside voxels map to 0; an empty set maps the
// whole field to d_max.
DistanceField euclidean_dt(const BinaryMask& set, double d_max);

// Central differences scaled by spacing; one-sided (divisor s) at grid
// borders; the gradient is zeroed wherever the distance is exactly 0.
GradientField discrete_gradient(const DistanceField& field);

// D[i] = D[i-1] + (alpha_i - alpha_{i-1}) * min(DT[cut_i ∩ mask], d_max),
// G[i] accumulates the matching gated gradients.
DistanceGradientStack build_alpha_dt(const FuzzyImage& img, const BinaryMask& mask,
                                     const AlphaLevels& levels, double d_max);

// Adds the complement image's stack taken at the reversed levels:
// D[i] += D̄[l-i], G[i] += Ḡ[l-i].
DistanceGradientStack build_alpha_dt_bidirectional(const FuzzyImage& img, const BinaryMask& mask,
                                                   const AlphaLevels& levels, double d_max);

} // namespace amdreg
