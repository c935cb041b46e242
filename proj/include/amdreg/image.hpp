#pragma once

#include <cstdint>
#include <vector>

#include "amdreg/grid.hpp"

namespace amdreg {

// Fuzzy membership image; values live in [0, 1].
struct FuzzyImage {
    Grid grid;
    std::vector<double> values;

    static FuzzyImage zeros(const Grid& g) { return {g, std::vector<double>(g.voxel_count(), 0.0)}; }
    double& at(int x, int y, int z = 0) { return values[grid.index(x, y, z)]; }
    double at(int x, int y, int z = 0) const { return values[grid.index(x, y, z)]; }
};

struct BinaryMask {
    Grid grid;
    std::vector<std::uint8_t> inside;

    static BinaryMask full(const Grid& g) { return {g, std::vector<std::uint8_t>(g.voxel_count(), 1)}; }
    static BinaryMask empty(const Grid& g) { return {g, std::vector<std::uint8_t>(g.voxel_count(), 0)}; }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : inside) n += b != 0;
        return n;
    }
};

// Non-negative per-voxel weights.
struct WeightMap {
    Grid grid;
    std::vector<double> w;

    static WeightMap ones(const Grid& g) { return {g, std::vector<double>(g.voxel_count(), 1.0)}; }
};

// Strictly increasing cut levels in (0, 1]. quantize() maps a membership to
// the index of the nearest level (0 when below the first midpoint); for the
// default equally spaced levels i/l this is floor(l*mu + 0.5).
class AlphaLevels {
public:
    static AlphaLevels equal(int l);
    static AlphaLevels custom(std::vector<double> levels);

    int count() const { return int(levels_.size()); }
    double level(int i) const { return i == 0 ? 0.0 : levels_[std::size_t(i) - 1]; } // level(0) == 0
    const std::vector<double>& values() const { return levels_; }
    bool equally_spaced() const { return equally_spaced_; }
    int quantize(double mu) const;
    // Total integrated cut mass, level(count()) - 0.
    double mass() const { return levels_.back(); }

private:
    std::vector<double> levels_;
    bool equally_spaced_ = true;
};

struct NormalizeResult {
    FuzzyImage image;
    bool degenerate = false; // percentiles coincide; output is all zeros
    double lo = 0.0;
    double hi = 0.0;
};

// Robust rescale to [0, 1]: x -> clamp((x - P_rho) / (P_{1-rho} - P_rho), 0, 1)
// with nearest-rank percentiles (1-based index ceil(q*N), clamped).
NormalizeResult normalize_percentile(const FuzzyImage& img, double rho);

// Snap memberships to their nearest cut level value so that alpha-cuts and
// quantized lookups agree exactly.
FuzzyImage quantize_membership(const FuzzyImage& img, const AlphaLevels& levels);

// Bit set exactly where mu(x) >= alpha.
BinaryMask alpha_cut(const FuzzyImage& img, double alpha);

FuzzyImage complement(const FuzzyImage& img);

// Separable Gaussian smoothing, sigma in voxel units; kernel truncated at
// +/- ceil(3 sigma) taps and renormalized to sum 1; clamp-to-edge borders.
// sigma == 0 returns the input unchanged.
FuzzyImage gaussian_smooth(const FuzzyImage& img, double sigma);

// Every factor-th voxel starting at index 0; output dims are ceil(d/factor),
// output spacing is factor * spacing.
FuzzyImage block_subsample(const FuzzyImage& img, int factor);
// Coarse voxel inside iff more than half of the covered fine voxels are inside.
BinaryMask subsample_mask(const BinaryMask& mask, int factor);
// Coarse weight = mean of the covered fine weights.
WeightMap subsample_weights(const WeightMap& weights, int factor);

struct PyramidLevel {
    int factor = 1;
    double sigma = 0.0;
    FuzzyImage image;
    BinaryMask mask;
    WeightMap weights;
};

// Each level is smoothed and subsampled from the original (not cascaded).
// factors and sigmas must have equal length; factor 1 with sigma 0 reproduces
// the inputs exactly.
std::vector<PyramidLevel> build_pyramid(const FuzzyImage& img, const BinaryMask& mask,
                                        const WeightMap& weights, const std::vector<int>& factors,
                                        const std::vector<double>& sigmas);

// w(x) = cos^2(pi/2 * min(1, |x - center| / radius)), optionally squared again.
WeightMap hann_window_weights(const Grid& g, const Vec& center, double radius, bool squared);

// Adds N(0, sigma^2) independently per voxel, then clamps to [0, 1].
FuzzyImage add_gaussian_noise(const FuzzyImage& img, double sigma, std::uint64_t seed);

// Multilinear interpolation at a physical point inside the voxel-center
// bounding box. The gradient variant also returns d(value)/d(position).
double interp_linear(const FuzzyImage& img, const Vec& p);
double interp_linear_grad(const FuzzyImage& img, const Vec& p, Vec& grad);
double interp_nearest(const FuzzyImage& img, const Vec& p);

} // namespace amdreg
