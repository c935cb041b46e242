#include "amdreg/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "amdreg/rng.hpp"

namespace amdreg {

AlphaLevels AlphaLevels::equal(int l) {
    if (l < 1) throw std::invalid_argument("AlphaLevels: need at least one level");
    AlphaLevels a;
    a.levels_.resize(std::size_t(l));
    for (int i = 1; i <= l; ++i) a.levels_[std::size_t(i) - 1] = double(i) / double(l);
    a.equally_spaced_ = true;
    return a;
}

AlphaLevels AlphaLevels::custom(std::vector<double> levels) {
    if (levels.empty()) throw std::invalid_argument("AlphaLevels: need at least one level");
    double prev = 0.0;
    for (double v : levels) {
        if (!(v > prev) || v > 1.0) throw std::invalid_argument("AlphaLevels: levels must increase within (0, 1]");
        prev = v;
    }
    AlphaLevels a;
    a.levels_ = std::move(levels);
    int l = a.count();
    a.equally_spaced_ = true;
    for (int i = 1; i <= l; ++i) {
        if (std::abs(a.levels_[std::size_t(i) - 1] - double(i) / double(l)) > 1e-15) {
            a.equally_spaced_ = false;
            break;
        }
    }
    return a;
}

int AlphaLevels::quantize(double mu) const {
    int l = count();
    if (equally_spaced_) {
        int h = int(std::floor(l * mu + 0.5));
        if (h < 0) h = 0;
        if (h > l) h = l;
        return h;
    }
    // Count midpoints (alpha_{i-1} + alpha_i)/2 that mu reaches; matches the
    // closed formula in the equally spaced case, ties rounding up.
    int h = 0;
    double prev = 0.0;
    for (int i = 1; i <= l; ++i) {
        double mid = 0.5 * (prev + levels_[std::size_t(i) - 1]);
        if (mu >= mid) h = i;
        prev = levels_[std::size_t(i) - 1];
    }
    return h;
}

NormalizeResult normalize_percentile(const FuzzyImage& img, double rho) {
    if (rho < 0.0 || rho >= 0.5) throw std::invalid_argument("normalize_percentile: rho must be in [0, 0.5)");
    std::vector<double> sorted = img.values;
    std::sort(sorted.begin(), sorted.end());
    std::size_t n = sorted.size();
    auto rank = [n](double q) {
        long r = long(std::ceil(q * double(n)));
        if (r < 1) r = 1;
        if (r > long(n)) r = long(n);
        return std::size_t(r - 1);
    };
    NormalizeResult out;
    out.lo = sorted[rank(rho)];
    out.hi = sorted[rank(1.0 - rho)];
    out.image.grid = img.grid;
    out.image.values.assign(img.values.size(), 0.0);
    if (!(out.hi > out.lo)) {
        out.degenerate = true;
        return out;
    }
    double scale = 1.0 / (out.hi - out.lo);
    for (std::size_t i = 0; i < img.values.size(); ++i) {
        double v = (img.values[i] - out.lo) * scale;
        out.image.values[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
    return out;
}

FuzzyImage quantize_membership(const FuzzyImage& img, const AlphaLevels& levels) {
    FuzzyImage out;
    out.grid = img.grid;
    out.values.resize(img.values.size());
    for (std::size_t i = 0; i < img.values.size(); ++i) {
        out.values[i] = levels.level(levels.quantize(img.values[i]));
    }
    return out;
}

BinaryMask alpha_cut(const FuzzyImage& img, double alpha) {
    BinaryMask m;
    m.grid = img.grid;
    m.inside.resize(img.values.size());
    for (std::size_t i = 0; i < img.values.size(); ++i) m.inside[i] = img.values[i] >= alpha ? 1 : 0;
    return m;
}

FuzzyImage complement(const FuzzyImage& img) {
    FuzzyImage out;
    out.grid = img.grid;
    out.values.resize(img.values.size());
    for (std::size_t i = 0; i < img.values.size(); ++i) out.values[i] = 1.0 - img.values[i];
    return out;
}

namespace {

// One separable axis pass with clamp-to-edge indexing.
void smooth_axis(const Grid& g, std::vector<double>& values, int axis, const std::vector<double>& kernel) {
    int radius = int(kernel.size() / 2);
    int n = g.dims[axis];
    if (n == 1 || radius == 0) return;
    std::size_t stride = 1;
    for (int a = 0; a < axis; ++a) stride *= std::size_t(g.dims[a]);
    std::size_t un = std::size_t(n);
    std::vector<double> buf(un);
    // Walk every line along `axis`: iterate voxels whose axis coordinate is 0.
    std::array<int, 3> d = g.dims;
    d[axis] = 1;
    for (int z = 0; z < d[2]; ++z) {
        for (int y = 0; y < d[1]; ++y) {
            for (int x = 0; x < d[0]; ++x) {
                std::size_t base = g.index(x, y, z);
                for (int i = 0; i < n; ++i) buf[std::size_t(i)] = values[base + std::size_t(i) * stride];
                for (int i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (int k = -radius; k <= radius; ++k) {
                        int j = i + k;
                        if (j < 0) j = 0;
                        if (j > n - 1) j = n - 1;
                        acc += kernel[std::size_t(k + radius)] * buf[std::size_t(j)];
                    }
                    values[base + std::size_t(i) * stride] = acc;
                }
            }
        }
    }
}

} // namespace

FuzzyImage gaussian_smooth(const FuzzyImage& img, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("gaussian_smooth: sigma must be >= 0");
    FuzzyImage out = img;
    if (sigma == 0.0) return out;
    int radius = int(std::ceil(3.0 * sigma));
    std::vector<double> kernel(std::size_t(2 * radius + 1));
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        double v = std::exp(-0.5 * double(k) * double(k) / (sigma * sigma));
        kernel[std::size_t(k + radius)] = v;
        sum += v;
    }
    for (double& v : kernel) v /= sum;
    for (int a = 0; a < img.grid.ndim; ++a) smooth_axis(out.grid, out.values, a, kernel);
    return out;
}

namespace {

Grid coarse_grid(const Grid& g, int factor) {
    if (factor < 1) throw std::invalid_argument("subsample: factor must be >= 1");
    std::array<int, 3> dims = g.dims;
    std::array<double, 3> spacing = g.spacing;
    for (int a = 0; a < g.ndim; ++a) {
        dims[a] = (g.dims[a] + factor - 1) / factor;
        spacing[a] = g.spacing[a] * factor;
    }
    return Grid::make(g.ndim, dims, spacing);
}

} // namespace

FuzzyImage block_subsample(const FuzzyImage& img, int factor) {
    Grid cg = coarse_grid(img.grid, factor);
    FuzzyImage out = FuzzyImage::zeros(cg);
    for (int z = 0; z < cg.dims[2]; ++z) {
        for (int y = 0; y < cg.dims[1]; ++y) {
            for (int x = 0; x < cg.dims[0]; ++x) {
                int fz = img.grid.ndim == 3 ? z * factor : z;
                out.values[cg.index(x, y, z)] = img.values[img.grid.index(x * factor, y * factor, fz)];
            }
        }
    }
    return out;
}

namespace {

// Iterates the fine-voxel block covered by a coarse voxel, clamped at edges.
template <typename F>
void over_block(const Grid& fine, int factor, int cx, int cy, int cz, F&& f) {
    int x0 = cx * factor, y0 = cy * factor, z0 = fine.ndim == 3 ? cz * factor : cz;
    int x1 = std::min(x0 + factor, fine.dims[0]);
    int y1 = std::min(y0 + factor, fine.dims[1]);
    int z1 = fine.ndim == 3 ? std::min(z0 + factor, fine.dims[2]) : z0 + 1;
    for (int z = z0; z < z1; ++z)
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) f(fine.index(x, y, z));
}

} // namespace

BinaryMask subsample_mask(const BinaryMask& mask, int factor) {
    Grid cg = coarse_grid(mask.grid, factor);
    BinaryMask out{cg, std::vector<std::uint8_t>(cg.voxel_count(), 0)};
    for (int z = 0; z < cg.dims[2]; ++z) {
        for (int y = 0; y < cg.dims[1]; ++y) {
            for (int x = 0; x < cg.dims[0]; ++x) {
                std::size_t in = 0, total = 0;
                over_block(mask.grid, factor, x, y, z, [&](std::size_t idx) {
                    ++total;
                    in += mask.inside[idx] != 0;
                });
                out.inside[cg.index(x, y, z)] = (2 * in > total) ? 1 : 0;
            }
        }
    }
    return out;
}

WeightMap subsample_weights(const WeightMap& weights, int factor) {
    Grid cg = coarse_grid(weights.grid, factor);
    WeightMap out{cg, std::vector<double>(cg.voxel_count(), 0.0)};
    for (int z = 0; z < cg.dims[2]; ++z) {
        for (int y = 0; y < cg.dims[1]; ++y) {
            for (int x = 0; x < cg.dims[0]; ++x) {
                double sum = 0.0;
                std::size_t total = 0;
                over_block(weights.grid, factor, x, y, z, [&](std::size_t idx) {
                    ++total;
                    sum += weights.w[idx];
                });
                out.w[cg.index(x, y, z)] = sum / double(total);
            }
        }
    }
    return out;
}

std::vector<PyramidLevel> build_pyramid(const FuzzyImage& img, const BinaryMask& mask,
                                        const WeightMap& weights, const std::vector<int>& factors,
                                        const std::vector<double>& sigmas) {
    if (factors.size() != sigmas.size() || factors.empty())
        throw std::invalid_argument("build_pyramid: factors and sigmas must be non-empty and equal length");
    if (!mask.grid.same_geometry(img.grid) || !weights.grid.same_geometry(img.grid))
        throw std::invalid_argument("build_pyramid: mask/weights geometry mismatch");
    std::vector<PyramidLevel> levels;
    levels.reserve(factors.size());
    for (std::size_t k = 0; k < factors.size(); ++k) {
        PyramidLevel lv;
        lv.factor = factors[k];
        lv.sigma = sigmas[k];
        if (lv.factor == 1 && lv.sigma == 0.0) {
            lv.image = img;
            lv.mask = mask;
            lv.weights = weights;
        } else {
            lv.image = block_subsample(gaussian_smooth(img, lv.sigma), lv.factor);
            lv.mask = subsample_mask(mask, lv.factor);
            lv.weights = subsample_weights(weights, lv.factor);
        }
        levels.push_back(std::move(lv));
    }
    return levels;
}

WeightMap hann_window_weights(const Grid& g, const Vec& center, double radius, bool squared) {
    if (!(radius > 0.0)) throw std::invalid_argument("hann_window_weights: radius must be > 0");
    WeightMap out{g, std::vector<double>(g.voxel_count(), 0.0)};
    for (std::size_t i = 0; i < out.w.size(); ++i) {
        double u = norm(g.position(i) - center) / radius;
        if (u > 1.0) u = 1.0;
        double c = std::cos(1.57079632679489661923 * u);
        double w = c * c;
        out.w[i] = squared ? w * w : w;
    }
    return out;
}

FuzzyImage add_gaussian_noise(const FuzzyImage& img, double sigma, std::uint64_t seed) {
    Rng rng(seed);
    FuzzyImage out;
    out.grid = img.grid;
    out.values.resize(img.values.size());
    for (std::size_t i = 0; i < img.values.size(); ++i) {
        double v = img.values[i] + sigma * rng.normal();
        out.values[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
    return out;
}

double interp_linear(const FuzzyImage& img, const Vec& p) {
    LinearCell cell = make_linear_cell(img.grid, p, false);
    double acc = 0.0;
    for (int c = 0; c < cell.corners; ++c) acc += cell.w[c] * img.values[cell.index[c]];
    return acc;
}

double interp_linear_grad(const FuzzyImage& img, const Vec& p, Vec& grad) {
    LinearCell cell = make_linear_cell(img.grid, p, true);
    double acc = 0.0;
    grad = {0.0, 0.0, 0.0};
    for (int c = 0; c < cell.corners; ++c) {
        double v = img.values[cell.index[c]];
        acc += cell.w[c] * v;
        grad[0] += cell.dw[0][c] * v;
        grad[1] += cell.dw[1][c] * v;
        grad[2] += cell.dw[2][c] * v;
    }
    return acc;
}

double interp_nearest(const FuzzyImage& img, const Vec& p) {
    auto c = img.grid.nearest(p);
    return img.values[img.grid.index(c[0], c[1], c[2])];
}

} // namespace amdreg
