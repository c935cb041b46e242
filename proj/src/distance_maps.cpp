#include "amdreg/distance_maps.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "amdreg/threading.hpp"

namespace amdreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared-distance lower envelope over abscissas q * sp. Positions with
// infinite f carry no parabola; if none is finite the line stays infinite.
void dt_line(std::vector<double>& f, std::vector<int>& v, std::vector<double>& z,
             std::vector<double>& out, int n, double sp) {
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[std::size_t(q)] == kInf) continue;
        double fq = f[std::size_t(q)] + (q * sp) * (q * sp);
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        double s;
        for (;;) {
            int p = v[std::size_t(k)];
            double fp = f[std::size_t(p)] + (p * sp) * (p * sp);
            s = (fq - fp) / (2.0 * q * sp - 2.0 * p * sp);
            if (s <= z[std::size_t(k)]) {
                --k;
                if (k < 0) break;
            } else {
                break;
            }
        }
        ++k;
        v[std::size_t(k)] = q;
        z[std::size_t(k)] = k == 0 ? -kInf : s;
        z[std::size_t(k) + 1] = kInf;
    }
    if (k < 0) {
        for (int i = 0; i < n; ++i) out[std::size_t(i)] = kInf;
        return;
    }
    int j = 0;
    for (int i = 0; i < n; ++i) {
        double x = i * sp;
        while (z[std::size_t(j) + 1] < x) ++j;
        // Integer offset times spacing: equidistant sources round identically,
        // so exact midpoints carry one well-defined value.
        double dx = (i - v[std::size_t(j)]) * sp;
        out[std::size_t(i)] = f[std::size_t(v[std::size_t(j)])] + dx * dx;
    }
}

} // namespace

DistanceField euclidean_dt(const BinaryMask& set, double d_max) {
    if (!(d_max > 0.0)) throw std::invalid_argument("euclidean_dt: d_max must be > 0");
    const Grid& g = set.grid;
    DistanceField out{g, std::vector<double>(g.voxel_count())};
    std::vector<double>& sq = out.d;
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = set.inside[i] ? 0.0 : kInf;

    for (int axis = 0; axis < g.ndim; ++axis) {
        int n = g.dims[axis];
        if (n == 1) continue;
        std::size_t stride = 1;
        for (int a = 0; a < axis; ++a) stride *= std::size_t(g.dims[a]);
        std::array<int, 3> d = g.dims;
        d[axis] = 1;
        std::size_t un = std::size_t(n);
        std::vector<double> f(un), line(un), z(un + 1);
        std::vector<int> v(un);
        for (int zc = 0; zc < d[2]; ++zc) {
            for (int yc = 0; yc < d[1]; ++yc) {
                for (int xc = 0; xc < d[0]; ++xc) {
                    std::size_t base = g.index(xc, yc, zc);
                    for (int i = 0; i < n; ++i) f[std::size_t(i)] = sq[base + std::size_t(i) * stride];
                    dt_line(f, v, z, line, n, g.spacing[axis]);
                    for (int i = 0; i < n; ++i) sq[base + std::size_t(i) * stride] = line[std::size_t(i)];
                }
            }
        }
    }
    for (std::size_t i = 0; i < sq.size(); ++i) {
        double dist = std::sqrt(sq[i]);
        sq[i] = dist < d_max ? dist : d_max;
    }
    return out;
}

GradientField discrete_gradient(const DistanceField& field) {
    const Grid& g = field.grid;
    int n = g.ndim;
    GradientField out{g, std::vector<double>(g.voxel_count() * std::size_t(n), 0.0)};
    for (int z = 0; z < g.dims[2]; ++z) {
        for (int y = 0; y < g.dims[1]; ++y) {
            for (int x = 0; x < g.dims[0]; ++x) {
                std::size_t idx = g.index(x, y, z);
                if (field.d[idx] == 0.0) continue; // gate: no pull at the set itself
                int c[3] = {x, y, z};
                for (int a = 0; a < n; ++a) {
                    if (g.dims[a] == 1) continue;
                    std::size_t stride = 1;
                    for (int b = 0; b < a; ++b) stride *= std::size_t(g.dims[b]);
                    double s = g.spacing[a];
                    double diff;
                    if (c[a] == 0) {
                        diff = (field.d[idx + stride] - field.d[idx]) / s;
                    } else if (c[a] == g.dims[a] - 1) {
                        diff = (field.d[idx] - field.d[idx - stride]) / s;
                    } else {
                        diff = (field.d[idx + stride] - field.d[idx - stride]) / (2.0 * s);
                    }
                    out.g[idx * std::size_t(n) + std::size_t(a)] = diff;
                }
            }
        }
    }
    return out;
}

namespace {

// Weighted per-level distance/gradient accumulation shared by both stack
// builders. Levels with zero weight are skipped entirely.
struct LevelSpec {
    double alpha = 0.0;
    double weight = 0.0;
};

void accumulate_levels(DistanceGradientStack& stack, const FuzzyImage& img, const BinaryMask& mask,
                       const std::vector<LevelSpec>& specs, bool reversed_slots) {
    const Grid& g = img.grid;
    std::size_t nvox = g.voxel_count();
    int n = g.ndim;
    int l = int(specs.size());
    std::size_t ul = specs.size();
    std::vector<DistanceField> dts(ul);
    std::vector<GradientField> grads(ul);
    for_chunks(std::size_t(l), 1, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t li = begin; li < end; ++li) {
            if (specs[li].weight == 0.0) continue;
            BinaryMask cut = alpha_cut(img, specs[li].alpha);
            for (std::size_t i = 0; i < nvox; ++i) cut.inside[i] = cut.inside[i] & mask.inside[i];
            dts[li] = euclidean_dt(cut, stack.d_max);
            grads[li] = discrete_gradient(dts[li]);
        }
    });
    // Prefix accumulation in level order; slot(i) places the sums either
    // forward (inwards stack) or reversed (complement side of a
    // bidirectional stack, which adds D̄[l-i] into slot i).
    std::vector<double> dacc(nvox, 0.0);
    std::vector<double> gacc(nvox * std::size_t(n), 0.0);
    auto slot = [&](int i) { return std::size_t(reversed_slots ? l - i : i); };
    for (int i = 1; i <= l; ++i) {
        const LevelSpec& sp = specs[std::size_t(i) - 1];
        if (sp.weight != 0.0) {
            const auto& dt = dts[std::size_t(i) - 1].d;
            const auto& gr = grads[std::size_t(i) - 1].g;
            for (std::size_t v = 0; v < nvox; ++v) dacc[v] += sp.weight * dt[v];
            for (std::size_t v = 0; v < nvox * std::size_t(n); ++v) gacc[v] += sp.weight * gr[v];
        }
        double* dd = stack.d.data() + slot(i) * nvox;
        double* gg = stack.g.data() + slot(i) * nvox * std::size_t(n);
        for (std::size_t v = 0; v < nvox; ++v) dd[v] += dacc[v];
        for (std::size_t v = 0; v < nvox * std::size_t(n); ++v) gg[v] += gacc[v];
    }
}

DistanceGradientStack make_stack(const FuzzyImage& img, const BinaryMask& mask,
                                 const AlphaLevels& levels, double d_max, bool bidirectional) {
    if (!mask.grid.same_geometry(img.grid))
        throw std::invalid_argument("build_alpha_dt: mask geometry mismatch");
    if (!(d_max > 0.0)) throw std::invalid_argument("build_alpha_dt: d_max must be > 0");
    DistanceGradientStack stack;
    stack.grid = img.grid;
    stack.levels = levels;
    stack.d_max = d_max;
    stack.bidirectional = bidirectional;
    int l = levels.count();
    std::size_t nvox = img.grid.voxel_count();
    stack.d.assign(std::size_t(l + 1) * nvox, 0.0);
    stack.g.assign(std::size_t(l + 1) * nvox * std::size_t(img.grid.ndim), 0.0);

    std::size_t ul = std::size_t(l);
    std::vector<LevelSpec> specs(ul);
    for (int i = 1; i <= l; ++i)
        specs[std::size_t(i) - 1] = {levels.level(i), levels.level(i) - levels.level(i - 1)};
    accumulate_levels(stack, img, mask, specs, false);
    stack.alpha_mass = levels.mass();

    if (bidirectional) {
        // Complement levels are (1 - alpha_l, ..., 1 - alpha_1); the leading
        // level is 0 exactly when alpha_l == 1 and then carries zero weight.
        std::vector<LevelSpec> comp(ul);
        double prev = 0.0;
        for (int j = 1; j <= l; ++j) {
            double a = 1.0 - levels.level(l - j + 1);
            comp[std::size_t(j) - 1] = {a, a - prev};
            prev = a;
        }
        FuzzyImage comp_img = complement(img);
        accumulate_levels(stack, comp_img, mask, comp, true);
        stack.alpha_mass += prev; // 1 - alpha_1
    }
    return stack;
}

} // namespace

DistanceGradientStack build_alpha_dt(const FuzzyImage& img, const BinaryMask& mask,
                                     const AlphaLevels& levels, double d_max) {
    return make_stack(img, mask, levels, d_max, false);
}

DistanceGradientStack build_alpha_dt_bidirectional(const FuzzyImage& img, const BinaryMask& mask,
                                                   const AlphaLevels& levels, double d_max) {
    return make_stack(img, mask, levels, d_max, true);
}

} // namespace amdreg
