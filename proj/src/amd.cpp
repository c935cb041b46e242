#include "amdreg/amd.hpp"

#include <cmath>
#include <stdexcept>

#include "amdreg/threading.hpp"

namespace amdreg {

SampleSet full_sample_set(const BinaryMask& mask) {
    SampleSet s;
    s.indices.reserve(mask.count());
    for (std::size_t i = 0; i < mask.inside.size(); ++i)
        if (mask.inside[i]) s.indices.push_back(i);
    return s;
}

SampleSet random_sample_set(const BinaryMask& mask, double fraction, Rng& rng) {
    if (!(fraction > 0.0)) throw std::invalid_argument("random_sample_set: fraction must be > 0");
    SampleSet all = full_sample_set(mask);
    if (fraction >= 1.0 || all.indices.empty()) return all;
    std::size_t n = all.indices.size();
    std::size_t take = std::size_t(fraction * double(n));
    if (take < 1) take = 1;
    // Partial Fisher-Yates: the first `take` slots become the sample.
    for (std::size_t i = 0; i < take; ++i) {
        std::size_t j = i + std::size_t(rng.below(std::uint64_t(n - i)));
        std::swap(all.indices[i], all.indices[j]);
    }
    all.indices.resize(take);
    return all;
}

bool mask_test(const BinaryMask& mask, const Vec& p) {
    if (!mask.grid.contains(p)) return false;
    auto c = mask.grid.nearest(p);
    return mask.inside[mask.grid.index(c[0], c[1], c[2])] != 0;
}

void interpolate_stack(const DistanceGradientStack& stack, int h, const Vec& p, InterpMode mode,
                       double& d, Vec& g) {
    const Grid& grid = stack.grid;
    if (!grid.contains(p)) throw std::out_of_range("interpolate_stack: point outside grid bounds");
    int n = grid.ndim;
    const double* dd = stack.level_d(h);
    const double* gg = stack.level_g(h);
    g = {0.0, 0.0, 0.0};
    if (mode == InterpMode::nearest) {
        auto c = grid.nearest(p);
        std::size_t idx = grid.index(c[0], c[1], c[2]);
        d = dd[idx];
        for (int a = 0; a < n; ++a) g[std::size_t(a)] = gg[idx * std::size_t(n) + std::size_t(a)];
        return;
    }
    LinearCell cell = make_linear_cell(grid, p, false);
    double acc = 0.0;
    for (int c = 0; c < cell.corners; ++c) {
        double w = cell.w[c];
        std::size_t idx = cell.index[c];
        acc += w * dd[idx];
        for (int a = 0; a < n; ++a) g[std::size_t(a)] += w * gg[idx * std::size_t(n) + std::size_t(a)];
    }
    d = acc;
}

PointDistance point_to_set_distance(const Vec& v, double mu, double w, const Transform& t,
                                    const BinaryMask& target_mask,
                                    const DistanceGradientStack& target_stack, InterpMode mode) {
    PointDistance out;
    Vec vhat = t.apply(v);
    if (!mask_test(target_mask, vhat)) return out;
    int h = target_stack.levels.quantize(mu);
    double d;
    Vec g;
    interpolate_stack(target_stack, h, vhat, mode, d, g);
    out.d = w * d;
    out.w = w;
    int np = t.param_count();
    int n = t.ndim();
    double J[12 * 3];
    t.param_jacobian(v, J);
    for (int i = 0; i < np; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += J[i * n + j] * g[std::size_t(j)];
        out.grad[std::size_t(i)] = w * acc;
    }
    return out;
}

AmdResult asymmetric_amd(const ImageSide& from, const SampleSet& samples, const Transform& t,
                         const ImageSide& to, InterpMode mode) {
    const FuzzyImage& img = *from.image;
    const WeightMap& weights = *from.weights;
    const BinaryMask& target_mask = *to.mask;
    const DistanceGradientStack& stack = *to.stack;
    int np = t.param_count();

    struct Partial {
        double d = 0.0;
        double w = 0.0;
        std::array<double, 12> g{};
    };
    constexpr std::size_t kChunk = 2048;
    std::size_t count = samples.indices.size();
    std::size_t nchunks = count == 0 ? 0 : (count + kChunk - 1) / kChunk;
    std::vector<Partial> partials(nchunks);
    for_chunks(count, kChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Partial p;
        for (std::size_t s = begin; s < end; ++s) {
            std::size_t idx = samples.indices[s];
            PointDistance pd = point_to_set_distance(img.grid.position(idx), img.values[idx],
                                                     weights.w[idx], t, target_mask, stack, mode);
            if (pd.w == 0.0) continue;
            p.d += pd.d;
            p.w += pd.w;
            for (int i = 0; i < np; ++i) p.g[std::size_t(i)] += pd.grad[std::size_t(i)];
        }
        partials[chunk] = p;
    });

    AmdResult out;
    out.grad.assign(std::size_t(np), 0.0);
    double dsum = 0.0, wsum = 0.0;
    std::array<double, 12> gsum{};
    for (const Partial& p : partials) {
        dsum += p.d;
        wsum += p.w;
        for (int i = 0; i < np; ++i) gsum[std::size_t(i)] += p.g[std::size_t(i)];
    }
    if (wsum == 0.0) {
        out.non_overlap = true;
        out.value = stack.d_max * stack.alpha_mass;
        return out;
    }
    out.total_weight = wsum;
    out.value = dsum / wsum;
    for (int i = 0; i < np; ++i) out.grad[std::size_t(i)] = gsum[std::size_t(i)] / wsum;
    return out;
}

SymmetricResult symmetric_amd(const ImageSide& a, const ImageSide& b, const Transform& t,
                              InterpMode mode, const SampleSet& samples_a, const SampleSet& samples_b) {
    Transform tinv = t.inverse();
    SymmetricResult out;
    out.forward = asymmetric_amd(a, samples_a, t, b, mode);
    out.reverse = asymmetric_amd(b, samples_b, tinv, a, mode);
    out.value = 0.5 * (out.forward.value + out.reverse.value);
    out.non_overlap = out.forward.non_overlap || out.reverse.non_overlap;
    int np = t.param_count();
    out.grad.assign(std::size_t(np), 0.0);
    std::vector<double> m = t.inverse_param_jacobian();
    for (int i = 0; i < np; ++i) {
        double pulled = 0.0;
        for (int j = 0; j < np; ++j)
            pulled += m[std::size_t(i) * std::size_t(np) + std::size_t(j)] * out.reverse.grad[std::size_t(j)];
        out.grad[std::size_t(i)] = 0.5 * (out.forward.grad[std::size_t(i)] + pulled);
    }
    return out;
}

SymmetricResult symmetric_amd(const ImageSide& a, const ImageSide& b, const Transform& t,
                              InterpMode mode) {
    return symmetric_amd(a, b, t, mode, full_sample_set(*a.mask), full_sample_set(*b.mask));
}

SymmetricResult subsampled_amd(const ImageSide& a, const ImageSide& b, const Transform& t,
                               InterpMode mode, double fraction, Rng& rng) {
    SampleSet sa = random_sample_set(*a.mask, fraction, rng);
    SampleSet sb = random_sample_set(*b.mask, fraction, rng);
    return symmetric_amd(a, b, t, mode, sa, sb);
}

} // namespace amdreg
