#include "amdreg/registration.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "amdreg/errors.hpp"

namespace amdreg {

const char* measure_name(Measure m) {
    switch (m) {
        case Measure::alpha_amd: return "alpha-amd";
        case Measure::ssd: return "ssd";
        case Measure::pcc: return "pcc";
        case Measure::mi: return "mi";
    }
    return "unknown";
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void validate(const RegistrationConfig& cfg, const FuzzyImage& a, const FuzzyImage& b,
              const Transform& t0) {
    if (a.grid.ndim != b.grid.ndim) throw config_error("register: image dimensions differ");
    if (t0.ndim() != a.grid.ndim) throw config_error("register: initial transform dimension mismatch");
    if (t0.model() != cfg.model) throw config_error("register: initial transform model does not match config");
    if (cfg.alpha_levels < 1) throw config_error("register: alpha_levels must be >= 1");
    if (cfg.pyramid_factors.size() != cfg.pyramid_sigmas.size() || cfg.pyramid_factors.empty())
        throw config_error("register: pyramid_factors and pyramid_sigmas must be non-empty and equal length");
    if (!cfg.per_level.empty() && cfg.per_level.size() != cfg.pyramid_factors.size())
        throw config_error("register: per_level overrides must match pyramid level count");
    if (!(cfg.sampling_fraction > 0.0 && cfg.sampling_fraction <= 1.0))
        throw config_error("register: sampling_fraction must be in (0, 1]");
    if (cfg.mi_bins < 2) throw config_error("register: mi_bins must be >= 2");
}

} // namespace

RegistrationResult register_images(const FuzzyImage& a_in, const FuzzyImage& b_in,
                                   const BinaryMask* mask_a, const BinaryMask* mask_b,
                                   const WeightMap* weights_a, const WeightMap* weights_b,
                                   const Transform& t0, const RegistrationConfig& cfg) {
    validate(cfg, a_in, b_in, t0);
    RegistrationResult res;
    auto t_pre = Clock::now();

    FuzzyImage a = a_in, b = b_in;
    if (cfg.normalize) {
        NormalizeResult na = normalize_percentile(a, cfg.normalization_rho);
        NormalizeResult nb = normalize_percentile(b, cfg.normalization_rho);
        res.degenerate_normalization = na.degenerate || nb.degenerate;
        a = std::move(na.image);
        b = std::move(nb.image);
    }
    AlphaLevels levels = AlphaLevels::equal(cfg.alpha_levels);
    if (cfg.measure == Measure::alpha_amd) {
        // Snapping memberships to the level grid makes alpha-cuts agree with
        // quantized lookups, so self-distance is exactly zero.
        a = quantize_membership(a, levels);
        b = quantize_membership(b, levels);
    }
    BinaryMask ma = mask_a ? *mask_a : BinaryMask::full(a.grid);
    BinaryMask mb = mask_b ? *mask_b : BinaryMask::full(b.grid);
    WeightMap wa = weights_a ? *weights_a : WeightMap::ones(a.grid);
    WeightMap wb = weights_b ? *weights_b : WeightMap::ones(b.grid);
    if (!ma.grid.same_geometry(a.grid) || !wa.grid.same_geometry(a.grid) ||
        !mb.grid.same_geometry(b.grid) || !wb.grid.same_geometry(b.grid))
        throw config_error("register: mask/weight geometry mismatch");

    double d_max_a = cfg.d_max > 0.0 ? cfg.d_max : 0.25 * a.grid.diagonal();
    double d_max_b = cfg.d_max > 0.0 ? cfg.d_max : 0.25 * b.grid.diagonal();

    std::vector<PyramidLevel> pa = build_pyramid(a, ma, wa, cfg.pyramid_factors, cfg.pyramid_sigmas);
    std::vector<PyramidLevel> pb = build_pyramid(b, mb, wb, cfg.pyramid_factors, cfg.pyramid_sigmas);
    res.preprocessing_seconds = seconds_since(t_pre);

    Rng rng(cfg.seed);
    Transform t = t0;
    double opt_seconds = 0.0;

    for (std::size_t k = 0; k < pa.size(); ++k) {
        auto t_stack = Clock::now();
        DistanceGradientStack stack_a, stack_b;
        SampleSet full_a, full_b;
        if (cfg.measure == Measure::alpha_amd) {
            stack_a = cfg.bidirectional
                          ? build_alpha_dt_bidirectional(pa[k].image, pa[k].mask, levels, d_max_a)
                          : build_alpha_dt(pa[k].image, pa[k].mask, levels, d_max_a);
            stack_b = cfg.bidirectional
                          ? build_alpha_dt_bidirectional(pb[k].image, pb[k].mask, levels, d_max_b)
                          : build_alpha_dt(pb[k].image, pb[k].mask, levels, d_max_b);
            full_a = full_sample_set(pa[k].mask);
            full_b = full_sample_set(pb[k].mask);
        }
        res.preprocessing_seconds += seconds_since(t_stack);

        ImageSide side_a{&pa[k].image, &pa[k].mask, &pa[k].weights, &stack_a};
        ImageSide side_b{&pb[k].image, &pb[k].mask, &pb[k].weights, &stack_b};
        Rng level_rng = rng.stream(k);

        CostFn cost;
        if (cfg.measure == Measure::alpha_amd) {
            cost = [&, k](const std::vector<double>& p) {
                Transform tt = t.with_params(p);
                SymmetricResult r = cfg.sampling_fraction >= 1.0
                                        ? symmetric_amd(side_a, side_b, tt, cfg.interpolation, full_a, full_b)
                                        : subsampled_amd(side_a, side_b, tt, cfg.interpolation,
                                                         cfg.sampling_fraction, level_rng);
                return CostEval{r.value, std::move(r.grad), r.non_overlap};
            };
        } else {
            cost = [&, k](const std::vector<double>& p) {
                Transform tt = t.with_params(p);
                MeasureResult r;
                switch (cfg.measure) {
                    case Measure::ssd: r = ssd(pa[k].image, pb[k].image, tt, pb[k].mask); break;
                    case Measure::pcc: r = pcc(pa[k].image, pb[k].image, tt, pb[k].mask); break;
                    default: r = mi(pa[k].image, pb[k].image, tt, pb[k].mask, cfg.mi_bins); break;
                }
                return CostEval{r.value, std::move(r.grad), r.non_overlap};
            };
        }

        const OptimizerConfig& ocfg = cfg.per_level.empty() ? cfg.optimizer : cfg.per_level[k];
        auto t_opt = Clock::now();
        MinimizeResult mr = minimize(cost, t.params(), ocfg);
        opt_seconds += seconds_since(t_opt);
        if (k == 0 && mr.trace.reason == StopReason::non_overlap && mr.trace.entries.empty())
            throw overlap_error(
                "register: no overlap at the initial transform; use a coarser level or a different start");
        t = t.with_params(mr.params);
        res.total_iterations += int(mr.trace.entries.size());
        res.traces.push_back({int(k), pa[k].factor, std::move(mr.trace)});
    }

    // Deterministic full evaluation at the returned transform, finest level.
    {
        std::size_t k = pa.size() - 1;
        if (cfg.measure == Measure::alpha_amd) {
            DistanceGradientStack stack_a =
                cfg.bidirectional ? build_alpha_dt_bidirectional(pa[k].image, pa[k].mask, levels, d_max_a)
                                  : build_alpha_dt(pa[k].image, pa[k].mask, levels, d_max_a);
            DistanceGradientStack stack_b =
                cfg.bidirectional ? build_alpha_dt_bidirectional(pb[k].image, pb[k].mask, levels, d_max_b)
                                  : build_alpha_dt(pb[k].image, pb[k].mask, levels, d_max_b);
            ImageSide side_a{&pa[k].image, &pa[k].mask, &pa[k].weights, &stack_a};
            ImageSide side_b{&pb[k].image, &pb[k].mask, &pb[k].weights, &stack_b};
            SymmetricResult r = symmetric_amd(side_a, side_b, t, cfg.interpolation);
            res.final_distance = r.value;
            res.non_overlap = r.non_overlap;
        } else {
            MeasureResult r;
            switch (cfg.measure) {
                case Measure::ssd: r = ssd(pa[k].image, pb[k].image, t, pb[k].mask); break;
                case Measure::pcc: r = pcc(pa[k].image, pb[k].image, t, pb[k].mask); break;
                default: r = mi(pa[k].image, pb[k].image, t, pb[k].mask, cfg.mi_bins); break;
            }
            res.final_distance = r.value;
            res.non_overlap = r.non_overlap;
        }
    }
    res.transform = t;
    res.mean_iteration_seconds = res.total_iterations > 0 ? opt_seconds / res.total_iterations : 0.0;
    return res;
}

SymmetricPairResult register_symmetric_pair(const FuzzyImage& a, const FuzzyImage& b,
                                            const BinaryMask* mask_a, const BinaryMask* mask_b,
                                            const WeightMap* weights_a, const WeightMap* weights_b,
                                            const Transform& t0, const RegistrationConfig& cfg) {
    SymmetricPairResult out;
    out.ab = register_images(a, b, mask_a, mask_b, weights_a, weights_b, t0, cfg);
    Transform t0_ba = t0.inverse();
    out.ba = register_images(b, a, mask_b, mask_a, weights_b, weights_a, t0_ba, cfg);
    return out;
}

MultiStartResult multi_start_rigid_then_affine(const FuzzyImage& a, const FuzzyImage& b,
                                               const StageInput& rigid_inputs,
                                               const StageInput& affine_inputs,
                                               const std::vector<Transform>& starts,
                                               const RegistrationConfig& cfg_rigid,
                                               const RegistrationConfig& cfg_affine) {
    if (starts.empty()) throw config_error("multi_start: need at least one start");
    MultiStartResult out;
    out.start_distances.assign(starts.size(), std::numeric_limits<double>::infinity());
    bool have_best = false;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        RegistrationResult r;
        try {
            r = register_images(a, b, rigid_inputs.mask_a, rigid_inputs.mask_b, rigid_inputs.weights_a,
                                rigid_inputs.weights_b, starts[i], cfg_rigid);
        } catch (const overlap_error&) {
            continue;
        }
        out.start_distances[i] = r.final_distance;
        if (!have_best || r.final_distance < out.rigid.final_distance) {
            out.rigid = std::move(r);
            out.best_start = int(i);
            have_best = true;
        }
    }
    if (!have_best) throw overlap_error("multi_start: every start failed with no overlap");
    const Transform& best = out.rigid.transform;
    Transform affine_t0 = Transform::affine(best.ndim(), best.matrix(), best.translation(), best.center());
    out.affine = register_images(a, b, affine_inputs.mask_a, affine_inputs.mask_b, affine_inputs.weights_a,
                                 affine_inputs.weights_b, affine_t0, cfg_affine);
    return out;
}

} // namespace amdreg
