#pragma once

#include <cstdint>
#include <vector>

#include "amdreg/amd.hpp"
#include "amdreg/baselines.hpp"
#include "amdreg/image.hpp"
#include "amdreg/optimizer.hpp"
#include "amdreg/transform.hpp"

namespace amdreg {

enum class Measure { alpha_amd, ssd, pcc, mi };

const char* measure_name(Measure m);

struct RegistrationConfig {
    TransformModel model = TransformModel::rigid;
    Measure measure = Measure::alpha_amd;
    int alpha_levels = 7;
    double d_max = 0.0;                    // <= 0 selects 0.25 * target image diagonal
    bool bidirectional = true;
    bool normalize = true;
    double normalization_rho = 0.05;
    std::vector<int> pyramid_factors{4, 2, 1};
    std::vector<double> pyramid_sigmas{5.0, 3.0, 0.0};
    OptimizerConfig optimizer;
    std::vector<OptimizerConfig> per_level;  // optional per-level overrides; empty = cfg.optimizer everywhere
    double sampling_fraction = 1.0;          // alpha_amd only; < 1 draws fresh sets per iteration
    InterpMode interpolation = InterpMode::linear;
    std::uint64_t seed = 1;
    int mi_bins = 32;
};

struct LevelTrace {
    int level = 0;
    int factor = 1;
    IterationTrace trace;
};

struct RegistrationResult {
    Transform transform;
    double final_distance = 0.0;   // full evaluation at the returned transform
    bool non_overlap = false;      // final evaluation found no overlap
    bool degenerate_normalization = false;
    std::vector<LevelTrace> traces;
    int total_iterations = 0;
    double preprocessing_seconds = 0.0;
    double mean_iteration_seconds = 0.0;
};

// Registers floating image a onto reference image b, returning T that maps
// a's physical space into b's. Null masks/weights mean all-true/all-ones.
// Throws overlap_error when the images do not overlap under t0 at the
// coarsest level; later non-overlap aborts keep the best iterate found.
RegistrationResult register_images(const FuzzyImage& a, const FuzzyImage& b,
                                   const BinaryMask* mask_a, const BinaryMask* mask_b,
                                   const WeightMap* weights_a, const WeightMap* weights_b,
                                   const Transform& t0, const RegistrationConfig& cfg);

struct SymmetricPairResult {
    RegistrationResult ab;
    RegistrationResult ba;
};

// Independent registrations in both directions; the reverse starts from the
// inverse of t0.
SymmetricPairResult register_symmetric_pair(const FuzzyImage& a, const FuzzyImage& b,
                                            const BinaryMask* mask_a, const BinaryMask* mask_b,
                                            const WeightMap* weights_a, const WeightMap* weights_b,
                                            const Transform& t0, const RegistrationConfig& cfg);

struct StageInput {
    const BinaryMask* mask_a = nullptr;
    const BinaryMask* mask_b = nullptr;
    const WeightMap* weights_a = nullptr;
    const WeightMap* weights_b = nullptr;
};

struct MultiStartResult {
    int best_start = -1;
    std::vector<double> start_distances; // +inf for starts that failed outright
    RegistrationResult rigid;
    RegistrationResult affine;
};

// Rigid registration from every start, selection by lowest final distance,
// then affine refinement seeded with the winning rigid transform.
MultiStartResult multi_start_rigid_then_affine(const FuzzyImage& a, const FuzzyImage& b,
                                               const StageInput& rigid_inputs,
                                               const StageInput& affine_inputs,
                                               const std::vector<Transform>& starts,
                                               const RegistrationConfig& cfg_rigid,
                                               const RegistrationConfig& cfg_affine);

} // namespace amdreg
