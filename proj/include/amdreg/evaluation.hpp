#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "amdreg/image.hpp"
#include "amdreg/registration.hpp"
#include "amdreg/transform.hpp"

namespace amdreg {

struct LandmarkSet {
    std::vector<Vec> points;
    std::vector<int> parity; // optional labels (0 even, 1 odd); empty = unlabeled

    std::size_t size() const { return points.size(); }
    bool labeled() const { return parity.size() == points.size() && !points.empty(); }
    LandmarkSet subset(int par) const;
};

// 4 corners in 2D, 8 in 3D, at the physical extent box of the grid,
// x-fastest order starting at the origin corner.
LandmarkSet corner_landmarks(const Grid& g);

LandmarkSet transform_landmarks(const Transform& t, const LandmarkSet& l);

// mean_i |ref(i) - t(flo(i))|; the sets correspond pointwise.
double average_error(const Transform& t, const LandmarkSet& ref, const LandmarkSet& flo);

// mean over ref of the distance to the nearest transformed flo point.
double average_minimal_error(const Transform& t, const LandmarkSet& ref, const LandmarkSet& flo);

// (AME(odd) + AME(even)) / 2 for parity-labeled ring landmarks.
double ame_outer(const Transform& t, const LandmarkSet& odd_ref, const LandmarkSet& odd_flo,
                 const LandmarkSet& even_ref, const LandmarkSet& even_flo);

struct SuccessRates {
    double sr = 0.0;
    double sym_sr = 0.0;
};

// sr: fraction with forward error <= threshold; sym_sr: fraction with both
// forward and reverse errors <= threshold. Pairs are (forward, reverse).
SuccessRates success_metrics(const std::vector<std::array<double, 2>>& errors,
                             double threshold = 1.0);

// mean over points of |t_ba(t_ab(x)) - x|.
double inverse_consistency_error(const Transform& t_ab, const Transform& t_ba,
                                 const std::vector<Vec>& points);

// Physical positions of every stride-th grid point along each axis.
std::vector<Vec> grid_points(const Grid& g, int stride = 1);

// |r1 & r2| / |r1 | r2|; two empty masks count as perfect agreement (1).
double jaccard(const BinaryMask& r1, const BinaryMask& r2);

// output(y) = src(t^-1(y)) by multilinear interpolation, 0 outside the
// source bounding box. Test-data generation only; the measures themselves
// never resample intensities.
FuzzyImage warp_image(const FuzzyImage& src, const Transform& t);

// Voxels of g whose pullback t^-1(y) stays inside g: the region where a
// warped image carries real content rather than out-of-bounds fill.
BinaryMask warp_footprint(const Grid& g, const Transform& t);

// Fixed asymmetric mixture of Gaussian blobs in [0,1]; registration fixture.
FuzzyImage make_smooth_phantom(const Grid& g);

// Annulus membership exp(-(|x-c|-radius)^2 / (2 width^2)).
FuzzyImage make_ring_phantom(const Grid& g, double radius, double width);

struct SyntheticConfig {
    DisplacementClass displacement = DisplacementClass::small;
    int trials = 50;
    double noise_sigma = 0.1;
    std::uint64_t seed = 1;
    double success_threshold = 1.0; // physical units
    bool bidirectional_eval = false;
    int ice_stride = 4;
    RegistrationConfig registration; // see default_synthetic_registration()
};

// Registration settings sized for small synthetic fixtures: the stock
// pyramid with a per-level step/iteration schedule that reaches sub-pixel
// accuracy in a bounded number of iterations.
RegistrationConfig default_synthetic_registration();

struct TrialRecord {
    int trial = 0;
    double ae_forward = 0.0; // inf when the registration failed outright
    double ae_reverse = 0.0; // nan when bidirectional_eval is off
    bool success = false;
    bool symmetric_success = false;
    double ice = 0.0; // nan unless both directions succeeded
    double final_distance = 0.0;
    int iterations = 0;
    bool failed = false;
};

struct EvaluationReport {
    std::vector<TrialRecord> trials;
    double threshold = 1.0;
    double sr = 0.0;
    double sym_sr = 0.0;
    double mean_successful_ae = 0.0; // nan when no trial succeeded
    double mean_ice = 0.0;           // nan unless symmetric successes exist
    std::vector<double> region_jaccard; // filled by label-overlap evaluations
    double total_seconds = 0.0;         // never written to report files
};

// Rows (threshold, fraction of trials with forward error <= threshold) for
// thresholds 0, step, 2 step, ..., max_threshold.
std::vector<std::array<double, 2>> cumulative_table(const EvaluationReport& report,
                                                    double step = 0.05,
                                                    double max_threshold = 3.0);

void write_trials_csv(const EvaluationReport& report, const std::string& path);
void write_cumulative_csv(const EvaluationReport& report, const std::string& path);
std::string summary_text(const EvaluationReport& report);
void write_summary(const EvaluationReport& report, const std::string& path);

// Per trial: sample a class transform about the grid center, build the
// floating image by inverse-mapping resampling plus fresh noise, register
// from identity, and score the corner-landmark error against the known
// truth. Trial seeds derive from seed + trial index.
EvaluationReport run_synthetic_experiment(const FuzzyImage& base, const SyntheticConfig& cfg);

} // namespace amdreg
