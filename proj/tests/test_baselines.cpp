#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "amdreg/baselines.hpp"
#include "amdreg/evaluation.hpp"
#include "amdreg/rng.hpp"

using namespace amdreg;

namespace {

FuzzyImage constant_image(const Grid& g, double v) {
    FuzzyImage img = FuzzyImage::zeros(g);
    for (double& x : img.values) x = v;
    return img;
}

FuzzyImage random_image(const Grid& g, std::uint64_t seed) {
    Rng rng(seed);
    FuzzyImage img = FuzzyImage::zeros(g);
    for (double& v : img.values) v = rng.uniform01();
    return img;
}

FuzzyImage smooth_image(const Grid& g, std::uint64_t seed) {
    return gaussian_smooth(random_image(g, seed), 2.0);
}

// Independent bilinear interpolation, 2D only.
double interp_oracle(const FuzzyImage& img, const Vec& p) {
    const Grid& g = img.grid;
    double ux = p[0] / g.spacing[0], uy = p[1] / g.spacing[1];
    int x0 = int(std::floor(ux)), y0 = int(std::floor(uy));
    if (x0 > g.dims[0] - 2) x0 = g.dims[0] - 2;
    if (y0 > g.dims[1] - 2) y0 = g.dims[1] - 2;
    if (x0 < 0) x0 = 0;
    if (y0 < 0) y0 = 0;
    double fx = ux - x0, fy = uy - y0;
    auto at = [&](int x, int y) { return img.values[g.index(x, y, 0)]; };
    return (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x0 + 1, y0) +
           (1 - fx) * fy * at(x0, y0 + 1) + fx * fy * at(x0 + 1, y0 + 1);
}

// Visits b-grid voxels inside mask_b whose pullback lands in a's grid.
template <typename F>
std::size_t overlap_oracle(const FuzzyImage& a, const FuzzyImage& b, const Transform& t,
                           const BinaryMask& mask_b, F&& f) {
    Transform tinv = t.inverse();
    std::size_t n = 0;
    for (int y = 0; y < b.grid.dims[1]; ++y)
        for (int x = 0; x < b.grid.dims[0]; ++x) {
            std::size_t idx = b.grid.index(x, y, 0);
            if (!mask_b.inside[idx]) continue;
            Vec p = tinv.apply(b.grid.position(x, y, 0));
            if (!a.grid.contains(p)) continue;
            ++n;
            f(interp_oracle(a, p), b.values[idx]);
        }
    return n;
}

double entropy_of(const std::vector<double>& counts, double n) {
    double h = 0.0;
    for (double c : counts)
        if (c > 0.0) h -= (c / n) * std::log(c / n);
    return h;
}

// Four-value block image: quadrant k of an even-sized square grid takes vals[k].
FuzzyImage quadrant_image(const Grid& g, const double vals[4]) {
    FuzzyImage img = FuzzyImage::zeros(g);
    int hx = g.dims[0] / 2, hy = g.dims[1] / 2;
    for (int y = 0; y < g.dims[1]; ++y)
        for (int x = 0; x < g.dims[0]; ++x)
            img.values[g.index(x, y, 0)] = vals[(y < hy ? 0 : 2) + (x < hx ? 0 : 1)];
    return img;
}

} // namespace

TEST_CASE("ssd of an image with itself under identity is zero") {
    Grid g = Grid::make2(12, 10);
    FuzzyImage a = random_image(g, 5);
    Transform t = Transform::identity(2, TransformModel::rigid, g.center());
    MeasureResult r = ssd(a, a, t, BinaryMask::full(g));
    CHECK(r.value == 0.0);
    CHECK(r.overlap_count == g.voxel_count());
    CHECK_FALSE(r.non_overlap);
}

TEST_CASE("ssd of constant images zero and one is one") {
    Grid g = Grid::make2(8, 8);
    FuzzyImage a = constant_image(g, 0.0);
    FuzzyImage b = constant_image(g, 1.0);
    Transform t = Transform::identity(2, TransformModel::rigid, g.center());
    CHECK(ssd(a, b, t, BinaryMask::full(g)).value == 1.0);
}

TEST_CASE("ssd matches the double-loop oracle on random pairs") {
    Grid g = Grid::make2(8, 8);
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        FuzzyImage a = random_image(g, 100 + seed);
        FuzzyImage b = random_image(g, 200 + seed);
        Transform t = Transform::rigid(2, {0.1 + 0.02 * double(seed), 0, 0},
                                       vec2(0.4, -0.3), g.center());
        BinaryMask mask = BinaryMask::full(g);
        double sum = 0.0;
        std::size_t n = overlap_oracle(a, b, t, mask, [&](double pa, double pb) {
            sum += (pa - pb) * (pa - pb);
        });
        MeasureResult r = ssd(a, b, t, mask);
        CHECK(r.overlap_count == n);
        CHECK(r.value == doctest::Approx(sum / double(n)).epsilon(1e-12));
    }
}

TEST_CASE("ssd restricted to a mask averages only masked voxels") {
    Grid g = Grid::make2(10, 10);
    FuzzyImage a = random_image(g, 7);
    FuzzyImage b = random_image(g, 8);
    BinaryMask mask = BinaryMask::empty(g);
    for (int y = 2; y < 5; ++y)
        for (int x = 3; x < 8; ++x) mask.inside[g.index(x, y, 0)] = 1;
    Transform t = Transform::identity(2, TransformModel::rigid, g.center());
    double sum = 0.0;
    std::size_t n = overlap_oracle(a, b, t, mask, [&](double pa, double pb) {
        sum += (pa - pb) * (pa - pb);
    });
    MeasureResult r = ssd(a, b, t, mask);
    CHECK(n == 15);
    CHECK(r.overlap_count == 15);
    CHECK(r.value == doctest::Approx(sum / 15.0).epsilon(1e-12));
}

TEST_CASE("ssd analytic gradient agrees with central finite differences") {
    Grid g = Grid::make2(16, 16);
    FuzzyImage a = smooth_image(g, 31);
    FuzzyImage b = smooth_image(g, 32);
    BinaryMask mask = BinaryMask::full(g);
    Transform t = Transform::rigid(2, {0.07, 0, 0}, vec2(0.35, -0.2), g.center());
    MeasureResult r = ssd(a, b, t, mask);
    std::vector<double> p = t.params();
    double h = 1e-5;
    for (std::size_t i = 0; i < p.size(); ++i) {
        std::vector<double> pp = p, pm = p;
        pp[i] += h;
        pm[i] -= h;
        double fd = (ssd(a, b, t.with_params(pp), mask).value -
                     ssd(a, b, t.with_params(pm), mask).value) /
                    (2.0 * h);
        // Pullbacks crossing interpolation cells under the probe step leave
        // small kinks; the bound reflects that, not the analytic chain rule.
        CHECK(r.grad[i] == doctest::Approx(fd).epsilon(2e-3));
    }
}

TEST_CASE("all measures report non-overlap when the images are pushed apart") {
    Grid g = Grid::make2(8, 8);
    FuzzyImage a = random_image(g, 1);
    FuzzyImage b = random_image(g, 2);
    BinaryMask mask = BinaryMask::full(g);
    Transform t = Transform::rigid(2, {0, 0, 0}, vec2(1000.0, 0.0), g.center());
    for (MeasureResult r : {ssd(a, b, t, mask), pcc(a, b, t, mask), mi(a, b, t, mask)}) {
        CHECK(r.non_overlap);
        CHECK(r.overlap_count == 0);
        for (double gi : r.grad) CHECK(gi == 0.0);
    }
}

TEST_CASE("pcc of an image with itself is one and of its negative is minus one") {
    Grid g = Grid::make2(9, 7);
    FuzzyImage a = random_image(g, 3);
    FuzzyImage neg = a;
    for (double& v : neg.values) v = 1.0 - v;
    Transform t = Transform::identity(2, TransformModel::rigid, g.center());
    BinaryMask mask = BinaryMask::full(g);
    CHECK(pcc_value(a, a, t, mask) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pcc_value(neg, a, t, mask) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("pcc matches the direct formula oracle and negates into the cost") {
    Grid g = Grid::make2(8, 8);
    FuzzyImage a = random_image(g, 41);
    FuzzyImage b = random_image(g, 42);
    BinaryMask mask = BinaryMask::full(g);
    Transform t = Transform::rigid(2, {0.12, 0, 0}, vec2(-0.3, 0.5), g.center());
    double n = 0, sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    overlap_oracle(a, b, t, mask, [&](double pa, double pb) {
        n += 1;
        sa += pa;
        sb += pb;
        saa += pa * pa;
        sbb += pb * pb;
        sab += pa * pb;
    });
    double want = (n * sab - sa * sb) /
                  (std::sqrt(n * saa - sa * sa) * std::sqrt(n * sbb - sb * sb));
    CHECK(pcc_value(a, b, t, mask) == doctest::Approx(want).epsilon(1e-12));
    MeasureResult r = pcc(a, b, t, mask);
    CHECK(r.value == -pcc_value(a, b, t, mask));
    CHECK(r.overlap_count == std::size_t(n));
}

TEST_CASE("pcc of a degenerate constant overlap is zero") {
    Grid g = Grid::make2(6, 6);
    FuzzyImage a = constant_image(g, 0.4);
    FuzzyImage b = random_image(g, 9);
    Transform t = Transform::identity(2, TransformModel::rigid, g.center());
    CHECK(pcc_value(a, b, t, BinaryMask::full(g)) == 0.0);
}

TEST_CASE("mi of an image with itself over distinct bins equals its entropy") {
    Grid g = Grid::make2(8, 8);
    const double vals[4] = {0.1, 0.4, 0.7, 0.9};
    FuzzyImage a = quadrant_image(g, vals);
    Transform t = Transform::identity(2, TransformModel::rigid, g.center());
    // 16 voxels per quadrant value; the joint histogram is diagonal.
    double ha = entropy_of({16, 16, 16, 16}, 64.0);
    CHECK(mi_value(a, a, t, BinaryMask::full(g), 4) == doctest::Approx(ha).epsilon(1e-12));
}

TEST_CASE("mi is preserved by a monotone mapping that relabels bins") {
    Grid g = Grid::make2(8, 8);
    const double va[4] = {0.1, 0.4, 0.7, 0.9};
    const double vb[4] = {0.9, 0.6, 0.4, 0.1}; // monotone decreasing relabeling
    FuzzyImage a = quadrant_image(g, va);
    FuzzyImage b = quadrant_image(g, vb);
    Transform t = Transform::identity(2, TransformModel::rigid, g.center());
    double ha = entropy_of({16, 16, 16, 16}, 64.0);
    CHECK(mi_value(a, b, t, BinaryMask::full(g), 4) == doctest::Approx(ha).epsilon(1e-12));
}

TEST_CASE("mi matches a histogram oracle and stays bias-sized for independent noise") {
    Grid g = Grid::make2(64, 64);
    FuzzyImage a = random_image(g, 71);
    FuzzyImage b = random_image(g, 72);
    BinaryMask mask = BinaryMask::full(g);
    Transform t = Transform::identity(2, TransformModel::rigid, g.center());
    int bins = 32;

    std::vector<double> joint(std::size_t(bins) * std::size_t(bins), 0.0);
    double n = 0;
    overlap_oracle(a, b, t, mask, [&](double pa, double pb) {
        auto bin = [bins](double v) {
            int k = int(v * bins);
            return k >= bins ? bins - 1 : (k < 0 ? 0 : k);
        };
        joint[std::size_t(bin(pa)) * std::size_t(bins) + std::size_t(bin(pb))] += 1;
        n += 1;
    });
    std::vector<double> ma(std::size_t(bins), 0.0), mb(std::size_t(bins), 0.0);
    for (int i = 0; i < bins; ++i)
        for (int j = 0; j < bins; ++j) {
            ma[std::size_t(i)] += joint[std::size_t(i) * std::size_t(bins) + std::size_t(j)];
            mb[std::size_t(j)] += joint[std::size_t(i) * std::size_t(bins) + std::size_t(j)];
        }
    double want = entropy_of(ma, n) + entropy_of(mb, n) - entropy_of(joint, n);

    double got = mi_value(a, b, t, mask, bins);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
    // Independent signals: only the plug-in estimator bias remains, about
    // (occupied joint cells - occupied marginal cells) / (2 N) ~ 0.12 nat.
    CHECK(got > 0.05);
    CHECK(got < 0.2);
}

TEST_CASE("mi rejects degenerate bin counts") {
    Grid g = Grid::make2(4, 4);
    FuzzyImage a = random_image(g, 1);
    Transform t = Transform::identity(2, TransformModel::rigid, g.center());
    CHECK_THROWS_AS(mi(a, a, t, BinaryMask::full(g), 1), std::invalid_argument);
}

TEST_CASE("pcc and mi gradients are the central differences of their values") {
    Grid g = Grid::make2(12, 12);
    FuzzyImage a = smooth_image(g, 51);
    FuzzyImage b = smooth_image(g, 52);
    BinaryMask mask = BinaryMask::full(g);
    Transform t = Transform::rigid(2, {0.05, 0, 0}, vec2(0.2, 0.1), g.center());
    std::vector<double> p = t.params();
    double h = 1e-4; // the measures' own probe step
    MeasureResult rp = pcc(a, b, t, mask);
    MeasureResult rm = mi(a, b, t, mask, 8);
    for (std::size_t i = 0; i < p.size(); ++i) {
        std::vector<double> pp = p, pm = p;
        pp[i] += h;
        pm[i] -= h;
        double fd_pcc = (-pcc_value(a, b, t.with_params(pp), mask) -
                         -pcc_value(a, b, t.with_params(pm), mask)) /
                        (2.0 * h);
        double fd_mi = (-mi_value(a, b, t.with_params(pp), mask, 8) -
                        -mi_value(a, b, t.with_params(pm), mask, 8)) /
                       (2.0 * h);
        CHECK(rp.grad[i] == doctest::Approx(fd_pcc).epsilon(1e-12));
        CHECK(rm.grad[i] == doctest::Approx(fd_mi).epsilon(1e-12));
    }
}
