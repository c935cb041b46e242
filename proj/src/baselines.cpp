#include "amdreg/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace amdreg {

namespace {

constexpr double kFdStep = 1e-4;

// Visits every overlap pair: q on b's grid inside mask_b whose pullback
// tinv(q) lands inside a's grid. f(idx_b, x) with x the pullback point.
template <typename F>
std::size_t over_overlap(const FuzzyImage& a, const FuzzyImage& b, const Transform& tinv,
                         const BinaryMask& mask_b, F&& f) {
    std::size_t count = 0;
    const Grid& gb = b.grid;
    for (int z = 0; z < gb.dims[2]; ++z) {
        for (int y = 0; y < gb.dims[1]; ++y) {
            for (int x = 0; x < gb.dims[0]; ++x) {
                std::size_t idx = gb.index(x, y, z);
                if (!mask_b.inside[idx]) continue;
                Vec p = tinv.apply(gb.position(x, y, z));
                if (!a.grid.contains(p)) continue;
                ++count;
                f(idx, p);
            }
        }
    }
    return count;
}

double ssd_value(const FuzzyImage& a, const FuzzyImage& b, const Transform& t,
                 const BinaryMask& mask_b, bool& non_overlap) {
    Transform tinv = t.inverse();
    double sum = 0.0;
    std::size_t n = over_overlap(a, b, tinv, mask_b, [&](std::size_t idx, const Vec& p) {
        double diff = interp_linear(a, p) - b.values[idx];
        sum += diff * diff;
    });
    non_overlap = n == 0;
    return n == 0 ? 0.0 : sum / double(n);
}

struct PccSums {
    double n = 0, sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
};

double pcc_from_sums(const PccSums& s) {
    double cov = s.n * s.sab - s.sa * s.sb;
    double va = s.n * s.saa - s.sa * s.sa;
    double vb = s.n * s.sbb - s.sb * s.sb;
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return cov / (std::sqrt(va) * std::sqrt(vb));
}

double mi_from_pairs(const std::vector<double>& pa, const std::vector<double>& pb, int bins) {
    std::vector<double> joint(std::size_t(bins) * std::size_t(bins), 0.0);
    auto bin_of = [bins](double v) {
        if (v < 0.0) v = 0.0;
        if (v > 1.0) v = 1.0;
        int k = int(v * bins);
        return k >= bins ? bins - 1 : k;
    };
    double n = double(pa.size());
    for (std::size_t i = 0; i < pa.size(); ++i)
        joint[std::size_t(bin_of(pa[i])) * std::size_t(bins) + std::size_t(bin_of(pb[i]))] += 1.0;
    std::vector<double> ma(std::size_t(bins), 0.0), mb(std::size_t(bins), 0.0);
    for (int i = 0; i < bins; ++i)
        for (int j = 0; j < bins; ++j) {
            double c = joint[std::size_t(i) * std::size_t(bins) + std::size_t(j)];
            ma[std::size_t(i)] += c;
            mb[std::size_t(j)] += c;
        }
    auto ent = [n](const std::vector<double>& counts) {
        double h = 0.0;
        for (double c : counts)
            if (c > 0.0) {
                double p = c / n;
                h -= p * std::log(p);
            }
        return h;
    };
    return ent(ma) + ent(mb) - ent(joint);
}

// Central finite differences of a value-only functional over the parameters.
template <typename ValueFn>
MeasureResult fd_gradient_measure(const Transform& t, ValueFn&& value) {
    MeasureResult out;
    bool non_overlap = false;
    out.value = value(t, non_overlap, &out.overlap_count);
    out.non_overlap = non_overlap;
    int np = t.param_count();
    out.grad.assign(std::size_t(np), 0.0);
    if (out.non_overlap) return out;
    std::vector<double> p = t.params();
    for (int i = 0; i < np; ++i) {
        std::vector<double> pp = p, pm = p;
        pp[std::size_t(i)] += kFdStep;
        pm[std::size_t(i)] -= kFdStep;
        bool bad_p = false, bad_m = false;
        double vp = value(t.with_params(pp), bad_p, nullptr);
        double vm = value(t.with_params(pm), bad_m, nullptr);
        if (bad_p || bad_m) {
            out.non_overlap = true;
            out.grad.assign(std::size_t(np), 0.0);
            return out;
        }
        out.grad[std::size_t(i)] = (vp - vm) / (2.0 * kFdStep);
    }
    return out;
}

} // namespace

MeasureResult ssd(const FuzzyImage& a, const FuzzyImage& b, const Transform& t,
                  const BinaryMask& mask_b) {
    MeasureResult out;
    int np = t.param_count();
    int n = t.ndim();
    out.grad.assign(std::size_t(np), 0.0);
    Transform tinv = t.inverse();
    std::vector<double> minv = t.inverse_param_jacobian();
    std::vector<double> ginv(std::size_t(np), 0.0);
    double sum = 0.0;
    double jinv[12 * 3];
    std::size_t count = over_overlap(a, b, tinv, mask_b, [&](std::size_t idx, const Vec& p) {
        Vec grad_a;
        double pa = interp_linear_grad(a, p, grad_a);
        double diff = pa - b.values[idx];
        sum += diff * diff;
        tinv.param_jacobian(p, jinv);
        for (int m = 0; m < np; ++m) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += jinv[m * n + j] * grad_a[std::size_t(j)];
            ginv[std::size_t(m)] += 2.0 * diff * acc;
        }
    });
    out.overlap_count = count;
    if (count == 0) {
        out.non_overlap = true;
        return out;
    }
    out.value = sum / double(count);
    for (int i = 0; i < np; ++i) {
        double acc = 0.0;
        for (int m = 0; m < np; ++m)
            acc += minv[std::size_t(i) * std::size_t(np) + std::size_t(m)] * ginv[std::size_t(m)];
        out.grad[std::size_t(i)] = acc / double(count);
    }
    return out;
}

double pcc_value(const FuzzyImage& a, const FuzzyImage& b, const Transform& t,
                 const BinaryMask& mask_b) {
    Transform tinv = t.inverse();
    PccSums s;
    over_overlap(a, b, tinv, mask_b, [&](std::size_t idx, const Vec& p) {
        double pa = interp_linear(a, p);
        double pb = b.values[idx];
        s.n += 1.0;
        s.sa += pa;
        s.sb += pb;
        s.saa += pa * pa;
        s.sbb += pb * pb;
        s.sab += pa * pb;
    });
    return pcc_from_sums(s);
}

MeasureResult pcc(const FuzzyImage& a, const FuzzyImage& b, const Transform& t,
                  const BinaryMask& mask_b) {
    return fd_gradient_measure(t, [&](const Transform& tt, bool& bad, std::size_t* count) {
        Transform tinv = tt.inverse();
        PccSums s;
        std::size_t n = over_overlap(a, b, tinv, mask_b, [&](std::size_t idx, const Vec& p) {
            double pa = interp_linear(a, p);
            double pb = b.values[idx];
            s.sa += pa;
            s.sb += pb;
            s.saa += pa * pa;
            s.sbb += pb * pb;
            s.sab += pa * pb;
        });
        s.n = double(n);
        bad = n == 0;
        if (count) *count = n;
        return -pcc_from_sums(s);
    });
}

double mi_value(const FuzzyImage& a, const FuzzyImage& b, const Transform& t,
                const BinaryMask& mask_b, int bins) {
    Transform tinv = t.inverse();
    std::vector<double> pa, pb;
    over_overlap(a, b, tinv, mask_b, [&](std::size_t idx, const Vec& p) {
        pa.push_back(interp_linear(a, p));
        pb.push_back(b.values[idx]);
    });
    if (pa.empty()) return 0.0;
    return mi_from_pairs(pa, pb, bins);
}

MeasureResult mi(const FuzzyImage& a, const FuzzyImage& b, const Transform& t,
                 const BinaryMask& mask_b, int bins) {
    if (bins < 2) throw std::invalid_argument("mi: bins must be >= 2");
    return fd_gradient_measure(t, [&](const Transform& tt, bool& bad, std::size_t* count) {
        Transform tinv = tt.inverse();
        std::vector<double> pa, pb;
        over_overlap(a, b, tinv, mask_b, [&](std::size_t idx, const Vec& p) {
            pa.push_back(interp_linear(a, p));
            pb.push_back(b.values[idx]);
        });
        bad = pa.empty();
        if (count) *count = pa.size();
        if (pa.empty()) return 0.0;
        return -mi_from_pairs(pa, pb, bins);
    });
}

} // namespace amdreg
