#include "amdreg/transform.hpp"

#include <cmath>
#include <stdexcept>

namespace amdreg {

namespace {

using Mat3 = std::array<double, 9>;

constexpr Mat3 kIdentity{1, 0, 0, 0, 1, 0, 0, 0, 1};

Mat3 mul(const Mat3& a, const Mat3& b) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a[std::size_t(i * 3 + k)] * b[std::size_t(k * 3 + j)];
            r[std::size_t(i * 3 + j)] = s;
        }
    return r;
}

Mat3 transpose(const Mat3& a) {
    return {a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]};
}

Vec mat_vec(const Mat3& a, const Vec& v) {
    return {a[0] * v[0] + a[1] * v[1] + a[2] * v[2],
            a[3] * v[0] + a[4] * v[1] + a[5] * v[2],
            a[6] * v[0] + a[7] * v[1] + a[8] * v[2]};
}

double det3(const Mat3& a) {
    return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
           a[2] * (a[3] * a[7] - a[4] * a[6]);
}

Mat3 inverse3(const Mat3& a) {
    double d = det3(a);
    if (std::abs(d) < 1e-12) throw std::domain_error("Transform: singular linear part");
    double id = 1.0 / d;
    Mat3 r;
    r[0] = (a[4] * a[8] - a[5] * a[7]) * id;
    r[1] = (a[2] * a[7] - a[1] * a[8]) * id;
    r[2] = (a[1] * a[5] - a[2] * a[4]) * id;
    r[3] = (a[5] * a[6] - a[3] * a[8]) * id;
    r[4] = (a[0] * a[8] - a[2] * a[6]) * id;
    r[5] = (a[2] * a[3] - a[0] * a[5]) * id;
    r[6] = (a[3] * a[7] - a[4] * a[6]) * id;
    r[7] = (a[1] * a[6] - a[0] * a[7]) * id;
    r[8] = (a[0] * a[4] - a[1] * a[3]) * id;
    return r;
}

Mat3 rot_z(double a) {
    double c = std::cos(a), s = std::sin(a);
    return {c, -s, 0, s, c, 0, 0, 0, 1};
}
Mat3 rot_y(double a) {
    double c = std::cos(a), s = std::sin(a);
    return {c, 0, s, 0, 1, 0, -s, 0, c};
}
Mat3 rot_x(double a) {
    double c = std::cos(a), s = std::sin(a);
    return {1, 0, 0, 0, c, -s, 0, s, c};
}
Mat3 drot_z(double a) {
    double c = std::cos(a), s = std::sin(a);
    return {-s, -c, 0, c, -s, 0, 0, 0, 0};
}
Mat3 drot_y(double a) {
    double c = std::cos(a), s = std::sin(a);
    return {-s, 0, c, 0, 0, 0, -c, 0, -s};
}
Mat3 drot_x(double a) {
    double c = std::cos(a), s = std::sin(a);
    return {0, 0, 0, 0, -s, -c, 0, c, -s};
}

// Euler angles (a, b, g) with M = Rz(a) Ry(b) Rx(g).
std::array<double, 3> euler_zyx_from_matrix(const Mat3& m) {
    double sb = -m[6]; // -m20
    if (sb > 1.0) sb = 1.0;
    if (sb < -1.0) sb = -1.0;
    double b = std::asin(sb);
    double cb = std::cos(b);
    if (std::abs(cb) < 1e-12) {
        // Gimbal lock: a and g are coupled; put everything into a.
        return {std::atan2(-m[1], m[4]), b, 0.0};
    }
    return {std::atan2(m[3], m[0]), b, std::atan2(m[7], m[8])};
}

// Space-frame angular velocity map for Z-Y-X Euler angles: columns are the
// instantaneous rotation axes of a, b, g expressed in the fixed frame.
Mat3 euler_zyx_velocity_map(const std::array<double, 3>& ang) {
    double ca = std::cos(ang[0]), sa = std::sin(ang[0]);
    double cb = std::cos(ang[1]), sb = std::sin(ang[1]);
    return {0, -sa, ca * cb,
            0, ca, sa * cb,
            1, 0, -sb};
}

} // namespace

void Transform::rebuild_rigid() {
    if (ndim_ == 2) {
        double c = std::cos(angles_[0]), s = std::sin(angles_[0]);
        a_ = {c, -s, 0, s, c, 0, 0, 0, 1};
        da_[0] = {-s, -c, 0, c, -s, 0, 0, 0, 0};
    } else {
        Mat3 rz = rot_z(angles_[0]), ry = rot_y(angles_[1]), rx = rot_x(angles_[2]);
        a_ = mul(rz, mul(ry, rx));
        da_[0] = mul(drot_z(angles_[0]), mul(ry, rx));
        da_[1] = mul(rz, mul(drot_y(angles_[1]), rx));
        da_[2] = mul(rz, mul(ry, drot_x(angles_[2])));
    }
}

Transform Transform::identity(int ndim, TransformModel model, const Vec& center) {
    if (ndim != 2 && ndim != 3) throw std::invalid_argument("Transform: ndim must be 2 or 3");
    Transform t;
    t.ndim_ = ndim;
    t.model_ = model;
    t.c_ = center;
    if (ndim == 2) t.c_[2] = 0.0;
    if (model == TransformModel::rigid) t.rebuild_rigid();
    return t;
}

Transform Transform::rigid(int ndim, const std::array<double, 3>& angles, const Vec& t, const Vec& c) {
    Transform r = identity(ndim, TransformModel::rigid, c);
    r.angles_ = angles;
    if (ndim == 2) { r.angles_[1] = r.angles_[2] = 0.0; }
    r.t_ = t;
    if (ndim == 2) r.t_[2] = 0.0;
    r.rebuild_rigid();
    return r;
}

Transform Transform::affine(int ndim, const std::array<double, 9>& matrix, const Vec& t, const Vec& c) {
    Transform r = identity(ndim, TransformModel::affine, c);
    r.a_ = matrix;
    if (ndim == 2) {
        r.a_[2] = r.a_[5] = r.a_[6] = r.a_[7] = 0.0;
        r.a_[8] = 1.0;
    }
    r.t_ = t;
    if (ndim == 2) r.t_[2] = 0.0;
    return r;
}

Transform Transform::from_params(int ndim, TransformModel model, const Vec& c, const std::vector<double>& p) {
    Transform r = identity(ndim, model, c);
    return r.with_params(p);
}

int Transform::param_count() const {
    if (model_ == TransformModel::rigid) return angle_count() + ndim_;
    return ndim_ * ndim_ + ndim_;
}

std::vector<double> Transform::params() const {
    std::vector<double> p;
    p.reserve(std::size_t(param_count()));
    if (model_ == TransformModel::rigid) {
        for (int k = 0; k < angle_count(); ++k) p.push_back(angles_[std::size_t(k)]);
    } else {
        for (int i = 0; i < ndim_; ++i)
            for (int j = 0; j < ndim_; ++j) p.push_back(a_[std::size_t(i * 3 + j)]);
    }
    for (int j = 0; j < ndim_; ++j) p.push_back(t_[std::size_t(j)]);
    return p;
}

Transform Transform::with_params(const std::vector<double>& p) const {
    if (int(p.size()) != param_count()) throw std::invalid_argument("Transform: parameter count mismatch");
    Transform r = *this;
    std::size_t at = 0;
    if (model_ == TransformModel::rigid) {
        for (int k = 0; k < angle_count(); ++k) r.angles_[std::size_t(k)] = p[at++];
        r.rebuild_rigid();
    } else {
        for (int i = 0; i < ndim_; ++i)
            for (int j = 0; j < ndim_; ++j) r.a_[std::size_t(i * 3 + j)] = p[at++];
    }
    for (int j = 0; j < ndim_; ++j) r.t_[std::size_t(j)] = p[at++];
    return r;
}

Vec Transform::apply(const Vec& x) const {
    Vec d = x - c_;
    return mat_vec(a_, d) + c_ + t_;
}

Transform Transform::inverse() const {
    Transform r = *this;
    if (model_ == TransformModel::affine) {
        Mat3 b = inverse3(a_); // identity z-padding makes this exact for 2D too
        r.a_ = b;
        Vec bt = mat_vec(b, t_);
        r.t_ = {-bt[0], -bt[1], -bt[2]};
        return r;
    }
    Mat3 rt = transpose(a_);
    if (ndim_ == 2) {
        r.angles_ = {-angles_[0], 0.0, 0.0};
    } else {
        r.angles_ = euler_zyx_from_matrix(rt);
    }
    r.rebuild_rigid();
    Vec bt = mat_vec(rt, t_);
    r.t_ = {-bt[0], -bt[1], -bt[2]};
    return r;
}

void Transform::param_jacobian(const Vec& x, double* J) const {
    int np = param_count();
    int n = ndim_;
    for (int i = 0; i < np * n; ++i) J[i] = 0.0;
    Vec d = x - c_;
    if (model_ == TransformModel::rigid) {
        int na = angle_count();
        for (int k = 0; k < na; ++k) {
            Vec row = mat_vec(da_[std::size_t(k)], d);
            for (int j = 0; j < n; ++j) J[k * n + j] = row[std::size_t(j)];
        }
        for (int j = 0; j < n; ++j) J[(na + j) * n + j] = 1.0;
    } else {
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) J[(i * n + k) * n + i] = d[std::size_t(k)];
        for (int j = 0; j < n; ++j) J[(n * n + j) * n + j] = 1.0;
    }
}

std::vector<double> Transform::inverse_param_jacobian() const {
    int np = param_count();
    int n = ndim_;
    std::vector<double> m(std::size_t(np) * std::size_t(np), 0.0);
    auto at = [&](int i, int j) -> double& { return m[std::size_t(i) * std::size_t(np) + std::size_t(j)]; };
    if (model_ == TransformModel::affine) {
        Transform inv = inverse();
        const Mat3& b = inv.a_; // A^{-1}
        Vec bt = mat_vec(b, t_);
        // d(B_rs)/d(a_jk) = -B_rj B_ks ; d(t'_r)/d(a_jk) = B_rj (B t)_k ;
        // d(t'_r)/d(t_j) = -B_rj.
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                int row = j * n + k;
                for (int r = 0; r < n; ++r) {
                    for (int s = 0; s < n; ++s)
                        at(row, r * n + s) = -b[std::size_t(r * 3 + j)] * b[std::size_t(k * 3 + s)];
                    at(row, n * n + r) = b[std::size_t(r * 3 + j)] * bt[std::size_t(k)];
                }
            }
        }
        for (int j = 0; j < n; ++j)
            for (int r = 0; r < n; ++r) at(n * n + j, n * n + r) = -b[std::size_t(r * 3 + j)];
        return m;
    }
    int na = angle_count();
    if (n == 2) {
        at(0, 0) = -1.0;
        // t' = -R^T t, so d(t'_r)/d(theta) = -(dR/dtheta)^T t.
        for (int r = 0; r < 2; ++r) {
            double v = 0.0;
            for (int q = 0; q < 2; ++q) v += da_[0][std::size_t(q * 3 + r)] * t_[std::size_t(q)];
            at(0, 1 + r) = -v;
        }
        for (int j = 0; j < 2; ++j)
            for (int r = 0; r < 2; ++r) at(1 + j, 1 + r) = -a_[std::size_t(j * 3 + r)];
        return m;
    }
    // 3D rigid. Angular block via space-frame velocity maps: with
    // R(theta') = R(theta)^T, omega' = -R^T omega gives
    // d(theta')/d(theta) = -Js(theta')^{-1} R^T Js(theta).
    Transform inv = inverse();
    Mat3 js_fwd = euler_zyx_velocity_map(angles_);
    Mat3 js_inv = inverse3(euler_zyx_velocity_map(inv.angles_));
    Mat3 k = mul(js_inv, mul(transpose(a_), js_fwd));
    for (int kk = 0; kk < na; ++kk)
        for (int mm = 0; mm < na; ++mm) at(kk, mm) = -k[std::size_t(mm * 3 + kk)];
    for (int kk = 0; kk < na; ++kk) {
        for (int r = 0; r < 3; ++r) {
            double v = 0.0;
            for (int q = 0; q < 3; ++q) v += da_[std::size_t(kk)][std::size_t(q * 3 + r)] * t_[std::size_t(q)];
            at(kk, na + r) = -v;
        }
    }
    for (int j = 0; j < 3; ++j)
        for (int r = 0; r < 3; ++r) at(na + j, na + r) = -a_[std::size_t(j * 3 + r)];
    return m;
}

Transform compose(const Transform& outer, const Transform& inner) {
    if (outer.ndim() != inner.ndim()) throw std::invalid_argument("compose: dimension mismatch");
    Mat3 a = mul(outer.matrix(), inner.matrix());
    Vec ci = inner.center();
    Vec shift = ci + inner.translation() - outer.center();
    Vec t = mat_vec(outer.matrix(), shift) + outer.center() + outer.translation() - ci;
    return Transform::affine(outer.ndim(), a, t, ci);
}

Transform sample_random_transform(DisplacementClass cls, int ndim, const Vec& physical_size,
                                  const Vec& center, Rng& rng) {
    double deg_hi = 0.0, deg_lo = 0.0, pct_hi = 0.0, pct_lo = 0.0;
    if (ndim == 2) {
        switch (cls) {
            case DisplacementClass::small: deg_lo = 0.0; deg_hi = 10.0; break;
            case DisplacementClass::medium: deg_lo = 10.0; deg_hi = 20.0; break;
            case DisplacementClass::large: deg_lo = 20.0; deg_hi = 30.0; break;
        }
    } else {
        switch (cls) {
            case DisplacementClass::small: deg_lo = 0.0; deg_hi = 10.0; break;
            case DisplacementClass::medium: deg_lo = 10.0; deg_hi = 15.0; break;
            case DisplacementClass::large: deg_lo = 15.0; deg_hi = 20.0; break;
        }
    }
    pct_lo = deg_lo / 100.0;
    pct_hi = deg_hi / 100.0;
    const double to_rad = 0.01745329251994329577;
    int na = ndim == 2 ? 1 : 3;
    for (int attempt = 0; attempt < 100000; ++attempt) {
        std::array<double, 3> ang{0, 0, 0};
        Vec t{0, 0, 0};
        bool beyond_lo = false;
        for (int k = 0; k < na; ++k) {
            ang[std::size_t(k)] = rng.uniform(-deg_hi * to_rad, deg_hi * to_rad);
            if (std::abs(ang[std::size_t(k)]) > deg_lo * to_rad) beyond_lo = true;
        }
        for (int j = 0; j < ndim; ++j) {
            double bound = pct_hi * physical_size[std::size_t(j)];
            t[std::size_t(j)] = rng.uniform(-bound, bound);
            if (std::abs(t[std::size_t(j)]) > pct_lo * physical_size[std::size_t(j)]) beyond_lo = true;
        }
        if (cls == DisplacementClass::small || beyond_lo) return Transform::rigid(ndim, ang, t, center);
    }
    throw std::logic_error("sample_random_transform: resampling did not terminate");
}

} // namespace amdreg
