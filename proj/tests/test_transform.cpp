#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "amdreg/rng.hpp"
#include "amdreg/transform.hpp"

using namespace amdreg;

namespace {

constexpr double kPi = 3.14159265358979323846;

Transform random_transform(TransformModel model, int ndim, Rng& rng) {
    Vec c = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), ndim == 3 ? rng.uniform(-2.0, 2.0) : 0.0};
    if (model == TransformModel::rigid) {
        std::array<double, 3> ang{rng.uniform(-1.0, 1.0), 0.0, 0.0};
        if (ndim == 3) {
            ang[1] = rng.uniform(-1.0, 1.0);
            ang[2] = rng.uniform(-1.0, 1.0);
        }
        Vec t = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), ndim == 3 ? rng.uniform(-3.0, 3.0) : 0.0};
        return Transform::rigid(ndim, ang, t, c);
    }
    // Well-conditioned linear part: identity plus a small random perturbation.
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};
    for (int i = 0; i < ndim; ++i)
        for (int j = 0; j < ndim; ++j) m[std::size_t(3 * i + j)] += rng.uniform(-0.25, 0.25);
    Vec t = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), ndim == 3 ? rng.uniform(-3.0, 3.0) : 0.0};
    return Transform::affine(ndim, m, t, c);
}

Vec random_point(int ndim, Rng& rng) {
    return {rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0), ndim == 3 ? rng.uniform(-4.0, 4.0) : 0.0};
}

std::array<double, 9> mat_mul(const std::array<double, 9>& a, const std::array<double, 9>& b) {
    std::array<double, 9> r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                r[std::size_t(3 * i + j)] += a[std::size_t(3 * i + k)] * b[std::size_t(3 * k + j)];
    return r;
}

} // namespace

TEST_CASE("apply matches the closed forms for identity, translation, rotation") {
    Vec x = vec2(1.0, 0.0);
    Transform id = Transform::identity(2, TransformModel::rigid, vec2(0, 0));
    CHECK(norm(id.apply(x) - x) == doctest::Approx(0.0));

    Transform tr = Transform::rigid(2, {0, 0, 0}, vec2(1, 2), vec2(0, 0));
    Vec y = tr.apply(vec2(0, 0));
    CHECK(y[0] == doctest::Approx(1.0));
    CHECK(y[1] == doctest::Approx(2.0));

    Transform rot = Transform::rigid(2, {kPi / 2, 0, 0}, vec2(0, 0), vec2(0, 0));
    Vec r = rot.apply(vec2(1, 0));
    CHECK(r[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(r[1] == doctest::Approx(1.0));
}

TEST_CASE("apply acts about the stated center") {
    Transform rot = Transform::rigid(2, {kPi / 2, 0, 0}, vec2(0, 0), vec2(1, 1));
    Vec c = rot.apply(vec2(1, 1));
    CHECK(norm(c - vec2(1, 1)) == doctest::Approx(0.0).epsilon(1e-14));
    Vec p = rot.apply(vec2(2, 1)); // one unit right of center rotates to one unit up
    CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(2.0));
}

TEST_CASE("3d rotation composes intrinsic z-y-x axis rotations in order") {
    Rng rng(17);
    for (int k = 0; k < 20; ++k) {
        double a = rng.uniform(-1.5, 1.5), b = rng.uniform(-1.5, 1.5), g = rng.uniform(-1.5, 1.5);
        std::array<double, 9> rz{std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1};
        std::array<double, 9> ry{std::cos(b), 0, std::sin(b), 0, 1, 0, -std::sin(b), 0, std::cos(b)};
        std::array<double, 9> rx{1, 0, 0, 0, std::cos(g), -std::sin(g), 0, std::sin(g), std::cos(g)};
        std::array<double, 9> want = mat_mul(mat_mul(rz, ry), rx);
        Transform t = Transform::rigid(3, {a, b, g}, vec3(0, 0, 0), vec3(0, 0, 0));
        for (int i = 0; i < 9; ++i)
            CHECK(t.matrix()[std::size_t(i)] == doctest::Approx(want[std::size_t(i)]).epsilon(1e-13));
    }
}

TEST_CASE("rigid matrices are rotations") {
    Rng rng(2);
    for (int k = 0; k < 30; ++k) {
        int ndim = k % 2 ? 2 : 3;
        Transform t = random_transform(TransformModel::rigid, ndim, rng);
        const auto& m = t.matrix();
        // Columns orthonormal.
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double d = 0.0;
                for (int r = 0; r < 3; ++r) d += m[std::size_t(3 * r + i)] * m[std::size_t(3 * r + j)];
                CHECK(d == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
            }
    }
}

TEST_CASE("inverse round-trips points and composes to the identity") {
    Rng rng(5);
    Transform id2 = Transform::identity(2, TransformModel::affine, vec2(0, 0));
    Transform idinv = id2.inverse();
    for (int i = 0; i < 9; ++i)
        CHECK(idinv.matrix()[std::size_t(i)] == doctest::Approx(id2.matrix()[std::size_t(i)]));

    Transform tr = Transform::rigid(2, {0, 0, 0}, vec2(3, -4), vec2(0, 0));
    Vec ti = tr.inverse().translation();
    CHECK(ti[0] == doctest::Approx(-3.0));
    CHECK(ti[1] == doctest::Approx(4.0));

    for (int k = 0; k < 50; ++k) {
        TransformModel model = k % 2 ? TransformModel::rigid : TransformModel::affine;
        int ndim = (k / 2) % 2 ? 2 : 3;
        Transform t = random_transform(model, ndim, rng);
        Transform inv = t.inverse();
        for (int p = 0; p < 5; ++p) {
            Vec x = random_point(ndim, rng);
            Vec back = inv.apply(t.apply(x));
            CHECK(norm(back - x) <= 1e-10 * std::max(1.0, norm(x)));
        }
        Transform comp = compose(t, inv);
        for (int i = 0; i < 9; ++i) {
            double want = (i % 4 == 0) ? 1.0 : 0.0;
            CHECK(std::abs(comp.matrix()[std::size_t(i)] - want) < 1e-10);
        }
        Vec res = comp.apply(vec3(0.7, -1.1, ndim == 3 ? 0.3 : 0.0));
        CHECK(norm(res - vec3(0.7, -1.1, ndim == 3 ? 0.3 : 0.0)) < 1e-10);
    }
}

TEST_CASE("inverting a singular linear part is an error") {
    Transform t = Transform::affine(2, {0, 0, 0, 0, 0, 0, 0, 0, 1}, vec2(0, 0), vec2(0, 0));
    CHECK_THROWS_AS((void)t.inverse(), std::domain_error);
}

TEST_CASE("parameter layout: rigid angles then translation, affine rows then translation") {
    Transform r2 = Transform::rigid(2, {0.3, 0, 0}, vec2(1, 2), vec2(0, 0));
    CHECK(r2.param_count() == 3);
    auto p = r2.params();
    CHECK(p[0] == doctest::Approx(0.3));
    CHECK(p[1] == doctest::Approx(1.0));
    CHECK(p[2] == doctest::Approx(2.0));
    CHECK(Transform::identity(3, TransformModel::rigid, vec3(0, 0, 0)).param_count() == 6);
    CHECK(Transform::identity(2, TransformModel::affine, vec2(0, 0)).param_count() == 6);
    CHECK(Transform::identity(3, TransformModel::affine, vec3(0, 0, 0)).param_count() == 12);

    Transform a2 = Transform::affine(2, {1, 2, 0, 3, 4, 0, 0, 0, 1}, vec2(5, 6), vec2(0, 0));
    auto q = a2.params();
    REQUIRE(q.size() == 6);
    CHECK(q[0] == 1.0);
    CHECK(q[1] == 2.0);
    CHECK(q[2] == 3.0);
    CHECK(q[3] == 4.0);
    CHECK(q[4] == 5.0);
    CHECK(q[5] == 6.0);

    Rng rng(9);
    for (int k = 0; k < 20; ++k) {
        TransformModel model = k % 2 ? TransformModel::rigid : TransformModel::affine;
        int ndim = (k / 2) % 2 ? 2 : 3;
        Transform t = random_transform(model, ndim, rng);
        Transform back = t.with_params(t.params());
        for (int p2 = 0; p2 < 3; ++p2) {
            Vec x = random_point(ndim, rng);
            CHECK(norm(back.apply(x) - t.apply(x)) < 1e-12);
        }
        Transform from = Transform::from_params(ndim, model, t.center(), t.params());
        for (int p2 = 0; p2 < 3; ++p2) {
            Vec x = random_point(ndim, rng);
            CHECK(norm(from.apply(x) - t.apply(x)) < 1e-12);
        }
    }
}

TEST_CASE("parameter jacobian rows match their closed forms") {
    // Affine: the translation rows are unit vectors, the a_ij rows carry x-c.
    Transform a2 = Transform::affine(2, {1, 0, 0, 0, 1, 0, 0, 0, 1}, vec2(0, 0), vec2(0, 0));
    double J[12 * 3];
    Vec x = vec2(3, 4);
    a2.param_jacobian(x, J);
    // Rows: a11 a12 a21 a22 t1 t2; columns: output components.
    CHECK(J[0 * 2 + 0] == doctest::Approx(3.0));
    CHECK(J[0 * 2 + 1] == doctest::Approx(0.0));
    CHECK(J[1 * 2 + 0] == doctest::Approx(4.0));
    CHECK(J[2 * 2 + 1] == doctest::Approx(3.0));
    CHECK(J[4 * 2 + 0] == doctest::Approx(1.0));
    CHECK(J[4 * 2 + 1] == doctest::Approx(0.0));
    CHECK(J[5 * 2 + 0] == doctest::Approx(0.0));
    CHECK(J[5 * 2 + 1] == doctest::Approx(1.0));

    // Rigid 2D at angle 0: d(apply)/d(theta) at x-c=(1,0) is (0,1).
    Transform r2 = Transform::rigid(2, {0, 0, 0}, vec2(0, 0), vec2(0, 0));
    r2.param_jacobian(vec2(1, 0), J);
    CHECK(J[0 * 2 + 0] == doctest::Approx(0.0));
    CHECK(J[0 * 2 + 1] == doctest::Approx(1.0));
}

TEST_CASE("parameter jacobian matches finite differences for every model") {
    Rng rng(23);
    for (int k = 0; k < 40; ++k) {
        TransformModel model = k % 2 ? TransformModel::rigid : TransformModel::affine;
        int ndim = (k / 2) % 2 ? 2 : 3;
        Transform t = random_transform(model, ndim, rng);
        Vec x = random_point(ndim, rng);
        int np = t.param_count();
        std::vector<double> J(std::size_t(np * ndim));
        t.param_jacobian(x, J.data());
        std::vector<double> p = t.params();
        double h = 1e-6;
        for (int i = 0; i < np; ++i) {
            std::vector<double> pp = p, pm = p;
            pp[std::size_t(i)] += h;
            pm[std::size_t(i)] -= h;
            Vec yp = t.with_params(pp).apply(x);
            Vec ym = t.with_params(pm).apply(x);
            for (int j = 0; j < ndim; ++j) {
                double fd = (yp[std::size_t(j)] - ym[std::size_t(j)]) / (2.0 * h);
                CHECK(std::abs(J[std::size_t(i * ndim + j)] - fd) < 1e-6);
            }
        }
    }
}

TEST_CASE("inverse-parameter jacobian matches the finite-difference oracle") {
    Rng rng(31);
    for (int k = 0; k < 40; ++k) {
        TransformModel model = k % 2 ? TransformModel::rigid : TransformModel::affine;
        int ndim = (k / 2) % 2 ? 2 : 3;
        Transform t = random_transform(model, ndim, rng);
        int np = t.param_count();
        std::vector<double> M = t.inverse_param_jacobian();
        REQUIRE(int(M.size()) == np * np);
        std::vector<double> p = t.params();
        double h = 1e-6;
        for (int i = 0; i < np; ++i) {
            std::vector<double> pp = p, pm = p;
            pp[std::size_t(i)] += h;
            pm[std::size_t(i)] -= h;
            std::vector<double> qp = t.with_params(pp).inverse().params();
            std::vector<double> qm = t.with_params(pm).inverse().params();
            for (int j = 0; j < np; ++j) {
                double fd = (qp[std::size_t(j)] - qm[std::size_t(j)]) / (2.0 * h);
                double got = M[std::size_t(i * np + j)];
                CHECK(std::abs(got - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

TEST_CASE("inverse-parameter jacobian at the identity is minus the identity") {
    // At A=I, t=0: d(A^-1) = -dA and d(-A^-1 t) = -dt, so every block is -I.
    for (int ndim : {2, 3}) {
        for (TransformModel model : {TransformModel::rigid, TransformModel::affine}) {
            Vec c = ndim == 2 ? vec2(0.5, -0.25) : vec3(0.5, -0.25, 1.0);
            Transform t = Transform::identity(ndim, model, c);
            int np = t.param_count();
            std::vector<double> M = t.inverse_param_jacobian();
            for (int i = 0; i < np; ++i)
                for (int j = 0; j < np; ++j) {
                    double want = (i == j) ? -1.0 : 0.0;
                    CHECK(std::abs(M[std::size_t(i * np + j)] - want) < 1e-12);
                }
        }
    }
}

TEST_CASE("composition applies inner then outer and keeps the inner center") {
    Rng rng(41);
    for (int k = 0; k < 20; ++k) {
        int ndim = k % 2 ? 2 : 3;
        Transform outer = random_transform(k % 4 < 2 ? TransformModel::rigid : TransformModel::affine, ndim, rng);
        Transform inner = random_transform(TransformModel::rigid, ndim, rng);
        Transform c = compose(outer, inner);
        CHECK(c.model() == TransformModel::affine);
        CHECK(norm(c.center() - inner.center()) == doctest::Approx(0.0));
        for (int p = 0; p < 5; ++p) {
            Vec x = random_point(ndim, rng);
            Vec want = outer.apply(inner.apply(x));
            CHECK(norm(c.apply(x) - want) < 1e-11);
        }
    }
}

TEST_CASE("rigid transforms embed into the affine model without changing apply") {
    Rng rng(47);
    for (int k = 0; k < 20; ++k) {
        int ndim = k % 2 ? 2 : 3;
        Transform r = random_transform(TransformModel::rigid, ndim, rng);
        Transform a = Transform::affine(ndim, r.matrix(), r.translation(), r.center());
        for (int p = 0; p < 5; ++p) {
            Vec x = random_point(ndim, rng);
            CHECK(norm(a.apply(x) - r.apply(x)) == doctest::Approx(0.0));
        }
    }
}

TEST_CASE("random transform classes respect their displacement bounds") {
    Vec size2 = vec2(63.0, 63.0);
    Vec c2 = vec2(31.5, 31.5);
    auto deg = [](double rad) { return std::abs(rad) * 180.0 / kPi; };

    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
        Transform s = sample_random_transform(DisplacementClass::small, 2, size2, c2, rng);
        CHECK(deg(s.angles()[0]) <= 10.0 + 1e-9);
        CHECK(std::abs(s.translation()[0]) <= 0.10 * size2[0] + 1e-9);
        CHECK(std::abs(s.translation()[1]) <= 0.10 * size2[1] + 1e-9);
    }
    for (int k = 0; k < 200; ++k) {
        Transform m = sample_random_transform(DisplacementClass::medium, 2, size2, c2, rng);
        double a = deg(m.angles()[0]);
        double tx = std::abs(m.translation()[0]) / size2[0] * 100.0;
        double ty = std::abs(m.translation()[1]) / size2[1] * 100.0;
        CHECK(a <= 20.0 + 1e-9);
        CHECK(tx <= 20.0 + 1e-9);
        CHECK(ty <= 20.0 + 1e-9);
        CHECK(std::max({a, tx, ty}) > 10.0); // at least one parameter leaves the small band
    }
    for (int k = 0; k < 200; ++k) {
        Transform l = sample_random_transform(DisplacementClass::large, 2, size2, c2, rng);
        double a = deg(l.angles()[0]);
        double tx = std::abs(l.translation()[0]) / size2[0] * 100.0;
        double ty = std::abs(l.translation()[1]) / size2[1] * 100.0;
        CHECK(a <= 30.0 + 1e-9);
        CHECK(tx <= 30.0 + 1e-9);
        CHECK(ty <= 30.0 + 1e-9);
        CHECK(std::max({a, tx, ty}) > 20.0);
    }

    Vec size3 = vec3(31.0, 31.0, 31.0);
    Vec c3 = vec3(15.5, 15.5, 15.5);
    for (int k = 0; k < 100; ++k) {
        Transform s = sample_random_transform(DisplacementClass::small, 3, size3, c3, rng);
        for (int i = 0; i < 3; ++i) {
            CHECK(deg(s.angles()[std::size_t(i)]) <= 10.0 + 1e-9);
            CHECK(std::abs(s.translation()[std::size_t(i)]) <= 0.10 * size3[std::size_t(i)] + 1e-9);
        }
        Transform m = sample_random_transform(DisplacementClass::medium, 3, size3, c3, rng);
        for (int i = 0; i < 3; ++i) CHECK(deg(m.angles()[std::size_t(i)]) <= 15.0 + 1e-9);
        Transform l = sample_random_transform(DisplacementClass::large, 3, size3, c3, rng);
        for (int i = 0; i < 3; ++i) CHECK(deg(l.angles()[std::size_t(i)]) <= 20.0 + 1e-9);
    }
}

TEST_CASE("random transform sampling is deterministic per seed") {
    Vec size = vec2(63.0, 63.0);
    Vec c = vec2(31.5, 31.5);
    Rng a(99), b(99);
    Transform ta = sample_random_transform(DisplacementClass::large, 2, size, c, a);
    Transform tb = sample_random_transform(DisplacementClass::large, 2, size, c, b);
    CHECK(ta.params() == tb.params());
    Rng d(100);
    Transform td = sample_random_transform(DisplacementClass::large, 2, size, c, d);
    CHECK(ta.params() != td.params());
}
