#pragma once

#include <array>
#include <vector>

#include "amdreg/grid.hpp"
#include "amdreg/rng.hpp"

namespace amdreg {

enum class TransformModel { rigid, affine };

// Centered linear map y = A (x - c) + c + t. The linear part is either a
// free n x n matrix (affine) or a rotation parameterized by one angle in 2D
// or intrinsic Z-Y-X Euler angles (a, b, g) with R = Rz(a) Ry(b) Rx(g) in 3D.
//
// Parameter vectors: rigid (angles..., t...), affine (A row-major..., t...).
// Parameter count is 3/6 (rigid 2D/3D) and 6/12 (affine 2D/3D).
class Transform {
public:
    Transform() = default; // 2D rigid identity about the origin

    static Transform identity(int ndim, TransformModel model, const Vec& center);
    static Transform rigid(int ndim, const std::array<double, 3>& angles, const Vec& t, const Vec& c);
    static Transform affine(int ndim, const std::array<double, 9>& matrix, const Vec& t, const Vec& c);
    static Transform from_params(int ndim, TransformModel model, const Vec& c, const std::vector<double>& p);

    int ndim() const { return ndim_; }
    TransformModel model() const { return model_; }
    const std::array<double, 9>& matrix() const { return a_; } // row-major 3x3, identity-padded
    const Vec& translation() const { return t_; }
    const Vec& center() const { return c_; }
    const std::array<double, 3>& angles() const { return angles_; } // rigid only
    int angle_count() const { return model_ == TransformModel::rigid ? (ndim_ == 2 ? 1 : 3) : 0; }

    Vec apply(const Vec& x) const;
    Transform inverse() const;

    int param_count() const;
    std::vector<double> params() const;
    Transform with_params(const std::vector<double>& p) const;

    // J takes param_count * ndim doubles, row-major; row i is d(apply)/d(p_i).
    void param_jacobian(const Vec& x, double* J) const;

    // M[i * np + j] = d(params(inverse())_j) / d(params()_i). Chain rule for
    // mapping a gradient in the inverse's parameters back to this transform's
    // parameters is then g_i = sum_j M[i][j] g_inv_j.
    std::vector<double> inverse_param_jacobian() const;

private:
    void rebuild_rigid();

    int ndim_ = 2;
    TransformModel model_ = TransformModel::rigid;
    std::array<double, 9> a_{1, 0, 0, 0, 1, 0, 0, 0, 1};
    std::array<double, 3> angles_{0, 0, 0};
    Vec t_{0, 0, 0};
    Vec c_{0, 0, 0};
    std::array<std::array<double, 9>, 3> da_{}; // rigid: dA/d(angle_k)
};

// outer(inner(x)); the result is affine with inner's center.
Transform compose(const Transform& outer, const Transform& inner);

// Displacement magnitude classes for synthetic transforms. Bounds are
// percentages of the per-axis physical size for translations and degrees for
// rotations: 2D 10/20/30, 3D 10/15/20. medium and large draws are resampled
// until at least one parameter exceeds the class lower bound.
enum class DisplacementClass { small, medium, large };

Transform sample_random_transform(DisplacementClass cls, int ndim, const Vec& physical_size,
                                  const Vec& center, Rng& rng);

} // namespace amdreg
