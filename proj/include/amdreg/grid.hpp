#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace amdreg {

// Physical point or vector. Axes beyond the grid dimension stay zero so the
// same arithmetic works for 2D and 3D.
using Vec = std::array<double, 3>;

inline Vec vec2(double x, double y) { return {x, y, 0.0}; }
inline Vec vec3(double x, double y, double z) { return {x, y, z}; }

inline double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
inline Vec operator+(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec operator-(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec operator*(double s, const Vec& a) { return {s * a[0], s * a[1], s * a[2]}; }

// Regular sampling grid. Voxel (i,j,k) sits at physical position
// (i*sx, j*sy, k*sz); index i runs fastest in memory. 2D grids keep
// dims[2] == 1 and spacing[2] == 1 so loops can always run over three axes.
struct Grid {
    int ndim = 2;
    std::array<int, 3> dims{1, 1, 1};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};

    static Grid make(int ndim, std::array<int, 3> dims, std::array<double, 3> spacing) {
        if (ndim != 2 && ndim != 3) throw std::invalid_argument("Grid: ndim must be 2 or 3");
        Grid g;
        g.ndim = ndim;
        g.dims = dims;
        g.spacing = spacing;
        if (ndim == 2) { g.dims[2] = 1; g.spacing[2] = 1.0; }
        for (int a = 0; a < 3; ++a) {
            if (g.dims[a] < 1) throw std::invalid_argument("Grid: dims must be >= 1");
            if (!(g.spacing[a] > 0.0)) throw std::invalid_argument("Grid: spacing must be > 0");
        }
        return g;
    }
    static Grid make2(int nx, int ny, double sx = 1.0, double sy = 1.0) {
        return make(2, {nx, ny, 1}, {sx, sy, 1.0});
    }
    static Grid make3(int nx, int ny, int nz, double sx = 1.0, double sy = 1.0, double sz = 1.0) {
        return make(3, {nx, ny, nz}, {sx, sy, sz});
    }

    std::size_t voxel_count() const {
        return std::size_t(dims[0]) * std::size_t(dims[1]) * std::size_t(dims[2]);
    }
    std::size_t index(int x, int y, int z) const {
        return std::size_t(x) + std::size_t(dims[0]) * (std::size_t(y) + std::size_t(dims[1]) * std::size_t(z));
    }
    std::array<int, 3> coords(std::size_t idx) const {
        int x = int(idx % std::size_t(dims[0]));
        std::size_t r = idx / std::size_t(dims[0]);
        int y = int(r % std::size_t(dims[1]));
        int z = int(r / std::size_t(dims[1]));
        return {x, y, z};
    }
    Vec position(int x, int y, int z) const {
        return {x * spacing[0], y * spacing[1], z * spacing[2]};
    }
    Vec position(std::size_t idx) const {
        auto c = coords(idx);
        return position(c[0], c[1], c[2]);
    }
    // Physical size covered by voxel centers, per axis.
    Vec extent() const {
        return {(dims[0] - 1) * spacing[0], (dims[1] - 1) * spacing[1], (dims[2] - 1) * spacing[2]};
    }
    Vec center() const { return 0.5 * extent(); }
    double diagonal() const { return norm(extent()); }

    // Inside the bounding box of voxel centers.
    bool contains(const Vec& p) const {
        for (int a = 0; a < ndim; ++a) {
            if (p[a] < 0.0 || p[a] > (dims[a] - 1) * spacing[a]) return false;
        }
        return true;
    }
    std::array<int, 3> nearest(const Vec& p) const {
        std::array<int, 3> c{0, 0, 0};
        for (int a = 0; a < 3; ++a) {
            long i = std::lround(p[a] / spacing[a]);
            if (i < 0) i = 0;
            if (i > dims[a] - 1) i = dims[a] - 1;
            c[a] = int(i);
        }
        return c;
    }
    bool same_geometry(const Grid& o) const {
        return ndim == o.ndim && dims == o.dims && spacing == o.spacing;
    }
};

// Multilinear interpolation cell at a physical point: corner voxel indices,
// blend weights, and optionally the derivative of each weight with respect to
// each physical coordinate. Axes with a single voxel contribute one corner.
struct LinearCell {
    int corners = 0;
    std::array<std::size_t, 8> index{};
    std::array<double, 8> w{};
    std::array<std::array<double, 8>, 3> dw{};
};

inline LinearCell make_linear_cell(const Grid& g, const Vec& p, bool with_derivative = false) {
    int base[3];
    double frac[3];
    int steps[3];
    for (int a = 0; a < 3; ++a) {
        if (g.dims[a] == 1) {
            base[a] = 0;
            frac[a] = 0.0;
            steps[a] = 1;
        } else {
            double fi = p[a] / g.spacing[a];
            int i0 = int(std::floor(fi));
            if (i0 < 0) i0 = 0;
            if (i0 > g.dims[a] - 2) i0 = g.dims[a] - 2;
            base[a] = i0;
            frac[a] = fi - i0;
            steps[a] = 2;
        }
    }
    LinearCell cell;
    for (int dz = 0; dz < steps[2]; ++dz) {
        for (int dy = 0; dy < steps[1]; ++dy) {
            for (int dx = 0; dx < steps[0]; ++dx) {
                int c = cell.corners++;
                cell.index[c] = g.index(base[0] + dx, base[1] + dy, base[2] + dz);
                double wx = (steps[0] == 1) ? 1.0 : (dx ? frac[0] : 1.0 - frac[0]);
                double wy = (steps[1] == 1) ? 1.0 : (dy ? frac[1] : 1.0 - frac[1]);
                double wz = (steps[2] == 1) ? 1.0 : (dz ? frac[2] : 1.0 - frac[2]);
                cell.w[c] = wx * wy * wz;
                if (with_derivative) {
                    double gx = (steps[0] == 1) ? 0.0 : (dx ? 1.0 : -1.0) / g.spacing[0];
                    double gy = (steps[1] == 1) ? 0.0 : (dy ? 1.0 : -1.0) / g.spacing[1];
                    double gz = (steps[2] == 1) ? 0.0 : (dz ? 1.0 : -1.0) / g.spacing[2];
                    cell.dw[0][c] = gx * wy * wz;
                    cell.dw[1][c] = wx * gy * wz;
                    cell.dw[2][c] = wx * wy * gz;
                }
            }
        }
    }
    return cell;
}

} // namespace amdreg
