#pragma once

#include <functional>
#include <string>

#include "hjb/common.hpp"

namespace hjb {

// Uniform tensor grid sampling of a scalar field, d in {1,2}.  Periodic grids
// cover [lo, hi) with res points per axis (no duplicated endpoint); box grids
// include both endpoints.  Storage is x-fastest: index(i,j) = i + res*j.
struct GridField {
    Box domain;
    bool periodic = false;
    Index d = 1;
    Index res = 0;  // points per axis
    Array values;

    static GridField create(Index d, Index res, const Box& domain, bool periodic);
    static GridField sample(Index d, Index res, const Box& domain, bool periodic,
                            const std::function<double(const Vector&)>& f);

    Index size() const { return values.size(); }
    double spacing(Index axis) const {
        double L = domain.hi[axis] - domain.lo[axis];
        return periodic ? L / static_cast<double>(res) : L / static_cast<double>(res - 1);
    }
    Vector point(Index flat) const;

    // cubic (4-point Lagrange) interpolation; clamped beyond a box domain,
    // wrapped on a periodic one
    double interpolate(const Vector& x) const;
    double interpolate_derivative(const Vector& x, Index axis) const;

    void save_csv(const std::string& path) const;
    static GridField load_csv(const std::string& path);
};

// All grid points as columns of a d x n matrix (same flat ordering as values).
Matrix grid_points(const GridField& g);

}  // namespace hjb
