#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace hjb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Array = Eigen::ArrayXd;
using Index = Eigen::Index;

// Axis-aligned box [lo_1,hi_1] x ... x [lo_d,hi_d].
struct Box {
    Vector lo, hi;

    static Box cube(Index d, double lo, double hi) {
        Box b;
        b.lo = Vector::Constant(d, lo);
        b.hi = Vector::Constant(d, hi);
        return b;
    }

    Index dim() const { return lo.size(); }

    bool contains(const Vector& x) const {
        return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    }

    Box scaled(double factor) const {
        Vector c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
        Box b;
        b.lo = c - factor * r;
        b.hi = c + factor * r;
        return b;
    }

    double volume() const { return (hi - lo).prod(); }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stable sub-stream seed derived from a parent seed and a text tag.
inline std::uint64_t child_seed(std::uint64_t seed, std::string_view tag, std::uint64_t salt = 0) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return splitmix64(seed ^ splitmix64(h ^ salt));
}

// Deterministic generator: raw 64-bit stream is splitmix64 over a counter,
// uniforms/normals are built explicitly so output never depends on libstdc++
// distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x6a09e667f3bcc908ULL)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    double uniform() {  // in [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double th = 2.0 * M_PI * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

    Vector normal_vector(Index n) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    Vector uniform_in(const Box& box) {
        Vector x(box.dim());
        for (Index i = 0; i < box.dim(); ++i) x[i] = uniform(box.lo[i], box.hi[i]);
        return x;
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Fixed-format float for CSV output (deterministic across runs).
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// Round-trip exact text form, for serialized artifacts.
inline std::string fmt_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline Vector linspace(double a, double b, Index n) {
    Vector v(n);
    if (n == 1) {
        v[0] = a;
        return v;
    }
    for (Index i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

}  // namespace hjb
