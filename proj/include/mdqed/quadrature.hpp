#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mdqed/units.hpp"

namespace mdqed {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

namespace detail {

inline QuadratureRule compute_gauss_legendre(std::size_t n) {
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double x = std::cos(pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) p0 = 1.0;
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            p0 = p1;
            p1 = pk;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

} // namespace detail

// Gauss-Legendre rule on [-1, 1]. Rules are cached per order.
inline const QuadratureRule& gauss_legendre(std::size_t n) {
    require(n >= 1, ErrorCode::invalid_argument, "Gauss-Legendre order must be >= 1");
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<QuadratureRule>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<QuadratureRule>(detail::compute_gauss_legendre(n));
    return *slot;
}

inline QuadratureRule gauss_legendre(std::size_t n, double a, double b) {
    const auto& ref = gauss_legendre(n);
    QuadratureRule out;
    out.nodes.resize(n);
    out.weights.resize(n);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < n; ++i) {
        out.nodes[i] = mid + half * ref.nodes[i];
        out.weights[i] = half * ref.weights[i];
    }
    return out;
}

inline QuadratureRule composite_gauss_legendre(double a, double b, std::size_t panels, std::size_t order) {
    require(panels >= 1 && order >= 1, ErrorCode::invalid_argument, "composite rule needs panels and order >= 1");
    require(b > a, ErrorCode::invalid_argument, "composite rule needs b > a");
    QuadratureRule out;
    out.nodes.reserve(panels * order);
    out.weights.reserve(panels * order);
    const double h = (b - a) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const auto panel = gauss_legendre(order, a + h * p, a + h * (p + 1));
        out.nodes.insert(out.nodes.end(), panel.nodes.begin(), panel.nodes.end());
        out.weights.insert(out.weights.end(), panel.weights.begin(), panel.weights.end());
    }
    return out;
}

// Axis-aligned box [lo, hi].
struct Box {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();

    double volume() const { return (hi - lo).prod(); }
    Vec3 size() const { return hi - lo; }
    bool valid() const { return (hi.array() > lo.array()).all(); }

    bool contains(const Vec3& r, double tol = 0.0) const {
        return (r.array() >= lo.array() - tol).all() && (r.array() <= hi.array() + tol).all();
    }
    bool contains_strictly(const Vec3& r) const {
        return (r.array() > lo.array()).all() && (r.array() < hi.array()).all();
    }
    bool contains_box(const Box& b, double tol = 0.0) const {
        return (b.lo.array() >= lo.array() - tol).all() && (b.hi.array() <= hi.array() + tol).all();
    }
    bool contains_box_strictly(const Box& b) const {
        return (b.lo.array() > lo.array()).all() && (b.hi.array() < hi.array()).all();
    }
    // Interiors intersect.
    bool overlaps(const Box& b) const {
        return (lo.array() < b.hi.array()).all() && (b.lo.array() < hi.array()).all();
    }
};

// Tensor-product Gauss-Legendre grid over a box.
struct BoxGrid {
    Box box;
    std::array<QuadratureRule, 3> axes;

    BoxGrid(const Box& b, std::size_t points) : box(b) {
        for (int a = 0; a < 3; ++a) axes[a] = gauss_legendre(points, b.lo[a], b.hi[a]);
    }
    BoxGrid(const Box& b, const std::array<std::size_t, 3>& points) : box(b) {
        for (int a = 0; a < 3; ++a) axes[a] = gauss_legendre(points[a], b.lo[a], b.hi[a]);
    }

    std::size_t size() const { return axes[0].size() * axes[1].size() * axes[2].size(); }

    template <class F>
    void for_each(F&& f) const {
        for (std::size_t i = 0; i < axes[0].size(); ++i)
            for (std::size_t j = 0; j < axes[1].size(); ++j)
                for (std::size_t k = 0; k < axes[2].size(); ++k) {
                    const Vec3 r(axes[0].nodes[i], axes[1].nodes[j], axes[2].nodes[k]);
                    f(r, axes[0].weights[i] * axes[1].weights[j] * axes[2].weights[k]);
                }
    }
};

// Adaptive Gauss-Kronrod over [a, b] split at the given breakpoints. The
// tolerance is relative to the L1 norm of the whole integrand, so segments
// carrying a negligible share are not refined to their own relative precision.
template <class F>
auto integrate_adaptive(F&& f, double a, double b, std::vector<double> breaks = {}, double tol = 1e-12,
                        unsigned max_depth = 18) {
    using boost::math::quadrature::gauss_kronrod;
    std::vector<double> pts{a};
    std::sort(breaks.begin(), breaks.end());
    for (double x : breaks)
        if (x > a && x < b && x - pts.back() > 1e-14 * (1.0 + std::abs(x))) pts.push_back(x);
    pts.push_back(b);
    using R = decltype(f(a));
    std::vector<double> l1(pts.size() - 1, 0.0);
    double total_l1 = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double err = 0.0;
        gauss_kronrod<double, 31>::integrate(f, pts[i], pts[i + 1], 0, 0.0, &err, &l1[i]);
        total_l1 += l1[i];
    }
    R total{};
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double seg_tol = l1[i] > 0 ? std::min(1e-3, tol * total_l1 / l1[i]) : 1e-3;
        total += gauss_kronrod<double, 31>::integrate(f, pts[i], pts[i + 1], max_depth, seg_tol);
    }
    return total;
}

} // namespace mdqed
