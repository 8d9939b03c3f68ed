#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "mdqed/errors.hpp"

namespace mdqed {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat3c = Eigen::Matrix3cd;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx I{0.0, 1.0};

// Natural units by default: hbar = eps0 = mu0 = 1, unit charge.
// The wave speed lives on the cavity geometry.
struct UnitsConfig {
    double hbar = 1.0;
    double eps0 = 1.0;
    double mu0 = 1.0;
    double charge = 1.0;

    void validate() const {
        require(hbar > 0 && eps0 > 0 && mu0 > 0 && charge > 0, ErrorCode::invalid_argument,
                "unit constants must be positive");
    }
};

// A point in the complex frequency plane. `upper_limit` marks a real
// frequency approached from above (w + i0).
struct Frequency {
    cplx w{0.0, 0.0};
    bool upper_limit = false;

    static Frequency above_axis(double omega) { return {cplx(omega, 0.0), true}; }
    static Frequency at(cplx w) { return {w, false}; }

    double real() const { return w.real(); }
};

} // namespace mdqed
