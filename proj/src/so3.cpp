#include "spr/so3.hpp"

#include <cmath>

#include "spr/errors.hpp"

namespace spr {

namespace {

double wrap_2pi(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a < 0.0) a += 2.0 * M_PI;
    return a;
}

}  // namespace

Vec3 Orientation::axis() const {
    const double s2 = std::sin(phi2);
    return {std::cos(phi1) * s2, std::sin(phi1) * s2, std::cos(phi2)};
}

Mat3 Orientation::matrix() const { return rotation_about_axis(axis(), psi); }

Orientation Orientation::canonical(double phi1, double phi2, double psi) {
    // Reflect phi2 into [0, pi); each reflection moves the azimuth by pi.
    phi2 = std::fmod(phi2, 2.0 * M_PI);
    if (phi2 < 0.0) phi2 += 2.0 * M_PI;
    if (phi2 >= M_PI) {
        phi2 = 2.0 * M_PI - phi2;
        phi1 += M_PI;
    }
    return Orientation{wrap_2pi(phi1), phi2, wrap_2pi(psi)};
}

Mat3 rotation_about_axis(const Vec3& axis, double psi) {
    const double c = std::cos(psi), s = std::sin(psi), t = 1.0 - c;
    const double x = axis[0], y = axis[1], z = axis[2];
    Mat3 r;
    r.m = {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
           t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
           t * x * z - s * y, t * y * z + s * x, t * z * z + c};
    return r;
}

std::pair<Vec3, double> axis_angle_of(const Mat3& r) {
    const double cos_psi = std::fmin(1.0, std::fmax(-1.0, 0.5 * (r.trace() - 1.0)));
    const double psi = std::acos(cos_psi);
    const Vec3 skew{r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)};
    const double skew_norm = norm(skew);  // 2 sin(psi)
    if (skew_norm > 1e-9) return {(1.0 / skew_norm) * skew, psi};
    if (cos_psi > 0.0) return {Vec3{0.0, 0.0, 1.0}, 0.0};  // identity: axis arbitrary
    // psi = pi: axis from the symmetric part, signs from the off-diagonals.
    Vec3 a{std::sqrt(std::fmax(0.0, 0.5 * (r(0, 0) + 1.0))),
           std::sqrt(std::fmax(0.0, 0.5 * (r(1, 1) + 1.0))),
           std::sqrt(std::fmax(0.0, 0.5 * (r(2, 2) + 1.0)))};
    int imax = 0;
    for (int i = 1; i < 3; ++i)
        if (a[i] > a[imax]) imax = i;
    if (imax == 0) {
        a[1] = std::copysign(a[1], r(0, 1));
        a[2] = std::copysign(a[2], r(0, 2));
    } else if (imax == 1) {
        a[0] = std::copysign(a[0], r(0, 1));
        a[2] = std::copysign(a[2], r(1, 2));
    } else {
        a[0] = std::copysign(a[0], r(0, 2));
        a[1] = std::copysign(a[1], r(1, 2));
    }
    const double n = norm(a);
    return {n > 0.0 ? (1.0 / n) * a : Vec3{0.0, 0.0, 1.0}, M_PI};
}

Orientation orientation_of(const Mat3& r) {
    auto [axis, psi] = axis_angle_of(r);
    double phi2 = std::acos(std::fmin(1.0, std::fmax(-1.0, axis[2])));
    double phi1 = std::atan2(axis[1], axis[0]);
    if (phi2 >= M_PI) {  // axis = -z: flip to the antipodal representation
        return Orientation::canonical(0.0, 0.0, -psi);
    }
    return Orientation::canonical(phi1, phi2, psi);
}

std::vector<Vec3> fibonacci_axes(int m_d) {
    if (m_d < 1) throw ArgumentError("fibonacci_axes: m_d must be >= 1");
    const double golden = 0.5 * (1.0 + std::sqrt(5.0));
    std::vector<Vec3> axes;
    axes.reserve(static_cast<std::size_t>(m_d));
    for (int j = 0; j < m_d; ++j) {
        const double phi1 = wrap_2pi(2.0 * M_PI * j / golden);
        const double phi2 = std::acos(1.0 - (2.0 * j + 1.0) / m_d);
        const double s2 = std::sin(phi2);
        axes.push_back({std::cos(phi1) * s2, std::sin(phi1) * s2, std::cos(phi2)});
    }
    return axes;
}

double log_kernel_psi(int i, int k, int m_psi, double beta_psi) {
    if (beta_psi < 0.0) throw ArgumentError("kernel_psi: beta must be >= 0");
    const double di = 2.0 * M_PI * i / m_psi;
    const double dk = 2.0 * M_PI * k / m_psi;
    return beta_psi * std::cos(di - dk);
}

double kernel_psi(int i, int k, int m_psi, double beta_psi) {
    return std::exp(log_kernel_psi(i, k, m_psi, beta_psi));
}

double log_kernel_d(const Vec3& dj, const Vec3& dk, double beta_d) {
    if (beta_d < 0.0) throw ArgumentError("kernel_d: beta must be >= 0");
    return beta_d * dot(dj, dk);
}

double kernel_d(const Vec3& dj, const Vec3& dk, double beta_d) {
    return std::exp(log_kernel_d(dj, dk, beta_d));
}

So3Grid::So3Grid(int m_d_, int m_psi_) : m_d(m_d_), m_psi(m_psi_) {
    if (m_d < 1 || m_psi < 1) throw ArgumentError("So3Grid: sample counts must be >= 1");
    axes = fibonacci_axes(m_d);
    const double golden = 0.5 * (1.0 + std::sqrt(5.0));
    phi1s.resize(axes.size());
    phi2s.resize(axes.size());
    for (int j = 0; j < m_d; ++j) {
        phi1s[j] = wrap_2pi(2.0 * M_PI * j / golden);
        phi2s[j] = std::acos(1.0 - (2.0 * j + 1.0) / m_d);
    }
    psis.resize(static_cast<std::size_t>(m_psi));
    for (int i = 0; i < m_psi; ++i) psis[i] = 2.0 * M_PI * i / m_psi;
}

Orientation So3Grid::orientation(int psi_index, int axis_index) const {
    return Orientation{phi1s[axis_index], phi2s[axis_index], psis[psi_index]};
}

}  // namespace spr
