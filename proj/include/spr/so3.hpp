#ifndef SPR_SO3_HPP
#define SPR_SO3_HPP

#include <utility>
#include <vector>

#include "spr/geometry.hpp"

namespace spr {

// Axis-angle rotation: unit axis d(phi1, phi2) in spherical coordinates
// (phi1 azimuth in [0, 2pi), phi2 inclination in [0, pi)) and in-axis angle
// psi in [0, 2pi).
struct Orientation {
    double phi1 = 0.0;
    double phi2 = 0.0;
    double psi = 0.0;

    Vec3 axis() const;
    Mat3 matrix() const;  // Rodrigues rotation by psi about axis()

    // Wraps arbitrary angles into the canonical ranges, flipping the axis
    // through the antipode when phi2 leaves [0, pi).
    static Orientation canonical(double phi1, double phi2, double psi);
};

struct Pose {
    Orientation orientation{};
    Vec3 translation{0.0, 0.0, 0.0};
};

// Rodrigues rotation matrix about a unit axis.
Mat3 rotation_about_axis(const Vec3& axis, double psi);

// Axis and angle of a rotation matrix, psi in [0, pi]. Near psi = 0 the axis
// is arbitrary (returns +z).
std::pair<Vec3, double> axis_angle_of(const Mat3& r);

// Canonical Orientation realizing the given rotation matrix.
Orientation orientation_of(const Mat3& r);

// Fibonacci-lattice axes: j-th axis from phi1 = 2*pi*j/G (mod 2pi),
// phi2 = acos(1 - (2j+1)/m_d), G the golden ratio.
std::vector<Vec3> fibonacci_axes(int m_d);

double kernel_psi(int i, int k, int m_psi, double beta_psi);
double log_kernel_psi(int i, int k, int m_psi, double beta_psi);
double kernel_d(const Vec3& dj, const Vec3& dk, double beta_d);
double log_kernel_d(const Vec3& dj, const Vec3& dk, double beta_d);

// Discretization of SO(3): m_d Fibonacci axes x m_psi uniform in-axis angles.
// Index convention: i indexes psi, j indexes the axis.
struct So3Grid {
    int m_d = 0;
    int m_psi = 0;
    std::vector<Vec3> axes;
    std::vector<double> phi1s, phi2s;  // per axis
    std::vector<double> psis;          // psis[i] = 2*pi*i/m_psi

    So3Grid() = default;
    So3Grid(int m_d_, int m_psi_);

    Orientation orientation(int psi_index, int axis_index) const;
};

}  // namespace spr

#endif
