#ifndef SPR_TEST_HELPERS_HPP
#define SPR_TEST_HELPERS_HPP

#include <cmath>
#include <vector>

#include "spr/grid.hpp"
#include "spr/rng.hpp"
#include "spr/so3.hpp"
#include "spr/volume.hpp"

namespace spr::test {

inline Volume random_volume(int n, Rng& rng, double lo = 0.0, double hi = 1.0) {
    Volume v(Dims{n, n, n});
    for (auto& x : v.data) x = rng.uniform(lo, hi);
    return v;
}

inline SpectralVolume random_spectrum(int n, Rng& rng, double scale = 1.0) {
    SpectralVolume s(Dims{n, n, n});
    for (auto& z : s.data) z = cplx{rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
    return s;
}

// Smooth asymmetric sum of Gaussian blobs within the centered half-radius
// ball, normalized to [0, 1].
inline Volume blob_phantom(int n, std::uint64_t seed, int n_blobs = 10, double sig_lo = 0.05,
                           double sig_hi = 0.11) {
    Rng rng(seed);
    Volume v(Dims{n, n, n});
    const double c = 0.5 * (n - 1);
    struct Blob {
        double x, y, z, sigma, amp;
    };
    std::vector<Blob> blobs;
    for (int b = 0; b < n_blobs; ++b) {
        const double r = 0.30 * n * std::cbrt(rng.uniform01());
        const double zc = rng.uniform(-1.0, 1.0);
        const double az = rng.uniform(0.0, 2.0 * M_PI);
        const double s = std::sqrt(1.0 - zc * zc);
        blobs.push_back({c + r * s * std::cos(az), c + r * s * std::sin(az), c + r * zc,
                         rng.uniform(sig_lo, sig_hi) * n, rng.uniform(0.4, 1.0)});
    }
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                double acc = 0.0;
                for (const auto& b : blobs) {
                    const double d2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y) + (z - b.z) * (z - b.z);
                    acc += b.amp * std::exp(-0.5 * d2 / (b.sigma * b.sigma));
                }
                v.at(x, y, z) = acc;
            }
    double hi = 0.0;
    for (double x : v.data) hi = std::fmax(hi, x);
    if (hi > 0.0)
        for (auto& x : v.data) x /= hi;
    return v;
}

inline double max_abs_diff(const Volume& a, const Volume& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) m = std::fmax(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

inline double max_abs_diff(const SpectralVolume& a, const SpectralVolume& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) m = std::fmax(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

inline double rel_l2(const Volume& a, const Volume& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        num += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
        den += b.data[i] * b.data[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline Volume circshift(const Volume& v, int tx, int ty, int tz) {
    Volume out(v.dims);
    const int nx = v.dims.nx, ny = v.dims.ny, nz = v.dims.nz;
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const int sx = ((x - tx) % nx + nx) % nx;
                const int sy = ((y - ty) % ny + ny) % ny;
                const int sz = ((z - tz) % nz + nz) % nz;
                out.at(x, y, z) = v.at(sx, sy, sz);
            }
    return out;
}

// View spectrum generated through the estimator's own forward operator
// h_hat . rho_t . R(f_hat); exact self-match data for search tests.
inline SpectralVolume spectral_view(const SpectralVolume& f_hat, const SpectralVolume& psf_hat,
                                    const Pose& pose) {
    SpectralVolume y = rotate(f_hat, pose.orientation);
    apply_phase_shift_inplace(y, pose.translation);
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] *= psf_hat.data[i];
    return y;
}

}  // namespace spr::test

#endif
