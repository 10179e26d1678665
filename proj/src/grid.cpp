#include "spr/grid.hpp"

#include <cmath>

#include "spr/errors.hpp"

namespace spr {

namespace {

void require_cubic(const Dims& d, const char* what) {
    d.count();
    if (!d.cubic()) throw ShapeError(std::string(what) + ": grid must be cubic");
}

void require_same_dims(const Dims& a, const Dims& b, const char* what) {
    if (a != b) throw ShapeError(std::string(what) + ": dimension mismatch");
}

// Catmull-Rom weights for the four taps around a fractional offset t in [0,1).
inline void cubic_weights(double t, double w[4]) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
}

// Generic resampler over a cubic lattice with integer node range [lo, hi]
// per axis and zero outside. IndexMap converts a node coordinate to the
// array offset along one axis.
template <typename T, typename IndexMap>
struct LatticeSampler {
    const T* data;
    int n;
    int lo, hi;
    IndexMap map;

    std::size_t at(int x, int y, int z) const {
        return static_cast<std::size_t>(map(x)) +
               static_cast<std::size_t>(n) *
                   (static_cast<std::size_t>(map(y)) + static_cast<std::size_t>(n) * static_cast<std::size_t>(map(z)));
    }

    T trilinear(double px, double py, double pz) const {
        const double fx = std::floor(px), fy = std::floor(py), fz = std::floor(pz);
        const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy), z0 = static_cast<int>(fz);
        const double tx = px - fx, ty = py - fy, tz = pz - fz;
        const double wx[2] = {1.0 - tx, tx};
        const double wy[2] = {1.0 - ty, ty};
        const double wz[2] = {1.0 - tz, tz};
        T acc{};
        for (int dz = 0; dz < 2; ++dz) {
            const int z = z0 + dz;
            if (z < lo || z > hi) continue;
            for (int dy = 0; dy < 2; ++dy) {
                const int y = y0 + dy;
                if (y < lo || y > hi) continue;
                const double wzy = wz[dz] * wy[dy];
                for (int dx = 0; dx < 2; ++dx) {
                    const int x = x0 + dx;
                    if (x < lo || x > hi) continue;
                    acc += wzy * wx[dx] * data[at(x, y, z)];
                }
            }
        }
        return acc;
    }

    T tricubic(double px, double py, double pz) const {
        const double fx = std::floor(px), fy = std::floor(py), fz = std::floor(pz);
        const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy), z0 = static_cast<int>(fz);
        double wx[4], wy[4], wz[4];
        cubic_weights(px - fx, wx);
        cubic_weights(py - fy, wy);
        cubic_weights(pz - fz, wz);
        T acc{};
        for (int dz = 0; dz < 4; ++dz) {
            const int z = z0 - 1 + dz;
            if (z < lo || z > hi) continue;
            for (int dy = 0; dy < 4; ++dy) {
                const int y = y0 - 1 + dy;
                if (y < lo || y > hi) continue;
                const double wzy = wz[dz] * wy[dy];
                for (int dx = 0; dx < 4; ++dx) {
                    const int x = x0 - 1 + dx;
                    if (x < lo || x > hi) continue;
                    acc += wzy * wx[dx] * data[at(x, y, z)];
                }
            }
        }
        return acc;
    }
};

struct SpatialIndex {
    int operator()(int s) const { return s; }
};

struct SignedFreqIndex {
    int n;
    int operator()(int s) const { return s < 0 ? s + n : s; }
};

// Spatial resample at source points M(x - c) + c + offset.
template <typename T>
void resample_spatial(const T* in, T* out, int n, const Mat3& m, const Vec3& offset, Interp interp) {
    const double c = grid_center(n);
    LatticeSampler<T, SpatialIndex> sampler{in, n, 0, n - 1, {}};
    std::size_t idx = 0;
    for (int z = 0; z < n; ++z) {
        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x, ++idx) {
                const Vec3 rel{x - c, y - c, z - c};
                const Vec3 p = m.apply(rel);
                const double px = p[0] + c + offset[0];
                const double py = p[1] + c + offset[1];
                const double pz = p[2] + c + offset[2];
                out[idx] = (interp == Interp::Trilinear) ? sampler.trilinear(px, py, pz)
                                                         : sampler.tricubic(px, py, pz);
            }
        }
    }
}

}  // namespace

Volume rotate(const Volume& v, const Mat3& rot, Interp interp) {
    require_cubic(v.dims, "rotate");
    Volume out(v.dims);
    resample_spatial(v.data.data(), out.data.data(), v.dims.nx, rot.transposed(), Vec3{0, 0, 0}, interp);
    return out;
}

Volume rotate(const Volume& v, const Orientation& o, Interp interp) { return rotate(v, o.matrix(), interp); }

namespace detail {

void resample_spectrum(const SpectralVolume& s, const Mat3& rot, SpectralVolume& out, Interp interp) {
    require_cubic(s.dims, "rotate");
    require_same_dims(s.dims, out.dims, "rotate_into");
    const int n = s.dims.nx;
    const int klo = -(n / 2), khi = (n - 1) / 2;
    const Mat3 m = rot.transposed();
    LatticeSampler<cplx, SignedFreqIndex> sampler{s.data.data(), n, klo, khi, {n}};

    if (interp == Interp::Tricubic) {
        std::size_t idx = 0;
        for (int z = 0; z < n; ++z) {
            const double kz = freq_index(z, n);
            for (int y = 0; y < n; ++y) {
                const double ky = freq_index(y, n);
                for (int x = 0; x < n; ++x, ++idx) {
                    const double kx = freq_index(x, n);
                    out.data[idx] = sampler.tricubic(m.m[0] * kx + m.m[1] * ky + m.m[2] * kz,
                                                     m.m[3] * kx + m.m[4] * ky + m.m[5] * kz,
                                                     m.m[6] * kx + m.m[7] * ky + m.m[8] * kz);
                }
            }
        }
        return;
    }

    const cplx* in = s.data.data();
    const std::size_t sn = static_cast<std::size_t>(n);
    std::size_t idx = 0;
    for (int z = 0; z < n; ++z) {
        const double kz = freq_index(z, n);
        for (int y = 0; y < n; ++y) {
            const double ky = freq_index(y, n);
            // q is affine in the signed x-frequency; the signed index is x on
            // [0, (n+1)/2) and x - n beyond, so advance incrementally per
            // segment.
            const double bx = m.m[1] * ky + m.m[2] * kz;
            const double by = m.m[4] * ky + m.m[5] * kz;
            const double bz = m.m[7] * ky + m.m[8] * kz;
            for (int x = 0; x < n; ++x, ++idx) {
                const double kx = freq_index(x, n);
                const double qx = m.m[0] * kx + bx;
                const double qy = m.m[3] * kx + by;
                const double qz = m.m[6] * kx + bz;
                const double fx = std::floor(qx), fy = std::floor(qy), fz = std::floor(qz);
                const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy), z0 = static_cast<int>(fz);
                // Contiguous-memory path: valid nodes whose +1 neighbor does
                // not cross the negative-to-zero wrap of the signed layout.
                if (x0 >= klo && x0 + 1 <= khi && x0 != -1 && y0 >= klo && y0 + 1 <= khi &&
                    y0 != -1 && z0 >= klo && z0 + 1 <= khi && z0 != -1) {
                    const double tx = qx - fx, ty = qy - fy, tz = qz - fz;
                    const std::size_t ix = static_cast<std::size_t>(x0 < 0 ? x0 + n : x0);
                    const std::size_t iy = static_cast<std::size_t>(y0 < 0 ? y0 + n : y0);
                    const std::size_t iz = static_cast<std::size_t>(z0 < 0 ? z0 + n : z0);
                    // neighbor offsets never wrap here: x0+1 <= khi < n
                    const cplx* p00 = in + ix + sn * (iy + sn * iz);
                    const cplx* p01 = p00 + sn;
                    const cplx* p10 = p00 + sn * sn;
                    const cplx* p11 = p10 + sn;
                    const cplx c00 = p00[0] + tx * (p00[1] - p00[0]);
                    const cplx c01 = p01[0] + tx * (p01[1] - p01[0]);
                    const cplx c10 = p10[0] + tx * (p10[1] - p10[0]);
                    const cplx c11 = p11[0] + tx * (p11[1] - p11[0]);
                    const cplx c0 = c00 + ty * (c01 - c00);
                    const cplx c1 = c10 + ty * (c11 - c10);
                    out.data[idx] = c0 + tz * (c1 - c0);
                } else {
                    out.data[idx] = sampler.trilinear(qx, qy, qz);
                }
            }
        }
    }
}

void resample_spectrum_transpose_trilinear(const SpectralVolume& w, const Mat3& rot, SpectralVolume& out) {
    require_cubic(w.dims, "resample transpose");
    require_same_dims(w.dims, out.dims, "resample transpose");
    const int n = w.dims.nx;
    const int klo = -(n / 2), khi = (n - 1) / 2;
    const Mat3 m = rot.transposed();
    const SignedFreqIndex map{n};
    std::size_t idx = 0;
    for (int z = 0; z < n; ++z) {
        const double kz = freq_index(z, n);
        for (int y = 0; y < n; ++y) {
            const double ky = freq_index(y, n);
            for (int x = 0; x < n; ++x, ++idx) {
                const cplx value = w.data[idx];
                if (value == cplx{0.0, 0.0}) continue;
                const double kx = freq_index(x, n);
                const double qx = m.m[0] * kx + m.m[1] * ky + m.m[2] * kz;
                const double qy = m.m[3] * kx + m.m[4] * ky + m.m[5] * kz;
                const double qz = m.m[6] * kx + m.m[7] * ky + m.m[8] * kz;
                const double fx = std::floor(qx), fy = std::floor(qy), fz = std::floor(qz);
                const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy), z0 = static_cast<int>(fz);
                const double tx = qx - fx, ty = qy - fy, tz = qz - fz;
                const double wx[2] = {1.0 - tx, tx};
                const double wy[2] = {1.0 - ty, ty};
                const double wz[2] = {1.0 - tz, tz};
                for (int dz = 0; dz < 2; ++dz) {
                    const int zz = z0 + dz;
                    if (zz < klo || zz > khi) continue;
                    for (int dy = 0; dy < 2; ++dy) {
                        const int yy = y0 + dy;
                        if (yy < klo || yy > khi) continue;
                        const double wzy = wz[dz] * wy[dy];
                        for (int dx = 0; dx < 2; ++dx) {
                            const int xx = x0 + dx;
                            if (xx < klo || xx > khi) continue;
                            const std::size_t dst =
                                static_cast<std::size_t>(map(xx)) +
                                static_cast<std::size_t>(n) * (static_cast<std::size_t>(map(yy)) +
                                                               static_cast<std::size_t>(n) *
                                                                   static_cast<std::size_t>(map(zz)));
                            out.data[dst] += wzy * wx[dx] * value;
                        }
                    }
                }
            }
        }
    }
}

}  // namespace detail

namespace detail {

bool is_identity(const Mat3& m) {
    return m.m[0] == 1.0 && m.m[1] == 0.0 && m.m[2] == 0.0 && m.m[3] == 0.0 && m.m[4] == 1.0 &&
           m.m[5] == 0.0 && m.m[6] == 0.0 && m.m[7] == 0.0 && m.m[8] == 1.0;
}

SpectralVolume decenter_spectrum(const SpectralVolume& s) {
    SpectralVolume g = s;
    const double c = grid_center(s.dims.nx);
    apply_phase_shift_inplace(g, Translation{-c, -c, -c});
    return g;
}

void rotate_decentered_into(const SpectralVolume& g, const Mat3& rot, SpectralVolume& out, Interp interp) {
    resample_spectrum(g, rot, out, interp);
    const double c = grid_center(g.dims.nx);
    apply_phase_shift_inplace(out, Translation{c, c, c});
}

}  // namespace detail

void rotate_into(const SpectralVolume& s, const Mat3& rot, SpectralVolume& out, Interp interp) {
    if (detail::is_identity(rot)) {
        out = s;  // keeps the identity exact (no phase round trip)
        return;
    }
    const SpectralVolume g = detail::decenter_spectrum(s);
    detail::rotate_decentered_into(g, rot, out, interp);
}

SpectralVolume rotate(const SpectralVolume& s, const Mat3& rot, Interp interp) {
    require_cubic(s.dims, "rotate");
    SpectralVolume out(s.dims);
    rotate_into(s, rot, out, interp);
    return out;
}

SpectralVolume rotate(const SpectralVolume& s, const Orientation& o, Interp interp) {
    return rotate(s, o.matrix(), interp);
}

namespace detail {

void fill_phase_table(int n, double t, cplx* out) {
    for (int i = 0; i < n; ++i) {
        const double w = 2.0 * M_PI * freq_index(i, n) / n;
        out[i] = std::polar(1.0, t * w);
    }
    // Self-mirrored Nyquist bin of an even axis must stay real.
    if (n % 2 == 0) out[n / 2] = cplx{std::cos(M_PI * t), 0.0};
}

}  // namespace detail

namespace {

void phase_tables(const Dims& d, const Translation& t, avector<cplx>& px, avector<cplx>& py,
                  avector<cplx>& pz) {
    const int ns[3] = {d.nx, d.ny, d.nz};
    avector<cplx>* tabs[3] = {&px, &py, &pz};
    for (int a = 0; a < 3; ++a) {
        const int n = ns[a];
        if (std::fabs(t[a]) >= static_cast<double>(n))
            throw ArgumentError("phase shift: |t| must be < grid dim");
        tabs[a]->resize(static_cast<std::size_t>(n));
        detail::fill_phase_table(n, t[a], tabs[a]->data());
    }
}

}  // namespace

void apply_phase_shift_inplace(SpectralVolume& s, const Translation& t) {
    s.dims.count();
    avector<cplx> px, py, pz;
    phase_tables(s.dims, t, px, py, pz);
    std::size_t idx = 0;
    for (int z = 0; z < s.dims.nz; ++z) {
        for (int y = 0; y < s.dims.ny; ++y) {
            const cplx pzy = pz[z] * py[y];
            for (int x = 0; x < s.dims.nx; ++x, ++idx) s.data[idx] *= pzy * px[x];
        }
    }
}

SpectralVolume apply_phase_shift(const SpectralVolume& s, const Translation& t) {
    SpectralVolume out = s;
    apply_phase_shift_inplace(out, t);
    return out;
}

double energy_term(const SpectralVolume& s_view, const SpectralVolume& psf_hat,
                   const SpectralVolume& f_hat, const Pose& pose) {
    require_cubic(s_view.dims, "energy_term");
    require_same_dims(s_view.dims, psf_hat.dims, "energy_term");
    require_same_dims(s_view.dims, f_hat.dims, "energy_term");
    SpectralVolume rotated = rotate(f_hat, pose.orientation);
    avector<cplx> px, py, pz;
    phase_tables(s_view.dims, pose.translation, px, py, pz);
    double acc = 0.0;
    std::size_t idx = 0;
    for (int z = 0; z < s_view.dims.nz; ++z) {
        for (int y = 0; y < s_view.dims.ny; ++y) {
            const cplx pzy = pz[z] * py[y];
            for (int x = 0; x < s_view.dims.nx; ++x, ++idx) {
                const cplx model = psf_hat.data[idx] * (pzy * px[x]) * rotated.data[idx];
                acc += std::norm(s_view.data[idx] - model);
            }
        }
    }
    return acc / static_cast<double>(s_view.dims.count());
}

void hermitian_symmetrize(SpectralVolume& s) {
    const int nx = s.dims.nx, ny = s.dims.ny, nz = s.dims.nz;
    for (int z = 0; z < nz; ++z) {
        const int mz = (nz - z) % nz;
        for (int y = 0; y < ny; ++y) {
            const int my = (ny - y) % ny;
            for (int x = 0; x < nx; ++x) {
                const int mx = (nx - x) % nx;
                const std::size_t i = s.index(x, y, z);
                const std::size_t j = s.index(mx, my, mz);
                if (i > j) continue;
                if (i == j) {
                    s.data[i] = cplx{s.data[i].real(), 0.0};
                } else {
                    const cplx avg = 0.5 * (s.data[i] + std::conj(s.data[j]));
                    s.data[i] = avg;
                    s.data[j] = std::conj(avg);
                }
            }
        }
    }
}

Volume apply_pose(const Volume& v, const Pose& pose, Interp interp) {
    require_cubic(v.dims, "apply_pose");
    // out(x) = v(R^T(x - t - c) + c): fold the translation into the sample
    // point of a single resampling pass.
    const Mat3 m = pose.orientation.matrix().transposed();
    const Vec3 shift = m.apply(-pose.translation);  // M(x - c) + M(-t) + c
    Volume out(v.dims);
    resample_spatial(v.data.data(), out.data.data(), v.dims.nx, m, shift, interp);
    return out;
}

Volume apply_pose_inverse(const Volume& v, const Pose& pose, Interp interp) {
    require_cubic(v.dims, "apply_pose_inverse");
    // out(x) = v(R(x - c) + c + t)
    const Mat3 m = pose.orientation.matrix();
    Volume out(v.dims);
    resample_spatial(v.data.data(), out.data.data(), v.dims.nx, m, pose.translation, interp);
    return out;
}

}  // namespace spr
