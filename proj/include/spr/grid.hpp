#ifndef SPR_GRID_HPP
#define SPR_GRID_HPP

#include "spr/fft.hpp"
#include "spr/so3.hpp"
#include "spr/volume.hpp"

namespace spr {

// Translation in voxels; components must satisfy |t_i| < dim (shifts act
// modulo the periodic grid).
using Translation = Vec3;

enum class Interp { Trilinear, Tricubic };

// Rotation center of a cubic grid: the geometric center (n-1)/2 per axis.
inline double grid_center(int n) { return 0.5 * (n - 1); }

// Spatial rotation about the grid center: out(x) = v(R^T (x - c) + c).
// Out-of-domain samples read 0. Cubic grids only.
Volume rotate(const Volume& v, const Mat3& rot, Interp interp = Interp::Trilinear);
Volume rotate(const Volume& v, const Orientation& o, Interp interp = Interp::Trilinear);

// Frequency-domain rotation matching the spatial one (about the grid
// center), so that rotate(fft(v)) tracks fft(rotate(v)) up to interpolation
// error. Implemented as rho_{+c} . resample . rho_{-c}: the decentering
// phase removes the pi-per-bin oscillation a centered object imprints on its
// spectrum, which plain interpolation cannot represent. Cubic grids only.
SpectralVolume rotate(const SpectralVolume& s, const Mat3& rot, Interp interp = Interp::Trilinear);
SpectralVolume rotate(const SpectralVolume& s, const Orientation& o, Interp interp = Interp::Trilinear);

// Allocation-free variant for hot loops; out must have the same dims.
void rotate_into(const SpectralVolume& s, const Mat3& rot, SpectralVolume& out,
                 Interp interp = Interp::Trilinear);

// Multiplies each coefficient by e^{+i t.omega} (translation by t).
SpectralVolume apply_phase_shift(const SpectralVolume& s, const Translation& t);
void apply_phase_shift_inplace(SpectralVolume& s, const Translation& t);

// Least-squares data term of one view at the given pose:
// || y_hat - h_hat . rho_t . R_theta(f_hat) ||^2 / voxel count.
// The 1/N normalization makes the value equal to the spatial-domain squared
// residual norm (Parseval).
double energy_term(const SpectralVolume& s_view, const SpectralVolume& psf_hat,
                   const SpectralVolume& f_hat, const Pose& pose);

// Averages s with its conjugate mirror so that ifft(s) is exactly real.
void hermitian_symmetrize(SpectralVolume& s);

// Rigid transform T_t(R(v)) in one resampling pass: out(x) = v(R^T(x-t-c)+c).
Volume apply_pose(const Volume& v, const Pose& pose, Interp interp = Interp::Trilinear);

// Exact inverse of apply_pose: out(x) = v(R(x-c) + c + t).
Volume apply_pose_inverse(const Volume& v, const Pose& pose, Interp interp = Interp::Trilinear);

namespace detail {

// Per-axis factors of e^{+i t omega_k} on the signed fftfreq index set. The
// self-mirrored Nyquist bin of an even axis takes the real part cos(pi t),
// which keeps Hermitian spectra Hermitian for non-integer t and coincides
// with the unit phase for integer t.
void fill_phase_table(int n, double t, cplx* out);

bool is_identity(const Mat3& m);

// rho_{-c} . s: spectrum of the origin-recentered field, the representation
// the rotation interpolates.
SpectralVolume decenter_spectrum(const SpectralVolume& s);

// rho_{+c} . resample(g, R^T): completes the rotation of a decentered
// spectrum. Hot loops decenter once and call this per orientation.
void rotate_decentered_into(const SpectralVolume& g, const Mat3& rot, SpectralVolume& out,
                            Interp interp = Interp::Trilinear);

// Raw interpolation operator L of the frequency rotation (no phases);
// gradient code needs L and its transpose separately.
void resample_spectrum(const SpectralVolume& s, const Mat3& rot, SpectralVolume& out, Interp interp);

// Transpose (adjoint with real weights) of the trilinear resample_spectrum:
// scatters w through L^T, accumulating into out (which must be zeroed by the
// caller).
void resample_spectrum_transpose_trilinear(const SpectralVolume& w, const Mat3& rot, SpectralVolume& out);

}  // namespace detail

}  // namespace spr

#endif
