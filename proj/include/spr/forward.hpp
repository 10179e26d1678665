#ifndef SPR_FORWARD_HPP
#define SPR_FORWARD_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "spr/grid.hpp"
#include "spr/rng.hpp"
#include "spr/so3.hpp"
#include "spr/volume.hpp"

namespace spr {

// Anisotropic Gaussian PSF widths in voxels (xy lateral, z axial).
struct PsfSpec {
    double sigma_xy = 1.5;
    double sigma_z = 5.0;
};

struct SimConfig {
    int n_views = 20;
    double noise_sigma = 0.2;
    int dol_spots = 120;
    double spot_sigma_lo = 0.02;  // fraction of grid size
    double spot_sigma_hi = 0.05;
    double spot_intensity_lo = 0.0;
    double spot_intensity_hi = 1.0;
    double t_max_frac = 0.1;  // translation range as fraction of grid size
    std::uint64_t seed = 0;
    PsfSpec psf{};
    bool force_identity_poses = false;

    void validate() const;
};

struct ViewSet {
    std::vector<Volume> views;
    Volume psf;
    std::optional<std::vector<Pose>> true_poses;
};

// Centered anisotropic Gaussian, normalized to unit sum. Cubic dims.
Volume gaussian_psf(const PsfSpec& spec, Dims dims);

// Spectrum of the PSF re-anchored at the origin (fft(h) . rho_{-c}), the
// transfer function used by both simulation and reconstruction. For a PSF
// symmetric about the grid center this is real.
SpectralVolume psf_spectrum(const Volume& psf);

// One view of f at the given pose: rotate (spatial), then translate and
// convolve spectrally, clamp to >= 0, then add i.i.d. Gaussian noise.
Volume simulate_view(const Volume& f, const Volume& psf, const Pose& pose, double noise_sigma,
                     Rng& rng);

// Subtracts cfg.dol_spots isotropic Gaussian bumps at uniform random
// locations; result clamped to >= 0.
Volume apply_dol_defects(const Volume& f, const SimConfig& cfg, Rng& rng);

// Uniform pose: axis uniform on the sphere, psi uniform in [0, 2pi),
// translation uniform in [-t_max, t_max]^3.
Pose sample_uniform_pose(double t_max, Rng& rng);

// Full synthetic dataset: per-view pose sampling, per-view DOL defects on the
// rotated particle, then imaging. All randomness derives from cfg.seed via
// per-view sub-generators, so results are independent of evaluation order.
ViewSet generate_dataset(const Volume& f_gt, const SimConfig& cfg);

}  // namespace spr

#endif
