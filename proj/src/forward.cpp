#include "spr/forward.hpp"

#include <algorithm>
#include <cmath>

#include "spr/errors.hpp"
#include "spr/fft.hpp"

namespace spr {

void SimConfig::validate() const {
    if (n_views < 1) throw ArgumentError("SimConfig: n_views must be >= 1");
    if (noise_sigma < 0.0) throw ArgumentError("SimConfig: noise_sigma must be >= 0");
    if (dol_spots < 0) throw ArgumentError("SimConfig: dol_spots must be >= 0");
    if (spot_sigma_lo > spot_sigma_hi || spot_intensity_lo > spot_intensity_hi)
        throw ArgumentError("SimConfig: ranges must be ordered lo <= hi");
    if (spot_intensity_lo < 0.0 || spot_intensity_hi > 1.0)
        throw ArgumentError("SimConfig: spot intensities must lie in [0, 1]");
    if (spot_sigma_lo < 0.0) throw ArgumentError("SimConfig: spot sigma must be >= 0");
    if (t_max_frac < 0.0) throw ArgumentError("SimConfig: t_max_frac must be >= 0");
    if (!(psf.sigma_xy > 0.0) || !(psf.sigma_z > 0.0) || !std::isfinite(psf.sigma_xy) ||
        !std::isfinite(psf.sigma_z))
        throw ArgumentError("SimConfig: PSF sigmas must be positive and finite");
}

Volume gaussian_psf(const PsfSpec& spec, Dims dims) {
    if (!(spec.sigma_xy > 0.0) || !(spec.sigma_z > 0.0) || !std::isfinite(spec.sigma_xy) ||
        !std::isfinite(spec.sigma_z))
        throw ArgumentError("gaussian_psf: sigmas must be positive and finite");
    dims.count();
    if (!dims.cubic()) throw ShapeError("gaussian_psf: dims must be cubic");

    Volume h(dims);
    const double cx = grid_center(dims.nx), cy = grid_center(dims.ny), cz = grid_center(dims.nz);
    const double inv_xy = 1.0 / (2.0 * spec.sigma_xy * spec.sigma_xy);
    const double inv_z = 1.0 / (2.0 * spec.sigma_z * spec.sigma_z);
    double sum = 0.0;
    std::size_t idx = 0;
    for (int z = 0; z < dims.nz; ++z) {
        const double dz2 = (z - cz) * (z - cz);
        for (int y = 0; y < dims.ny; ++y) {
            const double dy2 = (y - cy) * (y - cy);
            for (int x = 0; x < dims.nx; ++x, ++idx) {
                const double dx2 = (x - cx) * (x - cx);
                const double v = std::exp(-(dx2 + dy2) * inv_xy - dz2 * inv_z);
                h.data[idx] = v;
                sum += v;
            }
        }
    }
    const double inv_sum = 1.0 / sum;
    for (auto& v : h.data) v *= inv_sum;
    return h;
}

SpectralVolume psf_spectrum(const Volume& psf) {
    SpectralVolume h_hat = fft(psf);
    const double cx = grid_center(psf.dims.nx);
    const double cy = grid_center(psf.dims.ny);
    const double cz = grid_center(psf.dims.nz);
    apply_phase_shift_inplace(h_hat, Translation{-cx, -cy, -cz});
    return h_hat;
}

Volume simulate_view(const Volume& f, const Volume& psf, const Pose& pose, double noise_sigma,
                     Rng& rng) {
    if (f.dims != psf.dims) throw ShapeError("simulate_view: volume/PSF dimension mismatch");
    if (!f.dims.cubic()) throw ShapeError("simulate_view: dims must be cubic");
    if (noise_sigma < 0.0) throw ArgumentError("simulate_view: noise_sigma must be >= 0");

    Volume rotated = rotate(f, pose.orientation);
    SpectralVolume spec = fft(rotated);
    apply_phase_shift_inplace(spec, pose.translation);
    SpectralVolume h_hat = psf_spectrum(psf);
    for (std::size_t i = 0; i < spec.data.size(); ++i) spec.data[i] *= h_hat.data[i];
    Volume view = ifft(spec);

    for (auto& v : view.data) v = std::fmax(v, 0.0);
    if (noise_sigma > 0.0)
        for (auto& v : view.data) v += noise_sigma * rng.normal();
    return view;
}

Volume apply_dol_defects(const Volume& f, const SimConfig& cfg, Rng& rng) {
    Volume out = f;
    const int n = f.dims.nx;
    const double size = static_cast<double>(n);
    for (int s = 0; s < cfg.dol_spots; ++s) {
        const double px = rng.uniform(0.0, size - 1.0);
        const double py = rng.uniform(0.0, size - 1.0);
        const double pz = rng.uniform(0.0, size - 1.0);
        const double sigma = rng.uniform(cfg.spot_sigma_lo, cfg.spot_sigma_hi) * size;
        const double intensity = rng.uniform(cfg.spot_intensity_lo, cfg.spot_intensity_hi);
        if (sigma <= 0.0 || intensity == 0.0) continue;
        const double inv = 1.0 / (2.0 * sigma * sigma);
        const int reach = static_cast<int>(std::ceil(4.0 * sigma));
        const int x0 = std::max(0, static_cast<int>(std::floor(px)) - reach);
        const int x1 = std::min(f.dims.nx - 1, static_cast<int>(std::ceil(px)) + reach);
        const int y0 = std::max(0, static_cast<int>(std::floor(py)) - reach);
        const int y1 = std::min(f.dims.ny - 1, static_cast<int>(std::ceil(py)) + reach);
        const int z0 = std::max(0, static_cast<int>(std::floor(pz)) - reach);
        const int z1 = std::min(f.dims.nz - 1, static_cast<int>(std::ceil(pz)) + reach);
        for (int z = z0; z <= z1; ++z) {
            const double dz2 = (z - pz) * (z - pz);
            for (int y = y0; y <= y1; ++y) {
                const double dy2 = (y - py) * (y - py);
                for (int x = x0; x <= x1; ++x) {
                    const double dx2 = (x - px) * (x - px);
                    out.at(x, y, z) -= intensity * std::exp(-(dx2 + dy2 + dz2) * inv);
                }
            }
        }
    }
    for (auto& v : out.data) v = std::fmax(v, 0.0);
    return out;
}

Pose sample_uniform_pose(double t_max, Rng& rng) {
    // Uniform axis on the sphere: z uniform in [-1, 1], azimuth uniform.
    const double z = rng.uniform(-1.0, 1.0);
    const double az = rng.uniform(0.0, 2.0 * M_PI);
    const double phi2 = std::acos(z);
    const double psi = rng.uniform(0.0, 2.0 * M_PI);
    Pose pose;
    pose.orientation = Orientation::canonical(az, phi2, psi);
    for (int a = 0; a < 3; ++a) pose.translation[a] = rng.uniform(-t_max, t_max);
    return pose;
}

ViewSet generate_dataset(const Volume& f_gt, const SimConfig& cfg) {
    cfg.validate();
    if (!f_gt.dims.cubic()) throw ShapeError("generate_dataset: ground truth must be cubic");
    double lo = 0.0, hi = 0.0;
    for (double v : f_gt.data) {
        lo = std::fmin(lo, v);
        hi = std::fmax(hi, v);
    }
    if (lo < -1e-9 || hi > 1.0 + 1e-9)
        throw ArgumentError("generate_dataset: ground truth values must lie in [0, 1]");

    const int n = f_gt.dims.nx;
    const double t_max = cfg.t_max_frac * n;

    ViewSet set;
    set.psf = gaussian_psf(cfg.psf, f_gt.dims);
    set.views.resize(static_cast<std::size_t>(cfg.n_views));
    std::vector<Pose> poses(static_cast<std::size_t>(cfg.n_views));

    for (int l = 0; l < cfg.n_views; ++l) {
        Rng view_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(l)));
        Pose pose = sample_uniform_pose(t_max, view_rng);
        if (cfg.force_identity_poses) pose = Pose{};
        Volume rotated = rotate(f_gt, pose.orientation);
        Volume defected = apply_dol_defects(rotated, cfg, view_rng);
        // Rotation already applied; image with the translation only.
        Pose shift_only;
        shift_only.translation = pose.translation;
        set.views[static_cast<std::size_t>(l)] =
            simulate_view(defected, set.psf, shift_only, cfg.noise_sigma, view_rng);
        poses[static_cast<std::size_t>(l)] = pose;
    }
    set.true_poses = std::move(poses);
    return set;
}

}  // namespace spr
