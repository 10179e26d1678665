#ifndef SPR_EVAL_HPP
#define SPR_EVAL_HPP

#include <string>
#include <vector>

#include "spr/grid.hpp"
#include "spr/so3.hpp"
#include "spr/volume.hpp"

namespace spr {

// Shell-wise spectral correlation. Radii are in cycles per voxel
// (shell index / n); cutoff_resolution is the first down-crossing of the
// cutoff, linearly interpolated between shells, or the last radius (Nyquist)
// when the curve never crosses.
struct FscCurve {
    std::vector<double> radii;
    std::vector<double> values;
    double cutoff_resolution = 0.0;
    bool crossed = false;
};

FscCurve fsc(const Volume& a, const Volume& b, double cutoff = 0.143);

// Direction-resolved cutoff resolution over a (phi1, phi2) map. Directions
// whose cone holds fewer than two populated shells are undefined (NaN).
struct CfscMap {
    std::vector<double> phi1s;       // size n1, periodic grid on [0, 2pi)
    std::vector<double> phi2s;       // size n2, endpoints 0 and pi included
    std::vector<double> resolution;  // row-major [i2 * n1 + i1], NaN = undefined

    int n_phi1() const { return static_cast<int>(phi1s.size()); }
    int n_phi2() const { return static_cast<int>(phi2s.size()); }
    double at(int i1, int i2) const { return resolution[static_cast<std::size_t>(i2) * phi1s.size() + i1]; }
    bool defined(int i1, int i2) const;
};

CfscMap conical_fsc(const Volume& a, const Volume& b, int n_phi2 = 19,
                    double cone_half_angle = 20.0 * M_PI / 180.0, double cutoff = 0.143,
                    int threads = 1);

// Mean local SSIM extended to 3D: Gaussian window sigma = 1.5, k1 = 0.01,
// k2 = 0.03, dynamic range 1 after min-max rescaling each input.
double ssim3d(const Volume& a, const Volume& b);

// Mutual information (bits) over a joint histogram with equal-mass
// (rank-quantile) binning per volume, making the objective invariant to
// monotone intensity remapping.
double mutual_information(const Volume& a, const Volume& b, int bins = 64);

struct RegistrationResult {
    Pose pose;       // gt ~ T_t(R(recon))
    Volume aligned;  // apply_pose(recon, pose)
    double mi = 0.0;
};

// Exhaustive MI search over an SO(3) grid of roughly 10 degree spacing with
// per-orientation phase-correlation translations, refined by coordinate-wise
// line search on the six pose parameters.
RegistrationResult register_to_ground_truth(const Volume& recon, const Volume& gt, int threads = 1);

void write_fsc_csv(const FscCurve& curve, const std::string& path);
void write_cfsc_csv(const CfscMap& map, const std::string& path);

}  // namespace spr

#endif
