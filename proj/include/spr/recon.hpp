#ifndef SPR_RECON_HPP
#define SPR_RECON_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "spr/forward.hpp"
#include "spr/pose.hpp"

namespace spr {

struct ReconConfig {
    std::optional<double> mu;  // unset selects 0.5 / (max |h_hat|^2 + 1e-6)
    int epochs = 20;
    int m_d = 2048;
    int m_psi = 256;
    int n_d = 64;
    int n_psi = 8;
    double alpha_r = 1.2;
    double beta_d = 50.0;
    double beta_psi = 50.0;
    std::uint64_t seed = 0;
    std::optional<Volume> init_volume;  // default: i.i.d. uniform [0,1] voxels
    bool known_poses = false;           // bypass search, use ViewSet::true_poses
    int threads = 1;
    bool early_stop = false;  // stop when the relative epoch-energy change < tol
    double early_stop_tol = 1e-4;

    void validate() const;
};

struct ReconDiagnostics {
    std::vector<double> epoch_mean_energy;
    long sampler_fallbacks = 0;
    int epochs_run = 0;
};

struct ReconResult {
    Volume volume;
    std::vector<Pose> poses;
    ReconDiagnostics diagnostics;
};

// Gradient of the Fourier-domain data term || y_hat - h_hat rho_t R(f_hat) ||^2
// with respect to f_hat (real and imaginary parts as independent coordinates).
// Uses the exact transpose of the interpolated rotation operator.
SpectralVolume gradient_term(const SpectralVolume& f_hat, const SpectralVolume& psf_hat,
                             const SpectralVolume& y_hat, const Pose& pose);

// Three-level reconstruction loop: SGD on f_hat; per visit an orientation
// search (which solves translations by phase correlation) unless running in
// known-poses mode. One epoch visits every view exactly once in shuffled
// order, then anneals the sampler and re-symmetrizes f_hat.
class Reconstructor {
public:
    Reconstructor(const ViewSet& views, ReconConfig cfg);

    void visit_view(int l);
    void run_epoch();
    int run();  // all epochs (honoring early stop); returns epochs run

    ReconResult result() const;

    const SpectralVolume& f_hat() const { return f_hat_; }
    const Sampler& sampler() const { return *sampler_; }
    const std::vector<Pose>& poses() const { return poses_; }
    const std::vector<double>& epoch_energy() const { return epoch_energy_; }
    const std::vector<int>& last_epoch_order() const { return last_order_; }
    double step_size() const { return mu_; }
    int epoch() const { return epoch_; }
    const SpectralVolume& psf_hat() const { return psf_hat_; }
    const SpectralVolume& view_hat(int l) const { return y_hats_[l]; }

    using EpochCallback = std::function<void(const Reconstructor&)>;
    void set_epoch_callback(EpochCallback cb) { epoch_callback_ = std::move(cb); }

private:
    ReconConfig cfg_;
    double mu_ = 0.0;
    Rng rng_;
    SpectralVolume f_hat_;
    SpectralVolume psf_hat_;
    std::vector<SpectralVolume> y_hats_;
    std::vector<Pose> true_poses_;
    std::vector<Pose> poses_;
    std::unique_ptr<So3Grid> grid_;
    std::unique_ptr<Sampler> sampler_;
    std::vector<double> epoch_energy_;
    std::vector<int> last_order_;
    double visit_energy_accum_ = 0.0;
    int visits_this_epoch_ = 0;
    int epoch_ = 0;
    EpochCallback epoch_callback_;
};

ReconResult reconstruct(const ViewSet& views, const ReconConfig& cfg);

}  // namespace spr

#endif
