#ifndef SPR_POSE_HPP
#define SPR_POSE_HPP

#include <vector>

#include "spr/rng.hpp"
#include "spr/so3.hpp"
#include "spr/volume.hpp"

namespace spr {

struct SamplerConfig {
    int m_d = 2048;
    int m_psi = 256;
    int n_d = 64;
    int n_psi = 8;
    double alpha_r = 1.2;
    double beta_d = 50.0;
    double beta_psi = 50.0;

    void validate() const;
};

// Candidate index subsets I_psi (into the psi grid) and I_d (into the axis
// grid), in draw order.
struct CandidateSets {
    std::vector<int> psi;
    std::vector<int> d;
};

// Outcome of the restricted exhaustive search over I_psi x I_d. Energies and
// likelihoods are laid out row-major over the candidate sets:
// index = pi * d_set.size() + dj. Likelihoods are exp(-(E - min E)).
struct OrientationSearchResult {
    std::vector<int> psi_set;
    std::vector<int> d_set;
    std::vector<double> energies;
    std::vector<double> likelihoods;
    int best_psi = -1;  // grid psi index
    int best_d = -1;    // grid axis index
    Pose best_pose{};
    double best_energy = 0.0;

    double energy(int pi, int dj) const { return energies[static_cast<std::size_t>(pi) * d_set.size() + dj]; }
    double likelihood(int pi, int dj) const { return likelihoods[static_cast<std::size_t>(pi) * d_set.size() + dj]; }
};

// For each candidate (i, j): rotate f_hat, multiply by psf_hat, solve the
// translation by phase correlation, and evaluate the energy. Returns the
// argmin, ties broken by lowest (j, i).
OrientationSearchResult search_orientation(const SpectralVolume& f_hat, const SpectralVolume& psf_hat,
                                           const SpectralVolume& y_hat, const So3Grid& grid,
                                           const std::vector<int>& psi_set, const std::vector<int>& d_set,
                                           int threads = 1);

// Per-view sampling distributions Q^{l,d}, Q^{l,psi} with the annealed
// uniform mixture weight alpha shared across views.
class Sampler {
public:
    Sampler(int n_views, So3Grid grid, SamplerConfig cfg);

    // i.i.d. draws from Q with deduplication; redraws until the requested
    // count is reached or the support is exhausted.
    CandidateSets draw_candidate_sets(int view, Rng& rng) const;

    // Importance-sampled marginal likelihoods, kernel smoothing onto the full
    // grids, then Q <- alpha * U + (1 - alpha) * smoothed.
    void update_distributions(int view, const OrientationSearchResult& result);

    void anneal();  // alpha <- alpha / alpha_r

    void set_alpha(double alpha);  // direct control of the mixture weight

    double alpha() const { return alpha_; }
    int n_views() const { return static_cast<int>(qd_.size()); }
    const So3Grid& grid() const { return grid_; }
    const SamplerConfig& config() const { return cfg_; }
    const std::vector<double>& q_d(int view) const { return qd_[view]; }
    const std::vector<double>& q_psi(int view) const { return qpsi_[view]; }

    // Number of updates that fell back to a uniform smoothed component
    // because every candidate likelihood vanished.
    long degenerate_fallbacks() const { return fallbacks_; }

private:
    std::vector<int> draw_set(const std::vector<double>& q, int count, Rng& rng) const;

    So3Grid grid_;
    SamplerConfig cfg_;
    std::vector<std::vector<double>> qd_, qpsi_;
    double alpha_ = 1.0;
    long fallbacks_ = 0;
};

}  // namespace spr

#endif
