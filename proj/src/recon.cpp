#include "spr/recon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spr/errors.hpp"
#include "spr/fft.hpp"
#include "spr/grid.hpp"

namespace spr {

void ReconConfig::validate() const {
    if (mu && (*mu < 0.0 || !std::isfinite(*mu)))
        throw ArgumentError("ReconConfig: mu must be finite and >= 0");
    if (epochs < 0) throw ArgumentError("ReconConfig: epochs must be >= 0");
    if (threads < 1) throw ArgumentError("ReconConfig: threads must be >= 1");
    SamplerConfig sampler{m_d, m_psi, n_d, n_psi, alpha_r, beta_d, beta_psi};
    sampler.validate();
}

SpectralVolume gradient_term(const SpectralVolume& f_hat, const SpectralVolume& psf_hat,
                             const SpectralVolume& y_hat, const Pose& pose) {
    if (f_hat.dims != psf_hat.dims || f_hat.dims != y_hat.dims)
        throw ShapeError("gradient_term: dimension mismatch");
    if (!f_hat.dims.cubic()) throw ShapeError("gradient_term: grids must be cubic");

    const Dims dims = f_hat.dims;
    const int n = dims.nx;
    const std::size_t count = dims.count();
    const Mat3 rot = pose.orientation.matrix();
    const double c = grid_center(n);

    // Translation phase rho_t (per-axis tables, shared by both branches).
    avector<cplx> tx(static_cast<std::size_t>(n)), ty(static_cast<std::size_t>(n)),
        tz(static_cast<std::size_t>(n));
    detail::fill_phase_table(n, pose.translation[0], tx.data());
    detail::fill_phase_table(n, pose.translation[1], ty.data());
    detail::fill_phase_table(n, pose.translation[2], tz.data());

    if (detail::is_identity(rot)) {
        // Forward collapses to the diagonal h_hat rho_t.
        SpectralVolume grad(dims);
        std::size_t idx = 0;
        for (int z = 0; z < n; ++z) {
            for (int y = 0; y < n; ++y) {
                const cplx pzy = tz[z] * ty[y];
                for (int x = 0; x < n; ++x, ++idx) {
                    const cplx diag = psf_hat.data[idx] * pzy * tx[x];
                    grad.data[idx] = 2.0 * std::conj(diag) * (diag * f_hat.data[idx] - y_hat.data[idx]);
                }
            }
        }
        return grad;
    }

    // Forward path: diag(h_hat rho_t rho_{+c}) . L . diag(rho_{-c}), with L
    // the trilinear resampling. The gradient is its exact adjoint.
    avector<cplx> dec(static_cast<std::size_t>(n)), rec(static_cast<std::size_t>(n));
    detail::fill_phase_table(n, -c, dec.data());
    detail::fill_phase_table(n, c, rec.data());

    SpectralVolume g(dims);
    std::size_t idx = 0;
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y) {
            const cplx dzy = dec[z] * dec[y];
            for (int x = 0; x < n; ++x, ++idx) g.data[idx] = dzy * dec[x] * f_hat.data[idx];
        }

    SpectralVolume lg(dims);
    detail::resample_spectrum(g, rot, lg, Interp::Trilinear);

    // w = conj(diag) . (diag . L g - y_hat)
    SpectralVolume weighted(dims);
    idx = 0;
    for (int z = 0; z < n; ++z) {
        for (int y = 0; y < n; ++y) {
            const cplx pzy = tz[z] * rec[z] * ty[y] * rec[y];
            for (int x = 0; x < n; ++x, ++idx) {
                const cplx diag = psf_hat.data[idx] * pzy * tx[x] * rec[x];
                const cplx residual = diag * lg.data[idx] - y_hat.data[idx];
                weighted.data[idx] = std::conj(diag) * residual;
            }
        }
    }

    SpectralVolume scattered(dims);
    detail::resample_spectrum_transpose_trilinear(weighted, rot, scattered);

    // Left factor conj(rho_{-c}) and the gradient scale.
    SpectralVolume grad(dims);
    idx = 0;
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y) {
            const cplx dzy = std::conj(dec[z] * dec[y]);
            for (int x = 0; x < n; ++x, ++idx)
                grad.data[idx] = 2.0 * dzy * std::conj(dec[x]) * scattered.data[idx];
        }
    return grad;
}

Reconstructor::Reconstructor(const ViewSet& views, ReconConfig cfg)
    : cfg_(std::move(cfg)), rng_(cfg_.seed) {
    cfg_.validate();
    if (views.views.empty()) throw ArgumentError("reconstruct: need at least one view");
    const Dims dims = views.views.front().dims;
    if (!dims.cubic()) throw ShapeError("reconstruct: views must be cubic");
    for (const auto& v : views.views)
        if (v.dims != dims) throw ShapeError("reconstruct: views must share dims");
    if (views.psf.dims != dims) throw ShapeError("reconstruct: PSF dims must match views");
    if (cfg_.known_poses) {
        if (!views.true_poses || views.true_poses->size() != views.views.size())
            throw ArgumentError("reconstruct: known-poses mode requires poses for every view");
        true_poses_ = *views.true_poses;
    }

    psf_hat_ = psf_spectrum(views.psf);
    y_hats_.reserve(views.views.size());
    for (const auto& v : views.views) y_hats_.push_back(fft(v));

    double h2_max = 0.0;
    for (const auto& z : psf_hat_.data) h2_max = std::fmax(h2_max, std::norm(z));
    mu_ = cfg_.mu ? *cfg_.mu : 0.5 / (h2_max + 1e-6);

    Volume init;
    if (cfg_.init_volume) {
        if (cfg_.init_volume->dims != dims) throw ShapeError("reconstruct: init volume dims mismatch");
        init = *cfg_.init_volume;
    } else {
        init = Volume(dims);
        for (auto& v : init.data) v = rng_.uniform01();
    }
    f_hat_ = fft(init);

    poses_.assign(views.views.size(), Pose{});
    if (cfg_.known_poses) {
        poses_ = true_poses_;
    } else {
        grid_ = std::make_unique<So3Grid>(cfg_.m_d, cfg_.m_psi);
        SamplerConfig sc{cfg_.m_d, cfg_.m_psi, cfg_.n_d, cfg_.n_psi, cfg_.alpha_r, cfg_.beta_d,
                         cfg_.beta_psi};
        sampler_ = std::make_unique<Sampler>(static_cast<int>(views.views.size()), *grid_, sc);
    }
}

void Reconstructor::visit_view(int l) {
    const auto& y_hat = y_hats_[static_cast<std::size_t>(l)];
    Pose pose;
    double energy;
    if (cfg_.known_poses) {
        pose = true_poses_[static_cast<std::size_t>(l)];
        energy = energy_term(y_hat, psf_hat_, f_hat_, pose);
    } else {
        const CandidateSets sets = sampler_->draw_candidate_sets(l, rng_);
        const OrientationSearchResult result =
            search_orientation(f_hat_, psf_hat_, y_hat, sampler_->grid(), sets.psi, sets.d, cfg_.threads);
        sampler_->update_distributions(l, result);
        pose = result.best_pose;
        energy = result.best_energy;
    }
    if (mu_ != 0.0) {
        const SpectralVolume grad = gradient_term(f_hat_, psf_hat_, y_hat, pose);
        for (std::size_t i = 0; i < f_hat_.data.size(); ++i) f_hat_.data[i] -= mu_ * grad.data[i];
    }
    poses_[static_cast<std::size_t>(l)] = pose;
    visit_energy_accum_ += energy;
    ++visits_this_epoch_;
}

void Reconstructor::run_epoch() {
    const int n_views = static_cast<int>(y_hats_.size());
    last_order_.resize(static_cast<std::size_t>(n_views));
    std::iota(last_order_.begin(), last_order_.end(), 0);
    shuffle(last_order_, rng_);

    visit_energy_accum_ = 0.0;
    visits_this_epoch_ = 0;
    for (int l : last_order_) visit_view(l);
    epoch_energy_.push_back(visit_energy_accum_ / std::max(1, visits_this_epoch_));

    if (sampler_) sampler_->anneal();
    hermitian_symmetrize(f_hat_);
    ++epoch_;
    if (epoch_callback_) epoch_callback_(*this);
}

int Reconstructor::run() {
    for (int e = 0; e < cfg_.epochs; ++e) {
        run_epoch();
        if (cfg_.early_stop && epoch_ >= 2) {
            const double prev = epoch_energy_[static_cast<std::size_t>(epoch_ - 2)];
            const double curr = epoch_energy_[static_cast<std::size_t>(epoch_ - 1)];
            if (std::fabs(prev - curr) < cfg_.early_stop_tol * std::fmax(std::fabs(prev), 1e-300)) break;
        }
    }
    return epoch_;
}

ReconResult Reconstructor::result() const {
    ReconResult r;
    r.volume = ifft(f_hat_);
    r.poses = poses_;
    r.diagnostics.epoch_mean_energy = epoch_energy_;
    r.diagnostics.sampler_fallbacks = sampler_ ? sampler_->degenerate_fallbacks() : 0;
    r.diagnostics.epochs_run = epoch_;
    return r;
}

ReconResult reconstruct(const ViewSet& views, const ReconConfig& cfg) {
    Reconstructor rec(views, cfg);
    rec.run();
    return rec.result();
}

}  // namespace spr
