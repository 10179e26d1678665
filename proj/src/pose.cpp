#include "spr/pose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "spr/errors.hpp"
#include "spr/grid.hpp"
#include "spr/shift.hpp"
#include "spr/threading.hpp"

namespace spr {

void SamplerConfig::validate() const {
    if (m_d < 1 || m_psi < 1) throw ArgumentError("SamplerConfig: grid sizes must be >= 1");
    if (n_d < 1 || n_psi < 1) throw ArgumentError("SamplerConfig: sample counts must be >= 1");
    if (n_d > m_d || n_psi > m_psi)
        throw ArgumentError("SamplerConfig: sample counts must not exceed grid sizes");
    if (!(alpha_r > 1.0)) throw ArgumentError("SamplerConfig: alpha_r must be > 1");
    if (beta_d < 0.0 || beta_psi < 0.0) throw ArgumentError("SamplerConfig: beta must be >= 0");
}

namespace {

// Energy of one candidate given the PSF-multiplied rotation b_hat and the
// integer translation: || y_hat - rho_t b_hat ||^2 / N via per-axis phase
// tables.
double candidate_energy(const SpectralVolume& y_hat, const SpectralVolume& b_hat,
                        const std::array<int, 3>& t) {
    const int nx = y_hat.dims.nx, ny = y_hat.dims.ny, nz = y_hat.dims.nz;
    avector<cplx> px(static_cast<std::size_t>(nx)), py(static_cast<std::size_t>(ny)),
        pz(static_cast<std::size_t>(nz));
    detail::fill_phase_table(nx, t[0], px.data());
    detail::fill_phase_table(ny, t[1], py.data());
    detail::fill_phase_table(nz, t[2], pz.data());
    double acc = 0.0;
    std::size_t idx = 0;
    for (int z = 0; z < nz; ++z) {
        for (int y = 0; y < ny; ++y) {
            const cplx pzy = pz[z] * py[y];
            for (int x = 0; x < nx; ++x, ++idx)
                acc += std::norm(y_hat.data[idx] - pzy * px[x] * b_hat.data[idx]);
        }
    }
    return acc / static_cast<double>(y_hat.dims.count());
}

}  // namespace

OrientationSearchResult search_orientation(const SpectralVolume& f_hat, const SpectralVolume& psf_hat,
                                           const SpectralVolume& y_hat, const So3Grid& grid,
                                           const std::vector<int>& psi_set, const std::vector<int>& d_set,
                                           int threads) {
    if (psi_set.empty() || d_set.empty())
        throw ArgumentError("search_orientation: candidate sets must be nonempty");
    if (f_hat.dims != psf_hat.dims || f_hat.dims != y_hat.dims)
        throw ShapeError("search_orientation: dimension mismatch");
    if (!f_hat.dims.cubic()) throw ShapeError("search_orientation: grids must be cubic");

    const int np = static_cast<int>(psi_set.size());
    const int nd = static_cast<int>(d_set.size());
    const int total = np * nd;

    OrientationSearchResult res;
    res.psi_set = psi_set;
    res.d_set = d_set;
    res.energies.assign(static_cast<std::size_t>(total), 0.0);
    res.likelihoods.assign(static_cast<std::size_t>(total), 0.0);
    std::vector<std::array<int, 3>> shifts(static_cast<std::size_t>(total));

    struct Scratch {
        SpectralVolume b_hat;
        detail::PcWorkspace pc;
    };
    std::vector<Scratch> scratch(static_cast<std::size_t>(std::max(1, std::min(threads, total))));
    for (auto& s : scratch) s.b_hat = SpectralVolume(f_hat.dims);

    // The decentered representation is shared by every candidate rotation.
    const SpectralVolume g_hat = detail::decenter_spectrum(f_hat);

    const std::size_t count = f_hat.dims.count();
    const int workers = static_cast<int>(scratch.size());

    parallel_for(workers, workers, [&](int w) {
        Scratch& sc = scratch[static_cast<std::size_t>(w)];
        const int lo = static_cast<int>(static_cast<long long>(total) * w / workers);
        const int hi = static_cast<int>(static_cast<long long>(total) * (w + 1) / workers);
        for (int cidx = lo; cidx < hi; ++cidx) {
            const int pi = cidx / nd;
            const int dj = cidx % nd;
            const Orientation theta = grid.orientation(psi_set[pi], d_set[dj]);
            const Mat3 rm = theta.matrix();
            if (detail::is_identity(rm))
                sc.b_hat = f_hat;  // same fast path as rotate()
            else
                detail::rotate_decentered_into(g_hat, rm, sc.b_hat);
            for (std::size_t i = 0; i < count; ++i) sc.b_hat.data[i] *= psf_hat.data[i];
            const CorrelationPeak peak = detail::phase_correlate_ws(y_hat, sc.b_hat, sc.pc);
            shifts[static_cast<std::size_t>(cidx)] = peak.t;
            res.energies[static_cast<std::size_t>(cidx)] = candidate_energy(y_hat, sc.b_hat, peak.t);
        }
    });

    // Argmin with (j, i) lexicographic tie-break over grid indices.
    int best_idx = -1;
    auto best_key = std::make_tuple(std::numeric_limits<double>::infinity(),
                                    std::numeric_limits<int>::max(), std::numeric_limits<int>::max());
    for (int cidx = 0; cidx < total; ++cidx) {
        const int pi = cidx / nd;
        const int dj = cidx % nd;
        const auto key = std::make_tuple(res.energies[static_cast<std::size_t>(cidx)], d_set[dj],
                                         psi_set[pi]);
        if (key < best_key) {
            best_key = key;
            best_idx = cidx;
        }
    }

    const double e_min = std::get<0>(best_key);
    for (int cidx = 0; cidx < total; ++cidx)
        res.likelihoods[static_cast<std::size_t>(cidx)] =
            std::exp(-(res.energies[static_cast<std::size_t>(cidx)] - e_min));

    res.best_psi = psi_set[best_idx / nd];
    res.best_d = d_set[best_idx % nd];
    res.best_energy = res.energies[static_cast<std::size_t>(best_idx)];
    const auto& t = shifts[static_cast<std::size_t>(best_idx)];
    res.best_pose.orientation = grid.orientation(res.best_psi, res.best_d);
    res.best_pose.translation = {static_cast<double>(t[0]), static_cast<double>(t[1]),
                                 static_cast<double>(t[2])};
    return res;
}

Sampler::Sampler(int n_views, So3Grid grid, SamplerConfig cfg) : grid_(std::move(grid)), cfg_(cfg) {
    cfg_.validate();
    if (n_views < 1) throw ArgumentError("Sampler: need at least one view");
    if (grid_.m_d != cfg_.m_d || grid_.m_psi != cfg_.m_psi)
        throw ArgumentError("Sampler: grid sizes disagree with config");
    qd_.assign(static_cast<std::size_t>(n_views),
               std::vector<double>(static_cast<std::size_t>(cfg_.m_d), 1.0 / cfg_.m_d));
    qpsi_.assign(static_cast<std::size_t>(n_views),
                 std::vector<double>(static_cast<std::size_t>(cfg_.m_psi), 1.0 / cfg_.m_psi));
}

std::vector<int> Sampler::draw_set(const std::vector<double>& q, int count, Rng& rng) const {
    const int m = static_cast<int>(q.size());
    std::vector<double> cdf(q.size());
    double acc = 0.0;
    int support = 0;
    for (int i = 0; i < m; ++i) {
        if (q[static_cast<std::size_t>(i)] > 0.0) ++support;
        acc += q[static_cast<std::size_t>(i)];
        cdf[static_cast<std::size_t>(i)] = acc;
    }
    const int target = std::min(count, support);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(target));
    std::vector<char> taken(q.size(), 0);
    while (static_cast<int>(out.size()) < target) {
        const double u = rng.uniform01() * acc;
        int idx = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (idx >= m) idx = m - 1;
        while (q[static_cast<std::size_t>(idx)] <= 0.0 && idx > 0) --idx;  // numerical tail guard
        if (!taken[static_cast<std::size_t>(idx)]) {
            taken[static_cast<std::size_t>(idx)] = 1;
            out.push_back(idx);
        }
    }
    return out;
}

CandidateSets Sampler::draw_candidate_sets(int view, Rng& rng) const {
    CandidateSets sets;
    sets.psi = draw_set(qpsi_[static_cast<std::size_t>(view)], cfg_.n_psi, rng);
    sets.d = draw_set(qd_[static_cast<std::size_t>(view)], cfg_.n_d, rng);
    return sets;
}

namespace {

// Kernel-smoothed, normalized likelihood over the full grid, computed in log
// space with a global shift (beta may be large). Returns false when every
// weight vanishes.
bool smooth_normalized(const std::vector<double>& log_pi, const std::vector<int>& candidates,
                       const std::vector<double>& log_kernel_row_major, int m,
                       std::vector<double>& out) {
    const int k = static_cast<int>(candidates.size());
    double max_term = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i)
        for (int c = 0; c < k; ++c) {
            if (!std::isfinite(log_pi[static_cast<std::size_t>(c)])) continue;
            const double term = log_pi[static_cast<std::size_t>(c)] +
                                log_kernel_row_major[static_cast<std::size_t>(i) * k + c];
            if (term > max_term) max_term = term;
        }
    if (!std::isfinite(max_term)) return false;

    out.assign(static_cast<std::size_t>(m), 0.0);
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int c = 0; c < k; ++c) {
            if (!std::isfinite(log_pi[static_cast<std::size_t>(c)])) continue;
            s += std::exp(log_pi[static_cast<std::size_t>(c)] +
                          log_kernel_row_major[static_cast<std::size_t>(i) * k + c] - max_term);
        }
        out[static_cast<std::size_t>(i)] = s;
        total += s;
    }
    if (total <= 0.0) return false;
    for (auto& v : out) v /= total;
    return true;
}

}  // namespace

void Sampler::update_distributions(int view, const OrientationSearchResult& result) {
    const auto& psi_set = result.psi_set;
    const auto& d_set = result.d_set;
    const int np = static_cast<int>(psi_set.size());
    const int nd = static_cast<int>(d_set.size());
    if (np == 0 || nd == 0) throw ArgumentError("update_distributions: empty candidate sets");
    if (result.likelihoods.size() != static_cast<std::size_t>(np) * static_cast<std::size_t>(nd))
        throw ArgumentError("update_distributions: result does not cover the candidate sets");

    auto& qd = qd_[static_cast<std::size_t>(view)];
    auto& qpsi = qpsi_[static_cast<std::size_t>(view)];

    // Importance-sampled marginals (in log space for the smoothing step).
    std::vector<double> log_pi_psi(static_cast<std::size_t>(np));
    for (int pi = 0; pi < np; ++pi) {
        double s = 0.0;
        for (int dj = 0; dj < nd; ++dj)
            s += result.likelihoods[static_cast<std::size_t>(pi) * nd + dj] /
                 qd[static_cast<std::size_t>(d_set[dj])];
        log_pi_psi[static_cast<std::size_t>(pi)] = s > 0.0 ? std::log(s) : -std::numeric_limits<double>::infinity();
    }
    std::vector<double> log_pi_d(static_cast<std::size_t>(nd));
    for (int dj = 0; dj < nd; ++dj) {
        double s = 0.0;
        for (int pi = 0; pi < np; ++pi)
            s += result.likelihoods[static_cast<std::size_t>(pi) * nd + dj] /
                 qpsi[static_cast<std::size_t>(psi_set[pi])];
        log_pi_d[static_cast<std::size_t>(dj)] = s > 0.0 ? std::log(s) : -std::numeric_limits<double>::infinity();
    }

    std::vector<double> log_k_psi(static_cast<std::size_t>(cfg_.m_psi) * np);
    for (int i = 0; i < cfg_.m_psi; ++i)
        for (int c = 0; c < np; ++c)
            log_k_psi[static_cast<std::size_t>(i) * np + c] =
                cfg_.beta_psi * std::cos(grid_.psis[i] - grid_.psis[psi_set[c]]);
    std::vector<double> log_k_d(static_cast<std::size_t>(cfg_.m_d) * nd);
    for (int j = 0; j < cfg_.m_d; ++j)
        for (int c = 0; c < nd; ++c)
            log_k_d[static_cast<std::size_t>(j) * nd + c] =
                cfg_.beta_d * dot(grid_.axes[j], grid_.axes[d_set[c]]);

    std::vector<double> smoothed_psi, smoothed_d;
    const bool ok_psi = smooth_normalized(log_pi_psi, psi_set, log_k_psi, cfg_.m_psi, smoothed_psi);
    const bool ok_d = smooth_normalized(log_pi_d, d_set, log_k_d, cfg_.m_d, smoothed_d);
    if (!ok_psi) {
        smoothed_psi.assign(static_cast<std::size_t>(cfg_.m_psi), 1.0 / cfg_.m_psi);
        ++fallbacks_;
    }
    if (!ok_d) {
        smoothed_d.assign(static_cast<std::size_t>(cfg_.m_d), 1.0 / cfg_.m_d);
        ++fallbacks_;
    }

    for (int i = 0; i < cfg_.m_psi; ++i)
        qpsi[static_cast<std::size_t>(i)] =
            alpha_ / cfg_.m_psi + (1.0 - alpha_) * smoothed_psi[static_cast<std::size_t>(i)];
    for (int j = 0; j < cfg_.m_d; ++j)
        qd[static_cast<std::size_t>(j)] =
            alpha_ / cfg_.m_d + (1.0 - alpha_) * smoothed_d[static_cast<std::size_t>(j)];
}

void Sampler::anneal() { alpha_ /= cfg_.alpha_r; }

void Sampler::set_alpha(double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw ArgumentError("set_alpha: alpha must be in [0, 1]");
    alpha_ = alpha;
}

}  // namespace spr
