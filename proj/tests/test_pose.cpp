#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "spr/errors.hpp"
#include "spr/fft.hpp"
#include "spr/pose.hpp"
#include "spr/shift.hpp"

using namespace spr;
using namespace spr::test;

namespace {

SamplerConfig small_config(int m_d, int m_psi, int n_d, int n_psi) {
    SamplerConfig cfg;
    cfg.m_d = m_d;
    cfg.m_psi = m_psi;
    cfg.n_d = n_d;
    cfg.n_psi = n_psi;
    return cfg;
}

// Geodesic distance between rotations: angle of Ra * Rb^T.
double rotation_distance(const Mat3& a, const Mat3& b) {
    return axis_angle_of(a * b.transposed()).second;
}

OrientationSearchResult make_result(const std::vector<int>& psi_set, const std::vector<int>& d_set,
                                    const std::vector<double>& energies) {
    OrientationSearchResult r;
    r.psi_set = psi_set;
    r.d_set = d_set;
    r.energies = energies;
    const double e_min = *std::min_element(energies.begin(), energies.end());
    r.likelihoods.resize(energies.size());
    for (std::size_t i = 0; i < energies.size(); ++i) r.likelihoods[i] = std::exp(-(energies[i] - e_min));
    return r;
}

}  // namespace

TEST_CASE("draw_candidate_sets: uniform at alpha=1 (chi-squared)") {
    const So3Grid grid(16, 8);
    Sampler sampler(1, grid, small_config(16, 8, 1, 1));
    Rng rng(123);
    const int n_draws = 100000;
    std::vector<int> counts(16, 0);
    for (int t = 0; t < n_draws; ++t) {
        const CandidateSets sets = sampler.draw_candidate_sets(0, rng);
        REQUIRE(sets.d.size() == 1);
        ++counts[static_cast<std::size_t>(sets.d[0])];
    }
    const double expected = static_cast<double>(n_draws) / 16.0;
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // dof 15, p = 0.01 critical value
    CHECK(chi2 < 30.5779);
}

TEST_CASE("draw_candidate_sets: point mass with alpha=0 collapses to one index") {
    const So3Grid grid(8, 4);
    Sampler sampler(1, grid, small_config(8, 4, 3, 2));
    sampler.set_alpha(0.0);
    // Point mass at axis 5 via an update whose likelihood sits entirely there.
    std::vector<double> energies = {0.0, 1e6, 1e6, 1e6, 1e6, 1e6};
    auto result = make_result({0, 1}, {5, 0, 2}, {0.0, 1e6, 1e6, 1e6, 1e6, 1e6});
    SamplerConfig cfg = small_config(8, 4, 3, 2);
    cfg.beta_d = 1e4;  // essentially a delta kernel
    cfg.beta_psi = 1e4;
    Sampler peaked(1, grid, cfg);
    peaked.set_alpha(0.0);
    peaked.update_distributions(0, result);
    Rng rng(5);
    const CandidateSets sets = peaked.draw_candidate_sets(0, rng);
    // Support shrinks to the kernel-dominated neighborhood; the argmax index
    // must be the likelihood peak.
    const auto& qd = peaked.q_d(0);
    CHECK(static_cast<int>(std::max_element(qd.begin(), qd.end()) - qd.begin()) == 5);
    CHECK(std::find(sets.d.begin(), sets.d.end(), 5) != sets.d.end());
    (void)energies;
}

TEST_CASE("draw_candidate_sets: full sets in the exhaustive limit") {
    const So3Grid grid(6, 4);
    Sampler sampler(1, grid, small_config(6, 4, 6, 4));
    Rng rng(9);
    const CandidateSets sets = sampler.draw_candidate_sets(0, rng);
    std::set<int> d_unique(sets.d.begin(), sets.d.end());
    std::set<int> psi_unique(sets.psi.begin(), sets.psi.end());
    CHECK(d_unique.size() == 6);
    CHECK(psi_unique.size() == 4);
}

TEST_CASE("SamplerConfig: sample counts above grid sizes are rejected") {
    CHECK_THROWS_AS(small_config(8, 4, 9, 2).validate(), ArgumentError);
    CHECK_THROWS_AS(small_config(8, 4, 2, 5).validate(), ArgumentError);
    SamplerConfig bad = small_config(8, 4, 2, 2);
    bad.alpha_r = 1.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad.alpha_r = 1.2;
    bad.beta_d = -1.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("update_distributions: flat likelihood with flat kernel stays uniform") {
    const So3Grid grid(8, 6);
    SamplerConfig cfg = small_config(8, 6, 4, 3);
    cfg.beta_d = 0.0;
    cfg.beta_psi = 0.0;
    Sampler sampler(1, grid, cfg);
    sampler.set_alpha(0.0);
    sampler.update_distributions(0, make_result({0, 2, 4}, {1, 3, 5, 7}, std::vector<double>(12, 2.5)));
    for (double q : sampler.q_d(0)) CHECK(q == doctest::Approx(1.0 / 8).epsilon(1e-12));
    for (double q : sampler.q_psi(0)) CHECK(q == doctest::Approx(1.0 / 6).epsilon(1e-12));
}

TEST_CASE("update_distributions: dominant likelihood peaks Q at the winner") {
    const So3Grid grid(16, 8);
    SamplerConfig cfg = small_config(16, 8, 4, 3);
    cfg.beta_d = 200.0;
    cfg.beta_psi = 200.0;
    Sampler sampler(1, grid, cfg);
    sampler.set_alpha(0.0);
    std::vector<double> energies(12, 50.0);
    energies[1 * 4 + 2] = 0.0;  // psi_set[1], d_set[2]
    sampler.update_distributions(0, make_result({0, 3, 6}, {1, 5, 9, 13}, energies));
    const auto& qd = sampler.q_d(0);
    const auto& qpsi = sampler.q_psi(0);
    CHECK(static_cast<int>(std::max_element(qd.begin(), qd.end()) - qd.begin()) == 9);
    CHECK(static_cast<int>(std::max_element(qpsi.begin(), qpsi.end()) - qpsi.begin()) == 3);
}

TEST_CASE("update_distributions: alpha=1 forces uniform regardless of likelihoods") {
    const So3Grid grid(8, 6);
    Sampler sampler(1, grid, small_config(8, 6, 3, 2));
    REQUIRE(sampler.alpha() == 1.0);
    std::vector<double> energies = {0.0, 100.0, 100.0, 100.0, 100.0, 100.0};
    sampler.update_distributions(0, make_result({0, 1}, {0, 1, 2}, energies));
    for (double q : sampler.q_d(0)) CHECK(q == doctest::Approx(1.0 / 8).epsilon(1e-12));
    for (double q : sampler.q_psi(0)) CHECK(q == doctest::Approx(1.0 / 6).epsilon(1e-12));
}

TEST_CASE("update_distributions: Q stays a floored probability distribution") {
    const So3Grid grid(12, 8);
    SamplerConfig cfg = small_config(12, 8, 5, 3);
    Sampler sampler(2, grid, cfg);
    Rng rng(31);
    for (int round = 0; round < 6; ++round) {
        for (int view = 0; view < 2; ++view) {
            const CandidateSets sets = sampler.draw_candidate_sets(view, rng);
            std::vector<double> energies(sets.psi.size() * sets.d.size());
            for (auto& e : energies) e = rng.uniform(0.0, 300.0);
            sampler.update_distributions(view, make_result(sets.psi, sets.d, energies));
        }
        sampler.anneal();
        for (int view = 0; view < 2; ++view) {
            double sum_d = 0.0, sum_psi = 0.0;
            for (double q : sampler.q_d(view)) {
                CHECK(q >= sampler.alpha() / 12 * (1.0 - 1e-12));
                sum_d += q;
            }
            for (double q : sampler.q_psi(view)) {
                CHECK(q >= sampler.alpha() / 8 * (1.0 - 1e-12));
                sum_psi += q;
            }
            CHECK(sum_d == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(sum_psi == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("update_distributions: invariant to a constant energy shift") {
    const So3Grid grid(10, 6);
    SamplerConfig cfg = small_config(10, 6, 4, 3);
    Sampler a(1, grid, cfg), b(1, grid, cfg);
    a.set_alpha(0.4);
    b.set_alpha(0.4);
    Rng rng(77);
    std::vector<double> energies(12);
    for (auto& e : energies) e = rng.uniform(0.0, 5.0);
    std::vector<double> shifted = energies;
    for (auto& e : shifted) e += 1234.5;

    const std::vector<int> psi_set{1, 3, 5};
    const std::vector<int> d_set{0, 2, 4, 8};
    a.update_distributions(0, make_result(psi_set, d_set, energies));
    b.update_distributions(0, make_result(psi_set, d_set, shifted));
    for (int j = 0; j < 10; ++j) CHECK(std::fabs(a.q_d(0)[j] - b.q_d(0)[j]) < 1e-12);
    for (int i = 0; i < 6; ++i) CHECK(std::fabs(a.q_psi(0)[i] - b.q_psi(0)[i]) < 1e-12);
}

TEST_CASE("update_distributions: all-zero likelihoods fall back to uniform") {
    const So3Grid grid(8, 6);
    Sampler sampler(1, grid, small_config(8, 6, 3, 2));
    sampler.set_alpha(0.5);
    OrientationSearchResult result;
    result.psi_set = {0, 1};
    result.d_set = {0, 1, 2};
    result.energies.assign(6, 1e9);
    result.likelihoods.assign(6, 0.0);  // degenerate underflow
    sampler.update_distributions(0, result);
    CHECK(sampler.degenerate_fallbacks() == 2);  // both marginals
    for (double q : sampler.q_d(0)) CHECK(q == doctest::Approx(1.0 / 8).epsilon(1e-12));
}

TEST_CASE("anneal: geometric decay and validation") {
    const So3Grid grid(8, 6);
    Sampler sampler(1, grid, small_config(8, 6, 3, 2));
    sampler.anneal();
    CHECK(sampler.alpha() == doctest::Approx(1.0 / 1.2).epsilon(1e-15));
    double prev = sampler.alpha();
    for (int k = 0; k < 10; ++k) {
        sampler.anneal();
        CHECK(sampler.alpha() < prev);
        prev = sampler.alpha();
    }
    CHECK(prev == doctest::Approx(std::pow(1.2, -11.0)).epsilon(1e-12));
}

TEST_CASE("search_orientation: exact self-match on grid data") {
    const int n = 16;
    const So3Grid grid(32, 8);
    const SpectralVolume f_hat = fft(blob_phantom(n, 404, 12, 0.035, 0.06));
    SpectralVolume psf_hat(f_hat.dims);
    Rng rng(3);
    for (auto& z : psf_hat.data) z = cplx{rng.uniform(0.3, 1.0), 0.0};

    const int i0 = 3, j0 = 17;
    Pose pose{grid.orientation(i0, j0), Translation{2, -1, 1}};
    const SpectralVolume y_hat = spectral_view(f_hat, psf_hat, pose);

    std::vector<int> all_psi(8), all_d(32);
    for (int i = 0; i < 8; ++i) all_psi[i] = i;
    for (int j = 0; j < 32; ++j) all_d[j] = j;
    const OrientationSearchResult res = search_orientation(f_hat, psf_hat, y_hat, grid, all_psi, all_d);

    CHECK(res.best_psi == i0);
    CHECK(res.best_d == j0);
    CHECK(res.best_pose.translation[0] == 2.0);
    CHECK(res.best_pose.translation[1] == -1.0);
    CHECK(res.best_pose.translation[2] == 1.0);
    double y2 = 0.0;
    for (const auto& z : y_hat.data) y2 += std::norm(z);
    CHECK(res.best_energy < 1e-10 * y2 / static_cast<double>(y_hat.data.size()));
}

TEST_CASE("search_orientation: full sets equal independent brute force") {
    const int n = 12;
    const So3Grid grid(24, 6);
    const SpectralVolume f_hat = fft(blob_phantom(n, 405, 10, 0.04, 0.08));
    SpectralVolume psf_hat(f_hat.dims);
    Rng rng(4);
    for (auto& z : psf_hat.data) z = cplx{rng.uniform(0.3, 1.0), 0.0};
    const Pose truth{Orientation{2.9, 1.3, 0.6}, Translation{0, 0, 0}};  // off-grid
    const SpectralVolume y_hat = spectral_view(f_hat, psf_hat, truth);

    std::vector<int> all_psi(6), all_d(24);
    for (int i = 0; i < 6; ++i) all_psi[i] = i;
    for (int j = 0; j < 24; ++j) all_d[j] = j;
    const OrientationSearchResult res = search_orientation(f_hat, psf_hat, y_hat, grid, all_psi, all_d);

    // Independent enumeration over the whole grid.
    int best_i = -1, best_j = -1;
    double best_e = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 24; ++j)
        for (int i = 0; i < 6; ++i) {
            SpectralVolume b_hat = rotate(f_hat, grid.orientation(i, j));
            for (std::size_t k = 0; k < b_hat.data.size(); ++k) b_hat.data[k] *= psf_hat.data[k];
            const CorrelationPeak peak = phase_correlate(y_hat, b_hat);
            const SpectralVolume shifted = apply_phase_shift(b_hat, peak.translation());
            double e = 0.0;
            for (std::size_t k = 0; k < shifted.data.size(); ++k)
                e += std::norm(y_hat.data[k] - shifted.data[k]);
            e /= static_cast<double>(shifted.data.size());
            CHECK(e == res.energy(i, j));
            if (e < best_e) {
                best_e = e;
                best_i = i;
                best_j = j;
            }
        }
    CHECK(res.best_psi == best_i);
    CHECK(res.best_d == best_j);
    CHECK(res.best_energy == best_e);

    // Winner within one grid step of the generating rotation.
    double spacing = 0.0;
    for (int j = 0; j < 24; ++j)
        for (int i = 0; i < 6; ++i) {
            double nearest = M_PI;
            const Mat3 a = grid.orientation(i, j).matrix();
            for (int j2 = 0; j2 < 24; ++j2)
                for (int i2 = 0; i2 < 6; ++i2) {
                    if (i2 == i && j2 == j) continue;
                    nearest = std::fmin(nearest, rotation_distance(a, grid.orientation(i2, j2).matrix()));
                }
            spacing = std::fmax(spacing, nearest);
        }
    const double err =
        rotation_distance(grid.orientation(res.best_psi, res.best_d).matrix(), truth.orientation.matrix());
    CHECK(err <= spacing);
}

TEST_CASE("search_orientation: bit-equal energies break ties toward lowest (j, i)") {
    const int n = 8;
    const So3Grid grid(12, 6);
    // psi = 0 realizes the identity for every axis, so all (0, j) candidates
    // tie exactly at zero residual on self-matched data.
    const SpectralVolume f_hat = fft(blob_phantom(n, 63));
    SpectralVolume psf_hat(f_hat.dims);
    for (auto& z : psf_hat.data) z = cplx{1.0, 0.0};
    const SpectralVolume y_hat = f_hat;

    const OrientationSearchResult res =
        search_orientation(f_hat, psf_hat, y_hat, grid, {3, 0}, {7, 2, 9});
    CHECK(res.energy(1, 0) == res.energy(1, 1));
    CHECK(res.energy(1, 1) == res.energy(1, 2));
    CHECK(res.best_psi == 0);
    CHECK(res.best_d == 2);
}

TEST_CASE("search_orientation: empty candidate sets are rejected") {
    const So3Grid grid(8, 4);
    SpectralVolume s(Dims{4, 4, 4});
    s.data[0] = cplx{1.0, 0.0};
    CHECK_THROWS_AS(search_orientation(s, s, s, grid, {}, {0}), ArgumentError);
}

TEST_CASE("importance-sampled marginal is unbiased under uniform Q") {
    // Fixed 6x6 energy table; compare the Monte-Carlo estimate of the psi
    // marginal against the exact brute-force marginal.
    const int m = 6;
    std::vector<double> p(m * m);
    Rng table_rng(2024);
    for (auto& v : p) v = std::exp(-table_rng.uniform(0.0, 3.0));

    std::vector<double> exact(m, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) exact[i] += p[i * m + j];
    double exact_sum = 0.0;
    for (double v : exact) exact_sum += v;

    const So3Grid grid(m, m);
    Sampler sampler(1, grid, small_config(m, m, 3, 3));  // alpha = 1: uniform draws
    Rng rng(55);
    std::vector<double> estimate(m, 0.0);
    const int n_draws = 10000;
    for (int t = 0; t < n_draws; ++t) {
        const CandidateSets sets = sampler.draw_candidate_sets(0, rng);
        for (int i = 0; i < m; ++i) {
            double pi_tilde = 0.0;
            for (int j : sets.d) pi_tilde += p[i * m + j] / sampler.q_d(0)[j];
            estimate[i] += pi_tilde;
        }
    }
    double est_sum = 0.0;
    for (double v : estimate) est_sum += v;
    for (int i = 0; i < m; ++i)
        CHECK(estimate[i] / est_sum == doctest::Approx(exact[i] / exact_sum).epsilon(0.05));
}
