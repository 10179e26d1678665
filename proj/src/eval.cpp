#include "spr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <tuple>

#include "spr/errors.hpp"
#include "spr/fft.hpp"
#include "spr/shift.hpp"
#include "spr/threading.hpp"

namespace spr {

namespace {

void require_equal_cubic(const Volume& a, const Volume& b, const char* what) {
    a.dims.count();
    if (a.dims != b.dims) throw ShapeError(std::string(what) + ": dimension mismatch");
    if (!a.dims.cubic()) throw ShapeError(std::string(what) + ": grids must be cubic");
}

struct ShellAccum {
    cplx num{0.0, 0.0};
    double da = 0.0;
    double db = 0.0;
    long count = 0;
};

// Cutoff by first down-crossing with linear interpolation; falls back to the
// last radius when the curve never crosses.
std::pair<double, bool> cutoff_resolution(const std::vector<double>& radii,
                                          const std::vector<double>& values, double cutoff) {
    if (values.empty()) return {0.0, false};
    if (values.front() < cutoff) return {radii.front(), true};
    for (std::size_t s = 1; s < values.size(); ++s) {
        if (values[s] < cutoff) {
            const double v0 = values[s - 1], v1 = values[s];
            const double r0 = radii[s - 1], r1 = radii[s];
            const double t = (v0 - cutoff) / (v0 - v1);
            return {r0 + t * (r1 - r0), true};
        }
    }
    return {radii.back(), false};
}

}  // namespace

FscCurve fsc(const Volume& a, const Volume& b, double cutoff) {
    require_equal_cubic(a, b, "fsc");
    const int n = a.dims.nx;
    const int n_shells = n / 2 + 1;

    const SpectralVolume sa = fft(a);
    const SpectralVolume sb = fft(b);

    std::vector<ShellAccum> shells(static_cast<std::size_t>(n_shells));
    std::size_t idx = 0;
    for (int z = 0; z < n; ++z) {
        const double kz = freq_index(z, n);
        for (int y = 0; y < n; ++y) {
            const double ky = freq_index(y, n);
            for (int x = 0; x < n; ++x, ++idx) {
                const double kx = freq_index(x, n);
                const int s = static_cast<int>(std::lround(std::sqrt(kx * kx + ky * ky + kz * kz)));
                if (s >= n_shells) continue;  // beyond Nyquist
                auto& sh = shells[static_cast<std::size_t>(s)];
                sh.num += sa.data[idx] * std::conj(sb.data[idx]);
                sh.da += std::norm(sa.data[idx]);
                sh.db += std::norm(sb.data[idx]);
                ++sh.count;
            }
        }
    }

    FscCurve curve;
    curve.radii.resize(static_cast<std::size_t>(n_shells));
    curve.values.resize(static_cast<std::size_t>(n_shells));
    for (int s = 0; s < n_shells; ++s) {
        curve.radii[static_cast<std::size_t>(s)] = static_cast<double>(s) / n;
        const auto& sh = shells[static_cast<std::size_t>(s)];
        const double den = std::sqrt(sh.da * sh.db);
        curve.values[static_cast<std::size_t>(s)] = den > 0.0 ? sh.num.real() / den : 0.0;
    }
    std::tie(curve.cutoff_resolution, curve.crossed) = cutoff_resolution(curve.radii, curve.values, cutoff);
    return curve;
}

bool CfscMap::defined(int i1, int i2) const { return std::isfinite(at(i1, i2)); }

CfscMap conical_fsc(const Volume& a, const Volume& b, int n_phi2, double cone_half_angle,
                    double cutoff, int threads) {
    require_equal_cubic(a, b, "conical_fsc");
    if (n_phi2 < 2) throw ArgumentError("conical_fsc: need at least 2 inclination samples");
    if (!(cone_half_angle > 0.0) || cone_half_angle > M_PI / 2)
        throw ArgumentError("conical_fsc: cone half-angle must be in (0, pi/2]");

    const int n = a.dims.nx;
    const int n_shells = n / 2 + 1;
    const int n_phi1 = 2 * (n_phi2 - 1);

    CfscMap map;
    map.phi2s.resize(static_cast<std::size_t>(n_phi2));
    for (int i = 0; i < n_phi2; ++i) map.phi2s[i] = M_PI * i / (n_phi2 - 1);
    map.phi1s.resize(static_cast<std::size_t>(n_phi1));
    for (int m = 0; m < n_phi1; ++m) map.phi1s[m] = 2.0 * M_PI * m / n_phi1;
    map.resolution.assign(static_cast<std::size_t>(n_phi1) * n_phi2,
                          std::numeric_limits<double>::quiet_NaN());

    const SpectralVolume sa = fft(a);
    const SpectralVolume sb = fft(b);
    const double cos_gamma = std::cos(cone_half_angle);

    // Evaluate one cell per antipodal pair and mirror the value, so the map
    // is symmetric under direction -> antipode exactly.
    struct Cell {
        int m, i;
    };
    std::vector<Cell> canonical;
    for (int i = 0; i < n_phi2; ++i) {
        for (int m = 0; m < n_phi1; ++m) {
            const int mi = (m + n_phi1 / 2) % n_phi1;
            const int ii = n_phi2 - 1 - i;
            if (std::make_pair(i, m) <= std::make_pair(ii, mi)) canonical.push_back({m, i});
        }
    }

    parallel_for(static_cast<int>(canonical.size()), threads, [&](int c) {
        const int m = canonical[static_cast<std::size_t>(c)].m;
        const int i = canonical[static_cast<std::size_t>(c)].i;
        const double phi1 = map.phi1s[static_cast<std::size_t>(m)];
        const double phi2 = map.phi2s[static_cast<std::size_t>(i)];
        const Vec3 u{std::cos(phi1) * std::sin(phi2), std::sin(phi1) * std::sin(phi2), std::cos(phi2)};

        std::vector<ShellAccum> shells(static_cast<std::size_t>(n_shells));
        std::size_t idx = 0;
        for (int z = 0; z < n; ++z) {
            const double kz = freq_index(z, n);
            for (int y = 0; y < n; ++y) {
                const double ky = freq_index(y, n);
                for (int x = 0; x < n; ++x, ++idx) {
                    const double kx = freq_index(x, n);
                    const double r2 = kx * kx + ky * ky + kz * kz;
                    const int s = static_cast<int>(std::lround(std::sqrt(r2)));
                    if (s >= n_shells) continue;
                    if (s > 0) {
                        // Cone about +-u for Hermitian symmetry.
                        const double d = kx * u[0] + ky * u[1] + kz * u[2];
                        if (std::fabs(d) < cos_gamma * std::sqrt(r2)) continue;
                    }
                    auto& sh = shells[static_cast<std::size_t>(s)];
                    sh.num += sa.data[idx] * std::conj(sb.data[idx]);
                    sh.da += std::norm(sa.data[idx]);
                    sh.db += std::norm(sb.data[idx]);
                    ++sh.count;
                }
            }
        }

        std::vector<double> radii, values;
        for (int s = 0; s < n_shells; ++s) {
            const auto& sh = shells[static_cast<std::size_t>(s)];
            if (sh.count == 0) continue;
            const double den = std::sqrt(sh.da * sh.db);
            radii.push_back(static_cast<double>(s) / n);
            values.push_back(den > 0.0 ? sh.num.real() / den : 0.0);
        }
        double res = std::numeric_limits<double>::quiet_NaN();
        if (radii.size() >= 2) res = cutoff_resolution(radii, values, cutoff).first;

        map.resolution[static_cast<std::size_t>(i) * n_phi1 + m] = res;
        const int mi = (m + n_phi1 / 2) % n_phi1;
        const int ii = n_phi2 - 1 - i;
        map.resolution[static_cast<std::size_t>(ii) * n_phi1 + mi] = res;
    });

    return map;
}

namespace {

// Separable Gaussian filtering with symmetric (mirrored) boundaries.
void gaussian_filter_inplace(std::vector<double>& v, const Dims& dims, double sigma, int radius) {
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double tap_sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * i * i / (sigma * sigma));
        taps[static_cast<std::size_t>(i + radius)] = w;
        tap_sum += w;
    }
    for (auto& w : taps) w /= tap_sum;

    const int ns[3] = {dims.nx, dims.ny, dims.nz};
    const std::size_t strides[3] = {1, static_cast<std::size_t>(dims.nx),
                                    static_cast<std::size_t>(dims.nx) * dims.ny};
    std::vector<double> line;
    for (int axis = 0; axis < 3; ++axis) {
        const int n = ns[axis];
        const std::size_t stride = strides[axis];
        const int n_other1 = ns[(axis + 1) % 3];
        const int n_other2 = ns[(axis + 2) % 3];
        const std::size_t stride1 = strides[(axis + 1) % 3];
        const std::size_t stride2 = strides[(axis + 2) % 3];
        line.resize(static_cast<std::size_t>(n));
        for (int b = 0; b < n_other2; ++b) {
            for (int aL = 0; aL < n_other1; ++aL) {
                const std::size_t base = stride1 * static_cast<std::size_t>(aL) +
                                         stride2 * static_cast<std::size_t>(b);
                for (int i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = v[base + stride * i];
                for (int i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (int t = -radius; t <= radius; ++t) {
                        int j = i + t;
                        if (j < 0) j = -j - 1;
                        if (j >= n) j = 2 * n - 1 - j;
                        acc += taps[static_cast<std::size_t>(t + radius)] * line[static_cast<std::size_t>(j)];
                    }
                    v[base + stride * i] = acc;
                }
            }
        }
    }
}

std::vector<double> rescaled_unit(const Volume& v) {
    double lo = v.data[0], hi = v.data[0];
    for (double x : v.data) {
        lo = std::fmin(lo, x);
        hi = std::fmax(hi, x);
    }
    std::vector<double> out(v.data.begin(), v.data.end());
    if (hi > lo) {
        const double inv = 1.0 / (hi - lo);
        for (auto& x : out) x = (x - lo) * inv;
    } else {
        for (auto& x : out) x = 0.0;
    }
    return out;
}

}  // namespace

double ssim3d(const Volume& a, const Volume& b) {
    if (a.dims != b.dims) throw ShapeError("ssim3d: dimension mismatch");
    a.dims.count();

    const double c1 = 0.01 * 0.01;  // (k1 L)^2, L = 1
    const double c2 = 0.03 * 0.03;
    const double sigma = 1.5;
    const int radius = 5;

    std::vector<double> va = rescaled_unit(a);
    std::vector<double> vb = rescaled_unit(b);
    const std::size_t count = va.size();

    std::vector<double> mu_a = va, mu_b = vb;
    std::vector<double> aa(count), bb(count), ab(count);
    for (std::size_t i = 0; i < count; ++i) {
        aa[i] = va[i] * va[i];
        bb[i] = vb[i] * vb[i];
        ab[i] = va[i] * vb[i];
    }
    gaussian_filter_inplace(mu_a, a.dims, sigma, radius);
    gaussian_filter_inplace(mu_b, a.dims, sigma, radius);
    gaussian_filter_inplace(aa, a.dims, sigma, radius);
    gaussian_filter_inplace(bb, a.dims, sigma, radius);
    gaussian_filter_inplace(ab, a.dims, sigma, radius);

    // Mean over the interior (window-radius crop) when the grid allows it.
    const int nx = a.dims.nx, ny = a.dims.ny, nz = a.dims.nz;
    const bool crop = nx > 2 * radius && ny > 2 * radius && nz > 2 * radius;
    const int x0 = crop ? radius : 0, x1 = crop ? nx - radius : nx;
    const int y0 = crop ? radius : 0, y1 = crop ? ny - radius : ny;
    const int z0 = crop ? radius : 0, z1 = crop ? nz - radius : nz;

    double acc = 0.0;
    long m = 0;
    for (int z = z0; z < z1; ++z) {
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
                const std::size_t i = a.index(x, y, z);
                const double var_a = aa[i] - mu_a[i] * mu_a[i];
                const double var_b = bb[i] - mu_b[i] * mu_b[i];
                const double cov = ab[i] - mu_a[i] * mu_b[i];
                const double val = ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
                                   ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2));
                acc += val;
                ++m;
            }
        }
    }
    return acc / static_cast<double>(m);
}

namespace {

// Equal-mass bin edges (order statistics), assigning by edge <= value so that
// strictly monotone remaps leave assignments unchanged.
std::vector<double> rank_edges(const std::vector<double>& values, int bins) {
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges(static_cast<std::size_t>(bins - 1));
    const std::size_t n = sorted.size();
    for (int k = 1; k < bins; ++k)
        edges[static_cast<std::size_t>(k - 1)] = sorted[n * static_cast<std::size_t>(k) / bins];
    return edges;
}

int bin_of(const std::vector<double>& edges, double x) {
    return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
}

double mutual_information_binned(const std::vector<int>& bins_a, const std::vector<int>& bins_b,
                                 int bins) {
    std::vector<double> joint(static_cast<std::size_t>(bins) * bins, 0.0);
    const double w = 1.0 / static_cast<double>(bins_a.size());
    for (std::size_t i = 0; i < bins_a.size(); ++i)
        joint[static_cast<std::size_t>(bins_a[i]) * bins + bins_b[i]] += w;
    std::vector<double> pa(static_cast<std::size_t>(bins), 0.0), pb(static_cast<std::size_t>(bins), 0.0);
    for (int i = 0; i < bins; ++i)
        for (int j = 0; j < bins; ++j) {
            const double p = joint[static_cast<std::size_t>(i) * bins + j];
            pa[static_cast<std::size_t>(i)] += p;
            pb[static_cast<std::size_t>(j)] += p;
        }
    double mi = 0.0;
    for (int i = 0; i < bins; ++i)
        for (int j = 0; j < bins; ++j) {
            const double p = joint[static_cast<std::size_t>(i) * bins + j];
            if (p > 0.0) mi += p * std::log2(p / (pa[static_cast<std::size_t>(i)] * pb[static_cast<std::size_t>(j)]));
        }
    return mi;
}

std::vector<int> rank_bins(const std::vector<double>& values, int bins) {
    const std::vector<double> edges = rank_edges(values, bins);
    std::vector<int> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = bin_of(edges, values[i]);
    return out;
}

std::vector<double> to_std(const avector<double>& v) { return std::vector<double>(v.begin(), v.end()); }

Volume circular_shift(const Volume& v, const std::array<int, 3>& t) {
    Volume out(v.dims);
    const int nx = v.dims.nx, ny = v.dims.ny, nz = v.dims.nz;
    for (int z = 0; z < nz; ++z) {
        const int sz = ((z - t[2]) % nz + nz) % nz;
        for (int y = 0; y < ny; ++y) {
            const int sy = ((y - t[1]) % ny + ny) % ny;
            for (int x = 0; x < nx; ++x) {
                const int sx = ((x - t[0]) % nx + nx) % nx;
                out.at(x, y, z) = v.at(sx, sy, sz);
            }
        }
    }
    return out;
}

bool is_constant(const Volume& v) {
    for (double x : v.data)
        if (x != v.data[0]) return false;
    return true;
}

}  // namespace

double mutual_information(const Volume& a, const Volume& b, int bins) {
    if (a.dims != b.dims) throw ShapeError("mutual_information: dimension mismatch");
    if (bins < 2) throw ArgumentError("mutual_information: need at least 2 bins");
    return mutual_information_binned(rank_bins(to_std(a.data), bins), rank_bins(to_std(b.data), bins),
                                     bins);
}

RegistrationResult register_to_ground_truth(const Volume& recon, const Volume& gt, int threads) {
    require_equal_cubic(recon, gt, "register_to_ground_truth");
    if (is_constant(recon) || is_constant(gt))
        throw DegenerateInputError("register_to_ground_truth: constant input has a flat histogram");

    constexpr int kBins = 64;
    const SpectralVolume gt_hat = fft(gt);
    const std::vector<int> gt_bins = rank_bins(to_std(gt.data), kBins);

    // ~10 degree spacing: 400 axes over the sphere, 36 in-axis angles.
    const So3Grid grid(400, 36);
    const int total = grid.m_d * grid.m_psi;

    std::vector<double> scores(static_cast<std::size_t>(total),
                               -std::numeric_limits<double>::infinity());
    std::vector<std::array<int, 3>> shifts(static_cast<std::size_t>(total));

    parallel_for(total, threads, [&](int cidx) {
        const int i = cidx / grid.m_d;
        const int j = cidx % grid.m_d;
        const Volume rotated = rotate(recon, grid.orientation(i, j));
        const SpectralVolume b_hat = fft(rotated);
        CorrelationPeak peak;
        try {
            peak = phase_correlate(gt_hat, b_hat);
        } catch (const DegenerateInputError&) {
            return;  // rotation pushed everything out of frame
        }
        const Volume aligned = circular_shift(rotated, peak.t);
        scores[static_cast<std::size_t>(cidx)] =
            mutual_information_binned(gt_bins, rank_bins(to_std(aligned.data), kBins), kBins);
        shifts[static_cast<std::size_t>(cidx)] = peak.t;
    });

    int best = 0;
    for (int cidx = 1; cidx < total; ++cidx)
        if (scores[static_cast<std::size_t>(cidx)] > scores[static_cast<std::size_t>(best)]) best = cidx;
    if (!std::isfinite(scores[static_cast<std::size_t>(best)]))
        throw DegenerateInputError("register_to_ground_truth: no valid candidate");

    const Orientation o0 = grid.orientation(best / grid.m_d, best % grid.m_d);
    double params[6] = {o0.phi1, o0.phi2, o0.psi,
                        static_cast<double>(shifts[static_cast<std::size_t>(best)][0]),
                        static_cast<double>(shifts[static_cast<std::size_t>(best)][1]),
                        static_cast<double>(shifts[static_cast<std::size_t>(best)][2])};

    auto objective = [&](const double p[6]) {
        Pose pose;
        pose.orientation = Orientation::canonical(p[0], p[1], p[2]);
        pose.translation = {p[3], p[4], p[5]};
        const Volume aligned = apply_pose(recon, pose);
        return mutual_information_binned(gt_bins, rank_bins(to_std(aligned.data), kBins), kBins);
    };

    // Coordinate-wise line search until the sweep improvement drops below
    // 1e-4 bits; steps then halve down to 0.25 degrees / 0.05 voxels.
    const double deg = M_PI / 180.0;
    double steps[6] = {5.0 * deg, 5.0 * deg, 5.0 * deg, 0.5, 0.5, 0.5};
    double current = objective(params);
    for (int iter = 0; iter < 200; ++iter) {
        double sweep_gain = 0.0;
        for (int p = 0; p < 6; ++p) {
            for (const double dir : {+1.0, -1.0}) {
                double trial[6];
                std::copy(params, params + 6, trial);
                trial[p] += dir * steps[p];
                const double val = objective(trial);
                if (val > current) {
                    sweep_gain += val - current;
                    current = val;
                    std::copy(trial, trial + 6, params);
                }
            }
        }
        if (sweep_gain < 1e-4) {
            if (steps[0] <= 0.25 * deg && steps[3] <= 0.05) break;
            for (auto& s : steps) s *= 0.5;
        }
    }

    RegistrationResult result;
    result.pose.orientation = Orientation::canonical(params[0], params[1], params[2]);
    result.pose.translation = {params[3], params[4], params[5]};
    result.aligned = apply_pose(recon, result.pose);
    result.mi = current;
    return result;
}

void write_fsc_csv(const FscCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out << "radius,value\n";
    char buf[64];
    for (std::size_t i = 0; i < curve.radii.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", curve.radii[i], curve.values[i]);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_cfsc_csv(const CfscMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out << "phi1,phi2,resolution\n";
    char buf[96];
    for (int i2 = 0; i2 < map.n_phi2(); ++i2) {
        for (int i1 = 0; i1 < map.n_phi1(); ++i1) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", map.phi1s[static_cast<std::size_t>(i1)],
                          map.phi2s[static_cast<std::size_t>(i2)], map.at(i1, i2));
            out << buf;
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace spr
