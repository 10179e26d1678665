#include "spr/shift.hpp"

#include <cmath>

#include "spr/errors.hpp"
#include "spr/fft.hpp"

namespace spr {
namespace detail {

CorrelationPeak phase_correlate_ws(const SpectralVolume& y_hat, const SpectralVolume& b_hat,
                                   PcWorkspace& ws) {
    if (y_hat.dims != b_hat.dims) throw ShapeError("phase_correlate: dimension mismatch");
    const std::size_t count = y_hat.dims.count();

    bool b_nonzero = false;
    for (const auto& z : b_hat.data)
        if (z != cplx{0.0, 0.0}) {
            b_nonzero = true;
            break;
        }
    if (!b_nonzero) throw DegenerateInputError("phase_correlate: reference spectrum is zero");

    ws.cross.resize(count);
    ws.surface.resize(count);

    double max_mag = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        ws.cross[i] = y_hat.data[i] * std::conj(b_hat.data[i]);
        max_mag = std::fmax(max_mag, std::abs(ws.cross[i]));
    }
    if (max_mag > 0.0) {
        const double eps = 1e-12 * max_mag;
        for (std::size_t i = 0; i < count; ++i) {
            const double mag = std::abs(ws.cross[i]);
            ws.cross[i] /= std::fmax(mag, eps);
        }
    }

    execute_ifft_unscaled(y_hat.dims, ws.cross.data(), ws.surface.data());

    const double scale = 1.0 / static_cast<double>(count);
    std::size_t best = 0;
    double best_val = ws.surface[0].real();
    for (std::size_t i = 1; i < count; ++i) {
        const double v = ws.surface[i].real();
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }

    const int nx = y_hat.dims.nx, ny = y_hat.dims.ny;
    const int ix = static_cast<int>(best % static_cast<std::size_t>(nx));
    const int iy = static_cast<int>((best / static_cast<std::size_t>(nx)) % static_cast<std::size_t>(ny));
    const int iz = static_cast<int>(best / (static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny)));

    CorrelationPeak peak;
    peak.t = {centered_offset(ix, nx), centered_offset(iy, ny), centered_offset(iz, y_hat.dims.nz)};
    peak.score = best_val * scale;
    return peak;
}

}  // namespace detail

CorrelationPeak phase_correlate(const SpectralVolume& y_hat, const SpectralVolume& b_hat) {
    detail::PcWorkspace ws;
    return detail::phase_correlate_ws(y_hat, b_hat, ws);
}

}  // namespace spr
