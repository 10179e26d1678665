#ifndef SPR_SHIFT_HPP
#define SPR_SHIFT_HPP

#include <array>

#include "spr/grid.hpp"
#include "spr/volume.hpp"

namespace spr {

// Integer translation located by phase correlation, components in
// (-n/2, n/2] per axis; score is the correlation surface value at the peak.
struct CorrelationPeak {
    std::array<int, 3> t{0, 0, 0};
    double score = 0.0;

    Translation translation() const {
        return {static_cast<double>(t[0]), static_cast<double>(t[1]), static_cast<double>(t[2])};
    }
};

// Normalized phase correlation: C = y_hat . conj(b_hat) / max(|.|, eps) with
// eps = 1e-12 * max |y_hat . conj(b_hat)|; returns the spatial argmax of
// Re(ifft(C)) as a signed integer translation t satisfying y ~ T_t(b).
// b_hat identically zero raises DegenerateInputError.
CorrelationPeak phase_correlate(const SpectralVolume& y_hat, const SpectralVolume& b_hat);

namespace detail {

struct PcWorkspace {
    avector<cplx> cross;
    avector<cplx> surface;
};

CorrelationPeak phase_correlate_ws(const SpectralVolume& y_hat, const SpectralVolume& b_hat,
                                   PcWorkspace& ws);

}  // namespace detail

}  // namespace spr

#endif
