#include "spr/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace spr {
namespace detail {
namespace {

// One forward/backward plan pair per grid size. Plan creation is serialized
// (FFTW requirement); execution through fftw_execute_dft is thread-safe on
// distinct arrays. FFTW_ESTIMATE keeps plan selection deterministic.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    struct Entry {
        fftw_plan forward;   // kernel e^{+i omega.x} (FFTW_BACKWARD)
        fftw_plan backward;  // kernel e^{-i omega.x} (FFTW_FORWARD)
    };

    Entry get(const Dims& d) {
        const auto key = std::make_tuple(d.nx, d.ny, d.nz);
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;

        const std::size_t n = d.count();
        avector<cplx> a(n), b(n);
        auto* pa = reinterpret_cast<fftw_complex*>(a.data());
        auto* pb = reinterpret_cast<fftw_complex*>(b.data());
        // FFTW's fastest-varying dimension is the last argument; our x is fastest.
        Entry e;
        e.forward = fftw_plan_dft_3d(d.nz, d.ny, d.nx, pa, pb, FFTW_BACKWARD, FFTW_ESTIMATE);
        e.backward = fftw_plan_dft_3d(d.nz, d.ny, d.nx, pa, pb, FFTW_FORWARD, FFTW_ESTIMATE);
        plans_.emplace(key, e);
        return e;
    }

private:
    PlanCache() = default;
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, Entry> plans_;
};

}  // namespace

void execute_fft(const Dims& dims, const cplx* in, cplx* out) {
    auto entry = PlanCache::instance().get(dims);
    fftw_execute_dft(entry.forward, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

void execute_ifft_unscaled(const Dims& dims, const cplx* in, cplx* out) {
    auto entry = PlanCache::instance().get(dims);
    fftw_execute_dft(entry.backward, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

}  // namespace detail

SpectralVolume fft(const Volume& v) {
    const std::size_t n = v.dims.count();
    avector<cplx> in(n);
    for (std::size_t i = 0; i < n; ++i) in[i] = cplx{v.data[i], 0.0};
    SpectralVolume out(v.dims);
    detail::execute_fft(v.dims, in.data(), out.data.data());
    return out;
}

SpectralVolume ifft_complex(const SpectralVolume& s) {
    const std::size_t n = s.dims.count();
    SpectralVolume out(s.dims);
    detail::execute_ifft_unscaled(s.dims, s.data.data(), out.data.data());
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& z : out.data) z *= scale;
    return out;
}

Volume ifft(const SpectralVolume& s) {
    SpectralVolume c = ifft_complex(s);
    double max_re = 0.0, max_im = 0.0;
    for (const auto& z : c.data) {
        max_re = std::fmax(max_re, std::fabs(z.real()));
        max_im = std::fmax(max_im, std::fabs(z.imag()));
    }
    if (max_im > 1e-8 * max_re)
        throw SymmetryError("spectrum is not Hermitian: imaginary residual " + std::to_string(max_im) +
                            " vs max real " + std::to_string(max_re));
    Volume out(s.dims);
    for (std::size_t i = 0; i < c.data.size(); ++i) out.data[i] = c.data[i].real();
    return out;
}

}  // namespace spr
