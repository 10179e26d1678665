#ifndef SPR_VOLUME_HPP
#define SPR_VOLUME_HPP

#include <complex>
#include <cstdlib>
#include <limits>
#include <new>
#include <vector>

#include "spr/errors.hpp"

namespace spr {

using cplx = std::complex<double>;

// 64-byte aligned storage so FFTW SIMD plans apply to every buffer.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::size_t alignment = 64;

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) {
        if (n == 0) return nullptr;
        const std::size_t bytes = ((n * sizeof(T) + alignment - 1) / alignment) * alignment;
        void* p = std::aligned_alloc(alignment, bytes);
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) { std::free(p); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const { return true; }
    template <typename U>
    bool operator!=(const AlignedAllocator<U>&) const { return false; }
};

template <typename T>
using avector = std::vector<T, AlignedAllocator<T>>;

struct Dims {
    int nx = 0, ny = 0, nz = 0;

    // Voxel count with overflow/positivity validation.
    std::size_t count() const {
        if (nx <= 0 || ny <= 0 || nz <= 0) throw SizeError("dims must be positive");
        const std::size_t limit = static_cast<std::size_t>(std::numeric_limits<int>::max());
        const std::size_t a = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
        if (a > limit / static_cast<std::size_t>(nz)) throw SizeError("grid size overflow");
        return a * static_cast<std::size_t>(nz);
    }

    bool cubic() const { return nx == ny && ny == nz; }

    bool operator==(const Dims& o) const { return nx == o.nx && ny == o.ny && nz == o.nz; }
    bool operator!=(const Dims& o) const { return !(*this == o); }
};

// Real scalar field on a regular grid. Layout: x fastest, z slowest
// (index = x + nx*(y + ny*z)).
struct Volume {
    Dims dims{};
    avector<double> data;

    Volume() = default;
    explicit Volume(Dims d) : dims(d), data(d.count(), 0.0) {}

    static Volume zeros(Dims d) { return Volume(d); }
    static Volume constant(Dims d, double v) {
        Volume r(d);
        for (auto& x : r.data) x = v;
        return r;
    }

    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims.nx) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims.ny) * static_cast<std::size_t>(z));
    }
    double& at(int x, int y, int z) { return data[index(x, y, z)]; }
    double at(int x, int y, int z) const { return data[index(x, y, z)]; }
};

// Complex spectrum of a Volume, same layout; frequencies follow the signed
// fftfreq convention per axis.
struct SpectralVolume {
    Dims dims{};
    avector<cplx> data;

    SpectralVolume() = default;
    explicit SpectralVolume(Dims d) : dims(d), data(d.count(), cplx{0.0, 0.0}) {}

    static SpectralVolume zeros(Dims d) { return SpectralVolume(d); }

    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims.nx) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims.ny) * static_cast<std::size_t>(z));
    }
    cplx& at(int x, int y, int z) { return data[index(x, y, z)]; }
    cplx at(int x, int y, int z) const { return data[index(x, y, z)]; }
};

// Signed frequency index of array position i (fftfreq convention: the
// Nyquist bin of an even axis is negative).
inline int freq_index(int i, int n) { return (i < (n + 1) / 2) ? i : i - n; }

// Signed spatial offset of array position i (centered convention: the
// half-way bin of an even axis stays positive, giving offsets in (-n/2, n/2]).
inline int centered_offset(int i, int n) { return (i <= n / 2) ? i : i - n; }

}  // namespace spr

#endif
