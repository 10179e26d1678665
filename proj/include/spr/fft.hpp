#ifndef SPR_FFT_HPP
#define SPR_FFT_HPP

#include "spr/volume.hpp"

namespace spr {

// DFT convention: the forward transform uses the kernel e^{+i omega.x} per
// axis and is unnormalized; the inverse uses e^{-i omega.x} scaled by 1/N.
// With omega_k = 2*pi*k/n on the signed fftfreq index set, multiplying a
// spectrum by e^{+i t.omega} then translates the field by +t (f(x - t)).

SpectralVolume fft(const Volume& v);

// Inverse transform of a Hermitian spectrum. The imaginary residual is
// checked (max |Im| < 1e-8 * max |Re|) and discarded; violations raise
// SymmetryError.
Volume ifft(const SpectralVolume& s);

// Inverse transform without the realness contract (phase-correlation
// surfaces and diagnostics).
SpectralVolume ifft_complex(const SpectralVolume& s);

namespace detail {

// Plan-cache backed executors; in/out must be distinct 64-byte aligned
// buffers of dims.count() complex values. Thread-safe.
void execute_fft(const Dims& dims, const cplx* in, cplx* out);
void execute_ifft_unscaled(const Dims& dims, const cplx* in, cplx* out);

}  // namespace detail

}  // namespace spr

#endif
