#pragma once

#include <complex>
#include <cstddef>

namespace crunch {

// In-place complex radix-2 FFT along a strided axis.  `n` must be a power of
// two.  The inverse transform includes the 1/n normalization, so
// fft_radix2(x, n, s, false) followed by fft_radix2(x, n, s, true) is the
// identity up to roundoff.  Used by the elliptic preconditioner and by the
// per-row angular mode filter in the grid time stepper.
void fft_radix2(std::complex<double>* x, int n, std::size_t stride, bool inverse);

// True when n is a power of two (and positive); callers branch to a direct
// O(n^2) transform otherwise.
bool fft_size_ok(int n);

}  // namespace crunch
