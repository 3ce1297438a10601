#include "crunch/fft.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace crunch {

void fft_radix2(std::complex<double>* x, int n, std::size_t stride, bool inverse) {
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i * stride], x[j * stride]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / len * (inverse ? 1.0 : -1.0);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        auto& xa = x[(i + k) * stride];
        auto& xb = x[(i + k + len / 2) * stride];
        const auto u = xa, v = xb * w;
        xa = u + v;
        xb = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / n;
    for (int i = 0; i < n; ++i) x[i * stride] *= inv;
  }
}

bool fft_size_ok(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace crunch
