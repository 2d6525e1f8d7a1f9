#include "spinr/kernels.hpp"

#include <cmath>
#include <numbers>

namespace spinr::kernels {

void sine(const double* __restrict z, double* __restrict out, std::size_t n,
          double omega) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) out[i] = std::sin(omega * z[i]);
}

void sine_backward(const double* __restrict z, const double* __restrict upstream,
                   double* __restrict dz, std::size_t n, double omega) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i)
    dz[i] = upstream[i] * omega * std::cos(omega * z[i]);
}

void sin_cos_2pi(const double* __restrict z, double* __restrict sin_out,
                 double* __restrict cos_out, std::size_t n) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) {
    sin_out[i] = std::sin(kTwoPi * z[i]);
    cos_out[i] = std::cos(kTwoPi * z[i]);
  }
}

}  // namespace spinr::kernels
