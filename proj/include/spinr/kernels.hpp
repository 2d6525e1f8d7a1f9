#pragma once

#include <cstddef>

// Elementwise activation kernels. These live in their own translation unit
// so that they can be vectorized; every sine evaluation in the library goes
// through here, which keeps forward passes, gradients and finite-difference
// checks consistent with one another.
namespace spinr::kernels {

/// out[i] = sin(omega * z[i])
void sine(const double* z, double* out, std::size_t n, double omega);

/// dz[i] = upstream[i] * omega * cos(omega * z[i])
void sine_backward(const double* z, const double* upstream, double* dz,
                   std::size_t n, double omega);

/// sin_out[i] = sin(2*pi*z[i]), cos_out[i] = cos(2*pi*z[i])
void sin_cos_2pi(const double* z, double* sin_out, double* cos_out,
                 std::size_t n);

}  // namespace spinr::kernels
