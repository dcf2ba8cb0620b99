// Unitary discrete Fourier transform helpers.
//
// F has entries F(j, k) = exp(-2*pi*i*j*k/n) / sqrt(n), so F is symmetric and unitary and
// the circular convolution satisfies x (*) y = sqrt(n) * F^* (F x .* F y).
#pragma once

#include "sbd/types.hpp"

namespace sbd::dft {

/// y = F x
CVec forward(const CVec& x);

/// y = F^* x
CVec inverse(const CVec& x);

/// Dense unitary DFT matrix. Meant for oracles at small n.
CMat matrix(Eigen::Index n);

/// Circular convolution (x (*) y)_k = sum_j x_j y_{(k - j) mod n}, computed through the FFT.
CVec circular_convolution(const CVec& x, const CVec& y);

}  // namespace sbd::dft
