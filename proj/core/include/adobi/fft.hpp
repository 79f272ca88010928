#pragma once

#include "adobi/core_types.hpp"

namespace adobi {

// Unitary 2-D DFT: both directions carry 1/sqrt(H*W), so ifft2 is the exact
// adjoint (and inverse) of fft2. Plans are cached per shape; execution is
// safe to call concurrently on distinct images. DC sits at index (0, 0).
ComplexImage fft2(const ComplexImage& x);
ComplexImage ifft2(const ComplexImage& x);

// Centered variants: DC at (H/2, W/2), the layout of measured k-space, so a
// centered ACS block is the low-frequency region. Still unitary and exact
// adjoints of one another.
ComplexImage fft2c(const ComplexImage& x);
ComplexImage ifft2c(const ComplexImage& x);

// Circular shifts between the two layouts.
ComplexImage fftshift(const ComplexImage& x);
ComplexImage ifftshift(const ComplexImage& x);

}  // namespace adobi
