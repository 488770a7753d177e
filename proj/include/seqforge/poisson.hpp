#pragma once

#include "seqforge/image.hpp"

namespace seqforge {

// Gradient-domain blend: inside the mask the result solves the discrete
// Poisson equation on the 5-point Laplacian with the source's gradients as
// guidance field and the destination as Dirichlet boundary; outside the mask
// the destination is copied bit-exactly. Solved per channel by conjugate
// gradients (warm-started at the source) until the residual infinity-norm
// drops to `tol`; values are clamped to [0,1].
//
// Throws RuntimeFailure carrying the final residual when the iteration cap
// is reached.
ImageGrid poisson_blend(const ImageGrid& source, const ImageGrid& destination,
                        const BinaryMask& mask, double tol = 1e-5, int max_iterations = 10000);

}  // namespace seqforge
