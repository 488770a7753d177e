#pragma once

#include "seqforge/image.hpp"

namespace seqforge {

// Morphological dilation with a Euclidean disc structuring element
// {(dy,dx) : dy^2+dx^2 <= radius^2}, applied `iterations` times. Extensive:
// the output is a superset of the input. radius 0 or iterations 0 returns a
// copy.
BinaryMask dilate(const BinaryMask& mask, int radius, int iterations = 1);

}  // namespace seqforge
