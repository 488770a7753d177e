#include "seqforge/morphology.hpp"

#include <utility>
#include <vector>

#include "seqforge/error.hpp"

namespace seqforge {

BinaryMask dilate(const BinaryMask& mask, int radius, int iterations) {
    if (radius < 0 || iterations < 0) throw Error("dilate: radius/iterations must be >= 0");
    if (radius == 0 || iterations == 0) return mask;

    std::vector<std::pair<int, int>> offsets;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dy * dy + dx * dx <= radius * radius) offsets.emplace_back(dy, dx);

    const int H = mask.height(), W = mask.width();
    BinaryMask cur = mask;
    for (int it = 0; it < iterations; ++it) {
        BinaryMask next(H, W);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                if (!cur.at(y, x)) continue;
                for (auto [dy, dx] : offsets) {
                    int ny = y + dy, nx = x + dx;
                    if (ny >= 0 && nx >= 0 && ny < H && nx < W) next.at(ny, nx) = 1;
                }
            }
        cur = std::move(next);
    }
    return cur;
}

}  // namespace seqforge
