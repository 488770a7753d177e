#include "seqforge/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "seqforge/error.hpp"

namespace seqforge {

namespace {

constexpr int kDy[4] = {-1, 1, 0, 0};
constexpr int kDx[4] = {0, 0, -1, 1};

}  // namespace

ImageGrid poisson_blend(const ImageGrid& source, const ImageGrid& destination,
                        const BinaryMask& mask, double tol, int max_iterations) {
    if (!source.same_extents(destination) || source.height() != mask.height() ||
        source.width() != mask.width())
        throw Error("poisson_blend: extent mismatch");

    const int H = source.height(), W = source.width(), C = source.channels();
    ImageGrid out = destination;

    // Index the interior unknowns.
    std::vector<int> index(size_t(H) * W, -1);
    std::vector<int> ys, xs;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (mask.at(y, x)) {
                index[size_t(y) * W + x] = int(ys.size());
                ys.push_back(y);
                xs.push_back(x);
            }
    const int n = int(ys.size());
    if (n == 0) return out;

    // A x = b with A the masked 5-point Laplacian (diagonal = number of
    // in-canvas neighbours, off-diagonal -1 for interior neighbours).
    auto apply_A = [&](const std::vector<double>& v, std::vector<double>& into) {
        for (int i = 0; i < n; ++i) {
            const int y = ys[i], x = xs[i];
            double acc = 0;
            int degree = 0;
            for (int k = 0; k < 4; ++k) {
                int ny = y + kDy[k], nx = x + kDx[k];
                if (ny < 0 || nx < 0 || ny >= H || nx >= W) continue;
                ++degree;
                int j = index[size_t(ny) * W + nx];
                if (j >= 0) acc -= v[j];
            }
            into[i] = degree * v[i] + acc;
        }
    };

    std::vector<double> b(n), x(n), r(n), p(n), Ap(n);
    for (int c = 0; c < C; ++c) {
        for (int i = 0; i < n; ++i) {
            const int y = ys[i], px = xs[i];
            double rhs = 0;
            for (int k = 0; k < 4; ++k) {
                int ny = y + kDy[k], nx = px + kDx[k];
                if (ny < 0 || nx < 0 || ny >= H || nx >= W) continue;
                rhs += double(source.at(y, px, c)) - double(source.at(ny, nx, c));
                if (!mask.at(ny, nx)) rhs += destination.at(ny, nx, c);
            }
            b[i] = rhs;
            x[i] = source.at(y, px, c);  // warm start at the guidance image
        }

        apply_A(x, Ap);
        double rmax = 0;
        for (int i = 0; i < n; ++i) {
            r[i] = b[i] - Ap[i];
            rmax = std::max(rmax, std::abs(r[i]));
        }
        p = r;
        double rs_old = 0;
        for (int i = 0; i < n; ++i) rs_old += r[i] * r[i];

        int iter = 0;
        while (rmax > tol) {
            if (iter++ >= max_iterations)
                throw RuntimeFailure("poisson_blend: no convergence after " +
                                     std::to_string(max_iterations) +
                                     " iterations (residual " + std::to_string(rmax) + ")");
            apply_A(p, Ap);
            double pAp = 0;
            for (int i = 0; i < n; ++i) pAp += p[i] * Ap[i];
            if (pAp <= 0) break;  // numerically exhausted
            double alpha = rs_old / pAp;
            rmax = 0;
            double rs_new = 0;
            for (int i = 0; i < n; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * Ap[i];
                rs_new += r[i] * r[i];
                rmax = std::max(rmax, std::abs(r[i]));
            }
            double beta = rs_new / rs_old;
            rs_old = rs_new;
            for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        }

        for (int i = 0; i < n; ++i)
            out.at(ys[i], xs[i], c) = float(std::clamp(x[i], 0.0, 1.0));
    }
    return out;
}

}  // namespace seqforge
