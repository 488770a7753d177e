#include "seqforge/transform.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "seqforge/error.hpp"

namespace seqforge {

namespace {

using Mat3 = Eigen::Matrix3d;

// Homography mapping the four source corners onto the four destination
// corners (direct linear transform with h33 = 1).
Mat3 homography_from_corners(const std::array<std::array<double, 2>, 4>& src,
                             const std::array<std::array<double, 2>, 4>& dst) {
    Eigen::Matrix<double, 8, 8> A = Eigen::Matrix<double, 8, 8>::Zero();
    Eigen::Matrix<double, 8, 1> b;
    for (int i = 0; i < 4; ++i) {
        double x = src[i][0], y = src[i][1];
        double u = dst[i][0], v = dst[i][1];
        A.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
        A.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
        b(2 * i) = u;
        b(2 * i + 1) = v;
    }
    Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(A);
    if (!lu.isInvertible()) throw RuntimeFailure("transform: degenerate corner correspondence");
    Eigen::Matrix<double, 8, 1> h = lu.solve(b);
    Mat3 H;
    H << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
    return H;
}

}  // namespace

TransformParams sample_transform(const TransformConfig& cfg, RngStream& rng) {
    TransformParams p;
    p.rotation_deg = float(rng.uniform(-cfg.rotation_max_deg, cfg.rotation_max_deg));
    p.shear = float(rng.uniform(-cfg.shear_max, cfg.shear_max));
    p.scale = float(rng.uniform(cfg.scale_min, cfg.scale_max));
    for (auto& corner : p.perspective) {
        corner[0] = float(rng.uniform(-cfg.perspective_max_px, cfg.perspective_max_px));
        corner[1] = float(rng.uniform(-cfg.perspective_max_px, cfg.perspective_max_px));
    }
    return p;
}

void apply_random_transform(const ImageGrid& image, const BinaryMask& mask,
                            const TransformParams& params, ImageGrid& out_image,
                            BinaryMask& out_mask) {
    if (image.height() != mask.height() || image.width() != mask.width())
        throw Error("apply_random_transform: image/mask extent mismatch");

    const double w = image.width(), h = image.height();
    const double cx = w / 2.0, cy = h / 2.0;
    const double rad = params.rotation_deg * M_PI / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);

    // Affine part about the image centre: rotation * shear * scale.
    Eigen::Matrix2d R, Sh, Sc;
    R << cs, -sn, sn, cs;
    Sh << 1, params.shear, 0, 1;
    Sc << params.scale, 0, 0, params.scale;
    Eigen::Matrix2d M = R * Sh * Sc;

    std::array<std::array<double, 2>, 4> src{{{0, 0}, {w, 0}, {w, h}, {0, h}}};
    std::array<std::array<double, 2>, 4> dst;
    for (int i = 0; i < 4; ++i) {
        Eigen::Vector2d p(src[i][0] - cx, src[i][1] - cy);
        Eigen::Vector2d q = M * p;
        dst[i] = {q.x() + cx + params.perspective[i][0], q.y() + cy + params.perspective[i][1]};
    }

    Mat3 H = homography_from_corners(src, dst);
    if (std::abs(H.determinant()) < 1e-9)
        throw RuntimeFailure("transform: homography is not invertible");

    // Grow the output canvas so no ink is clipped.
    double min_x = 1e30, min_y = 1e30, max_x = -1e30, max_y = -1e30;
    for (const auto& d : dst) {
        min_x = std::min(min_x, d[0]);
        max_x = std::max(max_x, d[0]);
        min_y = std::min(min_y, d[1]);
        max_y = std::max(max_y, d[1]);
    }
    const int off_x = int(std::floor(min_x));
    const int off_y = int(std::floor(min_y));
    const int out_w = std::max(1, int(std::ceil(max_x)) - off_x);
    const int out_h = std::max(1, int(std::ceil(max_y)) - off_y);

    Mat3 Hinv = H.inverse();
    out_image = ImageGrid(out_h, out_w, image.channels(), 0.f);
    out_mask = BinaryMask(out_h, out_w);

    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            Eigen::Vector3d q(x + off_x, y + off_y, 1.0);
            Eigen::Vector3d s = Hinv * q;
            if (std::abs(s.z()) < 1e-12) continue;
            double sx = s.x() / s.z(), sy = s.y() / s.z();
            int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
            double fx = sx - x0, fy = sy - y0;
            if (x0 < -1 || y0 < -1 || x0 > image.width() - 1 || y0 > image.height() - 1)
                continue;
            auto sample = [&](int yy, int xx, int c) -> double {
                if (yy < 0 || xx < 0 || yy >= image.height() || xx >= image.width()) return 0.0;
                return image.at(yy, xx, c);
            };
            for (int c = 0; c < image.channels(); ++c) {
                double v = sample(y0, x0, c) * (1 - fx) * (1 - fy) +
                           sample(y0, x0 + 1, c) * fx * (1 - fy) +
                           sample(y0 + 1, x0, c) * (1 - fx) * fy +
                           sample(y0 + 1, x0 + 1, c) * fx * fy;
                out_image.at(y, x, c) = float(v);
            }
            auto msample = [&](int yy, int xx) -> double {
                if (yy < 0 || xx < 0 || yy >= mask.height() || xx >= mask.width()) return 0.0;
                return mask.at(yy, xx);
            };
            double mv = msample(y0, x0) * (1 - fx) * (1 - fy) +
                        msample(y0, x0 + 1) * fx * (1 - fy) +
                        msample(y0 + 1, x0) * (1 - fx) * fy + msample(y0 + 1, x0 + 1) * fx * fy;
            out_mask.at(y, x) = mv > 0.5 ? 1 : 0;
        }
    }
}

TransformParams apply_sampled_transform(const ImageGrid& image, const BinaryMask& mask,
                                        const TransformConfig& cfg, RngStream& rng,
                                        ImageGrid& out_image, BinaryMask& out_mask) {
    for (int attempt = 0; attempt < 5; ++attempt) {
        TransformParams params = sample_transform(cfg, rng);
        try {
            apply_random_transform(image, mask, params, out_image, out_mask);
            return params;
        } catch (const RuntimeFailure&) {
            continue;  // degenerate draw, resample
        }
    }
    throw RuntimeFailure("transform: degenerate homography after 5 retries");
}

}  // namespace seqforge
