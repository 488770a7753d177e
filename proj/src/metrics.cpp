#include "seqforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "seqforge/error.hpp"
#include "seqforge/image_io.hpp"
#include "seqforge/layers.hpp"
#include "seqforge/rng.hpp"

namespace seqforge {
namespace metrics {

namespace fs = std::filesystem;

std::string MetricReport::to_json() const {
    nlohmann::json j;
    j["inception_mean"] = inception_mean;
    j["inception_std"] = inception_std;
    j["fid"] = fid;
    j["extractor_id"] = extractor_id;
    j["n_generated"] = n_generated;
    j["n_reference"] = n_reference;
    j["n_splits"] = n_splits;
    return j.dump(2);
}

std::pair<double, double> inception_score(const ProbMatrix& probs, int n_splits) {
    const int N = int(probs.rows()), K = int(probs.cols());
    if (N < 1 || K < 1) throw Error("inception_score: empty probability matrix");
    if (n_splits < 1 || n_splits > N)
        throw Error("inception_score: n_splits must lie in [1, N]");
    for (int i = 0; i < N; ++i) {
        double sum = 0;
        for (int k = 0; k < K; ++k) {
            if (probs(i, k) < 0) throw Error("inception_score: negative probability");
            sum += probs(i, k);
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw Error("inception_score: row " + std::to_string(i) + " sums to " +
                        std::to_string(sum));
    }

    std::vector<double> scores(n_splits);
    for (int s = 0; s < n_splits; ++s) {
        const int lo = int(size_t(s) * N / n_splits);
        const int hi = int(size_t(s + 1) * N / n_splits);
        Eigen::VectorXd marginal = Eigen::VectorXd::Zero(K);
        for (int i = lo; i < hi; ++i) marginal += probs.row(i).transpose();
        marginal /= double(hi - lo);
        double mean_kl = 0;
        for (int i = lo; i < hi; ++i) {
            double kl = 0;
            for (int k = 0; k < K; ++k) {
                double p = probs(i, k);
                if (p > 0) kl += p * std::log(p / marginal(k));
            }
            mean_kl += kl;
        }
        mean_kl /= double(hi - lo);
        scores[s] = std::exp(mean_kl);
    }
    double mean = 0;
    for (double v : scores) mean += v;
    mean /= n_splits;
    double var = 0;
    for (double v : scores) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / n_splits)};  // population std over splits
}

GaussianStats fit_gaussian(const FeatureMatrix& features) {
    const int N = int(features.rows()), d = int(features.cols());
    if (N < 2) throw Error("fit_gaussian: need at least 2 samples");
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < d; ++j)
            if (!std::isfinite(features(i, j))) throw Error("fit_gaussian: non-finite feature");
    GaussianStats stats;
    stats.mean = features.colwise().mean();
    Eigen::MatrixXd centered = features.rowwise() - stats.mean.transpose();
    stats.cov = (centered.transpose() * centered) / double(N - 1);
    stats.cov = ((stats.cov + stats.cov.transpose()) / 2.0).eval();
    return stats;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
    if (a.mean.size() != b.mean.size()) throw Error("frechet_distance: dimension mismatch");
    const double mean_term = (a.mean - b.mean).squaredNorm();

    Eigen::MatrixXd product = a.cov * b.cov;
    Eigen::MatrixXd sym = (product + product.transpose()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) throw Error("frechet_distance: eigendecomposition failed");

    double sqrt_trace = 0;
    for (int i = 0; i < eig.eigenvalues().size(); ++i) {
        double lambda = eig.eigenvalues()(i);
        if (lambda < -1e-8)
            throw Error("frechet_distance: covariance product eigenvalue " +
                        std::to_string(lambda) + " below tolerance");
        if (lambda < 0) lambda = 0;
        sqrt_trace += std::sqrt(lambda);
    }

    double fid = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * sqrt_trace;
    if (fid < -1e-6) throw Error("frechet_distance: negative distance " + std::to_string(fid));
    return std::max(fid, 0.0);
}

// ---------------------------------------------------------------------------
// Built-in backend: fixed-seed tiny convnet

namespace {

using nn::Context;
using nn::Tensor;

// Three stride-2 convolutions with PReLU, global average pooling into a
// 32-d embedding, and a linear softmax head over 10 classes. Weights are a
// pure function of the fixed seed, so the backend is a stable measuring
// stick rather than a trained classifier.
class TinyConvnetBackend : public FeatureBackend {
public:
    TinyConvnetBackend()
        : conv1_(3, 8, 3, 2, 1),
          conv2_(8, 16, 3, 2, 1),
          conv3_(16, 32, 3, 2, 1),
          act1_(8),
          act2_(16),
          act3_(32),
          head_(32, 10, 1, 1, 0) {
        RngStream rng(0x7E57BACC);
        conv1_.init(rng, 0.18f);
        conv2_.init(rng, 0.12f);
        conv3_.init(rng, 0.09f);
        head_.init(rng, 0.45f);
    }

    std::string id() const override { return "tiny-convnet-v1"; }
    int feature_dim() const override { return 32; }
    int num_classes() const override { return 10; }

    FeatureMatrix extract(const std::vector<ImageGrid>& images) override {
        FeatureMatrix out(images.size(), feature_dim());
        for (size_t i = 0; i < images.size(); ++i) {
            Eigen::VectorXd f = embed(images[i]);
            out.row(int(i)) = f.transpose();
        }
        return out;
    }

    ProbMatrix classify(const std::vector<ImageGrid>& images) override {
        ProbMatrix out(images.size(), num_classes());
        for (size_t i = 0; i < images.size(); ++i) {
            Eigen::VectorXd f = embed(images[i]);
            Tensor pooled(1, feature_dim(), 1, 1);
            for (int c = 0; c < feature_dim(); ++c) pooled(0, c, 0, 0) = float(f(c));
            Context ctx;
            Tensor logits = head_.forward(pooled, ctx);
            double max_logit = -1e30;
            for (int k = 0; k < num_classes(); ++k)
                max_logit = std::max(max_logit, double(logits(0, k, 0, 0)));
            double denom = 0;
            Eigen::VectorXd e(num_classes());
            for (int k = 0; k < num_classes(); ++k) {
                e(k) = std::exp(double(logits(0, k, 0, 0)) - max_logit);
                denom += e(k);
            }
            out.row(int(i)) = (e / denom).transpose();
        }
        return out;
    }

private:
    Eigen::VectorXd embed(const ImageGrid& image) {
        ImageGrid rgb = image.channels() == 1 ? replicate_channels(image) : image;
        ImageGrid resized = resize_bilinear(rgb, kInputH, kInputW);
        Tensor x(1, 3, kInputH, kInputW);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < kInputH; ++y)
                for (int xx = 0; xx < kInputW; ++xx) x(0, c, y, xx) = resized.at(y, xx, c);
        Context ctx;  // eval mode
        Tensor h = act1_.forward(conv1_.forward(x, ctx), ctx);
        h = act2_.forward(conv2_.forward(h, ctx), ctx);
        h = act3_.forward(conv3_.forward(h, ctx), ctx);
        Eigen::VectorXd f(feature_dim());
        const int plane = h.h() * h.w();
        for (int c = 0; c < h.c(); ++c) {
            double acc = 0;
            const float* p = h.sample(0) + size_t(c) * plane;
            for (int i = 0; i < plane; ++i) acc += p[i];
            f(c) = acc / plane;
        }
        return f;
    }

    static constexpr int kInputH = 32, kInputW = 64;
    nn::Conv2d conv1_, conv2_, conv3_;
    nn::PReLU act1_, act2_, act3_;
    nn::Conv2d head_;
};

}  // namespace

std::unique_ptr<FeatureBackend> make_backend(const std::string& name) {
    if (name == "tiny-convnet-v1" || name == "tiny-convnet")
        return std::make_unique<TinyConvnetBackend>();
    throw ConfigError("metrics: unregistered backend '" + name + "'");
}

std::vector<std::string> list_pngs(const std::string& dir) {
    if (!fs::is_directory(dir)) throw RuntimeFailure("metrics: not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png")
            files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    return files;
}

MetricReport evaluate_dirs(const std::string& generated_dir, const std::string& reference_dir,
                           FeatureBackend& backend, int n_splits) {
    auto gen_files = list_pngs(generated_dir);
    auto ref_files = list_pngs(reference_dir);
    if (gen_files.empty()) throw RuntimeFailure("metrics: no PNGs in " + generated_dir);
    if (ref_files.empty()) throw RuntimeFailure("metrics: no PNGs in " + reference_dir);

    auto load_all = [](const std::vector<std::string>& files) {
        std::vector<ImageGrid> images;
        images.reserve(files.size());
        for (const auto& f : files) images.push_back(read_png(f));
        return images;
    };
    std::vector<ImageGrid> generated = load_all(gen_files);
    std::vector<ImageGrid> reference = load_all(ref_files);

    MetricReport report;
    report.extractor_id = backend.id();
    report.n_generated = int(generated.size());
    report.n_reference = int(reference.size());
    report.n_splits = std::min<int>(n_splits, int(generated.size()));

    auto [is_mean, is_std] = inception_score(backend.classify(generated), report.n_splits);
    report.inception_mean = is_mean;
    report.inception_std = is_std;

    GaussianStats ga = fit_gaussian(backend.extract(generated));
    GaussianStats gb = fit_gaussian(backend.extract(reference));
    report.fid = frechet_distance(ga, gb);
    return report;
}

}  // namespace metrics
}  // namespace seqforge
