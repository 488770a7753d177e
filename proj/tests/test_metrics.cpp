#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "seqforge/image_io.hpp"
#include "seqforge/metrics.hpp"
#include "seqforge/rng.hpp"
#include "testutil.hpp"

using namespace seqforge;
using namespace seqforge::metrics;

namespace {

ProbMatrix random_prob_matrix(int n, int k, RngStream& rng) {
    ProbMatrix p(n, k);
    for (int i = 0; i < n; ++i) {
        double sum = 0;
        for (int j = 0; j < k; ++j) {
            p(i, j) = rng.uniform(0.01, 1.0);
            sum += p(i, j);
        }
        for (int j = 0; j < k; ++j) p(i, j) /= sum;
    }
    return p;
}

ImageGrid random_image(int h, int w, RngStream& rng) {
    ImageGrid img(h, w, 3);
    for (size_t i = 0; i < img.size(); ++i) img.data()[i] = float(rng.uniform());
    return img;
}

}  // namespace

// ---------------------------------------------------------------------------
// inception_score

TEST_CASE("inception score closed forms") {
    const int K = 5;
    ProbMatrix uniform = ProbMatrix::Constant(20, K, 1.0 / K);
    auto [mean_u, std_u] = inception_score(uniform, 4);
    CHECK(mean_u == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std_u == doctest::Approx(0.0).epsilon(1e-12));

    ProbMatrix onehot = ProbMatrix::Zero(K * 4, K);
    for (int i = 0; i < K * 4; ++i) onehot(i, i % K) = 1.0;
    auto [mean_o, std_o] = inception_score(onehot, 1);
    CHECK(mean_o == doctest::Approx(double(K)).epsilon(1e-12));
    CHECK(std_o == 0.0);
}

TEST_CASE("inception score matches a per-element KL loop oracle") {
    RngStream rng(2);
    ProbMatrix probs = random_prob_matrix(20, 5, rng);
    auto [mean, stddev] = inception_score(probs, 2);

    double scores[2];
    for (int s = 0; s < 2; ++s) {
        int lo = s * 10, hi = lo + 10;
        std::vector<double> marginal(5, 0.0);
        for (int i = lo; i < hi; ++i)
            for (int k = 0; k < 5; ++k) marginal[k] += probs(i, k) / 10.0;
        double mean_kl = 0;
        for (int i = lo; i < hi; ++i) {
            double kl = 0;
            for (int k = 0; k < 5; ++k)
                if (probs(i, k) > 0) kl += probs(i, k) * std::log(probs(i, k) / marginal[k]);
            mean_kl += kl / 10.0;
        }
        scores[s] = std::exp(mean_kl);
    }
    double oracle_mean = (scores[0] + scores[1]) / 2;
    double oracle_std = std::sqrt(((scores[0] - oracle_mean) * (scores[0] - oracle_mean) +
                                   (scores[1] - oracle_mean) * (scores[1] - oracle_mean)) /
                                  2);
    CHECK(mean == doctest::Approx(oracle_mean).epsilon(1e-9));
    CHECK(stddev == doctest::Approx(oracle_std).epsilon(1e-9));
}

TEST_CASE("inception score bounds and validation") {
    RngStream rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        ProbMatrix p = random_prob_matrix(12, 7, rng);
        auto [mean, stddev] = inception_score(p, 3);
        CHECK(mean >= 1.0 - 1e-9);
        CHECK(mean <= 7.0 + 1e-9);
    }

    ProbMatrix bad = ProbMatrix::Constant(4, 3, 0.5);  // rows sum to 1.5
    CHECK_THROWS_AS(inception_score(bad, 2), Error);
    ProbMatrix ok = ProbMatrix::Constant(4, 4, 0.25);
    CHECK_THROWS_AS(inception_score(ok, 5), Error);  // n_splits > N
    ProbMatrix neg = ok;
    neg(0, 0) = -0.25;
    neg(0, 1) = 0.75;
    CHECK_THROWS_AS(inception_score(neg, 2), Error);
}

// ---------------------------------------------------------------------------
// fit_gaussian

TEST_CASE("fit_gaussian hand arithmetic") {
    FeatureMatrix f(2, 2);
    f << 0, 0, 2, 0;
    GaussianStats stats = fit_gaussian(f);
    CHECK(stats.mean(0) == doctest::Approx(1.0));
    CHECK(stats.mean(1) == doctest::Approx(0.0));
    CHECK(stats.cov(0, 0) == doctest::Approx(2.0));
    CHECK(stats.cov(0, 1) == doctest::Approx(0.0));
    CHECK(stats.cov(1, 1) == doctest::Approx(0.0));

    FeatureMatrix same = FeatureMatrix::Constant(5, 3, 1.25);
    GaussianStats zeros = fit_gaussian(same);
    CHECK(zeros.cov.cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-12));

    FeatureMatrix one_row(1, 2);
    CHECK_THROWS_AS(fit_gaussian(one_row), Error);
}

TEST_CASE("fit_gaussian matches a naive two-pass covariance loop") {
    RngStream rng(4);
    FeatureMatrix f(50, 4);
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 4; ++j) f(i, j) = rng.normal(0.0, 2.0);
    GaussianStats stats = fit_gaussian(f);

    for (int a = 0; a < 4; ++a) {
        double mean_a = 0;
        for (int i = 0; i < 50; ++i) mean_a += f(i, a);
        mean_a /= 50;
        CHECK(stats.mean(a) == doctest::Approx(mean_a).epsilon(1e-12));
        for (int b = 0; b < 4; ++b) {
            double mean_b = 0;
            for (int i = 0; i < 50; ++i) mean_b += f(i, b);
            mean_b /= 50;
            double cov = 0;
            for (int i = 0; i < 50; ++i) cov += (f(i, a) - mean_a) * (f(i, b) - mean_b);
            cov /= 49;
            CHECK(std::abs(stats.cov(a, b) - cov) <= 1e-10);
        }
    }
    // symmetric PSD by construction
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(stats.cov);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
}

// ---------------------------------------------------------------------------
// frechet_distance

TEST_CASE("frechet distance closed forms") {
    GaussianStats a{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)};
    GaussianStats b{Eigen::VectorXd::Constant(1, 3.0), Eigen::MatrixXd::Identity(1, 1)};
    CHECK(frechet_distance(a, a) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(frechet_distance(a, b) == doctest::Approx(9.0).epsilon(1e-9));

    GaussianStats c{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
    GaussianStats d{Eigen::VectorXd::Zero(2), 4.0 * Eigen::MatrixXd::Identity(2, 2)};
    CHECK(frechet_distance(c, d) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("frechet distance is symmetric and validates inputs") {
    RngStream rng(5);
    FeatureMatrix fa(30, 3), fb(30, 3);
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 3; ++j) {
            fa(i, j) = rng.normal(0.0, 1.0);
            fb(i, j) = rng.normal(0.5, 1.5);
        }
    GaussianStats a = fit_gaussian(fa), b = fit_gaussian(fb);
    CHECK(std::abs(frechet_distance(a, b) - frechet_distance(b, a)) <= 1e-8);
    CHECK(frechet_distance(a, a) <= 1e-9);

    GaussianStats wrong_dim{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
    CHECK_THROWS_AS(frechet_distance(a, wrong_dim), Error);

    GaussianStats not_psd{Eigen::VectorXd::Zero(2), -Eigen::MatrixXd::Identity(2, 2)};
    GaussianStats id2{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
    CHECK_THROWS_AS(frechet_distance(not_psd, id2), Error);
}

// ---------------------------------------------------------------------------
// backend contract

TEST_CASE("backend rejects unregistered names") {
    CHECK_THROWS_AS(make_backend("inception-v3-pretrained"), ConfigError);
}

TEST_CASE("tiny convnet backend is deterministic, order-equivariant and batch independent") {
    auto backend = make_backend("tiny-convnet-v1");
    CHECK(backend->id() == "tiny-convnet-v1");
    RngStream rng(6);
    std::vector<ImageGrid> images;
    for (int i = 0; i < 5; ++i) images.push_back(random_image(40, 80, rng));

    FeatureMatrix f1 = backend->extract(images);
    FeatureMatrix f2 = backend->extract(images);
    CHECK((f1 - f2).cwiseAbs().maxCoeff() == 0.0);

    // permutation equivariance
    std::vector<ImageGrid> permuted{images[3], images[0], images[4], images[1], images[2]};
    FeatureMatrix fp = backend->extract(permuted);
    const int perm[5] = {3, 0, 4, 1, 2};
    for (int i = 0; i < 5; ++i)
        CHECK((fp.row(i) - f1.row(perm[i])).cwiseAbs().maxCoeff() <= 1e-6);

    // batch-size independence: one-by-one equals all-at-once
    for (int i = 0; i < 5; ++i) {
        FeatureMatrix single = backend->extract({images[i]});
        CHECK((single.row(0) - f1.row(i)).cwiseAbs().maxCoeff() <= 1e-6);
    }

    ProbMatrix probs = backend->classify(images);
    for (int i = 0; i < probs.rows(); ++i)
        CHECK(probs.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
}

// ---------------------------------------------------------------------------
// evaluate_dirs

TEST_CASE("evaluate_dirs: identical directories score zero FID") {
    testutil::TempDir tmp("metrics_same");
    RngStream rng(7);
    for (int i = 0; i < 12; ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "%03d.png", i);
        write_png(tmp.file(name), random_image(32, 64, rng));
    }
    auto backend = make_backend("tiny-convnet-v1");
    MetricReport report = evaluate_dirs(tmp.path(), tmp.path(), *backend, 3);
    CHECK(report.fid <= 1e-6);
    CHECK(report.n_generated == 12);
    CHECK(report.n_reference == 12);
    CHECK(report.n_splits == 3);
    CHECK(report.extractor_id == "tiny-convnet-v1");
    CHECK(report.inception_mean >= 1.0 - 1e-9);

    std::string json = report.to_json();
    CHECK(json.find("tiny-convnet-v1") != std::string::npos);
}

TEST_CASE("evaluate_dirs: constant pixel shift strictly increases FID") {
    testutil::TempDir base("metrics_base"), shifted("metrics_shift");
    RngStream rng(8);
    for (int i = 0; i < 12; ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "%03d.png", i);
        ImageGrid img = random_image(32, 64, rng);
        write_png(base.file(name), img);
        ImageGrid moved = img;
        for (size_t p = 0; p < moved.size(); ++p)
            moved.data()[p] = std::min(1.f, moved.data()[p] * 0.75f + 0.2f);
        write_png(shifted.file(name), moved);
    }
    auto backend = make_backend("tiny-convnet-v1");
    MetricReport same = evaluate_dirs(base.path(), base.path(), *backend, 2);
    MetricReport moved = evaluate_dirs(shifted.path(), base.path(), *backend, 2);
    CHECK(moved.fid > same.fid + 1e-4);  // probe margin pinned from measurement
}

TEST_CASE("evaluate_dirs propagates missing directories") {
    testutil::TempDir tmp("metrics_missing");
    auto backend = make_backend("tiny-convnet-v1");
    CHECK_THROWS_AS(evaluate_dirs(tmp.path() + "/nope", tmp.path(), *backend, 2),
                    RuntimeFailure);
}
