#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "seqforge/image.hpp"

namespace seqforge {
namespace metrics {

// Rows are per-image class distributions p(y|x); rows must be non-negative
// and sum to 1 within 1e-6.
using ProbMatrix = Eigen::MatrixXd;
// Rows are per-image embeddings.
using FeatureMatrix = Eigen::MatrixXd;

struct GaussianStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;  // symmetric PSD (within tolerance)
};

struct MetricReport {
    double inception_mean = 0, inception_std = 0;
    double fid = 0;
    std::string extractor_id;
    int n_generated = 0, n_reference = 0, n_splits = 0;

    std::string to_json() const;
};

// exp(mean KL(p(y|x) || p_bar)) per contiguous split; returns (mean,
// population std) across splits. Zero probabilities contribute zero KL mass.
std::pair<double, double> inception_score(const ProbMatrix& probs, int n_splits);

// Column means and unbiased sample covariance (divisor N-1), symmetrized.
GaussianStats fit_gaussian(const FeatureMatrix& features);

// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^{1/2}); the square root is taken
// on the symmetrized product via eigendecomposition, eigenvalues in
// [-1e-8, 0) clamp to zero and more negative ones raise an error. Results
// within -1e-6 of zero clamp to zero.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

// Classifier / feature-extractor backend. Implementations must be
// deterministic, order-equivariant and batch-size independent.
class FeatureBackend {
public:
    virtual ~FeatureBackend() = default;
    virtual std::string id() const = 0;
    virtual int feature_dim() const = 0;
    virtual int num_classes() const = 0;
    // Images are [0,1], any extent, 1 or 3 channels; one row per image.
    virtual FeatureMatrix extract(const std::vector<ImageGrid>& images) = 0;
    virtual ProbMatrix classify(const std::vector<ImageGrid>& images) = 0;
};

// Registered backends: "tiny-convnet-v1" (built-in, fixed-seed small
// convnet for self-contained evaluation). The standard pretrained Inception
// network can be plugged in through this interface by the operator.
std::unique_ptr<FeatureBackend> make_backend(const std::string& name);

// Lists PNGs lexicographically in both directories, classifies the generated
// set for the Inception score and compares embeddings for the FID.
MetricReport evaluate_dirs(const std::string& generated_dir, const std::string& reference_dir,
                           FeatureBackend& backend, int n_splits);

std::vector<std::string> list_pngs(const std::string& dir);

}  // namespace metrics
}  // namespace seqforge
