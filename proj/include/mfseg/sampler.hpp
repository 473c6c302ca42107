#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mfseg/fft.hpp"
#include "mfseg/potts.hpp"
#include "mfseg/pyramid.hpp"
#include "mfseg/rng.hpp"
#include "mfseg/transform.hpp"
#include "mfseg/whittle.hpp"

namespace mfseg::sampler {

/// Inverse-gamma hyperparameters (shape alpha, scale gamma) of one class.
struct Hyper {
    double alpha1 = 1e-3;
    double gamma1 = 1e-3;
    double alpha2 = 1e-3;
    double gamma2 = 1e-3;
};

struct ClassParams {
    double theta1 = 0.0;
    double theta2 = 0.0;
    bool operator==(const ClassParams&) const = default;
};

/// Per-class parameters with their posterior spread.
struct RegionParams {
    std::vector<ClassParams> mean;
    std::vector<ClassParams> stddev;
};

/// Conditional used for the latent vector.
///   kConjugate: CN(v (p1/theta1) x, v), v = 1 / (p1/theta1 + p2/theta2).
///   kAsPrinted: CN(theta1 p1 x, 1/(theta1 p1) + 1/(theta2 p2)); comparison only.
enum class LatentForm { kConjugate, kAsPrinted };

struct SamplerConfig {
    int num_classes = 2;
    int j1 = 1;
    int j2 = 3;
    int iterations = 300;
    int burn_in = 30;
    int granularity_steps = 2;  // V
    double q = 10.0;
    double initial_beta = 1.0;
    std::uint64_t seed = 1;
    int wavelet_order = 1;
    int frequency_cutoff = 0;  // 0 selects N_j / 4
    Hyper hyper;
    whittle::VarianceModel variance_model = whittle::VarianceModel::kCovarianceModel;
    whittle::ShortRangeKernel g2_form = whittle::ShortRangeKernel::kShortRange;
    LatentForm latent_form = LatentForm::kConjugate;
    bool sample_granularity = true;
    /// Keep the initial labels for the whole run (known-label estimation).
    bool fixed_labels = false;
    std::optional<LabelPyramid> initial_labels;
    std::optional<std::vector<ClassParams>> initial_theta;
};

/// Throws kConfig or kScaleRange when the configuration cannot run on an
/// image of the given side. Usable scales need N_{j1} >= 16 and N_{j2} >= 8.
void validate(const SamplerConfig& config, int image_side);

struct RegressionEstimate {
    double c2 = 0.0;
    double intercept = 0.0;  // variance at ln 2^j = 0
    double r_squared = 0.0;
    bool degenerate = false;
    double theta1() const { return -c2; }
};

/// Ordinary least-squares fit of variance against ln 2^j; returns the slope c2.
RegressionEstimate regress_variances(std::span<const double> variances, int j1);

/// Scale-wise sample variances of the log-leaders fitted against ln 2^j.
RegressionEstimate regression_estimate_c2(const transform::LogLeaderPyramid& ell, int j1, int j2);

/// Patch-wise regression estimates of theta1 on 16x16 finest-scale patches
/// with stride 4 (75% overlap), periodic wrap. Patch (a, b) starts at
/// finest-scale site (4a, 4b).
struct PatchEstimates {
    int patches_per_side = 0;
    std::vector<double> theta1;  // row-major over patches
};
PatchEstimates patch_estimates(const transform::LogLeaderPyramid& ell);

/// 1D k-means with k-means++ seeding and restarts. Labels are ordered by
/// increasing centre. Throws kDegenerateClustering when there are fewer
/// distinct values than clusters.
struct Clustering {
    std::vector<double> centers;
    std::vector<int> labels;
    double inertia = 0.0;
};
Clustering kmeans_1d(std::span<const double> values, int k, std::uint64_t seed, int restarts = 20);

/// Finest-scale labels from the majority cluster of the covering patches,
/// coarser scales by majority over the four children (ties to the smaller
/// label).
LabelPyramid labels_from_patches(const PatchEstimates& patches, const Clustering& clusters,
                                 const transform::LogLeaderPyramid& ell, int num_classes);

LabelPyramid init_labels(const transform::LogLeaderPyramid& ell, int num_classes, std::uint64_t seed);

/// Whittle log-likelihood of a spectrum with mu integrated out:
/// -sum_s [ln v_s + |x_s|^2 / v_s], v_s = theta1/p1_s + theta2/p2_s.
double whittle_marginal_loglik(const whittle::ClassSpectrum& spectrum, double theta1, double theta2);

/// theta2 maximizing the marginal likelihood with theta1 held fixed,
/// searched on [1e-4, 10].
double profile_theta2(const whittle::ClassSpectrum& spectrum, double theta1);

/// Joint maximizer of the marginal likelihood on [1e-4, 10]^2.
ClassParams whittle_ml(const whittle::ClassSpectrum& spectrum);

/// Per-class starting point Theta^(0): whittle_ml on each class spectrum.
/// The augmented chain moves slowly away from small theta, so a poor start
/// (the masked regression is biased near region borders) can stall it.
std::vector<ClassParams> init_theta(const LabelPyramid& labels, const transform::LogLeaderPyramid& ell,
                                    const whittle::WhittleModel& model);

/// Label pyramid from a full-resolution mask (labels 1..K): majority over
/// each 2^j x 2^j block, ties to the smaller label.
LabelPyramid labels_from_mask(const Grid<std::uint8_t>& mask, int num_classes, int j1, int j2);

/// scale / Gamma(shape, 1).
double sample_inverse_gamma(double shape, double scale, CounterRng& rng);

/// sum_s p_s |y_s|^2.
double weighted_norm(std::span<const Complex> y, std::span<const double> p);

ClassParams sample_theta(const whittle::ClassSpectrum& spectrum, std::span<const Complex> mu,
                         const Hyper& hyper, CounterRng& rng);

/// Mean and variance of the latent conditional at one frequency.
struct LatentMoments {
    Complex mean;
    double variance = 0.0;
};
LatentMoments latent_moments(Complex x, double p1, double p2, double theta1, double theta2,
                             LatentForm form = LatentForm::kConjugate);

std::vector<Complex> sample_latent(const whittle::ClassSpectrum& spectrum, double theta1, double theta2,
                                   CounterRng& rng, LatentForm form = LatentForm::kConjugate);

/// Step size of the granularity update: 10 (t + r - 1)^{-3/4} / sum_j N_j,
/// N_j the number of coefficients at scale j.
double granularity_step(int t, int r, int image_side, int j1, int j2);

/// Agreement-count differences between the labels and an auxiliary prior
/// draw: the derivatives of the Potts energy with respect to each beta.
/// Weighting by beta itself would make beta = 0 absorbing.
struct GranularityGradient {
    double scale = 0.0;            // inter-scale agreements of z minus w
    std::vector<double> spatial;   // spatial agreements at scale j, index j - j1
};
GranularityGradient granularity_gradient(const LabelPyramid& z, const LabelPyramid& w);

/// beta <- T_[0,Q](beta + eta * gradient).
void granularity_update(potts::Granularity& beta, const GranularityGradient& gradient, double eta);

/// V rounds of (prior-only sweep from z, gradient step).
void sample_granularity(const LabelPyramid& z, potts::Granularity& beta, int t, int V, std::uint64_t key);

struct SamplerState {
    LabelPyramid labels;
    std::vector<ClassParams> theta;
    potts::Granularity beta;
    std::vector<std::vector<Complex>> mu;
    int iteration = 0;

    std::vector<std::vector<ClassParams>> trace;    // every iteration
    std::vector<std::vector<ClassParams>> history;  // post burn-in
    std::vector<potts::Granularity> beta_trace;     // every iteration
    std::vector<std::uint32_t> votes;               // finest scale, site * K + k
    int vote_side = 0;
    int j1 = 1;

    std::size_t repairs = 0;
    std::size_t rejections = 0;
    std::size_t clamped_weights = 0;
    std::size_t floored_leaders = 0;
};

/// Full Gibbs sampler on a log-leader pyramid.
SamplerState run_gibbs(const transform::LogLeaderPyramid& ell, const SamplerConfig& config);

/// Single-class sampler on the regular grid (no labels).
SamplerState run_homogeneous(const transform::LogLeaderPyramid& ell, const SamplerConfig& config);

RegionParams estimate_mmse(std::span<const std::vector<ClassParams>> history);

/// Per-site vote majority at the finest scale (ties to the smaller label),
/// upsampled by 2^j1 with nearest neighbour. Output labels are 1-based.
Grid<std::uint8_t> estimate_map_labels(std::span<const std::uint32_t> votes, int vote_side, int num_classes,
                                       int j1);

}  // namespace mfseg::sampler
