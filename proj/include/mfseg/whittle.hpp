#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mfseg/fft.hpp"
#include "mfseg/grid.hpp"
#include "mfseg/pyramid.hpp"
#include "mfseg/transform.hpp"

namespace mfseg::whittle {

/// Form of the short-range term g2 of the log-leader covariance.
///   kShortRange: max{0, 1 - ln(r+1)/ln 4}, correlation of overlapping
///                3x3 leader neighbourhoods, vanishing for r >= 3.
///   kAsPrinted:  max{0, -ln(r+1)/ln 4}, which is identically zero. Kept
///                only for comparisons; it cannot produce positive weights.
enum class ShortRangeKernel { kShortRange, kAsPrinted };

/// Variance used by the per-site marginal log-leader density.
///   kAsPrinted:       theta2 + theta1 ln 2^j
///   kNegatedSlope:    theta2 - theta1 ln 2^j
///   kCovarianceModel: cov_model(theta1, theta2, j, r = 0)
enum class VarianceModel { kAsPrinted, kNegatedSlope, kCovarianceModel };

struct WhittleOptions {
    int frequency_cutoff = 0;  // 0 selects side/4 at each scale
    ShortRangeKernel g2_form = ShortRangeKernel::kShortRange;
    double weight_floor = 1e-8;
};

/// r_j = floor(N_j / 4).
inline int correlation_radius(int side) { return side / 4; }

double g1(int side, double r);
double g2(double r, ShortRangeKernel form = ShortRangeKernel::kShortRange);

/// theta1 g1(j, r) + theta2 g2(j, r) for a scale of the given side.
double cov_model(double theta1, double theta2, int side, double r,
                 ShortRangeKernel form = ShortRangeKernel::kShortRange);

struct Frequency {
    int m1 = 0;  // row frequency
    int m2 = 0;  // column frequency
};

/// Retained low frequencies of one scale: integer pairs with
/// 0 < max(|m1|, |m2|) <= cutoff, one representative per +-m pair
/// (m2 > 0, or m2 == 0 and m1 > 0). The angular frequency is 2 pi m / side.
class FrequencySet {
public:
    FrequencySet() = default;
    FrequencySet(int side, int cutoff);

    int side() const { return side_; }
    int cutoff() const { return cutoff_; }
    std::size_t size() const { return freqs_.size(); }
    const Frequency& operator[](std::size_t i) const { return freqs_[i]; }
    auto begin() const { return freqs_.begin(); }
    auto end() const { return freqs_.end(); }

private:
    int side_ = 0;
    int cutoff_ = 0;
    std::vector<Frequency> freqs_;
};

/// kernel(||n||) over the side x side torus, n taken as minimum-image offsets.
Grid<double> radial_kernel_grid(int side, const std::function<double(double)>& kernel);

/// Re sum_n lag(n) exp(-i n.w_s) at each retained frequency, clamped to >= floor.
std::vector<double> spectral_weights(const Grid<double>& lag, const FrequencySet& freqs,
                                     double floor, std::size_t* clamped = nullptr);

struct SpectralWeights {
    std::vector<double> g1;
    std::vector<double> g2;
    std::size_t clamped = 0;
};

/// G_{1,s}, G_{2,s} of one scale.
SpectralWeights spectral_weights(int side, const FrequencySet& freqs,
                                 const WhittleOptions& options = {});

/// Indicator view of a label pyramid: T_{j,n,k} = [z_{j,n} == k].
class ClassMask {
public:
    explicit ClassMask(const LabelPyramid& labels);

    int num_classes() const { return labels_.num_classes; }
    int j1() const { return labels_.j1(); }
    int j2() const { return labels_.j2(); }
    bool indicator(int j, int r, int c, int k) const { return labels_[j](r, c) == k; }
    Grid<double> indicator_grid(int j, int k) const;
    std::size_t count(int j, int k) const { return counts_[static_cast<std::size_t>(j - j1())][k]; }
    const LabelPyramid& labels() const { return labels_; }

private:
    LabelPyramid labels_;
    std::vector<std::vector<std::size_t>> counts_;
};

/// Lag-domain debias weights W_{j,d,k} = xi sum_u T(u) T(u+d) with periodic
/// wrap and xi = 1 / sum_n T_{j,n,k}. Throws kEmptyClass for an empty class.
Grid<double> debias_weights(const ClassMask& mask, int j, int k);

/// x_{s,k} = xi sum_n T(n) [ell(n) - t] exp(-i n.w_s), t the masked mean.
std::vector<Complex> debiased_fourier(const Grid<double>& ell, const ClassMask& mask, int j, int k,
                                      const FrequencySet& freqs);

/// Spectral quantities of one class, concatenated over scales j1..j2.
/// For frequency s the model is x_s | mu_s ~ CN(mu_s, theta1 / p1_s) and
/// mu_s ~ CN(0, theta2 / p2_s), with p_i = W_{i,s} / G_{i,s}.
struct ClassSpectrum {
    std::vector<Complex> x;
    std::vector<double> g1, g2;  // plain spectral weights G_{i,s}
    std::vector<double> w1, w2;  // debias weights W_{i,s}
    std::vector<double> p1, p2;  // precision weights W_{i,s} / G_{i,s}
    std::vector<std::size_t> scale_offset;  // start of each scale, plus end
    std::size_t clamped = 0;

    std::size_t size() const { return x.size(); }
};

/// Spectral model shared by every class: frequency sets, plain weights and
/// lag kernels per scale. Immutable after construction; safe for concurrent
/// use.
class WhittleModel {
public:
    WhittleModel(int image_side, int j1, int j2, WhittleOptions options = {});

    int image_side() const { return image_side_; }
    int j1() const { return j1_; }
    int j2() const { return j2_; }
    const WhittleOptions& options() const { return options_; }
    const FrequencySet& frequencies(int j) const { return scales_[idx(j)].freqs; }
    const SpectralWeights& weights(int j) const { return scales_[idx(j)].weights; }
    /// Total retained frequency count S over scales.
    std::size_t num_frequencies() const { return total_; }

    /// Debiased spectrum of class k. Precisions are 1/A_i with
    /// A_i(w) = xi sum_d g_i(d) W(d) exp(-i d.w), the expected periodogram of
    /// the masked field, so that E|x_s|^2 = theta1 A_1 + theta2 A_2.
    ClassSpectrum class_spectrum(const transform::LogLeaderPyramid& ell, const ClassMask& mask, int k) const;

    /// Regular-grid spectrum: x_s = (1/N_j) sum_n ell(n) exp(-i n.w_s) and
    /// precisions 1/G_{i,s}.
    ClassSpectrum homogeneous_spectrum(const transform::LogLeaderPyramid& ell) const;

private:
    struct Scale {
        FrequencySet freqs;
        SpectralWeights weights;
        Grid<double> lag_g1;
        Grid<double> lag_g2;
    };
    std::size_t idx(int j) const { return static_cast<std::size_t>(j - j1_); }

    int image_side_;
    int j1_;
    int j2_;
    WhittleOptions options_;
    std::vector<Scale> scales_;
    std::size_t total_ = 0;
};

/// log of the augmented likelihood, up to an additive constant:
/// -S ln theta2 - sum p2 |mu|^2 / theta2 - S ln theta1 - sum p1 |x - mu|^2 / theta1.
double augmented_loglik(const ClassSpectrum& spectrum, std::span<const Complex> mu, double theta1,
                        double theta2);

double leader_variance(double theta1, double theta2, int j, int side, VarianceModel model);

/// Gaussian log-density of a centered log-leader with the given variance.
/// Throws kParameterDomain for a nonpositive variance.
double marginal_leader_density(double ell, double variance);

}  // namespace mfseg::whittle
