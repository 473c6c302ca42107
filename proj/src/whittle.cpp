#include "mfseg/whittle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mfseg/errors.hpp"

namespace mfseg::whittle {

double g1(int side, double r) {
    const double rj = correlation_radius(side);
    return std::max(0.0, -std::log((r + 1.0) / (rj + 1.0)));
}

double g2(double r, ShortRangeKernel form) {
    const double ratio = std::log(r + 1.0) / std::log(4.0);
    if (form == ShortRangeKernel::kAsPrinted) return std::max(0.0, -ratio);
    return std::max(0.0, 1.0 - ratio);
}

double cov_model(double theta1, double theta2, int side, double r, ShortRangeKernel form) {
    return theta1 * g1(side, r) + theta2 * g2(r, form);
}

FrequencySet::FrequencySet(int side, int cutoff) : side_(side), cutoff_(cutoff) {
    if (cutoff < 1 || 2 * cutoff >= side) {
        throw Error(ErrorKind::kConfig, "frequency cutoff " + std::to_string(cutoff) +
                                            " invalid for scale side " + std::to_string(side));
    }
    for (int m2 = 0; m2 <= cutoff; ++m2) {
        for (int m1 = -cutoff; m1 <= cutoff; ++m1) {
            if (m2 == 0 && m1 <= 0) continue;
            freqs_.push_back({m1, m2});
        }
    }
}

Grid<double> radial_kernel_grid(int side, const std::function<double(double)>& kernel) {
    Grid<double> out(side);
    for (int r = 0; r < side; ++r) {
        const double dr = wrapped_offset(r, side);
        for (int c = 0; c < side; ++c) {
            const double dc = wrapped_offset(c, side);
            out(r, c) = kernel(std::sqrt(dr * dr + dc * dc));
        }
    }
    return out;
}

std::vector<double> spectral_weights(const Grid<double>& lag, const FrequencySet& freqs, double floor,
                                     std::size_t* clamped) {
    const HalfSpectrum spec = rfft2(lag);
    std::vector<double> out;
    out.reserve(freqs.size());
    std::size_t n_clamped = 0;
    for (const auto& f : freqs) {
        double v = spec.at(f.m1, f.m2).real();
        if (!(v >= floor)) {
            v = floor;
            ++n_clamped;
        }
        out.push_back(v);
    }
    if (clamped) *clamped += n_clamped;
    return out;
}

SpectralWeights spectral_weights(int side, const FrequencySet& freqs, const WhittleOptions& options) {
    SpectralWeights w;
    const auto k1 = radial_kernel_grid(side, [side](double r) { return g1(side, r); });
    const auto k2 = radial_kernel_grid(side, [&](double r) { return g2(r, options.g2_form); });
    w.g1 = spectral_weights(k1, freqs, options.weight_floor, &w.clamped);
    w.g2 = spectral_weights(k2, freqs, options.weight_floor, &w.clamped);
    return w;
}

ClassMask::ClassMask(const LabelPyramid& labels) : labels_(labels) {
    for (int j = labels.j1(); j <= labels.j2(); ++j) {
        std::vector<std::size_t> counts(static_cast<std::size_t>(labels.num_classes), 0);
        for (auto v : labels[j]) {
            if (v >= labels.num_classes) {
                throw Error(ErrorKind::kConfig, "label outside 0..K-1 in class mask");
            }
            ++counts[v];
        }
        counts_.push_back(std::move(counts));
    }
}

Grid<double> ClassMask::indicator_grid(int j, int k) const {
    const auto& z = labels_[j];
    Grid<double> out(z.side());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = (z[i] == k) ? 1.0 : 0.0;
    return out;
}

namespace {

void require_nonempty(const ClassMask& mask, int j, int k) {
    if (mask.count(j, k) == 0) {
        throw Error(ErrorKind::kEmptyClass,
                    "class " + std::to_string(k + 1) + " is empty at scale " + std::to_string(j));
    }
}

// Circular autocorrelation counts sum_u T(u) T(u+d). The FFT result is
// rounded back to the exact integer count.
Grid<double> autocorrelation_counts(const Grid<double>& indicator) {
    HalfSpectrum spec = rfft2(indicator);
    for (std::size_t i = 0; i < spec.size(); ++i) spec.data()[i] = std::norm(spec.data()[i]);
    Grid<double> acf = irfft2(spec);
    for (auto& v : acf) v = std::round(v);
    return acf;
}

std::vector<Complex> masked_fourier(const Grid<double>& ell, const Grid<double>& indicator,
                                    std::size_t count, const FrequencySet& freqs) {
    const double xi = 1.0 / static_cast<double>(count);
    double sum = 0.0;
    for (std::size_t i = 0; i < ell.size(); ++i) sum += indicator[i] * ell[i];
    const double mean = sum * xi;
    Grid<double> centered(ell.side());
    for (std::size_t i = 0; i < ell.size(); ++i) centered[i] = indicator[i] * (ell[i] - mean);
    const HalfSpectrum spec = rfft2(centered);
    std::vector<Complex> x;
    x.reserve(freqs.size());
    for (const auto& f : freqs) x.push_back(xi * spec.at(f.m1, f.m2));
    return x;
}

}  // namespace

Grid<double> debias_weights(const ClassMask& mask, int j, int k) {
    require_nonempty(mask, j, k);
    const double count = static_cast<double>(mask.count(j, k));
    Grid<double> w = autocorrelation_counts(mask.indicator_grid(j, k));
    for (auto& v : w) v /= count;
    return w;
}

std::vector<Complex> debiased_fourier(const Grid<double>& ell, const ClassMask& mask, int j, int k,
                                      const FrequencySet& freqs) {
    require_nonempty(mask, j, k);
    return masked_fourier(ell, mask.indicator_grid(j, k), mask.count(j, k), freqs);
}

WhittleModel::WhittleModel(int image_side, int j1, int j2, WhittleOptions options)
    : image_side_(image_side), j1_(j1), j2_(j2), options_(options) {
    if (j1 < 1 || j2 < j1) throw Error(ErrorKind::kScaleRange, "empty scale range");
    for (int j = j1; j <= j2; ++j) {
        const int side = image_side >> j;
        const int cutoff = options.frequency_cutoff > 0 ? std::min(options.frequency_cutoff, side / 4)
                                                        : side / 4;
        if (cutoff < 1) {
            throw Error(ErrorKind::kScaleRange,
                        "scale " + std::to_string(j) + " too coarse for the spectral model");
        }
        Scale s;
        s.freqs = FrequencySet(side, cutoff);
        s.weights = spectral_weights(side, s.freqs, options);
        s.lag_g1 = radial_kernel_grid(side, [side](double r) { return g1(side, r); });
        s.lag_g2 = radial_kernel_grid(side, [&](double r) { return g2(r, options.g2_form); });
        total_ += s.freqs.size();
        scales_.push_back(std::move(s));
    }
}

ClassSpectrum WhittleModel::class_spectrum(const transform::LogLeaderPyramid& ell, const ClassMask& mask,
                                           int k) const {
    ClassSpectrum out;
    out.x.reserve(total_);
    for (int j = j1_; j <= j2_; ++j) {
        const Scale& s = scales_[idx(j)];
        require_nonempty(mask, j, k);
        out.scale_offset.push_back(out.x.size());

        const Grid<double> indicator = mask.indicator_grid(j, k);
        const std::size_t count = mask.count(j, k);
        const double xi = 1.0 / static_cast<double>(count);
        auto x = masked_fourier(ell[j], indicator, count, s.freqs);
        out.x.insert(out.x.end(), x.begin(), x.end());

        const Grid<double> acf = autocorrelation_counts(indicator);
        // Normalized expected periodogram sum_d g_i(d) W(d) e^{-i d.w}; equals
        // G_i on a full mask.
        Grid<double> prod1(acf.side()), prod2(acf.side());
        for (std::size_t i = 0; i < acf.size(); ++i) {
            const double wd = xi * acf[i];
            prod1[i] = s.lag_g1[i] * wd;
            prod2[i] = s.lag_g2[i] * wd;
        }
        const auto a1 = spectral_weights(prod1, s.freqs, options_.weight_floor, &out.clamped);
        const auto a2 = spectral_weights(prod2, s.freqs, options_.weight_floor, &out.clamped);
        for (std::size_t f = 0; f < s.freqs.size(); ++f) {
            const double p1 = 1.0 / (xi * a1[f]);
            const double p2 = 1.0 / (xi * a2[f]);
            out.g1.push_back(s.weights.g1[f]);
            out.g2.push_back(s.weights.g2[f]);
            out.p1.push_back(p1);
            out.p2.push_back(p2);
            out.w1.push_back(p1 * s.weights.g1[f]);
            out.w2.push_back(p2 * s.weights.g2[f]);
        }
    }
    out.scale_offset.push_back(out.x.size());
    return out;
}

ClassSpectrum WhittleModel::homogeneous_spectrum(const transform::LogLeaderPyramid& ell) const {
    ClassSpectrum out;
    for (int j = j1_; j <= j2_; ++j) {
        const Scale& s = scales_[idx(j)];
        out.scale_offset.push_back(out.x.size());
        const HalfSpectrum spec = rfft2(ell[j]);
        const double norm = 1.0 / static_cast<double>(ell[j].side());
        for (std::size_t f = 0; f < s.freqs.size(); ++f) {
            out.x.push_back(norm * spec.at(s.freqs[f].m1, s.freqs[f].m2));
            out.g1.push_back(s.weights.g1[f]);
            out.g2.push_back(s.weights.g2[f]);
            out.w1.push_back(1.0);
            out.w2.push_back(1.0);
            out.p1.push_back(1.0 / s.weights.g1[f]);
            out.p2.push_back(1.0 / s.weights.g2[f]);
        }
    }
    out.scale_offset.push_back(out.x.size());
    out.clamped = 0;
    return out;
}

double augmented_loglik(const ClassSpectrum& spectrum, std::span<const Complex> mu, double theta1,
                        double theta2) {
    if (mu.size() != spectrum.size()) {
        throw Error(ErrorKind::kShapeMismatch, "latent vector and spectrum sizes differ");
    }
    double q1 = 0.0, q2 = 0.0;
    for (std::size_t s = 0; s < mu.size(); ++s) {
        q1 += spectrum.p1[s] * std::norm(spectrum.x[s] - mu[s]);
        q2 += spectrum.p2[s] * std::norm(mu[s]);
    }
    const double n = static_cast<double>(mu.size());
    const double value = -n * std::log(theta2) - q2 / theta2 - n * std::log(theta1) - q1 / theta1;
    if (!std::isfinite(value)) throw Error(ErrorKind::kNumeric, "non-finite augmented likelihood");
    return value;
}

double leader_variance(double theta1, double theta2, int j, int side, VarianceModel model) {
    const double lj = j * std::numbers::ln2;
    switch (model) {
        case VarianceModel::kAsPrinted: return theta2 + theta1 * lj;
        case VarianceModel::kNegatedSlope: return theta2 - theta1 * lj;
        case VarianceModel::kCovarianceModel: return cov_model(theta1, theta2, side, 0.0);
    }
    return theta2 + theta1 * lj;
}

double marginal_leader_density(double ell, double variance) {
    if (!(variance > 0.0) || !std::isfinite(variance)) {
        throw Error(ErrorKind::kParameterDomain, "nonpositive log-leader variance");
    }
    return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * ell * ell / variance;
}

}  // namespace mfseg::whittle
