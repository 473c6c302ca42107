#include "mfseg/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "mfseg/errors.hpp"

namespace mfseg::sampler {

namespace {

constexpr double kThetaFloor = 1e-4;
constexpr int kPatch = 16;
constexpr int kStride = 4;

// Stream tags; each random block of an iteration draws from its own stream.
enum Tag : std::uint64_t { kTagSweep = 1, kTagTheta, kTagRepair, kTagBeta, kTagInit };

double sample_variance(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

bool variances_positive(const ClassParams& p, int image_side, int j1, int j2, whittle::VarianceModel model) {
    for (int j = j1; j <= j2; ++j) {
        const double v = whittle::leader_variance(p.theta1, p.theta2, j, image_side >> j, model);
        if (!(v > 0.0) || !std::isfinite(v)) return false;
    }
    return true;
}

// Majority over counts, ties to the smallest label.
int argmax_first(const std::uint32_t* counts, int k) {
    int best = 0;
    for (int i = 1; i < k; ++i) {
        if (counts[i] > counts[best]) best = i;
    }
    return best;
}

void propagate_coarser(LabelPyramid& labels) {
    const int K = labels.num_classes;
    std::vector<std::uint32_t> counts(static_cast<std::size_t>(K));
    for (int j = labels.j1() + 1; j <= labels.j2(); ++j) {
        auto& grid = labels[j];
        const auto& finer = labels[j - 1];
        for (int r = 0; r < grid.side(); ++r) {
            for (int c = 0; c < grid.side(); ++c) {
                std::fill(counts.begin(), counts.end(), 0u);
                for (const auto& q : potts::MultiscaleGraph::children(r, c)) ++counts[finer(q.r, q.c)];
                grid(r, c) = static_cast<std::uint8_t>(argmax_first(counts.data(), K));
            }
        }
    }
}

// Gives every empty class one site at each scale where it is missing, taken
// from a class that keeps at least one site.
std::size_t repair_empty(LabelPyramid& labels, std::uint64_t key) {
    const int K = labels.num_classes;
    std::size_t repaired = 0;
    for (int j = labels.j1(); j <= labels.j2(); ++j) {
        auto& grid = labels[j];
        std::vector<std::size_t> counts(static_cast<std::size_t>(K), 0);
        for (auto v : grid) ++counts[v];
        for (int k = 0; k < K; ++k) {
            if (counts[k] > 0) continue;
            if (grid.size() < static_cast<std::size_t>(K)) {
                throw Error(ErrorKind::kEmptyClass, "scale " + std::to_string(j) + " has fewer sites than classes");
            }
            CounterRng rng(derive_seed(key, {static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(k)}));
            std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
            for (;;) {
                const std::size_t i = pick(rng);
                if (counts[grid[i]] > 1) {
                    --counts[grid[i]];
                    grid[i] = static_cast<std::uint8_t>(k);
                    ++counts[k];
                    break;
                }
            }
            ++repaired;
        }
    }
    return repaired;
}

bool has_empty_class(const LabelPyramid& labels) {
    for (int j = labels.j1(); j <= labels.j2(); ++j) {
        std::vector<bool> seen(static_cast<std::size_t>(labels.num_classes), false);
        for (auto v : labels[j]) seen[v] = true;
        if (std::find(seen.begin(), seen.end(), false) != seen.end()) return true;
    }
    return false;
}

potts::DataTerm data_term(const transform::LogLeaderPyramid& ell, const std::vector<ClassParams>& theta,
                          whittle::VarianceModel model) {
    const int K = static_cast<int>(theta.size());
    potts::DataTerm data;
    data.j1 = ell.j1();
    data.num_classes = K;
    for (int j = ell.j1(); j <= ell.j2(); ++j) {
        const auto& grid = ell[j];
        std::vector<double> log_norm(static_cast<std::size_t>(K)), inv(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            const double v = whittle::leader_variance(theta[k].theta1, theta[k].theta2, j, grid.side(), model);
            if (!(v > 0.0)) throw Error(ErrorKind::kParameterDomain, "nonpositive log-leader variance");
            log_norm[k] = -0.5 * std::log(2.0 * std::numbers::pi * v);
            inv[k] = 0.5 / v;
        }
        std::vector<double> values(grid.size() * static_cast<std::size_t>(K));
        const auto n = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const double e2 = grid[static_cast<std::size_t>(i)] * grid[static_cast<std::size_t>(i)];
            for (int k = 0; k < K; ++k) values[static_cast<std::size_t>(i) * K + k] = log_norm[k] - inv[k] * e2;
        }
        data.per_scale.push_back(std::move(values));
    }
    return data;
}

void record(SamplerState& state, const SamplerConfig& config, int t) {
    state.trace.push_back(state.theta);
    state.beta_trace.push_back(state.beta);
    if (t <= config.burn_in) return;
    state.history.push_back(state.theta);
    if (state.votes.empty()) return;
    const auto& finest = state.labels[state.j1];
    const int K = state.labels.num_classes;
    for (std::size_t i = 0; i < finest.size(); ++i) ++state.votes[i * K + finest[i]];
}

}  // namespace

void validate(const SamplerConfig& config, int image_side) {
    if (!is_power_of_two(image_side) || image_side < 32) {
        throw Error(ErrorKind::kDimension, "image side must be a power of two and at least 32");
    }
    if (config.num_classes < 1 || config.num_classes > 16) {
        throw Error(ErrorKind::kConfig, "class count must be in [1, 16]");
    }
    if (config.iterations < 1 || config.burn_in < 0 || config.burn_in >= config.iterations) {
        throw Error(ErrorKind::kConfig, "burn-in must be nonnegative and smaller than the iteration count");
    }
    if (config.granularity_steps < 1) throw Error(ErrorKind::kConfig, "V must be at least 1");
    if (!(config.q > 0.0) || config.initial_beta < 0.0 || config.initial_beta > config.q) {
        throw Error(ErrorKind::kConfig, "granularity bound Q must be positive and contain the initial value");
    }
    if (config.wavelet_order < 1 || config.wavelet_order > 3) {
        throw Error(ErrorKind::kConfig, "wavelet order must be 1, 2 or 3");
    }
    const Hyper& h = config.hyper;
    if (!(h.alpha1 > 0.0 && h.gamma1 > 0.0 && h.alpha2 > 0.0 && h.gamma2 > 0.0)) {
        throw Error(ErrorKind::kConfig, "hyperparameters must be positive");
    }
    if (config.j1 < 1 || config.j2 < config.j1) throw Error(ErrorKind::kScaleRange, "need 1 <= j1 <= j2");
    if (config.j2 > transform::max_scales(image_side) || (image_side >> config.j2) < 8) {
        throw Error(ErrorKind::kScaleRange, "j2 = " + std::to_string(config.j2) + " exceeds the usable scales of a " +
                                                std::to_string(image_side) + " image (coarsest grid must be >= 8)");
    }
    if ((image_side >> config.j1) < kPatch) {
        throw Error(ErrorKind::kScaleRange, "finest analysed grid must be at least 16x16");
    }
    if (config.initial_theta) {
        if (static_cast<int>(config.initial_theta->size()) != config.num_classes) {
            throw Error(ErrorKind::kConfig, "initial theta count differs from class count");
        }
        for (const auto& p : *config.initial_theta) {
            if (!(p.theta1 > 0.0 && p.theta2 > 0.0)) throw Error(ErrorKind::kConfig, "initial theta must be positive");
        }
    }
    if (config.initial_labels) {
        const auto& l = *config.initial_labels;
        if (l.num_classes != config.num_classes || l.j1() != config.j1 || l.j2() != config.j2 ||
            l.image_side() != image_side) {
            throw Error(ErrorKind::kShapeMismatch, "initial labels do not match the configuration");
        }
    }
    if (config.fixed_labels && !config.initial_labels) {
        throw Error(ErrorKind::kConfig, "fixed-label runs need initial labels");
    }
}

RegressionEstimate regress_variances(std::span<const double> variances, int j1) {
    const std::size_t n = variances.size();
    if (n < 2) throw Error(ErrorKind::kScaleRange, "regression needs at least two scales");
    RegressionEstimate est;
    if (std::all_of(variances.begin(), variances.end(), [](double v) { return v == 0.0; })) {
        est.degenerate = true;
        return est;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += (j1 + static_cast<int>(i)) * std::numbers::ln2;
        my += variances[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = (j1 + static_cast<int>(i)) * std::numbers::ln2 - mx;
        const double dy = variances[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    est.c2 = sxy / sxx;
    est.intercept = my - est.c2 * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double fit = est.intercept + est.c2 * (j1 + static_cast<int>(i)) * std::numbers::ln2;
        sse += (variances[i] - fit) * (variances[i] - fit);
    }
    est.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return est;
}

RegressionEstimate regression_estimate_c2(const transform::LogLeaderPyramid& ell, int j1, int j2) {
    if (j1 < ell.j1() || j2 > ell.j2() || j2 <= j1) {
        throw Error(ErrorKind::kScaleRange, "regression needs at least two available scales");
    }
    std::vector<double> variances;
    for (int j = j1; j <= j2; ++j) variances.push_back(sample_variance(ell[j].values()));
    return regress_variances(variances, j1);
}

PatchEstimates patch_estimates(const transform::LogLeaderPyramid& ell) {
    const int j1 = ell.j1();
    const int n1 = ell.side(j1);
    if (n1 < kPatch) throw Error(ErrorKind::kScaleRange, "finest grid smaller than one patch");
    // Coarser scales take the dyadic sub-window of the patch; keep those with
    // at least a 2x2 window.
    int j_last = j1;
    while (j_last + 1 <= ell.j2() && (kPatch >> (j_last + 1 - j1)) >= 2) ++j_last;
    if (j_last == j1) throw Error(ErrorKind::kScaleRange, "patch regression needs at least two scales");

    PatchEstimates out;
    out.patches_per_side = n1 / kStride;
    const int P = out.patches_per_side;
    out.theta1.assign(static_cast<std::size_t>(P) * P, 0.0);
#pragma omp parallel for schedule(static)
    for (int a = 0; a < P; ++a) {
        std::vector<double> window, variances;
        for (int b = 0; b < P; ++b) {
            variances.clear();
            for (int j = j1; j <= j_last; ++j) {
                const int d = j - j1;
                const int size = kPatch >> d;
                const int r0 = (kStride * a) >> d;
                const int c0 = (kStride * b) >> d;
                window.clear();
                for (int u = 0; u < size; ++u) {
                    for (int v = 0; v < size; ++v) window.push_back(ell[j].wrapped(r0 + u, c0 + v));
                }
                variances.push_back(sample_variance(window));
            }
            out.theta1[static_cast<std::size_t>(a) * P + b] = regress_variances(variances, j1).theta1();
        }
    }
    return out;
}

Clustering kmeans_1d(std::span<const double> values, int k, std::uint64_t seed, int restarts) {
    if (k < 1) throw Error(ErrorKind::kConfig, "cluster count must be positive");
    const std::set<double> distinct(values.begin(), values.end());
    if (static_cast<int>(distinct.size()) < k) {
        throw Error(ErrorKind::kDegenerateClustering,
                    "only " + std::to_string(distinct.size()) + " distinct patch estimates for " +
                        std::to_string(k) + " classes");
    }
    const std::size_t n = values.size();
    Clustering best;
    best.inertia = std::numeric_limits<double>::infinity();
    std::vector<double> d2(n);
    for (int restart = 0; restart < restarts; ++restart) {
        CounterRng rng(derive_seed(seed, {kTagInit, static_cast<std::uint64_t>(restart)}));
        std::vector<double> centers;
        centers.push_back(values[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
        while (static_cast<int>(centers.size()) < k) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double m = std::numeric_limits<double>::infinity();
                for (double c : centers) m = std::min(m, (values[i] - c) * (values[i] - c));
                d2[i] = m;
                total += m;
            }
            double u = rng.uniform() * total;
            std::size_t pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                if (u < d2[i]) {
                    pick = i;
                    break;
                }
                u -= d2[i];
            }
            centers.push_back(values[pick]);
        }
        std::vector<int> labels(n, -1);
        for (int iter = 0; iter < 300; ++iter) {
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                int arg = 0;
                for (int c = 1; c < k; ++c) {
                    if (std::abs(values[i] - centers[c]) < std::abs(values[i] - centers[arg])) arg = c;
                }
                if (labels[i] != arg) {
                    labels[i] = arg;
                    changed = true;
                }
            }
            std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
            std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
            for (std::size_t i = 0; i < n; ++i) {
                sum[labels[i]] += values[i];
                ++count[labels[i]];
            }
            for (int c = 0; c < k; ++c) {
                if (count[c] > 0) centers[c] = sum[c] / static_cast<double>(count[c]);
            }
            if (!changed) break;
        }
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) inertia += (values[i] - centers[labels[i]]) * (values[i] - centers[labels[i]]);
        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.centers = centers;
            best.labels = labels;
        }
    }
    std::vector<int> order(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) order[c] = c;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return best.centers[a] < best.centers[b]; });
    std::vector<int> rank(static_cast<std::size_t>(k));
    std::vector<double> sorted(static_cast<std::size_t>(k));
    for (int r = 0; r < k; ++r) {
        rank[order[r]] = r;
        sorted[r] = best.centers[order[r]];
    }
    for (auto& l : best.labels) l = rank[l];
    best.centers = sorted;
    return best;
}

LabelPyramid labels_from_patches(const PatchEstimates& patches, const Clustering& clusters,
                                 const transform::LogLeaderPyramid& ell, int num_classes) {
    const int j1 = ell.j1();
    const int n1 = ell.side(j1);
    const int P = patches.patches_per_side;
    const int K = num_classes;
    std::vector<std::uint32_t> votes(static_cast<std::size_t>(n1) * n1 * K, 0);
    for (int a = 0; a < P; ++a) {
        for (int b = 0; b < P; ++b) {
            const int label = clusters.labels[static_cast<std::size_t>(a) * P + b];
            for (int u = 0; u < kPatch; ++u) {
                for (int v = 0; v < kPatch; ++v) {
                    const int r = wrap(kStride * a + u, n1);
                    const int c = wrap(kStride * b + v, n1);
                    ++votes[(static_cast<std::size_t>(r) * n1 + c) * K + label];
                }
            }
        }
    }
    LabelPyramid labels(ell.image_side(), j1, ell.j2(), K);
    auto& finest = labels[j1];
    for (std::size_t i = 0; i < finest.size(); ++i) {
        finest[i] = static_cast<std::uint8_t>(argmax_first(&votes[i * K], K));
    }
    propagate_coarser(labels);
    return labels;
}

LabelPyramid init_labels(const transform::LogLeaderPyramid& ell, int num_classes, std::uint64_t seed) {
    const PatchEstimates patches = patch_estimates(ell);
    const Clustering clusters = kmeans_1d(patches.theta1, num_classes, seed);
    return labels_from_patches(patches, clusters, ell, num_classes);
}

namespace {

// Maximizer of f over [lo, hi]: grid bracket, then golden section.
template <class F>
double maximize_1d(F&& f, double lo, double hi, int grid, int refine) {
    int best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i) {
        const double v = f(lo + (hi - lo) * i / grid);
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    double a = lo + (hi - lo) * std::max(best - 1, 0) / grid;
    double b = lo + (hi - lo) * std::min(best + 1, grid) / grid;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < refine; ++it) {
        const double c = b - phi * (b - a);
        const double d = a + phi * (b - a);
        if (f(c) > f(d)) {
            b = d;
        } else {
            a = c;
        }
    }
    return 0.5 * (a + b);
}

constexpr double kThetaCeiling = 10.0;

}  // namespace

double whittle_marginal_loglik(const whittle::ClassSpectrum& spectrum, double theta1, double theta2) {
    double ll = 0.0;
    for (std::size_t s = 0; s < spectrum.size(); ++s) {
        const double v = theta1 / spectrum.p1[s] + theta2 / spectrum.p2[s];
        ll -= std::log(v) + std::norm(spectrum.x[s]) / v;
    }
    return ll;
}

double profile_theta2(const whittle::ClassSpectrum& spectrum, double theta1) {
    const double u = maximize_1d(
        [&](double u) { return whittle_marginal_loglik(spectrum, theta1, std::exp(u)); },
        std::log(kThetaFloor), std::log(kThetaCeiling), 48, 40);
    return std::exp(u);
}

ClassParams whittle_ml(const whittle::ClassSpectrum& spectrum) {
    auto profile = [&](double u) {
        const double theta1 = std::exp(u);
        return whittle_marginal_loglik(spectrum, theta1, profile_theta2(spectrum, theta1));
    };
    const double theta1 = std::exp(maximize_1d(profile, std::log(kThetaFloor), std::log(kThetaCeiling), 24, 30));
    return {theta1, profile_theta2(spectrum, theta1)};
}

std::vector<ClassParams> init_theta(const LabelPyramid& labels, const transform::LogLeaderPyramid& ell,
                                    const whittle::WhittleModel& model) {
    const whittle::ClassMask mask(labels);
    std::vector<ClassParams> theta(static_cast<std::size_t>(labels.num_classes));
#pragma omp parallel for schedule(static)
    for (int k = 0; k < labels.num_classes; ++k) theta[k] = whittle_ml(model.class_spectrum(ell, mask, k));
    return theta;
}

LabelPyramid labels_from_mask(const Grid<std::uint8_t>& mask, int num_classes, int j1, int j2) {
    const int K = num_classes;
    for (auto v : mask) {
        if (v < 1 || v > K) throw Error(ErrorKind::kConfig, "mask label outside 1..K");
    }
    LabelPyramid labels(mask.side(), j1, j2, K);
    std::vector<std::uint32_t> counts(static_cast<std::size_t>(K));
    for (int j = j1; j <= j2; ++j) {
        auto& grid = labels[j];
        const int block = 1 << j;
        for (int r = 0; r < grid.side(); ++r) {
            for (int c = 0; c < grid.side(); ++c) {
                std::fill(counts.begin(), counts.end(), 0u);
                for (int u = 0; u < block; ++u) {
                    for (int v = 0; v < block; ++v) ++counts[mask(r * block + u, c * block + v) - 1];
                }
                grid(r, c) = static_cast<std::uint8_t>(argmax_first(counts.data(), K));
            }
        }
    }
    return labels;
}

double sample_inverse_gamma(double shape, double scale, CounterRng& rng) {
    if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(scale)) {
        throw Error(ErrorKind::kNumeric, "inverse-gamma parameters must be positive and finite");
    }
    const double g = std::gamma_distribution<double>(shape, 1.0)(rng);
    if (!(g > 0.0)) throw Error(ErrorKind::kNumeric, "gamma draw underflow");
    return scale / g;
}

double weighted_norm(std::span<const Complex> y, std::span<const double> p) {
    double sum = 0.0;
    for (std::size_t s = 0; s < y.size(); ++s) sum += p[s] * std::norm(y[s]);
    return sum;
}

ClassParams sample_theta(const whittle::ClassSpectrum& spectrum, std::span<const Complex> mu, const Hyper& hyper,
                         CounterRng& rng) {
    const std::size_t S = spectrum.size();
    if (S == 0 || mu.size() != S) throw Error(ErrorKind::kShapeMismatch, "latent and spectrum sizes differ");
    std::vector<Complex> residual(S);
    for (std::size_t s = 0; s < S; ++s) residual[s] = spectrum.x[s] - mu[s];
    const double n = static_cast<double>(S);
    ClassParams p;
    p.theta1 = sample_inverse_gamma(hyper.alpha1 + n, hyper.gamma1 + weighted_norm(residual, spectrum.p1), rng);
    p.theta2 = sample_inverse_gamma(hyper.alpha2 + n, hyper.gamma2 + weighted_norm(mu, spectrum.p2), rng);
    return p;
}

LatentMoments latent_moments(Complex x, double p1, double p2, double theta1, double theta2, LatentForm form) {
    if (!(p1 > 0.0) || !(p2 > 0.0) || !(theta1 > 0.0) || !(theta2 > 0.0)) {
        throw Error(ErrorKind::kNumeric, "latent conditional needs positive precisions");
    }
    LatentMoments m;
    if (form == LatentForm::kAsPrinted) {
        m.mean = theta1 * p1 * x;
        m.variance = 1.0 / (theta1 * p1) + 1.0 / (theta2 * p2);
        return m;
    }
    const double a = p1 / theta1;
    m.variance = 1.0 / (a + p2 / theta2);
    m.mean = m.variance * a * x;
    return m;
}

std::vector<Complex> sample_latent(const whittle::ClassSpectrum& spectrum, double theta1, double theta2,
                                   CounterRng& rng, LatentForm form) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Complex> mu(spectrum.size());
    for (std::size_t s = 0; s < mu.size(); ++s) {
        const LatentMoments m = latent_moments(spectrum.x[s], spectrum.p1[s], spectrum.p2[s], theta1, theta2, form);
        const double sd = std::sqrt(0.5 * m.variance);
        const double re = normal(rng);
        const double im = normal(rng);
        mu[s] = m.mean + Complex(sd * re, sd * im);
    }
    return mu;
}

double granularity_step(int t, int r, int image_side, int j1, int j2) {
    double sites = 0.0;
    for (int j = j1; j <= j2; ++j) {
        const double n = image_side >> j;
        sites += n * n;
    }
    return 10.0 * std::pow(static_cast<double>(t + r - 1), -0.75) / sites;
}

GranularityGradient granularity_gradient(const LabelPyramid& z, const LabelPyramid& w) {
    const potts::PottsStatistics sz = potts::statistics(z);
    const potts::PottsStatistics sw = potts::statistics(w);
    GranularityGradient g;
    for (std::size_t i = 0; i < sz.spatial.size(); ++i) {
        g.spatial.push_back(static_cast<double>(sz.spatial[i] - sw.spatial[i]));
    }
    g.scale = static_cast<double>(sz.scale - sw.scale);
    return g;
}

void granularity_update(potts::Granularity& beta, const GranularityGradient& gradient, double eta) {
    beta.scale = std::clamp(beta.scale + eta * gradient.scale, 0.0, beta.q);
    for (std::size_t i = 0; i < beta.spatial.size(); ++i) {
        beta.spatial[i] = std::clamp(beta.spatial[i] + eta * gradient.spatial[i], 0.0, beta.q);
    }
}

void sample_granularity(const LabelPyramid& z, potts::Granularity& beta, int t, int V, std::uint64_t key) {
    if (t < 1 || V < 1) throw Error(ErrorKind::kConfig, "granularity sampling needs t >= 1 and V >= 1");
    for (int r = 1; r <= V; ++r) {
        LabelPyramid w = z;
        potts::checkerboard_sweep(w, beta, nullptr, derive_seed(key, {static_cast<std::uint64_t>(r)}));
        const GranularityGradient g = granularity_gradient(z, w);
        granularity_update(beta, g, granularity_step(t, r, z.image_side(), z.j1(), z.j2()));
    }
}

SamplerState run_gibbs(const transform::LogLeaderPyramid& ell, const SamplerConfig& config) {
    const int side = ell.image_side();
    validate(config, side);
    if (ell.j1() != config.j1 || ell.j2() != config.j2) {
        throw Error(ErrorKind::kShapeMismatch, "log-leader scales differ from the configuration");
    }
    const int K = config.num_classes;
    whittle::WhittleOptions wopt;
    wopt.frequency_cutoff = config.frequency_cutoff;
    wopt.g2_form = config.g2_form;
    const whittle::WhittleModel model(side, config.j1, config.j2, wopt);

    SamplerState state;
    state.j1 = config.j1;
    if (config.initial_labels) {
        state.labels = *config.initial_labels;
    } else if (K == 1) {
        state.labels = LabelPyramid(side, config.j1, config.j2, 1);
    } else {
        state.labels = init_labels(ell, K, derive_seed(config.seed, {kTagInit}));
    }
    if (!config.fixed_labels) state.repairs += repair_empty(state.labels, derive_seed(config.seed, {kTagRepair, 0}));
    if (config.fixed_labels && has_empty_class(state.labels)) {
        throw Error(ErrorKind::kEmptyClass, "fixed labels leave a class empty at some scale");
    }
    state.theta = config.initial_theta ? *config.initial_theta : init_theta(state.labels, ell, model);
    for (const auto& p : state.theta) {
        if (!variances_positive(p, side, config.j1, config.j2, config.variance_model)) {
            throw Error(ErrorKind::kParameterDomain, "initial parameters give a nonpositive log-leader variance");
        }
    }
    state.beta = potts::Granularity(config.j1, config.j2, config.initial_beta, config.q);
    state.mu.assign(static_cast<std::size_t>(K), std::vector<Complex>(model.num_frequencies()));
    state.vote_side = ell.side(config.j1);
    state.votes.assign(static_cast<std::size_t>(state.vote_side) * state.vote_side * K, 0);

    std::vector<whittle::ClassSpectrum> spectra(static_cast<std::size_t>(K));
    for (int t = 1; t <= config.iterations; ++t) {
        state.iteration = t;
        const auto ut = static_cast<std::uint64_t>(t);
        {
            const whittle::ClassMask mask(state.labels);
            bool failed = false;
#pragma omp parallel for schedule(static)
            for (int k = 0; k < K; ++k) {
                try {
                    spectra[k] = model.class_spectrum(ell, mask, k);
                } catch (const Error&) {
#pragma omp atomic write
                    failed = true;
                }
            }
            if (failed) throw Error(ErrorKind::kEmptyClass, "empty class reached the spectral model");
            for (const auto& s : spectra) state.clamped_weights += s.clamped;
        }

        if (!config.fixed_labels && K > 1) {
            const potts::DataTerm data = data_term(ell, state.theta, config.variance_model);
            potts::checkerboard_sweep(state.labels, state.beta, &data, derive_seed(config.seed, {ut, kTagSweep}));
            if (has_empty_class(state.labels)) {
                for (int k = 0; k < K; ++k) {
                    bool empty = false;
                    for (int j = config.j1; j <= config.j2; ++j) empty = empty || state.labels.count(j, k) == 0;
                    if (!empty) continue;
                    CounterRng rng(derive_seed(config.seed, {ut, kTagRepair, static_cast<std::uint64_t>(k), 1}));
                    const Hyper& h = config.hyper;
                    state.theta[k].theta1 = std::clamp(sample_inverse_gamma(h.alpha1, h.gamma1, rng), kThetaFloor, 1.0);
                    state.theta[k].theta2 = std::clamp(sample_inverse_gamma(h.alpha2, h.gamma2, rng), kThetaFloor, 1.0);
                }
                state.repairs += repair_empty(state.labels, derive_seed(config.seed, {ut, kTagRepair}));
            }
        }

        for (int k = 0; k < K; ++k) {
            CounterRng rng(derive_seed(config.seed, {ut, kTagTheta, static_cast<std::uint64_t>(k)}));
            auto& p = state.theta[k];
            state.mu[k] = sample_latent(spectra[k], p.theta1, p.theta2, rng, config.latent_form);
            const ClassParams next = sample_theta(spectra[k], state.mu[k], config.hyper, rng);
            if (variances_positive(next, side, config.j1, config.j2, config.variance_model)) {
                p = next;
            } else {
                ++state.rejections;
            }
        }

        if (config.sample_granularity && !config.fixed_labels && K > 1 && t < config.burn_in) {
            sample_granularity(state.labels, state.beta, t, config.granularity_steps,
                               derive_seed(config.seed, {ut, kTagBeta}));
        }
        record(state, config, t);
    }
    return state;
}

SamplerState run_homogeneous(const transform::LogLeaderPyramid& ell, const SamplerConfig& config) {
    const int side = ell.image_side();
    SamplerConfig c = config;
    c.num_classes = 1;
    c.initial_labels.reset();
    c.fixed_labels = false;
    validate(c, side);
    whittle::WhittleOptions wopt;
    wopt.frequency_cutoff = config.frequency_cutoff;
    wopt.g2_form = config.g2_form;
    const whittle::WhittleModel model(side, config.j1, config.j2, wopt);
    const whittle::ClassSpectrum spectrum = model.homogeneous_spectrum(ell);

    SamplerState state;
    state.j1 = config.j1;
    state.labels = LabelPyramid(side, config.j1, config.j2, 1);
    state.beta = potts::Granularity(config.j1, config.j2, 0.0, config.q);
    state.theta = c.initial_theta ? *c.initial_theta : init_theta(state.labels, ell, model);
    state.mu.assign(1, std::vector<Complex>(spectrum.size()));
    for (int t = 1; t <= config.iterations; ++t) {
        state.iteration = t;
        CounterRng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(t), kTagTheta, 0}));
        auto& p = state.theta[0];
        state.mu[0] = sample_latent(spectrum, p.theta1, p.theta2, rng, config.latent_form);
        p = sample_theta(spectrum, state.mu[0], config.hyper, rng);
        record(state, config, t);
    }
    return state;
}

RegionParams estimate_mmse(std::span<const std::vector<ClassParams>> history) {
    if (history.empty()) throw Error(ErrorKind::kConfig, "no retained samples");
    const std::size_t K = history.front().size();
    const double n = static_cast<double>(history.size());
    RegionParams out;
    out.mean.assign(K, {});
    out.stddev.assign(K, {});
    for (const auto& sample : history) {
        for (std::size_t k = 0; k < K; ++k) {
            out.mean[k].theta1 += sample[k].theta1 / n;
            out.mean[k].theta2 += sample[k].theta2 / n;
        }
    }
    if (history.size() < 2) return out;
    for (const auto& sample : history) {
        for (std::size_t k = 0; k < K; ++k) {
            out.stddev[k].theta1 += std::pow(sample[k].theta1 - out.mean[k].theta1, 2) / (n - 1.0);
            out.stddev[k].theta2 += std::pow(sample[k].theta2 - out.mean[k].theta2, 2) / (n - 1.0);
        }
    }
    for (auto& s : out.stddev) {
        s.theta1 = std::sqrt(s.theta1);
        s.theta2 = std::sqrt(s.theta2);
    }
    return out;
}

Grid<std::uint8_t> estimate_map_labels(std::span<const std::uint32_t> votes, int vote_side, int num_classes,
                                       int j1) {
    const std::size_t sites = static_cast<std::size_t>(vote_side) * vote_side;
    if (votes.size() != sites * num_classes) throw Error(ErrorKind::kShapeMismatch, "vote table size mismatch");
    const int factor = 1 << j1;
    Grid<std::uint8_t> out(vote_side * factor);
    for (int r = 0; r < vote_side; ++r) {
        for (int c = 0; c < vote_side; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * vote_side + c;
            const auto label = static_cast<std::uint8_t>(argmax_first(&votes[i * num_classes], num_classes) + 1);
            for (int u = 0; u < factor; ++u) {
                for (int v = 0; v < factor; ++v) out(r * factor + u, c * factor + v) = label;
            }
        }
    }
    return out;
}

}  // namespace mfseg::sampler
