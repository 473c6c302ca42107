#include "mfseg/experiments.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "mfseg/errors.hpp"
#include "mfseg/rng.hpp"

namespace mfseg::experiments {

namespace {

constexpr std::uint64_t kTagScene = 1;
constexpr std::uint64_t kTagSampler = 2;
constexpr std::uint64_t kTagChains = 3;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

sampler::SamplerConfig base_config(int rep, const ProtocolOptions& options) {
    sampler::SamplerConfig c;
    c.num_classes = 2;
    c.j1 = options.j1;
    c.j2 = options.j2;
    c.iterations = options.iterations;
    c.burn_in = options.burn_in;
    c.wavelet_order = options.wavelet_order;
    c.seed = derive_seed(options.seed, {kTagSampler, static_cast<std::uint64_t>(rep)});
    return c;
}

transform::LogLeaderPyramid analyze(const synth::Scene& scene, const ProtocolOptions& options) {
    return transform::analyze(scene.image, options.wavelet_order, options.j1, options.j2);
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double n = static_cast<double>(v.size());
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / (n - 1.0));
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

std::vector<double> second_half(const std::vector<double>& v) {
    return {v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end()};
}

TableResult collect(const ProtocolOptions& options, bool joint) {
    if (options.reps < 1) throw Error(ErrorKind::kConfig, "need at least one realization");
    const auto start = std::chrono::steady_clock::now();
    TableResult out;
    for (int s = 0; s < static_cast<int>(kDiskC2.size()); ++s) {
        std::array<std::vector<double>, 2> estimates;
        std::vector<double> dsc1, dsc2, error;
        for (int rep = 0; rep < options.reps; ++rep) {
            const Realization r = joint ? run_joint(kDiskC2[s], rep, options) : run_known_labels(kDiskC2[s], rep, options);
            for (int k = 0; k < 2; ++k) estimates[k].push_back(r.neg_theta1[k]);
            if (r.score) {
                dsc1.push_back(r.score->dsc[0]);
                dsc2.push_back(r.score->dsc[1]);
                error.push_back(r.score->error_percent);
            }
        }
        for (int k = 0; k < 2; ++k) {
            ParameterRow row;
            row.scenario = s;
            row.k = k;
            row.truth = k == 0 ? kBackgroundC2 : kDiskC2[s];
            row.stats = metrics::monte_carlo_stats(estimates[k], row.truth);
            row.reference = joint ? kReferenceJoint[s][k] : kReferenceKnownLabels[s][k];
            out.parameters.push_back(row);
        }
        if (joint) {
            SegmentationRow row;
            row.scenario = s;
            row.dsc1 = mean(dsc1);
            row.dsc1_std = sample_std(dsc1);
            row.dsc2 = mean(dsc2);
            row.dsc2_std = sample_std(dsc2);
            row.error = mean(error);
            row.error_std = sample_std(error);
            row.reference = kReferenceSegmentation[s];
            out.segmentation.push_back(row);
        }
    }
    out.seconds = seconds_since(start);
    return out;
}

std::vector<sampler::ClassParams> scaled(std::vector<sampler::ClassParams> theta, double factor) {
    for (auto& p : theta) {
        p.theta1 *= factor;
        p.theta2 *= factor;
    }
    return theta;
}

}  // namespace

double chain_factor(int c) {
    static constexpr double kFactors[] = {0.25, 0.5, 1.0, 2.0, 4.0};
    return kFactors[c % 5];
}

synth::Scene scenario_scene(double disk_c2, int rep, const ProtocolOptions& options) {
    const auto seed = derive_seed(options.seed, {kTagScene, static_cast<std::uint64_t>(rep)});
    return synth::synth_scene(synth::two_region_scene(options.side, kBackgroundC2, disk_c2, seed));
}

Realization run_known_labels(double disk_c2, int rep, const ProtocolOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const synth::Scene scene = scenario_scene(disk_c2, rep, options);
    sampler::SamplerConfig config = base_config(rep, options);
    config.fixed_labels = true;
    config.initial_labels = sampler::labels_from_mask(scene.mask, 2, options.j1, options.j2);
    const sampler::SamplerState state = sampler::run_gibbs(analyze(scene, options), config);
    const sampler::RegionParams est = sampler::estimate_mmse(state.history);
    Realization r;
    for (int k = 0; k < 2; ++k) r.neg_theta1[k] = -est.mean[k].theta1;
    r.seconds = seconds_since(start);
    return r;
}

Realization run_joint(double disk_c2, int rep, const ProtocolOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const synth::Scene scene = scenario_scene(disk_c2, rep, options);
    const sampler::SamplerConfig config = base_config(rep, options);
    const sampler::SamplerState state = sampler::run_gibbs(analyze(scene, options), config);
    const sampler::RegionParams est = sampler::estimate_mmse(state.history);
    const auto map = sampler::estimate_map_labels(state.votes, state.vote_side, 2, options.j1);
    Realization r;
    r.score = metrics::score_segmentation(map, scene.mask, 2);
    for (int p = 0; p < 2; ++p) r.neg_theta1[r.score->permutation[p] - 1] = -est.mean[p].theta1;
    r.seconds = seconds_since(start);
    return r;
}

TableResult table_known_labels(const ProtocolOptions& options) { return collect(options, false); }

TableResult table_joint(const ProtocolOptions& options) { return collect(options, true); }

ChainSet run_chains(const transform::LogLeaderPyramid& ell, const sampler::SamplerConfig& config, int chains) {
    if (chains < 1) throw Error(ErrorKind::kConfig, "need at least one chain");
    sampler::validate(config, ell.image_side());
    const int K = config.num_classes;
    const LabelPyramid labels = config.initial_labels
                                    ? *config.initial_labels
                                    : sampler::init_labels(ell, K, derive_seed(config.seed, {kTagChains}));
    whittle::WhittleOptions wopt;
    wopt.frequency_cutoff = config.frequency_cutoff;
    wopt.g2_form = config.g2_form;
    const whittle::WhittleModel model(ell.image_side(), config.j1, config.j2, wopt);
    const auto theta0 = config.initial_theta ? *config.initial_theta : sampler::init_theta(labels, ell, model);

    ChainSet out;
    for (int c = 0; c < chains; ++c) {
        sampler::SamplerConfig cc = config;
        cc.seed = chains == 1 ? config.seed : derive_seed(config.seed, {kTagChains, static_cast<std::uint64_t>(c)});
        cc.initial_labels = labels;
        cc.initial_theta = chains == 1 ? theta0 : scaled(theta0, chain_factor(c));
        out.chains.push_back(sampler::run_gibbs(ell, cc));
    }
    if (chains >= 2 && config.iterations >= 20) {
        for (int k = 0; k < K; ++k) {
            std::vector<std::vector<double>> t1, t2;
            for (const auto& s : out.chains) {
                std::vector<double> a, b;
                for (const auto& row : s.trace) {
                    a.push_back(row[k].theta1);
                    b.push_back(row[k].theta2);
                }
                t1.push_back(second_half(a));
                t2.push_back(second_half(b));
            }
            out.psrf_theta1.push_back(metrics::psrf(t1));
            out.psrf_theta2.push_back(metrics::psrf(t2));
        }
    }
    return out;
}

ConvergenceResult convergence(const ConvergenceOptions& options) {
    if (options.chains < 2) throw Error(ErrorKind::kConfig, "convergence needs at least two chains");
    const auto start = std::chrono::steady_clock::now();
    const synth::Scene scene = synth::synth_scene(synth::preset("k2-default", options.seed, options.side));
    const auto ell = transform::analyze(scene.image, 1, 1, 3);
    sampler::SamplerConfig config;
    config.num_classes = 2;
    config.iterations = options.iterations;
    config.burn_in = options.burn_in;
    config.seed = options.seed;
    const ChainSet set = run_chains(ell, config, options.chains);

    ConvergenceResult out;
    std::vector<std::vector<double>> halves;
    for (const auto& s : set.chains) {
        const auto map = sampler::estimate_map_labels(s.votes, s.vote_side, 2, 1);
        const auto score = metrics::score_segmentation(map, scene.mask, 2);
        const int background = score.permutation[0] == 1 ? 0 : 1;
        std::vector<double> trace;
        for (const auto& row : s.trace) trace.push_back(row[background].theta1);
        halves.push_back(second_half(trace));
        out.background_theta1.push_back(std::move(trace));
    }
    out.psrf = metrics::psrf(halves);
    out.seconds = seconds_since(start);
    return out;
}

}  // namespace mfseg::experiments
