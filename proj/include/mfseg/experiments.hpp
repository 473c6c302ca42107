#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "mfseg/metrics.hpp"
#include "mfseg/sampler.hpp"
#include "mfseg/synth.hpp"

namespace mfseg::experiments {

/// Two-region scenarios: background c2 fixed, disk c2 varied.
inline constexpr double kBackgroundC2 = -0.02;
inline constexpr std::array<double, 3> kDiskC2 = {-0.005, -0.08, -0.2};

/// Reference mean, STD and RMSE of the MMSE estimate of -theta1.
struct ReferenceParameter {
    double mean;
    double stddev;
    double rmse;
};

/// Reference DSC per class and error percentage, with their STDs.
struct ReferenceSegmentation {
    double dsc1, dsc1_std;
    double dsc2, dsc2_std;
    double error, error_std;
};

/// [scenario][class], class 0 = background.
inline constexpr ReferenceParameter kReferenceKnownLabels[3][2] = {
    {{-0.032, 0.005, 0.013}, {-0.014, 0.003, 0.010}},
    {{-0.034, 0.005, 0.015}, {-0.087, 0.016, 0.018}},
    {{-0.034, 0.004, 0.015}, {-0.184, 0.028, 0.032}},
};
inline constexpr ReferenceParameter kReferenceJoint[3][2] = {
    {{-0.041, 0.014, 0.025}, {-0.023, 0.013, 0.022}},
    {{-0.033, 0.006, 0.014}, {-0.113, 0.025, 0.041}},
    {{-0.037, 0.011, 0.020}, {-0.238, 0.058, 0.069}},
};
inline constexpr ReferenceSegmentation kReferenceSegmentation[3] = {
    {0.649, 0.103, 0.487, 0.223, 39.4, 8.3},
    {0.909, 0.034, 0.752, 0.117, 13.2, 4.8},
    {0.940, 0.030, 0.816, 0.140, 9.0, 5.0},
};
inline constexpr double kReferencePsrf = 1.0009;

struct ProtocolOptions {
    int reps = 20;
    int side = 512;
    std::uint64_t seed = 1;
    int iterations = 300;
    int burn_in = 30;
    int j1 = 1;
    int j2 = 3;
    int wavelet_order = 1;
};

/// One realization of a scenario. neg_theta1[k] is the MMSE of -theta1 for
/// true class k (estimated classes are mapped through the best label
/// permutation in joint runs).
struct Realization {
    std::array<double, 2> neg_theta1{};
    std::optional<metrics::SegScore> score;
    double seconds = 0.0;
};

/// Scene of realization `rep`; all rows of a table share the background draw.
synth::Scene scenario_scene(double disk_c2, int rep, const ProtocolOptions& options);

Realization run_known_labels(double disk_c2, int rep, const ProtocolOptions& options);
Realization run_joint(double disk_c2, int rep, const ProtocolOptions& options);

struct ParameterRow {
    int scenario = 0;  // index into kDiskC2
    int k = 0;         // 0 background, 1 disk
    double truth = 0.0;
    metrics::MonteCarloStats stats;
    ReferenceParameter reference{};
};

struct SegmentationRow {
    int scenario = 0;
    double dsc1 = 0.0, dsc1_std = 0.0;
    double dsc2 = 0.0, dsc2_std = 0.0;
    double error = 0.0, error_std = 0.0;
    ReferenceSegmentation reference{};
};

struct TableResult {
    std::vector<ParameterRow> parameters;
    std::vector<SegmentationRow> segmentation;  // joint protocol only
    double seconds = 0.0;
};

/// Known-label protocol over all scenarios.
TableResult table_known_labels(const ProtocolOptions& options);

/// Joint protocol over all scenarios; fills both parameter and
/// segmentation rows from the same runs.
TableResult table_joint(const ProtocolOptions& options);

struct ConvergenceOptions {
    int chains = 5;
    int iterations = 1000;
    int burn_in = 30;
    int side = 512;
    std::uint64_t seed = 1;
};

/// Chains on one scenario-1 image, started from the maximum-likelihood
/// parameters scaled by 1/4, 1/2, 1, 2, 4, ... (cycled). PSRF is computed
/// on the second half of each background theta1 trace.
struct ConvergenceResult {
    std::vector<std::vector<double>> background_theta1;  // full traces
    double psrf = 0.0;
    double seconds = 0.0;
};
ConvergenceResult convergence(const ConvergenceOptions& options);

/// Segmentation-mode chains for `segment --chains`: same labels at start,
/// seeds derived per chain, theta start scaled as in convergence().
struct ChainSet {
    std::vector<sampler::SamplerState> chains;
    std::vector<double> psrf_theta1;  // per class, second halves
    std::vector<double> psrf_theta2;
};
ChainSet run_chains(const transform::LogLeaderPyramid& ell, const sampler::SamplerConfig& config, int chains);

/// Dispersion factor of chain c.
double chain_factor(int c);

}  // namespace mfseg::experiments
