#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mfseg/grid.hpp"

namespace mfseg::metrics {

struct Confusion {
    std::int64_t tp = 0;
    std::int64_t tn = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
};

/// Scores under the label permutation of the prediction that minimizes the
/// error. permutation[p] is the true label (1-based) assigned to predicted
/// label p + 1; dsc and confusion are indexed by true label - 1.
struct SegScore {
    std::vector<double> dsc;
    double error_percent = 0.0;
    std::vector<Confusion> confusion;
    std::vector<int> permutation;
};

/// Exhaustive search over the K! relabelings of the prediction (K <= 8);
/// ties go to the lexicographically first permutation. Labels are 1..K.
SegScore score_segmentation(const Grid<std::uint8_t>& pred, const Grid<std::uint8_t>& truth, int num_classes);

/// Gelman-Rubin potential scale reduction factor:
/// sqrt(((n-1)/n W + B/n) / W).
double psrf(std::span<const std::vector<double>> chains);

/// Cubic term of the log-cumulant expansion of D(h).
///   kNone:      quadratic expansion only
///   kCorrected: -c3/3! ((h - c1)/c2)^3
///   kAsPrinted: -c3/3! ((h - c2)/c2)^3
enum class CubicTerm { kNone, kCorrected, kAsPrinted };

struct SpectrumPoint {
    double h = 0.0;
    double d = 0.0;
};

/// D(h) = 2 + c2/2 ((h - c1)/c2)^2 [+ cubic] on `points` values of h evenly
/// spaced over [h_min, h_max]. Throws kParameterDomain unless c2 < 0.
std::vector<SpectrumPoint> spectrum_curve(double c1, double c2, std::optional<double> c3, CubicTerm cubic,
                                          double h_min, double h_max, int points);

struct MonteCarloStats {
    double mean = 0.0;
    double stddev = 0.0;  // n - 1 denominator, 0 for a single estimate
    double rmse = 0.0;
};

MonteCarloStats monte_carlo_stats(std::span<const double> estimates, double truth);

}  // namespace mfseg::metrics
