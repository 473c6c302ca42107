#include "mfseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mfseg/errors.hpp"

namespace mfseg::metrics {

SegScore score_segmentation(const Grid<std::uint8_t>& pred, const Grid<std::uint8_t>& truth, int num_classes) {
    const int K = num_classes;
    if (K < 1 || K > 8) throw Error(ErrorKind::kConfig, "scoring supports 1 to 8 classes");
    if (pred.side() != truth.side()) throw Error(ErrorKind::kShapeMismatch, "mask sizes differ");
    std::vector<std::int64_t> table(static_cast<std::size_t>(K) * K, 0);  // [pred][truth]
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int p = pred[i], t = truth[i];
        if (p < 1 || p > K || t < 1 || t > K) throw Error(ErrorKind::kConfig, "mask label outside 1..K");
        ++table[static_cast<std::size_t>(p - 1) * K + (t - 1)];
    }
    const auto total = static_cast<std::int64_t>(pred.size());

    std::vector<int> perm(static_cast<std::size_t>(K));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    std::int64_t best_correct = -1;
    do {
        std::int64_t correct = 0;
        for (int p = 0; p < K; ++p) correct += table[static_cast<std::size_t>(p) * K + perm[p]];
        if (correct > best_correct) {
            best_correct = correct;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    SegScore score;
    score.error_percent = total > 0 ? 100.0 * static_cast<double>(total - best_correct) / static_cast<double>(total) : 0.0;
    for (int p = 0; p < K; ++p) score.permutation.push_back(best[p] + 1);
    std::vector<int> inverse(static_cast<std::size_t>(K));
    for (int p = 0; p < K; ++p) inverse[best[p]] = p;
    for (int k = 0; k < K; ++k) {
        const int p = inverse[k];
        Confusion c;
        for (int t = 0; t < K; ++t) {
            const auto v = table[static_cast<std::size_t>(p) * K + t];
            if (t == k) {
                c.tp = v;
            } else {
                c.fp += v;
            }
        }
        for (int q = 0; q < K; ++q) {
            if (q != p) c.fn += table[static_cast<std::size_t>(q) * K + k];
        }
        c.tn = total - c.tp - c.fp - c.fn;
        const auto denom = 2 * c.tp + c.fp + c.fn;
        score.dsc.push_back(denom > 0 ? 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom) : 1.0);
        score.confusion.push_back(c);
    }
    return score;
}

double psrf(std::span<const std::vector<double>> chains) {
    const std::size_t m = chains.size();
    if (m < 2) throw Error(ErrorKind::kConfig, "PSRF needs at least two chains");
    const std::size_t n = chains.front().size();
    if (n < 10) throw Error(ErrorKind::kConfig, "PSRF needs chains of length >= 10");
    for (const auto& c : chains) {
        if (c.size() != n) throw Error(ErrorKind::kShapeMismatch, "PSRF chains must have equal length");
    }
    const double dn = static_cast<double>(n);
    std::vector<double> means(m);
    double within = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        means[i] = std::accumulate(chains[i].begin(), chains[i].end(), 0.0) / dn;
        double ss = 0.0;
        for (double v : chains[i]) ss += (v - means[i]) * (v - means[i]);
        within += ss / (dn - 1.0);
    }
    within /= static_cast<double>(m);
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
    double between = 0.0;
    for (double mu : means) between += (mu - grand) * (mu - grand);
    between *= dn / static_cast<double>(m - 1);
    if (within <= 0.0) return between > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    const double pooled = (dn - 1.0) / dn * within + between / dn;
    return std::sqrt(pooled / within);
}

std::vector<SpectrumPoint> spectrum_curve(double c1, double c2, std::optional<double> c3, CubicTerm cubic,
                                          double h_min, double h_max, int points) {
    if (!(c2 < 0.0)) throw Error(ErrorKind::kParameterDomain, "spectrum expansion needs c2 < 0");
    if (points < 2 || !(h_max > h_min)) throw Error(ErrorKind::kConfig, "need at least two points on a nonempty range");
    std::vector<SpectrumPoint> out;
    out.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double h = h_min + (h_max - h_min) * i / (points - 1);
        const double u = (h - c1) / c2;
        double d = 2.0 + 0.5 * c2 * u * u;
        if (c3 && cubic != CubicTerm::kNone) {
            const double v = cubic == CubicTerm::kCorrected ? u : (h - c2) / c2;
            d += -*c3 / 6.0 * v * v * v;
        }
        out.push_back({h, d});
    }
    return out;
}

MonteCarloStats monte_carlo_stats(std::span<const double> estimates, double truth) {
    if (estimates.empty()) throw Error(ErrorKind::kConfig, "no estimates");
    const double n = static_cast<double>(estimates.size());
    MonteCarloStats s;
    s.mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / n;
    double ss = 0.0, se = 0.0;
    for (double e : estimates) {
        ss += (e - s.mean) * (e - s.mean);
        se += (e - truth) * (e - truth);
    }
    s.stddev = estimates.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.rmse = std::sqrt(se / n);
    return s;
}

}  // namespace mfseg::metrics
