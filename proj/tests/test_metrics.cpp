#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "mfseg/errors.hpp"
#include "mfseg/metrics.hpp"
#include "oracles.hpp"

using namespace mfseg;
using namespace mfseg::metrics;

namespace {

// 1-based labels as stored in masks
Grid<std::uint8_t> labels(int side, int K, std::uint64_t seed) {
    auto g = oracle::random_labels(side, K, seed);
    for (auto& v : g) ++v;
    return g;
}

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::kConfig;
}

Grid<std::uint8_t> relabel(const Grid<std::uint8_t>& g, const std::vector<int>& map) {
    Grid<std::uint8_t> out = g;
    for (auto& v : out) v = static_cast<std::uint8_t>(map[v - 1]);
    return out;
}

// Pixel-level search: for every relabeling of pred, count mismatches and
// per-class confusion directly.
SegScore brute_score(const Grid<std::uint8_t>& pred, const Grid<std::uint8_t>& truth, int K) {
    std::vector<int> perm(K);
    std::iota(perm.begin(), perm.end(), 1);
    SegScore best;
    std::int64_t best_err = -1;
    do {
        std::int64_t err = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) err += perm[pred[i] - 1] != truth[i];
        if (best_err < 0 || err < best_err) {
            best_err = err;
            best.permutation = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    best.error_percent = 100.0 * static_cast<double>(best_err) / static_cast<double>(pred.size());
    for (int k = 1; k <= K; ++k) {
        Confusion c;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const bool p = best.permutation[pred[i] - 1] == k, t = truth[i] == k;
            c.tp += p && t;
            c.fp += p && !t;
            c.fn += !p && t;
            c.tn += !p && !t;
        }
        best.confusion.push_back(c);
        const auto denom = 2 * c.tp + c.fp + c.fn;
        best.dsc.push_back(denom ? 2.0 * c.tp / static_cast<double>(denom) : 1.0);
    }
    return best;
}

std::vector<double> noise(std::size_t n, std::uint64_t seed, double mean = 0.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(mean, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = nd(gen);
    return v;
}

}  // namespace

TEST_CASE("identical masks score perfectly") {
    const auto truth = labels(32, 3, 1);
    const SegScore s = score_segmentation(truth, truth, 3);
    CHECK(s.error_percent == 0.0);
    for (double d : s.dsc) CHECK(d == 1.0);
    CHECK(s.permutation == std::vector<int>{1, 2, 3});
}

TEST_CASE("half-correct two-class mask") {
    Grid<std::uint8_t> truth(4, 1), pred(4, 1);
    for (int r = 0; r < 4; ++r) {
        for (int c = 2; c < 4; ++c) truth(r, c) = 2;
    }
    // all pixels predicted as one class: identity and swap tie at 50%
    const SegScore s = score_segmentation(pred, truth, 2);
    CHECK(s.error_percent == 50.0);
    CHECK(s.permutation == std::vector<int>{1, 2});
    CHECK(s.dsc[0] == doctest::Approx(2.0 / 3.0));
    CHECK(s.dsc[1] == 0.0);
    CHECK(s.confusion[0].tp == 8);
    CHECK(s.confusion[0].fp == 8);
    CHECK(s.confusion[0].fn == 0);
    CHECK(s.confusion[1].fn == 8);
}

TEST_CASE("label switching is absorbed by the permutation") {
    const auto truth = labels(32, 2, 4);
    const auto swapped = relabel(truth, {2, 1});
    const SegScore s = score_segmentation(swapped, truth, 2);
    CHECK(s.error_percent == 0.0);
    CHECK(s.permutation == std::vector<int>{2, 1});
    CHECK(s.dsc == std::vector<double>{1.0, 1.0});
}

TEST_CASE("score is invariant under a common relabeling") {
    const auto truth = labels(32, 3, 7);
    const auto pred = labels(32, 3, 8);
    const std::vector<int> map{3, 1, 2};
    const SegScore a = score_segmentation(pred, truth, 3);
    const SegScore b = score_segmentation(relabel(pred, map), relabel(truth, map), 3);
    CHECK(a.error_percent == b.error_percent);
    for (int k = 0; k < 3; ++k) CHECK(a.dsc[k] == doctest::Approx(b.dsc[map[k] - 1]));
}

TEST_CASE("score matches the pixel-level oracle") {
    for (int K = 1; K <= 4; ++K) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto truth = labels(16, K, 100 * K + seed);
            auto pred = truth;
            std::mt19937_64 gen(seed);
            std::uniform_int_distribution<int> lab(1, K);
            std::bernoulli_distribution flip(0.3);
            for (auto& v : pred) {
                if (flip(gen)) v = static_cast<std::uint8_t>(lab(gen));
            }
            std::vector<int> map(K);
            std::iota(map.begin(), map.end(), 1);
            std::shuffle(map.begin(), map.end(), gen);
            pred = relabel(pred, map);
            const SegScore got = score_segmentation(pred, truth, K);
            const SegScore want = brute_score(pred, truth, K);
            CHECK(got.error_percent == doctest::Approx(want.error_percent));
            CHECK(got.permutation == want.permutation);
            for (int k = 0; k < K; ++k) {
                CHECK(got.dsc[k] == doctest::Approx(want.dsc[k]));
                CHECK(got.confusion[k].tp == want.confusion[k].tp);
                CHECK(got.confusion[k].tn == want.confusion[k].tn);
                CHECK(got.confusion[k].fp == want.confusion[k].fp);
                CHECK(got.confusion[k].fn == want.confusion[k].fn);
            }
        }
    }
}

TEST_CASE("scoring preconditions") {
    CHECK(kind_of([] { score_segmentation(Grid<std::uint8_t>(8, 1), Grid<std::uint8_t>(16, 1), 2); }) ==
          ErrorKind::kShapeMismatch);
    CHECK(kind_of([] { score_segmentation(Grid<std::uint8_t>(8, 3), Grid<std::uint8_t>(8, 1), 2); }) ==
          ErrorKind::kConfig);
    CHECK(kind_of([] { score_segmentation(Grid<std::uint8_t>(8, 1), Grid<std::uint8_t>(8, 1), 9); }) ==
          ErrorKind::kConfig);
}

TEST_CASE("potential scale reduction factor") {
    const std::vector<std::vector<double>> mixed{noise(1000, 1), noise(1000, 2)};
    CHECK(psrf(mixed) < 1.05);
    CHECK(psrf(mixed) > 0.95);

    const std::vector<std::vector<double>> apart{noise(1000, 3, 0.0), noise(1000, 4, 10.0)};
    CHECK(psrf(apart) > 1.2);

    const auto one = noise(200, 5);
    const std::vector<std::vector<double>> copies{one, one, one};
    CHECK(psrf(copies) == doctest::Approx(std::sqrt(199.0 / 200.0)));

    // oracle straight from the definition
    const std::vector<std::vector<double>> three{noise(50, 6, 0.0), noise(50, 7, 0.3), noise(50, 8, -0.2)};
    double w = 0.0, b = 0.0, grand = 0.0;
    std::vector<double> means;
    for (const auto& c : three) means.push_back(std::accumulate(c.begin(), c.end(), 0.0) / 50.0);
    for (double m : means) grand += m / 3.0;
    for (std::size_t i = 0; i < 3; ++i) {
        for (double v : three[i]) w += (v - means[i]) * (v - means[i]) / 49.0 / 3.0;
        b += 50.0 * (means[i] - grand) * (means[i] - grand) / 2.0;
    }
    CHECK(psrf(three) == doctest::Approx(std::sqrt((49.0 / 50.0 * w + b / 50.0) / w)));

    CHECK(kind_of([] {
              const std::vector<std::vector<double>> c{noise(100, 1)};
              psrf(c);
          }) == ErrorKind::kConfig);
    CHECK(kind_of([] {
              const std::vector<std::vector<double>> c{noise(5, 1), noise(5, 2)};
              psrf(c);
          }) == ErrorKind::kConfig);
    CHECK(kind_of([] {
              const std::vector<std::vector<double>> c{noise(20, 1), noise(30, 2)};
              psrf(c);
          }) == ErrorKind::kShapeMismatch);
}

TEST_CASE("multifractal spectrum curve") {
    const auto curve = spectrum_curve(0.5, -0.08, std::nullopt, CubicTerm::kNone, 0.0, 1.0, 101);
    REQUIRE(curve.size() == 101);
    CHECK(curve.front().h == 0.0);
    CHECK(curve.back().h == 1.0);
    CHECK(curve[50].d == doctest::Approx(2.0));
    for (std::size_t i = 0; i < curve.size(); ++i) {
        CHECK(curve[i].d <= 2.0 + 1e-15);
        CHECK(curve[i].d == doctest::Approx(curve[100 - i].d));
    }
    // D(c1 +- dh) = 2 + dh^2 / (2 c2)
    CHECK(curve[60].d == doctest::Approx(2.0 + 0.01 / (2.0 * -0.08)));

    const double c3 = 0.01;
    const auto none = spectrum_curve(0.5, -0.08, c3, CubicTerm::kNone, 0.0, 1.0, 11);
    const auto fixed = spectrum_curve(0.5, -0.08, c3, CubicTerm::kCorrected, 0.0, 1.0, 11);
    const auto printed = spectrum_curve(0.5, -0.08, c3, CubicTerm::kAsPrinted, 0.0, 1.0, 11);
    for (std::size_t i = 0; i < 11; ++i) {
        const double h = none[i].h;
        const double u = (h - 0.5) / -0.08, v = (h + 0.08) / -0.08;
        CHECK(fixed[i].d == doctest::Approx(none[i].d - c3 / 6.0 * u * u * u));
        CHECK(printed[i].d == doctest::Approx(none[i].d - c3 / 6.0 * v * v * v));
    }
    CHECK(fixed[5].d == doctest::Approx(2.0));

    CHECK(kind_of([] { spectrum_curve(0.5, 0.0, std::nullopt, CubicTerm::kNone, 0.0, 1.0, 5); }) ==
          ErrorKind::kParameterDomain);
    CHECK(kind_of([] { spectrum_curve(0.5, 0.1, std::nullopt, CubicTerm::kNone, 0.0, 1.0, 5); }) ==
          ErrorKind::kParameterDomain);
    CHECK(kind_of([] { spectrum_curve(0.5, -0.1, std::nullopt, CubicTerm::kNone, 0.0, 1.0, 1); }) ==
          ErrorKind::kConfig);
}

TEST_CASE("Monte Carlo summaries") {
    const std::vector<double> e{0.0, 2.0};
    const MonteCarloStats s = monte_carlo_stats(e, 1.0);
    CHECK(s.mean == 1.0);
    CHECK(s.stddev == doctest::Approx(std::sqrt(2.0)));
    CHECK(s.rmse == 1.0);
    const std::vector<double> single{0.3};
    const MonteCarloStats t = monte_carlo_stats(single, 0.0);
    CHECK(t.stddev == 0.0);
    CHECK(t.rmse == doctest::Approx(0.3));
    CHECK(kind_of([] { monte_carlo_stats(std::span<const double>{}, 0.0); }) == ErrorKind::kConfig);
}
