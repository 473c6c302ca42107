#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "doctest.h"
#include "mfseg/errors.hpp"
#include "mfseg/potts.hpp"
#include "mfseg/rng.hpp"
#include "oracles.hpp"

using namespace mfseg;
using namespace mfseg::potts;

namespace {

using DataFn = std::function<double(int, std::size_t, int)>;

DataFn table_data(const DataTerm& d) {
    return [d](int j, std::size_t i, int k) { return d.site(j, i)[k]; };
}

DataTerm make_data(const LabelPyramid& shape, std::uint64_t seed, double sd) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, sd);
    DataTerm d;
    d.j1 = shape.j1();
    d.num_classes = shape.num_classes;
    for (int j = shape.j1(); j <= shape.j2(); ++j) {
        std::vector<double> v(shape[j].size() * shape.num_classes);
        for (auto& x : v) x = normal(gen);
        d.per_scale.push_back(std::move(v));
    }
    return d;
}

Granularity random_beta(int j1, int j2, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    Granularity b(j1, j2, 0.0, 10.0);
    b.scale = u(gen);
    for (auto& s : b.spatial) s = u(gen);
    return b;
}

/// Single-site conditional from the enumerated joint: p(z with k) over the
/// sum of p(z with k') at one site, everything else held fixed.
std::vector<double> enumerated_conditional(const oracle::JointTable& t, const LabelPyramid& z, int j, int r,
                                           int c) {
    const int K = z.num_classes;
    std::vector<double> p(K);
    for (int k = 0; k < K; ++k) {
        LabelPyramid w = z;
        w[j](r, c) = static_cast<std::uint8_t>(k);
        p[k] = t.prob[oracle::state_code(w)];
    }
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& v : p) v /= sum;
    return p;
}

}  // namespace

TEST_CASE("spatial potential") {
    Grid<std::uint8_t> uniform(8, 1);
    CHECK(spatial_potential(uniform, 1.0) == 256.0);
    Grid<std::uint8_t> board(8);
    for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < 8; ++c) board(r, c) = (r + c) & 1;
    }
    CHECK(spatial_potential(board, 1.0) == 0.0);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto z = oracle::random_labels(6, 3, seed);
        CHECK(spatial_potential(z, 0.7) == doctest::Approx(0.7 * static_cast<double>(oracle::brute_spatial_pairs(z))));
    }
    // small tori where neighbours repeat
    for (int side : {1, 2}) {
        const auto z = oracle::random_labels(side, 2, 9);
        CHECK(spatial_agreements(z) == oracle::brute_spatial_pairs(z));
    }
}

TEST_CASE("scale potential") {
    Grid<std::uint8_t> mid(8, 1), fine(16, 1), coarse(4, 1);
    CHECK(scale_potential(mid, &fine, &coarse, 1.0) == 320.0);
    Grid<std::uint8_t> other(4, 0);
    CHECK(scale_potential(mid, nullptr, &other, 1.0) == 0.0);

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        LabelPyramid z(64, 1, 3, 2);
        for (int j = 1; j <= 3; ++j) z[j] = oracle::random_labels(z[j].side(), 2, seed * 7 + j);
        double total = 0.0;
        for (int j = 1; j <= 3; ++j) {
            total += scale_potential(z[j], j > 1 ? &z[j - 1] : nullptr, j < 3 ? &z[j + 1] : nullptr, 0.5);
        }
        CHECK(total == doctest::Approx(0.5 * static_cast<double>(oracle::brute_scale_pairs(z))));
        CHECK(statistics(z).scale == oracle::brute_scale_pairs(z));
    }
}

TEST_CASE("potentials are invariant under relabelling") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 5; ++trial) {
        LabelPyramid z(32, 1, 3, 3);
        for (int j = 1; j <= 3; ++j) z[j] = oracle::random_labels(z[j].side(), 3, 100 + trial * 3 + j);
        std::array<std::uint8_t, 3> perm = {0, 1, 2};
        std::shuffle(perm.begin(), perm.end(), gen);
        LabelPyramid w = z;
        for (int j = 1; j <= 3; ++j) {
            for (auto& v : w[j]) v = perm[v];
        }
        const PottsStatistics a = statistics(z), b = statistics(w);
        CHECK(a.spatial == b.spatial);
        CHECK(a.scale == b.scale);
    }
}

TEST_CASE("neighbourhood structure") {
    for (int side : {4, 8, 16}) {
        for (int r = 0; r < side; ++r) {
            for (int c = 0; c < side; ++c) {
                const auto nb = MultiscaleGraph::spatial_neighbors(side, r, c);
                CHECK(nb.size() == 4);
                for (const Site& m : nb) CHECK(MultiscaleGraph::parity(m.r, m.c) != MultiscaleGraph::parity(r, c));
                for (const Site& q : MultiscaleGraph::children(r, c)) CHECK(MultiscaleGraph::parent(q.r, q.c) == Site{r, c});
            }
        }
    }
}

TEST_CASE("conditional basics") {
    LabelPyramid z(32, 1, 2, 3);
    z[1] = oracle::random_labels(16, 3, 4);
    z[2] = oracle::random_labels(8, 3, 5);
    const std::vector<double> data = {-1.2, 0.4, -0.3};

    const Granularity zero(1, 2, 0.0, 10.0);
    const auto p = label_conditional(z, 1, 3, 5, zero, data);
    double norm = 0.0;
    for (double d : data) norm += std::exp(d);
    for (int k = 0; k < 3; ++k) CHECK(p[k] == doctest::Approx(std::exp(data[k]) / norm).epsilon(1e-14));

    // strong spatial prior dominates equal data
    LabelPyramid u(32, 1, 1, 3);
    u[1](4, 4) = 0;
    for (const Site& m : MultiscaleGraph::spatial_neighbors(16, 4, 4)) u[1](m.r, m.c) = 2;
    Granularity strong(1, 1, 10.0, 10.0);
    const auto q = label_conditional(u, 1, 4, 4, strong, std::vector<double>(3, -0.5));
    CHECK(q[2] >= 0.999);
    CHECK(std::accumulate(q.begin(), q.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));

    // extreme data must not underflow
    const std::vector<double> far = {-1e5, -1e5 + 3.0, -2e5};
    const auto e = label_conditional(z, 2, 1, 1, zero, far);
    CHECK(std::accumulate(e.begin(), e.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e[1] > e[0]);

    const std::vector<double> dead(3, -std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(label_conditional(z, 1, 0, 0, zero, dead), Error);
}

TEST_CASE("conditionals agree with exhaustive joint enumeration") {
    // 2x2 + 1x1 pyramids (5 sites); K = 2 and K = 3
    for (int K : {2, 3}) {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            const LabelPyramid shape(4, 1, 2, K);
            const Granularity beta = random_beta(1, 2, seed);
            const DataTerm data = make_data(shape, seed + 50, 1.0);
            const oracle::JointTable t = oracle::enumerate_joint(shape, beta, table_data(data));
            for (std::size_t s = 0; s < t.states.size(); s += 7) {
                const LabelPyramid& z = t.states[s];
                for (int j = 1; j <= 2; ++j) {
                    for (int r = 0; r < z[j].side(); ++r) {
                        for (int c = 0; c < z[j].side(); ++c) {
                            const auto got = label_conditional(z, j, r, c, beta, data.site(j, z[j].index(r, c)));
                            const auto want = enumerated_conditional(t, z, j, r, c);
                            for (int k = 0; k < K; ++k) CHECK(std::abs(got[k] - want[k]) < 1e-10);
                        }
                    }
                }
            }
        }
    }
    // 4x4 + 2x2 pyramid: too many states to enumerate, so compare against
    // the joint evaluated at each label of the site with the rest fixed
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        LabelPyramid z(16, 2, 3, 2);
        z[2] = oracle::random_labels(4, 2, seed);
        z[3] = oracle::random_labels(2, 2, seed + 9);
        const Granularity beta = random_beta(2, 3, seed + 20);
        const DataTerm data = make_data(z, seed + 30, 1.0);
        for (int j = 2; j <= 3; ++j) {
            for (int r = 0; r < z[j].side(); ++r) {
                for (int c = 0; c < z[j].side(); ++c) {
                    std::array<double, 2> e{};
                    for (int k = 0; k < 2; ++k) {
                        LabelPyramid w = z;
                        w[j](r, c) = static_cast<std::uint8_t>(k);
                        e[k] = oracle::joint_log_potential(w, beta, table_data(data));
                    }
                    const double p1 = 1.0 / (1.0 + std::exp(e[0] - e[1]));
                    const auto got = label_conditional(z, j, r, c, beta, data.site(j, z[j].index(r, c)));
                    CHECK(std::abs(got[1] - p1) < 1e-10);
                }
            }
        }
    }
}

TEST_CASE("a checkerboard sweep leaves the joint distribution invariant") {
    // Gibbs kernel of one full sweep on a 2x2 + 1x1 pyramid, built from the
    // enumerated joint: each parity pass updates conditionally independent
    // sites, so the pass kernel is the product of single-site kernels.
    const int K = 2;
    const LabelPyramid shape(4, 1, 2, K);
    const Granularity beta = random_beta(1, 2, 77);
    const DataTerm data = make_data(shape, 78, 0.8);
    const oracle::JointTable t = oracle::enumerate_joint(shape, beta, table_data(data));
    const std::size_t n = t.states.size();

    auto site_kernel = [&](int j, int r, int c) {
        std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
        for (std::size_t s = 0; s < n; ++s) {
            const auto p = enumerated_conditional(t, t.states[s], j, r, c);
            for (int k = 0; k < K; ++k) {
                LabelPyramid w = t.states[s];
                w[j](r, c) = static_cast<std::uint8_t>(k);
                m[s][oracle::state_code(w)] += p[k];
            }
        }
        return m;
    };
    auto multiply = [&](const auto& a, const auto& b) {
        std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                for (std::size_t j = 0; j < n; ++j) m[i][j] += a[i][k] * b[k][j];
            }
        }
        return m;
    };

    // sweep order: scale 2, then scale 1 even sites, then odd sites
    auto kernel = site_kernel(2, 0, 0);
    for (const auto& [r, c] : {std::pair{0, 0}, {1, 1}, {0, 1}, {1, 0}}) kernel = multiply(kernel, site_kernel(1, r, c));
    for (std::size_t j = 0; j < n; ++j) {
        double flow = 0.0;
        for (std::size_t i = 0; i < n; ++i) flow += t.prob[i] * kernel[i][j];
        CHECK(std::abs(flow - t.prob[j]) < 1e-12);
    }

    // the implemented sweep draws from that kernel
    constexpr int kDraws = 20000;
    const std::size_t start = 13;
    std::vector<double> counts(n, 0.0);
    for (int d = 0; d < kDraws; ++d) {
        LabelPyramid z = t.states[start];
        checkerboard_sweep(z, beta, &data, derive_seed(5, {static_cast<std::uint64_t>(d)}));
        counts[oracle::state_code(z)] += 1.0;
    }
    double chi2 = 0.0;
    int df = -1;
    for (std::size_t j = 0; j < n; ++j) {
        const double expected = kDraws * kernel[start][j];
        if (expected < 5.0) continue;
        chi2 += (counts[j] - expected) * (counts[j] - expected) / expected;
        ++df;
    }
    REQUIRE(df >= 10);
    CHECK(oracle::chi_square_upper(chi2, df) > 0.01);
}

TEST_CASE("with beta = 0 the sweep samples sites independently from the data softmax") {
    const int K = 3;
    LabelPyramid shape(8, 1, 1, K);  // 4x4 grid
    const DataTerm data = make_data(shape, 12, 1.0);
    const Granularity zero(1, 1, 0.0, 10.0);
    constexpr int kSweeps = 1000;
    std::vector<std::array<double, 3>> counts(16, {0.0, 0.0, 0.0});
    LabelPyramid z = shape;
    for (int s = 0; s < kSweeps; ++s) {
        checkerboard_sweep(z, zero, &data, derive_seed(9, {static_cast<std::uint64_t>(s)}));
        for (std::size_t i = 0; i < 16; ++i) counts[i][z[1][i]] += 1.0;
    }
    double chi2 = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
        const auto d = data.site(1, i);
        double norm = 0.0;
        for (int k = 0; k < K; ++k) norm += std::exp(d[k]);
        for (int k = 0; k < K; ++k) {
            const double expected = kSweeps * std::exp(d[k]) / norm;
            chi2 += (counts[i][k] - expected) * (counts[i][k] - expected) / expected;
        }
    }
    CHECK(oracle::chi_square_upper(chi2, 16.0 * (K - 1)) > 0.01);
}

TEST_CASE("sweep limits and reproducibility") {
    LabelPyramid z(64, 1, 3, 3);
    for (int j = 1; j <= 3; ++j) z[j] = oracle::random_labels(z[j].side(), 3, 40 + j);
    DataTerm data = make_data(z, 41, 1.0);
    for (auto& v : data.per_scale) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % 3 == 1) ? 0.0 : -1e6;
    }
    LabelPyramid a = z;
    checkerboard_sweep(a, Granularity(1, 3, 1.0, 10.0), &data, 3);
    for (int j = 1; j <= 3; ++j) {
        for (auto v : a[j]) CHECK(v == 1);
    }

    LabelPyramid b = z, c = z;
    const DataTerm mild = make_data(z, 42, 1.0);
    checkerboard_sweep(b, Granularity(1, 3, 0.8, 10.0), &mild, 99);
    checkerboard_sweep(c, Granularity(1, 3, 0.8, 10.0), &mild, 99);
    CHECK(b == c);
    LabelPyramid d = z;
    checkerboard_sweep(d, Granularity(1, 3, 0.8, 10.0), nullptr, 99);
    for (int j = 1; j <= 3; ++j) {
        for (auto v : d[j]) CHECK(v < 3);
    }
}
