#include <cmath>
#include <set>

#include "doctest.h"
#include "mfseg/errors.hpp"
#include "mfseg/rng.hpp"
#include "mfseg/sampler.hpp"
#include "mfseg/synth.hpp"

using namespace mfseg;
using namespace mfseg::synth;

namespace {

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::kConfig;
}

struct SlopeStats {
    double mean = 0.0;
    double sd = 0.0;
    double r_squared = 0.0;
};

SlopeStats regression_over(int reps, std::uint64_t seed, double c2, int j1, int j2) {
    std::vector<double> slopes;
    SlopeStats s;
    for (int rep = 0; rep < reps; ++rep) {
        const Image img = synth_mrw({512, 0.5, c2, 0.0, derive_seed(seed, {static_cast<std::uint64_t>(rep)})});
        const auto ell = transform::analyze(img, 1, j1, j2);
        const auto e = sampler::regression_estimate_c2(ell, j1, j2);
        slopes.push_back(e.c2);
        s.r_squared += e.r_squared / reps;
    }
    for (double v : slopes) s.mean += v / reps;
    for (double v : slopes) s.sd += (v - s.mean) * (v - s.mean) / (reps - 1);
    s.sd = std::sqrt(s.sd);
    return s;
}

// Regression on log-leaders at least `margin` finest pixels away from any
// other region.
double interior_regression(const transform::LogLeaderPyramid& ell, const Grid<std::uint8_t>& mask, int label,
                           int margin) {
    const int n = mask.side();
    Grid<std::uint8_t> inside(n, 0);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            bool ok = true;
            for (int dr = -margin; dr <= margin && ok; dr += 4) {
                for (int dc = -margin; dc <= margin && ok; dc += 4) ok = mask.wrapped(r + dr, c + dc) == label;
            }
            inside(r, c) = ok;
        }
    }
    std::vector<double> variances;
    for (int j = ell.j1(); j <= ell.j2(); ++j) {
        const auto& g = ell[j];
        double m = 0.0, m2 = 0.0, count = 0.0;
        for (int r = 0; r < g.side(); ++r) {
            for (int c = 0; c < g.side(); ++c) {
                if (!inside((r << j) + (1 << (j - 1)), (c << j) + (1 << (j - 1)))) continue;
                m += g(r, c);
                m2 += g(r, c) * g(r, c);
                count += 1.0;
            }
        }
        m /= count;
        variances.push_back(m2 / count - m * m);
    }
    return sampler::regress_variances(variances, ell.j1()).c2;
}

}  // namespace

TEST_CASE("MRW specification checks") {
    CHECK(kind_of([] { synth_mrw({100, 0.5, -0.08, 0.0, 1}); }) == ErrorKind::kDimension);
    CHECK(kind_of([] { synth_mrw({64, 0.5, 0.0, 0.0, 1}); }) == ErrorKind::kConfig);
    CHECK(kind_of([] { synth_mrw({64, 0.5, -0.08, 65.0, 1}); }) == ErrorKind::kConfig);
    CHECK(kind_of([] { preset("nope"); }) == ErrorKind::kConfig);
}

TEST_CASE("synthesis is deterministic") {
    const MrwSpec spec{128, 0.5, -0.08, 0.0, 42};
    const Image a = synth_mrw(spec);
    const Image b = synth_mrw(spec);
    CHECK(a == b);
    for (double v : a) CHECK(std::isfinite(v));
    MrwSpec other = spec;
    other.seed = 43;
    CHECK_FALSE(synth_mrw(other) == a);
    CHECK(synth_scene(preset("k3-default", 5, 128)).image == synth_scene(preset("k3-default", 5, 128)).image);
}

TEST_CASE("scene presets") {
    const SceneSpec k2 = preset("k2-default", 1, 512);
    const Scene s2 = synth_scene(k2);
    CHECK(s2.num_classes == 2);
    CHECK(s2.image.side() == 512);
    REQUIRE(k2.disks.size() == 1);
    CHECK(k2.c2 == -0.02);
    CHECK(k2.disks[0].c2 == -0.08);
    std::size_t inside = 0, disk = 0;
    const Disk& d = k2.disks[0];
    for (int r = 0; r < 512; ++r) {
        for (int c = 0; c < 512; ++c) {
            inside += (r - d.center_row) * (r - d.center_row) + (c - d.center_col) * (c - d.center_col) <= d.radius * d.radius;
            disk += s2.mask(r, c) == 2;
            CHECK((s2.mask(r, c) == 1 || s2.mask(r, c) == 2));
        }
    }
    CHECK(disk == inside);
    CHECK(disk > 0);

    const SceneSpec k3 = preset("k3-default", 1, 512);
    const Scene s3 = synth_scene(k3);
    CHECK(s3.num_classes == 3);
    REQUIRE(k3.disks.size() == 2);
    CHECK(k3.disks[0].c2 == -0.08);
    CHECK(k3.disks[1].c2 == -0.16);
    std::set<int> labels(s3.mask.begin(), s3.mask.end());
    CHECK(labels == std::set<int>{1, 2, 3});
    const double gap = std::hypot(k3.disks[0].center_row - k3.disks[1].center_row,
                                  k3.disks[0].center_col - k3.disks[1].center_col);
    CHECK(gap > k3.disks[0].radius + k3.disks[1].radius);

    SceneSpec plain;
    plain.side = 128;
    plain.seed = 4;
    const Scene s0 = synth_scene(plain);
    CHECK(s0.num_classes == 1);
    for (auto v : s0.mask) CHECK(v == 1);

    SceneSpec overlap = k2;
    overlap.disks.push_back(Disk{256.0, 300.0, 40.0, kSceneC1, -0.1});
    CHECK(kind_of([&] { synth_scene(overlap); }) == ErrorKind::kConfig);
    SceneSpec outside = k2;
    outside.disks[0].center_col = 500.0;
    CHECK(kind_of([&] { synth_scene(outside); }) == ErrorKind::kConfig);
}

TEST_CASE("log-leader variance follows the scaling law") {
    const SlopeStats s = regression_over(20, 101, -0.08, 1, 3);
    MESSAGE("c2 = -0.08: mean slope " << s.mean << ", mean R^2 " << s.r_squared);
    CHECK(s.mean >= -0.13);
    CHECK(s.mean <= -0.03);
    CHECK(s.r_squared >= 0.9);

    // no multifractality: flat variance beyond the finest-scale transient
    const SlopeStats flat = regression_over(20, 102, -1e-6, 2, 4);
    MESSAGE("c2 = -1e-6: mean slope " << flat.mean);
    CHECK(std::abs(flat.mean) < 0.01);
}

TEST_CASE("composition keeps region interiors intact") {
    constexpr int kReps = 10;
    double disk = 0.0, background = 0.0;
    for (int rep = 0; rep < kReps; ++rep) {
        const Scene s = synth_scene(two_region_scene(512, -0.02, -0.08, derive_seed(200, {static_cast<std::uint64_t>(rep)})));
        const auto ell = transform::analyze(s.image, 1, 1, 3);
        disk += interior_regression(ell, s.mask, 2, 32) / kReps;
        background += interior_regression(ell, s.mask, 1, 32) / kReps;
    }
    std::vector<double> hd, hb;
    for (double c2 : {-0.08, -0.02}) {
        double m = 0.0, sd = 0.0;
        std::vector<double> v;
        for (int rep = 0; rep < kReps; ++rep) {
            const Image img = synth_mrw({512, kSceneC1, c2, 0.0, derive_seed(300, {static_cast<std::uint64_t>(rep)})});
            v.push_back(sampler::regression_estimate_c2(transform::analyze(img, 1, 1, 3), 1, 3).c2);
        }
        for (double x : v) m += x / kReps;
        for (double x : v) sd += (x - m) * (x - m) / (kReps - 1);
        (c2 < -0.05 ? hd : hb) = {m, std::sqrt(sd)};
    }
    MESSAGE("disk interior " << disk << " vs homogeneous " << hd[0] << " +- " << hd[1]);
    MESSAGE("background interior " << background << " vs homogeneous " << hb[0] << " +- " << hb[1]);
    CHECK(std::abs(disk - hd[0]) <= 2.0 * hd[1]);
    CHECK(std::abs(background - hb[0]) <= 2.0 * hb[1]);
}
