#include "mfseg/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "mfseg/errors.hpp"
#include "mfseg/fft.hpp"
#include "mfseg/rng.hpp"

namespace mfseg::synth {

namespace {

double effective_scale(int side, double integral_scale) {
    return integral_scale > 0.0 ? integral_scale : side / 4.0;
}

Grid<double> white_noise(int side, std::uint64_t key) {
    CounterRng rng(key);
    std::normal_distribution<double> normal(0.0, 1.0);
    Grid<double> g(side);
    for (auto& v : g) v = normal(rng);
    return g;
}

// Gaussian field with the logarithmic covariance by circulant embedding on
// the torus. Negative eigenvalues are set to zero.
Grid<double> log_correlated_field(int side, double lambda2, double L, std::uint64_t key) {
    Grid<double> cov(side);
    for (int r = 0; r < side; ++r) {
        const double dr = wrapped_offset(r, side);
        for (int c = 0; c < side; ++c) {
            const double dc = wrapped_offset(c, side);
            cov(r, c) = lambda2 * std::max(0.0, std::log(L / std::max(std::hypot(dr, dc), 1.0)));
        }
    }
    const HalfSpectrum eig = rfft2(cov);
    HalfSpectrum spec = rfft2(white_noise(side, key));
    for (std::size_t i = 0; i < spec.size(); ++i) spec.data()[i] *= std::sqrt(std::max(0.0, eig.data()[i].real()));
    return irfft2(spec);
}

// Fractional integration of order s by the isotropic multiplier |k|^{-s},
// DC removed.
Grid<double> fractional_integral(const Grid<double>& f, double s) {
    const int side = f.side();
    HalfSpectrum spec = rfft2(f);
    for (int r = 0; r < side; ++r) {
        const double kr = 2.0 * std::numbers::pi * wrapped_offset(r, side) / side;
        for (int c = 0; c < spec.cols(); ++c) {
            const double kc = 2.0 * std::numbers::pi * c / side;
            const double k = std::hypot(kr, kc);
            spec(r, c) *= (r == 0 && c == 0) ? 0.0 : std::pow(k, -s);
        }
    }
    return irfft2(spec);
}

void standardize(Grid<double>& g) {
    double mean = 0.0;
    for (double v : g) mean += v;
    mean /= static_cast<double>(g.size());
    double ss = 0.0;
    for (double v : g) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(g.size()));
    for (auto& v : g) v = sd > 0.0 ? (v - mean) / sd : 0.0;
}

}  // namespace

void validate(const MrwSpec& spec) {
    if (!is_power_of_two(spec.side) || spec.side < 32) {
        throw Error(ErrorKind::kDimension, "MRW side must be a power of two and at least 32");
    }
    if (!(spec.c2 < 0.0)) throw Error(ErrorKind::kConfig, "MRW c2 must be negative");
    const double L = effective_scale(spec.side, spec.integral_scale);
    if (!(L > 0.0) || L > spec.side) throw Error(ErrorKind::kConfig, "integral scale must lie in (0, N]");
    if (!std::isfinite(spec.c1)) throw Error(ErrorKind::kConfig, "MRW c1 must be finite");
}

Image synth_mrw(const MrwSpec& spec) {
    validate(spec);
    const int side = spec.side;
    const double lambda2 = -spec.c2;
    const double L = effective_scale(side, spec.integral_scale);
    Grid<double> omega = log_correlated_field(side, lambda2, L, derive_seed(spec.seed, {1}));
    const Grid<double> eps = white_noise(side, derive_seed(spec.seed, {2}));
    Grid<double> increments(side);
    for (std::size_t i = 0; i < increments.size(); ++i) increments[i] = eps[i] * std::exp(omega[i]);
    // H = c1 + c2/2 so that the leader first log-cumulant is c1.
    const double hurst = spec.c1 + 0.5 * spec.c2;
    return fractional_integral(increments, hurst + 1.0);
}

Grid<std::uint8_t> scene_mask(const SceneSpec& scene) {
    const int n = scene.side;
    Grid<std::uint8_t> mask(n, 1);
    for (std::size_t d = 0; d < scene.disks.size(); ++d) {
        const Disk& disk = scene.disks[d];
        if (!(disk.radius > 0.0) || disk.center_row - disk.radius < 0.0 || disk.center_col - disk.radius < 0.0 ||
            disk.center_row + disk.radius > n - 1 || disk.center_col + disk.radius > n - 1) {
            throw Error(ErrorKind::kConfig, "disk " + std::to_string(d + 1) + " does not lie inside the image");
        }
        const double r2 = disk.radius * disk.radius;
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                const double dr = r - disk.center_row;
                const double dc = c - disk.center_col;
                if (dr * dr + dc * dc > r2) continue;
                if (mask(r, c) != 1) throw Error(ErrorKind::kConfig, "scene disks overlap");
                mask(r, c) = static_cast<std::uint8_t>(d + 2);
            }
        }
    }
    return mask;
}

Scene synth_scene(const SceneSpec& scene) {
    if (scene.disks.size() > 14) throw Error(ErrorKind::kConfig, "too many disks");
    Scene out;
    out.mask = scene_mask(scene);
    out.num_classes = static_cast<int>(scene.disks.size()) + 1;

    auto region = [&](std::size_t i, double c1, double c2) {
        MrwSpec spec{scene.side, c1, c2, scene.integral_scale, derive_seed(scene.seed, {i})};
        Image field = synth_mrw(spec);
        standardize(field);
        return field;
    };
    out.image = region(0, scene.c1, scene.c2);
    for (std::size_t d = 0; d < scene.disks.size(); ++d) {
        const Image field = region(d + 1, scene.disks[d].c1, scene.disks[d].c2);
        const auto label = static_cast<std::uint8_t>(d + 2);
        for (std::size_t i = 0; i < field.size(); ++i) {
            if (out.mask[i] == label) out.image[i] = field[i];
        }
    }
    return out;
}

SceneSpec two_region_scene(int side, double background_c2, double disk_c2, std::uint64_t seed) {
    SceneSpec s;
    s.side = side;
    s.c2 = background_c2;
    s.seed = seed;
    const double center = side / 2.0;
    s.disks.push_back(Disk{center, center, side / 4.0, kSceneC1, disk_c2});
    return s;
}

SceneSpec preset(const std::string& name, std::uint64_t seed, int side) {
    if (name == "k2-default") return two_region_scene(side, -0.02, -0.08, seed);
    if (name == "k3-default") {
        SceneSpec s;
        s.side = side;
        s.c2 = -0.02;
        s.seed = seed;
        const double radius = side / 6.0;
        s.disks.push_back(Disk{side / 2.0, 0.28 * side, radius, kSceneC1, -0.08});
        s.disks.push_back(Disk{side / 2.0, 0.72 * side, radius, kSceneC1, -0.16});
        return s;
    }
    throw Error(ErrorKind::kConfig, "unknown scene preset '" + name + "'");
}

}  // namespace mfseg::synth
