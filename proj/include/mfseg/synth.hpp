#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mfseg/grid.hpp"
#include "mfseg/transform.hpp"

namespace mfseg::synth {

/// 2D multifractal random walk with log-cumulants (c1, c2): increments
/// eps * exp(omega), omega Gaussian with covariance
/// -c2 * max(0, ln(L / max(r, 1))), fractionally integrated to regularity c1.
struct MrwSpec {
    int side = 512;
    double c1 = 0.5;
    double c2 = -0.08;
    double integral_scale = 0.0;  // 0 selects side / 4
    std::uint64_t seed = 1;
};

void validate(const MrwSpec& spec);

Image synth_mrw(const MrwSpec& spec);

/// Regularity used by scene regions unless overridden. With c1 = 0.5 the
/// masked estimates on disks are biased by up to 0.04 at c2 = -0.2.
inline constexpr double kSceneC1 = 0.2;

struct Disk {
    double center_row = 0.0;
    double center_col = 0.0;
    double radius = 0.0;
    double c1 = kSceneC1;
    double c2 = -0.08;
};

/// Background field with disk regions. Region i (0 = background) is drawn
/// from seed derive_seed(seed, {i}) and standardized to zero mean and unit
/// variance before the hard cut. Mask labels: background 1, disk i -> i + 2.
struct SceneSpec {
    int side = 512;
    double c1 = kSceneC1;
    double c2 = -0.02;
    double integral_scale = 0.0;
    std::vector<Disk> disks;
    std::uint64_t seed = 1;
};

struct Scene {
    Image image;
    Grid<std::uint8_t> mask;
    int num_classes = 1;
};

/// Pixel (r, c) lies in a disk when (r - cr)^2 + (c - cc)^2 <= radius^2.
Grid<std::uint8_t> scene_mask(const SceneSpec& scene);

Scene synth_scene(const SceneSpec& scene);

/// Named presets: "k2-default" (background -0.02, centred disk -0.08,
/// radius N/4) and "k3-default" (background -0.02, disks -0.08 and -0.16 of
/// radius N/6). Throws kConfig for unknown names.
SceneSpec preset(const std::string& name, std::uint64_t seed = 1, int side = 512);

/// Background c2 with one centred disk of radius N/4.
SceneSpec two_region_scene(int side, double background_c2, double disk_c2, std::uint64_t seed);

}  // namespace mfseg::synth
