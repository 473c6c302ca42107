#pragma once

#include <cstdint>
#include <vector>

#include "mfseg/errors.hpp"
#include "mfseg/grid.hpp"

namespace mfseg {

/// Per-scale grids for scales j1..j2 of an image of side N; the grid at
/// scale j has side N / 2^j. Scale 1 is the finest.
template <typename T>
class ScalePyramid {
public:
    ScalePyramid() = default;
    ScalePyramid(int image_side, int j1, int j2, T fill = T{})
        : image_side_(image_side), j1_(j1), j2_(j2) {
        if (!is_power_of_two(image_side)) {
            throw Error(ErrorKind::kDimension, "pyramid side must be a power of two");
        }
        if (j1 < 1 || j2 < j1 || (image_side >> j2) < 1) {
            throw Error(ErrorKind::kScaleRange, "invalid scale range for pyramid");
        }
        grids_.reserve(static_cast<std::size_t>(j2 - j1 + 1));
        for (int j = j1; j <= j2; ++j) grids_.emplace_back(image_side >> j, fill);
    }

    int image_side() const { return image_side_; }
    int j1() const { return j1_; }
    int j2() const { return j2_; }
    int num_scales() const { return j2_ - j1_ + 1; }
    int side(int j) const { return image_side_ >> j; }
    bool has_scale(int j) const { return j >= j1_ && j <= j2_; }

    Grid<T>& operator[](int j) { return grids_[static_cast<std::size_t>(j - j1_)]; }
    const Grid<T>& operator[](int j) const { return grids_[static_cast<std::size_t>(j - j1_)]; }

    /// Total number of sites summed over scales.
    std::size_t total_sites() const {
        std::size_t n = 0;
        for (const auto& g : grids_) n += g.size();
        return n;
    }

    bool operator==(const ScalePyramid&) const = default;

private:
    int image_side_ = 0;
    int j1_ = 1;
    int j2_ = 1;
    std::vector<Grid<T>> grids_;
};

/// Class labels per scale, stored 0-based (class k in [0, K)). Files and
/// reports use 1-based labels.
struct LabelPyramid {
    ScalePyramid<std::uint8_t> z;
    int num_classes = 0;

    LabelPyramid() = default;
    LabelPyramid(int image_side, int j1, int j2, int k)
        : z(image_side, j1, j2, 0), num_classes(k) {}

    Grid<std::uint8_t>& operator[](int j) { return z[j]; }
    const Grid<std::uint8_t>& operator[](int j) const { return z[j]; }
    int j1() const { return z.j1(); }
    int j2() const { return z.j2(); }
    int image_side() const { return z.image_side(); }

    /// Number of sites with label k at scale j.
    std::size_t count(int j, int k) const {
        std::size_t n = 0;
        for (auto v : z[j]) n += (v == k);
        return n;
    }

    bool operator==(const LabelPyramid&) const = default;
};

}  // namespace mfseg
