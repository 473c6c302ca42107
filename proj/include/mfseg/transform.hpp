#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "mfseg/grid.hpp"
#include "mfseg/pyramid.hpp"

namespace mfseg {

using Image = Grid<double>;

/// Throws kDimension unless the image is square, power-of-two sided with
/// side >= 32 and finite everywhere.
void validate_image(const Image& image);

namespace transform {

/// Orthonormal Daubechies filter pair with the given number of vanishing
/// moments (1 = Haar, 2, 3).
struct WaveletFilter {
    std::vector<double> lowpass;
    std::vector<double> highpass;
    int vanishing_moments = 1;
};

WaveletFilter daubechies(int vanishing_moments);

/// Largest scale count the transform accepts for an image side.
inline int max_scales(int side) { return log2_exact(side) - 2; }

struct DwtLevel {
    std::array<Grid<double>, 3> detail;  // d^{(m)}(j, .) for m = 1, 2, 3, already scaled by 2^-j
    Grid<double> approx;                 // D^{(0)}(j, .), unscaled
};

/// 2D periodic orthonormal DWT, scales 1..J. Detail subbands are stored
/// with the 2^-j normalization used for multifractal analysis.
class DwtPyramid {
public:
    DwtPyramid(int image_side, int vanishing_moments, std::vector<DwtLevel> levels)
        : image_side_(image_side), vanishing_moments_(vanishing_moments), levels_(std::move(levels)) {}

    int image_side() const { return image_side_; }
    int vanishing_moments() const { return vanishing_moments_; }
    int num_scales() const { return static_cast<int>(levels_.size()); }
    int side(int j) const { return image_side_ >> j; }

    /// Normalized detail subband, m in {1, 2, 3}.
    const Grid<double>& detail(int j, int m) const { return levels_[j - 1].detail[m - 1]; }
    Grid<double>& detail(int j, int m) { return levels_[j - 1].detail[m - 1]; }
    const Grid<double>& approx(int j) const { return levels_[j - 1].approx; }
    Grid<double>& approx(int j) { return levels_[j - 1].approx; }

    /// Detail subband without the 2^-j factor, D^{(m)}(j, .).
    Grid<double> unnormalized_detail(int j, int m) const;

private:
    int image_side_;
    int vanishing_moments_;
    std::vector<DwtLevel> levels_;
};

DwtPyramid dwt2d(const Image& image, int vanishing_moments, int num_scales);

/// Inverse transform from the coarsest approximation and all (unnormalized)
/// details.
Image idwt2d(const DwtPyramid& pyramid);

struct LeaderPyramid {
    ScalePyramid<double> leaders;
    std::size_t floored = 0;   // leaders replaced by the zero floor
    double floor_value = 0.0;
};

/// Wavelet leaders: supremum of |d^{(m)}| over the 3x3 periodic neighbourhood
/// of each cube and every finer scale down to j = 1. Zero leaders are raised
/// to 1e-12 times the largest leader and counted.
LeaderPyramid wavelet_leaders(const DwtPyramid& pyramid, int j1, int j2);

/// Centered log-leaders: ln L minus the per-scale empirical mean.
struct LogLeaderPyramid {
    ScalePyramid<double> ell;
    std::vector<double> offsets;  // subtracted mean per scale, index j - j1

    int j1() const { return ell.j1(); }
    int j2() const { return ell.j2(); }
    int image_side() const { return ell.image_side(); }
    int side(int j) const { return ell.side(j); }
    const Grid<double>& operator[](int j) const { return ell[j]; }
};

LogLeaderPyramid log_leaders(const ScalePyramid<double>& leaders);

/// Convenience pipeline: DWT over scales 1..j2, leaders and log-leaders.
LogLeaderPyramid analyze(const Image& image, int vanishing_moments, int j1, int j2,
                         std::size_t* floored = nullptr);

}  // namespace transform
}  // namespace mfseg
