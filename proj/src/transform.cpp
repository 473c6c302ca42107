#include "mfseg/transform.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfseg/errors.hpp"

namespace mfseg {

void validate_image(const Image& image) {
    const int n = image.side();
    if (!is_power_of_two(n) || n < 32) {
        throw Error(ErrorKind::kDimension,
                    "image side must be a power of two and at least 32, got " + std::to_string(n));
    }
    for (double v : image) {
        if (!std::isfinite(v)) throw Error(ErrorKind::kDimension, "image contains non-finite pixels");
    }
}

namespace transform {
namespace {

// Reconstruction lowpass taps (sum sqrt(2)).
const std::vector<double>& db_taps(int order) {
    static const std::vector<double> db1 = {0.7071067811865476, 0.7071067811865476};
    static const std::vector<double> db2 = {0.48296291314453414337, 0.83651630373780790558,
                                            0.22414386804201338103, -0.12940952255126038117};
    static const std::vector<double> db3 = {0.33267055295008261600,  0.80689150931109257649,
                                            0.45987750211849157010,  -0.13501102001025458870,
                                            -0.08544127388202666169, 0.03522629188570953660};
    switch (order) {
        case 1: return db1;
        case 2: return db2;
        case 3: return db3;
        default:
            throw Error(ErrorKind::kConfig,
                        "unsupported number of vanishing moments " + std::to_string(order));
    }
}

// Periodic analysis of one line: lo[n] = sum_k h[k] x[2n+k], hi likewise with g.
void analyze_line(const double* x, int stride, int n, const WaveletFilter& f, double* lo,
                  double* hi) {
    const int half = n / 2;
    const int taps = static_cast<int>(f.lowpass.size());
    for (int i = 0; i < half; ++i) {
        double a = 0.0, d = 0.0;
        for (int k = 0; k < taps; ++k) {
            const double v = x[static_cast<std::size_t>((2 * i + k) % n) * stride];
            a += f.lowpass[k] * v;
            d += f.highpass[k] * v;
        }
        lo[i] = a;
        hi[i] = d;
    }
}

void synthesize_line(const double* lo, const double* hi, int n, const WaveletFilter& f, double* x,
                     int stride) {
    const int half = n / 2;
    const int taps = static_cast<int>(f.lowpass.size());
    for (int m = 0; m < n; ++m) x[static_cast<std::size_t>(m) * stride] = 0.0;
    for (int i = 0; i < half; ++i) {
        for (int k = 0; k < taps; ++k) {
            const int m = (2 * i + k) % n;
            x[static_cast<std::size_t>(m) * stride] += f.lowpass[k] * lo[i] + f.highpass[k] * hi[i];
        }
    }
}

}  // namespace

WaveletFilter daubechies(int vanishing_moments) {
    WaveletFilter f;
    f.vanishing_moments = vanishing_moments;
    f.lowpass = db_taps(vanishing_moments);
    const int taps = static_cast<int>(f.lowpass.size());
    f.highpass.resize(taps);
    for (int k = 0; k < taps; ++k) {
        f.highpass[k] = ((k % 2) ? -1.0 : 1.0) * f.lowpass[taps - 1 - k];
    }
    return f;
}

Grid<double> DwtPyramid::unnormalized_detail(int j, int m) const {
    Grid<double> out = detail(j, m);
    const double scale = std::ldexp(1.0, j);
    for (auto& v : out) v *= scale;
    return out;
}

DwtPyramid dwt2d(const Image& image, int vanishing_moments, int num_scales) {
    const int n = image.side();
    if (!is_power_of_two(n) || n < 32) {
        throw Error(ErrorKind::kDimension,
                    "image side must be a power of two and at least 32, got " + std::to_string(n));
    }
    if (num_scales < 1 || num_scales > max_scales(n)) {
        throw Error(ErrorKind::kScaleRange, "scale count " + std::to_string(num_scales) +
                                                " outside 1.." + std::to_string(max_scales(n)));
    }
    const WaveletFilter f = daubechies(vanishing_moments);

    std::vector<DwtLevel> levels;
    levels.reserve(static_cast<std::size_t>(num_scales));
    Grid<double> current = image;
    for (int j = 1; j <= num_scales; ++j) {
        const int side = current.side();
        const int half = side / 2;
        // Columns of each row first: L | H halves along x.
        Grid<double> rows(side);
        for (int r = 0; r < side; ++r) {
            analyze_line(&current(r, 0), 1, side, f, &rows(r, 0), &rows(r, half));
        }
        // Then along y for each column.
        Grid<double> both(side);
        std::vector<double> lo(half), hi(half);
        for (int c = 0; c < side; ++c) {
            analyze_line(&rows(0, c), side, side, f, lo.data(), hi.data());
            for (int r = 0; r < half; ++r) {
                both(r, c) = lo[r];
                both(r + half, c) = hi[r];
            }
        }
        DwtLevel level;
        level.approx = Grid<double>(half);
        for (auto& d : level.detail) d = Grid<double>(half);
        const double norm = std::ldexp(1.0, -j);
        for (int r = 0; r < half; ++r) {
            for (int c = 0; c < half; ++c) {
                level.approx(r, c) = both(r, c);
                level.detail[0](r, c) = norm * both(r, c + half);          // psi(x) phi(y)
                level.detail[1](r, c) = norm * both(r + half, c);          // phi(x) psi(y)
                level.detail[2](r, c) = norm * both(r + half, c + half);   // psi(x) psi(y)
            }
        }
        current = level.approx;
        levels.push_back(std::move(level));
    }
    return DwtPyramid(n, vanishing_moments, std::move(levels));
}

Image idwt2d(const DwtPyramid& pyramid) {
    const WaveletFilter f = daubechies(pyramid.vanishing_moments());
    Grid<double> current = pyramid.approx(pyramid.num_scales());
    for (int j = pyramid.num_scales(); j >= 1; --j) {
        const int half = current.side();
        const int side = 2 * half;
        const double scale = std::ldexp(1.0, j);
        Grid<double> both(side);
        for (int r = 0; r < half; ++r) {
            for (int c = 0; c < half; ++c) {
                both(r, c) = current(r, c);
                both(r, c + half) = scale * pyramid.detail(j, 1)(r, c);
                both(r + half, c) = scale * pyramid.detail(j, 2)(r, c);
                both(r + half, c + half) = scale * pyramid.detail(j, 3)(r, c);
            }
        }
        Grid<double> rows(side);
        std::vector<double> lo(half), hi(half);
        for (int c = 0; c < side; ++c) {
            for (int r = 0; r < half; ++r) {
                lo[r] = both(r, c);
                hi[r] = both(r + half, c);
            }
            synthesize_line(lo.data(), hi.data(), side, f, &rows(0, c), side);
        }
        Grid<double> out(side);
        for (int r = 0; r < side; ++r) {
            synthesize_line(&rows(r, 0), &rows(r, half), side, f, &out(r, 0), 1);
        }
        current = std::move(out);
    }
    return current;
}

LeaderPyramid wavelet_leaders(const DwtPyramid& pyramid, int j1, int j2) {
    if (j1 < 1 || j2 < j1) throw Error(ErrorKind::kScaleRange, "empty leader scale range");
    if (j2 > pyramid.num_scales()) {
        throw Error(ErrorKind::kScaleRange, "j2 exceeds the number of transform scales");
    }
    const int n = pyramid.image_side();

    // sup over the cube itself and all of its descendants, scale by scale.
    Grid<double> own;
    LeaderPyramid out{ScalePyramid<double>(n, j1, j2), 0, 0.0};
    for (int j = 1; j <= j2; ++j) {
        const int side = pyramid.side(j);
        Grid<double> cube(side);
        for (int r = 0; r < side; ++r) {
            for (int c = 0; c < side; ++c) {
                double v = std::max({std::abs(pyramid.detail(j, 1)(r, c)),
                                     std::abs(pyramid.detail(j, 2)(r, c)),
                                     std::abs(pyramid.detail(j, 3)(r, c))});
                if (j > 1) {
                    v = std::max({v, own(2 * r, 2 * c), own(2 * r, 2 * c + 1), own(2 * r + 1, 2 * c),
                                  own(2 * r + 1, 2 * c + 1)});
                }
                cube(r, c) = v;
            }
        }
        if (j >= j1) {
            Grid<double>& lead = out.leaders[j];
            for (int r = 0; r < side; ++r) {
                for (int c = 0; c < side; ++c) {
                    double v = 0.0;
                    for (int dr = -1; dr <= 1; ++dr) {
                        for (int dc = -1; dc <= 1; ++dc) v = std::max(v, cube.wrapped(r + dr, c + dc));
                    }
                    lead(r, c) = v;
                }
            }
        }
        own = std::move(cube);
    }

    double max_leader = 0.0;
    for (int j = j1; j <= j2; ++j) {
        for (double v : out.leaders[j]) max_leader = std::max(max_leader, v);
    }
    out.floor_value = max_leader > 0.0 ? 1e-12 * max_leader : 1e-12;
    for (int j = j1; j <= j2; ++j) {
        for (double& v : out.leaders[j]) {
            if (v < out.floor_value) {
                v = out.floor_value;
                ++out.floored;
            }
        }
    }
    return out;
}

LogLeaderPyramid log_leaders(const ScalePyramid<double>& leaders) {
    LogLeaderPyramid out{ScalePyramid<double>(leaders.image_side(), leaders.j1(), leaders.j2()), {}};
    for (int j = leaders.j1(); j <= leaders.j2(); ++j) {
        const Grid<double>& src = leaders[j];
        Grid<double>& dst = out.ell[j];
        double sum = 0.0;
        for (std::size_t i = 0; i < src.size(); ++i) {
            if (!(src[i] > 0.0) || !std::isfinite(src[i])) {
                throw Error(ErrorKind::kNumeric, "nonpositive wavelet leader at scale " + std::to_string(j));
            }
            dst[i] = std::log(src[i]);
            sum += dst[i];
        }
        const double mean = sum / static_cast<double>(src.size());
        for (auto& v : dst) v -= mean;
        out.offsets.push_back(mean);
    }
    return out;
}

LogLeaderPyramid analyze(const Image& image, int vanishing_moments, int j1, int j2,
                         std::size_t* floored) {
    const DwtPyramid dwt = dwt2d(image, vanishing_moments, j2);
    LeaderPyramid leaders = wavelet_leaders(dwt, j1, j2);
    if (floored) *floored = leaders.floored;
    return log_leaders(leaders.leaders);
}

}  // namespace transform
}  // namespace mfseg
