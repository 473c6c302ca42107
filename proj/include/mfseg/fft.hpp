#pragma once

#include <complex>
#include <vector>

#include "mfseg/grid.hpp"

namespace mfseg {

using Complex = std::complex<double>;

/// Half spectrum of a real square grid as produced by a real-to-complex 2D
/// DFT: side rows by side/2+1 columns, unnormalized, kernel exp(-i n.w).
class HalfSpectrum {
public:
    HalfSpectrum() = default;
    explicit HalfSpectrum(int side)
        : side_(side), cols_(side / 2 + 1), data_(static_cast<std::size_t>(side) * cols_) {}

    int side() const { return side_; }
    int cols() const { return cols_; }

    Complex& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    const Complex& operator()(int r, int c) const {
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }

    /// Coefficient at integer frequency (m1, m2) for any signs, using
    /// Hermitian symmetry where the column index falls in the missing half.
    Complex at(int m1, int m2) const {
        int r = wrap(m1, side_);
        int c = wrap(m2, side_);
        if (c < cols_) return (*this)(r, c);
        return std::conj((*this)(wrap(-m1, side_), wrap(-m2, side_)));
    }

    Complex* data() { return data_.data(); }
    const Complex* data() const { return data_.data(); }
    std::size_t size() const { return data_.size(); }

private:
    int side_ = 0;
    int cols_ = 0;
    std::vector<Complex> data_;
};

/// Forward real-to-complex 2D DFT.
HalfSpectrum rfft2(const Grid<double>& in);

/// Inverse of rfft2, including the 1/side^2 factor.
Grid<double> irfft2(const HalfSpectrum& in);

}  // namespace mfseg
