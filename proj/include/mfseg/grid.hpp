#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfseg {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline int log2_exact(int n) {
    int k = 0;
    while ((1 << k) < n) ++k;
    return k;
}

/// Periodic index: maps any integer onto [0, n).
inline int wrap(int i, int n) {
    const int m = i % n;
    return m < 0 ? m + n : m;
}

/// Minimum-image offset on a periodic axis of length n, in [-n/2, n/2).
inline int wrapped_offset(int i, int n) {
    int m = wrap(i, n);
    if (m >= n - n / 2) m -= n;
    return m;
}

/// Square row-major grid. All image-like data in the library is square.
template <typename T>
class Grid {
public:
    Grid() = default;
    explicit Grid(int side, T fill = T{})
        : side_(side), data_(static_cast<std::size_t>(side) * side, fill) {}

    int side() const { return side_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int r, int c) { return data_[index(r, c)]; }
    const T& operator()(int r, int c) const { return data_[index(r, c)]; }

    T& wrapped(int r, int c) { return (*this)(wrap(r, side_), wrap(c, side_)); }
    const T& wrapped(int r, int c) const { return (*this)(wrap(r, side_), wrap(c, side_)); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::size_t index(int r, int c) const {
        return static_cast<std::size_t>(r) * side_ + c;
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    bool operator==(const Grid&) const = default;

private:
    int side_ = 0;
    std::vector<T> data_;
};

}  // namespace mfseg
