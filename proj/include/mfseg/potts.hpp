#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mfseg/grid.hpp"
#include "mfseg/pyramid.hpp"

namespace mfseg::potts {

/// Granularity coefficients: one inter-scale coupling and one spatial
/// coupling per scale, all kept in [0, q].
struct Granularity {
    double scale = 1.0;
    std::vector<double> spatial;  // index j - j1
    double q = 10.0;
    int j1 = 1;

    Granularity() = default;
    Granularity(int j1_, int j2_, double initial, double q_)
        : scale(initial), spatial(static_cast<std::size_t>(j2_ - j1_ + 1), initial), q(q_), j1(j1_) {}

    double& xy(int j) { return spatial[static_cast<std::size_t>(j - j1)]; }
    double xy(int j) const { return spatial[static_cast<std::size_t>(j - j1)]; }
    bool in_bounds() const;
};

struct Site {
    int r = 0;
    int c = 0;
    bool operator==(const Site&) const = default;
};

/// Neighbourhood structure of the label pyramid. Spatial neighbours use
/// periodic wrap; a site at scale j has parent (r/2, c/2) at scale j+1 and
/// children (2r+a, 2c+b), a, b in {0, 1}, at scale j-1.
struct MultiscaleGraph {
    static std::array<Site, 4> spatial_neighbors(int side, int r, int c) {
        return {Site{wrap(r - 1, side), c}, Site{wrap(r + 1, side), c}, Site{r, wrap(c - 1, side)},
                Site{r, wrap(c + 1, side)}};
    }
    static Site parent(int r, int c) { return {r / 2, c / 2}; }
    static std::array<Site, 4> children(int r, int c) {
        return {Site{2 * r, 2 * c}, Site{2 * r, 2 * c + 1}, Site{2 * r + 1, 2 * c},
                Site{2 * r + 1, 2 * c + 1}};
    }
    static int parity(int r, int c) { return (r + c) & 1; }
};

/// Ordered (site, neighbour) agreement count: sum_n sum_{m in V(n)} [z_n == z_m].
std::int64_t spatial_agreements(const Grid<std::uint8_t>& z);
double spatial_potential(const Grid<std::uint8_t>& z, double beta_xy);

/// Parent and child agreement count of one scale. Either neighbour scale may
/// be absent (nullptr) at the ends of the pyramid.
std::int64_t scale_agreements(const Grid<std::uint8_t>& z, const Grid<std::uint8_t>* finer,
                              const Grid<std::uint8_t>* coarser);
double scale_potential(const Grid<std::uint8_t>& z, const Grid<std::uint8_t>* finer,
                       const Grid<std::uint8_t>* coarser, double beta_s);

/// Agreement statistics of a whole pyramid, the sufficient statistics of the
/// prior.
struct PottsStatistics {
    std::vector<std::int64_t> spatial;  // per scale, index j - j1
    std::int64_t scale = 0;             // summed over scales
};
PottsStatistics statistics(const LabelPyramid& z);

/// Per-site class log-densities for every scale, laid out site-major:
/// value(j, site, k) = per_scale[j - j1][site * K + k].
struct DataTerm {
    int j1 = 1;
    int num_classes = 0;
    std::vector<std::vector<double>> per_scale;

    std::span<const double> site(int j, std::size_t index) const {
        const auto& v = per_scale[static_cast<std::size_t>(j - j1)];
        return {v.data() + index * num_classes, static_cast<std::size_t>(num_classes)};
    }
};

/// Normalized conditional distribution of z_{j,(r,c)} given every other
/// label: proportional to exp(prior potential + data log-density). Pass an
/// empty span for a prior-only conditional.
std::vector<double> label_conditional(const LabelPyramid& z, int j, int r, int c, const Granularity& beta,
                                      std::span<const double> data_logdens);

/// One checkerboard Gibbs sweep: scales coarse to fine; at each scale the
/// even sites then the odd sites, each parity pass in parallel. Site draws
/// use streams keyed by (key, j, site), so the result does not depend on the
/// thread count. A null data term gives a prior-only sweep.
void checkerboard_sweep(LabelPyramid& z, const Granularity& beta, const DataTerm* data, std::uint64_t key);

}  // namespace mfseg::potts
