#include "mfseg/potts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfseg/errors.hpp"
#include "mfseg/rng.hpp"

namespace mfseg::potts {

bool Granularity::in_bounds() const {
    if (scale < 0.0 || scale > q) return false;
    return std::all_of(spatial.begin(), spatial.end(), [this](double b) { return b >= 0.0 && b <= q; });
}

std::int64_t spatial_agreements(const Grid<std::uint8_t>& z) {
    const int side = z.side();
    std::int64_t count = 0;
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            const auto v = z(r, c);
            for (const Site& m : MultiscaleGraph::spatial_neighbors(side, r, c)) count += (z(m.r, m.c) == v);
        }
    }
    return count;
}

double spatial_potential(const Grid<std::uint8_t>& z, double beta_xy) {
    return beta_xy * static_cast<double>(spatial_agreements(z));
}

std::int64_t scale_agreements(const Grid<std::uint8_t>& z, const Grid<std::uint8_t>* finer,
                              const Grid<std::uint8_t>* coarser) {
    const int side = z.side();
    std::int64_t count = 0;
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            const auto v = z(r, c);
            if (coarser) {
                const Site p = MultiscaleGraph::parent(r, c);
                count += ((*coarser)(p.r, p.c) == v);
            }
            if (finer) {
                for (const Site& q : MultiscaleGraph::children(r, c)) count += ((*finer)(q.r, q.c) == v);
            }
        }
    }
    return count;
}

double scale_potential(const Grid<std::uint8_t>& z, const Grid<std::uint8_t>* finer,
                       const Grid<std::uint8_t>* coarser, double beta_s) {
    return beta_s * static_cast<double>(scale_agreements(z, finer, coarser));
}

PottsStatistics statistics(const LabelPyramid& z) {
    PottsStatistics s;
    for (int j = z.j1(); j <= z.j2(); ++j) {
        s.spatial.push_back(spatial_agreements(z[j]));
        const auto* finer = j > z.j1() ? &z[j - 1] : nullptr;
        const auto* coarser = j < z.j2() ? &z[j + 1] : nullptr;
        s.scale += scale_agreements(z[j], finer, coarser);
    }
    return s;
}

namespace {

constexpr int kMaxClasses = 16;

// Unnormalized log conditional for every class at one site. Neighbours that
// coincide with the site itself (side-1 grids) carry no information and are
// skipped.
void site_logits(const LabelPyramid& z, int j, int r, int c, const Granularity& beta,
                 std::span<const double> data, double* logits) {
    const int K = z.num_classes;
    const auto& grid = z[j];
    const int side = grid.side();
    for (int k = 0; k < K; ++k) logits[k] = data.empty() ? 0.0 : data[k];

    const double bxy = beta.xy(j);
    for (const Site& m : MultiscaleGraph::spatial_neighbors(side, r, c)) {
        if (m.r == r && m.c == c) continue;
        logits[grid(m.r, m.c)] += bxy;
    }
    if (j < z.j2()) {
        const Site p = MultiscaleGraph::parent(r, c);
        logits[z[j + 1](p.r, p.c)] += beta.scale;
    }
    if (j > z.j1()) {
        const auto& finer = z[j - 1];
        for (const Site& q : MultiscaleGraph::children(r, c)) logits[finer(q.r, q.c)] += beta.scale;
    }
}

// In-place log-sum-exp normalization; returns probabilities in logits.
void normalize(double* p, int K) {
    double top = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
        if (std::isnan(p[k])) throw Error(ErrorKind::kNumeric, "NaN in label conditional");
        top = std::max(top, p[k]);
    }
    if (top == -std::numeric_limits<double>::infinity()) {
        throw Error(ErrorKind::kNumeric, "label conditional underflow: every class has zero mass");
    }
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
        if (std::isinf(top)) {
            p[k] = (p[k] == top) ? 1.0 : 0.0;
        } else {
            p[k] = std::exp(p[k] - top);
        }
        sum += p[k];
    }
    for (int k = 0; k < K; ++k) p[k] /= sum;
}

}  // namespace

std::vector<double> label_conditional(const LabelPyramid& z, int j, int r, int c, const Granularity& beta,
                                      std::span<const double> data_logdens) {
    const int K = z.num_classes;
    if (K < 1 || K > kMaxClasses) throw Error(ErrorKind::kConfig, "class count out of range");
    if (!data_logdens.empty() && static_cast<int>(data_logdens.size()) != K) {
        throw Error(ErrorKind::kShapeMismatch, "data term size differs from class count");
    }
    std::vector<double> p(static_cast<std::size_t>(K));
    site_logits(z, j, r, c, beta, data_logdens, p.data());
    normalize(p.data(), K);
    return p;
}

void checkerboard_sweep(LabelPyramid& z, const Granularity& beta, const DataTerm* data, std::uint64_t key) {
    const int K = z.num_classes;
    if (K < 1 || K > kMaxClasses) throw Error(ErrorKind::kConfig, "class count out of range");
    for (int j = z.j2(); j >= z.j1(); --j) {
        auto& grid = z[j];
        const int side = grid.side();
        for (int parity = 0; parity < 2; ++parity) {
            bool failed = false;
#pragma omp parallel for schedule(static)
            for (int r = 0; r < side; ++r) {
                double p[kMaxClasses];
                for (int c = (r + parity) & 1; c < side; c += 2) {
                    std::span<const double> d;
                    if (data) d = data->site(j, grid.index(r, c));
                    try {
                        site_logits(z, j, r, c, beta, d, p);
                        normalize(p, K);
                    } catch (const Error&) {
#pragma omp atomic write
                        failed = true;
                        continue;
                    }
                    CounterRng rng(derive_seed(key, {static_cast<std::uint64_t>(j), grid.index(r, c)}));
                    double u = rng.uniform();
                    int pick = K - 1;
                    for (int k = 0; k < K; ++k) {
                        if (u < p[k]) {
                            pick = k;
                            break;
                        }
                        u -= p[k];
                    }
                    grid(r, c) = static_cast<std::uint8_t>(pick);
                }
            }
            if (failed) throw Error(ErrorKind::kNumeric, "label conditional failed during sweep");
        }
    }
}

}  // namespace mfseg::potts
