#include "mfseg/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace mfseg {
namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
// Plans are created once per (side, direction) and kept for the process.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan forward(int side) { return get(side, true); }
    fftw_plan backward(int side) { return get(side, false); }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    PlanCache() = default;

    fftw_plan get(int side, bool forward) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_pair(side, forward);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        const std::size_t n = static_cast<std::size_t>(side) * side;
        const std::size_t nc = static_cast<std::size_t>(side) * (side / 2 + 1);
        double* real = fftw_alloc_real(n);
        fftw_complex* cplx = fftw_alloc_complex(nc);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan plan = forward ? fftw_plan_dft_r2c_2d(side, side, real, cplx, flags)
                                 : fftw_plan_dft_c2r_2d(side, side, cplx, real, flags);
        fftw_free(real);
        fftw_free(cplx);
        plans_.emplace(key, plan);
        return plan;
    }

    std::mutex mutex_;
    std::map<std::pair<int, bool>, fftw_plan> plans_;
};

}  // namespace

HalfSpectrum rfft2(const Grid<double>& in) {
    HalfSpectrum out(in.side());
    // out-of-place r2c preserves its input
    fftw_execute_dft_r2c(PlanCache::instance().forward(in.side()), const_cast<double*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

Grid<double> irfft2(const HalfSpectrum& in) {
    HalfSpectrum scratch = in;  // c2r destroys its input
    Grid<double> out(in.side());
    fftw_execute_dft_c2r(PlanCache::instance().backward(in.side()),
                         reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
    const double scale = 1.0 / (static_cast<double>(in.side()) * in.side());
    for (auto& v : out) v *= scale;
    return out;
}

}  // namespace mfseg
