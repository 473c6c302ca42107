// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "mfseg/experiments.hpp"
#include "mfseg/rng.hpp"
#include "mfseg/sampler.hpp"
#include "mfseg/synth.hpp"
#include "mfseg/transform.hpp"

using namespace mfseg;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", n, detail.c_str());
    std::fflush(stdout);
    failures += !ok;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int shell(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Prints the parameter rows and returns whether every row meets the bounds.
bool parameter_rows(const experiments::TableResult& t, bool check_mean) {
    bool ok = true;
    for (const auto& r : t.parameters) {
        const bool mean_ok = !check_mean || std::abs(r.stats.mean - r.reference.mean) <= 0.02;
        const bool rmse_ok = r.stats.rmse <= 2.0 * r.reference.rmse;
        std::printf("  [-0.02, %6.3f] class %d: mean %8.4f (ref %7.3f)  rmse %7.4f (limit %6.3f)%s\n",
                    experiments::kDiskC2[r.scenario], r.k + 1, r.stats.mean, r.reference.mean, r.stats.rmse,
                    2.0 * r.reference.rmse, mean_ok && rmse_ok ? "" : "  <-- out of bounds");
        ok = ok && mean_ok && rmse_ok;
    }
    return ok;
}

void known_labels() {
    experiments::ProtocolOptions opt;
    const auto t = experiments::table_known_labels(opt);
    std::printf("known labels, %d realizations, %.0f s\n", opt.reps, t.seconds);
    const bool ok = parameter_rows(t, true);
    report(1, ok, fmt("known-label MMSE of -theta1 within 0.02 of the reference mean and RMSE <= 2x reference (%.0f s)",
                      t.seconds));
}

void joint() {
    experiments::ProtocolOptions opt;
    const auto t = experiments::table_joint(opt);
    std::printf("joint estimation, %d realizations, %.0f s\n", opt.reps, t.seconds);
    const bool ok = parameter_rows(t, false);
    report(2, ok, "joint per-class RMSE of -theta1 <= 2x reference");

    bool seg_ok = t.segmentation.size() == 3;
    for (const auto& r : t.segmentation) {
        std::printf("  [-0.02, %6.3f]: DSC1 %.3f (ref %.3f)  DSC2 %.3f (ref %.3f)  error %.1f%% (ref %.1f%%)\n",
                    experiments::kDiskC2[r.scenario], r.dsc1, r.reference.dsc1, r.dsc2, r.reference.dsc2, r.error, r.reference.error);
        const bool finite = std::isfinite(r.dsc1) && std::isfinite(r.dsc2) && r.error >= 0.0 && r.error <= 100.0;
        seg_ok = seg_ok && finite;
        if (r.scenario == 1) seg_ok = seg_ok && r.error <= 20.0 && r.dsc1 >= 0.85;
        if (r.scenario == 2) seg_ok = seg_ok && r.error <= 15.0;
    }
    report(3, seg_ok, "segmentation error <= 20% with DSC1 >= 0.85 at -0.08, error <= 15% at -0.2, -0.005 well-formed");
}

void convergence() {
    const auto r = experiments::convergence({});
    report(4, r.psrf < 1.2, fmt("PSRF of background theta1 over 5 chains x 1000 iterations = %.4f (< 1.2; %.0f s)", r.psrf,
                                r.seconds));
}

void oracles() {
    const auto t0 = std::chrono::steady_clock::now();
    struct Run {
        std::string command;
        int cases;
    };
    const std::vector<Run> runs = {
        {std::string("'") + TEST_TRANSFORM + "' -tc='leaders equal the brute-force enumeration'", 1},
        {std::string("'") + TEST_WHITTLE + "' -tc='spectral weights,debias weights,debiased Fourier coefficients'", 3},
        {std::string("'") + TEST_POTTS + "' -tc='conditionals agree with exhaustive joint enumeration'", 1},
    };
    bool ok = true;
    for (const auto& r : runs) {
        // a filter that matches nothing would also exit 0
        FILE* pipe = popen((r.command + " 2>&1").c_str(), "r");
        if (!pipe) {
            ok = false;
            continue;
        }
        char line[512];
        int passed = -1, total = -1;
        while (std::fgets(line, sizeof line, pipe)) std::sscanf(line, "[doctest] test cases: %d | %d passed", &total, &passed);
        const int status = pclose(pipe);
        ok = ok && WIFEXITED(status) && WEXITSTATUS(status) == 0 && total == r.cases && passed == r.cases;
    }
    const double s = seconds_since(t0);
    report(5, ok && s < 60.0,
           fmt("leaders, debias weights, masked DFT, Potts conditionals and spectral weights match their oracles in %.2f s",
               s));
}

void scaling_law() {
    constexpr int kReps = 20;
    double mean = 0.0, r2 = 0.0, r2_min = 1.0;
    for (int rep = 0; rep < kReps; ++rep) {
        const Image img = synth::synth_mrw({512, 0.5, -0.08, 0.0, derive_seed(606, {static_cast<std::uint64_t>(rep)})});
        const auto e = sampler::regression_estimate_c2(transform::analyze(img, 1, 1, 3), 1, 3);
        mean += e.c2 / kReps;
        r2 += e.r_squared / kReps;
        r2_min = std::min(r2_min, e.r_squared);
    }
    report(6, mean >= -0.13 && mean <= -0.03 && r2 >= 0.9,
           fmt("homogeneous MRW c2 = -0.08: regression mean %.4f in [-0.13, -0.03], mean R^2 %.3f >= 0.9 (min %.3f)", mean,
               r2, r2_min));
}

void determinism() {
    const fs::path root = fs::temp_directory_path() / "mfseg_acceptance";
    fs::remove_all(root);
    const std::vector<std::string> commands = {
        "synth --preset k2-default --side 256 --seed 9 --out synth",
        "synth --preset k3-default --side 256 --seed 9 --out synth3",
        "segment synth/image.mfrw --k 2 --iters 40 --burnin 10 --seed 4 --out seg",
        "segment synth/image.mfrw --k 2 --iters 20 --burnin 5 --chains 2 --out chains",
        "estimate synth/image.mfrw --iters 30 --burnin 5 --out est",
        "eval seg/mask.pgm synth/mask.pgm --out eval",
    };
    bool ok = true;
    std::size_t compared = 0;
    for (const char* threads : {"1", "4"}) {
        const fs::path dir = root / threads;
        fs::create_directories(dir);
        for (const auto& c : commands) {
            const std::string cmd = "cd '" + dir.string() + "' && MFSEG_THREADS=" + threads + " '" + MFSEG_CLI + "' " + c +
                                    " > /dev/null 2>&1";
            ok = shell(cmd) == 0 && ok;
        }
    }
    for (const auto& e : fs::recursive_directory_iterator(root / "1")) {
        if (!e.is_regular_file() || e.path().filename() == "timings.json") continue;
        const fs::path other = root / "4" / fs::relative(e.path(), root / "1");
        const bool same = fs::exists(other) && slurp(e.path()) == slurp(other);
        if (!same) std::printf("  differs: %s\n", fs::relative(e.path(), root / "1").string().c_str());
        ok = ok && same;
        ++compared;
    }
    report(7, ok && compared > 0,
           fmt("synth, segment, estimate and eval outputs byte-identical under 1 and 4 threads (%zu files)", compared));
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    known_labels();
    joint();
    convergence();
    oracles();
    scaling_law();
    determinism();
    std::printf("%s: %d failing criteria, %.0f s\n", failures ? "FAIL" : "PASS", failures, seconds_since(t0));
    return failures ? 1 : 0;
}
