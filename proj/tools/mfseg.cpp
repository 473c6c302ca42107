#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mfseg/errors.hpp"
#include "mfseg/experiments.hpp"
#include "mfseg/io.hpp"
#include "mfseg/metrics.hpp"
#include "mfseg/sampler.hpp"
#include "mfseg/synth.hpp"
#include "mfseg/transform.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mfseg;

namespace {

constexpr const char* kVersion = "0.1.0";

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kShapeMismatch: return 3;
        case ErrorKind::kNumeric:
        case ErrorKind::kEmptyClass:
        case ErrorKind::kParameterDomain: return 4;
        default: return 2;
    }
}

// Wall-clock phases go to timings.json so every other output is a pure
// function of inputs, flags and seed.
class Timer {
public:
    void mark(const std::string& phase) {
        const auto now = std::chrono::steady_clock::now();
        phases_[phase] = std::chrono::duration<double>(now - last_).count();
        last_ = now;
    }
    json to_json() const {
        json j = phases_;
        j["threads"] = omp_get_max_threads();
        return j;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
    std::map<std::string, double> phases_;
};

void write_json(const fs::path& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

fs::path prepare_out(const std::string& out) {
    const fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::kIo, "cannot create output directory '" + out + "'");
    return dir;
}

json config_json(const sampler::SamplerConfig& c) {
    return {{"num_classes", c.num_classes},
            {"j1", c.j1},
            {"j2", c.j2},
            {"iterations", c.iterations},
            {"burn_in", c.burn_in},
            {"granularity_steps", c.granularity_steps},
            {"q", c.q},
            {"initial_beta", c.initial_beta},
            {"seed", c.seed},
            {"wavelet_order", c.wavelet_order},
            {"frequency_cutoff", c.frequency_cutoff},
            {"hyper",
             {{"alpha1", c.hyper.alpha1}, {"gamma1", c.hyper.gamma1}, {"alpha2", c.hyper.alpha2}, {"gamma2", c.hyper.gamma2}}},
            {"variance_model", "covariance"},
            {"latent_form", c.latent_form == sampler::LatentForm::kConjugate ? "conjugate" : "as-printed"},
            {"sample_granularity", c.sample_granularity}};
}

json beta_json(const potts::Granularity& b) { return {{"scale", b.scale}, {"spatial", b.spatial}}; }

json beta_summary(const std::vector<potts::Granularity>& trace) {
    if (trace.empty()) return json::object();
    json s;
    s["initial"] = beta_json(trace.front());
    s["final"] = beta_json(trace.back());
    double lo = trace.front().scale, hi = lo;
    for (const auto& b : trace) {
        lo = std::min(lo, b.scale);
        hi = std::max(hi, b.scale);
    }
    s["scale_range"] = {lo, hi};
    return s;
}

// Equal-tailed interval from retained draws.
std::pair<double, double> credible_interval(std::vector<double> v, double level) {
    std::sort(v.begin(), v.end());
    const double a = 0.5 * (1.0 - level);
    auto at = [&](double q) {
        const double pos = q * static_cast<double>(v.size() - 1);
        const auto i = static_cast<std::size_t>(pos);
        const double f = pos - static_cast<double>(i);
        return i + 1 < v.size() ? v[i] * (1.0 - f) + v[i + 1] * f : v[i];
    };
    return {at(a), at(1.0 - a)};
}

// ----- synth -----

struct SynthArgs {
    std::string preset = "k2-default";
    std::string config;
    int side = 512;
    std::uint64_t seed = 1;
    std::string out = "out";
};

synth::SceneSpec scene_from_json(const json& j, const SynthArgs& a) {
    synth::SceneSpec s;
    s.side = j.value("side", a.side);
    s.c1 = j.value("c1", s.c1);
    s.c2 = j.value("c2", s.c2);
    s.integral_scale = j.value("integral_scale", 0.0);
    s.seed = j.value("seed", a.seed);
    for (const auto& d : j.value("disks", json::array())) {
        s.disks.push_back({d.at("row").get<double>(), d.at("col").get<double>(), d.at("radius").get<double>(),
                           d.value("c1", synth::kSceneC1), d.at("c2").get<double>()});
    }
    return s;
}

json scene_json(const synth::SceneSpec& s) {
    json disks = json::array();
    for (const auto& d : s.disks) {
        disks.push_back({{"row", d.center_row}, {"col", d.center_col}, {"radius", d.radius}, {"c1", d.c1}, {"c2", d.c2}});
    }
    return {{"side", s.side}, {"c1", s.c1}, {"c2", s.c2}, {"integral_scale", s.integral_scale},
            {"seed", s.seed}, {"disks", disks}};
}

int cmd_synth(const SynthArgs& a) {
    Timer timer;
    synth::SceneSpec spec;
    if (!a.config.empty()) {
        std::ifstream in(a.config);
        if (!in) throw Error(ErrorKind::kIo, "cannot read scene config '" + a.config + "'");
        json j;
        try {
            j = json::parse(in);
            spec = scene_from_json(j, a);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::kConfig, std::string("scene config: ") + e.what());
        }
    } else {
        if (!is_power_of_two(a.side) || a.side < 32) {
            throw Error(ErrorKind::kDimension, "--side must be a power of two >= 32, got " + std::to_string(a.side));
        }
        spec = synth::preset(a.preset, a.seed, a.side);
    }
    const synth::Scene scene = synth::synth_scene(spec);
    timer.mark("synthesis");
    const fs::path dir = prepare_out(a.out);
    io::write_image(dir / "image.mfrw", scene.image);
    io::write_mask(dir / "mask.pgm", scene.mask);
    timer.mark("write");
    json manifest;
    manifest["command"] = "synth";
    manifest["version"] = kVersion;
    manifest["scene"] = scene_json(spec);
    manifest["preset"] = a.config.empty() ? json(a.preset) : json(nullptr);
    manifest["config_file"] = a.config.empty() ? json(nullptr) : json(a.config);
    manifest["seed"] = spec.seed;
    manifest["outputs"] = {{"image", (dir / "image.mfrw").string()}, {"mask", (dir / "mask.pgm").string()},
                           {"timings", (dir / "timings.json").string()}};
    manifest["num_classes"] = scene.num_classes;
    write_json(dir / "manifest.json", manifest);
    write_json(dir / "timings.json", timer.to_json());
    std::cout << "wrote " << (dir / "image.mfrw").string() << " and " << (dir / "mask.pgm").string() << "\n";
    return 0;
}

// ----- segment -----

struct RunArgs {
    std::string image;
    int k = 2;
    int j1 = 1;
    int j2 = 3;
    int iters = 300;
    int burnin = 30;
    std::uint64_t seed = 1;
    double q = 10.0;
    int v = 2;
    int wavelet_order = 1;
    int chains = 1;
    std::string out = "out";
};

sampler::SamplerConfig make_config(const RunArgs& a, int k) {
    sampler::SamplerConfig c;
    c.num_classes = k;
    c.j1 = a.j1;
    c.j2 = a.j2;
    c.iterations = a.iters;
    c.burn_in = a.burnin;
    c.seed = a.seed;
    c.q = a.q;
    c.granularity_steps = a.v;
    c.wavelet_order = a.wavelet_order;
    return c;
}

json class_report(const sampler::RegionParams& est, const std::vector<std::vector<sampler::ClassParams>>& history,
                  int k) {
    std::vector<double> t1, t2;
    for (const auto& row : history) {
        t1.push_back(row[k].theta1);
        t2.push_back(row[k].theta2);
    }
    const auto ci1 = credible_interval(t1, 0.95);
    const auto ci2 = credible_interval(t2, 0.95);
    return {{"theta1", est.mean[k].theta1},
            {"theta1_std", est.stddev[k].theta1},
            {"theta1_ci95", {ci1.first, ci1.second}},
            {"theta2", est.mean[k].theta2},
            {"theta2_std", est.stddev[k].theta2},
            {"theta2_ci95", {ci2.first, ci2.second}},
            {"c2", -est.mean[k].theta1}};
}

int cmd_segment(const RunArgs& a) {
    Timer timer;
    if (a.k < 2) throw Error(ErrorKind::kConfig, "--k must be at least 2 for segmentation");
    if (a.chains < 1) throw Error(ErrorKind::kConfig, "--chains must be at least 1");
    const Image image = io::read_image(a.image);
    const sampler::SamplerConfig config = make_config(a, a.k);
    sampler::validate(config, image.side());
    const fs::path dir = prepare_out(a.out);
    timer.mark("read");

    json manifest;
    manifest["command"] = "segment";
    manifest["version"] = kVersion;
    manifest["config"] = config_json(config);
    manifest["chains"] = a.chains;
    manifest["seed"] = a.seed;
    manifest["input"] = a.image;

    std::size_t floored = 0;
    const auto ell = transform::analyze(image, a.wavelet_order, a.j1, a.j2, &floored);
    timer.mark("transform");

    experiments::ChainSet set;
    try {
        set = experiments::run_chains(ell, config, a.chains);
    } catch (const Error& e) {
        if (exit_code(e.kind()) == 4) {
            const fs::path dump = dir / "dump.json";
            write_json(dump, {{"error", e.what()}, {"kind", to_string(e.kind())}, {"manifest", manifest}});
            std::cerr << "state dump: " << dump.string() << "\n";
        }
        throw;
    }
    timer.mark("sampling");

    // Pooled over chains: votes and retained history.
    std::vector<std::uint32_t> votes(set.chains.front().votes.size(), 0);
    std::vector<std::vector<sampler::ClassParams>> history;
    std::size_t repairs = 0, rejections = 0, clamped = 0;
    for (const auto& s : set.chains) {
        for (std::size_t i = 0; i < votes.size(); ++i) votes[i] += s.votes[i];
        history.insert(history.end(), s.history.begin(), s.history.end());
        repairs += s.repairs;
        rejections += s.rejections;
        clamped += s.clamped_weights;
    }
    const auto mask = sampler::estimate_map_labels(votes, set.chains.front().vote_side, a.k, a.j1);
    const auto est = sampler::estimate_mmse(history);
    io::write_mask(dir / "mask.pgm", mask);

    json report;
    report["classes"] = json::array();
    for (int k = 0; k < a.k; ++k) {
        json c = class_report(est, history, k);
        c["label"] = k + 1;
        c["pixels"] = std::count(mask.begin(), mask.end(), static_cast<std::uint8_t>(k + 1));
        report["classes"].push_back(c);
    }
    report["beta"] = beta_json(set.chains.front().beta);
    report["retained_samples"] = history.size();
    if (a.chains >= 2) {
        json psrf = json::array();
        for (int k = 0; k < a.k; ++k) {
            psrf.push_back({{"label", k + 1}, {"theta1", set.psrf_theta1[k]}, {"theta2", set.psrf_theta2[k]}});
        }
        report["psrf"] = psrf;
    }
    report["diagnostics"] = {{"empty_class_repairs", repairs},
                             {"rejected_theta", rejections},
                             {"clamped_weights", clamped},
                             {"floored_leaders", floored}};
    write_json(dir / "report.json", report);
    timer.mark("write");

    manifest["outputs"] = {{"mask", (dir / "mask.pgm").string()}, {"report", (dir / "report.json").string()},
                           {"timings", (dir / "timings.json").string()}};
    manifest["results"] = report["classes"];
    manifest["beta_trajectory"] = beta_summary(set.chains.front().beta_trace);
    write_json(dir / "manifest.json", manifest);
    write_json(dir / "timings.json", timer.to_json());
    std::cout << report.dump(2) << "\n";
    return 0;
}

// ----- estimate -----

int cmd_estimate(const RunArgs& a) {
    Timer timer;
    const Image image = io::read_image(a.image);
    sampler::SamplerConfig config = make_config(a, 1);
    sampler::validate(config, image.side());
    const fs::path dir = prepare_out(a.out);
    std::size_t floored = 0;
    const auto ell = transform::analyze(image, a.wavelet_order, a.j1, a.j2, &floored);
    timer.mark("transform");
    const auto regression = sampler::regression_estimate_c2(ell, a.j1, a.j2);
    const auto state = sampler::run_homogeneous(ell, config);
    const auto est = sampler::estimate_mmse(state.history);
    timer.mark("sampling");

    json report = class_report(est, state.history, 0);
    report["regression"] = {{"c2", regression.c2},
                            {"theta1", regression.theta1()},
                            {"r_squared", regression.r_squared},
                            {"degenerate", regression.degenerate}};
    report["degenerate"] = regression.degenerate;
    report["floored_leaders"] = floored;
    report["retained_samples"] = state.history.size();
    write_json(dir / "report.json", report);

    json manifest;
    manifest["command"] = "estimate";
    manifest["version"] = kVersion;
    manifest["config"] = config_json(config);
    manifest["seed"] = a.seed;
    manifest["input"] = a.image;
    manifest["outputs"] = {{"report", (dir / "report.json").string()}, {"timings", (dir / "timings.json").string()}};
    manifest["results"] = report;
    write_json(dir / "manifest.json", manifest);
    timer.mark("write");
    write_json(dir / "timings.json", timer.to_json());
    std::cout << report.dump(2) << "\n";
    return 0;
}

// ----- eval -----

struct EvalArgs {
    std::string pred;
    std::string truth;
    int k = 0;
    std::string out;
};

json score_json(const metrics::SegScore& s) {
    json confusion = json::array();
    for (const auto& c : s.confusion) confusion.push_back({{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}});
    return {{"dsc", s.dsc}, {"error_percent", s.error_percent}, {"confusion", confusion}, {"permutation", s.permutation}};
}

int cmd_eval(const EvalArgs& a) {
    const auto pred = io::read_mask(a.pred);
    const auto truth = io::read_mask(a.truth);
    if (pred.side() != truth.side()) throw Error(ErrorKind::kShapeMismatch, "masks have different sizes");
    int k = a.k;
    if (k == 0) {
        k = std::max(*std::max_element(pred.begin(), pred.end()), *std::max_element(truth.begin(), truth.end()));
    }
    const json record = score_json(metrics::score_segmentation(pred, truth, k));
    if (!a.out.empty()) {
        const fs::path dir = prepare_out(a.out);
        write_json(dir / "score.json", record);
    }
    std::cout << record.dump(2) << "\n";
    return 0;
}

// ----- repro -----

struct ReproArgs {
    std::string table;
    int reps = 20;
    std::uint64_t seed = 1;
    int iters = 300;
    int burnin = 30;
    int chains = 5;
    std::string out;
};

void print_parameters(const experiments::TableResult& t) {
    std::printf("%-9s %-3s %-7s | %-17s %-7s | %-17s %-7s\n", "scenario", "k", "truth", "mean (std)", "rmse",
                "ref mean (std)", "rmse");
    for (const auto& r : t.parameters) {
        std::printf("%-9.3f %-3d %-7.3f | %7.4f (%6.4f)  %7.4f | %7.3f (%5.3f)   %7.3f\n", experiments::kDiskC2[r.scenario],
                    r.k + 1, r.truth, r.stats.mean, r.stats.stddev, r.stats.rmse, r.reference.mean, r.reference.stddev,
                    r.reference.rmse);
    }
}

void print_segmentation(const experiments::TableResult& t) {
    std::printf("%-16s | %-15s %-15s %-13s | %-15s %-15s %-13s\n", "scenario", "dsc1", "dsc2", "error %", "ref dsc1",
                "ref dsc2", "ref error");
    for (const auto& r : t.segmentation) {
        std::printf("[-0.02, %-7.3f] | %5.3f (%5.3f)   %5.3f (%5.3f)   %5.1f (%4.1f) | %5.3f (%5.3f)   %5.3f (%5.3f)   %5.1f (%4.1f)\n",
                    experiments::kDiskC2[r.scenario], r.dsc1, r.dsc1_std, r.dsc2, r.dsc2_std, r.error, r.error_std,
                    r.reference.dsc1, r.reference.dsc1_std, r.reference.dsc2, r.reference.dsc2_std, r.reference.error, r.reference.error_std);
    }
}

json table_json(const experiments::TableResult& t) {
    json j;
    j["parameters"] = json::array();
    for (const auto& r : t.parameters) {
        j["parameters"].push_back({{"disk_c2", experiments::kDiskC2[r.scenario]},
                                   {"class", r.k + 1},
                                   {"truth", r.truth},
                                   {"mean", r.stats.mean},
                                   {"std", r.stats.stddev},
                                   {"rmse", r.stats.rmse},
                                   {"reference", {{"mean", r.reference.mean}, {"std", r.reference.stddev}, {"rmse", r.reference.rmse}}}});
    }
    j["segmentation"] = json::array();
    for (const auto& r : t.segmentation) {
        j["segmentation"].push_back({{"disk_c2", experiments::kDiskC2[r.scenario]},
                                     {"dsc1", r.dsc1},
                                     {"dsc1_std", r.dsc1_std},
                                     {"dsc2", r.dsc2},
                                     {"dsc2_std", r.dsc2_std},
                                     {"error_percent", r.error},
                                     {"error_std", r.error_std},
                                     {"reference", {{"dsc1", r.reference.dsc1}, {"dsc2", r.reference.dsc2}, {"error_percent", r.reference.error}}}});
    }
    return j;
}

int cmd_repro(const ReproArgs& a) {
    if (a.reps < 1) throw Error(ErrorKind::kConfig, "--reps must be at least 1");
    Timer timer;
    experiments::ProtocolOptions opt;
    opt.reps = a.reps;
    opt.seed = a.seed;
    opt.iterations = a.iters;
    opt.burn_in = a.burnin;
    json result;
    if (a.table == "t1") {
        const auto t = experiments::table_known_labels(opt);
        std::printf("Known labels, %d realizations\n", a.reps);
        print_parameters(t);
        result = table_json(t);
    } else if (a.table == "t2" || a.table == "t3") {
        const auto t = experiments::table_joint(opt);
        std::printf("Joint estimation, %d realizations\n", a.reps);
        if (a.table == "t2") {
            print_parameters(t);
        } else {
            print_segmentation(t);
        }
        result = table_json(t);
    } else if (a.table == "conv") {
        experiments::ConvergenceOptions c;
        c.chains = a.chains;
        c.iterations = a.iters;
        c.burn_in = a.burnin;
        c.seed = a.seed;
        const auto r = experiments::convergence(c);
        std::printf("PSRF of background theta1 over %d chains x %d iterations: %.4f (ref %.4f)\n", a.chains, a.iters,
                    r.psrf, experiments::kReferencePsrf);
        result = {{"psrf", r.psrf}, {"chains", a.chains}, {"iterations", a.iters}, {"reference_psrf", experiments::kReferencePsrf}};
    } else {
        throw Error(ErrorKind::kConfig, "unknown table '" + a.table + "' (expected t1, t2, t3 or conv)");
    }
    timer.mark("protocol");
    if (!a.out.empty()) {
        const fs::path dir = prepare_out(a.out);
        result["table"] = a.table;
        result["reps"] = a.reps;
        result["seed"] = a.seed;
        result["version"] = kVersion;
        write_json(dir / ("repro_" + a.table + ".json"), result);
        write_json(dir / "timings.json", timer.to_json());
    }
    return 0;
}

void add_run_flags(CLI::App* cmd, RunArgs& a, bool segmentation) {
    cmd->add_option("image", a.image, "Input MFRW image")->required();
    if (segmentation) {
        cmd->add_option("--k", a.k, "Number of classes K");
        cmd->add_option("--q", a.q, "Upper bound Q of the granularity prior");
        cmd->add_option("--v", a.v, "Granularity updates per iteration");
        cmd->add_option("--chains", a.chains, "Independent chains (PSRF reported when >= 2)");
    }
    cmd->add_option("--j1", a.j1, "Finest analysis scale");
    cmd->add_option("--j2", a.j2, "Coarsest analysis scale");
    cmd->add_option("--iters", a.iters, "Total Gibbs iterations N_m");
    cmd->add_option("--burnin", a.burnin, "Burn-in N_b");
    cmd->add_option("--seed", a.seed, "Random seed");
    cmd->add_option("--wavelet-order", a.wavelet_order, "Daubechies vanishing moments (1-3)");
    cmd->add_option("--out", a.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint multifractal segmentation and estimation"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: MFSEG_THREADS or all cores)");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "Synthesize a multifractal scene");
    synth_cmd->add_option("--preset", synth_args.preset, "Scene preset: k2-default or k3-default");
    synth_cmd->add_option("--config", synth_args.config, "Scene description (JSON)");
    synth_cmd->add_option("--side", synth_args.side, "Image width and height");
    synth_cmd->add_option("--seed", synth_args.seed, "Random seed");
    synth_cmd->add_option("--out", synth_args.out, "Output directory");

    RunArgs segment_args;
    auto* segment_cmd = app.add_subcommand("segment", "Jointly segment and estimate");
    add_run_flags(segment_cmd, segment_args, true);

    RunArgs estimate_args;
    auto* estimate_cmd = app.add_subcommand("estimate", "Homogeneous estimation on the full image");
    add_run_flags(estimate_cmd, estimate_args, false);

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Score a predicted mask against ground truth");
    eval_cmd->add_option("pred", eval_args.pred, "Predicted mask (PGM)")->required();
    eval_cmd->add_option("truth", eval_args.truth, "Ground-truth mask (PGM)")->required();
    eval_cmd->add_option("--k", eval_args.k, "Number of classes (default: largest label)");
    eval_cmd->add_option("--out", eval_args.out, "Output directory for score.json");

    ReproArgs repro_args;
    auto* repro_cmd = app.add_subcommand("repro", "Monte Carlo reproduction of the result tables");
    repro_cmd->add_option("table", repro_args.table, "t1, t2, t3 or conv")->required();
    repro_cmd->add_option("--reps", repro_args.reps, "Realizations per row");
    repro_cmd->add_option("--seed", repro_args.seed, "Base seed");
    repro_cmd->add_option("--iters", repro_args.iters, "Gibbs iterations");
    repro_cmd->add_option("--burnin", repro_args.burnin, "Burn-in");
    repro_cmd->add_option("--chains", repro_args.chains, "Chains for conv");
    repro_cmd->add_option("--out", repro_args.out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (threads <= 0) {
        if (const char* env = std::getenv("MFSEG_THREADS")) threads = std::atoi(env);
    }
    if (threads > 0) omp_set_num_threads(threads);

    try {
        if (*synth_cmd) return cmd_synth(synth_args);
        if (*segment_cmd) return cmd_segment(segment_args);
        if (*estimate_cmd) return cmd_estimate(estimate_args);
        if (*eval_cmd) return cmd_eval(eval_args);
        if (*repro_cmd) return cmd_repro(repro_args);
    } catch (const Error& e) {
        std::cerr << "mfseg: " << to_string(e.kind()) << " error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "mfseg: error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
