#pragma once

#include "nolana/baselines.hpp"
#include "nolana/checkpoint.hpp"
#include "nolana/eval.hpp"
#include "nolana/learner.hpp"
#include "nolana/metrics.hpp"
#include "nolana/stream.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace nolana {

// Everything one experiment needs; validated before any data is read.
struct RunConfig {
    std::string method = "nolana";  // pa | fogd | nogd | nolana
    LossKind loss = LossKind::Hinge;
    StreamSpec data;
    Index m = 100;
    Index r = 0;            // 0: round(r_ratio * m)
    double r_ratio = 0.8;
    double epsilon = 0.0;
    double eta = 0.2;
    double lambda = 0.0;
    double theta = 1e-3;
    double gamma = 0.0;     // 0: 1 / dim
    double aggressiveness = std::numeric_limits<double>::infinity();
    double pa_epsilon = 0.1;
    int power_iters = 3;
    int stage_one_steps = 1;
    std::uint64_t seed = 1;
    int shuffles = 5;       // 0: one pass in file order
    Index max_samples = 0;  // 0: whole stream; else a per-pass prefix cap
    bool eta_decay = false;
    bool timing = false;    // real elapsed_ns / wall time in artifacts
    bool minmax_scale = false;
    std::string out_dir;
    std::string save_checkpoint_path;

    Index resolved_r() const {
        return r > 0 ? r : static_cast<Index>(std::llround(r_ratio * static_cast<double>(m)));
    }

    void validate() const {
        if (method != "pa" && method != "fogd" && method != "nogd" &&
            method != "nolana")
            throw ConfigError("unknown method '" + method + "'");
        if (data.path.empty())
            throw ConfigError("dataset path is required");
        if (m < 1) throw ConfigError("m must be >= 1");
        const Index rr = resolved_r();
        if (rr < 1 || rr > m) throw ConfigError("r must satisfy 1 <= r <= m");
        if (epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
        if (!(eta >= 0.0) || !std::isfinite(eta))
            throw ConfigError("eta must be finite and >= 0");
        if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
        if (!(theta > 0.0)) throw ConfigError("theta must be > 0");
        if (gamma < 0.0) throw ConfigError("gamma must be >= 0");
        if (power_iters < 1) throw ConfigError("power-iters must be >= 1");
        if (stage_one_steps < 1) throw ConfigError("stage-one-steps must be >= 1");
        if (shuffles < 0) throw ConfigError("shuffles must be >= 0");
        if (max_samples < 0) throw ConfigError("max-samples must be >= 0");
        if (!(aggressiveness > 0.0)) throw ConfigError("aggressiveness must be > 0");
        if (pa_epsilon < 0.0) throw ConfigError("pa-epsilon must be >= 0");
        if (is_classification(loss) && data.task == Task::Regression)
            throw ConfigError("classification loss on a regression stream");
        if (!is_classification(loss) && data.task == Task::Classification)
            throw ConfigError("squared loss on a classification stream");
    }

    double resolved_gamma(Index dim) const {
        return gamma > 0.0 ? gamma : 1.0 / static_cast<double>(dim);
    }

    std::uint64_t pass_shuffle_seed(int pass) const {
        return derive_seed(seed, 0x5f00u + static_cast<std::uint64_t>(pass));
    }
};

struct PassResult {
    std::uint64_t shuffle_seed = 0;
    double final_metric = 0.0;
    long updates = 0;
    long steps = 0;
};

struct RunResult {
    std::vector<PassResult> passes;
    double metric_mean = 0.0;
    double metric_stddev = 0.0;
    BudgetReport budget;
    double wall_time_s = 0.0;
    std::string summary_path;
    std::string manifest_path;
};

namespace detail {

inline void atomic_write(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IngestionError("cannot write '" + tmp + "'");
        out << contents;
        if (!out) throw IngestionError("short write to '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline std::unique_ptr<StreamLearner> make_learner(const RunConfig& cfg, Index dim,
                                                   std::uint64_t pass_seed) {
    const double gamma = cfg.resolved_gamma(dim);
    if (cfg.method == "pa") {
        return std::make_unique<PaLearner>(dim, cfg.aggressiveness,
                                           is_classification(cfg.loss),
                                           cfg.pa_epsilon);
    }
    if (cfg.method == "fogd") {
        FogdConfig fogd;
        fogd.m = cfg.m;
        fogd.r = cfg.resolved_r();
        fogd.gamma = gamma;
        fogd.eta = cfg.eta;
        fogd.lambda = cfg.lambda;
        fogd.loss = cfg.loss;
        fogd.eta_decay = cfg.eta_decay;
        fogd.seed = derive_seed(pass_seed, 0xf0);
        return std::make_unique<FogdLearner>(fogd, dim);
    }
    NolanaConfig nolana;
    nolana.m = cfg.m;
    nolana.r = cfg.resolved_r();
    nolana.epsilon = cfg.epsilon;
    nolana.kernel.gamma = gamma;
    nolana.power_iters = cfg.power_iters;
    nolana.eta = cfg.eta;
    nolana.lambda = cfg.lambda;
    nolana.theta = cfg.theta;
    nolana.loss = cfg.loss;
    nolana.eta_decay = cfg.eta_decay;
    nolana.stage_one_steps = cfg.stage_one_steps;
    if (cfg.method == "nogd") nolana = nogd_config(nolana);
    return std::make_unique<NolanaLearner>(nolana, dim);
}

// Per-pass min-max scaler fit on the first `fit_on` samples in stream
// order (flat dimensions pass through as zero).
inline std::function<Sample(const Sample&)> make_scaler(const SampleStream& stream,
                                                        Index fit_on) {
    Vector lo = stream.at(0).features;
    Vector hi = stream.at(0).features;
    const Index n = std::min(fit_on, stream.size());
    for (Index t = 1; t < n; ++t) {
        lo = lo.cwiseMin(stream.at(t).features);
        hi = hi.cwiseMax(stream.at(t).features);
    }
    Vector range = hi - lo;
    return [lo, range](const Sample& s) {
        Sample out = s;
        for (Index j = 0; j < out.features.size(); ++j)
            out.features[j] =
                range[j] > 0.0 ? (s.features[j] - lo[j]) / range[j] : 0.0;
        return out;
    };
}

struct PassOutput {
    MetricsLog log;
    BudgetReport budget;
};

// Feeds the first `limit` (or all) samples of the stream through a fresh
// learner and collects the prequential log.
inline PassOutput run_pass(const RunConfig& cfg, const SampleStream& stream,
                           std::uint64_t pass_seed, Index limit = -1) {
    auto learner = make_learner(cfg, stream.dim(), pass_seed);
    MetricsLog log(cfg.data.task);
    const std::function<Sample(const Sample&)> scale =
        cfg.minmax_scale ? make_scaler(stream, cfg.m)
                         : [](const Sample& s) { return s; };
    const Index horizon = limit < 0 ? stream.size() : std::min(limit, stream.size());
    using clock = std::chrono::steady_clock;
    for (Index t = 0; t < horizon; ++t) {
        const Sample sample = scale(stream.at(t));
        const auto start = cfg.timing ? clock::now() : clock::time_point{};
        const std::vector<StepRecord> records = learner->process(sample);
        long long elapsed = 0;
        if (cfg.timing)
            elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(
                          clock::now() - start)
                          .count();
        for (const StepRecord& rec : records)
            log.record(rec.prediction, rec.label, rec.loss, rec.updated, elapsed);
    }
    if (!cfg.save_checkpoint_path.empty()) {
        if (auto* nolana = dynamic_cast<NolanaLearner*>(learner.get());
            nolana && nolana->warmed_up())
            save_checkpoint(cfg.save_checkpoint_path, *nolana);
    }
    return {std::move(log), learner->budget()};
}

inline nlohmann::json budget_to_json(const BudgetReport& b) {
    return {
        {"method", b.method},
        {"landmarks", b.landmark_reals},
        {"eigenvectors", b.eigenvector_reals},
        {"counts", b.count_slots},
        {"eigenvalues", b.eigenvalue_reals},
        {"frequencies", b.frequency_reals},
        {"phases", b.phase_reals},
        {"weights", b.weight_reals},
        {"map_budget", b.map_budget()},
        {"total", b.total()},
    };
}

inline nlohmann::json config_to_json(const RunConfig& cfg, Index dim) {
    return {
        {"method", cfg.method},
        {"loss", to_string(cfg.loss)},
        {"task", to_string(cfg.data.task)},
        {"dataset", cfg.data.path},
        {"dim", dim},
        {"m", cfg.m},
        {"r", cfg.resolved_r()},
        {"epsilon", cfg.epsilon},
        {"eta", cfg.eta},
        {"lambda", cfg.lambda},
        {"theta", cfg.theta},
        {"gamma", cfg.resolved_gamma(dim)},
        {"aggressiveness",
         std::isfinite(cfg.aggressiveness) ? nlohmann::json(cfg.aggressiveness)
                                           : nlohmann::json("unbounded")},
        {"pa_epsilon", cfg.pa_epsilon},
        {"power_iters", cfg.power_iters},
        {"stage_one_steps", cfg.stage_one_steps},
        {"seed", cfg.seed},
        {"shuffles", cfg.shuffles},
        {"max_samples", cfg.max_samples},
        {"eta_decay", cfg.eta_decay},
        {"minmax_scale", cfg.minmax_scale},
    };
}

}  // namespace detail

// Runs `shuffles` independently seeded passes (one unshuffled pass when
// shuffles == 0), writing one metrics CSV per pass plus a summary and a
// run manifest. All artifacts are written atomically, and none are
// created unless the dataset loads.
inline RunResult run(const RunConfig& cfg) {
    cfg.validate();
    SampleStream stream = SampleStream::load(cfg.data);

    if (!cfg.out_dir.empty())
        std::filesystem::create_directories(cfg.out_dir);
    const auto artifact = [&cfg](const std::string& name) {
        return cfg.out_dir.empty() ? name
                                   : (std::filesystem::path(cfg.out_dir) / name).string();
    };

    const auto wall_start = std::chrono::steady_clock::now();
    const int passes = std::max(cfg.shuffles, 1);
    RunResult result;
    std::optional<BudgetReport> budget;
    for (int pass = 0; pass < passes; ++pass) {
        std::uint64_t shuffle_seed = 0;
        if (cfg.shuffles == 0) {
            stream.reshuffle(std::nullopt);
        } else {
            shuffle_seed = cfg.pass_shuffle_seed(pass);
            stream.reshuffle(shuffle_seed);
        }
        detail::PassOutput out = detail::run_pass(
            cfg, stream, shuffle_seed, cfg.max_samples > 0 ? cfg.max_samples : -1);

        std::ostringstream csv;
        out.log.write_csv(csv);
        detail::atomic_write(artifact("metrics_pass" + std::to_string(pass) + ".csv"),
                             csv.str());

        PassResult pr;
        pr.shuffle_seed = shuffle_seed;
        pr.final_metric = out.log.final_metric();
        pr.updates = out.log.updates();
        pr.steps = out.log.steps();
        result.passes.push_back(pr);
        budget = out.budget;
    }

    double mean = 0.0;
    for (const PassResult& p : result.passes) mean += p.final_metric;
    mean /= static_cast<double>(result.passes.size());
    double var = 0.0;
    for (const PassResult& p : result.passes) {
        const double d = p.final_metric - mean;
        var += d * d;
    }
    var /= static_cast<double>(result.passes.size());
    result.metric_mean = mean;
    result.metric_stddev = std::sqrt(var);
    result.budget = *budget;
    if (cfg.timing)
        result.wall_time_s = std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - wall_start)
                                 .count();

    nlohmann::json summary;
    summary["method"] = cfg.method;
    summary["metric"] =
        cfg.data.task == Task::Classification ? "accuracy" : "rmse";
    summary["final_metric_mean"] = result.metric_mean;
    summary["final_metric_stddev"] = result.metric_stddev;
    summary["wall_time_s"] = result.wall_time_s;
    summary["budget"] = detail::budget_to_json(result.budget);
    summary["passes"] = nlohmann::json::array();
    for (std::size_t i = 0; i < result.passes.size(); ++i) {
        const PassResult& p = result.passes[i];
        summary["passes"].push_back({
            {"pass", i},
            {"shuffle_seed", p.shuffle_seed},
            {"final_metric", p.final_metric},
            {"updates", p.updates},
            {"steps", p.steps},
        });
    }
    result.summary_path = artifact("summary.json");
    detail::atomic_write(result.summary_path, summary.dump(2) + "\n");

    nlohmann::json manifest = detail::config_to_json(cfg, stream.dim());
    char digest[32];
    std::snprintf(digest, sizeof(digest), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(stream.digest()));
    manifest["dataset_digest"] = digest;
    manifest["samples"] = stream.size();
    nlohmann::json label_map = nlohmann::json::object();
    for (const auto& [raw, mapped] : stream.label_map())
        label_map[format_double(raw)] = mapped;
    manifest["label_map"] = label_map;
    result.manifest_path = artifact("manifest.json");
    detail::atomic_write(result.manifest_path, manifest.dump(2) + "\n");
    return result;
}

struct SweepRow {
    double epsilon = 0.0;
    double final_metric = 0.0;
    double mean_updates = 0.0;
    double time_s = 0.0;
};

// One run() per epsilon; merged table written as sweep.csv.
inline std::vector<SweepRow> sweep_epsilon(RunConfig cfg,
                                           const std::vector<double>& epsilons) {
    if (epsilons.empty()) throw ConfigError("epsilon sweep list is empty");
    cfg.validate();
    const std::string out_dir = cfg.out_dir;
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        RunConfig cell = cfg;
        cell.epsilon = epsilons[i];
        if (!out_dir.empty())
            cell.out_dir =
                (std::filesystem::path(out_dir) / ("eps_" + std::to_string(i))).string();
        const RunResult r = run(cell);
        SweepRow row;
        row.epsilon = epsilons[i];
        row.final_metric = r.metric_mean;
        double updates = 0.0;
        for (const PassResult& p : r.passes) updates += static_cast<double>(p.updates);
        row.mean_updates = updates / static_cast<double>(r.passes.size());
        row.time_s = r.wall_time_s;
        rows.push_back(row);
    }
    if (!out_dir.empty()) {
        std::ostringstream csv;
        csv << "epsilon,final_metric,updates,time_s\n";
        for (const SweepRow& row : rows)
            csv << format_double(row.epsilon) << ',' << format_double(row.final_metric)
                << ',' << format_double(row.mean_updates) << ','
                << format_double(row.time_s) << '\n';
        detail::atomic_write((std::filesystem::path(out_dir) / "sweep.csv").string(),
                             csv.str());
    }
    return rows;
}

struct TuneRow {
    double gamma = 0.0;
    double eta = 0.0;
    double epsilon = 0.0;
    double final_metric = 0.0;
};

// Grid search over (gamma, eta, epsilon) on a seeded stream prefix; one
// single-shuffle pass per cell. Returns every row; the best cell is the
// accuracy maximizer (classification) or RMSE minimizer (regression).
struct TuneResult {
    std::vector<TuneRow> rows;
    TuneRow best;
};

inline TuneResult tune(RunConfig cfg, std::vector<double> gammas,
                       std::vector<double> etas, std::vector<double> epsilons,
                       double prefix_fraction = 0.2) {
    cfg.validate();
    if (gammas.empty()) gammas = {0.0};
    if (etas.empty()) etas = {cfg.eta};
    if (epsilons.empty()) epsilons = {cfg.epsilon};
    if (!(prefix_fraction > 0.0 && prefix_fraction <= 1.0))
        throw ConfigError("prefix fraction must lie in (0, 1]");

    SampleStream stream = SampleStream::load(cfg.data);
    stream.reshuffle(cfg.pass_shuffle_seed(0));
    const Index prefix = std::max<Index>(
        cfg.m + 1, static_cast<Index>(prefix_fraction * static_cast<double>(stream.size())));

    const bool maximize = cfg.data.task == Task::Classification;
    TuneResult result;
    for (double gamma : gammas)
        for (double eta : etas)
            for (double epsilon : epsilons) {
                RunConfig cell = cfg;
                cell.gamma = gamma;
                cell.eta = eta;
                cell.epsilon = epsilon;
                cell.out_dir.clear();
                cell.save_checkpoint_path.clear();
                const detail::PassOutput out =
                    detail::run_pass(cell, stream, 0, prefix);
                TuneRow row{gamma, eta, epsilon, out.log.final_metric()};
                result.rows.push_back(row);
                if (result.rows.size() == 1 ||
                    (maximize ? row.final_metric > result.best.final_metric
                              : row.final_metric < result.best.final_metric))
                    result.best = row;
            }

    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        std::ostringstream csv;
        csv << "gamma,eta,epsilon,final_metric\n";
        for (const TuneRow& row : result.rows)
            csv << format_double(row.gamma) << ',' << format_double(row.eta) << ','
                << format_double(row.epsilon) << ','
                << format_double(row.final_metric) << '\n';
        detail::atomic_write(
            (std::filesystem::path(cfg.out_dir) / "tune.csv").string(), csv.str());
        nlohmann::json best = {{"gamma", result.best.gamma},
                               {"eta", result.best.eta},
                               {"epsilon", result.best.epsilon},
                               {"final_metric", result.best.final_metric}};
        detail::atomic_write(
            (std::filesystem::path(cfg.out_dir) / "tune_best.json").string(),
            best.dump(2) + "\n");
    }
    return result;
}

}  // namespace nolana
