// Command-line harness for the streaming learners: prequential runs,
// kernel-approximation curves, epsilon sweeps, and grid tuning.

#include "nolana/driver.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIngestion = 3;
constexpr int kExitNumerical = 4;

// Relative dataset paths fall back to $NOLANA_DATA_DIR when they do not
// resolve from the working directory.
std::string resolve_data_path(const std::string& path) {
    namespace fs = std::filesystem;
    if (path.empty() || fs::exists(path) || fs::path(path).is_absolute())
        return path;
    if (const char* dir = std::getenv("NOLANA_DATA_DIR")) {
        const fs::path candidate = fs::path(dir) / path;
        if (fs::exists(candidate)) return candidate.string();
    }
    return path;
}

void add_common_options(CLI::App* cmd, nolana::RunConfig& cfg, std::string& loss,
                        std::string& task) {
    cmd->add_option("--data", cfg.data.path, "dataset in LIBSVM text format")
        ->required();
    cmd->add_option("--dim", cfg.data.dim, "feature dimension (default: inferred)");
    cmd->add_option("--loss", loss, "hinge | logistic | squared")
        ->check(CLI::IsMember({"hinge", "logistic", "squared"}));
    cmd->add_option("--task", task, "classification | regression (default: from loss)")
        ->check(CLI::IsMember({"", "classification", "regression"}));
    cmd->add_option("--positive-label", cfg.data.positive_label,
                    "raw label mapped to +1 (default: most frequent)");
    cmd->add_option("-m,--landmarks", cfg.m, "budget size m");
    cmd->add_option("-r,--rank", cfg.r, "mapping rank r (default: round(0.8 m))");
    cmd->add_option("--r-ratio", cfg.r_ratio, "rank ratio when --rank is unset");
    cmd->add_option("--epsilon", cfg.epsilon, "squared-distance update gate");
    cmd->add_option("--eta", cfg.eta, "gradient step size");
    cmd->add_option("--lambda", cfg.lambda, "L2 regularizer");
    cmd->add_option("--theta", cfg.theta, "realignment ridge regularizer");
    cmd->add_option("--gamma", cfg.gamma, "Gaussian kernel scale (default: 1/dim)");
    cmd->add_option("--power-iters", cfg.power_iters,
                    "subspace iterations per landmark refresh");
    cmd->add_option("--stage-one-steps", cfg.stage_one_steps,
                    "gradient steps on the point that triggered an update");
    cmd->add_option("--aggressiveness", cfg.aggressiveness,
                    "passive-aggressive step cap (default: unbounded)");
    cmd->add_option("--pa-epsilon", cfg.pa_epsilon,
                    "passive-aggressive regression dead zone");
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_option("--max-samples", cfg.max_samples,
                    "cap each pass at a stream prefix (0: whole stream)");
    cmd->add_flag("--eta-decay", cfg.eta_decay, "use eta / sqrt(t)");
    cmd->add_flag("--minmax-scale", cfg.minmax_scale,
                  "per-dimension min-max scaling fit on the warm-up prefix");
    cmd->add_flag("--timing", cfg.timing,
                  "record real timings (artifacts stop being byte-reproducible)");
    cmd->add_option("-o,--out", cfg.out_dir, "artifact directory");
}

void finalize_config(nolana::RunConfig& cfg, const std::string& loss,
                     const std::string& task) {
    cfg.loss = nolana::loss_from_string(loss);
    if (task.empty()) {
        cfg.data.task = nolana::is_classification(cfg.loss)
                            ? nolana::Task::Classification
                            : nolana::Task::Regression;
    } else {
        cfg.data.task = task == "classification" ? nolana::Task::Classification
                                                 : nolana::Task::Regression;
    }
    cfg.data.path = resolve_data_path(cfg.data.path);
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string token;
    while (std::getline(in, token, ','))
        if (!token.empty()) out.push_back(std::stod(token));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"streaming nonlinear learners under a fixed memory budget"};
    app.require_subcommand(1);

    nolana::RunConfig cfg;
    std::string loss = "hinge";
    std::string task;

    auto* run_cmd = app.add_subcommand("run", "prequential run with seeded shuffles");
    add_common_options(run_cmd, cfg, loss, task);
    run_cmd->add_option("--method", cfg.method, "pa | fogd | nogd | nolana")
        ->check(CLI::IsMember({"pa", "fogd", "nogd", "nolana"}));
    run_cmd->add_option("--shuffles", cfg.shuffles,
                        "independent seeded passes (0: single pass, file order)");
    run_cmd->add_option("--save-checkpoint", cfg.save_checkpoint_path,
                        "write the final model + landmark state of each pass");

    auto* sweep_cmd =
        app.add_subcommand("sweep-eps", "run once per epsilon and tabulate");
    std::string eps_list = "0";
    add_common_options(sweep_cmd, cfg, loss, task);
    sweep_cmd->add_option("--method", cfg.method, "pa | fogd | nogd | nolana")
        ->check(CLI::IsMember({"pa", "fogd", "nogd", "nolana"}));
    sweep_cmd->add_option("--shuffles", cfg.shuffles, "passes per epsilon");
    sweep_cmd->add_option("--eps-list", eps_list, "comma-separated epsilon values")
        ->required();

    auto* approx_cmd = app.add_subcommand(
        "approx", "relative kernel approximation error per budget point");
    std::string approx_method = "oana";
    std::string m_list = "20,50,100,200";
    int approx_seeds = 3;
    nolana::Index subset_size = 10000;
    add_common_options(approx_cmd, cfg, loss, task);
    approx_cmd->add_option("--method", approx_method, "oana | nogd | fogd")
        ->check(CLI::IsMember({"oana", "nogd", "fogd"}));
    approx_cmd->add_option("--m-list", m_list, "comma-separated budget sizes");
    approx_cmd->add_option("--seeds", approx_seeds, "shuffle seeds to average over");
    approx_cmd->add_option("--subset", subset_size,
                           "held subset size for the error measurement");

    auto* tune_cmd = app.add_subcommand(
        "tune", "grid search (gamma, eta, epsilon) on a seeded stream prefix");
    std::string gamma_list, eta_list, tune_eps_list;
    double prefix_fraction = 0.2;
    add_common_options(tune_cmd, cfg, loss, task);
    tune_cmd->add_option("--method", cfg.method, "pa | fogd | nogd | nolana")
        ->check(CLI::IsMember({"pa", "fogd", "nogd", "nolana"}));
    tune_cmd->add_option("--gamma-list", gamma_list, "comma-separated gammas");
    tune_cmd->add_option("--eta-list", eta_list, "comma-separated etas");
    tune_cmd->add_option("--eps-list", tune_eps_list, "comma-separated epsilons");
    tune_cmd->add_option("--prefix", prefix_fraction,
                         "fraction of the stream used for tuning");

    CLI11_PARSE(app, argc, argv);

    try {
        finalize_config(cfg, loss, task);

        if (run_cmd->parsed()) {
            const nolana::RunResult result = nolana::run(cfg);
            std::printf("%s %s: final %s = %.6g +- %.6g over %zu pass(es)\n",
                        cfg.method.c_str(), cfg.data.path.c_str(),
                        cfg.data.task == nolana::Task::Classification ? "accuracy"
                                                                      : "rmse",
                        result.metric_mean, result.metric_stddev,
                        result.passes.size());
            std::printf("map budget = %lld stored reals (+%lld weights)\n",
                        static_cast<long long>(result.budget.map_budget()),
                        static_cast<long long>(result.budget.weight_reals));
            return 0;
        }

        if (sweep_cmd->parsed()) {
            const auto rows = nolana::sweep_epsilon(cfg, parse_list(eps_list));
            std::printf("%12s %14s %12s %10s\n", "epsilon", "final_metric",
                        "updates", "time_s");
            for (const auto& row : rows)
                std::printf("%12g %14.6g %12g %10.3f\n", row.epsilon,
                            row.final_metric, row.mean_updates, row.time_s);
            return 0;
        }

        if (approx_cmd->parsed()) {
            cfg.validate();
            nolana::SampleStream stream = nolana::SampleStream::load(cfg.data);
            std::ostringstream csv;
            csv << "method,m,r,map_budget,error\n";
            std::printf("%8s %6s %6s %12s %12s\n", "method", "m", "r", "budget",
                        "error");
            for (double m_value : parse_list(m_list)) {
                const auto m = static_cast<nolana::Index>(m_value);
                nolana::ApproxConfig acfg;
                acfg.method = approx_method == "oana" ? nolana::ApproxMethod::Oana
                              : approx_method == "nogd"
                                  ? nolana::ApproxMethod::Nogd
                                  : nolana::ApproxMethod::Fogd;
                acfg.m = m;
                acfg.r = cfg.r > 0
                             ? cfg.r
                             : static_cast<nolana::Index>(std::llround(
                                   cfg.r_ratio * static_cast<double>(m)));
                acfg.epsilon = cfg.epsilon;
                acfg.kernel.gamma = cfg.resolved_gamma(stream.dim());
                acfg.power_iters = cfg.power_iters;
                acfg.subset_size = subset_size;
                double error_sum = 0.0;
                nolana::Index budget = 0;
                for (int s = 0; s < approx_seeds; ++s) {
                    stream.reshuffle(cfg.pass_shuffle_seed(s));
                    acfg.seed = nolana::derive_seed(cfg.seed, 0xa70 + s);
                    const nolana::ApproxResult r =
                        nolana::approx_experiment(stream, acfg);
                    error_sum += r.error;
                    budget = r.map_budget;
                }
                const double error = error_sum / approx_seeds;
                csv << approx_method << ',' << m << ',' << acfg.r << ',' << budget
                    << ',' << nolana::format_double(error) << '\n';
                std::printf("%8s %6lld %6lld %12lld %12.6g\n", approx_method.c_str(),
                            static_cast<long long>(m),
                            static_cast<long long>(acfg.r),
                            static_cast<long long>(budget), error);
            }
            if (!cfg.out_dir.empty()) {
                std::filesystem::create_directories(cfg.out_dir);
                nolana::detail::atomic_write(
                    (std::filesystem::path(cfg.out_dir) / "approx.csv").string(),
                    csv.str());
            }
            return 0;
        }

        if (tune_cmd->parsed()) {
            const nolana::TuneResult result =
                nolana::tune(cfg, parse_list(gamma_list), parse_list(eta_list),
                             parse_list(tune_eps_list), prefix_fraction);
            std::printf("best: gamma=%g eta=%g epsilon=%g final_metric=%.6g\n",
                        result.best.gamma, result.best.eta, result.best.epsilon,
                        result.best.final_metric);
            return 0;
        }
    } catch (const nolana::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const nolana::ParseError& e) {
        std::fprintf(stderr, "ingestion error: %s\n", e.what());
        return kExitIngestion;
    } catch (const nolana::IngestionError& e) {
        std::fprintf(stderr, "ingestion error: %s\n", e.what());
        return kExitIngestion;
    } catch (const nolana::DegenerateSpectrumError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kExitNumerical;
    } catch (const nolana::SingularSystemError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
