#include "nolana/driver.hpp"

#include "test_support.hpp"

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using namespace nolana;

namespace {

std::string make_blob_file(const testsup::TempDir& dir, long count, Index dim,
                           std::uint64_t seed) {
    testsup::Rng rng(seed);
    return testsup::write_libsvm(dir.file("data.txt"),
                                 testsup::blob_stream(rng, count, dim, 4, 0.5));
}

RunConfig base_config(const std::string& data_path, const std::string& out_dir) {
    RunConfig cfg;
    cfg.data.path = data_path;
    cfg.out_dir = out_dir;
    cfg.m = 8;
    cfg.r = 6;
    cfg.gamma = 0.5;
    cfg.eta = 0.3;
    cfg.shuffles = 2;
    cfg.seed = 17;
    return cfg;
}

}  // namespace

TEST_CASE("run writes per-pass metrics, summary, and manifest") {
    testsup::TempDir dir("run");
    const std::string data = make_blob_file(dir, 300, 3, 271);
    RunConfig cfg = base_config(data, dir.file("out"));

    const RunResult result = run(cfg);
    CHECK(result.passes.size() == 2);
    CHECK(result.metric_mean > 0.5);  // better than coin flipping on blobs

    namespace fs = std::filesystem;
    CHECK(fs::exists(dir.file("out") + "/metrics_pass0.csv"));
    CHECK(fs::exists(dir.file("out") + "/metrics_pass1.csv"));
    CHECK(fs::exists(dir.file("out") + "/summary.json"));
    CHECK(fs::exists(dir.file("out") + "/manifest.json"));

    std::ifstream summary_in(dir.file("out") + "/summary.json");
    nlohmann::json summary;
    summary_in >> summary;
    CHECK(summary.at("method") == "nolana");
    CHECK(summary.at("metric") == "accuracy");
    CHECK(summary.at("budget").at("map_budget").get<long>() ==
          8 * 3 + 8 * 6 + 8 + 6);
    CHECK(summary.at("passes").size() == 2);

    std::ifstream manifest_in(dir.file("out") + "/manifest.json");
    nlohmann::json manifest;
    manifest_in >> manifest;
    CHECK(manifest.at("dataset_digest").get<std::string>().rfind("fnv1a64:", 0) == 0);
    CHECK(manifest.at("samples") == 300);
    CHECK(manifest.at("gamma") == 0.5);

    // First CSV line is the pinned schema.
    std::ifstream csv(dir.file("out") + "/metrics_pass0.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "step,prediction,label,loss,cum_metric,updated,elapsed_ns");
}

TEST_CASE("identical configuration and seed reproduce artifacts byte for byte") {
    testsup::TempDir dir("determinism");
    const std::string data = make_blob_file(dir, 250, 3, 277);

    RunConfig cfg_a = base_config(data, dir.file("a"));
    RunConfig cfg_b = base_config(data, dir.file("b"));
    run(cfg_a);
    run(cfg_b);

    for (const std::string& name :
         {std::string("metrics_pass0.csv"), std::string("metrics_pass1.csv"),
          std::string("summary.json"), std::string("manifest.json")}) {
        const std::string a = testsup::read_file(dir.file("a") + "/" + name);
        const std::string b = testsup::read_file(dir.file("b") + "/" + name);
        CHECK(a == b);
        CHECK(!a.empty());
    }

    RunConfig cfg_c = base_config(data, dir.file("c"));
    cfg_c.seed = 18;
    run(cfg_c);
    CHECK(testsup::read_file(dir.file("a") + "/metrics_pass0.csv") !=
          testsup::read_file(dir.file("c") + "/metrics_pass0.csv"));
}

TEST_CASE("missing datasets abort before any artifact is created") {
    testsup::TempDir dir("missing");
    RunConfig cfg = base_config(dir.file("nope.txt"), dir.file("out"));
    CHECK_THROWS_AS(run(cfg), IngestionError);
    CHECK_FALSE(std::filesystem::exists(dir.file("out")));
}

TEST_CASE("configuration is validated before data access") {
    testsup::TempDir dir("badcfg");
    RunConfig cfg = base_config(dir.file("nope.txt"), dir.file("out"));
    cfg.method = "svm";
    CHECK_THROWS_AS(run(cfg), ConfigError);  // bad method wins over bad path

    cfg = base_config(dir.file("nope.txt"), dir.file("out"));
    cfg.r = 20;  // r > m
    CHECK_THROWS_AS(run(cfg), ConfigError);

    cfg = base_config(dir.file("nope.txt"), dir.file("out"));
    cfg.loss = LossKind::Squared;  // mismatched task
    CHECK_THROWS_AS(run(cfg), ConfigError);

    cfg = base_config(dir.file("nope.txt"), dir.file("out"));
    cfg.data.path.clear();
    CHECK_THROWS_AS(run(cfg), ConfigError);
}

TEST_CASE("every method runs end to end") {
    testsup::TempDir dir("methods");
    const std::string data = make_blob_file(dir, 200, 3, 281);
    for (const std::string method : {"pa", "fogd", "nogd", "nolana"}) {
        RunConfig cfg = base_config(data, dir.file(method));
        cfg.method = method;
        cfg.shuffles = 1;
        const RunResult result = run(cfg);
        CHECK(result.passes.size() == 1);
        CHECK(result.budget.method == method);
        if (method == "pa") {
            CHECK(result.budget.total() == 3);
        }
    }
}

TEST_CASE("landmark methods report identical budgets") {
    testsup::TempDir dir("budget");
    const std::string data = make_blob_file(dir, 150, 3, 283);
    RunConfig cfg = base_config(data, dir.file("n1"));
    cfg.shuffles = 1;
    const RunResult nolana_result = run(cfg);
    cfg.method = "nogd";
    cfg.out_dir = dir.file("n2");
    const RunResult nogd_result = run(cfg);
    CHECK(nolana_result.budget.map_budget() == nogd_result.budget.map_budget());
    CHECK(nolana_result.budget.total() == nogd_result.budget.total());
}

TEST_CASE("epsilon sweep reports non-increasing update counts on blobs") {
    testsup::TempDir dir("sweep");
    const std::string data = make_blob_file(dir, 220, 3, 293);
    RunConfig cfg = base_config(data, dir.file("out"));
    cfg.shuffles = 1;

    const std::vector<double> epsilons = {0.0, 1.0, 4.0, 1e6};
    const auto rows = sweep_epsilon(cfg, epsilons);
    REQUIRE(rows.size() == epsilons.size());
    CHECK(rows[0].mean_updates == 220.0);  // epsilon zero updates every point
    CHECK(rows.back().mean_updates == 0.0);
    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(rows[i].mean_updates <= rows[i - 1].mean_updates);
    CHECK(std::filesystem::exists(dir.file("out") + "/sweep.csv"));

    // The fully gated sweep cell matches the fixed-landmark baseline.
    RunConfig nogd_cfg = cfg;
    nogd_cfg.method = "nogd";
    nogd_cfg.out_dir = dir.file("nogd");
    const RunResult nogd_result = run(nogd_cfg);
    CHECK(rows.back().final_metric == nogd_result.metric_mean);

    CHECK_THROWS_AS(sweep_epsilon(cfg, {}), ConfigError);
}

TEST_CASE("tuning picks the best grid cell on the prefix") {
    testsup::TempDir dir("tune");
    const std::string data = make_blob_file(dir, 400, 3, 307);
    RunConfig cfg = base_config(data, dir.file("out"));

    const TuneResult result =
        tune(cfg, {0.05, 0.5}, {0.1, 0.5}, {0.0, 1e6}, 0.25);
    CHECK(result.rows.size() == 8);
    for (const TuneRow& row : result.rows)
        CHECK(result.best.final_metric >= row.final_metric);
    CHECK(std::filesystem::exists(dir.file("out") + "/tune.csv"));
    CHECK(std::filesystem::exists(dir.file("out") + "/tune_best.json"));
}

TEST_CASE("min-max scaling keeps the run healthy") {
    testsup::TempDir dir("scale");
    const std::string data = make_blob_file(dir, 200, 3, 311);
    RunConfig cfg = base_config(data, dir.file("out"));
    cfg.minmax_scale = true;
    cfg.gamma = 2.0;
    cfg.shuffles = 1;
    const RunResult result = run(cfg);
    CHECK(result.metric_mean > 0.5);
}

#if defined(NOLANA_CLI_BIN) && defined(NOLANA_SYNTH_BIN)
namespace {

int run_command(const std::string& command) {
    const int status = std::system(command.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("command-line harness end to end") {
    testsup::TempDir dir("cli");
    const std::string data = dir.file("blobs.txt");
    REQUIRE(run_command(std::string(NOLANA_SYNTH_BIN) + " blobs -o " + data +
                        " -n 300 -d 3 --seed 4") == 0);

    const std::string base = std::string(NOLANA_CLI_BIN) +
                             " run --data " + data +
                             " -m 8 -r 6 --gamma 0.5 --eta 0.3 --shuffles 1";
    CHECK(run_command(base + " -o " + dir.file("out") + " >/dev/null") == 0);
    CHECK(std::filesystem::exists(dir.file("out") + "/summary.json"));
    CHECK(std::filesystem::exists(dir.file("out") + "/manifest.json"));

    // Config rejection (r > m) exits 2 before touching data.
    CHECK(run_command(std::string(NOLANA_CLI_BIN) + " run --data " + data +
                      " -m 4 -r 9 2>/dev/null") == 2);
    // Missing dataset exits 3 and leaves no artifacts behind.
    CHECK(run_command(std::string(NOLANA_CLI_BIN) + " run --data " +
                      dir.file("absent.txt") + " -o " + dir.file("never") +
                      " 2>/dev/null") == 3);
    CHECK_FALSE(std::filesystem::exists(dir.file("never")));

    // Relative paths resolve through NOLANA_DATA_DIR.
    CHECK(run_command("NOLANA_DATA_DIR=" + dir.path().string() + " " +
                      std::string(NOLANA_CLI_BIN) + " run --data blobs.txt" +
                      " -m 8 -r 6 --shuffles 1 >/dev/null") == 0);

    // Remaining subcommands smoke-run on the same dataset.
    CHECK(run_command(std::string(NOLANA_CLI_BIN) + " sweep-eps --data " + data +
                      " -m 8 -r 6 --shuffles 1 --eps-list 0,1e6 -o " +
                      dir.file("sweep") + " >/dev/null") == 0);
    CHECK(std::filesystem::exists(dir.file("sweep") + "/sweep.csv"));
    CHECK(run_command(std::string(NOLANA_CLI_BIN) + " approx --data " + data +
                      " --m-list 5,10 --seeds 1 --subset 100 -o " +
                      dir.file("approx") + " >/dev/null") == 0);
    CHECK(std::filesystem::exists(dir.file("approx") + "/approx.csv"));
    CHECK(run_command(std::string(NOLANA_CLI_BIN) + " tune --data " + data +
                      " -m 8 -r 6 --gamma-list 0.2,0.8 --eta-list 0.3 -o " +
                      dir.file("tune") + " >/dev/null") == 0);
    CHECK(std::filesystem::exists(dir.file("tune") + "/tune_best.json"));
}
#endif

TEST_CASE("checkpoints can be written from the driver") {
    testsup::TempDir dir("ckpt");
    const std::string data = make_blob_file(dir, 120, 3, 313);
    RunConfig cfg = base_config(data, dir.file("out"));
    cfg.shuffles = 1;
    cfg.save_checkpoint_path = dir.file("out/model.json");
    run(cfg);
    const NolanaLearner restored = load_checkpoint(dir.file("out/model.json"));
    CHECK(restored.state().m() == 8);
    CHECK(restored.step_count() == 120);
}
