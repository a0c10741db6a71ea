#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "lcs/pipeline.hpp"

using namespace lcs;
namespace fs = std::filesystem;

namespace {
const char* kSmallConfig =
    "size = 120\n"
    "transient = 50\n"
    "train_steps = 40\n"
    "truth_steps = 15\n"
    "k_past = 6\n"
    "k_future = 10\n"
    "forecast_steps = 10\n"
    "render_sites = 0\n";

fs::path fresh_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("lcs_pipeline_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = io::read_file(e.path());
    return files;
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(LCS_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
} // namespace

TEST(Pipeline, AllStagesAreReproducible) {
    const auto cfg = parse_config(kSmallConfig);
    const auto a = fresh_dir("a"), b = fresh_dir("b");
    pipeline::run_command("all", cfg, {a});
    pipeline::run_command("all", cfg, {b});
    const auto sa = snapshot(a), sb = snapshot(b);
    EXPECT_EQ(sa.size(), 19u);
    EXPECT_EQ(sa, sb);

    const auto metrics = nlohmann::json::parse(sa.at("metrics.json"));
    EXPECT_EQ(metrics.at("forecast_start_row").get<int>(), 38);
    EXPECT_EQ(metrics.at("latent_accuracy_by_lead").size(), 10u);
    EXPECT_LE(metrics.at("reconstruction_mae").get<double>(), 0.5);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Pipeline, CorruptInputLeavesNoOutputs) {
    const auto cfg = parse_config(kSmallConfig);
    const auto dir = fresh_dir("corrupt");
    pipeline::run_command("simulate", cfg, {dir});
    {
        std::fstream f(dir / "X_train.lcsf", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(40);
        f.put('\x7f');
    }
    try {
        pipeline::run_command("train", cfg, {dir});
        FAIL() << "corrupted input was accepted";
    } catch (const IoError& e) {
        EXPECT_EQ(pipeline::exit_code_for(e), 3);
    }
    EXPECT_EQ(snapshot(dir).size(), 2u);
    fs::remove_all(dir);
}

TEST(Pipeline, MissingInputIsIoError) {
    const auto cfg = parse_config(kSmallConfig);
    const auto dir = fresh_dir("missing");
    EXPECT_THROW(pipeline::run_command("forecast", cfg, {dir}), IoError);
    fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
    const auto dir = fresh_dir("cli");
    {
        std::ofstream(dir / "good.cfg") << kSmallConfig;
        std::ofstream(dir / "bad.cfg") << "size = 120\nnot_a_key = 3\n";
    }
    const auto work = (dir / "work").string();
    EXPECT_EQ(run_cli("simulate --config " + (dir / "good.cfg").string() + " --work " + work), 0);
    EXPECT_TRUE(fs::exists(dir / "work" / "X_train.lcsf"));
    EXPECT_EQ(run_cli("simulate --config " + (dir / "bad.cfg").string() + " --work " + work), 2);
    EXPECT_EQ(run_cli("simulate --config " + (dir / "absent.cfg").string()), 2);
    EXPECT_EQ(run_cli("explode --config " + (dir / "good.cfg").string()), 2);
    EXPECT_EQ(run_cli("forecast --config " + (dir / "good.cfg").string() + " --work " + (dir / "empty").string()), 3);
    fs::remove_all(dir);
}
