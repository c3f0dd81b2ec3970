#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "alloclab/cli.hpp"

namespace fs = std::filesystem;
using namespace alloclab;

namespace {

struct Result {
    int status;
    std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    args.push_back("--quiet");
    const int status = cli::run(args, out, err);
    return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() / ("alloclab-cli-" + std::to_string(::getpid()) + "-" +
                                             ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    void TearDown() override { fs::remove_all(root_); }
    std::string dir(const std::string& name) const { return (root_ / name).string(); }

    fs::path root_;
};

}  // namespace

TEST_F(CliTest, TailsWritesCsvFitAndManifest) {
    const auto r = run_cli({"tails", "--d", "1", "--alpha", "1", "--L", "200", "--replicates", "200", "--seed", "7",
                            "--output", dir("t")});
    ASSERT_EQ(r.status, cli::kExitOk) << r.err;
    EXPECT_TRUE(fs::exists(dir("t") + "/tails.csv"));
    EXPECT_TRUE(fs::exists(dir("t") + "/fit.json"));
    const auto manifest = nlohmann::json::parse(slurp(dir("t") + "/manifest.json"));
    EXPECT_EQ(manifest["command"], "tails");
    EXPECT_EQ(manifest["seed"], 7);
    EXPECT_EQ(manifest["tool"], "alloclab");
    EXPECT_EQ(manifest["parameters"]["alpha"], 1.0);
    EXPECT_EQ(manifest["parameters"]["L"], 200.0);
    EXPECT_EQ(slurp(dir("t") + "/tails.csv").rfind("statistic,d,L,eps,alpha,lambda,r,survival,ci_lo,ci_hi,n\n", 0), 0u);
    EXPECT_NO_THROW(nlohmann::json::parse(r.out));
}

TEST_F(CliTest, MissingAlphaIsNamed) {
    const auto r = run_cli({"solve", "--output", dir("s")});
    EXPECT_EQ(r.status, cli::kExitConfig);
    EXPECT_NE(r.err.find("alpha"), std::string::npos);
}

TEST_F(CliTest, UnknownCommandPrintsUsage) {
    const auto r = run_cli({"frobnicate"});
    EXPECT_EQ(r.status, cli::kExitConfig);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST_F(CliTest, NoCommandIsAConfigError) { EXPECT_EQ(run_cli({}).status, cli::kExitConfig); }

TEST_F(CliTest, BadNumberIsAConfigError) {
    const auto r = run_cli({"solve", "--alpha", "lots", "--output", dir("s")});
    EXPECT_EQ(r.status, cli::kExitConfig);
}

TEST_F(CliTest, UnwritableOutputIsARuntimeError) {
    std::ofstream(dir("file")) << "x";
    const auto r = run_cli({"bounds", "--kind", "oned-X", "--alpha", "0.5", "--output", dir("file") + "/sub"});
    EXPECT_EQ(r.status, cli::kExitRuntime);
}

TEST_F(CliTest, NotApplicableIsAConfigError) {
    const auto r = run_cli({"bounds", "--kind", "oned-X", "--alpha", "1", "--output", dir("b")});
    EXPECT_EQ(r.status, cli::kExitConfig);
}

TEST_F(CliTest, IdenticalRunsGiveIdenticalArtifacts) {
    for (const auto& name : {"a", "b"}) {
        const auto r = run_cli({"solve", "--d", "2", "--L", "6", "--eps", "0.1", "--alpha", "1", "--seed", "3",
                                "--output", dir(name)});
        ASSERT_EQ(r.status, cli::kExitOk) << r.err;
    }
    for (const auto& f : {"allocation.bin", "centers.json", "summary.json"})
        EXPECT_EQ(slurp(dir("a") + "/" + f), slurp(dir("b") + "/" + f)) << f;
    EXPECT_FALSE(slurp(dir("a") + "/allocation.bin").empty());
}

TEST_F(CliTest, ManifestReplayReproducesArtifacts) {
    ASSERT_EQ(run_cli({"solve", "--d", "1", "--L", "100", "--alpha", "0.8", "--seed", "11", "--output", dir("first")})
                  .status,
              cli::kExitOk);
    const auto r = run_cli({"--config", dir("first") + "/manifest.json", "--output", dir("again")});
    ASSERT_EQ(r.status, cli::kExitOk) << r.err;
    EXPECT_EQ(slurp(dir("first") + "/allocation.json"), slurp(dir("again") + "/allocation.json"));
    auto m1 = nlohmann::json::parse(slurp(dir("first") + "/manifest.json"));
    auto m2 = nlohmann::json::parse(slurp(dir("again") + "/manifest.json"));
    m1.erase("output");
    m2.erase("output");
    EXPECT_EQ(m1, m2);
}

TEST_F(CliTest, FlagOverridesFileOverridesDefault) {
    std::ofstream(dir("cfg.json")) << R"({"command": "walk", "parameters": {"m_max": 2, "replicates": 500}, "seed": 4})";
    const auto r = run_cli({"walk", "--config", dir("cfg.json"), "--replicates", "300", "--output", dir("w")});
    ASSERT_EQ(r.status, cli::kExitOk) << r.err;
    const auto m = nlohmann::json::parse(slurp(dir("w") + "/manifest.json"));
    EXPECT_EQ(m["parameters"]["replicates"], 300);
    EXPECT_EQ(m["parameters"]["m_max"], 2);
    EXPECT_EQ(m["parameters"]["law"], "exponential");
    EXPECT_EQ(m["seed"], 4);
}

TEST_F(CliTest, UnknownParameterInFileRejected) {
    std::ofstream(dir("cfg.json")) << R"({"command": "walk", "parameters": {"mmax": 2}})";
    EXPECT_EQ(run_cli({"--config", dir("cfg.json"), "--output", dir("w")}).status, cli::kExitConfig);
}

TEST_F(CliTest, EnvironmentSeedHasLowestPrecedence) {
    ::setenv("ALLOCLAB_SEED", "99", 1);
    ASSERT_EQ(run_cli({"walk", "--m_max", "1", "--replicates", "100", "--output", dir("env")}).status, cli::kExitOk);
    ASSERT_EQ(run_cli({"walk", "--m_max", "1", "--replicates", "100", "--seed", "5", "--output", dir("flag")}).status,
              cli::kExitOk);
    ::unsetenv("ALLOCLAB_SEED");
    EXPECT_EQ(nlohmann::json::parse(slurp(dir("env") + "/manifest.json"))["seed"], 99);
    EXPECT_EQ(nlohmann::json::parse(slurp(dir("flag") + "/manifest.json"))["seed"], 5);
}

TEST_F(CliTest, BoundsCsv) {
    const auto r = run_cli({"bounds", "--kind", "oned-R", "--alpha", "0.5", "--radii", "0,1,2", "--output", dir("b")});
    ASSERT_EQ(r.status, cli::kExitOk) << r.err;
    std::istringstream is(slurp(dir("b") + "/bounds.csv"));
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "r,bound");
    std::getline(is, line);
    EXPECT_EQ(line, "0,8");
}

TEST_F(CliTest, RenderWritesImage) {
    const auto r = run_cli({"render", "--L", "4", "--eps", "0.1", "--alpha", "1", "--output", dir("r")});
    ASSERT_EQ(r.status, cli::kExitOk) << r.err;
    EXPECT_EQ(slurp(dir("r") + "/territories.ppm").rfind("P6\n40 40\n255\n", 0), 0u);
}
