#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("metacf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    void write(const std::string& name, const std::string& text) const {
        std::ofstream(dir_ / name, std::ios::binary) << text;
    }

    std::string read(const std::string& name) const {
        std::ifstream in(dir_ / name, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    int run(const std::vector<std::string>& args) {
        out_.str("");
        err_.str("");
        return metacf::cli::run(args, out_, err_);
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

}  // namespace

TEST_F(CliTest, CompleteBaselineFillsWithColumnMean) {
    write("m.csv", "dataset_id,c1,c2\nd1,80.0,\nd2,70.0,90.0\n");
    ASSERT_EQ(run({"complete", "--matrix", path("m.csv"), "--engine", "baseline", "--out", path("o.csv")}), 0)
        << err_.str();
    EXPECT_EQ(read("o.csv"), "dataset_id,c1,c2\nd1,80.0,90.0\nd2,70.0,90.0\n");
}

TEST_F(CliTest, UnknownEngineIsAUsageError) {
    write("m.csv", "dataset_id,c1\nd1,80\n");
    EXPECT_EQ(run({"complete", "--matrix", path("m.csv"), "--engine", "warp", "--out", path("o.csv")}), 2);
    EXPECT_NE(err_.str().find("warp"), std::string::npos);
    EXPECT_NE(err_.str().find("baseline, fkm, mf, nlpca, ubp"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("o.csv")));
}

TEST_F(CliTest, UsageErrorsExitTwo) {
    EXPECT_EQ(run({"complete", "--bogus"}), 2);
    EXPECT_EQ(run({"frobnicate"}), 2);
    EXPECT_EQ(run({"complete", "--matrix", path("missing.csv"), "--engine", "mf", "--out", path("o.csv")}), 2);
    EXPECT_NE(err_.str().find("missing.csv"), std::string::npos);
    write("m.csv", "dataset_id,c1\nd1,80\n");
    EXPECT_EQ(run({"complete", "--matrix", path("m.csv"), "--out", path("o.csv")}), 2);
    EXPECT_EQ(run({"ingest", "--matrix", path("m.csv"), "--out", path("o.csv"), "--retain", "1.5"}), 2);
}

TEST_F(CliTest, DataErrorsExitOne) {
    write("bad.csv", "dataset_id,c1\nd1,120\n");
    EXPECT_EQ(run({"complete", "--matrix", path("bad.csv"), "--engine", "mf", "--out", path("o.csv")}), 1);
    EXPECT_NE(err_.str().find("accuracy out of range at (d1,c1)"), std::string::npos) << err_.str();
}

TEST_F(CliTest, VersionAndHelp) {
    EXPECT_EQ(run({"--version"}), 0);
    EXPECT_EQ(out_.str(), "metacf 0.1.0\n");
    EXPECT_EQ(run({"--help"}), 0);
    EXPECT_NE(out_.str().find("evaluate"), std::string::npos);
}

TEST_F(CliTest, IngestMasksDeterministically) {
    write("m.csv", "dataset_id,a,b,c\nd1,70,80,90\nd2,60,65,75\n");
    const std::vector<std::string> args = {"ingest", "--matrix", path("m.csv"), "--out", path("o.csv"), "--retain",
                                           "0.5", "--seed", "9", "--heldout", path("h.csv")};
    ASSERT_EQ(run(args), 0) << err_.str();
    const auto first = read("o.csv");
    EXPECT_EQ(metacf::load_matrix(first).observed_count(), 3u);
    const auto held = read("h.csv");
    EXPECT_EQ(std::count(held.begin(), held.end(), '\n'), 4);
    ASSERT_EQ(run(args), 0);
    EXPECT_EQ(read("o.csv"), first);
}

TEST_F(CliTest, EvaluateIsByteIdenticalAcrossRuns) {
    ASSERT_EQ(run({"synth", "--rows", "8", "--cols", "6", "--rank", "2", "--noise", "1", "--seed", "4", "--out",
                   path("m.csv")}),
              0);
    write("plan.json", R"({"retained_levels": [0.4, 0.8], "repetitions": 2, "k": 2, "master_seed": 3,
                          "engine_settings": [{"engine": "baseline"}, {"engine": "mf", "hyperparams": {"rank": 2}}]})");
    const std::vector<std::string> args = {"evaluate", "--matrix", path("m.csv"), "--plan", path("plan.json"),
                                           "--out", path("r.md"), "--raw", path("raw.csv")};
    ASSERT_EQ(run(args), 0) << err_.str();
    EXPECT_NE(err_.str().find("seed: master=3"), std::string::npos);
    const auto report = read("r.md"), raw = read("raw.csv");
    ASSERT_EQ(run(args), 0);
    EXPECT_EQ(read("r.md"), report);
    EXPECT_EQ(read("raw.csv"), raw);
    EXPECT_NE(report.find("| Baseline |"), std::string::npos);
    EXPECT_NE(report.find("| MF |"), std::string::npos);

    ASSERT_EQ(run({"report", "--raw", path("raw.csv"), "--plan", path("plan.json"), "--out", path("r2.md")}), 0)
        << err_.str();
    EXPECT_EQ(read("r2.md"), report);
}

TEST_F(CliTest, RecommendCfWritesTopK) {
    write("m.csv", "dataset_id,c1,c2,c3\nd1,80,,60\nd2,70,90,65\nd3,,85,50\n");
    ASSERT_EQ(run({"recommend", "--matrix", path("m.csv"), "--engine", "baseline", "--k", "2", "--dataset", "d1",
                   "--out", path("r.csv")}),
              0)
        << err_.str();
    EXPECT_EQ(read("r.csv"),
              "dataset_id,rank,config_id,predicted_accuracy\nd1,1,c2,87.5\nd1,2,c1,80.0\n");
}

TEST_F(CliTest, RecommendContentUsesDatasetFiles) {
    const std::string data = METACF_DATA_DIR;
    write("m.csv", "dataset_id,a,b\niris,90,80\nwine,85,95\nmoons,70,75\n");
    ASSERT_EQ(run({"recommend", "--matrix", path("m.csv"), "--mode", "content", "--data-dir", data, "--k", "1",
                   "--neighbors", "2", "--out", path("r.csv")}),
              0)
        << err_.str();
    const auto text = read("r.csv");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
    EXPECT_EQ(run({"recommend", "--matrix", path("m.csv"), "--mode", "content", "--out", path("r.csv")}), 2);
    EXPECT_EQ(run({"recommend", "--matrix", path("m.csv"), "--mode", "psychic", "--out", path("r.csv")}), 2);
}
