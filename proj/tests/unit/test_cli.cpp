#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "xaidf/evaluation/report.hpp"
#include "xaidf/evaluation/synthetic_suite.hpp"
#include "xaidf/imaging/png_io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("xaidf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliResult run(const std::string& args, const std::string& env = "") const {
    const std::string out = path("stdout.txt"), err = path("stderr.txt");
    const std::string cmd = env + " " + XAIDF_CLI_PATH + " " + args + " >" + out + " 2>" + err;
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  // Synthetic dataset via the CLI itself; returns the manifest path.
  std::string synth(int count, const std::string& seed = "3") const {
    const auto r = run("synth --out-dir " + path("data") + " --count " + std::to_string(count) + " --seed " + seed);
    EXPECT_EQ(r.code, 0) << r.err;
    return path("data/manifest.jsonl");
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, NoSubcommandIsUsageError) { EXPECT_EQ(run("").code, 1); }

TEST_F(Cli, SegmentReportsSegmentCount) {
  synth(1);
  const auto r = run("segment --image " + path("data/fake_000.png") + " --segments 4 --out " + path("seg"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(path("seg.json")));
  const int s = j["segment_count"];
  EXPECT_GE(s, 3);
  EXPECT_LE(s, 6);
  EXPECT_EQ(std::stoi(r.out), s);
  EXPECT_EQ(j["labels"].size(), 64u * 64u);
  EXPECT_EQ(j["config"]["slic"]["n_segments"], 4);
  EXPECT_TRUE(fs::exists(path("seg.png")));
}

TEST_F(Cli, SegmentArgumentErrors) {
  synth(1);
  const auto missing = run("segment --segments 4 --out " + path("seg"));
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("--image"), std::string::npos);
  EXPECT_EQ(run("segment --image " + path("data/fake_000.png") + " --segments 0 --out " + path("seg")).code, 1);
  EXPECT_EQ(run("segment --image " + path("nope.png") + " --out " + path("seg")).code, 2);
}

TEST_F(Cli, ExplainLimeWritesScoresDeterministically) {
  synth(1);
  const std::string args = "explain --method lime --image " + path("data/fake_000.png") + " --seed 5 --out ";
  const auto a = run(args + path("a"));
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(run(args + path("b")).code, 0);
  const std::string ja = slurp(path("a.json"));
  EXPECT_EQ(ja, slurp(path("b.json")));
  const auto j = nlohmann::json::parse(ja);
  EXPECT_EQ(j["kind"], "segments");
  int max_label = 0;
  for (int l : j["labels"]) max_label = std::max(max_label, l);
  EXPECT_EQ(j["scores"].size(), static_cast<std::size_t>(max_label + 1));
  EXPECT_EQ(j["config"]["method"], "lime");
  EXPECT_EQ(j["config"]["seed"], 5);
  EXPECT_TRUE(fs::exists(path("a.png")));
  EXPECT_EQ(a.out, path("a") + ".png\n" + path("a") + ".json\n");
}

TEST_F(Cli, ExplainSeedFallsBackToEnvironment) {
  synth(1);
  const std::string args = "explain --method rise --image " + path("data/fake_000.png") + " --out ";
  ASSERT_EQ(run(args + path("env"), "XAI_EVAL_SEED=9").code, 0);
  ASSERT_EQ(run("explain --method rise --image " + path("data/fake_000.png") + " --seed 9 --out " + path("flag")).code,
            0);
  EXPECT_EQ(slurp(path("env.json")), slurp(path("flag.json")));
}

TEST_F(Cli, ExplainRejectsUnknownMethod) {
  synth(1);
  const auto r = run("explain --method gradcam++ --image " + path("data/fake_000.png") + " --out " + path("x"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("rise, lime, shap, sobol"), std::string::npos) << r.err;
}

TEST_F(Cli, ExplainUnreachableRemoteIsTransportError) {
  synth(1);
  const auto r = run("explain --method lime --model remote:127.0.0.1:1 --image " + path("data/fake_000.png") +
                     " --out " + path("x"));
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST_F(Cli, AttackFlipsWithRegionMask) {
  synth(8);
  const auto r = run("attack --image " + path("data/fake_007.png") + " --mask " + path("data/region_mask.png") +
                     " --seed 7 --out " + path("adv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(path("adv.json")));
  EXPECT_TRUE(j["flipped"].get<bool>());
  const int iters = j["iterations"];
  EXPECT_EQ(j["queries"], 1 + iters * 81);
  EXPECT_EQ(j["real_probability_trace"].size(), static_cast<std::size_t>(iters) + 1);
  EXPECT_EQ(j["masked_pixels"], 144);
}

TEST_F(Cli, AttackWithBlackMaskIsIdentity) {
  synth(1);
  xaidf::save_mask(xaidf::BinaryMask::filled(64, 64, false), path("black.png"));
  const auto r = run("attack --image " + path("data/fake_000.png") + " --mask " + path("black.png") + " --out " +
                     path("adv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(path("adv.png")).empty(), false);
  EXPECT_EQ(xaidf::load_image(path("adv.png")).data(), xaidf::load_image(path("data/fake_000.png")).data());
}

TEST_F(Cli, AttackArgumentAndDataErrors) {
  synth(1);
  const std::string base = "attack --image " + path("data/fake_000.png") + " --out " + path("adv");
  EXPECT_EQ(run(base + " --mask " + path("data/region_mask.png") + " --alpha 0.2 --eps 0.05").code, 1);
  xaidf::save_image(xaidf::Image::filled(64, 64, 0.5), path("grey.png"));
  EXPECT_EQ(run(base + " --mask " + path("grey.png")).code, 2);
  xaidf::save_mask(xaidf::BinaryMask::filled(32, 32, true), path("small.png"));
  EXPECT_EQ(run(base + " --mask " + path("small.png")).code, 2);
}

TEST_F(Cli, EvaluateShapeDeterminismAndReports) {
  const auto manifest = synth(3);
  const std::string args = "evaluate --manifest " + manifest + " --methods lime,rise --iters 15 --seed 4 --out ";
  const auto a = run(args + path("r1.json") + " --workers 1");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, path("r1.json") + "\n");
  EXPECT_NE(a.err.find("[3/3]"), std::string::npos);
  ASSERT_EQ(run(args + path("r8.json") + " --workers 8").code, 0);
  EXPECT_EQ(slurp(path("r1.json")), slurp(path("r8.json")));

  const auto report = xaidf::load_report(path("r1.json"));
  EXPECT_EQ(report.cells.size(), 2u * 1u * 3u);
  EXPECT_EQ(report.config["model"], "synthetic");

  const auto csv = run("report --in " + path("r1.json") + " --format csv");
  ASSERT_EQ(csv.code, 0);
  std::size_t with_data = 0;
  for (const auto& c : report.cells) with_data += c.attacked_count > 0 ? 1 : 0;
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.out.begin(), csv.out.end(), '\n')), 1 + with_data);
  EXPECT_EQ(csv.out, xaidf::report_to_csv(report));

  const auto md = run("report --in " + path("r1.json") + " --format markdown --out " + path("r.md"));
  ASSERT_EQ(md.code, 0);
  EXPECT_EQ(md.out, path("r.md") + "\n");
  EXPECT_EQ(slurp(path("r.md")), xaidf::report_to_markdown(report));
}

TEST_F(Cli, EvaluateErrors) {
  std::ofstream(path("empty.jsonl")).close();
  const auto empty = run("evaluate --manifest " + path("empty.jsonl") + " --out " + path("r.json"));
  EXPECT_EQ(empty.code, 2);
  EXPECT_NE(empty.err.find("empty dataset"), std::string::npos);
  EXPECT_TRUE(empty.out.empty());
  EXPECT_EQ(run("evaluate --manifest " + path("empty.jsonl") + " --topk 2,1 --out " + path("r.json")).code, 1);
  EXPECT_EQ(run("evaluate --manifest " + path("empty.jsonl") + " --methods lime,gradcam --out " + path("r.json")).code,
            1);

  // One unreadable entry: report still written, exit 2.
  const auto manifest = synth(1);
  {
    std::ofstream m(manifest, std::ios::app);
    m << "{\"path\": \"missing.png\", \"fake_type\": \"SYN\"}\n";
  }
  const auto partial =
      run("evaluate --manifest " + manifest + " --methods lime --topk 1 --iters 5 --out " + path("p.json"));
  EXPECT_EQ(partial.code, 2) << partial.err;
  const auto report = xaidf::load_report(path("p.json"));
  ASSERT_EQ(report.errors.size(), 1u);
  EXPECT_EQ(report.errors[0].path, "missing.png");
}

TEST_F(Cli, ReportErrors) {
  std::ofstream(path("bad.json")) << "{not json";
  EXPECT_EQ(run("report --in " + path("bad.json") + " --format csv").code, 2);
  EXPECT_EQ(run("report --in " + path("bad.json") + " --format xml").code, 1);
}
