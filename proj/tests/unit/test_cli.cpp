#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli/commands.hpp"
#include "fixtures.hpp"
#include "momap/compress.hpp"
#include "momap/dsl.hpp"
#include "momap/io.hpp"
#include "momap/metrics.hpp"
#include "momap/synth.hpp"

namespace momap {
namespace {

using nlohmann::json;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
  json summary() const { return json::parse(out); }
};

Outcome momap_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    unsetenv("MOMAP_THREADS");
    SceneSpec spec = random_scene(41, 24, 24, 20);
    spec_path_ = (dir_ / "scene.json").string();
    write_text_file(spec_path_, scene_to_json(spec).dump(2));
  }
  void TearDown() override { unsetenv("MOMAP_THREADS"); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string gen(const std::string& name) {
    const auto o = momap_cli({"gen", spec_path_, "--out", path(name)});
    EXPECT_EQ(o.code, 0) << o.err;
    return path(name);
  }

  fixture::TempDir dir_{"cli"};
  std::string spec_path_;
};

TEST_F(Cli, GenWritesAReadableFileAndSummary) {
  const auto o = momap_cli({"gen", spec_path_, "--out", path("a.momap")});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto s = o.summary();
  EXPECT_EQ(s["command"], "gen");
  EXPECT_EQ(s["frames"], 20);
  const auto b = read_momap(path("a.momap"));
  EXPECT_EQ(b.momap.height(), 24u);
  ASSERT_TRUE(b.seg && b.camera);
  EXPECT_EQ(s["bytes"], std::filesystem::file_size(path("a.momap")));

  const auto via_config = momap_cli({"gen", "--config", spec_path_, "--out", path("b.momap")});
  ASSERT_EQ(via_config.code, 0);
  EXPECT_EQ(read_file_bytes(path("a.momap")), read_file_bytes(path("b.momap")));
}

TEST_F(Cli, GenIsDeterministicAcrossRunsAndThreads) {
  ASSERT_EQ(momap_cli({"gen", spec_path_, "--out", path("a.momap"), "--seed", "5"}).code, 0);
  ASSERT_EQ(momap_cli({"gen", spec_path_, "--out", path("b.momap"), "--seed", "5", "--threads", "8"}).code, 0);
  EXPECT_EQ(read_file_bytes(path("a.momap")), read_file_bytes(path("b.momap")));
}

TEST_F(Cli, MalformedInputsExitWithOne) {
  write_text_file(path("bad.json"), "{\"height\": 4,");
  auto o = momap_cli({"gen", path("bad.json"), "--out", path("x.momap")});
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("malformed JSON"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(path("x.momap")));

  o = momap_cli({"eval", path("missing.momap"), path("missing.momap")});
  EXPECT_EQ(o.code, 1);
  write_text_file(path("junk.momap"), "not a momap");
  EXPECT_EQ(momap_cli({"decompress", path("junk.momap"), "--out", path("y.momap")}).code, 1);
  EXPECT_EQ(momap_cli({"frobnicate"}).code, 1);
  EXPECT_EQ(momap_cli({"gen", spec_path_}).code, 1);  // --out missing
  EXPECT_EQ(momap_cli({"--help"}).code, 0);
}

TEST_F(Cli, InvalidSpecValuesExitWithTwo) {
  auto j = scene_to_json(random_scene(1, 8, 8, 4));
  j["frames"] = 0;
  write_text_file(path("zero.json"), j.dump());
  const auto o = momap_cli({"gen", path("zero.json"), "--out", path("z.momap")});
  EXPECT_EQ(o.code, 2) << o.err;
}

TEST_F(Cli, EvalAgainstItselfAndCorrupted) {
  const auto gt = gen("gt.momap");
  auto o = momap_cli({"eval", gt, gt});
  ASSERT_EQ(o.code, 0) << o.err;
  auto s = o.summary();
  EXPECT_EQ(s["command"], "eval");
  EXPECT_EQ(s["n_candidates"], 1);
  for (const auto& m : s["metrics"]) {
    if (m["value"].is_null()) continue;
    EXPECT_EQ(m["value"].get<double>(), m["better"] == "higher" ? 1.0 : 0.0) << m["name"];
  }
  EXPECT_NE(o.err.find("fg_mask_iou"), std::string::npos);
  EXPECT_NE(o.err.find("note: 1 candidates"), std::string::npos);

  auto b = read_momap(gt);
  SplitMix64 rng(42);
  for (auto& v : b.momap.positions()) v += 0.05 * rng.normal();
  write_momap(path("bad.momap"), b.momap);
  o = momap_cli({"eval", gt, gt, path("bad.momap")});
  ASSERT_EQ(o.code, 0) << o.err;
  for (const auto& m : o.summary()["metrics"]) {
    if (!m["value"].is_null()) EXPECT_EQ(m["best_index"], 0) << m["name"];
  }
}

TEST_F(Cli, EvalMatchesTheLibraryForTenCandidates) {
  const auto gt = gen("gt.momap");
  const auto bundle = read_momap(gt);
  SplitMix64 rng(43);
  std::vector<std::string> args{"eval", gt};
  std::vector<MoMap> cands;
  for (int i = 0; i < 10; ++i) {
    MoMap c = bundle.momap;
    for (auto& v : c.positions()) v += (0.01 + 0.01 * i) * rng.normal();
    fixture::round_to_f32(c);
    const auto p = path("c" + std::to_string(i) + ".momap");
    write_momap(p, c);
    cands.push_back(c);
    args.push_back(p);
  }
  const auto o = momap_cli(args);
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.err.find("note:"), std::string::npos);
  const auto report = evaluate_best_of_n(bundle.momap, cands, bundle.seg, MetricConfig{});
  const auto s = o.summary();
  const auto expected = to_json(report);
  EXPECT_EQ(s["metrics"], expected["metrics"]);

  auto a1 = args, a8 = args;
  a1.insert(a1.end(), {"--threads", "1"});
  a8.insert(a8.end(), {"--threads", "8"});
  EXPECT_EQ(momap_cli(a1).out, momap_cli(a8).out);
  setenv("MOMAP_THREADS", "6", 1);
  EXPECT_EQ(momap_cli(args).out, o.out);
}

TEST_F(Cli, EvalDimensionMismatchExitsWithTwo) {
  const auto gt = gen("gt.momap");
  write_momap(path("small.momap"), MoMap(4, 4, 20));
  const auto o = momap_cli({"eval", gt, path("small.momap")});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("dimensions"), std::string::npos);
}

TEST_F(Cli, EvalConfigPrecedence) {
  const auto gt = gen("gt.momap");
  write_text_file(path("cfg.json"), R"({"fg_threshold": 0.2, "knn": 4, "dt_values": [2]})");
  const auto o = momap_cli({"eval", gt, gt, "--config", path("cfg.json"), "--knn", "6"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto c = o.summary()["config"];
  EXPECT_EQ(c["knn"], 6);
  EXPECT_EQ(c["fg_threshold"], 0.2);
  EXPECT_EQ(c["dt_values"], json::array({2}));
  EXPECT_EQ(c["quantize_eps"], MetricConfig{}.quantize_eps);
  EXPECT_FALSE(c.contains("threads"));
  EXPECT_EQ(o.summary()["metrics"].back()["name"], "quantize_acc_2");

  write_text_file(path("typo.json"), R"({"knn_count": 4})");
  EXPECT_EQ(momap_cli({"eval", gt, gt, "--config", path("typo.json")}).code, 1);
  setenv("MOMAP_THREADS", "many", 1);
  EXPECT_EQ(momap_cli({"eval", gt, gt}).code, 1);
  EXPECT_EQ(momap_cli({"eval", gt, gt, "--threads", "2"}).code, 0);
}

TEST_F(Cli, InfillReportsZeroIterationsOnValidInputAndFillsOcclusions) {
  const auto gt = gen("gt.momap");
  auto o = momap_cli({"infill", gt, "--out", path("same.momap")});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.summary()["iterations"], 0);
  EXPECT_EQ(o.summary()["free_entries"], 0);
  EXPECT_EQ(read_momap(path("same.momap")).momap, read_momap(gt).momap);

  auto b = read_momap(gt);
  const auto occluded =
      occlude(b.momap, random_occlusion_intervals(b.momap, 0.2, 7));
  write_momap(path("occ.momap"), occluded, b.seg, b.camera);
  write_text_file(path("infill.json"), R"({"max_iters": 50, "knn": 4})");
  o = momap_cli({"infill", path("occ.momap"), "--out", path("filled.momap"), "--config",
                 path("infill.json"), "--max-iters", "20", "--init", "hold"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto s = o.summary();
  EXPECT_GT(s["free_entries"].get<int>(), 0);
  EXPECT_LE(s["iterations"].get<int>(), 20);
  EXPECT_EQ(s["config"]["max_iters"], 20);
  EXPECT_EQ(s["config"]["knn"], 4);
  EXPECT_EQ(s["config"]["init"], "hold");
  EXPECT_EQ(s["config"]["w_accel"], 1.0);
  EXPECT_FALSE(s["config"].contains("threads"));
  const auto filled = read_momap(path("filled.momap"));
  EXPECT_TRUE(filled.seg && filled.camera);
  for (std::size_t p = 0; p < filled.momap.pixels(); ++p) EXPECT_TRUE(filled.momap.fully_valid(p));

  EXPECT_EQ(momap_cli({"infill", gt, "--out", path("x.momap"), "--knn", "0"}).code, 2);
  EXPECT_EQ(momap_cli({"infill", gt, "--out", path("x.momap"), "--init", "zero"}).code, 1);
}

TEST_F(Cli, CompressAndDecompress) {
  const auto gt = gen("gt.momap");
  auto o = momap_cli({"compress", gt, "--out", path("full.momapz"), "--channels", "60"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_LT(o.summary()["rmse"].get<double>(), 1e-9);
  o = momap_cli({"compress", gt, "--out", path("a.momapz")});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto s = o.summary();
  EXPECT_EQ(s["channels"], kDefaultLatentChannels);
  EXPECT_DOUBLE_EQ(s["coefficient_ratio"].get<double>(), 60.0 / 32.0);
  EXPECT_EQ(s["bytes"], std::filesystem::file_size(path("a.momapz")));

  o = momap_cli({"decompress", path("full.momapz"), "--out", path("back.momap")});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto back = read_momap(path("back.momap")).momap;
  const auto orig = read_momap(gt).momap;
  for (std::size_t i = 0; i < orig.positions().size(); ++i) {
    ASSERT_NEAR(back.positions()[i], orig.positions()[i], 1e-5);
  }
  EXPECT_EQ(momap_cli({"compress", gt, "--out", path("b.momapz"), "--channels", "61"}).code, 2);
}

TEST_F(Cli, RenderWritesFramesAndCoverage) {
  const auto gt = gen("gt.momap");
  const auto o = momap_cli({"render", gt, "--out", path("frames"), "--splat-radius", "0.75"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto s = o.summary();
  EXPECT_EQ(s["frames"], 20);
  EXPECT_EQ(s["splat_radius"], 0.75);
  for (const auto& c : s["coverage"]) {
    EXPECT_GT(c.get<double>(), 0.0);
    EXPECT_LE(c.get<double>(), 1.0);
  }
  EXPECT_EQ(s["coverage"][0], 1.0);
  EXPECT_TRUE(std::filesystem::exists(path("frames/frame_0019.pgm")));

  const auto b = read_momap(gt);
  write_momap(path("nocam.momap"), b.momap, b.seg);
  EXPECT_EQ(momap_cli({"render", path("nocam.momap"), "--out", path("f2")}).code, 2);
}

TEST_F(Cli, DslEmitGroundCheck) {
  const auto gt = gen("gt.momap");
  auto o = momap_cli({"dsl", "emit", gt, "--out", path("prog.json")});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto program = o.summary()["program"];
  EXPECT_EQ(json::parse(read_text_file(path("prog.json"))), program);

  o = momap_cli({"dsl", "check", path("prog.json"), "--seg", gt});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.summary()["valid"], true);
  EXPECT_EQ(o.summary()["patches"], program["patches"].size());

  o = momap_cli({"dsl", "ground", path("prog.json"), gt, "--out", path("labels.raw")});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(std::filesystem::file_size(path("labels.raw")), 24u * 24u * 3u);
  const auto patches = o.summary()["patches"];
  ASSERT_EQ(patches.size(), program["patches"].size());
  for (std::size_t i = 0; i < patches.size(); ++i) {
    for (const char* axis : {"id", "x", "y", "z"}) EXPECT_EQ(patches[i][axis], program["patches"][i][axis]);
  }

  auto bad = program;
  bad["comment"] = "hi";
  write_text_file(path("extra.json"), bad.dump());
  EXPECT_EQ(momap_cli({"dsl", "check", path("extra.json")}).code, 1);
  o = momap_cli({"dsl", "check", path("extra.json"), "--lenient"});
  ASSERT_EQ(o.code, 0);
  EXPECT_EQ(o.summary()["warnings"].size(), 1u);

  write_text_file(path("ghost.json"),
                  R"({"horizon": 20, "patches": [{"id": 99, "x": "left", "y": "stay", "z": "stay", "magnitude": 1}]})");
  EXPECT_EQ(momap_cli({"dsl", "check", path("ghost.json"), "--seg", gt}).code, 2);
  EXPECT_EQ(momap_cli({"dsl", "ground", path("ghost.json"), gt}).code, 2);
}

}  // namespace
}  // namespace momap
