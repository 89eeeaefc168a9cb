#include <gtest/gtest.h>

#include <json.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliRun {
  int status = 0;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("mmdmp_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliRun run(const std::string& args) const {
    const std::string cmd = std::string("cd '") + dir_.string() + "' && MMDMP_THREADS=1 '" + MMDMP_CLI_PATH + "' " +
                            args + " > out.txt 2> err.txt";
    CliRun r;
    const int raw = std::system(cmd.c_str());
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(dir_ / "out.txt");
    r.err = slurp(dir_ / "err.txt");
    return r;
  }

  json ok(const std::string& args) const {
    const CliRun r = run(args);
    EXPECT_EQ(r.status, 0) << args << "\n" << r.err;
    return r.status == 0 && !r.out.empty() ? json::parse(r.out) : json{};
  }

  json fails(const std::string& args, int status = 1) const {
    const CliRun r = run(args);
    EXPECT_EQ(r.status, status) << args << "\n" << r.out;
    return json::parse(r.err)["error"];
  }

  /// Small separated training and test pools in dimension 4.
  void make_data() const {
    ok("synth-gen --dim 4 --n 80 --mu 2 --seed 3 --index 0 --out-p p.emb --out-q q.emb");
    ok("synth-gen --dim 4 --n 80 --mu 2 --seed 3 --index 1 --center 0 --out-p pt.emb --out-q qt.emb");
  }

  fs::path dir_;
};

const char* kTrain = "train --p p.emb --q q.emb --max-steps 20 --batch-size 40 --lr 1e-3 --seed 2";

TEST_F(Cli, PipelineTrainTestSid) {
  make_data();
  const json t = ok(std::string(kTrain) + " --out-model m.mmdk");
  EXPECT_EQ(t["metrics"]["steps"], 20);
  EXPECT_TRUE(fs::exists(path("m.mmdk")));
  std::ifstream trace(path("m.mmdk.trace.jsonl"));
  int lines = 0;
  for (std::string line; std::getline(trace, line); ++lines) EXPECT_TRUE(json::parse(line).contains("mmd_u"));
  EXPECT_EQ(lines, 20);

  const json te = ok("test2st --model m.mmdk --p pt.emb --q qt.emb --repeats 20 --n-perm 50 --seed 1");
  EXPECT_EQ(te["metrics"]["outcomes"].size(), 20u);
  EXPECT_GE(te["metrics"]["power"].get<double>(), 0.5);

  const json sid = ok("sid --model m.mmdk --ref p.emb --p pt.emb --q qt.emb");
  EXPECT_GT(sid["metrics"]["auroc"].get<double>(), 0.9);
  EXPECT_EQ(sid["metrics"]["scores_p"].size(), 80u);
}

TEST_F(Cli, SidOnIdenticalFilesIsHalf) {
  make_data();
  ok(std::string(kTrain) + " --out-model m.mmdk");
  EXPECT_EQ(ok("sid --model m.mmdk --ref p.emb --p pt.emb --q pt.emb")["metrics"]["auroc"].get<double>(), 0.5);
}

TEST_F(Cli, AlphaOneAlwaysRejects) {
  make_data();
  ok(std::string(kTrain) + " --out-model m.mmdk");
  EXPECT_EQ(ok("test2st --model m.mmdk --p pt.emb --q pt.emb --alpha 1.0 --repeats 10 --n-perm 20")["metrics"]["power"],
            1.0);
}

TEST_F(Cli, TrainingIsReproducible) {
  make_data();
  ok(std::string(kTrain) + " --out-model a.mmdk");
  ok(std::string(kTrain) + " --out-model b.mmdk");
  EXPECT_EQ(slurp(path("a.mmdk")), slurp(path("b.mmdk")));
}

TEST_F(Cli, EchoedConfigReproducesRun) {
  make_data();
  const json first = ok(std::string(kTrain) + " --out-model a.mmdk");
  std::ofstream cfg(path("echo.cfg"));
  for (const auto& [k, v] : first["config"].items()) cfg << k << " = " << v.get<std::string>() << '\n';
  cfg.close();
  const json second = ok("train --p p.emb --q q.emb --config echo.cfg --out-model b.mmdk");
  EXPECT_EQ(second["config"], first["config"]);
  EXPECT_EQ(slurp(path("a.mmdk")), slurp(path("b.mmdk")));
}

TEST_F(Cli, FlagsOverrideConfig) {
  make_data();
  std::ofstream(path("run.cfg")) << "max_steps = 3\nlambda = 0.001\nbatch_size = 40\n";
  const json r = ok("train --p p.emb --q q.emb --config run.cfg --max-steps 5 --out-model m.mmdk");
  EXPECT_EQ(r["config"]["max_steps"], "5");
  EXPECT_EQ(r["config"]["lambda"], "0.001");
  EXPECT_EQ(r["metrics"]["steps"], 5);
}

TEST_F(Cli, TwoQPopulations) {
  make_data();
  const json r = ok("train --p p.emb --q q.emb,qt.emb --max-steps 2 --batch-size 40 --out-model m.mmdk");
  EXPECT_EQ(r["metrics"]["q_populations"], 2);
}

TEST_F(Cli, ErrorsAreMachineReadable) {
  make_data();
  const json missing = fails("train --p p.emb --q nothere.emb --out-model m.mmdk");
  EXPECT_EQ(missing["type"], "format");
  EXPECT_NE(missing["message"].get<std::string>().find("nothere.emb"), std::string::npos);

  const json usage = fails("train --p p.emb --bogus 1", 2);
  EXPECT_EQ(usage["type"], "usage");
  EXPECT_TRUE(usage.contains("usage"));

  const json bad = fails("train --p p.emb --q q.emb --objective xyz --out-model m.mmdk");
  EXPECT_EQ(bad["type"], "invalid_input");

  std::ofstream(path("bad.cfg")) << "no_such_key = 1\n";
  EXPECT_NE(fails("train --p p.emb --q q.emb --config bad.cfg --out-model m.mmdk")["message"].get<std::string>().find(
                "no_such_key"),
            std::string::npos);
}

TEST_F(Cli, SynthPowerSingleSetIsZeroOrOne) {
  const json r = ok(
      "synth-power --dim 4 --train-n 20 --batch-size 20 --max-steps 3 --test-sets 1 --n-perm 20 --mu 0.4 --seed 1");
  const double power = r["metrics"]["results"][0]["power"];
  EXPECT_TRUE(power == 0.0 || power == 1.0);
  EXPECT_EQ(r["config"]["sigma_phi"], "10");
}

TEST_F(Cli, SynthPowerNullStaysNearAlpha) {
  const json r = ok(
      "synth-power --mu 0 --delta 1.0 --q-centers 4 --dim 4 --train-n 40 --batch-size 40 --max-steps 10 "
      "--test-sets 300 --n-perm 100 --seed 5");
  EXPECT_LE(r["metrics"]["results"][0]["power"].get<double>(), 0.1);
}

TEST_F(Cli, SynthPowerWritesOutFile) {
  ok("synth-power --dim 4 --train-n 20 --batch-size 20 --max-steps 2 --test-sets 3 --n-perm 10 --out res.json");
  const json r = json::parse(slurp(path("res.json")));
  EXPECT_EQ(r["command"], "synth-power");
  EXPECT_EQ(r["metrics"]["results"].size(), 1u);
}

TEST_F(Cli, DiagIdenticalBatchesHaveZeroVariance) {
  make_data();
  ok(std::string(kTrain) + " --out-model m.mmdk");
  // Batch size equal to the pool: every batch holds the same rows, in a
  // different order. The U-statistic pairs x_i with y_i, so only the
  // order-free block means are compared.
  const json r = ok("diag --model m.mmdk --p p.emb --q q.emb --batches 2 --batch-size 80 --csv d.csv");
  const json& d = r["metrics"]["decompositions"][0];
  for (const char* key : {"var_kxx", "var_kyy", "var_2kxy", "component_sum", "proxy_variance"}) {
    EXPECT_LT(std::abs(d[key].get<double>()), 1e-15) << key;
  }
  std::ifstream csv(path("d.csv"));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "step,batch,e_kxx,e_kyy,e_kxy,mmd");
}

TEST_F(Cli, DiagRejectsSingleBatch) {
  make_data();
  ok(std::string(kTrain) + " --out-model m.mmdk");
  EXPECT_EQ(fails("diag --model m.mmdk --p p.emb --q q.emb --batches 1 --batch-size 40")["type"], "invalid_input");
}

TEST_F(Cli, DiagTrainsOnSyntheticData) {
  const json r = ok(
      "diag --objective mmd-mp --dim 4 --train-n 40 --batch-size 20 --max-steps 4 --diag-every 2 --batches 5 "
      "--q-centers 3 --seed 2");
  const json& ds = r["metrics"]["decompositions"];
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds[0]["step"], 0);
  EXPECT_EQ(ds[2]["step"], 4);
  for (const auto& d : ds) {
    EXPECT_NEAR(d["component_sum"].get<double>(), d["proxy_variance"].get<double>(),
                1e-10 * std::max(1.0, d["proxy_variance"].get<double>()));
  }
}

}  // namespace
