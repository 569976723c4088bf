#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

// Per process, so ctest -j can run the cases side by side.
const fs::path kRoot = fs::temp_directory_path() / ("sae_test_cli_" + std::to_string(::getpid()));

struct Outcome {
  int code = -1;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome sae(const std::string& args) {
  const fs::path log = kRoot / "last_output.txt";
  const std::string cmd = std::string(SAE_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

class Cli : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
    const auto r = sae("gen --k 4 --d 12 --n-per-class 25 --test-per-class 10 --seed 5 --out " +
                       (kRoot / "pool").string());
    ASSERT_EQ(r.code, 0) << r.out;
    nlohmann::json cfg = {{"pool_path", (kRoot / "pool").string()},
                          {"test_path", (kRoot / "pool-test").string()},
                          {"seeds", {0, 1}},
                          {"probe", {{"epochs", 15}}},
                          {"seh", {{"h1", 16}, {"h2", 8}, {"h_s", 4}, {"epochs", 4}}}};
    std::ofstream(kRoot / "config.json") << cfg.dump(2);
  }
  static void TearDownTestSuite() { fs::remove_all(kRoot); }

  static std::string config() { return (kRoot / "config.json").string(); }
};

}  // namespace

TEST_F(Cli, GenWritesPoolDirectories) {
  for (const char* f : {"pool.json", "embeddings.f32", "similarities.f32", "labels.i32",
                        "prototypes.f32"}) {
    EXPECT_TRUE(fs::exists(kRoot / "pool" / f)) << f;
    EXPECT_TRUE(fs::exists(kRoot / "pool-test" / f)) << f;
  }
  EXPECT_EQ(fs::file_size(kRoot / "pool" / "embeddings.f32"), 100u * 12 * 4);
  EXPECT_EQ(fs::file_size(kRoot / "pool-test" / "labels.i32"), 40u * 4);
}

TEST_F(Cli, GenIsByteIdenticalOnRerun) {
  const auto r = sae("gen --k 4 --d 12 --n-per-class 25 --test-per-class 10 --seed 5 --out " +
                     (kRoot / "again").string() + " --test-out " + (kRoot / "again_t").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("zero-shot accuracy"), std::string::npos);
  for (const char* f : {"pool.json", "embeddings.f32", "similarities.f32", "labels.i32"})
    EXPECT_EQ(slurp(kRoot / "pool" / f), slurp(kRoot / "again" / f)) << f;
}

TEST_F(Cli, GenRejectsBadArguments) {
  EXPECT_EQ(sae("gen --k 1 --out " + (kRoot / "bad").string()).code, 2);
  EXPECT_EQ(sae("gen --d 1 --out " + (kRoot / "bad").string()).code, 2);
  EXPECT_EQ(sae("gen --k 3 --n-per-class 1,2 --out " + (kRoot / "bad").string()).code, 2);
  EXPECT_EQ(sae("gen").code, 2);
  EXPECT_EQ(sae("").code, 2);
  EXPECT_EQ(sae("frobnicate").code, 2);
}

TEST_F(Cli, RunRandomBookkeeping) {
  const fs::path out = kRoot / "run_random";
  const auto r = sae("run " + config() + " --strategy random --output-dir " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string rounds = slurp(out / "rounds.csv");
  EXPECT_EQ(std::count(rounds.begin(), rounds.end(), '\n'), 1 + 2 * 5);
  EXPECT_NE(rounds.find("\n0,5,20,"), std::string::npos) << rounds;
  EXPECT_NE(rounds.find("\n1,5,20,"), std::string::npos) << rounds;
  EXPECT_TRUE(fs::exists(out / "result.json"));
  EXPECT_TRUE(fs::exists(out / "reliability.csv"));
}

TEST_F(Cli, RunSaeIsReproducibleAndLogsWeights) {
  const fs::path a = kRoot / "run_sae_a", b = kRoot / "run_sae_b";
  ASSERT_EQ(sae("run " + config() + " --output-dir " + a.string()).code, 0);
  ASSERT_EQ(sae("run " + config() + " --output-dir " + b.string()).code, 0);
  for (const char* f : {"rounds.csv", "selections.csv", "reliability.csv"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  std::istringstream sel(slurp(a / "selections.csv"));
  std::string line;
  std::getline(sel, line);
  int round_one = 0;
  while (std::getline(sel, line)) {
    if (line.rfind("0,1,", 0) != 0) continue;
    ++round_one;
    EXPECT_TRUE(line.ends_with(",1.000000,0.000000")) << line;
  }
  EXPECT_EQ(round_one, 4);
}

TEST_F(Cli, CalibMatchesRun) {
  const fs::path out = kRoot / "run_calib";
  ASSERT_EQ(sae("run " + config() + " --output-dir " + out.string()).code, 0);
  const std::string before = slurp(out / "reliability.csv");
  const auto r = sae("calib " + (out / "result.json").string() + " --out " +
                     (out / "again.csv").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(slurp(out / "again.csv"), before);
}

TEST_F(Cli, ScoreWritesOneRowPerSample) {
  const fs::path out = kRoot / "run_score";
  ASSERT_EQ(sae("run " + config() + " --seeds 3 --output-dir " + out.string()).code, 0);
  const fs::path csv = kRoot / "scores.csv";
  const auto r = sae("score --pool-path " + (kRoot / "pool").string() + " --seh " +
                     (out / "checkpoints" / "seed3_seh.bin").string() + " --out " + csv.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string text = slurp(csv);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 101);
  EXPECT_EQ(text.rfind("index,lambda,vacuity,dissonance,confidence\n", 0), 0u);
}

TEST_F(Cli, ErrorExitCodes) {
  const std::string out = " --output-dir " + (kRoot / "err").string();
  EXPECT_EQ(sae("run " + config() + " --rho 0" + out).code, 2);
  EXPECT_EQ(sae("run " + config() + " --strategy bald" + out).code, 2);
  EXPECT_EQ(sae("run " + config() + " --seeds 1,-2" + out).code, 2);
  EXPECT_EQ(sae("run " + (kRoot / "missing.json").string()).code, 2);
  EXPECT_EQ(sae("run " + config() + " --pool-path " + (kRoot / "nowhere").string() + out).code,
            2);
  EXPECT_EQ(sae("ablate " + config() + " --axis gamma" + out).code, 2);

  // A truncated payload is a data error.
  fs::copy(kRoot / "pool", kRoot / "broken", fs::copy_options::recursive);
  fs::resize_file(kRoot / "broken" / "labels.i32", 12);
  const auto r = sae("run " + config() + " --pool-path " + (kRoot / "broken").string() + out);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("labels.i32"), std::string::npos) << r.out;
}

TEST_F(Cli, AblateWritesOneRowPerValue) {
  const fs::path out = kRoot / "ablate";
  const auto r = sae("ablate " + config() + " --axis beta --values 0.1,0.5 --output-dir " +
                     out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string csv = slurp(out / "ablation.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find("\nbeta,0.1,"), std::string::npos);
}
