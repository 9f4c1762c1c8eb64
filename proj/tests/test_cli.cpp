#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" FPAFORGE_CLI "' " + args + " 2>&1";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), p)) > 0) r.output.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path temp_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = fs::path(FPAFORGE_TEST_TMP) / (std::string("cli.") + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::string& text) { return text.substr(0, text.find_first_of("\r\n")); }

std::size_t field_count(const std::string& line) {
  std::size_t n = 1;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) ++n;
  }
  return n;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"craft", "live-send", "extract", "simulate", "analyze", "surrogate", "plot"})
    EXPECT_NE(r.output.find(sub), std::string::npos) << sub;
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("craft").code, 2);
  EXPECT_EQ(run("extract --in /nonexistent.pcap --out x.csv").code, 2);
  EXPECT_EQ(run("simulate --pairing diagonal --eta 1").code, 2);
}

TEST(Cli, CraftIsDeterministicPerSeed) {
  const auto d = temp_dir();
  ASSERT_EQ(run("craft --seed 7 --out " + q(d / "a.pcap") + " --manifest " + q(d / "m.csv")).code, 0);
  ASSERT_EQ(run("craft --seed 7 --out " + q(d / "b.pcap")).code, 0);
  ASSERT_EQ(run("craft --seed 8 --out " + q(d / "c.pcap")).code, 0);
  EXPECT_EQ(slurp(d / "a.pcap"), slurp(d / "b.pcap"));
  EXPECT_NE(slurp(d / "a.pcap"), slurp(d / "c.pcap"));
  EXPECT_FALSE(slurp(d / "m.csv").empty());
}

TEST(Cli, SeedFromEnvironmentAndFlagPrecedence) {
  const auto d = temp_dir();
  ASSERT_EQ(run("craft --seed 7 --out " + q(d / "a.pcap")).code, 0);
  ASSERT_EQ(run("craft --out " + q(d / "b.pcap"), "FPA_FORGE_SEED=7").code, 0);
  ASSERT_EQ(run("craft --seed 9 --out " + q(d / "c.pcap"), "FPA_FORGE_SEED=7").code, 0);
  EXPECT_EQ(slurp(d / "a.pcap"), slurp(d / "b.pcap"));
  EXPECT_NE(slurp(d / "a.pcap"), slurp(d / "c.pcap"));
}

TEST(Cli, ConfigFileAndOverrides) {
  const auto d = temp_dir();
  std::ofstream(d / "c.conf") << "[campaign]\npublish_count = 3\nqos1_probability = 0\n";
  auto r = run("craft --config " + q(d / "c.conf") + " --out " + q(d / "a.pcap"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("3 PUBLISH"), std::string::npos) << r.output;
  r = run("craft --config " + q(d / "c.conf") + " --set campaign.publish_count=5 --out " + q(d / "b.pcap"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("5 PUBLISH"), std::string::npos) << r.output;
  std::ofstream(d / "bad.conf") << "[campaign]\nnot_a_key = 1\n";
  r = run("craft --config " + q(d / "bad.conf") + " --out " + q(d / "x.pcap"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("ConfigError"), std::string::npos) << r.output;
}

TEST(Cli, ExtractWritesSixtyOneColumns) {
  const auto d = temp_dir();
  ASSERT_EQ(run("craft --seed 1 --out " + q(d / "a.pcap")).code, 0);
  auto r = run("extract --in " + q(d / "a.pcap") + " --out " + q(d / "f.csv"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(field_count(first_line(slurp(d / "f.csv"))), 61u);
  r = run("extract --in " + q(d / "a.pcap") + " --out " + q(d / "g.csv") + " --attack-type MQTT_FPA --profile tcp");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(field_count(first_line(slurp(d / "g.csv"))), 17u);
}

TEST(Cli, RuntimeErrorsExitOne) {
  const auto d = temp_dir();
  std::ofstream(d / "bad.pcap") << "garbage data here";
  auto r = run("extract --in " + q(d / "bad.pcap") + " --out " + q(d / "x.csv"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("BadMagic"), std::string::npos) << r.output;
  r = run("live-send --port 8883");
  EXPECT_EQ(r.code, 1);
  r = run("live-send --host test.mosquitto.org");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("--allow-public"), std::string::npos) << r.output;
  r = run("simulate --eta 117 --budget 120 --fp 100");
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, SimulateToFileAndStdout) {
  const auto d = temp_dir();
  auto r = run("simulate --eta 117 --budget 120 --fp 0,8.012 --horizon 1h --repeats 2 --seed 3 --out " +
               q(d / "s.csv"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto text = slurp(d / "s.csv");
  EXPECT_EQ(first_line(text).rfind("fp,eta,mu", 0), 0u);
  r = run("simulate --eta 117 --budget 120 --fp 0,8.012 --horizon 1h --repeats 2 --seed 3");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.output.find(first_line(text)), std::string::npos);
}

TEST(Cli, AnalyzeSurrogatePlotPipeline) {
  const auto d = temp_dir();
  ASSERT_EQ(run("craft --seed 1 --publish-count 30 --set campaign.topic_pad_range=[0,0] --out " + q(d / "r.pcap"))
                .code,
            0);
  ASSERT_EQ(run("craft --seed 2 --publish-count 30 --out " + q(d / "c.pcap")).code, 0);
  ASSERT_EQ(run("extract --in " + q(d / "r.pcap") + " --out " + q(d / "r.csv") + " --attack-type Normal").code, 0);
  ASSERT_EQ(run("extract --in " + q(d / "c.pcap") + " --out " + q(d / "c.csv")).code, 0);
  auto r = run("analyze --reference " + q(d / "r.csv") + " --crafted " + q(d / "c.csv") + " --out " + q(d / "m.csv") +
               " --no-pairwise");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(first_line(slurp(d / "m.csv")), "metric,mode,value");

  std::ofstream t(d / "train.csv");
  t << "x,y,Attack_type\n";
  for (int i = 0; i < 30; ++i) t << i % 5 << ",0,Normal\n" << 40 + i % 5 << ",1,DDoS\n";
  t.close();
  r = run("surrogate fit --train " + q(d / "train.csv") + " --model " + q(d / "model.txt"));
  ASSERT_EQ(r.code, 0) << r.output;
  std::ofstream(d / "probe.csv") << "x,y\n2,0\n42,1\n";
  r = run("surrogate eval --model " + q(d / "model.txt") + " --crafted " + q(d / "probe.csv") + " --out " +
          q(d / "rep.csv"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("50"), std::string::npos) << r.output;
  EXPECT_FALSE(slurp(d / "rep.csv").empty());

  r = run("plot --in " + q(d / "m.csv") + " --kind bar --x metric --y value --out " + q(d / "m.svg"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(slurp(d / "m.svg").rfind("<svg", 0), 0u);
  ASSERT_EQ(run("simulate --eta 117 --budget 120 --fp 0,8.012 --horizon 1h --out " + q(d / "s.csv")).code, 0);
  r = run("plot --in " + q(d / "s.csv") + " --x fp --y mean_wait_s --group eta --out " + q(d / "s.svg"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(slurp(d / "s.svg").find("<polyline"), std::string::npos);
}
