#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mtpe/cli.hpp"
#include "mtpe/jsonl.hpp"
#include "synth.hpp"

namespace fs = std::filesystem;
using mtpe::cli::ExitCode;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "mtpe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = mtpe::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("mtpe_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) { return mtpe::io::read_file(p); }

fs::path write_tsv(const fs::path& dir, std::size_t n, std::uint64_t seed, std::size_t no_error_every = 0) {
  auto p = dir / "corpus.tsv";
  std::ofstream(p) << synth::mqm_tsv(n, seed, no_error_every).tsv;
  return p;
}

std::string data(const std::string& name) { return std::string(MTPE_TEST_DATA) + "/" + name; }

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, ExitCode::kOk);
  EXPECT_EQ(run({"--version"}).code, ExitCode::kOk);
  EXPECT_EQ(run({}).code, ExitCode::kFatal);
  EXPECT_EQ(run({"bogus"}).code, ExitCode::kFatal);
  EXPECT_EQ(run({"parse", "-c", "/nonexistent.tsv", "-l", "en-de"}).code, ExitCode::kFatal);
}

TEST(Cli, PromptGoldens) {
  auto dir = scratch("prompt");
  const std::string tsv = data("prompt_template.tsv");
  auto r = run({"prompt", "-c", tsv, "-l", "en-de", "-f", "score", "--weights", data("weights_85.json"),
                "-o", (dir / "score").string()});
  ASSERT_EQ(r.code, ExitCode::kOk) << r.err;
  auto line = nlohmann::json::parse(slurp(dir / "score" / "prompts.jsonl"));
  EXPECT_EQ(line["prompt"], slurp(data("golden_score.txt")));

  r = run({"prompt", "-c", tsv, "-l", "en-de", "-f", "fine-grained", "-o", (dir / "fg").string()});
  ASSERT_EQ(r.code, ExitCode::kOk) << r.err;
  line = nlohmann::json::parse(slurp(dir / "fg" / "prompts.jsonl"));
  EXPECT_EQ(line["prompt"], slurp(data("golden_fine_grained.txt")));
  EXPECT_EQ(line["feedback"], "fine-grained");

  r = run({"prompt", "-c", tsv, "-l", "en-de", "-f", "fine-grained", "--mask", "severity", "-o",
           (dir / "mask").string()});
  line = nlohmann::json::parse(slurp(dir / "mask" / "prompts.jsonl"));
  EXPECT_NE(line["prompt"].get<std::string>().find("(1) There is a major error."), std::string::npos);
}

TEST(Cli, ParseAndScore) {
  auto dir = scratch("parse");
  auto tsv = write_tsv(dir, 12, 3);
  auto r = run({"parse", "-c", tsv.string(), "-l", "en-de", "-o", (dir / "p").string()});
  ASSERT_EQ(r.code, ExitCode::kOk) << r.err;
  EXPECT_TRUE(fs::exists(dir / "p" / "corpus.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "p" / "stats.json"));
  r = run({"score", "-c", (dir / "p" / "corpus.jsonl").string(), "-o", (dir / "s").string()});
  ASSERT_EQ(r.code, ExitCode::kOk) << r.err;
  std::istringstream lines(slurp(dir / "s" / "scores.jsonl"));
  int n = 0;
  for (std::string l; std::getline(lines, l); ++n) {
    auto j = nlohmann::json::parse(l);
    EXPECT_GE(j["normalized"].get<double>(), 0.0);
    EXPECT_LE(j["normalized"].get<double>(), 100.0);
  }
  EXPECT_EQ(n, 12);
}

TEST(Cli, PosteditEvaluateAnalyze) {
  auto dir = scratch("e2e");
  auto g = synth::mqm_tsv(30, 8);
  std::ofstream(dir / "c.tsv") << g.tsv;
  const std::string tsv = (dir / "c.tsv").string();

  auto r = run({"postedit", "-c", tsv, "-l", "en-de", "-f", "fine-grained", "-k", "3", "--mock",
                "echo-reference", "-o", (dir / "pe").string()});
  ASSERT_EQ(r.code, ExitCode::kOk) << r.err;
  for (const char* f : {"config.json", "prompts.jsonl", "records.jsonl", "timings.jsonl"})
    EXPECT_TRUE(fs::exists(dir / "pe" / f)) << f;

  r = run({"evaluate", "-c", tsv, "-l", "en-de", "-r", (dir / "pe" / "records.jsonl").string(), "-o",
           (dir / "ev").string()});
  ASSERT_EQ(r.code, ExitCode::kOk) << r.err;
  auto report = nlohmann::json::parse(slurp(dir / "ev" / "report.json"));
  EXPECT_EQ(report["edited"]["bleu"], 1.0);
  EXPECT_EQ(report["edited"]["ter"], 0.0);
  EXPECT_TRUE(fs::exists(dir / "ev" / "segments.tsv"));

  r = run({"analyze", "-c", tsv, "-l", "en-de", "-r", (dir / "pe" / "records.jsonl").string(), "-o",
           (dir / "an").string()});
  ASSERT_EQ(r.code, ExitCode::kOk) << r.err;
  auto an = nlohmann::json::parse(slurp(dir / "an" / "report.json"));
  EXPECT_EQ(an["no_match"], g.annotations - g.spans_in_reference);
  EXPECT_TRUE(fs::exists(dir / "an" / "resolution.csv"));
}

TEST(Cli, TranslateIsDeterministic) {
  auto dir = scratch("translate");
  auto tsv = write_tsv(dir, 10, 2).string();
  for (const char* sub : {"a", "b"}) {
    auto r = run({"translate", "-c", tsv, "-l", "en-de", "--mock", "echo-reference", "-o", (dir / sub).string()});
    ASSERT_EQ(r.code, ExitCode::kOk) << r.err;
  }
  for (const char* f : {"config.json", "prompts.jsonl", "records.jsonl"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  EXPECT_NE(slurp(dir / "a" / "prompts.jsonl").find("without any explanation"), std::string::npos);
}

TEST(Cli, PartialFailureExitCode) {
  auto dir = scratch("partial");
  auto tsv = write_tsv(dir, 6, 2);
  // One scripted output is missing, so that record comes back empty.
  std::ofstream script(dir / "script.jsonl");
  mtpe::Corpus c = mtpe::parse_mqm_tsv(tsv, mtpe::LangPair::from_code("en-de"));
  for (std::size_t i = 1; i < c.size(); ++i)
    script << nlohmann::json{{"id", c.segments()[i].id}, {"output", "Neu."}}.dump() << "\n";
  script.close();
  auto r = run({"postedit", "-c", tsv.string(), "-l", "en-de", "-f", "generic", "--mock", "scripted",
                "--mock-script", (dir / "script.jsonl").string(), "-o", (dir / "pe").string()});
  EXPECT_EQ(r.code, ExitCode::kPartialFailure) << r.err;
  auto records = slurp(dir / "pe" / "records.jsonl");
  EXPECT_NE(records.find("\"failed\":true"), std::string::npos);
}

TEST(Cli, AgreementAndDataset) {
  auto dir = scratch("agree");
  auto tsv = write_tsv(dir, 40, 6, 4).string();
  auto r = run({"agreement", "-c", tsv, "-l", "en-de", "-a", "mqm", "-b", "mqm", "--sample", "10", "-o",
                (dir / "ag").string()});
  ASSERT_EQ(r.code, ExitCode::kOk) << r.err;
  auto rep = nlohmann::json::parse(slurp(dir / "ag" / "report.json"));
  EXPECT_EQ(rep["overlap"], 10);

  r = run({"dataset", "-c", tsv, "-l", "en-de", "--dev", "5", "--test", "10", "-o", (dir / "ds").string()});
  ASSERT_EQ(r.code, ExitCode::kOk) << r.err;
  auto manifest = nlohmann::json::parse(slurp(dir / "ds" / "manifest.json"));
  EXPECT_EQ(manifest["lora_rank"], 16);
  EXPECT_TRUE(fs::exists(dir / "ds" / "train.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "ds" / "summary.json"));
  EXPECT_EQ(run({"dataset", "-c", tsv, "-l", "en-de", "-o", (dir / "big").string()}).code, ExitCode::kFatal);
}
