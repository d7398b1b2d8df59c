#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "mtpe/datasetgen.hpp"
#include "mtpe/error.hpp"
#include "mtpe/jsonl.hpp"
#include "synth.hpp"

using namespace mtpe;
using namespace mtpe::dataset;

namespace {

std::string data(const std::string& name) { return io::read_file(std::string(MTPE_TEST_DATA) + "/" + name); }

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mtpe_dataset_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string trim_newline(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

TEST(Instruction, GoldenExample) {
  Corpus c = parse_mqm_tsv(std::string(MTPE_TEST_DATA) + "/finetune_example.tsv", LangPair::from_code("en-de"));
  std::vector<Corpus> corpora{c};
  DatasetOptions opts;
  opts.plan.defaults = {std::nullopt, 0, 0};
  auto build = build_instruction_dataset(corpora, opts);
  ASSERT_EQ(build.examples.size(), 1u);
  EXPECT_EQ(build.examples[0].instruction, trim_newline(data("golden_finetune_instruction.txt")));
  EXPECT_EQ(build.examples[0].completion, trim_newline(data("golden_finetune_output.txt")));
}

TEST(Instruction, NoneAndGeneric) {
  Segment s;
  s.id = "x";
  s.lang = LangPair::from_code("zh-en");
  s.source = "你好";
  s.hypothesis = "Hi\nthere";
  s.reference = "Hello";
  EXPECT_EQ(render_instruction(s, FeedbackKind::FineGrained),
            "### Chinese: 你好\n### English: Hi there\n### Errors: None.\n\n### Improved English:");
  EXPECT_EQ(render_instruction(s, FeedbackKind::Generic),
            "### Chinese: 你好\n### English: Hi there\n### Errors: Improve the translation from Chinese to "
            "English without any explanation.\n\n### Improved English:");
}

TEST(Instruction, ParseRoundTrip) {
  Corpus c = parse_mqm_tsv_text(synth::mqm_tsv(40, 12).tsv, LangPair::from_code("en-de"));
  for (const auto& seg : c) {
    const std::string text = render_instruction(seg, FeedbackKind::FineGrained);
    ParsedInstruction p = parse_instruction(text);
    EXPECT_EQ(p.src_lang, "English");
    EXPECT_EQ(p.tgt_lang, "German");
    EXPECT_EQ(p.source, seg.source);
    EXPECT_EQ(p.hypothesis, seg.hypothesis);
    std::size_t errors = 0;
    for (const auto& e : seg.errors) errors += e.is_error();
    ASSERT_EQ(p.error_sentences.size(), errors);
    for (std::size_t i = 0; i < errors; ++i) {
      EXPECT_EQ(p.error_sentences[i],
                error_sentence(seg.errors[i], ComponentMask::full(), TypeWording::FullLabel));
    }
  }
  EXPECT_THROW(parse_instruction("### English: a\n### German: b"), Error);
}

TEST(Split, FullSizeZhEnCounts) {
  std::vector<Corpus> corpora{synth::plain_corpus(23573, "zh-en", Origin::MQM, "mqm"),
                              synth::plain_corpus(3200, "zh-en", Origin::DEMETR, "demetr")};
  auto build = build_instruction_dataset(corpora, {});
  const LangSummary& s = build.summary.at("zh-en");
  EXPECT_EQ(s.train_mqm, 22373u);
  EXPECT_EQ(s.train_demetr, 3200u);
  EXPECT_EQ(s.dev, 200u);
  EXPECT_EQ(s.test, 1000u);
  EXPECT_EQ(s.removed_overlap, 0u);
  EXPECT_EQ(build.examples.size(), 23573u + 3200u);
}

TEST(Split, DisjointAndDeterministic) {
  std::vector<Corpus> corpora{synth::plain_corpus(1500, "en-de", Origin::MQM, "m"),
                              synth::plain_corpus(300, "en-de", Origin::DEMETR, "d")};
  DatasetOptions opts;
  opts.plan.seed = 5;
  auto a = build_instruction_dataset(corpora, opts);
  auto b = build_instruction_dataset(corpora, opts);
  EXPECT_EQ(a.examples, b.examples);
  opts.plan.seed = 6;
  auto c = build_instruction_dataset(corpora, opts);
  EXPECT_NE(a.examples, c.examples);

  std::set<std::string> seen;
  for (const auto& ex : a.examples) {
    EXPECT_TRUE(seen.insert(ex.instruction).second);
    if (ex.origin == Origin::DEMETR) EXPECT_EQ(ex.split, Split::Train);
  }
}

TEST(Split, DropsTrainOverlappingTest) {
  // Copies of every MQM segment under a different id: any copy whose twin is
  // in test has to be removed from train.
  Corpus mqm = synth::plain_corpus(400, "en-de", Origin::MQM, "m");
  Corpus dup;
  for (const auto& s : mqm) {
    Segment d = s;
    d.id = "dup/" + s.id;
    d.origin = Origin::DEMETR;
    dup.add(d);
  }
  std::vector<Corpus> corpora{mqm, dup};
  DatasetOptions opts;
  opts.plan.defaults = {std::nullopt, 50, 100};
  auto build = build_instruction_dataset(corpora, opts);
  std::set<std::string> test_sources, train_sources;
  for (const auto& ex : build.examples) {
    auto p = parse_instruction(ex.instruction);
    (ex.split == Split::Test ? test_sources : train_sources).insert(p.source);
    if (ex.split == Split::Train) EXPECT_FALSE(test_sources.count(p.source));
  }
  for (const auto& s : train_sources) EXPECT_FALSE(test_sources.count(s));
  EXPECT_EQ(build.summary.at("en-de").removed_overlap, 100u);
  EXPECT_EQ(build.summary.at("en-de").train_demetr, 300u);
}

TEST(Split, PlanTooLargeAndTrainCap) {
  std::vector<Corpus> small{synth::plain_corpus(100, "en-ru", Origin::MQM, "m")};
  EXPECT_THROW(build_instruction_dataset(small, {}), Error);
  DatasetOptions opts;
  opts.plan.per_lang["en-ru"] = {std::optional<std::size_t>(30), 10, 20};
  auto build = build_instruction_dataset(small, opts);
  EXPECT_EQ(build.summary.at("en-ru").train_mqm, 30u);
  DatasetOptions score;
  score.feedback = FeedbackKind::Score;
  EXPECT_THROW(build_instruction_dataset(small, score), ConfigError);
}

TEST(Split, SkipsMissingReferences) {
  Corpus c = synth::plain_corpus(20, "en-de", Origin::MQM, "m");
  Corpus d;
  for (auto s : c) {
    if (s.id == "m/3") s.reference.reset();
    d.add(s);
  }
  std::vector<Corpus> corpora{d};
  DatasetOptions opts;
  opts.plan.defaults = {std::nullopt, 2, 2};
  auto build = build_instruction_dataset(corpora, opts);
  EXPECT_EQ(build.summary.at("en-de").skipped_no_reference, 1u);
  EXPECT_EQ(build.examples.size(), 19u);
}

TEST(Export, JsonlRoundTripAndLayout) {
  std::vector<Corpus> corpora{synth::plain_corpus(40, "en-de", Origin::MQM, "a"),
                              synth::plain_corpus(40, "zh-en", Origin::MQM, "b")};
  DatasetOptions opts;
  opts.plan.defaults = {std::nullopt, 5, 10};
  auto build = build_instruction_dataset(corpora, opts);
  EXPECT_EQ(examples_from_jsonl(examples_to_jsonl(build.examples)), build.examples);

  auto line = example_to_json(build.examples[0]).dump();
  EXPECT_EQ(line.rfind("{\"instruction\":", 0), 0u);

  auto dir = scratch("multi");
  auto files = export_dataset(build.examples, Regime::Multilingual, dir);
  EXPECT_EQ(files, (std::vector<std::string>{"dev.jsonl", "test.jsonl", "train.jsonl"}));
  EXPECT_EQ(import_jsonl(dir / "dev.jsonl").size(), 10u);

  auto bdir = scratch("bi");
  files = export_dataset(build.examples, Regime::Bilingual, bdir);
  EXPECT_EQ(files.size(), 6u);
  EXPECT_EQ(import_jsonl(bdir / "zh-en.test.jsonl").size(), 10u);
}

TEST(Manifest, Values) {
  TrainingManifest m;
  auto j = m.to_json();
  EXPECT_EQ(j["lora_rank"], 16);
  EXPECT_EQ(j["lora_alpha"], 32);
  EXPECT_EQ(j["lora_dropout"], 0.05);
  EXPECT_EQ(j["learning_rate"], 2e-4);
  EXPECT_EQ(j["batch_size"], 2);
  EXPECT_EQ(j["grad_accum"], 4);
  EXPECT_EQ(j["warmup_steps"], 20);
  EXPECT_EQ(j["epochs"], 5);
  EXPECT_EQ(j["early_stop_patience"], 16);
  EXPECT_EQ(j["regime"], "multilingual");
  m.regime = Regime::Bilingual;
  m.languages = {"en-de"};
  auto back = TrainingManifest::from_json(m.to_json());
  EXPECT_EQ(back.to_json(), m.to_json());
}
