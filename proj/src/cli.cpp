#include "mtpe/cli.hpp"

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mtpe/analysis.hpp"
#include "mtpe/corpus.hpp"
#include "mtpe/datasetgen.hpp"
#include "mtpe/error.hpp"
#include "mtpe/feedback.hpp"
#include "mtpe/jsonl.hpp"
#include "mtpe/llm_gateway.hpp"
#include "mtpe/mock_server.hpp"
#include "mtpe/scoring.hpp"
#include "mtpe/text.hpp"

namespace mtpe::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.3.0";

// ---------------------------------------------------------------------------
// Shared option groups

struct CorpusArgs {
  std::vector<std::string> paths;
  std::vector<std::string> demetr;
  std::vector<std::string> annotations;  // "source=path"
  std::string lang;
  std::string raters = "keep-all";
  std::string filter = "all";

  void add_to(CLI::App* app, bool required = true) {
    auto* opt = app->add_option("-c,--corpus", paths,
                                "MQM TSV (needs --lang) or canonical corpus JSONL; repeatable");
    if (required) opt->required();
    app->add_option("--demetr", demetr, "DEMETR records (JSONL); repeatable");
    app->add_option("--annotations", annotations,
                    "external annotations as SOURCE=PATH (instructscore, xcomet); repeatable");
    app->add_option("-l,--lang", lang, "language pair code for TSV input, e.g. en-de");
    app->add_option("--raters", raters, "keep-all or first")
        ->check(CLI::IsMember({"keep-all", "first"}));
    app->add_option("--filter", filter, "all, has-error, no-error, or lang:CODE / system:NAME");
  }

  Corpus load() const {
    MqmParseOptions opts;
    opts.raters = raters == "first" ? RaterFilter::FirstRater : RaterFilter::KeepAll;
    Corpus merged;
    auto absorb = [&](const Corpus& c) {
      for (const auto& seg : c) merged.add(seg);
      merged.provenance.insert(merged.provenance.end(), c.provenance.begin(), c.provenance.end());
    };
    for (const auto& p : paths) {
      if (!fs::exists(p)) throw ConfigError("corpus file not found: " + p);
      if (fs::path(p).extension() == ".tsv") {
        if (lang.empty()) throw ConfigError("--lang is required to read " + p);
        absorb(parse_mqm_tsv(p, LangPair::from_code(lang), opts));
      } else {
        absorb(read_corpus_jsonl(p));
      }
    }
    for (const auto& p : demetr) {
      if (!fs::exists(p)) throw ConfigError("DEMETR file not found: " + p);
      absorb(parse_demetr_jsonl(p));
    }
    for (const auto& spec : annotations) {
      auto eq = spec.find('=');
      if (eq == std::string::npos) throw ConfigError("--annotations expects SOURCE=PATH, got " + spec);
      const std::string path = spec.substr(eq + 1);
      if (!fs::exists(path)) throw ConfigError("annotation file not found: " + path);
      merged = parse_external_annotations(path, parse_annotation_source(spec.substr(0, eq)), merged);
    }
    return apply_filter(merged);
  }

  Corpus apply_filter(const Corpus& c) const {
    if (filter == "all") return c;
    if (filter == "has-error") return filter_segments(c, SegmentFilter::has_error());
    if (filter == "no-error") return filter_segments(c, SegmentFilter::no_error());
    if (text::starts_with(filter, "lang:")) return filter_segments(c, SegmentFilter::lang_pair(filter.substr(5)));
    if (text::starts_with(filter, "system:")) return filter_segments(c, SegmentFilter::system(filter.substr(7)));
    throw ConfigError("unknown --filter '" + filter + "'");
  }

  ordered_json to_json() const {
    ordered_json j;
    j["paths"] = paths;
    j["demetr"] = demetr;
    j["annotations"] = annotations;
    j["lang"] = lang;
    j["raters"] = raters;
    j["filter"] = filter;
    return j;
  }
};

struct ScoreArgs {
  std::string policy = "average";
  std::string weights;

  void add_to(CLI::App* app) {
    app->add_option("--policy", policy, "rater policy: average or keep-all")
        ->check(CLI::IsMember({"average", "keep-all"}));
    app->add_option("--weights", weights, "JSON weight overrides");
  }
  PenaltyPolicy penalty_policy() const {
    return policy == "keep-all" ? PenaltyPolicy::KeepAll : PenaltyPolicy::Average;
  }
  WeightTable table() const { return weights.empty() ? WeightTable{} : WeightTable::load(weights); }
};

struct Override {
  std::optional<FeedbackKind> kind;
  std::optional<std::size_t> k;
  std::optional<ComponentMask> mask;
};

struct FeedbackArgs {
  std::string kind = "generic";
  std::string mask = "all";
  std::string source = "mqm";
  std::size_t k = 0;
  std::uint64_t seed = 12345;
  std::string shots;
  std::string tmpl;
  std::string overrides;
  ScoreArgs score;

  void add_to(CLI::App* app) {
    app->add_option("-f,--feedback", kind, "generic, score or fine-grained");
    app->add_option("--mask", mask, "fine-grained components: all or a subset of span,type,severity");
    app->add_option("--source", source, "annotation source for feedback: mqm, instructscore, xcomet");
    app->add_option("-k,--k", k, "number of in-context examples");
    app->add_option("--seed", seed, "seed for shot selection");
    app->add_option("--shots", shots, "canonical corpus JSONL used as the shot pool (default: the input)");
    app->add_option("--template", tmpl, "custom query-block template file");
    app->add_option("--overrides", overrides, "per-segment JSONL {id, feedback?, k?, mask?}");
    score.add_to(app);
  }

  ordered_json to_json() const {
    ordered_json j;
    j["feedback"] = kind;
    j["mask"] = ComponentMask::parse(mask).to_string();
    j["source"] = source;
    j["k"] = k;
    j["seed"] = seed;
    j["shots"] = shots;
    j["template"] = tmpl;
    j["overrides"] = overrides;
    j["policy"] = score.policy;
    j["weights"] = score.weights;
    return j;
  }
};

struct GenArgs {
  llm::GenerationConfig cfg;
  std::string api_style = "completion";
  std::optional<std::uint64_t> seed;
  std::string mock;
  std::string mock_script;

  void add_to(CLI::App* app) {
    app->add_option("--endpoint", cfg.endpoint, "OpenAI-compatible base URL");
    app->add_option("--model", cfg.model, "model name sent with each request");
    app->add_option("--api", api_style, "completion or chat")->check(CLI::IsMember({"completion", "chat"}));
    app->add_option("--temperature", cfg.temperature);
    app->add_option("--top-p", cfg.top_p);
    app->add_option("--max-tokens", cfg.max_tokens);
    app->add_option("--timeout", cfg.timeout_seconds, "per-request timeout in seconds");
    app->add_option("--retries", cfg.max_retries);
    app->add_option("--max-in-flight", cfg.max_in_flight);
    app->add_option("--backoff-ms", cfg.backoff_initial_ms, "initial retry backoff");
    app->add_option("--gen-seed", seed, "sampling seed forwarded to the server");
    app->add_option("--mock", mock, "serve from an in-process mock: echo-reference, identity, scripted, swap");
    app->add_option("--mock-script", mock_script, "JSONL {id, output} for --mock scripted");
  }

  llm::GenerationConfig resolved() const {
    llm::GenerationConfig c = cfg;
    c.api_style = llm::parse_api_style(api_style);
    c.seed = seed;
    c.api_key = llm::api_key_from_env();
    c.validate();
    return c;
  }

  ordered_json to_json() const {
    llm::GenerationConfig c = resolved();
    ordered_json j;
    j["endpoint"] = mock.empty() ? c.endpoint : "mock:" + mock;
    j["model"] = c.model;
    j["api_style"] = llm::to_string(c.api_style);
    j["temperature"] = c.temperature;
    j["top_p"] = c.top_p;
    j["max_tokens"] = c.max_tokens;
    j["timeout_seconds"] = c.timeout_seconds;
    j["max_retries"] = c.max_retries;
    j["max_in_flight"] = c.max_in_flight;
    j["backoff_initial_ms"] = c.backoff_initial_ms;
    j["seed"] = c.seed ? ordered_json(*c.seed) : ordered_json(nullptr);
    if (!mock_script.empty()) j["mock_script"] = mock_script;
    return j;
  }
};

void write_config(const fs::path& dir, const std::string& command, ordered_json body) {
  ordered_json j;
  j["command"] = command;
  j["version"] = kVersion;
  for (auto& [key, value] : body.items()) j[key] = value;
  fs::create_directories(dir);
  io::write_file_atomic(dir / "config.json", j.dump(2) + "\n");
}

void write_json(const fs::path& path, const json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// Prompt construction

struct PromptJob {
  const Segment* seg = nullptr;
  std::string feedback;
  std::size_t k = 0;
  std::string prompt;
};

struct PromptPlan {
  std::vector<PromptJob> jobs;
  std::vector<std::string> skipped;  // segments without feedback to show
};

std::map<std::string, Override> load_overrides(const std::string& path) {
  std::map<std::string, Override> out;
  if (path.empty()) return out;
  io::for_each_json_line(io::read_file(path), path, [&](std::size_t, const json& j) {
    Override o;
    if (j.contains("feedback")) o.kind = parse_feedback_kind(j["feedback"].get<std::string>());
    if (j.contains("k")) o.k = j["k"].get<std::size_t>();
    if (j.contains("mask")) o.mask = ComponentMask::parse(j["mask"].get<std::string>());
    out[j.at("id").get<std::string>()] = o;
  });
  return out;
}

std::string feedback_label(FeedbackKind kind, const ComponentMask& mask) {
  std::string label(to_string(kind));
  if (kind == FeedbackKind::FineGrained && !(mask == ComponentMask::full())) label += ":" + mask.to_string();
  return label;
}

/// nullopt when the segment has nothing to show under fine-grained feedback.
std::optional<FeedbackSpec> spec_for(const Segment& seg, FeedbackKind kind, const ComponentMask& mask,
                                     AnnotationSource source, const ScoreArgs& score,
                                     const WeightTable& weights) {
  switch (kind) {
    case FeedbackKind::Generic: return FeedbackSpec::generic();
    case FeedbackKind::Score:
      return FeedbackSpec::with_score(
          score_segment(seg, score.penalty_policy(), weights, source).normalized);
    case FeedbackKind::FineGrained: {
      FeedbackSpec spec = fine_grained_for(seg, source, mask);
      if (spec.annotations.empty()) return std::nullopt;
      return spec;
    }
  }
  return std::nullopt;
}

PromptPlan plan_prompts(const Corpus& corpus, const FeedbackArgs& args) {
  const FeedbackKind base_kind = parse_feedback_kind(args.kind);
  const ComponentMask base_mask = ComponentMask::parse(args.mask);
  const AnnotationSource source = parse_annotation_source(args.source);
  const WeightTable weights = args.score.table();
  const auto overrides = load_overrides(args.overrides);
  std::optional<PromptTemplate> tmpl;
  if (!args.tmpl.empty()) tmpl = PromptTemplate::load(args.tmpl);

  Corpus shot_corpus = args.shots.empty() ? corpus : read_corpus_jsonl(args.shots);
  std::map<std::pair<FeedbackKind, std::string>, std::vector<Shot>> pools;
  auto pool_for = [&](FeedbackKind kind, const ComponentMask& mask) -> const std::vector<Shot>& {
    auto key = std::make_pair(kind, mask.to_string());
    auto it = pools.find(key);
    if (it != pools.end()) return it->second;
    std::vector<Shot> pool;
    for (const auto& seg : shot_corpus) {
      if (!seg.reference) continue;
      auto spec = spec_for(seg, kind, mask, source, args.score, weights);
      if (!spec) continue;
      pool.push_back({seg, *spec, *seg.reference});
    }
    return pools.emplace(key, std::move(pool)).first->second;
  };

  PromptPlan plan;
  for (const auto& seg : corpus) {
    FeedbackKind kind = base_kind;
    ComponentMask mask = base_mask;
    std::size_t k = args.k;
    if (auto it = overrides.find(seg.id); it != overrides.end()) {
      kind = it->second.kind.value_or(kind);
      mask = it->second.mask.value_or(mask);
      k = it->second.k.value_or(k);
    }
    auto spec = spec_for(seg, kind, mask, source, args.score, weights);
    if (!spec) {
      plan.skipped.push_back(seg.id);
      continue;
    }
    std::span<const Shot> pool;
    if (k > 0) pool = pool_for(kind, mask);
    std::string prompt;
    try {
      prompt = build_postedit_prompt(seg, *spec, pool, k, args.seed, tmpl ? &*tmpl : nullptr);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError("segment " + seg.id + ": " + e.what());
    }
    plan.jobs.push_back({&seg, feedback_label(kind, mask), k, std::move(prompt)});
  }
  return plan;
}

std::string prompts_jsonl(const std::vector<PromptJob>& jobs) {
  std::string out;
  for (const auto& job : jobs) {
    ordered_json j;
    j["id"] = job.seg->id;
    j["feedback"] = job.feedback;
    j["k"] = job.k;
    j["prompt"] = job.prompt;
    out += io::dump_line(j) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generation

int generate(const std::vector<PromptJob>& jobs, const Corpus& corpus, const GenArgs& gen,
             const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  llm::GenerationConfig cfg = gen.resolved();
  std::unique_ptr<llm::MockServer> mock;
  if (!gen.mock.empty()) {
    llm::MockOptions mo;
    mo.mode = llm::parse_mock_mode(gen.mock);
    if (!gen.mock_script.empty()) mo.scripted = llm::load_script(gen.mock_script);
    mock = std::make_unique<llm::MockServer>(corpus, mo);
    mock->start();
    cfg.endpoint = mock->endpoint();
  }
  llm::OpenAiClient client(cfg);

  std::vector<llm::BatchItem> items;
  items.reserve(jobs.size());
  for (const auto& job : jobs)
    items.push_back({job.seg->id, job.seg->lang, job.prompt, job.feedback, job.k});

  std::vector<llm::PostEditRecord> records;
  try {
    records = llm::postedit_batch(items, client, cfg);
  } catch (const llm::BatchAborted& e) {
    err << "error: " << e.what() << "\n";
    return kFatal;
  }
  io::write_file_atomic(out_dir / "records.jsonl", llm::records_to_jsonl(records));
  io::write_file_atomic(out_dir / "timings.jsonl", llm::timings_to_jsonl(records));

  std::size_t failed = 0;
  for (const auto& r : records) {
    if (!r.failed) continue;
    ++failed;
    err << "warning: segment " << r.segment_id << " failed: " << r.error << "\n";
  }
  out << records.size() - failed << "/" << records.size() << " segments edited; output in "
      << out_dir.string() << "\n";
  return failed > 0 ? kPartialFailure : kOk;
}

// ---------------------------------------------------------------------------
// Commands

// Records usually live inside another run's output directory, so only the
// file name is kept to stay independent of where runs are placed.
ordered_json records_ref(const std::string& path, std::size_t count) {
  return {{"file", fs::path(path).filename().string()}, {"count", count}};
}

struct Globals {
  std::string out_dir = "mtpe-out";
};

void add_out(CLI::App* app, Globals& g) {
  app->add_option("-o,--out", g.out_dir, "output directory");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Post-edit machine translation with quality feedback, evaluate the edits and build instruction data."};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Globals g;
  CorpusArgs corpus_args;
  FeedbackArgs fb;
  GenArgs gen;
  std::string records_path;
  std::string condition;
  std::string analysis_source = "mqm";
  analysis::CompareOptions cmp;
  bool lowercase = false;
  bool no_error_only = false;
  std::string agree_a, agree_b, rule = "exact";
  std::optional<std::size_t> sample;
  std::uint64_t agree_seed = 12345;
  std::string regime = "multilingual";
  std::string ds_feedback = "fine-grained";
  dataset::SplitPlan plan;
  std::optional<std::size_t> train_cap;
  std::string base_model = dataset::TrainingManifest{}.base_model;

  auto* parse_cmd = app.add_subcommand("parse", "Read annotated corpora and write the canonical JSONL form");
  corpus_args.add_to(parse_cmd);
  add_out(parse_cmd, g);

  auto* score_cmd = app.add_subcommand("score", "Compute MQM penalties and normalized scores");
  corpus_args.add_to(score_cmd);
  fb.score.add_to(score_cmd);
  score_cmd->add_option("--source", fb.source, "annotation source to score");
  add_out(score_cmd, g);

  auto* prompt_cmd = app.add_subcommand("prompt", "Render post-editing prompts without sending them");
  corpus_args.add_to(prompt_cmd);
  fb.add_to(prompt_cmd);
  add_out(prompt_cmd, g);

  auto* postedit_cmd = app.add_subcommand("postedit", "Post-edit hypotheses through an LLM endpoint");
  corpus_args.add_to(postedit_cmd);
  fb.add_to(postedit_cmd);
  gen.add_to(postedit_cmd);
  add_out(postedit_cmd, g);

  auto* translate_cmd = app.add_subcommand("translate", "Translate sources from scratch (baseline)");
  corpus_args.add_to(translate_cmd);
  gen.add_to(translate_cmd);
  add_out(translate_cmd, g);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "BLEU/TER of edits vs original hypotheses with significance");
  corpus_args.add_to(evaluate_cmd);
  evaluate_cmd->add_option("-r,--records", records_path, "records.jsonl from postedit or translate")->required();
  evaluate_cmd->add_option("--resamples", cmp.resamples, "bootstrap resamples");
  evaluate_cmd->add_option("--seed", cmp.seed, "bootstrap seed");
  evaluate_cmd->add_option("--max-shift", cmp.ter.max_shift_size, "longest TER shift in tokens");
  evaluate_cmd->add_flag("--lowercase", lowercase, "case-insensitive metrics");
  evaluate_cmd->add_flag("--no-error-only", no_error_only, "only segments without annotated errors (over-editing audit)");
  add_out(evaluate_cmd, g);

  auto* analyze_cmd = app.add_subcommand("analyze", "Error-span resolution per MQM category");
  corpus_args.add_to(analyze_cmd);
  analyze_cmd->add_option("-r,--records", records_path, "records.jsonl from postedit")->required();
  analyze_cmd->add_option("--condition", condition, "label for this feedback condition");
  analyze_cmd->add_option("--source", analysis_source, "annotation source whose spans are checked");
  add_out(analyze_cmd, g);

  auto* agreement_cmd = app.add_subcommand("agreement", "How often error spans of two sources match");
  corpus_args.add_to(agreement_cmd);
  agreement_cmd->add_option("-a", agree_a, "first annotation source")->required();
  agreement_cmd->add_option("-b", agree_b, "second annotation source")->required();
  agreement_cmd->add_option("--rule", rule, "exact or jaccard:THETA");
  agreement_cmd->add_option("--sample", sample, "number of segments to sample");
  agreement_cmd->add_option("--seed", agree_seed, "sampling seed");
  add_out(agreement_cmd, g);

  auto* dataset_cmd = app.add_subcommand("dataset", "Build instruction-tuning data and a training manifest");
  corpus_args.add_to(dataset_cmd, false);
  dataset_cmd->add_option("-f,--feedback", ds_feedback, "generic or fine-grained");
  dataset_cmd->add_option("--regime", regime, "bilingual or multilingual");
  dataset_cmd->add_option("--dev", plan.defaults.dev, "dev segments per pair");
  dataset_cmd->add_option("--test", plan.defaults.test, "test segments per pair");
  dataset_cmd->add_option("--train", train_cap, "cap on MQM train segments per pair");
  dataset_cmd->add_option("--seed", plan.seed, "split seed");
  dataset_cmd->add_option("--base-model", base_model, "model id recorded in the manifest");
  add_out(dataset_cmd, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kFatal;
  }

  const fs::path out_dir = g.out_dir;
  try {
    if (parse_cmd->parsed()) {
      Corpus corpus = corpus_args.load();
      write_config(out_dir, "parse", {{"corpus", corpus_args.to_json()}});
      write_corpus_jsonl(corpus, out_dir / "corpus.jsonl");
      json stats = to_json(corpus_stats(corpus));
      write_json(out_dir / "stats.json", stats);
      out << corpus.size() << " segments written to " << (out_dir / "corpus.jsonl").string() << "\n";
      return kOk;
    }

    if (score_cmd->parsed()) {
      Corpus corpus = corpus_args.load();
      const WeightTable weights = fb.score.table();
      const AnnotationSource source = parse_annotation_source(fb.source);
      ordered_json cfg = {{"corpus", corpus_args.to_json()},
                          {"policy", fb.score.policy},
                          {"source", fb.source}};
      cfg["weights"] = ordered_json::parse(weights.to_json().dump());
      write_config(out_dir, "score", cfg);
      std::string lines;
      for (const auto& seg : corpus) {
        QualityScore q = score_segment(seg, fb.score.penalty_policy(), weights, source);
        ordered_json j;
        j["id"] = seg.id;
        j["penalty"] = q.penalty;
        j["normalized"] = q.normalized;
        j["score"] = q.rounded();
        lines += io::dump_line(j) + "\n";
      }
      io::write_file_atomic(out_dir / "scores.jsonl", lines);
      out << corpus.size() << " segments scored\n";
      return kOk;
    }

    if (prompt_cmd->parsed() || postedit_cmd->parsed()) {
      const bool dry = prompt_cmd->parsed();
      Corpus corpus = corpus_args.load();
      PromptPlan plan = plan_prompts(corpus, fb);
      ordered_json cfg = {{"corpus", corpus_args.to_json()}, {"prompting", fb.to_json()}};
      if (!dry) cfg["generation"] = gen.to_json();
      write_config(out_dir, dry ? "prompt" : "postedit", cfg);
      io::write_file_atomic(out_dir / "prompts.jsonl", prompts_jsonl(plan.jobs));
      if (!plan.skipped.empty())
        err << "note: " << plan.skipped.size() << " segments have no " << fb.source
            << " errors to show and were skipped\n";
      if (dry) {
        out << plan.jobs.size() << " prompts written to " << (out_dir / "prompts.jsonl").string() << "\n";
        return kOk;
      }
      return generate(plan.jobs, corpus, gen, out_dir, out, err);
    }

    if (translate_cmd->parsed()) {
      Corpus corpus = corpus_args.load();
      std::vector<PromptJob> jobs;
      for (const auto& seg : corpus)
        jobs.push_back({&seg, "translate", 0, build_translate_prompt(seg.source, seg.lang)});
      write_config(out_dir, "translate", {{"corpus", corpus_args.to_json()}, {"generation", gen.to_json()}});
      io::write_file_atomic(out_dir / "prompts.jsonl", prompts_jsonl(jobs));
      return generate(jobs, corpus, gen, out_dir, out, err);
    }

    if (evaluate_cmd->parsed()) {
      Corpus corpus = corpus_args.load();
      auto records = llm::read_records_jsonl(records_path);
      cmp.tokenizer.lowercase = lowercase;
      analysis::EditComparison c = no_error_only ? analysis::overedit_audit(corpus, records, cmp)
                                                 : analysis::compare_edits(corpus, records, cmp);
      ordered_json cfg = {{"corpus", corpus_args.to_json()},
                          {"records", records_ref(records_path, records.size())},
                          {"resamples", cmp.resamples},
                          {"seed", cmp.seed},
                          {"max_shift", cmp.ter.max_shift_size},
                          {"lowercase", lowercase},
                          {"no_error_only", no_error_only}};
      write_config(out_dir, "evaluate", cfg);
      write_json(out_dir / "report.json", c.to_json());
      io::write_file_atomic(out_dir / "segments.tsv", c.segment_tsv());
      out << c.to_table();
      return kOk;
    }

    if (analyze_cmd->parsed()) {
      Corpus corpus = corpus_args.load();
      auto records = llm::read_records_jsonl(records_path);
      auto report = analysis::resolution_analysis(corpus, records, condition,
                                                  parse_annotation_source(analysis_source));
      write_config(out_dir, "analyze", {{"corpus", corpus_args.to_json()},
                                        {"records", records_ref(records_path, records.size())},
                                        {"condition", condition},
                                        {"source", analysis_source}});
      write_json(out_dir / "report.json", report.to_json());
      io::write_file_atomic(out_dir / "resolution.csv", report.to_csv());
      out << report.to_table();
      return kOk;
    }

    if (agreement_cmd->parsed()) {
      Corpus corpus = corpus_args.load();
      analysis::AgreementOptions opts{analysis::AgreementRule::parse(rule), sample, agree_seed};
      auto report = analysis::agreement(corpus, parse_annotation_source(agree_a),
                                        parse_annotation_source(agree_b), opts);
      ordered_json cfg = {{"corpus", corpus_args.to_json()}, {"a", agree_a}, {"b", agree_b},
                          {"rule", opts.rule.id()}};
      cfg["sample"] = sample ? ordered_json(*sample) : ordered_json(nullptr);
      cfg["seed"] = agree_seed;
      write_config(out_dir, "agreement", cfg);
      write_json(out_dir / "report.json", report.to_json());
      out << report.to_table();
      return kOk;
    }

    if (dataset_cmd->parsed()) {
      if (corpus_args.paths.empty() && corpus_args.demetr.empty())
        throw ConfigError("dataset needs at least one --corpus or --demetr input");
      Corpus corpus = corpus_args.load();
      plan.defaults.train = train_cap;
      dataset::DatasetOptions opts;
      opts.plan = plan;
      opts.feedback = parse_feedback_kind(ds_feedback);
      const dataset::Regime reg = dataset::parse_regime(regime);
      std::vector<Corpus> corpora{corpus};
      auto build = dataset::build_instruction_dataset(corpora, opts);

      ordered_json cfg = {{"corpus", corpus_args.to_json()},
                          {"feedback", std::string(to_string(opts.feedback))},
                          {"regime", std::string(dataset::to_string(reg))},
                          {"dev", plan.defaults.dev},
                          {"test", plan.defaults.test}};
      cfg["train"] = train_cap ? ordered_json(*train_cap) : ordered_json(nullptr);
      cfg["seed"] = plan.seed;
      cfg["base_model"] = base_model;
      write_config(out_dir, "dataset", cfg);

      auto files = dataset::export_dataset(build.examples, reg, out_dir);
      dataset::TrainingManifest manifest;
      manifest.base_model = base_model;
      manifest.regime = reg;
      for (const auto& [code, _] : build.summary) manifest.languages.push_back(code);
      manifest.data_files = files;
      dataset::export_training_manifest(manifest, out_dir / "manifest.json");
      write_json(out_dir / "summary.json", build.summary_json());
      for (const auto& [code, s] : build.summary) {
        out << code << ": train " << s.train_mqm << " / " << s.train_demetr << ", dev " << s.dev
            << ", test " << s.test << " (removed " << s.removed_overlap << " overlapping)\n";
      }
      return kOk;
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kFatal;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kFatal;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFatal;
  }
  return kFatal;
}

}  // namespace mtpe::cli
