// Offline OpenAI-compatible server answering from a corpus.

#include <pthread.h>
#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "mtpe/corpus.hpp"
#include "mtpe/error.hpp"
#include "mtpe/mock_server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mock completion server for dry runs and tests."};
  std::string corpus_path;
  std::string lang;
  std::string mode = "identity";
  std::string script;
  std::string host = "127.0.0.1";
  int port = 8000;
  mtpe::llm::MockOptions opts;
  app.add_option("-c,--corpus", corpus_path, "canonical corpus JSONL or MQM TSV")->required();
  app.add_option("-l,--lang", lang, "language pair code for TSV input");
  app.add_option("--mode", mode, "echo-reference, identity, scripted or swap");
  app.add_option("--script", script, "JSONL {id, output} for scripted mode");
  app.add_option("--host", host);
  app.add_option("--port", port, "0 picks a free port");
  app.add_option("--fail-first", opts.fail_first, "answer the first N requests with HTTP 500");
  app.add_option("--status", opts.forced_status, "answer every request with this HTTP status");
  app.add_flag("--prefix-cue", opts.prefix_cue, "prepend \"Improved {Tgt}: \" to answers");
  app.add_flag("--explain", opts.append_explanation, "append an explanation line to answers");
  CLI11_PARSE(app, argc, argv);

  try {
    mtpe::Corpus corpus = corpus_path.size() > 4 && corpus_path.ends_with(".tsv")
                              ? mtpe::parse_mqm_tsv(corpus_path, mtpe::LangPair::from_code(lang))
                              : mtpe::read_corpus_jsonl(corpus_path);
    opts.mode = mtpe::llm::parse_mock_mode(mode);
    if (!script.empty()) opts.scripted = mtpe::llm::load_script(script);
    mtpe::llm::MockServer server(std::move(corpus), opts);
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
    int bound = server.start(host, port);
    std::cout << "listening on http://" << host << ":" << bound << "/v1" << std::endl;
    int sig = 0;
    sigwait(&stop_signals, &sig);
    server.stop();
  } catch (const mtpe::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
