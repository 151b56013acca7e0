#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "semra/semra.hpp"

namespace {

struct Overrides {
  std::string config;
  std::vector<double> snr;
  std::string channel;
  std::string solver;
  std::vector<std::uint64_t> seeds;
  std::string out;
  bool trace = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--snr", o.snr, "SNR in dB (repeatable; replaces the configured sweep)");
  cmd->add_option("--channel", o.channel, "awgn or rayleigh")->check(CLI::IsMember({"awgn", "rayleigh"}));
  cmd->add_option("--solver", o.solver, "greedy, dual_ascent, kkt or brute")
      ->check(CLI::IsMember({"greedy", "dual_ascent", "kkt", "brute"}));
  cmd->add_option("--seed", o.seeds, "channel seed (repeatable)");
  cmd->add_option("--out", o.out, "output file (default stdout)");
  cmd->add_flag("--trace", o.trace, "emit JSON solve reports with iteration traces");
}

semra::RunConfig resolve(const Overrides& o) {
  semra::RunConfig cfg = o.config.empty() ? semra::RunConfig{} : semra::load_config(o.config);
  if (!o.snr.empty()) cfg.sweep = o.snr;
  if (!o.channel.empty()) cfg.channel.model = semra::parse_channel_model(o.channel);
  if (!o.solver.empty()) cfg.solver = semra::parse_solver(o.solver);
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (!o.out.empty()) cfg.output = o.out;
  cfg.validate();
  return cfg;
}

int cmd_run(const Overrides& o) {
  const auto cfg = resolve(o);
  semra::OutputSink sink(cfg.output);
  const auto corpus = semra::load_corpus(cfg);
  const double snr = cfg.sweep.front();
  const auto seed = cfg.seeds.front();
  if (o.trace) {
    auto arr = nlohmann::json::array();
    for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
      semra::ChannelConfig ch = cfg.channel;
      ch.snr_db = snr;
      ch.seed = seed;
      const auto& e = corpus.entries[i];
      const auto r = semra::run_once(corpus, e, cfg, ch, cfg.budget_for(e.sentence.size()), i, true);
      auto j = semra::report_to_json(r.solve, true);
      j["id"] = e.sentence.id;
      arr.push_back(std::move(j));
    }
    sink.write(arr.dump(2) + "\n");
    return 0;
  }
  std::string csv = "id,tokens,k_max,selected,bleu,similarity,accuracy,completeness,objective,retransmitted,decoded\n";
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const auto& e = corpus.entries[i];
    const auto r = semra::run_sentence(corpus, e, cfg, snr, seed, i);
    std::string decoded;
    for (const auto& t : r.decoded) decoded += (decoded.empty() ? "" : " ") + t;
    csv += e.sentence.id + ',' + std::to_string(e.sentence.size()) + ',' + std::to_string(r.k_max) + ',' +
           std::to_string(r.solve.selected_count()) + ',' + semra::format_number(r.metrics.bleu) + ',' +
           semra::format_number(r.metrics.similarity) + ',' + semra::format_number(r.metrics.accuracy) + ',' +
           semra::format_number(r.metrics.completeness) + ',' + semra::format_number(r.solve.objective) + ',' +
           (r.retransmitted ? "1" : "0") + ",\"" + decoded + "\"\n";
  }
  sink.write(csv);
  return 0;
}

int cmd_sweep(const Overrides& o) {
  const auto cfg = resolve(o);
  semra::OutputSink sink(cfg.output);
  const auto corpus = semra::load_corpus(cfg);
  sink.write(semra::sweep_csv(semra::run_sweep(corpus, cfg)));
  return 0;
}

int cmd_hist(const Overrides& o) {
  const auto cfg = resolve(o);
  semra::OutputSink sink(cfg.output);
  const auto corpus = semra::load_corpus(cfg);
  sink.write(semra::histogram_csv(semra::compression_histogram(corpus, cfg)));
  return 0;
}

int cmd_trace(const Overrides& o) {
  auto cfg = resolve(o);
  if (o.solver.empty() && cfg.solver != semra::SolverKind::dual_ascent) cfg.solver = semra::SolverKind::kkt;
  semra::OutputSink sink(cfg.output);
  const auto corpus = semra::load_corpus(cfg);
  const auto rep = semra::convergence_trace(corpus, cfg);
  sink.write(o.trace ? semra::report_to_json(rep, true).dump(2) + "\n" : semra::trace_csv(rep));
  return 0;
}

int cmd_ablate(const Overrides& o) {
  const auto cfg = resolve(o);
  semra::OutputSink sink(cfg.output);
  const auto corpus = semra::load_corpus(cfg);
  sink.write(semra::ablation_csv(semra::ablation(corpus, cfg)));
  return 0;
}

int cmd_verify(const Overrides& o) {
  const std::uint64_t seed = o.seeds.empty() ? 0 : o.seeds.front();
  bool ok = true;
  for (const auto& c : semra::verify_suite(200, seed)) {
    std::printf("%s  %s (%s)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    ok = ok && c.passed;
  }
  return ok ? 0 : 1;
}

int cmd_gen_corpus(const Overrides& o, const semra::SyntheticOptions& opt) {
  semra::OutputSink sink(o.out);
  sink.write(semra::synthetic_corpus_json(opt).dump(1) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic token selection, fading-channel transmission and semantic metrics"};
  app.require_subcommand(1);
  Overrides o;
  semra::SyntheticOptions syn;
  auto* run = app.add_subcommand("run", "Run the pipeline once per sentence and write per-sentence rows");
  auto* sweep = app.add_subcommand("sweep", "Metric-vs-SNR sweep, one CSV row per (snr, seed)");
  auto* hist = app.add_subcommand("hist", "Compression-ratio histogram");
  auto* trace = app.add_subcommand("trace", "Convergence trace of a dual solver on one sentence");
  auto* verify = app.add_subcommand("verify", "Brute-force oracle and property suite");
  auto* ablate = app.add_subcommand("ablate", "Proxy component-effectiveness deltas");
  auto* gen = app.add_subcommand("gen-corpus", "Write the synthetic corpus as JSON");
  for (auto* c : {run, sweep, hist, trace, verify, ablate}) add_common(c, o);
  gen->add_option("--out", o.out, "output file (default stdout)");
  gen->add_option("--sentences", syn.sentences, "sentence count");
  gen->add_option("--seed", syn.seed, "generator seed");
  gen->add_option("--dim", syn.dim, "embedding dimension");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*hist) return cmd_hist(o);
    if (*trace) return cmd_trace(o);
    if (*verify) return cmd_verify(o);
    if (*ablate) return cmd_ablate(o);
    if (*gen) return cmd_gen_corpus(o, syn);
  } catch (const std::exception& e) {
    std::cerr << "semra: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
