// Copyright 2026 The Extraction Audit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// extraction_audit: near-verbatim extraction audits from the command line.
//
//   extraction_audit run --provider model.json --records corpus.jsonl --out out/
//   extraction_audit mc --provider model.json --records corpus.jsonl --samples 2000
//   extraction_audit oracle --provider model.json --records corpus.jsonl
//   extraction_audit sweep --provider model.json --records corpus.jsonl --beam-widths 20,30,40
//   extraction_audit samplesize 1e-3 0.05
//
// Exit codes: 0 ok, 2 configuration error, 3 provider error, 4 guard refusal.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xaudit/cli/config.hpp"
#include "xaudit/cli/hash.hpp"
#include "xaudit/cli/report.hpp"
#include "xaudit/cli/runner.hpp"
#include "xaudit/corpus/jsonl.hpp"
#include "xaudit/corpus/records.hpp"
#include "xaudit/corpus/tokenizer.hpp"
#include "xaudit/estimators/monte_carlo.hpp"
#include "xaudit/estimators/oracle.hpp"
#include "xaudit/estimators/sample_size.hpp"
#include "xaudit/model/model_file.hpp"
#include "xaudit/model/remote.hpp"
#include "xaudit/model/teacher_force.hpp"
#include "xaudit/search/kcbs.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xaudit;
using xaudit::cli::ExperimentConfig;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kProviderError = 3, kGuardRefusal = 4 };

struct Corpus {
  std::vector<SequenceRecord> records;
  std::map<std::string, std::size_t> text_lengths;  // raw-text mode only
};

Corpus load_corpus(const ExperimentConfig& cfg) {
  Corpus c;
  if (!cfg.records_file.empty() && !cfg.text_file.empty()) {
    throw InvalidInput("give either --records or --text, not both");
  }
  if (!cfg.records_file.empty()) {
    c.records = load_records(cfg.records_file);
  } else if (!cfg.text_file.empty()) {
    std::ifstream in(cfg.text_file, std::ios::binary);
    if (!in) throw InvalidInput("cannot read " + cfg.text_file);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto tok = make_tokenizer(cfg.tokenizer, text);
    const std::string source = fs::path(cfg.text_file).stem().string();
    c.records = chunk_text(text, *tok, cfg.prefix_len, cfg.suffix_len, cfg.stride, source);
    c.text_lengths[source] = text.size();
  } else {
    throw InvalidInput("no corpus: give --records or --text");
  }
  std::sort(c.records.begin(), c.records.end(),
            [](const SequenceRecord& a, const SequenceRecord& b) { return a.id < b.id; });
  return c;
}

std::unique_ptr<TokenDistributionProvider> open_provider(const ExperimentConfig& cfg) {
  if (!cfg.provider_file.empty()) return load_model_file(cfg.provider_file);
  return remote_provider_connect(cfg.endpoint);
}

std::string input_hash(const ExperimentConfig& cfg, const std::string& command,
                       const TokenDistributionProvider& provider) {
  // A restarted bridge may come back on another port; the model it serves is
  // identified by name and vocabulary below, not by its URL.
  json cfg_json = cfg.to_json();
  cfg_json["provider"].erase("endpoint");
  cli::Sha256 h;
  h.field(command).field(cfg_json.dump());
  if (!cfg.provider_file.empty()) {
    h.file(cfg.provider_file);
  } else {
    h.field(provider.name()).field(std::to_string(provider.vocabulary().size));
  }
  if (!cfg.records_file.empty()) h.file(cfg.records_file);
  if (!cfg.text_file.empty()) h.file(cfg.text_file);
  return h.hex();
}

struct Prepared {
  std::unique_ptr<TokenDistributionProvider> provider;
  Corpus corpus;
  std::string hash;
  json provenance;
};

Prepared prepare(const ExperimentConfig& cfg, const std::string& command) {
  cfg.validate();
  Prepared p;
  p.corpus = load_corpus(cfg);
  p.provider = open_provider(cfg);
  cli::validate_records(p.corpus.records, cfg, p.provider->vocabulary());
  p.hash = input_hash(cfg, command, *p.provider);
  p.provenance = cli::provenance(cfg, p.hash);
  p.provenance["command"] = command;
  fs::create_directories(cfg.out_dir);
  return p;
}

void write_json(const fs::path& path, const json& j) {
  cli::write_text(path, j.dump(2) + "\n");
}

// CSV files carry provenance as a leading comment line.
std::string csv_header(const json& provenance) { return "# " + provenance.dump() + "\n"; }

void prepend(const fs::path& path, const std::string& head) {
  std::ifstream in(path, std::ios::binary);
  const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  cli::write_text(path, head + body);
}

int cmd_run(const ExperimentConfig& cfg) {
  Prepared p = prepare(cfg, "run");
  const fs::path out(cfg.out_dir);
  const auto& provider = *p.provider;
  cli::CorpusRun run;
  try {
    run = cli::run_corpus(p.corpus.records, cfg, p.hash, out / "checkpoint.jsonl",
                          [&](const SequenceRecord& r) { return cli::audit_sequence(provider, r, cfg); });
  } catch (const ProviderError&) {
    std::cerr << "finished sequences are saved in " << (out / "checkpoint.jsonl").string()
              << "; rerun the same command to resume\n";
    throw;
  }
  save_results(out / "results.jsonl", run.results, &p.provenance);
  write_json(out / "summary.json", cli::build_summary(run.results, cfg, p.hash));
  cli::write_ccdf_csv(out / "ccdf.csv", run.results);
  prepend(out / "ccdf.csv", csv_header(p.provenance));
  cli::write_shares_csv(out / "shares.csv", run.results);
  prepend(out / "shares.csv", csv_header(p.provenance));
  if (cli::write_heatmap_csv(out / "heatmap.csv", run.results, cfg.tau_min,
                             p.corpus.text_lengths)) {
    prepend(out / "heatmap.csv", csv_header(p.provenance));
  }
  std::cout << "audited " << run.results.size() << " sequences (" << run.resumed
            << " from checkpoint) -> " << out.string() << "\n";
  return kOk;
}

json estimate_json(const McEstimate& e) {
  return {{"p_hat", e.p_hat}, {"hits", e.hits},         {"samples", e.samples},
          {"ci_low", e.ci_low}, {"ci_high", e.ci_high}, {"early_eos", e.early_eos}};
}

int cmd_mc(const ExperimentConfig& cfg) {
  Prepared p = prepare(cfg, "mc");
  const fs::path out(cfg.out_dir);
  const DecodingPolicy policy{cfg.top_k, cfg.temperature};
  std::vector<json> lines;
  for (const auto& r : p.corpus.records) {
    std::vector<McEstimate> reps;
    json reps_json = json::array();
    for (std::size_t i = 0; i < cfg.replicates; ++i) {
      McConfig mc;
      mc.samples = cfg.samples;
      mc.seed = mix64(cfg.seed ^ mix64(i));
      mc.dist = cfg.distance_kind();
      mc.epsilon = cfg.epsilon;
      mc.confidence_level = cfg.confidence;
      mc.workers = cfg.workers;
      reps.push_back(mc_estimate(*p.provider, r.prefix, r.suffix, policy, mc));
      reps_json.push_back(estimate_json(reps.back()));
    }
    lines.push_back({{"id", r.id},
                     {"replicates", reps_json},
                     {"pooled", estimate_json(mc_pool(reps, cfg.confidence))},
                     {"token_evals",
                      mc_token_evals(r.prefix.size(), cfg.suffix_len, cfg.samples * cfg.replicates)}});
  }
  std::ofstream f(out / "mc.jsonl", std::ios::trunc);
  f << json{{"schema_version", kSchemaVersion}, {"provenance", p.provenance}}.dump() << "\n";
  for (const auto& l : lines) f << l.dump() << "\n";
  std::cout << "mc estimates for " << lines.size() << " sequences -> " << (out / "mc.jsonl").string()
            << "\n";
  return kOk;
}

int cmd_oracle(const ExperimentConfig& cfg) {
  cfg.validate();
  const double size = oracle_tree_size(cfg.top_k, cfg.suffix_len);
  if (size > cfg.oracle_max_leaves) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "oracle refused: the top-k tree has about %.4g leaves (k=%zu, T=%zu), above "
                  "--max-leaves %.4g",
                  size, cfg.top_k, cfg.suffix_len, cfg.oracle_max_leaves);
    throw GuardRefused(msg, size);
  }
  Prepared p = prepare(cfg, "oracle");
  const fs::path out(cfg.out_dir);
  const SearchConfig sc = cfg.search_config();
  const DistanceKind dist = cfg.distance_kind();
  std::size_t violations = 0;
  std::ofstream f(out / "oracle.jsonl", std::ios::trunc);
  f << json{{"schema_version", kSchemaVersion}, {"provenance", p.provenance}}.dump() << "\n";
  for (const auto& r : p.corpus.records) {
    const auto exact = oracle_mass_profile(*p.provider, r.prefix, r.suffix, sc.policy, dist,
                                           cfg.epsilon, {cfg.oracle_max_leaves});
    const SearchOutcome o = kcbs(*p.provider, r.prefix, r.suffix, sc);
    json lbs = json::array(), ubs = json::array();
    bool ok = true;
    for (std::size_t e = 0; e <= cfg.epsilon; ++e) {
      double lb = 0.0, ub = o.upper_bound;
      if (sc.variant.kind == VariantKind::Baseline) {
        lb = postprocess_filter(o.finals, r.suffix, dist, e).lower_bound;
        ub = lb + (1.0 - o.covered_mass);
      } else {
        for (const auto& fin : o.finals) {
          if (fin.distance && *fin.distance <= e) lb += fin.prob();
        }
      }
      ok = ok && lb <= exact[e] + 1e-9 && exact[e] <= ub + 1e-9;
      lbs.push_back(lb);
      ubs.push_back(ub);
    }
    if (!ok) ++violations;
    f << json{{"id", r.id},
              {"oracle_mass", exact},
              {"search_lower", lbs},
              {"search_upper", ubs},
              {"sandwich_holds", ok}}
             .dump()
      << "\n";
  }
  std::cout << "oracle checked " << p.corpus.records.size() << " sequences, " << violations
            << " sandwich violations -> " << (out / "oracle.jsonl").string() << "\n";
  return violations == 0 ? kOk : kFailure;
}

int cmd_sweep(ExperimentConfig cfg, const std::vector<std::size_t>& beam_widths,
              const std::vector<std::size_t>& epsilons) {
  if (beam_widths.empty() == epsilons.empty()) {
    throw InvalidInput("sweep needs exactly one of --beam-widths or --epsilons");
  }
  const bool over_b = !beam_widths.empty();
  const auto& values = over_b ? beam_widths : epsilons;
  Prepared p = prepare(cfg, "sweep");
  const fs::path out(cfg.out_dir);
  std::string table = csv_header(p.provenance) +
                      "parameter,value,probabilistic_rate,greedy_rate,verbatim_rate,mean_mass,"
                      "search_token_evals\n";
  std::string timing = "parameter,value,seconds\n";
  json per_value = json::array();
  for (std::size_t v : values) {
    ExperimentConfig c = cfg;
    (over_b ? c.beam_width : c.epsilon) = v;
    c.validate();
    cli::validate_records(p.corpus.records, c, p.provider->vocabulary());
    const auto start = std::chrono::steady_clock::now();
    const auto run = cli::run_corpus(p.corpus.records, c, p.hash, {}, [&](const SequenceRecord& r) {
      return cli::audit_sequence(*p.provider, r, c);
    });
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const json s = cli::build_summary(run.results, c, p.hash);
    const json& top = s.at("rates").back();
    table += std::string(over_b ? "beam_width" : "epsilon") + "," + std::to_string(v) + "," +
             cli::fmt(top.at("probabilistic").get<double>()) + "," +
             cli::fmt(top.at("greedy").get<double>()) + "," +
             cli::fmt(s.at("verbatim_rate").get<double>()) + "," +
             cli::fmt(top.at("mean_mass").get<double>()) + "," +
             std::to_string(s.at("cost").at("search").get<std::uint64_t>()) + "\n";
    timing += std::string(over_b ? "beam_width" : "epsilon") + "," + std::to_string(v) + "," +
              cli::fmt(secs) + "\n";
    per_value.push_back({{"value", v}, {"summary", s}});
  }
  cli::write_text(out / "sweep.csv", table);
  cli::write_text(out / "sweep_timing.csv", timing);
  write_json(out / "sweep.json", {{"provenance", p.provenance}, {"runs", per_value}});
  std::cout << "sweep over " << values.size() << " values -> " << (out / "sweep.csv").string()
            << "\n";
  return kOk;
}

int cmd_samplesize(double p, std::optional<double> delta, std::optional<double> eta) {
  if (delta.has_value() == eta.has_value()) {
    throw InvalidInput("samplesize needs exactly one of DELTA or --eta");
  }
  json j{{"p", p}};
  if (delta) {
    j["delta"] = *delta;
    j["detection_samples"] = mc_detection_sample_size(p, *delta);
  } else {
    j["eta"] = *eta;
    j["relative_se_samples"] = mc_relse_sample_size(p, *eta);
  }
  std::cout << j.dump() << "\n";
  return kOk;
}

void add_common(CLI::App* app, ExperimentConfig& cfg) {
  app->add_option("--provider", cfg.provider_file, "Synthetic model file (JSON)");
  app->add_option("--endpoint", cfg.endpoint, "Logits server URL")->envname(cli::kEndpointEnv);
  app->add_option("--records", cfg.records_file, "Corpus records (JSONL)");
  app->add_option("--text", cfg.text_file, "Raw UTF-8 text to chunk");
  app->add_option("--tokenizer", cfg.tokenizer, "byte | whitespace (with --text)")
      ->capture_default_str();
  app->add_option("--stride", cfg.stride, "Window stride in bytes (with --text)")
      ->capture_default_str();
  app->add_option("--beam-width", cfg.beam_width, "Beam width B")->capture_default_str();
  app->add_option("--top-k", cfg.top_k, "Top-k parameter k")->capture_default_str();
  app->add_option("--temperature", cfg.temperature, "Softmax temperature")->capture_default_str();
  app->add_option("--suffix-len", cfg.suffix_len, "Suffix length T")->capture_default_str();
  app->add_option("--prefix-len", cfg.prefix_len, "Prefix length")->capture_default_str();
  app->add_option("--variant", cfg.variant, "baseline | ham | lev")->capture_default_str();
  app->add_option("--distance", cfg.distance, "Distance for the baseline: lev | ham")
      ->capture_default_str();
  app->add_option("--epsilon", cfg.epsilon, "Largest distance budget")->capture_default_str();
  app->add_option("--tau-min", cfg.tau_min, "Extraction threshold")->capture_default_str();
  app->add_flag("!--no-early-stop", cfg.early_stop, "Never cut a search short at tau-min");
  app->add_option("--workers", cfg.workers, "Parallel workers")->capture_default_str();
  app->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  app->add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Near-verbatim extraction audits"};
  app.require_subcommand(1);
  ExperimentConfig cfg;

  auto* run = app.add_subcommand("run", "Audit every sequence with k-CBS");
  add_common(run, cfg);

  auto* mc = app.add_subcommand("mc", "Monte Carlo estimates of near-verbatim mass");
  add_common(mc, cfg);
  mc->add_option("--samples", cfg.samples, "Samples per replicate")->capture_default_str();
  mc->add_option("--replicates", cfg.replicates, "Independent replicates")->capture_default_str();
  mc->add_option("--confidence", cfg.confidence, "Interval confidence level")
      ->capture_default_str();

  auto* oracle = app.add_subcommand("oracle", "Exhaustive ground truth next to the search bounds");
  add_common(oracle, cfg);
  oracle->add_option("--max-leaves", cfg.oracle_max_leaves, "Refuse larger trees")
      ->capture_default_str();

  std::vector<std::size_t> beam_widths, epsilons;
  auto* sweep = app.add_subcommand("sweep", "Repeat the audit over beam widths or budgets");
  add_common(sweep, cfg);
  sweep->add_option("--beam-widths", beam_widths, "Comma-separated beam widths")->delimiter(',');
  sweep->add_option("--epsilons", epsilons, "Comma-separated budgets")->delimiter(',');

  double p = 0.0;
  std::optional<double> delta, eta;
  auto* ss = app.add_subcommand("samplesize", "Monte Carlo sample sizes");
  ss->add_option("p", p, "Target mass")->required();
  ss->add_option("delta", delta, "Allowed miss probability");
  ss->add_option("--eta", eta, "Relative standard error instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(cfg);
    if (*mc) return cmd_mc(cfg);
    if (*oracle) return cmd_oracle(cfg);
    if (*sweep) return cmd_sweep(cfg, beam_widths, epsilons);
    if (*ss) return cmd_samplesize(p, delta, eta);
  } catch (const GuardRefused& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGuardRefusal;
  } catch (const ProviderError& e) {
    std::cerr << "provider error";
    if (e.depth()) std::cerr << " at depth " << *e.depth();
    std::cerr << ": " << e.what() << "\n";
    return kProviderError;
  } catch (const InvalidInput& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
