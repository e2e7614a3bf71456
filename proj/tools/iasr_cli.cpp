// Copyright 2026 The iasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// iasr: command-line front end for batch simulation, offline scoring,
// reporting, the judge-alignment study and the session server.

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "iasr/alignment_study.hpp"
#include "iasr/config.hpp"
#include "iasr/error.hpp"
#include "iasr/report.hpp"
#include "iasr/service.hpp"
#include "iasr/sim.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitBadInput = 2;

iasr::service::HttpServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server) g_server->stop();
}

struct SimulateArgs {
  std::string manifest;
  std::string config;
  std::string mode = "text_shortcut";
  std::optional<int> max_loops;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  auto cfg = iasr::config::load_config(a.config);
  const auto manifest = iasr::sim::load_manifest(a.manifest);

  iasr::sim::SimOptions options;
  options.mode = iasr::sim::parse_sim_mode(a.mode);
  options.max_loops = a.max_loops.value_or(cfg.max_loops);
  options.seed = a.seed.value_or(cfg.seed);
  options.workers = a.workers.value_or(cfg.workers);
  options.pinned_strategy = cfg.pinned_strategy;
  if (options.max_loops < 0) throw iasr::ConfigError("--max-loops must be non-negative");
  if (options.workers < 1) throw iasr::ConfigError("--workers must be at least 1");

  iasr::gateway::Gateway gateway(cfg.gateway_options);
  iasr::sim::Simulator simulator(gateway, cfg.bindings, cfg.templates, cfg.agent_options, options);
  const auto result = simulator.run_batch(manifest);
  iasr::sim::write_batch(a.out, result);

  std::size_t stalled = 0;
  for (const auto& t : result.trajectories) {
    if (t.terminal_reason == iasr::sim::TerminalReason::kStalledError) {
      ++stalled;
      std::cerr << "warning: " << t.utterance_id << " stalled: " << t.error.value_or("") << '\n';
    }
  }
  std::cout << iasr::report::emit_report(result.datasets, iasr::report::Format::kTable);
  std::cout << result.trajectories.size() << " utterances, " << stalled << " stalled; results in " << a.out << '\n';
  return 0;
}

int run_score(const std::string& pairs_path, const std::string& mode, const std::string& format,
              const std::string& profile) {
  std::ifstream in(pairs_path);
  if (!in) throw iasr::MalformedManifest("cannot open " + pairs_path, 0);
  const auto pairs = iasr::report::parse_pairs(in);
  if (pairs.empty()) throw iasr::EmptyBatch("no pairs in " + pairs_path);
  const auto summary = iasr::report::score_pairs(pairs, iasr::textnorm::parse_token_mode(mode),
                                                 iasr::textnorm::profile_by_name(profile));
  std::cout << iasr::report::render_score(summary, iasr::report::parse_format(format));
  return 0;
}

int run_report(const std::string& runs, const std::string& format) {
  const auto result = iasr::sim::read_batch(runs);
  std::cout << iasr::report::emit_report(result.datasets, iasr::report::parse_format(format));
  return 0;
}

int run_align(const std::string& judgments, const std::string& annotations, const std::string& format) {
  const auto rows =
      iasr::alignment::alignment_study(iasr::alignment::load_judgments(judgments),
                                       iasr::alignment::load_annotations(annotations));
  std::cout << (format == "csv" ? iasr::alignment::render_alignment_csv(rows)
                                : iasr::alignment::render_alignment_table(rows));
  return 0;
}

int run_serve(const std::string& config_path, const std::string& host, int port) {
  const auto cfg = iasr::config::load_config(config_path);
  iasr::gateway::Gateway gateway(cfg.gateway_options);
  iasr::service::ServiceConfig service_cfg;
  service_cfg.bindings = cfg.bindings;
  service_cfg.templates = cfg.templates;
  service_cfg.agent_options = cfg.agent_options;
  service_cfg.session_ttl = cfg.session_ttl;
  service_cfg.probe_on_create = cfg.probe_on_create;
  iasr::service::SessionService service(gateway, service_cfg);
  iasr::service::HttpServer server(service);
  const int bound = server.bind(host, port);
  if (bound < 0) {
    std::cerr << "error: cannot bind " << host << ':' << port << '\n';
    return kExitError;
  }
  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cout << "listening on http://" << host << ':' << bound << std::endl;
  server.listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive ASR correction: simulation, scoring and session service"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run the simulated-user correction loop over a manifest");
  simulate->add_option("--manifest", sim.manifest, "Manifest JSONL")->required()->check(CLI::ExistingFile);
  simulate->add_option("--config", sim.config, "Run config JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--mode", sim.mode, "Simulation mode")
      ->check(CLI::IsMember({"text_shortcut", "audio_loop"}));
  simulate->add_option("--max-loops", sim.max_loops, "Correction loops per utterance (overrides config)");
  simulate->add_option("--seed", sim.seed, "Run seed (overrides config)");
  simulate->add_option("--workers", sim.workers, "Parallel utterances (overrides config)");
  simulate->add_option("--out", sim.out, "Output directory")->required();

  std::string pairs;
  std::string score_mode = "word";
  std::string score_format = "table";
  std::string profile = "default";
  auto* score = app.add_subcommand("score", "Score {id, ref, hyp} pairs");
  score->add_option("--pairs", pairs, "Pairs JSONL")->required()->check(CLI::ExistingFile);
  score->add_option("--mode", score_mode, "Token mode")->check(CLI::IsMember({"word", "char", "mixed"}));
  score->add_option("--format", score_format, "Output format")->check(CLI::IsMember({"table", "csv"}));
  score->add_option("--profile", profile, "Normalization profile")->check(CLI::IsMember({"default", "raw"}));

  std::string runs;
  std::string report_format = "table";
  auto* report = app.add_subcommand("report", "Render per-loop metrics of a finished run");
  report->add_option("--runs", runs, "Directory written by simulate")->required()->check(CLI::ExistingDirectory);
  report->add_option("--format", report_format, "Output format")
      ->check(CLI::IsMember({"table", "csv", "curvedata"}));

  std::string judgments;
  std::string annotations;
  std::string align_format = "table";
  auto* align = app.add_subcommand("align", "Correlate judge verdicts with human ratings");
  align->add_option("--judgments", judgments, "Judge verdicts JSONL")->required()->check(CLI::ExistingFile);
  align->add_option("--annotations", annotations, "Human ratings CSV")->required()->check(CLI::ExistingFile);
  align->add_option("--format", align_format, "Output format")->check(CLI::IsMember({"table", "csv"}));

  std::string serve_config;
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the interactive session HTTP service");
  serve->add_option("--config", serve_config, "Run config JSON")->required()->check(CLI::ExistingFile);
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return run_simulate(sim);
    if (*score) return run_score(pairs, score_mode, score_format, profile);
    if (*report) return run_report(runs, report_format);
    if (*align) return run_align(judgments, annotations, align_format);
    if (*serve) return run_serve(serve_config, host, port);
  } catch (const iasr::MalformedManifest& e) {
    std::cerr << "error: MalformedManifest: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const iasr::ConfigError& e) {
    std::cerr << "error: ConfigError: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const iasr::Error& e) {
    std::cerr << "error: " << iasr::to_string(e.code()) << ": " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
