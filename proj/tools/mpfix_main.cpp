#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "mpfix/errors.hpp"
#include "mpfix/harness/scenarios.hpp"
#include "mpfix/harness/runner.hpp"

using namespace mpfix;

namespace {

struct Common {
  std::string scenario;
  std::string config;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, bool scenario_required) {
  auto* opt = cmd->add_option("--scenario,-s", c.scenario, "Scenario name");
  if (scenario_required) opt->required();
  cmd->add_option("--config,-c", c.config, "Config file (key = value lines)")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "Override a config key, key=value (repeatable)");
}

ScenarioConfig resolve(const Common& c) {
  ScenarioConfig cfg = c.config.empty() ? ScenarioConfig{} : load_config(c.config);
  if (!c.scenario.empty()) cfg.scenario = c.scenario;
  for (const auto& o : c.overrides) apply_override(cfg, o);
  if (cfg.scenario.empty()) throw ConfigError("no scenario given (use --scenario or a config file)");
  return with_defaults(cfg);
}

struct RawDeal {
  std::string kind;
  std::uint64_t count = 0;
  int parties = 2;
  int ring_bits = 64;
  int bits = 64;
  std::vector<std::size_t> shape;
  std::uint64_t seed = 1;
};

void deal_raw(const RawDeal& r, const std::string& dir) {
  PrecompKey key;
  switch (parse_precomp_kind(r.kind)) {
    case PrecompKind::kTriple: key = PrecompKey::triple(r.ring_bits); break;
    case PrecompKind::kBitTriple: key = PrecompKey::bit_triple(); break;
    case PrecompKind::kDaBit: key = PrecompKey::dabit(r.ring_bits); break;
    case PrecompKind::kEdaBit: key = PrecompKey::edabit(r.ring_bits, r.bits); break;
    case PrecompKind::kMatrixTriple:
      if (r.shape.size() != 3) throw ConfigError("matrix-triple needs --shape m,k,r");
      key = PrecompKey::matrix_triple(r.ring_bits, r.shape[0], r.shape[1], r.shape[2]);
      break;
  }
  if (r.ring_bits != 32 && r.ring_bits != 64) throw ConfigError("--ring-bits must be 32 or 64");
  if (r.parties < 2) throw ConfigError("--parties must be at least 2");
  auto pools = Dealer(r.parties, dealer_seed(r.seed)).generate(key, r.count);
  for (int p = 0; p < r.parties; ++p) {
    PoolStore store;
    store.add(std::move(pools[p]));
    store.save(dir, p, r.parties);
  }
  std::cout << r.count << " x " << key.describe() << " written to " << dir << "\n";
}

void emit(const std::vector<RunReport>& reports, const std::string& path) {
  if (path.empty()) {
    for (const auto& r : reports) std::cout << r.to_json() << "\n";
    return;
  }
  append_reports(path, reports);
  std::cout << summarize(reports);
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"mpfix: fixed-point secure multiparty computation runner"};
  app.require_subcommand(1);

  auto* dealer = app.add_subcommand("dealer", "Preprocessing material");
  dealer->require_subcommand(1);
  auto* gen = dealer->add_subcommand("gen", "Write per-party dealer files for a scenario run or a single pool");
  Common gen_opts;
  RawDeal raw;
  std::string out_dir;
  add_common(gen, gen_opts, false);
  gen->add_option("--out,--out-dir,-o", out_dir, "Output directory")->required();
  auto* kind_opt = gen->add_option("--kind", raw.kind, "Single pool: triple, matrix-triple, bit-triple, dabit, edabit");
  gen->add_option("--count", raw.count, "Records in the pool")->needs(kind_opt);
  gen->add_option("--parties", raw.parties, "Party count")->needs(kind_opt);
  gen->add_option("--ring-bits", raw.ring_bits, "Arithmetic ring width (32 or 64)")->needs(kind_opt);
  gen->add_option("--bits", raw.bits, "edaBit length")->needs(kind_opt);
  gen->add_option("--shape", raw.shape, "Matrix-triple shape m,k,r")->delimiter(',')->expected(3)->needs(kind_opt);
  gen->add_option("--seed", raw.seed, "Dealer seed")->needs(kind_opt);
  kind_opt->excludes("--scenario");

  auto* run = app.add_subcommand("run", "Run one party over TCP using dealer files");
  Common run_opts;
  int party = 0;
  std::string run_report;
  add_common(run, run_opts, false);
  run->add_option("--party,-p", party, "Party index")->required();
  run->add_option("--report,-r", run_report, "Append the report to this JSONL file");

  auto* all = app.add_subcommand("run-all", "Run every party of a scenario in this process");
  Common all_opts;
  std::string all_report;
  bool per_party = false;
  add_common(all, all_opts, false);
  all->add_option("--report,-r", all_report, "Append reports to this JSONL file");
  all->add_flag("--per-party", per_party, "Emit one report per party instead of the aggregate");

  auto* sum = app.add_subcommand("summarize", "Render a report file as tables");
  std::string sum_path;
  sum->add_option("report", sum_path, "JSONL report file")->required()->check(CLI::ExistingFile);

  auto* list = app.add_subcommand("scenarios", "List scenarios and their default configs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed() && !raw.kind.empty()) {
      deal_raw(raw, out_dir);
    } else if (gen->parsed()) {
      const auto cfg = resolve(gen_opts);
      deal_scenario(cfg, out_dir);
      std::cout << "dealer files for " << cfg.scenario << " written to " << out_dir << "\n";
    } else if (run->parsed()) {
      emit({run_party(resolve(run_opts), party)}, run_report);
    } else if (all->parsed()) {
      auto reports = run_scenario(resolve(all_opts));
      if (!per_party) reports = {aggregate(reports)};
      emit(reports, all_report);
    } else if (sum->parsed()) {
      std::cout << summarize(read_reports(sum_path));
    } else if (list->parsed()) {
      for (const auto& name : scenario_names()) std::cout << "# " << name << "\n" << default_config(name).to_text() << "\n";
    }
  } catch (const mpfix::Error& e) {
    spdlog::error("{}", e.what());
    std::fprintf(stderr, "mpfix: %s\n", e.what());
    return 1;
  }
  return 0;
}
