#include "sika/app.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <sstream>

#include "sika/log.hpp"

namespace sika::app {

// ---------------------------------------------------------------------------
// Files

InputFile read_input(const std::string& path) {
  auto rows = csv::read_file(path);
  if (rows.empty() || rows[0].empty()) throw InputError("input '" + path + "' has no header row");
  InputFile f;
  f.header = std::move(rows[0]);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != f.header.size()) {
      throw InputError("input '" + path + "' row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                       " fields, the header has " + std::to_string(f.header.size()));
    }
    Record rec;
    rec.raw_id = rows[r][0];
    rec.atts.assign(rows[r].begin() + 1, rows[r].end());
    f.records.push_back(std::move(rec));
  }
  return f;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write '" + path + "'");
  return out;
}

std::string opt_str(const std::optional<std::uint64_t>& v) { return v ? std::to_string(*v) : std::string(); }

std::vector<std::string> column_names(const AppConfig& cfg, const JoinedOutput& j, std::uint16_t provider) {
  const std::size_t i = provider - 1;
  std::optional<std::size_t> width;
  for (const auto& row : j.rows) {
    if (row.atts[i]) {
      width = row.atts[i]->size();
      break;
    }
  }
  auto it = cfg.columns.find(provider);
  if (it != cfg.columns.end()) {
    if (width && *width != it->second.size()) {
      throw UsageError("configured columns for " + party_name(provider) + " list " + std::to_string(it->second.size()) +
                       " names but its records carry " + std::to_string(*width) + " attributes");
    }
    return it->second;
  }
  std::vector<std::string> names;
  for (std::size_t k = 1; k <= width.value_or(1); ++k) names.push_back("col" + std::to_string(k));
  return names;
}

}  // namespace

void write_result(const AppConfig& cfg, const CollectorResult& res, std::ostream& out) {
  switch (cfg.mode) {
    case OutputMode::cardinality:
      csv::write_row(out, {"cardinality"});
      csv::write_row(out, {std::to_string(res.result.cardinality)});
      return;
    case OutputMode::sika:
      csv::write_row(out, {"provider", "bnym", "p", "sk"});
      for (std::size_t i = 0; i < res.result.providers.size(); ++i) {
        for (const auto& e : res.result.providers[i]) {
          csv::write_row(out, {std::to_string(i + 1), e.bnym.to_hex(), opt_str(e.p), e.sk ? e.sk->to_hex() : ""});
        }
      }
      return;
    case OutputMode::psi: {
      csv::write_row(out, {"p", "id"});
      const auto& ids = res.joined.value().ids;
      for (std::size_t k = 0; k < ids.size(); ++k) csv::write_row(out, {std::to_string(k + 1), ids[k]});
      return;
    }
    case OutputMode::payload:
    case OutputMode::threshold_payload: {
      const JoinedOutput& j = res.joined.value();
      const std::size_t n = j.locked.size();
      std::vector<std::vector<std::string>> names(n);
      csv::Row header{"p"};
      for (std::size_t i = 0; i < n; ++i) {
        names[i] = column_names(cfg, j, static_cast<std::uint16_t>(i + 1));
        for (const auto& c : names[i]) header.push_back("P" + std::to_string(i + 1) + "_" + c);
      }
      csv::write_row(out, header);
      for (const auto& row : j.rows) {
        csv::Row line{std::to_string(row.p)};
        for (std::size_t i = 0; i < n; ++i) {
          if (row.atts[i]) {
            line.insert(line.end(), row.atts[i]->begin(), row.atts[i]->end());
          } else {
            line.insert(line.end(), names[i].size(), "<locked>");
          }
        }
        csv::write_row(out, line);
      }
      return;
    }
  }
}

void write_nyms(const std::vector<Record>& records, const ProviderOutput& out, std::ostream& os) {
  csv::write_row(os, {"raw_id", "bnym_hex", "sk_hex"});
  for (std::size_t k = 0; k < out.real_count; ++k) {
    csv::write_row(os, {records[k].raw_id, out.records[k].bnym.to_hex(), out.records[k].sk.to_hex()});
  }
}

int report_failure(std::exception_ptr e, std::ostream& err) {
  try {
    std::rethrow_exception(e);
  } catch (const UsageError& x) {
    err << "error: " << x.what() << "\n";
    return kExitUsage;
  } catch (const InputError& x) {
    err << "input error: " << x.what() << "\n";
    return kExitUsage;
  } catch (const SessionAborted& x) {
    err << "session aborted: " << x.what() << "\n";
    return kExitSession;
  } catch (const ProtocolError& x) {
    err << "protocol error: " << x.what() << "\n";
    return kExitSession;
  } catch (const ConnectionError& x) {
    err << "connection error: " << x.what() << "\n";
    return kExitSession;
  } catch (const SessionTimeout& x) {
    err << "timeout: " << x.what() << "\n";
    return kExitSession;
  } catch (const std::exception& x) {
    err << "failure: " << x.what() << "\n";
    return kExitSession;
  }
}

// ---------------------------------------------------------------------------
// Commands

namespace {

AppConfig load_valid(const std::string& path) {
  ConfigLoad load = load_config(path);
  if (!load.violations.empty()) {
    std::string msg = "invalid config '" + path + "':";
    for (const auto& v : load.violations) msg += "\n  " + v;
    throw UsageError(msg);
  }
  return load.config;
}

std::unique_ptr<SeededRandom> seeded(const std::string& seed_hex) {
  if (seed_hex.empty()) return nullptr;
  const Bytes seed = from_hex(seed_hex);
  if (seed.empty()) throw UsageError("seed must be non-empty hex");
  return std::make_unique<SeededRandom>(seed);
}

std::unique_ptr<TcpTransport> open_network(const AppConfig& cfg, std::uint16_t self) {
  const PartyEntry* me = cfg.party(self);
  const bool networked = std::any_of(cfg.parties.begin(), cfg.parties.end(),
                                     [](const PartyEntry& p) { return !p.listen.empty() || p.dial; });
  if (me == nullptr || !networked) throw UsageError("config has no network addresses for " + party_name(self));
  auto t = std::make_unique<TcpTransport>(self, cfg.session_id);
  const auto accept = cfg.accept_from(self);
  if (!accept.empty()) t->listen(me->listen);
  t->connect(cfg.dial_targets(self), accept, cfg.settings().timeout);
  return t;
}

void write_report(const std::string& path, const ByteCounters& c) {
  auto f = open_out(path);
  f << c.to_json();
}

void print_timings(std::ostream& out, const PhaseTimings& t) {
  out << "phase timings (s):\n";
  const auto names = PhaseTimings::names();
  const auto vals = t.values();
  for (std::size_t k = 0; k < names.size(); ++k) {
    out << "  " << std::left << std::setw(16) << names[k] << std::fixed << std::setprecision(4) << vals[k] << "\n";
  }
  out.unsetf(std::ios::floatfield);
}

int cmd_validate(const std::string& path, std::ostream& out) {
  const ConfigLoad load = load_config(path);
  if (load.violations.empty()) {
    out << "OK\n";
    return kExitOk;
  }
  for (const auto& v : load.violations) out << "violation: " << v << "\n";
  return kExitUsage;
}

int cmd_provider(const std::string& config, const std::string& input, int index, const std::string& seed_hex,
                 std::ostream& out) {
  const AppConfig cfg = load_valid(config);
  if (index < 1 || index > cfg.n) throw UsageError("--index must be in 1.." + std::to_string(cfg.n));
  const auto self = static_cast<std::uint16_t>(index);
  InputFile in = read_input(input);
  auto seed = seeded(seed_hex);
  std::unique_ptr<SeededRandom> stream = seed ? seed->fork(self) : nullptr;
  RandomSource& rng = stream ? static_cast<RandomSource&>(*stream) : system_random();

  std::vector<std::string> ids;
  for (const auto& r : in.records) ids.push_back(r.raw_id);
  try {
    check_identifiers(ids, cfg.m);  // before any peer is contacted
  } catch (const InputError& e) {
    throw InputError("input '" + input + "': " + e.what() + " (data rows, header excluded)");
  }

  auto t = open_network(cfg, self);
  const ProviderResult res = run_provider(cfg.settings(), self, in.records, *t, rng);
  auto f = open_out(input + ".nyms.csv");
  write_nyms(in.records, res.output, f);
  out << "provider " << index << ": " << res.output.real_count << " records linked; wrote " << input << ".nyms.csv\n";
  return kExitOk;
}

int cmd_collector(const std::string& config, const std::string& output, std::string report, std::ostream& out) {
  const AppConfig cfg = load_valid(config);
  if (output.empty() && cfg.mode != OutputMode::cardinality) throw UsageError("--output is required in this mode");
  auto t = open_network(cfg, kCollectorIndex);
  const CollectorResult res = run_collector(cfg.settings(), *t);
  out << "cardinality: " << res.result.cardinality << "\n";
  if (!output.empty()) {
    auto f = open_out(output);
    write_result(cfg, res, f);
    if (report.empty()) report = output + ".bytes.json";
  }
  if (!report.empty()) write_report(report, t->counters());
  return kExitOk;
}

int cmd_simulate(const std::string& config, const std::vector<std::string>& inputs, const std::string& output,
                 const std::string& seed_hex, std::ostream& out) {
  AppConfig cfg = load_valid(config);
  if (inputs.size() != cfg.n) {
    throw UsageError("simulate needs " + std::to_string(cfg.n) + " inputs, got " + std::to_string(inputs.size()));
  }
  std::vector<std::vector<Record>> records;
  for (std::uint16_t i = 1; i <= cfg.n; ++i) {
    InputFile f = read_input(inputs[i - 1]);
    if (!cfg.columns.contains(i)) cfg.columns[i] = csv::Row(f.header.begin() + 1, f.header.end());
    records.push_back(std::move(f.records));
  }
  auto seed = seeded(seed_hex);
  std::vector<std::unique_ptr<SeededRandom>> streams;
  std::vector<RandomSource*> rngs;
  for (std::uint16_t i = 1; i <= cfg.n; ++i) {
    if (seed) {
      streams.push_back(seed->fork(i));
      rngs.push_back(streams.back().get());
    } else {
      rngs.push_back(&system_random());
    }
  }
  const auto start = Clock::now();
  LocalRun run;
  try {
    run = run_local_session(cfg.settings(), records, rngs);
  } catch (const InputError& e) {
    throw InputError(std::string(e.what()) + " (data rows, header excluded)");
  }
  const double total = std::chrono::duration<double>(Clock::now() - start).count();
  out << "cardinality: " << run.collector.result.cardinality << "\n";
  print_timings(out, run.timings);
  out << "  " << std::left << std::setw(16) << "total" << std::fixed << std::setprecision(4) << total << "\n";
  out.unsetf(std::ios::floatfield);
  if (!output.empty()) {
    auto f = open_out(output);
    write_result(cfg, run.collector, f);
    write_report(output + ".bytes.json", run.hub->counters());
  }
  return kExitOk;
}

struct BenchArgs {
  std::vector<int> m_exps{10};
  std::vector<int> ns{3};
  std::uint32_t kappa = 128;
  std::string mode = "sika";
  int repeats = 3;
  bool unsafe = false;
  std::string json_path;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const auto mode = parse_output_mode(a.mode);
  if (!mode) throw UsageError("unknown mode '" + a.mode + "'");
  if (a.kappa != 128 && a.kappa != 256) throw UsageError("--kappa must be 128 or 256");
  if (a.repeats < 1) throw UsageError("--repeats must be at least 1");
  for (int e : a.m_exps) {
    if (e < 4 || e > 32) throw UsageError("--m exponents must be in 4..32");
    if (e > 20 && !a.unsafe) throw UsageError("m = 2^" + std::to_string(e) + " exceeds 2^20; pass --unsafe");
  }
  for (int n : a.ns)
    if (n < 2 || n > 64) throw UsageError("--n values must be in 2..64");

  nlohmann::ordered_json doc;
  doc["cells"] = nlohmann::ordered_json::array();
  out << std::left << std::setw(6) << "m" << std::setw(4) << "n" << std::setw(7) << "kappa" << std::setw(12)
      << "mean_s" << std::setw(9) << "rsd" << std::setw(14) << "P1->P2" << std::setw(14) << "P1->C"
      << "total_bytes\n";
  for (int e : a.m_exps) {
    for (int n : a.ns) {
      const std::uint64_t m = std::uint64_t{1} << e;
      const std::uint64_t common = m / 16;
      SessionSettings s;
      s.cfg.n = static_cast<std::uint16_t>(n);
      s.cfg.m = m;
      s.cfg.params = SecurityParams{a.kappa, a.kappa == 256 ? 80u : 40u};
      s.mode = *mode;
      for (std::uint16_t i = 1; i <= n; ++i) s.thresholds[i] = static_cast<std::uint32_t>(common);
      system_random().fill(s.cfg.session_id);
      const bool with_payload = payload_mode_of(*mode).has_value();
      std::vector<std::vector<Record>> inputs(n);
      for (int i = 0; i < n; ++i) {
        inputs[i].reserve(m);
        for (std::uint64_t k = 0; k < m; ++k) {
          Record r;
          r.raw_id = k < common ? "shared-" + std::to_string(k) : "p" + std::to_string(i + 1) + "-" + std::to_string(k);
          if (with_payload) r.atts.push_back(std::string(64, static_cast<char>('a' + (k % 26))));
          inputs[i].push_back(std::move(r));
        }
      }
      std::vector<RandomSource*> rngs(n, &system_random());
      std::vector<double> times;
      LocalRun last;
      for (int rep = 0; rep < a.repeats; ++rep) {
        const auto t0 = Clock::now();
        last = run_local_session(s, inputs, rngs);
        times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
        if (last.collector.result.cardinality != common) throw ProtocolError("benchmark run returned a wrong cardinality");
      }
      double mean = 0;
      for (double t : times) mean += t;
      mean /= static_cast<double>(times.size());
      double var = 0;
      for (double t : times) var += (t - mean) * (t - mean);
      const double rsd = times.size() > 1 ? std::sqrt(var / static_cast<double>(times.size() - 1)) / mean : 0.0;

      const auto& c = last.hub->counters();
      nlohmann::ordered_json cell;
      cell["m"] = m;
      cell["n"] = n;
      cell["kappa"] = a.kappa;
      cell["mode"] = a.mode;
      cell["runtime_s_mean"] = mean;
      cell["runtime_s_rsd"] = rsd;
      nlohmann::ordered_json bytes;
      for (const auto& edge : c.edges()) bytes[party_name(edge.from) + "->" + party_name(edge.to)] = edge.bytes;
      bytes["total"] = c.total();
      cell["bytes"] = bytes;
      doc["cells"].push_back(cell);
      out << std::left << std::setw(6) << ("2^" + std::to_string(e)) << std::setw(4) << n << std::setw(7) << a.kappa
          << std::setw(12) << std::fixed << std::setprecision(4) << mean << std::setw(9) << std::setprecision(3) << rsd
          << std::setw(14) << c.bytes(1, 2) << std::setw(14) << c.bytes(1, kCollectorIndex) << c.total() << "\n";
      out.unsetf(std::ios::floatfield);
    }
  }
  if (!a.json_path.empty()) {
    auto f = open_out(a.json_path);
    f << doc.dump(2) << "\n";
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  log::init();
  CLI::App cli{"Privacy-preserving record linkage across data providers and a collector", "sika-link"};
  cli.require_subcommand(1);

  std::string config, input, output, report, seed;
  int index = 0;
  std::vector<std::string> inputs;
  BenchArgs bench;

  auto* validate = cli.add_subcommand("validate", "Check a session config and list every violation");
  validate->add_option("config", config, "Config JSON")->required();

  auto* provider = cli.add_subcommand("provider", "Run one data provider");
  provider->add_option("config", config, "Config JSON")->required();
  provider->add_option("input", input, "Input CSV (identifier column first)")->required();
  provider->add_option("--index", index, "This provider's index (1..n)")->required();
  provider->add_option("--seed", seed, "Hex seed for reproducible runs")->group("");

  auto* collector = cli.add_subcommand("collector", "Run the collector");
  collector->add_option("config", config, "Config JSON")->required();
  collector->add_option("--output,-o", output, "Output CSV");
  collector->add_option("--report", report, "Byte-counter JSON (default <output>.bytes.json)");

  auto* simulate = cli.add_subcommand("simulate", "Run all parties in one process");
  simulate->add_option("config", config, "Config JSON")->required();
  simulate->add_option("--inputs", inputs, "One input CSV per provider, in index order")->required();
  simulate->add_option("--output,-o", output, "Output CSV");
  simulate->add_option("--seed", seed, "Hex seed; makes the run reproducible");

  auto* benchc = cli.add_subcommand("bench", "Measure runtime and bytes on synthetic inputs");
  benchc->add_option("--m", bench.m_exps, "Exponents e for m = 2^e")->delimiter(',');
  benchc->add_option("--n", bench.ns, "Provider counts")->delimiter(',');
  benchc->add_option("--kappa", bench.kappa, "128 or 256");
  benchc->add_option("--mode", bench.mode, "sika, cardinality, psi, payload or threshold-payload");
  benchc->add_option("--repeats", bench.repeats, "Runs per cell");
  benchc->add_flag("--unsafe", bench.unsafe, "Allow m above 2^20");
  benchc->add_option("--json", bench.json_path, "Write results as JSON");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(config, out);
    if (*provider) return cmd_provider(config, input, index, seed, out);
    if (*collector) return cmd_collector(config, output, report, out);
    if (*simulate) return cmd_simulate(config, inputs, output, seed, out);
    if (*benchc) return cmd_bench(bench, out);
  } catch (...) {
    return report_failure(std::current_exception(), err);
  }
  return kExitUsage;
}

}  // namespace sika::app
