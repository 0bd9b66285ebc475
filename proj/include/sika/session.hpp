#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sika/outputs.hpp"
#include "sika/sika.hpp"
#include "sika/transport.hpp"

namespace sika {

enum class OutputMode { sika, cardinality, psi, payload, threshold_payload };

/// "sika", "cardinality", "psi", "payload", "threshold-payload".
const char* output_mode_name(OutputMode m);
std::optional<OutputMode> parse_output_mode(const std::string& s);
/// The payload sub-protocol a mode runs, if any.
std::optional<PayloadMode> payload_mode_of(OutputMode m);

struct SessionSettings {
  SessionConfig cfg;
  OutputMode mode = OutputMode::sika;
  std::map<std::uint16_t, std::uint32_t> thresholds;  // threshold mode, per provider
  std::size_t pad_bucket = kDefaultPadBucket;
  std::chrono::milliseconds timeout{600'000};
};

/// Wall-clock seconds per phase. Provider phases are filled by providers,
/// the rest by the collector.
struct PhaseTimings {
  double provider_init = 0;
  double okvs_encode = 0;
  double decode_finalize = 0;
  double unblind = 0;
  double intersect = 0;
  double join = 0;

  static const std::vector<std::string>& names();
  std::vector<double> values() const;
};

struct ProviderResult {
  ProviderOutput output;
  PhaseTimings timings;
};

struct CollectorResult {
  IntersectionResult result;
  std::optional<JoinedOutput> joined;  // payload-carrying modes
  PhaseTimings timings;
};

/// Provider i: exchanges OKVS tables with every other provider, uploads
/// its blinded message (and the payload message when the mode needs one)
/// to the collector, then waits for DONE. Any failure broadcasts ABORT before rethrowing.
ProviderResult run_provider(const SessionSettings& s, std::uint16_t index, const std::vector<Record>& records,
                            Transport& t, RandomSource& rng);

/// Collector: gathers n BMessages (plus n payload messages), computes the
/// intersection and join, and sends DONE to every provider.
CollectorResult run_collector(const SessionSettings& s, Transport& t);

/// Every role of one session on its own thread over an in-process hub.
struct LocalRun {
  std::vector<ProviderResult> providers;  // index i-1
  CollectorResult collector;
  /// Provider phases take the slowest provider; the rest are the collector's.
  PhaseTimings timings;
  std::shared_ptr<InProcessHub> hub;
};

/// `rngs[i-1]` drives provider i. When a role fails, rethrows the first
/// failure that is not a propagated ABORT.
LocalRun run_local_session(const SessionSettings& s, const std::vector<std::vector<Record>>& inputs,
                           const std::vector<RandomSource*>& rngs, bool capture = false);

}  // namespace sika
