#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sika/session.hpp"

namespace sika {

struct PartyEntry {
  std::uint16_t index = 0;  // collector: 0
  bool collector = false;
  std::string listen;       // "host:port", empty if the party only dials
  std::optional<std::vector<std::uint16_t>> dial;
};

/// Session configuration file shared by all parties.
struct AppConfig {
  SessionId session_id{};
  std::uint32_t kappa = 128;
  std::uint32_t lambda = 40;
  std::uint16_t n = 0;
  std::uint64_t m = 0;
  std::vector<PartyEntry> parties;
  OutputMode mode = OutputMode::sika;
  std::map<std::uint16_t, std::uint32_t> thresholds;
  std::size_t pad_bucket = kDefaultPadBucket;
  double timeout_s = 600;
  std::string description;  // free text, carried as is
  /// Optional attribute column names per provider, used for output headers.
  std::map<std::uint16_t, std::vector<std::string>> columns;

  SessionSettings settings() const;
  const PartyEntry* party(std::uint16_t index) const;

  /// Peers `self` dials (index -> address) and peers it accepts. Without an
  /// explicit dial list, a party dials every lower index (collector = 0).
  std::map<std::uint16_t, std::string> dial_targets(std::uint16_t self) const;
  std::set<std::uint16_t> accept_from(std::uint16_t self) const;
};

struct ConfigLoad {
  AppConfig config;
  std::vector<std::string> violations;  // empty iff valid
};

/// Parses and validates. Throws UsageError when the file is unreadable or
/// not JSON; every semantic problem becomes a violation instead.
ConfigLoad load_config(const std::string& path);
ConfigLoad parse_config(const std::string& json_text);

/// SHA-256 hex of the compact serialization with "checksum" removed.
std::string config_checksum(const std::string& json_text);

}  // namespace sika
