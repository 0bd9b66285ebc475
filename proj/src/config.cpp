#include "sika/config.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "sika/wire.hpp"

namespace sika {

using nlohmann::json;

namespace {

class Reader {
 public:
  Reader(const json& j, std::vector<std::string>& v) : j_(j), v_(v) {}

  template <typename T>
  std::optional<T> get(const char* key, bool required) {
    if (!j_.contains(key)) {
      if (required) v_.push_back(std::string("missing field '") + key + "'");
      return std::nullopt;
    }
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      v_.push_back(std::string("field '") + key + "' has the wrong type");
      return std::nullopt;
    }
  }

 private:
  const json& j_;
  std::vector<std::string>& v_;
};

std::optional<std::uint16_t> parse_index(const std::string& s) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(s, &used);
    if (used != s.size() || v > 0xffff) return std::nullopt;
    return static_cast<std::uint16_t>(v);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

bool valid_address(const std::string& a) {
  const auto colon = a.rfind(':');
  if (colon == std::string::npos || colon + 1 == a.size()) return false;
  const auto port = parse_index(a.substr(colon + 1));
  return port.has_value();
}

void check_topology(const AppConfig& c, std::vector<std::string>& v) {
  std::set<std::uint16_t> known;
  for (const auto& p : c.parties) known.insert(p.index);
  std::map<std::pair<std::uint16_t, std::uint16_t>, int> links;
  for (const auto& p : c.parties) {
    if (!p.dial) continue;
    for (std::uint16_t d : *p.dial) {
      if (!known.contains(d) || d == p.index) {
        v.push_back(party_name(p.index) + " dials unknown party " + std::to_string(d));
        continue;
      }
      const PartyEntry* target = c.party(d);
      if (target->listen.empty()) v.push_back(party_name(p.index) + " dials " + party_name(d) + " which does not listen");
    }
  }
  for (const auto& a : c.parties) {
    for (const auto& [peer, addr] : c.dial_targets(a.index)) ++links[{std::min(a.index, peer), std::max(a.index, peer)}];
  }
  for (const auto& a : c.parties) {
    for (const auto& b : c.parties) {
      if (a.index >= b.index) continue;
      const int k = links[{a.index, b.index}];
      if (k != 1) {
        v.push_back("parties " + party_name(a.index) + " and " + party_name(b.index) +
                    (k == 0 ? " are not connected" : " dial each other"));
      } else {
        for (std::uint16_t side : {a.index, b.index}) {
          const std::uint16_t other = side == a.index ? b.index : a.index;
          if (c.dial_targets(other).contains(side) && c.party(side)->listen.empty()) {
            v.push_back(party_name(side) + " must listen to accept " + party_name(other));
          }
        }
      }
    }
  }
}

}  // namespace

SessionSettings AppConfig::settings() const {
  SessionSettings s;
  s.cfg.session_id = session_id;
  s.cfg.n = n;
  s.cfg.m = m;
  s.cfg.params = SecurityParams{kappa, lambda};
  s.mode = mode;
  s.thresholds = thresholds;
  s.pad_bucket = pad_bucket;
  s.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000));
  return s;
}

const PartyEntry* AppConfig::party(std::uint16_t index) const {
  for (const auto& p : parties)
    if (p.index == index) return &p;
  return nullptr;
}

std::map<std::uint16_t, std::string> AppConfig::dial_targets(std::uint16_t self) const {
  std::map<std::uint16_t, std::string> out;
  const PartyEntry* me = party(self);
  if (me == nullptr) return out;
  if (me->dial) {
    for (std::uint16_t d : *me->dial)
      if (const PartyEntry* t = party(d); t != nullptr && d != self) out[d] = t->listen;
    return out;
  }
  for (const auto& p : parties)
    if (p.index < self) out[p.index] = p.listen;
  return out;
}

std::set<std::uint16_t> AppConfig::accept_from(std::uint16_t self) const {
  std::set<std::uint16_t> out;
  for (const auto& p : parties)
    if (p.index != self && dial_targets(p.index).contains(self)) out.insert(p.index);
  return out;
}

std::string config_checksum(const std::string& json_text) {
  json j = json::parse(json_text);
  j.erase("checksum");
  const std::string compact = j.dump();
  return to_hex(sha256(ByteSpan(reinterpret_cast<const std::uint8_t*>(compact.data()), compact.size())));
}

ConfigLoad parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");

  ConfigLoad load;
  auto& v = load.violations;
  AppConfig& c = load.config;
  Reader r(j, v);

  if (auto sid = r.get<std::string>("session_id", true)) {
    if (sid->size() != 32) {
      v.push_back("session_id must be 32 hex characters");
    } else {
      try {
        const Bytes b = from_hex(*sid);
        std::copy(b.begin(), b.end(), c.session_id.begin());
      } catch (const UsageError&) {
        v.push_back("session_id must be 32 hex characters");
      }
    }
  }
  if (auto k = r.get<std::uint32_t>("kappa", true)) c.kappa = *k;
  if (auto l = r.get<std::uint32_t>("lambda", false)) {
    c.lambda = *l;
  } else {
    c.lambda = c.kappa == 256 ? 80 : 40;
  }
  try {
    SecurityParams{c.kappa, c.lambda}.validate();
  } catch (const UsageError& e) {
    v.push_back(std::string("kappa/lambda: ") + e.what());
  }
  if (auto n = r.get<std::uint32_t>("n", true)) {
    if (*n < 2 || *n > 0xfffe) v.push_back("n must be between 2 and 65534");
    c.n = static_cast<std::uint16_t>(std::min<std::uint32_t>(*n, 0xffff));
  }
  if (auto m = r.get<std::uint64_t>("m", true)) {
    if (*m < 1 || *m > (std::uint64_t{1} << 32)) v.push_back("m must be between 1 and 2^32");
    c.m = *m;
  }
  if (auto mode = r.get<std::string>("mode", true)) {
    if (auto om = parse_output_mode(*mode)) {
      c.mode = *om;
    } else {
      v.push_back("unknown mode '" + *mode + "'");
    }
  }
  if (auto pb = r.get<std::int64_t>("pad_bucket", false)) {
    if (*pb < 1) v.push_back("pad_bucket must be positive");
    c.pad_bucket = static_cast<std::size_t>(std::max<std::int64_t>(*pb, 1));
  }
  if (auto to = r.get<double>("timeout_s", false)) {
    if (!(*to > 0)) v.push_back("timeout_s must be positive");
    c.timeout_s = *to;
  }
  if (auto d = r.get<std::string>("description", false)) c.description = *d;

  // parties
  if (auto ps = r.get<json>("parties", true)) {
    if (!ps->is_array()) {
      v.push_back("parties must be a list");
    } else {
      int collectors = 0;
      std::set<std::uint16_t> seen;
      for (const auto& pj : *ps) {
        if (!pj.is_object()) {
          v.push_back("each party must be an object");
          continue;
        }
        Reader pr(pj, v);
        PartyEntry p;
        const auto role = pr.get<std::string>("role", true);
        if (role && *role != "provider" && *role != "collector") v.push_back("unknown role '" + *role + "'");
        p.collector = role && *role == "collector";
        if (p.collector) {
          ++collectors;
          if (auto idx = pr.get<std::uint32_t>("index", false); idx && *idx != 0) {
            v.push_back("the collector's index must be 0 or omitted");
          }
          p.index = kCollectorIndex;
        } else if (auto idx = pr.get<std::uint32_t>("index", true)) {
          if (*idx < 1 || *idx > c.n) v.push_back("provider index " + std::to_string(*idx) + " is outside 1..n");
          p.index = static_cast<std::uint16_t>(std::min<std::uint32_t>(*idx, 0xffff));
        } else {
          continue;
        }
        if (auto l = pr.get<std::string>("listen", false)) {
          p.listen = *l;
          if (!p.listen.empty() && !valid_address(p.listen)) {
            v.push_back(party_name(p.index) + " listen address must be host:port");
          }
        }
        if (auto d = pr.get<std::vector<std::uint16_t>>("dial", false)) p.dial = *d;
        if (!seen.insert(p.index).second) {
          if (!p.collector) v.push_back("provider index " + std::to_string(p.index) + " appears twice");
          continue;
        }
        c.parties.push_back(p);
      }
      if (collectors != 1) v.push_back("exactly one collector is required, found " + std::to_string(collectors));
      for (std::uint16_t i = 1; i <= c.n && c.n <= 0xfffe; ++i) {
        if (!seen.contains(i)) v.push_back("provider " + std::to_string(i) + " is missing from parties");
      }
      // Configs without any addresses are valid for single-process use only.
      const bool networked = std::any_of(c.parties.begin(), c.parties.end(),
                                         [](const PartyEntry& p) { return !p.listen.empty() || p.dial; });
      if (networked) check_topology(c, v);
    }
  }

  // thresholds
  const bool threshold_mode = c.mode == OutputMode::threshold_payload;
  if (j.contains("thresholds")) {
    if (!threshold_mode) v.push_back("thresholds are only allowed in threshold-payload mode");
    if (auto th = r.get<std::map<std::string, std::uint32_t>>("thresholds", false)) {
      for (const auto& [k, t] : *th) {
        const auto idx = parse_index(k);
        if (!idx || *idx < 1 || *idx > c.n) {
          v.push_back("threshold for unknown provider '" + k + "'");
          continue;
        }
        if (t < 1 || t > c.m) v.push_back("threshold for provider " + k + " must be in 1..m");
        c.thresholds[*idx] = t;
      }
    }
  }
  if (threshold_mode) {
    for (std::uint16_t i = 1; i <= c.n && c.n <= 0xfffe; ++i)
      if (!c.thresholds.contains(i)) v.push_back("no threshold for provider " + std::to_string(i));
  }

  if (auto cols = r.get<std::map<std::string, std::vector<std::string>>>("columns", false)) {
    for (const auto& [k, names] : *cols) {
      const auto idx = parse_index(k);
      if (!idx || *idx < 1 || *idx > c.n) {
        v.push_back("columns for unknown provider '" + k + "'");
        continue;
      }
      c.columns[*idx] = names;
    }
  }

  if (auto sum = r.get<std::string>("checksum", false)) {
    if (*sum != config_checksum(text)) v.push_back("checksum does not match the configuration");
  }
  return load;
}

ConfigLoad load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace sika
