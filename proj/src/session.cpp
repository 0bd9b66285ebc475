#include "sika/session.hpp"

#include <algorithm>
#include <exception>
#include <thread>

#include "sika/log.hpp"

namespace sika {

const char* output_mode_name(OutputMode m) {
  switch (m) {
    case OutputMode::sika: return "sika";
    case OutputMode::cardinality: return "cardinality";
    case OutputMode::psi: return "psi";
    case OutputMode::payload: return "payload";
    case OutputMode::threshold_payload: return "threshold-payload";
  }
  return "?";
}

std::optional<OutputMode> parse_output_mode(const std::string& s) {
  for (OutputMode m : {OutputMode::sika, OutputMode::cardinality, OutputMode::psi, OutputMode::payload,
                       OutputMode::threshold_payload}) {
    if (s == output_mode_name(m)) return m;
  }
  return std::nullopt;
}

std::optional<PayloadMode> payload_mode_of(OutputMode m) {
  switch (m) {
    case OutputMode::psi: return PayloadMode::psi_id;
    case OutputMode::payload: return PayloadMode::payload;
    case OutputMode::threshold_payload: return PayloadMode::threshold_payload;
    default: return std::nullopt;
  }
}

const std::vector<std::string>& PhaseTimings::names() {
  static const std::vector<std::string> n{"provider_init", "okvs_encode", "decode_finalize",
                                          "unblind",       "intersect",   "join"};
  return n;
}

std::vector<double> PhaseTimings::values() const {
  return {provider_init, okvs_encode, decode_finalize, unblind, intersect, join};
}

namespace {

class Stopwatch {
 public:
  double lap() {
    const auto now = Clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  Clock::time_point last_ = Clock::now();
};

Frame make_frame(const SessionSettings& s, MsgType type, std::uint16_t from, std::uint16_t to, Bytes body = {}) {
  return Frame{type, s.cfg.session_id, from, to, std::move(body)};
}

void broadcast_abort(const SessionSettings& s, Transport& t, const std::string& reason) {
  for (std::uint16_t peer : t.peers()) {
    try {
      t.send(make_frame(s, MsgType::abort, t.self(), peer, Bytes(reason.begin(), reason.end())));
    } catch (const std::exception&) {
      // best effort: the peer may already be gone
    }
  }
}

[[noreturn]] void aborted_by(const Frame& f) {
  throw SessionAborted(party_name(f.sender) + " aborted the session: " + std::string(f.body.begin(), f.body.end()));
}

[[noreturn]] void unexpected(const Frame& f) {
  throw ProtocolError(std::string("unexpected ") + msg_type_name(f.type) + " frame from " + party_name(f.sender));
}

template <typename Fn>
auto guarded(const SessionSettings& s, Transport& t, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    log::warn("{}: session failed: {}", party_name(t.self()), e.what());
    broadcast_abort(s, t, e.what());
    throw;
  }
}

std::vector<std::string> raw_ids(const std::vector<Record>& records) {
  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.raw_id);
  return ids;
}

}  // namespace

ProviderResult run_provider(const SessionSettings& s, std::uint16_t index, const std::vector<Record>& records,
                            Transport& t, RandomSource& rng) {
  return guarded(s, t, [&] {
    const auto deadline = Clock::now() + s.timeout;
    const std::uint16_t n = s.cfg.n;
    ProviderResult res;
    Stopwatch sw;

    Provider prov(s.cfg, index, raw_ids(records), rng);
    res.timings.provider_init = sw.lap();

    for (std::uint16_t j = 1; j <= n; ++j) {
      if (j == index) continue;
      t.send(make_frame(s, MsgType::okvs, index, j, prov.build_okvs_for(j, rng).serialize()));
    }
    res.timings.okvs_encode = sw.lap();

    std::map<std::uint16_t, OkvsTable> tables;
    while (tables.size() + 1 < n) {
      std::vector<std::uint16_t> awaited;
      for (std::uint16_t j = 1; j <= n; ++j)
        if (j != index && !tables.contains(j)) awaited.push_back(j);
      const Frame f = t.recv(deadline, awaited);
      if (f.type == MsgType::abort) aborted_by(f);
      if (f.type != MsgType::okvs || f.sender == kCollectorIndex || f.sender > n) unexpected(f);
      if (tables.contains(f.sender)) {
        log::info("P{}: ignoring repeated OKVS from {}", index, party_name(f.sender));
        continue;
      }
      tables.emplace(f.sender, OkvsTable::parse(f.body));
    }
    sw.lap();

    auto [out, bmsg] = prov.finalize(tables, rng);
    t.send(make_frame(s, MsgType::bmsg, index, kCollectorIndex, bmsg.serialize()));
    if (auto pm = payload_mode_of(s.mode)) {
      std::optional<ThresholdPolicy> policy;
      if (*pm == PayloadMode::threshold_payload) {
        auto it = s.thresholds.find(index);
        if (it == s.thresholds.end()) throw UsageError("no threshold configured for provider " + std::to_string(index));
        policy = ThresholdPolicy{it->second, s.cfg.m};
      }
      const PayloadMessage msg = encrypt_payload(out, records, *pm, policy, rng, s.pad_bucket);
      t.send(make_frame(s, MsgType::payload, index, kCollectorIndex, msg.serialize()));
    }
    res.timings.decode_finalize = sw.lap();

    const std::uint16_t collector[] = {kCollectorIndex};
    for (;;) {
      const Frame f = t.recv(deadline, collector);
      if (f.type == MsgType::abort) aborted_by(f);
      if (f.type == MsgType::done && f.sender == kCollectorIndex) break;
      if (f.type == MsgType::okvs && f.sender != kCollectorIndex && f.sender <= n) {
        log::info("P{}: ignoring repeated OKVS from {}", index, party_name(f.sender));
        continue;
      }
      unexpected(f);
    }
    res.output = std::move(out);
    return res;
  });
}

CollectorResult run_collector(const SessionSettings& s, Transport& t) {
  return guarded(s, t, [&] {
    const auto deadline = Clock::now() + s.timeout;
    const std::uint16_t n = s.cfg.n;
    const auto pm = payload_mode_of(s.mode);
    CollectorResult res;

    Collector col(s.cfg);
    std::map<std::uint16_t, PayloadMessage> payloads;
    auto complete = [&](std::uint16_t i) { return col.has_message(i) && (!pm || payloads.contains(i)); };
    for (;;) {
      std::vector<std::uint16_t> awaited;
      for (std::uint16_t i = 1; i <= n; ++i)
        if (!complete(i)) awaited.push_back(i);
      if (awaited.empty()) break;
      const Frame f = t.recv(deadline, awaited);
      if (f.type == MsgType::abort) aborted_by(f);
      if (f.sender == kCollectorIndex || f.sender > n) unexpected(f);
      if (f.type == MsgType::bmsg) {
        col.absorb(f.sender, BMessage::parse(f.body));
      } else if (f.type == MsgType::payload && pm) {
        PayloadMessage msg = PayloadMessage::parse(f.body, s.cfg.params.kappa);
        if (msg.mode != *pm) throw ProtocolError("payload from " + party_name(f.sender) + " uses the wrong mode");
        if (*pm == PayloadMode::threshold_payload) {
          auto it = s.thresholds.find(f.sender);
          if (it == s.thresholds.end() || it->second != msg.t) {
            throw ProtocolError("payload from " + party_name(f.sender) + " carries an unexpected threshold");
          }
        }
        if (!payloads.emplace(f.sender, std::move(msg)).second) {
          log::info("ignoring repeated payload from {}", party_name(f.sender));
        }
      } else {
        unexpected(f);
      }
    }

    Stopwatch sw;
    const auto nyms = col.unblind();
    res.timings.unblind = sw.lap();
    res.result = col.intersect(nyms);
    res.timings.intersect = sw.lap();
    if (pm) res.joined = collector_join(res.result, payloads, *pm);
    res.timings.join = sw.lap();

    for (std::uint16_t i = 1; i <= n; ++i) {
      try {
        t.send(make_frame(s, MsgType::done, kCollectorIndex, i));
      } catch (const ConnectionError& e) {
        log::warn("could not send DONE to {}: {}", party_name(i), e.what());
      }
    }
    return res;
  });
}

LocalRun run_local_session(const SessionSettings& s, const std::vector<std::vector<Record>>& inputs,
                           const std::vector<RandomSource*>& rngs, bool capture) {
  const std::uint16_t n = s.cfg.n;
  if (inputs.size() != n || rngs.size() != n) {
    throw UsageError("need one input and one random source per provider");
  }
  std::vector<std::uint16_t> parties{kCollectorIndex};
  for (std::uint16_t i = 1; i <= n; ++i) parties.push_back(i);
  LocalRun run;
  run.hub = std::make_shared<InProcessHub>(s.cfg.session_id, parties);
  run.hub->set_capture(capture);
  run.providers.resize(n);

  std::vector<std::exception_ptr> errors(n + 1);
  std::vector<std::thread> threads;
  threads.emplace_back([&] {
    try {
      auto t = run.hub->endpoint(kCollectorIndex);
      run.collector = run_collector(s, *t);
    } catch (...) {
      errors[0] = std::current_exception();
    }
  });
  for (std::uint16_t i = 1; i <= n; ++i) {
    threads.emplace_back([&, i] {
      try {
        auto t = run.hub->endpoint(i);
        run.providers[i - 1] = run_provider(s, i, inputs[i - 1], *t, *rngs[i - 1]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();

  std::exception_ptr first;
  for (const auto& e : errors) {
    if (!e) continue;
    if (!first) first = e;
    try {
      std::rethrow_exception(e);
    } catch (const SessionAborted&) {
    } catch (...) {
      std::rethrow_exception(e);
    }
  }
  if (first) std::rethrow_exception(first);

  run.timings = run.collector.timings;
  for (const auto& p : run.providers) {
    run.timings.provider_init = std::max(run.timings.provider_init, p.timings.provider_init);
    run.timings.okvs_encode = std::max(run.timings.okvs_encode, p.timings.okvs_encode);
    run.timings.decode_finalize = std::max(run.timings.decode_finalize, p.timings.decode_finalize);
  }
  return run;
}

}  // namespace sika
