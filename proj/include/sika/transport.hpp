#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sika/wire.hpp"

namespace sika {

using Clock = std::chrono::steady_clock;

/// Frame bytes (header included) per directed edge.
class ByteCounters {
 public:
  struct Edge {
    std::uint16_t from;
    std::uint16_t to;
    std::uint64_t bytes;
    std::uint64_t frames;
  };

  void add(std::uint16_t from, std::uint16_t to, std::uint64_t bytes);
  std::uint64_t bytes(std::uint16_t from, std::uint16_t to) const;
  /// Sorted by (from, to), providers before the collector.
  std::vector<Edge> edges() const;
  std::uint64_t total() const;
  /// {"edges":[{"edge":"P1->C","bytes":N,"frames":F},...],"total_bytes":N}
  std::string to_json() const;

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::uint16_t, std::uint16_t>, std::pair<std::uint64_t, std::uint64_t>> map_;
};

/// Ordered, reliable delivery of frames between the parties of one session.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual std::uint16_t self() const = 0;
  virtual const SessionId& session() const = 0;
  virtual std::vector<std::uint16_t> peers() const = 0;

  /// f.sender must be self(). Throws ConnectionError if the peer is gone.
  virtual void send(const Frame& f) = 0;

  /// Next frame from any peer, in arrival order (FIFO per sender). Throws
  /// ProtocolError for malformed frames, ConnectionError when a peer in
  /// `awaited` has closed and nothing is queued, SessionTimeout at `deadline`.
  virtual Frame recv(Clock::time_point deadline, std::span<const std::uint16_t> awaited) = 0;

  virtual const ByteCounters& counters() const = 0;
};

namespace detail {

/// Merged arrival queue shared by the transports.
class Inbox {
 public:
  struct Item {
    std::uint16_t from = 0;  // connection the bytes arrived on
    Bytes raw;
    std::exception_ptr error;
  };

  void push(std::uint16_t from, Bytes raw);
  void push_error(std::uint16_t from, std::exception_ptr e);
  void mark_closed(std::uint16_t from);
  Item pop(Clock::time_point deadline, std::span<const std::uint16_t> awaited);

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Item> items_;
  std::set<std::uint16_t> closed_;
};

}  // namespace detail

/// Transport between threads of one process. Frames are encoded on send and
/// decoded on receive, so they exercise the same validation as TCP.
class InProcessHub : public std::enable_shared_from_this<InProcessHub> {
 public:
  InProcessHub(const SessionId& session, std::vector<std::uint16_t> parties);

  std::unique_ptr<Transport> endpoint(std::uint16_t party);

  void set_capture(bool on);
  /// Every frame sent so far, in send order (capture must be on).
  std::vector<Frame> captured() const;
  /// Delivers raw bytes to `receiver` as if sent by `from` (tests).
  void inject(std::uint16_t from, std::uint16_t receiver, Bytes raw);

  const ByteCounters& counters() const { return counters_; }
  const SessionId& session() const { return session_; }

 private:
  friend class InProcessEndpoint;
  void deliver(const Frame& f);
  void closed(std::uint16_t party);

  SessionId session_;
  std::vector<std::uint16_t> parties_;
  std::map<std::uint16_t, std::shared_ptr<detail::Inbox>> inboxes_;
  ByteCounters counters_;
  mutable std::mutex mu_;
  std::set<std::uint16_t> gone_;
  bool capture_ = false;
  std::vector<Frame> captured_;
};

/// One socket per peer with a reader thread each; arrivals merge into one
/// queue. Connection set-up: listen(), then connect() dials the peers in
/// `dial` and accepts the peers in `accept`, each side opening with HELLO.
class TcpTransport final : public Transport {
 public:
  TcpTransport(std::uint16_t self, const SessionId& session);
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  /// Binds "host:port" (port 0 picks a free one); returns the bound port.
  std::uint16_t listen(const std::string& address);
  void connect(const std::map<std::uint16_t, std::string>& dial, const std::set<std::uint16_t>& accept,
               std::chrono::milliseconds timeout);
  void close();

  std::uint16_t self() const override { return self_; }
  const SessionId& session() const override { return session_; }
  std::vector<std::uint16_t> peers() const override;
  void send(const Frame& f) override;
  Frame recv(Clock::time_point deadline, std::span<const std::uint16_t> awaited) override;
  const ByteCounters& counters() const override { return counters_; }

 private:
  struct Conn {
    int fd = -1;
    std::mutex write_mu;
    std::thread reader;
  };
  void start_reader(std::uint16_t peer, Conn& c);

  std::uint16_t self_;
  SessionId session_;
  int listen_fd_ = -1;
  std::map<std::uint16_t, std::unique_ptr<Conn>> conns_;
  detail::Inbox inbox_;
  ByteCounters counters_;
};

}  // namespace sika
