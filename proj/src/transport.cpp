#include "sika/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <json.hpp>

#include "sika/log.hpp"

namespace sika {

// ---------------------------------------------------------------------------
// ByteCounters

namespace {

std::uint32_t order_key(std::uint16_t party) { return party == kCollectorIndex ? 0x10000u : party; }

}  // namespace

void ByteCounters::add(std::uint16_t from, std::uint16_t to, std::uint64_t bytes) {
  std::lock_guard lk(mu_);
  auto& e = map_[{from, to}];
  e.first += bytes;
  e.second += 1;
}

std::uint64_t ByteCounters::bytes(std::uint16_t from, std::uint16_t to) const {
  std::lock_guard lk(mu_);
  auto it = map_.find({from, to});
  return it == map_.end() ? 0 : it->second.first;
}

std::vector<ByteCounters::Edge> ByteCounters::edges() const {
  std::vector<Edge> out;
  {
    std::lock_guard lk(mu_);
    for (const auto& [k, v] : map_) out.push_back({k.first, k.second, v.first, v.second});
  }
  std::sort(out.begin(), out.end(), [](const Edge& a, const Edge& b) {
    return std::pair(order_key(a.from), order_key(a.to)) < std::pair(order_key(b.from), order_key(b.to));
  });
  return out;
}

std::uint64_t ByteCounters::total() const {
  std::lock_guard lk(mu_);
  std::uint64_t t = 0;
  for (const auto& [k, v] : map_) t += v.first;
  return t;
}

std::string ByteCounters::to_json() const {
  nlohmann::ordered_json j;
  j["edges"] = nlohmann::ordered_json::array();
  std::uint64_t total = 0;
  for (const Edge& e : edges()) {
    nlohmann::ordered_json row;
    row["edge"] = party_name(e.from) + "->" + party_name(e.to);
    row["bytes"] = e.bytes;
    row["frames"] = e.frames;
    j["edges"].push_back(row);
    total += e.bytes;
  }
  j["total_bytes"] = total;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Inbox

namespace detail {

void Inbox::push(std::uint16_t from, Bytes raw) {
  {
    std::lock_guard lk(mu_);
    items_.push_back({from, std::move(raw), nullptr});
  }
  cv_.notify_all();
}

void Inbox::push_error(std::uint16_t from, std::exception_ptr e) {
  {
    std::lock_guard lk(mu_);
    items_.push_back({from, {}, std::move(e)});
  }
  cv_.notify_all();
}

void Inbox::mark_closed(std::uint16_t from) {
  {
    std::lock_guard lk(mu_);
    closed_.insert(from);
  }
  cv_.notify_all();
}

Inbox::Item Inbox::pop(Clock::time_point deadline, std::span<const std::uint16_t> awaited) {
  std::unique_lock lk(mu_);
  for (;;) {
    if (!items_.empty()) {
      Item it = std::move(items_.front());
      items_.pop_front();
      if (it.error) std::rethrow_exception(it.error);
      return it;
    }
    for (std::uint16_t a : awaited) {
      if (closed_.contains(a)) {
        throw ConnectionError(party_name(a) + " closed the connection");
      }
    }
    if (cv_.wait_until(lk, deadline) == std::cv_status::timeout && items_.empty()) {
      throw SessionTimeout("timed out waiting for peers");
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// In-process transport

class InProcessEndpoint final : public Transport {
 public:
  InProcessEndpoint(std::shared_ptr<InProcessHub> hub, std::uint16_t self, std::shared_ptr<detail::Inbox> inbox)
      : hub_(std::move(hub)), self_(self), inbox_(std::move(inbox)) {}
  ~InProcessEndpoint() override { hub_->closed(self_); }

  std::uint16_t self() const override { return self_; }
  const SessionId& session() const override { return hub_->session(); }
  std::vector<std::uint16_t> peers() const override {
    std::vector<std::uint16_t> out;
    for (auto p : hub_->parties_)
      if (p != self_) out.push_back(p);
    return out;
  }

  void send(const Frame& f) override {
    if (f.sender != self_) throw UsageError("frame sender must be the local party");
    hub_->deliver(f);
  }

  Frame recv(Clock::time_point deadline, std::span<const std::uint16_t> awaited) override {
    auto item = inbox_->pop(deadline, awaited);
    Frame f = decode_frame(item.raw, hub_->session());
    if (f.receiver != self_) throw ProtocolError("frame addressed to another party");
    if (f.sender != item.from) throw ProtocolError("frame sender does not match its channel");
    return f;
  }

  const ByteCounters& counters() const override { return hub_->counters(); }

 private:
  std::shared_ptr<InProcessHub> hub_;
  std::uint16_t self_;
  std::shared_ptr<detail::Inbox> inbox_;
};

InProcessHub::InProcessHub(const SessionId& session, std::vector<std::uint16_t> parties)
    : session_(session), parties_(std::move(parties)) {
  for (auto p : parties_) inboxes_.emplace(p, std::make_shared<detail::Inbox>());
}

std::unique_ptr<Transport> InProcessHub::endpoint(std::uint16_t party) {
  auto it = inboxes_.find(party);
  if (it == inboxes_.end()) throw UsageError("unknown party " + std::to_string(party));
  return std::make_unique<InProcessEndpoint>(shared_from_this(), party, it->second);
}

void InProcessHub::set_capture(bool on) {
  std::lock_guard lk(mu_);
  capture_ = on;
}

std::vector<Frame> InProcessHub::captured() const {
  std::lock_guard lk(mu_);
  return captured_;
}

void InProcessHub::inject(std::uint16_t from, std::uint16_t receiver, Bytes raw) {
  inboxes_.at(receiver)->push(from, std::move(raw));
}

void InProcessHub::deliver(const Frame& f) {
  auto it = inboxes_.find(f.receiver);
  if (it == inboxes_.end()) throw ConnectionError("no such party " + party_name(f.receiver));
  Bytes raw = encode_frame(f);
  {
    std::lock_guard lk(mu_);
    if (gone_.contains(f.receiver)) throw ConnectionError(party_name(f.receiver) + " has left the session");
    if (capture_) captured_.push_back(f);
  }
  counters_.add(f.sender, f.receiver, raw.size());
  it->second->push(f.sender, std::move(raw));
}

void InProcessHub::closed(std::uint16_t party) {
  {
    std::lock_guard lk(mu_);
    gone_.insert(party);
  }
  for (auto& [p, inbox] : inboxes_)
    if (p != party) inbox->mark_closed(party);
}

// ---------------------------------------------------------------------------
// TCP transport

namespace {

std::pair<std::string, std::string> split_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon + 1 == address.size()) {
    throw UsageError("address must be host:port, got '" + address + "'");
  }
  std::string host = address.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  return {host, address.substr(colon + 1)};
}

struct AddrInfo {
  addrinfo* head = nullptr;
  ~AddrInfo() {
    if (head) freeaddrinfo(head);
  }
};

void resolve(const std::string& address, bool passive, AddrInfo& out) {
  auto [host, port] = split_address(address);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  const int rc = getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &out.head);
  if (rc != 0) throw ConnectionError("cannot resolve " + address + ": " + gai_strerror(rc));
}

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return static_cast<int>(std::clamp<long long>(left, 0, 1 << 30));
}

void send_all(int fd, ByteSpan data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t w = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw ConnectionError(std::string("send failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(w);
  }
}

/// Reads exactly out.size() bytes. Returns false on EOF before the first
/// byte; throws ConnectionError on EOF mid-way or on errors. A deadline
/// is honored only when `deadline` is set.
bool recv_exact(int fd, MutableByteSpan out, const Clock::time_point* deadline = nullptr) {
  std::size_t off = 0;
  while (off < out.size()) {
    if (deadline != nullptr) {
      pollfd p{fd, POLLIN, 0};
      const int rc = ::poll(&p, 1, remaining_ms(*deadline));
      if (rc == 0) throw SessionTimeout("timed out during connection handshake");
      if (rc < 0 && errno != EINTR) throw ConnectionError("poll failed");
      if (rc <= 0) continue;
    }
    const ssize_t r = ::recv(fd, out.data() + off, out.size() - off, 0);
    if (r == 0) {
      if (off == 0) return false;
      throw ConnectionError("connection closed mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      throw ConnectionError(std::string("recv failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(r);
  }
  return true;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

TcpTransport::TcpTransport(std::uint16_t self, const SessionId& session) : self_(self), session_(session) {}

TcpTransport::~TcpTransport() { close(); }

std::uint16_t TcpTransport::listen(const std::string& address) {
  AddrInfo ai;
  resolve(address, true, ai);
  for (addrinfo* a = ai.head; a != nullptr; a = a->ai_next) {
    const int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
      sockaddr_storage ss{};
      socklen_t len = sizeof ss;
      ::getsockname(fd, reinterpret_cast<sockaddr*>(&ss), &len);
      listen_fd_ = fd;
      const auto port = ss.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port
                                                 : reinterpret_cast<sockaddr_in*>(&ss)->sin_port;
      return ntohs(port);
    }
    ::close(fd);
  }
  throw ConnectionError("cannot listen on " + address + ": " + std::strerror(errno));
}

void TcpTransport::connect(const std::map<std::uint16_t, std::string>& dial, const std::set<std::uint16_t>& accept,
                           std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  if (!accept.empty() && listen_fd_ < 0) {
    throw UsageError("party " + party_name(self_) + " must listen to accept connections");
  }

  for (const auto& [peer, address] : dial) {
    int fd = -1;
    while (fd < 0) {
      AddrInfo ai;
      resolve(address, false, ai);
      for (addrinfo* a = ai.head; a != nullptr && fd < 0; a = a->ai_next) {
        const int s = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (s < 0) continue;
        if (::connect(s, a->ai_addr, a->ai_addrlen) == 0) {
          fd = s;
        } else {
          ::close(s);
        }
      }
      if (fd < 0) {
        if (Clock::now() >= deadline) throw ConnectionError("cannot connect to " + party_name(peer) + " at " + address);
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
    }
    set_nodelay(fd);
    Frame hello{MsgType::hello, session_, self_, peer, {}};
    send_all(fd, encode_frame(hello));
    auto conn = std::make_unique<Conn>();
    conn->fd = fd;
    conns_.emplace(peer, std::move(conn));
    log::debug("{} connected to {}", party_name(self_), party_name(peer));
  }

  std::set<std::uint16_t> pending = accept;
  while (!pending.empty()) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc == 0) throw SessionTimeout("timed out waiting for peers to connect");
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw ConnectionError("poll on listener failed");
    }
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    set_nodelay(fd);
    std::uint8_t hdr[kFrameHeaderBytes];
    try {
      if (!recv_exact(fd, hdr, &deadline)) throw ConnectionError("peer closed before HELLO");
      const FrameHeader h = parse_frame_header(hdr);
      if (h.type != MsgType::hello || h.body_len != 0) throw ProtocolError("expected HELLO");
      if (h.session != session_) throw ProtocolError("HELLO for a different session");
      if (h.receiver != self_ || !pending.contains(h.sender)) {
        throw ProtocolError("unexpected HELLO from " + party_name(h.sender));
      }
      auto conn = std::make_unique<Conn>();
      conn->fd = fd;
      conns_.emplace(h.sender, std::move(conn));
      pending.erase(h.sender);
      log::debug("{} accepted {}", party_name(self_), party_name(h.sender));
    } catch (...) {
      ::close(fd);
      throw;
    }
  }
  for (auto& [peer, conn] : conns_) start_reader(peer, *conn);
}

void TcpTransport::start_reader(std::uint16_t peer, Conn& c) {
  c.reader = std::thread([this, peer, fd = c.fd] {
    try {
      for (;;) {
        Bytes raw(kFrameHeaderBytes);
        if (!recv_exact(fd, raw)) break;
        const FrameHeader h = parse_frame_header(raw);
        // grow with the data actually received rather than trusting the length
        std::uint64_t left = h.body_len;
        while (left > 0) {
          const std::size_t chunk = static_cast<std::size_t>(std::min<std::uint64_t>(left, 1 << 20));
          const std::size_t off = raw.size();
          raw.resize(off + chunk);
          if (!recv_exact(fd, MutableByteSpan(raw).subspan(off))) throw ConnectionError("connection closed mid-frame");
          left -= chunk;
        }
        counters_.add(peer, self_, raw.size());
        inbox_.push(peer, std::move(raw));
      }
    } catch (...) {
      inbox_.push_error(peer, std::current_exception());
    }
    inbox_.mark_closed(peer);
  });
}

void TcpTransport::close() {
  for (auto& [peer, conn] : conns_) {
    if (conn->fd >= 0) ::shutdown(conn->fd, SHUT_RDWR);
  }
  for (auto& [peer, conn] : conns_) {
    if (conn->reader.joinable()) conn->reader.join();
    if (conn->fd >= 0) ::close(conn->fd);
    conn->fd = -1;
  }
  conns_.clear();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

std::vector<std::uint16_t> TcpTransport::peers() const {
  std::vector<std::uint16_t> out;
  for (const auto& [peer, conn] : conns_) out.push_back(peer);
  return out;
}

void TcpTransport::send(const Frame& f) {
  if (f.sender != self_) throw UsageError("frame sender must be the local party");
  auto it = conns_.find(f.receiver);
  if (it == conns_.end()) throw ConnectionError("no connection to " + party_name(f.receiver));
  const Bytes raw = encode_frame(f);
  {
    std::lock_guard lk(it->second->write_mu);
    send_all(it->second->fd, raw);
  }
  counters_.add(f.sender, f.receiver, raw.size());
}

Frame TcpTransport::recv(Clock::time_point deadline, std::span<const std::uint16_t> awaited) {
  auto item = inbox_.pop(deadline, awaited);
  Frame f = decode_frame(item.raw, session_);
  if (f.receiver != self_) throw ProtocolError("frame addressed to another party");
  if (f.sender != item.from) throw ProtocolError("frame sender does not match its connection");
  return f;
}

}  // namespace sika
