#include "aerotask/tello.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>

#include "aerotask/error.hpp"

namespace aerotask::tello {

namespace {

int whole(double v) { return static_cast<int>(std::lround(v)); }

void check_payload(const std::string& p) {
  if (p.size() > kMaxPayload) {
    throw Error(Errc::UnrepresentableCommand, "payload of " + std::to_string(p.size()) + " bytes");
  }
}

std::string_view strip_tail(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == '\0')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

CommandFrame encode(const Command& cmd) {
  std::string p;
  switch (cmd.kind()) {
    case CommandKind::takeoff: p = "takeoff"; break;
    case CommandKind::land: p = "land"; break;
    case CommandKind::hover: p = "stop"; break;
    case CommandKind::move: {
      const auto& m = *cmd.as<Move>();
      const int cm = whole(m.meters * 100.0);
      if (!(m.meters >= 0.2 && m.meters <= 5.0) || cm < kMinDistanceCm || cm > kMaxDistanceCm) {
        throw Error(Errc::UnrepresentableCommand,
                    "move of " + format_number(m.meters) + " m outside [0.2, 5] m");
      }
      p = std::string(to_string(m.direction)) + " " + std::to_string(cm);
      break;
    }
    case CommandKind::rotate: {
      const double deg = cmd.as<Rotate>()->degrees;
      const int a = whole(std::fabs(deg));
      if (a < kMinAngle || a > kMaxAngle) {
        throw Error(Errc::UnrepresentableCommand,
                    "rotation of " + format_number(deg) + " degrees outside [1, 360]");
      }
      p = std::string(deg > 0 ? "ccw " : "cw ") + std::to_string(a);
      break;
    }
    case CommandKind::capture:
      throw Error(Errc::UnrepresentableCommand, "capture runs on the host");
    case CommandKind::go_to:
      throw Error(Errc::UnrepresentableCommand, "goto has no vehicle frame equivalent");
    case CommandKind::invoke_tool:
      throw Error(Errc::UnrepresentableCommand, "tool calls expand before dispatch");
  }
  check_payload(p);
  return {p};
}

bool host_side(const Command& cmd) { return cmd.kind() == CommandKind::capture; }

Response decode_response(std::string_view bytes) {
  const auto text = strip_tail(bytes);
  return {text == "ok", std::string(text)};
}

std::optional<std::string> StateFrame::get(std::string_view key) const {
  for (const auto& [k, v] : fields) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::optional<double> StateFrame::number(std::string_view key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) return std::nullopt;
  return out;
}

StateFrame parse_state(std::string_view datagram) {
  StateFrame f;
  auto rest = strip_tail(datagram);
  while (!rest.empty()) {
    const auto semi = rest.find(';');
    auto item = rest.substr(0, semi);
    rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      f.fields.emplace_back(std::string(item), std::string());
    } else {
      f.fields.emplace_back(std::string(item.substr(0, colon)), std::string(item.substr(colon + 1)));
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

UdpTransport::UdpTransport(const std::string& host, std::uint16_t port, std::uint16_t local_port) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw Error(Errc::SinkUnavailable, std::string("socket: ") + std::strerror(errno));
  sockaddr_in local{};
  local.sin_family = AF_INET;
  local.sin_addr.s_addr = htonl(INADDR_ANY);
  local.sin_port = htons(local_port);
  const int yes = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&local), sizeof local) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd_);
    throw Error(Errc::SinkUnavailable, "bind port " + std::to_string(local_port) + ": " + why);
  }
  if (!host.empty()) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_DGRAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res) {
      ::close(fd_);
      throw Error(Errc::SinkUnavailable, "cannot resolve " + host);
    }
    const auto* bytes = reinterpret_cast<const unsigned char*>(res->ai_addr);
    peer_.assign(bytes, bytes + res->ai_addrlen);
    ::freeaddrinfo(res);
  }
}

UdpTransport::~UdpTransport() {
  if (fd_ >= 0) ::close(fd_);
}

void UdpTransport::send(std::string_view payload) {
  if (peer_.empty()) throw Error(Errc::SinkUnavailable, "receive-only transport");
  const auto n = ::sendto(fd_, payload.data(), payload.size(), 0,
                          reinterpret_cast<const sockaddr*>(peer_.data()),
                          static_cast<socklen_t>(peer_.size()));
  if (n < 0) throw Error(Errc::SinkUnavailable, std::string("sendto: ") + std::strerror(errno));
}

std::optional<std::string> UdpTransport::receive(std::chrono::milliseconds timeout) {
  pollfd p{fd_, POLLIN, 0};
  const int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
  if (r <= 0) return std::nullopt;
  char buf[2048];
  const auto n = ::recv(fd_, buf, sizeof buf, 0);
  if (n < 0) return std::nullopt;
  return std::string(buf, static_cast<std::size_t>(n));
}

std::uint16_t UdpTransport::bound_port() const {
  sockaddr_in a{};
  socklen_t len = sizeof a;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&a), &len);
  return ntohs(a.sin_port);
}

ScriptedTransport::ScriptedTransport()
    : reply_([](const std::string&, std::size_t) { return std::optional<std::string>("ok"); }) {}

void ScriptedTransport::send(std::string_view payload) {
  sent_.emplace_back(payload);
  if (auto r = reply_(sent_.back(), sent_.size() - 1)) pending_.push_back(std::move(*r));
}

std::optional<std::string> ScriptedTransport::receive(std::chrono::milliseconds) {
  if (pending_.empty()) return std::nullopt;
  auto r = std::move(pending_.front());
  pending_.pop_front();
  return r;
}

std::size_t ScriptedTransport::count(std::string_view payload) const {
  return static_cast<std::size_t>(std::count(sent_.begin(), sent_.end(), payload));
}

// ---------------------------------------------------------------------------
// Session
// ---------------------------------------------------------------------------

std::string_view to_string(AckStatus s) {
  switch (s) {
    case AckStatus::ok: return "ok";
    case AckStatus::error: return "error";
    case AckStatus::timeout: return "timeout";
    case AckStatus::aborted: return "aborted";
  }
  return "?";
}

LinkSession::LinkSession(Transport& transport, LinkConfig config, Wait wait)
    : transport_(transport), config_(std::move(config)), wait_(std::move(wait)) {
  if (!config_.valid()) throw Error(Errc::BadParameter, "link timeout and chain bound must be positive");
  if (!wait_) {
    wait_ = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
  }
}

Response LinkSession::exchange(const std::string& payload, AckStatus& status) {
  // Late acknowledgements from an earlier timeout must not answer this command.
  while (transport_.receive(std::chrono::milliseconds(0))) {
  }
  transport_.send(payload);
  auto reply = transport_.receive(config_.ack_timeout);
  if (!reply) {
    status = AckStatus::timeout;
    return {false, "no acknowledgement within " + std::to_string(config_.ack_timeout.count()) + " ms"};
  }
  auto r = decode_response(*reply);
  status = r.ok ? AckStatus::ok : AckStatus::error;
  return r;
}

void LinkSession::open() {
  AckStatus st{};
  const auto r = exchange("command", st);
  if (st != AckStatus::ok) throw Error(Errc::HandshakeFailed, r.text);
  open_ = true;
}

SendResult LinkSession::send_mlv(const MachineLanguageVector& mlv, const MlvConstraints& c) {
  if (!open_) throw Error(Errc::PreconditionViolation, "link session not opened");
  if (auto v = validate_mlv(mlv, c); !v.accepted()) {
    throw Error(Errc::PreconditionViolation,
                "segment rejected (" + std::string(to_string(v.rule)) + "): " + v.detail);
  }
  if (mlv.size() > config_.chain_bound) {
    throw Error(Errc::PreconditionViolation, std::to_string(mlv.size()) +
                                                 " commands exceed the chain bound of " +
                                                 std::to_string(config_.chain_bound));
  }
  std::vector<std::string> payloads;
  for (const auto& cmd : mlv.commands) {
    payloads.push_back(host_side(cmd) ? std::string() : encode(cmd).payload);
  }

  landed_by_failsafe_ = false;
  SendResult res;
  res.outcomes.resize(mlv.size());
  for (std::size_t i = 0; i < mlv.size(); ++i) {
    auto& o = res.outcomes[i];
    o.payload = payloads[i];
    if (payloads[i].empty()) {
      o.status = AckStatus::ok;
      o.text = "host";
      continue;
    }
    const auto r = exchange(payloads[i], o.status);
    o.text = r.text;
    if (o.status != AckStatus::ok) {
      failsafe();
      res.failsafe_sent = true;
      return res;  // the rest stay aborted
    }
    if (const auto* h = mlv.commands[i].as<Hover>()) wait_(h->seconds);
  }
  res.ok = true;
  return res;
}

void LinkSession::failsafe() {
  if (landed_by_failsafe_) return;
  landed_by_failsafe_ = true;
  ++failsafes_;
  AckStatus st{};
  exchange("land", st);
}

TelemetryListener::TelemetryListener(Transport& source, Channel<StateFrame>& out)
    : thread_([&source, &out](std::stop_token stop) {
        while (!stop.stop_requested()) {
          if (auto d = source.receive(std::chrono::milliseconds(50))) out.push(parse_state(*d));
        }
      }) {}

TelemetryListener::~TelemetryListener() {
  thread_.request_stop();
}

// ---------------------------------------------------------------------------
// Sink
// ---------------------------------------------------------------------------

TelloSink::TelloSink(LinkSession& link, Pose start, MlvConstraints c)
    : link_(link), pose_(start), constraints_(c) {}

SegmentOutcome TelloSink::dispatch(const MachineLanguageVector& mlv) {
  SegmentOutcome out;
  SendResult res;
  try {
    res = link_.send_mlv(mlv, constraints_);
  } catch (const Error& e) {
    out.cause = e.what();
    for (std::size_t i = 0; i < mlv.size(); ++i) out.acks.push_back({i, false, "unsent"});
    return out;
  }
  for (std::size_t i = 0; i < res.outcomes.size(); ++i) {
    const auto& o = res.outcomes[i];
    const bool ok = o.status == AckStatus::ok;
    out.acks.push_back({i, ok, ok ? o.text : std::string(to_string(o.status)) + ": " + o.text});
    if (!ok) {
      if (out.cause.empty()) {
        out.cause = o.status == AckStatus::timeout
                        ? Error(Errc::LinkTimeout, o.payload + ": " + o.text).what()
                        : o.payload + ": " + o.text;
      }
      continue;
    }
    const auto& cmd = mlv.commands[i];
    if (const auto* m = cmd.as<Move>()) {
      pose_.position = pose_.position + body_axis(pose_.yaw_deg, m->direction) * m->meters;
    } else if (const auto* r = cmd.as<Rotate>()) {
      pose_.yaw_deg = std::remainder(pose_.yaw_deg + r->degrees, 360.0);
    } else if (cmd.kind() == CommandKind::takeoff) {
      pose_.position.z = 0.8;  // vendor auto-takeoff height
    } else if (cmd.kind() == CommandKind::land) {
      pose_.position.z = 0.0;
    } else if (const auto* c = cmd.as<Capture>()) {
      out.photos.push_back({c->target, false, 0.0, pose_.position});
    }
  }
  if (res.failsafe_sent) pose_.position.z = 0.0;
  out.ok = res.ok;
  return out;
}

void TelloSink::failsafe() {
  link_.failsafe();
  pose_.position.z = 0.0;
}

std::vector<Command> split_long_moves(const std::vector<Command>& commands) {
  std::vector<Command> out;
  for (const auto& cmd : commands) {
    const auto* m = cmd.as<Move>();
    if (!m || m->meters <= 5.0) {
      out.push_back(cmd);
      continue;
    }
    const int legs = static_cast<int>(std::ceil(m->meters / 5.0));
    // Whole centimeters so the legs sum back to the original distance.
    const int total_cm = whole(m->meters * 100.0);
    for (int i = 0; i < legs; ++i) {
      const int cm = total_cm / legs + (i < total_cm % legs ? 1 : 0);
      out.push_back(Command::move(m->direction, cm / 100.0));
    }
  }
  return out;
}

}  // namespace aerotask::tello
