#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "aerotask/sink.hpp"

/// Text-datagram link to Tello-class vehicles (SDK 2.0 command set).
namespace aerotask::tello {

inline constexpr std::size_t kMaxPayload = 64;
inline constexpr int kMinDistanceCm = 20;
inline constexpr int kMaxDistanceCm = 500;
inline constexpr int kMinAngle = 1;
inline constexpr int kMaxAngle = 360;

struct CommandFrame {
  std::string payload;  // no terminator
  friend bool operator==(const CommandFrame&, const CommandFrame&) = default;
};

/// Meters become whole centimeters, degrees whole degrees. Hover encodes as
/// "stop"; the hold itself is a host-side wait. Throws UnrepresentableCommand for
/// capture (host-side), goto, tool calls and out-of-range distances or angles.
CommandFrame encode(const Command& cmd);

/// True when the command is executed on the host without a datagram.
bool host_side(const Command& cmd);

struct Response {
  bool ok = false;
  std::string text;  // verbatim, trailing CR/LF/NUL removed
  friend bool operator==(const Response&, const Response&) = default;
};
Response decode_response(std::string_view bytes);

/// Periodic "key:value;" telemetry. Field order and unknown keys are kept.
struct StateFrame {
  std::vector<std::pair<std::string, std::string>> fields;

  std::optional<std::string> get(std::string_view key) const;
  std::optional<double> number(std::string_view key) const;
  std::optional<double> battery() const { return number("bat"); }
  std::optional<double> height_cm() const { return number("h"); }
  std::optional<double> yaw() const { return number("yaw"); }
};
StateFrame parse_state(std::string_view datagram);

struct LinkConfig {
  std::string host = "192.168.10.1";
  std::uint16_t command_port = 8889;
  std::uint16_t state_port = 8890;      // local listen port
  std::uint16_t local_port = 0;         // 0: ephemeral
  std::chrono::milliseconds ack_timeout{7000};
  std::size_t chain_bound = MlvConstraints{}.l_max;

  bool valid() const { return ack_timeout.count() > 0 && chain_bound >= 1; }
};

/// Datagram endpoint seen from the host.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(std::string_view payload) = 0;
  /// Next datagram, or nullopt after `timeout`.
  virtual std::optional<std::string> receive(std::chrono::milliseconds timeout) = 0;
};

/// POSIX UDP socket bound to `local_port`, talking to host:port.
class UdpTransport : public Transport {
 public:
  UdpTransport(const std::string& host, std::uint16_t port, std::uint16_t local_port);
  ~UdpTransport() override;
  UdpTransport(const UdpTransport&) = delete;
  UdpTransport& operator=(const UdpTransport&) = delete;

  void send(std::string_view payload) override;
  std::optional<std::string> receive(std::chrono::milliseconds timeout) override;
  std::uint16_t bound_port() const;

 private:
  int fd_ = -1;
  std::vector<unsigned char> peer_;  // sockaddr_in bytes; empty for receive-only
};

/// In-memory vehicle: every sent payload is logged and answered by `reply`
/// (nullopt drops the acknowledgement). Receives never block.
class ScriptedTransport : public Transport {
 public:
  using Reply = std::function<std::optional<std::string>(const std::string& payload,
                                                         std::size_t index)>;
  explicit ScriptedTransport(Reply reply) : reply_(std::move(reply)) {}
  /// Answers "ok" to everything.
  ScriptedTransport();

  void send(std::string_view payload) override;
  std::optional<std::string> receive(std::chrono::milliseconds timeout) override;

  const std::vector<std::string>& sent() const { return sent_; }
  std::size_t count(std::string_view payload) const;

 private:
  Reply reply_;
  std::vector<std::string> sent_;
  std::deque<std::string> pending_;
};

enum class AckStatus { ok, error, timeout, aborted };
std::string_view to_string(AckStatus s);

struct CommandOutcome {
  std::string payload;  // empty for host-side commands
  AckStatus status = AckStatus::aborted;
  std::string text;
};

struct SendResult {
  std::vector<CommandOutcome> outcomes;  // one per MLV command
  bool ok = false;
  bool failsafe_sent = false;
};

/// One vehicle session over a transport it does not own. Stop-and-wait: at most
/// one unacknowledged datagram in flight.
class LinkSession {
 public:
  using Wait = std::function<void(double seconds)>;
  LinkSession(Transport& transport, LinkConfig config, Wait wait = {});

  /// Sends "command" and requires "ok" (HandshakeFailed otherwise).
  void open();
  bool is_open() const { return open_; }

  /// Throws PreconditionViolation when the session is closed, the MLV fails
  /// validation or exceeds the chain bound; UnrepresentableCommand when a
  /// command cannot be encoded. Both before any datagram leaves. A timeout or
  /// an error reply aborts the rest and lands once.
  SendResult send_mlv(const MachineLanguageVector& mlv, const MlvConstraints& c = {});

  /// Sends "land" unless this run already did.
  void failsafe();
  std::size_t failsafe_count() const { return failsafes_; }

 private:
  Response exchange(const std::string& payload, AckStatus& status);

  Transport& transport_;
  LinkConfig config_;
  Wait wait_;
  bool open_ = false;
  bool landed_by_failsafe_ = false;
  std::size_t failsafes_ = 0;
};

/// Single-consumer queue between a reader thread and its owner.
template <typename T>
class Channel {
 public:
  void push(T value) {
    {
      std::lock_guard lock(mutex_);
      items_.push_back(std::move(value));
    }
    cv_.notify_one();
  }
  std::optional<T> pop(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    if (!cv_.wait_for(lock, timeout, [&] { return !items_.empty(); })) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }
  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<T> items_;
};

/// Reads state datagrams on its own thread until destroyed.
class TelemetryListener {
 public:
  TelemetryListener(Transport& source, Channel<StateFrame>& out);
  ~TelemetryListener();

 private:
  std::jthread thread_;
};

/// Command sink backed by a link session. Pose is dead-reckoned from the
/// acknowledged commands because the vehicle reports no position.
class TelloSink : public CommandSink {
 public:
  TelloSink(LinkSession& link, Pose start, MlvConstraints c = {});

  bool ready() const override { return link_.is_open(); }
  SegmentOutcome dispatch(const MachineLanguageVector& mlv) override;
  Pose pose() const override { return pose_; }
  void failsafe() override;

 private:
  LinkSession& link_;
  Pose pose_;
  MlvConstraints constraints_;
};

/// Splits moves longer than the link allows into equal representable legs.
std::vector<Command> split_long_moves(const std::vector<Command>& commands);

}  // namespace aerotask::tello
