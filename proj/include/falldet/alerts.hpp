#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "falldet/detector.hpp"
#include "falldet/pose.hpp"

namespace falldet {

struct AlertEvent {
  std::string source_id;
  std::uint64_t frame_index = 0;
  std::optional<std::uint64_t> timestamp_ms;
  std::string config_digest;

  friend bool operator==(const AlertEvent&, const AlertEvent&) = default;
};

/// {"event":"fall_alert","source_id":…,"frame_index":…,"timestamp_ms":…,"config_digest":…}
nlohmann::ordered_json alert_to_json(const AlertEvent& event);

class SinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Serialized writes to a diagnostics stream shared by sink worker threads.
class ErrorLog {
 public:
  explicit ErrorLog(std::ostream& out) : out_(out) {}
  void write(const std::string& message);

 private:
  std::ostream& out_;
  std::mutex mutex_;
};

class AlertSink {
 public:
  virtual ~AlertSink() = default;
  /// May throw SinkError.
  virtual void send(const AlertEvent& event) = 0;
  /// Blocks until queued deliveries are done.
  virtual void flush() {}
  virtual std::string describe() const = 0;
};

/// One JSON line per alert on the given stream.
class StreamSink : public AlertSink {
 public:
  explicit StreamSink(std::ostream& out) : out_(out) {}
  void send(const AlertEvent& event) override;
  std::string describe() const override { return "stdout"; }

 private:
  std::ostream& out_;
};

/// Appends one JSON line per alert; the file is opened per alert.
class FileSink : public AlertSink {
 public:
  explicit FileSink(std::string path) : path_(std::move(path)) {}
  void send(const AlertEvent& event) override;
  std::string describe() const override { return "file:" + path_; }

 private:
  std::string path_;
};

struct HttpEndpoint {
  std::string host;
  int port = 80;
  std::string path = "/";
};

/// Parses http://host[:port][/path]. Throws SinkError otherwise.
HttpEndpoint parse_http_url(const std::string& url);

/// POSTs the alert JSON from a worker thread so detection is not blocked.
/// Per-sink ordering is preserved; each alert gets one retry; failures go to the log.
class WebhookSink : public AlertSink {
 public:
  static constexpr int kTimeoutSeconds = 2;
  static constexpr int kAttempts = 2;

  WebhookSink(const std::string& url, ErrorLog& log);
  ~WebhookSink() override;

  WebhookSink(const WebhookSink&) = delete;
  WebhookSink& operator=(const WebhookSink&) = delete;

  void send(const AlertEvent& event) override;
  void flush() override;
  std::string describe() const override { return "webhook:" + url_; }

  std::uint64_t delivered() const;
  std::uint64_t failed() const;

 private:
  void run();
  bool post(const std::string& body);

  std::string url_;
  HttpEndpoint endpoint_;
  ErrorLog& log_;

  mutable std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable idle_;
  std::deque<std::string> queue_;
  bool busy_ = false;
  bool stopping_ = false;
  std::uint64_t delivered_ = 0;
  std::uint64_t failed_ = 0;
  std::thread worker_;
};

/// "stdout" | "file:<path>" | "webhook:<url>". Throws SinkError on a bad spec.
std::unique_ptr<AlertSink> make_sink(const std::string& spec, std::ostream& out, ErrorLog& log);

/// Fans one alert out to every sink. A failing sink is logged and skipped.
class AlertDispatcher {
 public:
  AlertDispatcher(std::vector<std::unique_ptr<AlertSink>> sinks, ErrorLog& log)
      : sinks_(std::move(sinks)), log_(log) {}

  void dispatch(const AlertEvent& event);
  void flush();

  std::uint64_t failures() const noexcept { return failures_; }

 private:
  std::vector<std::unique_ptr<AlertSink>> sinks_;
  ErrorLog& log_;
  std::uint64_t failures_ = 0;
};

}  // namespace falldet
