#include "falldet/alerts.hpp"

#include <fstream>
#include <regex>

#include <httplib.h>

namespace falldet {

nlohmann::ordered_json alert_to_json(const AlertEvent& event) {
  nlohmann::ordered_json doc;
  doc["event"] = "fall_alert";
  doc["source_id"] = event.source_id;
  doc["frame_index"] = event.frame_index;
  doc["timestamp_ms"] = event.timestamp_ms ? nlohmann::ordered_json(*event.timestamp_ms) : nlohmann::ordered_json();
  doc["config_digest"] = event.config_digest;
  return doc;
}

void ErrorLog::write(const std::string& message) {
  std::lock_guard lock(mutex_);
  out_ << message << '\n';
  out_.flush();
}

void StreamSink::send(const AlertEvent& event) {
  out_ << alert_to_json(event).dump() << '\n';
  out_.flush();
  if (!out_) throw SinkError("stdout sink: write failed");
}

void FileSink::send(const AlertEvent& event) {
  std::ofstream out(path_, std::ios::app);
  if (!out) throw SinkError("file sink: cannot open '" + path_ + "'");
  out << alert_to_json(event).dump() << '\n';
  out.flush();
  if (!out) throw SinkError("file sink: write to '" + path_ + "' failed");
}

HttpEndpoint parse_http_url(const std::string& url) {
  static const std::regex pattern(R"(^http://([^/:]+)(?::(\d{1,5}))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, pattern)) {
    throw SinkError("webhook url must look like http://host[:port][/path], got '" + url + "'");
  }
  HttpEndpoint ep;
  ep.host = m[1].str();
  if (m[2].matched) ep.port = std::stoi(m[2].str());
  if (m[3].matched) ep.path = m[3].str();
  if (ep.port < 1 || ep.port > 65535) throw SinkError("webhook port out of range in '" + url + "'");
  return ep;
}

WebhookSink::WebhookSink(const std::string& url, ErrorLog& log)
    : url_(url), endpoint_(parse_http_url(url)), log_(log) {
  worker_ = std::thread([this] { run(); });
}

WebhookSink::~WebhookSink() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void WebhookSink::send(const AlertEvent& event) {
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(alert_to_json(event).dump());
  }
  wake_.notify_one();
}

void WebhookSink::flush() {
  std::unique_lock lock(mutex_);
  idle_.wait(lock, [this] { return queue_.empty() && !busy_; });
}

std::uint64_t WebhookSink::delivered() const {
  std::lock_guard lock(mutex_);
  return delivered_;
}

std::uint64_t WebhookSink::failed() const {
  std::lock_guard lock(mutex_);
  return failed_;
}

bool WebhookSink::post(const std::string& body) {
  httplib::Client client(endpoint_.host, endpoint_.port);
  client.set_connection_timeout(kTimeoutSeconds, 0);
  client.set_read_timeout(kTimeoutSeconds, 0);
  client.set_write_timeout(kTimeoutSeconds, 0);
  for (int attempt = 1; attempt <= kAttempts; ++attempt) {
    auto res = client.Post(endpoint_.path, body, "application/json");
    if (res && res->status >= 200 && res->status < 300) return true;
    const std::string why = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    log_.write("warning: " + describe() + " attempt " + std::to_string(attempt) + " failed: " + why);
  }
  return false;
}

void WebhookSink::run() {
  std::unique_lock lock(mutex_);
  for (;;) {
    wake_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
    if (queue_.empty()) {
      if (stopping_) return;
      continue;
    }
    std::string body = std::move(queue_.front());
    queue_.pop_front();
    busy_ = true;
    lock.unlock();
    const bool ok = post(body);
    lock.lock();
    ++(ok ? delivered_ : failed_);
    if (!ok) log_.write("error: " + describe() + ": alert dropped after " + std::to_string(kAttempts) + " attempts");
    busy_ = false;
    if (queue_.empty()) idle_.notify_all();
  }
}

std::unique_ptr<AlertSink> make_sink(const std::string& spec, std::ostream& out, ErrorLog& log) {
  if (spec == "stdout") return std::make_unique<StreamSink>(out);
  if (spec.rfind("file:", 0) == 0 && spec.size() > 5) return std::make_unique<FileSink>(spec.substr(5));
  if (spec.rfind("webhook:", 0) == 0) return std::make_unique<WebhookSink>(spec.substr(8), log);
  throw SinkError("unknown sink '" + spec + "' (expected stdout, file:<path> or webhook:<url>)");
}

void AlertDispatcher::dispatch(const AlertEvent& event) {
  for (auto& sink : sinks_) {
    try {
      sink->send(event);
    } catch (const std::exception& e) {
      ++failures_;
      log_.write(std::string("error: alert for frame ") + std::to_string(event.frame_index) + " not delivered: " +
                 e.what());
    }
  }
}

void AlertDispatcher::flush() {
  for (auto& sink : sinks_) sink->flush();
}

}  // namespace falldet
