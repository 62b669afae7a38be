#pragma once

// Completion-service client: content-addressed on-disk cache, token-bucket
// rate limiting, exponential backoff, and live/record/replay modes. The
// network side is a Transport so tests can plug in stubs.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <json.hpp>

#include "planforge/digest.hpp"
#include "planforge/error.hpp"

namespace planforge {

struct CompletionRequest {
  std::string model_id;
  std::string prompt;
  int max_output_tokens = 1024;
  double temperature = 0.0;
  std::uint64_t seed = 0;
};

enum class FinishReason { Complete, Length, Error };

inline const char* to_string(FinishReason r) {
  switch (r) {
    case FinishReason::Complete: return "complete";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
  }
  return "error";
}

inline FinishReason parse_finish_reason(std::string_view s) {
  if (s == "complete" || s == "stop") return FinishReason::Complete;
  if (s == "length") return FinishReason::Length;
  return FinishReason::Error;
}

struct CompletionResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::Complete;
  std::int64_t latency_ms = 0;
  bool cached = false;
};

inline void validate(const CompletionRequest& r) {
  if (r.prompt.empty()) throw Error(ErrorKind::Validation, "completion prompt is empty");
  if (r.max_output_tokens <= 0) throw Error(ErrorKind::Validation, "max_output_tokens must be positive");
  if (!(r.temperature >= 0.0)) throw Error(ErrorKind::Validation, "temperature must be >= 0");
}

inline nlohmann::json canonical_request(const CompletionRequest& r) {
  // nlohmann::json objects keep keys sorted, so dump() is canonical
  return nlohmann::json{{"model_id", r.model_id},
                        {"prompt", r.prompt},
                        {"max_output_tokens", r.max_output_tokens},
                        {"temperature", r.temperature},
                        {"seed", r.seed}};
}

inline std::string request_digest(const CompletionRequest& r) { return sha256_hex(canonical_request(r).dump()); }

/// Time source for backoff and rate limiting.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() = 0;
  virtual void sleep_ms(std::int64_t ms) = 0;
};

class SystemClock final : public Clock {
 public:
  std::int64_t now_ms() override {
    using namespace std::chrono;
    return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
  }
  void sleep_ms(std::int64_t ms) override {
    if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  }
};

/// Clock that only moves when slept on. Used for hermetic backoff tests.
class ManualClock final : public Clock {
 public:
  std::int64_t now_ms() override { return now_.load(); }
  void sleep_ms(std::int64_t ms) override {
    if (ms > 0) now_ += ms;
  }
  void advance(std::int64_t ms) { now_ += ms; }

 private:
  std::atomic<std::int64_t> now_{0};
};

/// One network round-trip. Throws Error(Transport) on any failure; the
/// client decides whether to retry.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual CompletionResponse send(const CompletionRequest& request) = 0;
};

/// Adapts a callable into a Transport.
class FunctionTransport final : public Transport {
 public:
  using Fn = std::function<CompletionResponse(const CompletionRequest&)>;
  explicit FunctionTransport(Fn fn) : fn_(std::move(fn)) {}
  CompletionResponse send(const CompletionRequest& request) override { return fn_(request); }

 private:
  Fn fn_;
};

/// Token bucket. The only lock shared by concurrent callers of the client.
class RateLimiter {
 public:
  RateLimiter(double requests_per_second, double burst, Clock& clock)
      : rate_(requests_per_second), capacity_(std::max(1.0, burst)), tokens_(capacity_), clock_(clock),
        last_ms_(clock.now_ms()) {}

  void acquire() {
    if (rate_ <= 0.0) return;  // unlimited
    while (true) {
      std::int64_t wait_ms = 0;
      {
        std::lock_guard lock(mu_);
        const auto now = clock_.now_ms();
        tokens_ = std::min(capacity_, tokens_ + static_cast<double>(now - last_ms_) * rate_ / 1000.0);
        last_ms_ = now;
        if (tokens_ >= 1.0) {
          tokens_ -= 1.0;
          return;
        }
        wait_ms = static_cast<std::int64_t>((1.0 - tokens_) * 1000.0 / rate_) + 1;
      }
      clock_.sleep_ms(wait_ms);
    }
  }

 private:
  double rate_;
  double capacity_;
  double tokens_;
  Clock& clock_;
  std::int64_t last_ms_;
  std::mutex mu_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::int64_t base_delay_ms = 1000;
  double factor = 2.0;
};

/// Cache entries live at `<root>/<d[0:2]>/<d[2:4]>/<digest>.json` and hold
/// the digest, the canonical request, the response, and a timestamp.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path root) : root_(std::move(root)) {}

  std::filesystem::path path_for(const std::string& digest) const {
    return root_ / digest.substr(0, 2) / digest.substr(2, 2) / (digest + ".json");
  }

  std::optional<CompletionResponse> load(const std::string& digest) const {
    const auto path = path_for(digest);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    nlohmann::json entry;
    try {
      in >> entry;
      CompletionResponse r;
      r.text = entry.at("response").at("text").get<std::string>();
      r.finish_reason = parse_finish_reason(entry.at("response").at("finish_reason").get<std::string>());
      r.cached = true;
      return r;
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;  // torn or foreign file: treat as a miss
    }
  }

  void store(const std::string& digest, const CompletionRequest& request, const CompletionResponse& response) const {
    const auto path = path_for(digest);
    std::filesystem::create_directories(path.parent_path());
    const nlohmann::json entry{
        {"digest", digest},
        {"request", canonical_request(request)},
        {"response", {{"text", response.text}, {"finish_reason", to_string(response.finish_reason)}}},
        {"timestamp", static_cast<std::int64_t>(std::chrono::duration_cast<std::chrono::seconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                                                     .count())}};
    static std::atomic<std::uint64_t> counter{0};
    std::ostringstream tmp_name;
    tmp_name << digest << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "." << counter++;
    const auto tmp = path.parent_path() / tmp_name.str();
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorKind::Validation, "cannot write cache entry " + tmp.string());
      out << entry.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
  }

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

enum class ClientMode { Live, Record, Replay };

inline ClientMode parse_client_mode(std::string_view s) {
  if (s == "live") return ClientMode::Live;
  if (s == "record") return ClientMode::Record;
  if (s == "replay") return ClientMode::Replay;
  throw Error(ErrorKind::Validation, "unknown client mode '" + std::string(s) + "'");
}

inline const char* to_string(ClientMode m) {
  switch (m) {
    case ClientMode::Live: return "live";
    case ClientMode::Record: return "record";
    case ClientMode::Replay: return "replay";
  }
  return "live";
}

struct ClientSettings {
  std::string endpoint;
  std::string api_key;
  std::string cache_dir = ".planforge-cache";
  ClientMode mode = ClientMode::Live;
  double requests_per_second = 0.0;  // 0 = unlimited
  double burst = 1.0;
  RetryPolicy retry;

  /// Overlays PLANFORGE_ENDPOINT, PLANFORGE_API_KEY, PLANFORGE_CACHE_DIR and
  /// PLANFORGE_MODE when set.
  void apply_environment() {
    if (const char* v = std::getenv("PLANFORGE_ENDPOINT")) endpoint = v;
    if (const char* v = std::getenv("PLANFORGE_API_KEY")) api_key = v;
    if (const char* v = std::getenv("PLANFORGE_CACHE_DIR")) cache_dir = v;
    if (const char* v = std::getenv("PLANFORGE_MODE")) mode = parse_client_mode(v);
  }
};

class CompletionClient {
 public:
  CompletionClient(ClientSettings settings, std::shared_ptr<Transport> transport,
                   std::shared_ptr<Clock> clock = std::make_shared<SystemClock>())
      : settings_(std::move(settings)), transport_(std::move(transport)), clock_(std::move(clock)),
        cache_(settings_.cache_dir), limiter_(settings_.requests_per_second, settings_.burst, *clock_) {}

  CompletionResponse complete(const CompletionRequest& request) { return complete(request, settings_.retry); }

  CompletionResponse complete(const CompletionRequest& request, const RetryPolicy& policy) {
    validate(request);
    const auto digest = request_digest(request);
    const auto start = clock_->now_ms();
    if (settings_.mode != ClientMode::Record) {
      if (auto hit = cache_.load(digest)) {
        hit->latency_ms = clock_->now_ms() - start;
        return *hit;
      }
    }
    if (settings_.mode == ClientMode::Replay) {
      throw Error(ErrorKind::StrictReplay, "no cached response for request digest " + digest);
    }
    if (!transport_) throw Error(ErrorKind::Transport, "no endpoint configured for request digest " + digest);

    std::int64_t delay = policy.base_delay_ms;
    std::string last_error;
    for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
      limiter_.acquire();
      ++network_calls_;
      try {
        auto response = transport_->send(request);
        if (response.finish_reason == FinishReason::Complete && response.text.empty()) {
          response.finish_reason = FinishReason::Error;
        }
        response.cached = false;
        cache_.store(digest, request, response);
        response.latency_ms = clock_->now_ms() - start;
        return response;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Transport) throw;
        last_error = e.what();
      }
      if (attempt < policy.max_attempts) {
        clock_->sleep_ms(delay);
        delay = static_cast<std::int64_t>(static_cast<double>(delay) * policy.factor);
      }
    }
    throw Error(ErrorKind::Transport, "retries exhausted after " + std::to_string(policy.max_attempts) +
                                          " attempts: " + last_error);
  }

  std::uint64_t network_calls() const { return network_calls_.load(); }
  const ClientSettings& settings() const { return settings_; }
  const ResponseCache& cache() const { return cache_; }

 private:
  ClientSettings settings_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<Clock> clock_;
  ResponseCache cache_;
  RateLimiter limiter_;
  std::atomic<std::uint64_t> network_calls_{0};
};

}  // namespace planforge
