#pragma once

// HTTP adapter for the minimal text-completion contract:
//
//   POST <endpoint>   {"model", "prompt", "max_output_tokens", "temperature", "seed"}
//   200               {"text": "...", "finish_reason": "complete" | "length" | ...}
//
// Anything else (non-200, connection failure, bad JSON) is a retryable
// transport error. Kept out of planforge.hpp so only the CLI pays for httplib.

#include <httplib.h>

#include <string>

#include <json.hpp>

#include "planforge/llmclient.hpp"

namespace planforge {

class HttpTransport final : public Transport {
 public:
  HttpTransport(const std::string& endpoint, std::string api_key, int timeout_s = 300)
      : api_key_(std::move(api_key)), timeout_s_(timeout_s) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorKind::Validation, "endpoint needs a scheme: " + endpoint);
    const auto path_begin = endpoint.find('/', scheme_end + 3);
    base_ = endpoint.substr(0, path_begin);
    path_ = path_begin == std::string::npos ? "/" : endpoint.substr(path_begin);
  }

  CompletionResponse send(const CompletionRequest& request) override {
    httplib::Client client(base_);
    client.set_connection_timeout(timeout_s_);
    client.set_read_timeout(timeout_s_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const nlohmann::json body{{"model", request.model_id},
                              {"prompt", request.prompt},
                              {"max_output_tokens", request.max_output_tokens},
                              {"temperature", request.temperature},
                              {"seed", request.seed}};
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw Error(ErrorKind::Transport, "request to " + base_ + path_ + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw Error(ErrorKind::Transport, "endpoint returned HTTP " + std::to_string(res->status));
    }
    try {
      const auto reply = nlohmann::json::parse(res->body);
      CompletionResponse out;
      out.text = reply.at("text").get<std::string>();
      out.finish_reason = parse_finish_reason(reply.value("finish_reason", std::string("complete")));
      return out;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Transport, std::string("malformed endpoint reply: ") + e.what());
    }
  }

 private:
  std::string base_;
  std::string path_;
  std::string api_key_;
  int timeout_s_;
};

}  // namespace planforge
