#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "forge/evalkit.hpp"
#include "forge/manifest.hpp"

namespace forge {

struct EndpointConfig {
  std::string base_url;
  std::string model_name = "default";
  std::string api_key;  // usually from FORGE_API_KEY
  double timeout_s = 120.0;
  int max_retries = 4;
  int parallelism = 1;
  double temperature = 0.0;
  std::int64_t request_seed = 1;
  double backoff_base_s = 1.0;
  double backoff_factor = 2.0;
  double backoff_cap_s = 30.0;

  void validate() const;
};

// Delay before retry number `attempt` (1-based): base * factor^(attempt-1),
// capped, then scaled by a jitter factor in [0.5, 1].
double backoff_delay_s(const EndpointConfig& config, int attempt, double jitter01);

struct ChatRequest {
  std::string item_id;  // routing metadata only; never part of the body
  nlohmann::json body;
};

struct TransportReply {
  int status = 0;  // HTTP status; 0 when no response arrived
  std::string body;
  bool timed_out = false;
  bool connection_failed = false;
  std::string detail;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportReply send(const ChatRequest& request) = 0;
};

// POST {base_url}/chat/completions with bearer auth.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(EndpointConfig config);
  TransportReply send(const ChatRequest& request) override;

 private:
  EndpointConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

// Canned chat-completions response body carrying `content`.
std::string mock_completion_body(std::string_view content);

class FixedLetterTransport : public Transport {
 public:
  explicit FixedLetterTransport(char letter) : letter_(letter) {}
  TransportReply send(const ChatRequest& request) override;

 private:
  char letter_;
};

// Answers from a hidden key (item id -> letter) the request never carries.
class EchoKeyTransport : public Transport {
 public:
  explicit EchoKeyTransport(std::map<std::string, char> key) : key_(std::move(key)) {}
  TransportReply send(const ChatRequest& request) override;

 private:
  std::map<std::string, char> key_;
};

// Fails each item `failures` times (HTTP 503), then answers with `letter`.
class FlakyTransport : public Transport {
 public:
  FlakyTransport(int failures, char letter) : failures_(failures), letter_(letter) {}
  TransportReply send(const ChatRequest& request) override;

 private:
  int failures_;
  char letter_;
  std::mutex mutex_;
  std::map<std::string, int> seen_;
};

// Policies: "fixed:<A-D>", "echo-key", "flaky[:<failures>[:<A-D>]]".
std::unique_ptr<Transport> make_mock_transport(std::string_view policy, const Manifest& manifest);

std::string base64_encode(std::string_view bytes);

// Chat request for one item: the rendered prompt plus both images inlined as
// data URLs. Answer and provenance never enter the body.
nlohmann::json build_chat_request(const QAItem& item, PromptVariant variant, const EndpointConfig& endpoint,
                                  const std::filesystem::path& image_root);

// Pulls choices[0].message.content out of a response body.
std::optional<std::string> parse_completion_content(std::string_view body);

struct EvaluateOptions {
  std::optional<std::string> split;  // "train" / "test"; all items when absent
  PromptVariant variant = PromptVariant::vanilla;
  bool resume = false;
  // Test hook; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::duration<double>)> sleep;
};

// Writes results.jsonl at out_file in manifest order. Throws EndpointUnreachable
// when the endpoint cannot be reached at all.
std::vector<EvalResult> evaluate_dataset(const Manifest& manifest, const EndpointConfig& endpoint,
                                         Transport& transport, const EvaluateOptions& options,
                                         const std::filesystem::path& out_file);

}  // namespace forge
