#include "forge/infer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <openssl/evp.h>

#include "forge/errors.hpp"
#include "forge/png_io.hpp"
#include "forge/rng.hpp"

namespace forge {

void EndpointConfig::validate() const {
  if (parallelism < 1) throw InvalidConfig("parallelism must be >= 1");
  if (!(timeout_s > 0.0)) throw InvalidConfig("timeout_s must be > 0");
  if (max_retries < 0) throw InvalidConfig("max_retries must be >= 0");
  if (backoff_base_s < 0.0 || backoff_factor < 1.0 || backoff_cap_s < 0.0) {
    throw InvalidConfig("backoff parameters must be non-negative with factor >= 1");
  }
}

double backoff_delay_s(const EndpointConfig& config, int attempt, double jitter01) {
  const double raw = config.backoff_base_s * std::pow(config.backoff_factor, std::max(0, attempt - 1));
  return std::min(raw, config.backoff_cap_s) * (0.5 + 0.5 * std::clamp(jitter01, 0.0, 1.0));
}

HttpTransport::HttpTransport(EndpointConfig config) : config_(std::move(config)) {
  const std::string& url = config_.base_url;
  const auto scheme_end = url.find("://");
  const bool http = url.starts_with("http://") || url.starts_with("https://");
  if (scheme_end == std::string::npos || !http) throw InvalidConfig("endpoint must start with http:// or https://");
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

TransportReply HttpTransport::send(const ChatRequest& request) {
  httplib::Client client(scheme_host_port_);
  const auto seconds = static_cast<time_t>(config_.timeout_s);
  const auto micros = static_cast<time_t>((config_.timeout_s - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(std::min<time_t>(seconds, 30), seconds >= 30 ? 0 : micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  TransportReply reply;
  auto res = client.Post(path_prefix_ + "/chat/completions", headers, request.body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    reply.detail = httplib::to_string(err);
    if (err == httplib::Error::Read || err == httplib::Error::Write) {
      reply.timed_out = true;
    } else {
      reply.connection_failed = true;
    }
    return reply;
  }
  reply.status = res->status;
  reply.body = res->body;
  return reply;
}

std::string mock_completion_body(std::string_view content) {
  nlohmann::json j;
  j["id"] = "mock";
  j["object"] = "chat.completion";
  j["choices"] = nlohmann::json::array(
      {{{"index", 0}, {"finish_reason", "stop"}, {"message", {{"role", "assistant"}, {"content", content}}}}});
  return j.dump();
}

TransportReply FixedLetterTransport::send(const ChatRequest&) {
  return {200, mock_completion_body(fmt::format("The answer is {}", letter_)), false, false, {}};
}

TransportReply EchoKeyTransport::send(const ChatRequest& request) {
  const auto it = key_.find(request.item_id);
  if (it == key_.end()) return {404, "{}", false, false, "unknown item"};
  return {200, mock_completion_body(fmt::format("The answer is {}", it->second)), false, false, {}};
}

TransportReply FlakyTransport::send(const ChatRequest& request) {
  {
    std::lock_guard lock(mutex_);
    int& n = seen_[request.item_id];
    if (n < failures_) {
      ++n;
      return {503, "{\"error\":\"unavailable\"}", false, false, "mock outage"};
    }
  }
  return {200, mock_completion_body(fmt::format("The answer is {}", letter_)), false, false, {}};
}

std::unique_ptr<Transport> make_mock_transport(std::string_view policy, const Manifest& manifest) {
  auto letter_of = [&](std::string_view s) {
    if (s.size() != 1 || s[0] < 'A' || s[0] > 'D') {
      throw InvalidConfig(fmt::format("mock policy '{}': letter must be one of A-D", policy));
    }
    return s[0];
  };
  if (policy.starts_with("fixed:")) return std::make_unique<FixedLetterTransport>(letter_of(policy.substr(6)));
  if (policy == "echo-key") {
    std::map<std::string, char> key;
    for (const auto& item : manifest.items()) key.emplace(item.id, item.answer);
    return std::make_unique<EchoKeyTransport>(std::move(key));
  }
  if (policy == "flaky" || policy.starts_with("flaky:")) {
    int failures = 2;
    char letter = 'A';
    if (policy.size() > 6) {
      const std::string_view rest = policy.substr(6);
      const auto colon = rest.find(':');
      failures = std::stoi(std::string(rest.substr(0, colon)));
      if (colon != std::string_view::npos) letter = letter_of(rest.substr(colon + 1));
    }
    return std::make_unique<FlakyTransport>(failures, letter);
  }
  throw InvalidConfig(fmt::format("unknown mock policy '{}'", policy));
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

nlohmann::json build_chat_request(const QAItem& item, PromptVariant variant, const EndpointConfig& endpoint,
                                  const std::filesystem::path& image_root) {
  nlohmann::json content = nlohmann::json::array();
  for (const auto& rel : item.image_paths) {
    const std::string url = "data:image/png;base64," + base64_encode(read_file_bytes(image_root / rel));
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
  }
  content.push_back({{"type", "text"}, {"text", render_prompt(variant, item.question, item.options)}});

  nlohmann::json body;
  body["model"] = endpoint.model_name;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", std::move(content)}}});
  body["temperature"] = endpoint.temperature;
  body["seed"] = endpoint.request_seed;
  return body;
}

std::optional<std::string> parse_completion_content(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const auto& msg = (*choices)[0].value("message", nlohmann::json::object());
  const auto c = msg.find("content");
  if (c == msg.end()) return std::nullopt;
  if (c->is_string()) return c->get<std::string>();
  // Content-part arrays: concatenate the text parts.
  if (c->is_array()) {
    std::string text;
    for (const auto& part : *c) {
      if (part.value("type", "") == "text") text += part.value("text", "");
    }
    return text;
  }
  return std::nullopt;
}

namespace {

struct Outcome {
  EvalResult result;
  bool unreachable = false;
};

Outcome evaluate_item(const QAItem& item, const Manifest& manifest, const EndpointConfig& endpoint,
                      Transport& transport, const EvaluateOptions& options) {
  Outcome out;
  out.result.item_id = item.id;
  ChatRequest request{item.id, build_chat_request(item, options.variant, endpoint, manifest.root())};
  Rng jitter(mix_seed(static_cast<std::uint64_t>(endpoint.request_seed), fnv1a64(item.id)));

  bool all_connection_failures = true;
  for (int attempt = 0;; ++attempt) {
    const TransportReply reply = transport.send(request);
    all_connection_failures = all_connection_failures && reply.connection_failed;
    if (reply.status == 200) {
      out.result.retries = attempt;
      if (auto content = parse_completion_content(reply.body)) {
        out.result.raw_response = std::move(*content);
        out.result.extracted = extract_answer(out.result.raw_response);
        if (out.result.extracted) out.result.correct = *out.result.extracted == item.answer;
      } else {
        out.result.error = "malformed completion body";
      }
      return out;
    }
    const bool retryable = reply.timed_out || reply.connection_failed || reply.status == 429 || reply.status >= 500;
    const std::string why = reply.status ? fmt::format("http {}", reply.status) : reply.detail;
    if (!retryable || attempt >= endpoint.max_retries) {
      out.result.retries = attempt;
      out.result.error = fmt::format("failed after {} attempt(s): {}", attempt + 1, why);
      out.unreachable = all_connection_failures;
      return out;
    }
    const double delay = backoff_delay_s(endpoint, attempt + 1, jitter.uniform01());
    if (options.sleep) {
      options.sleep(std::chrono::duration<double>(delay));
    } else {
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
  }
}

}  // namespace

std::vector<EvalResult> evaluate_dataset(const Manifest& manifest, const EndpointConfig& endpoint,
                                         Transport& transport, const EvaluateOptions& options,
                                         const std::filesystem::path& out_file) {
  endpoint.validate();
  std::vector<const QAItem*> selected;
  for (const auto& item : manifest.items()) {
    if (!options.split || item.split == *options.split) selected.push_back(&item);
  }

  std::map<std::string, EvalResult> previous;
  if (options.resume && std::filesystem::exists(out_file)) {
    for (auto& r : load_results(out_file)) previous.emplace(r.item_id, std::move(r));
  }

  const std::size_t n = selected.size();
  std::vector<std::optional<EvalResult>> slots(n);
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < n; ++i) {
    if (auto it = previous.find(selected[i]->id); it != previous.end()) {
      slots[i] = it->second;
    } else {
      pending.push_back(i);
    }
  }

  std::ofstream out(out_file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + out_file.string());

  // Ordered collector: results are flushed as soon as the manifest-order
  // prefix is complete, so a crash leaves a resumable file.
  std::mutex collector;
  std::size_t flushed = 0;
  auto flush_ready = [&] {
    while (flushed < n && slots[flushed]) {
      out << result_to_json(*slots[flushed]).dump() << '\n';
      ++flushed;
    }
    out.flush();
  };
  {
    std::lock_guard lock(collector);
    flush_ready();
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> any_success{!previous.empty()};
  std::atomic<bool> abort{false};
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t k = next++; k < pending.size() && !abort; k = next++) {
      const std::size_t i = pending[k];
      try {
        Outcome o = evaluate_item(*selected[i], manifest, endpoint, transport, options);
        if (o.unreachable && !any_success) {
          abort = true;
          return;
        }
        if (!o.result.error) any_success = true;
        std::lock_guard lock(collector);
        slots[i] = std::move(o.result);
        flush_ready();
      } catch (...) {
        std::lock_guard lock(collector);
        if (!error) error = std::current_exception();
        abort = true;
      }
    }
  };
  {
    std::vector<std::jthread> workers;
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(endpoint.parallelism), std::max<std::size_t>(1, pending.size()));
    for (std::size_t t = 0; t < count; ++t) workers.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  if (abort) throw EndpointUnreachable("endpoint unreachable: " + endpoint.base_url);

  std::vector<EvalResult> results;
  results.reserve(n);
  for (auto& s : slots) results.push_back(std::move(*s));
  return results;
}

}  // namespace forge
