#include <doctest.h>

#include <atomic>
#include <thread>

#include <fmt/format.h>

#include "forge/errors.hpp"
#include "forge/infer.hpp"
#include "oracle.hpp"

// After Eigen: resolv.h, pulled in by httplib, defines a _res macro.
#include <httplib.h>

using namespace forge;

namespace {

// One small generated dataset shared by every case.
const Manifest& dataset() {
  static const Manifest m = [] {
    const auto dir = oracle::scratch_dir("infer_data");
    GenConfig gc;
    gc.scenes = 8;
    gc.target_counts = TaskCounts::even_split(30);
    build_dataset(SceneConfig{}, gc, dir);
    return load_manifest(dir / "dataset.jsonl");
  }();
  return m;
}

EndpointConfig mock_endpoint(int parallelism = 1) {
  EndpointConfig e;
  e.base_url = "mock://";
  e.parallelism = parallelism;
  return e;
}

EvaluateOptions no_sleep() {
  EvaluateOptions o;
  o.sleep = [](std::chrono::duration<double>) {};
  return o;
}

}  // namespace

TEST_CASE("base64 test vectors") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foo") == "Zm9v");
  CHECK(base64_encode("foob") == "Zm9vYg==");
  CHECK(base64_encode("fooba") == "Zm9vYmE=");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
  CHECK(base64_encode(std::string("\0\xff", 2)) == "AP8=");
}

TEST_CASE("backoff grows, caps and jitters within bounds") {
  EndpointConfig e = mock_endpoint();
  CHECK(backoff_delay_s(e, 1, 1.0) == 1.0);
  CHECK(backoff_delay_s(e, 1, 0.0) == 0.5);
  CHECK(backoff_delay_s(e, 3, 1.0) == 4.0);
  CHECK(backoff_delay_s(e, 20, 1.0) == 30.0);
  CHECK(backoff_delay_s(e, 20, 0.0) == 15.0);
}

TEST_CASE("endpoint config validation") {
  CHECK_NOTHROW(mock_endpoint().validate());
  EndpointConfig e = mock_endpoint();
  e.parallelism = 0;
  CHECK_THROWS_AS(e.validate(), InvalidConfig);
  e = mock_endpoint();
  e.max_retries = -1;
  CHECK_THROWS_AS(e.validate(), InvalidConfig);
  e = mock_endpoint();
  e.timeout_s = 0;
  CHECK_THROWS_AS(e.validate(), InvalidConfig);
}

TEST_CASE("chat request carries prompt and images but no answer") {
  const Manifest& m = dataset();
  EndpointConfig e = mock_endpoint();
  for (const QAItem& item : m.items()) {
    const auto body = build_chat_request(item, PromptVariant::explicit_multiview, e, m.root());
    CHECK(body["temperature"] == 0.0);
    CHECK(body["seed"] == 1);
    CHECK(body["model"] == "default");
    const auto& content = body["messages"][0]["content"];
    REQUIRE(content.size() == 3);
    for (int i = 0; i < 2; ++i) {
      const std::string url = content[i]["image_url"]["url"];
      CHECK(url.starts_with("data:image/png;base64,"));
      CHECK(url.substr(22) == base64_encode(oracle::slurp(m.root() / item.image_paths[static_cast<std::size_t>(i)])));
    }
    CHECK(content[2]["text"] == render_prompt(PromptVariant::explicit_multiview, item.question, item.options));
    const std::string dumped = body.dump();
    CHECK(dumped.find("provenance") == std::string::npos);
    CHECK(dumped.find("\"answer\"") == std::string::npos);
    CHECK(dumped.find(item.id) == std::string::npos);
    CHECK(dumped.find("scene_id") == std::string::npos);
  }
}

TEST_CASE("completion parsing") {
  CHECK(parse_completion_content(mock_completion_body("The answer is C")) == "The answer is C");
  CHECK_FALSE(parse_completion_content("not json").has_value());
  CHECK_FALSE(parse_completion_content("{\"choices\":[]}").has_value());
  CHECK(parse_completion_content(R"({"choices":[{"message":{"content":[{"type":"text","text":"B"}]}}]})") == "B");
}

TEST_CASE("fixed and echo-key mocks") {
  const Manifest& m = dataset();
  const auto dir = oracle::scratch_dir("infer_mock");
  auto fixed = make_mock_transport("fixed:A", m);
  const auto rs = evaluate_dataset(m, mock_endpoint(), *fixed, no_sleep(), dir / "fixed.jsonl");
  REQUIRE(rs.size() == m.items().size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    CHECK(rs[i].item_id == m.items()[i].id);
    CHECK(rs[i].extracted == 'A');
    CHECK(rs[i].correct == (m.items()[i].answer == 'A'));
    CHECK(rs[i].retries == 0);
  }
  CHECK(load_results(dir / "fixed.jsonl").size() == rs.size());

  auto echo = make_mock_transport("echo-key", m);
  const auto perfect = evaluate_dataset(m, mock_endpoint(), *echo, no_sleep(), dir / "echo.jsonl");
  CHECK(score(perfect, m, "echo").overall.accuracy() == 1.0);

  CHECK_THROWS_AS(make_mock_transport("fixed:E", m), InvalidConfig);
  CHECK_THROWS_AS(make_mock_transport("oracle", m), InvalidConfig);
}

TEST_CASE("split filter selects items") {
  const Manifest& m = dataset();
  auto fixed = make_mock_transport("fixed:B", m);
  EvaluateOptions o = no_sleep();
  o.split = "test";
  const auto rs = evaluate_dataset(m, mock_endpoint(), *fixed, o, oracle::scratch_dir("infer_split") / "r.jsonl");
  std::size_t expected = 0;
  for (const auto& item : m.items()) expected += item.split == "test";
  CHECK(rs.size() == expected);
}

TEST_CASE("flaky transport retries with bounded backoff") {
  const Manifest& m = dataset();
  auto flaky = make_mock_transport("flaky:2:C", m);
  std::vector<double> delays;
  std::mutex mu;
  EvaluateOptions o;
  o.sleep = [&](std::chrono::duration<double> d) {
    std::lock_guard lock(mu);
    delays.push_back(d.count());
  };
  const auto rs = evaluate_dataset(m, mock_endpoint(), *flaky, o, oracle::scratch_dir("infer_flaky") / "r.jsonl");
  for (const auto& r : rs) {
    CHECK(r.retries == 2);
    CHECK(r.extracted == 'C');
    CHECK_FALSE(r.error.has_value());
  }
  REQUIRE(delays.size() == 2 * rs.size());
  // Single-threaded: delays alternate first retry, second retry.
  for (std::size_t i = 0; i < delays.size(); i += 2) {
    CHECK(delays[i] >= 0.5);
    CHECK(delays[i] <= 1.0);
    CHECK(delays[i + 1] >= 1.0);
    CHECK(delays[i + 1] <= 2.0);
  }

  // Out of retries: error recorded, response empty.
  auto hopeless = make_mock_transport("flaky:9", m);
  EndpointConfig e = mock_endpoint();
  e.max_retries = 1;
  const auto failed = evaluate_dataset(m, e, *hopeless, no_sleep(), oracle::scratch_dir("infer_fail") / "r.jsonl");
  for (const auto& r : failed) {
    CHECK(r.error.has_value());
    CHECK(r.raw_response.empty());
    CHECK_FALSE(r.extracted.has_value());
    CHECK(r.retries == 1);
  }
}

TEST_CASE("parallelism does not change output bytes") {
  const Manifest& m = dataset();
  const auto dir = oracle::scratch_dir("infer_par");
  auto flaky = make_mock_transport("flaky:1:D", m);
  evaluate_dataset(m, mock_endpoint(1), *flaky, no_sleep(), dir / "p1.jsonl");
  auto flaky2 = make_mock_transport("flaky:1:D", m);
  evaluate_dataset(m, mock_endpoint(16), *flaky2, no_sleep(), dir / "p16.jsonl");
  CHECK(oracle::slurp(dir / "p1.jsonl") == oracle::slurp(dir / "p16.jsonl"));
}

// Counts calls so resume can be observed.
class CountingTransport : public Transport {
 public:
  TransportReply send(const ChatRequest&) override {
    ++calls;
    return {200, mock_completion_body("The answer is B"), false, false, {}};
  }
  std::atomic<int> calls{0};
};

TEST_CASE("resume skips completed items") {
  const Manifest& m = dataset();
  const auto path = oracle::scratch_dir("infer_resume") / "r.jsonl";
  auto fixed = make_mock_transport("fixed:A", m);
  const auto full = evaluate_dataset(m, mock_endpoint(), *fixed, no_sleep(), path);
  // Keep the first ten lines as if the run had been interrupted.
  std::vector<EvalResult> partial(full.begin(), full.begin() + 10);
  write_results(path, partial);

  CountingTransport counting;
  EvaluateOptions o = no_sleep();
  o.resume = true;
  const auto resumed = evaluate_dataset(m, mock_endpoint(4), counting, o, path);
  CHECK(counting.calls == static_cast<int>(m.items().size()) - 10);
  REQUIRE(resumed.size() == m.items().size());
  for (std::size_t i = 0; i < resumed.size(); ++i) CHECK(resumed[i].extracted == (i < 10 ? 'A' : 'B'));
  CHECK(load_results(path).size() == m.items().size());
}

TEST_CASE("unreachable endpoint raises") {
  const Manifest& m = dataset();
  EndpointConfig e;
  e.base_url = "http://127.0.0.1:1/v1";
  e.max_retries = 1;
  e.timeout_s = 2;
  HttpTransport http(e);
  CHECK_THROWS_AS(evaluate_dataset(m, e, http, no_sleep(), oracle::scratch_dir("infer_down") / "r.jsonl"),
                  EndpointUnreachable);
  EndpointConfig bad;
  bad.base_url = "ftp://x";
  CHECK_THROWS_AS(HttpTransport{bad}, InvalidConfig);
}

TEST_CASE("http transport talks to a local chat-completions server") {
  const Manifest& m = dataset();
  httplib::Server server;
  std::mutex mu;
  std::vector<std::string> auth, paths;
  std::vector<nlohmann::json> bodies;
  int statuses = 0;
  server.Post(R"(/v1/chat/completions)", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu);
    paths.push_back(req.path);
    auth.push_back(req.get_header_value("Authorization"));
    bodies.push_back(nlohmann::json::parse(req.body));
    // The first request of the run gets a 503 to exercise the retry path.
    if (statuses++ == 0) {
      res.status = 503;
      return;
    }
    res.set_content(mock_completion_body("After comparing views, the answer is (B)."), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  EndpointConfig e;
  e.base_url = fmt::format("http://127.0.0.1:{}/v1/", port);
  e.api_key = "secret";
  e.model_name = "toy";
  e.parallelism = 2;
  HttpTransport http(e);
  const auto rs = evaluate_dataset(m, e, http, no_sleep(), oracle::scratch_dir("infer_http") / "r.jsonl");
  server.stop();
  t.join();

  CHECK(rs.size() == m.items().size());
  int retried = 0;
  for (const auto& r : rs) {
    CHECK(r.extracted == 'B');
    retried += r.retries;
  }
  CHECK(retried == 1);
  CHECK(bodies.size() == m.items().size() + 1);
  for (const auto& a : auth) CHECK(a == "Bearer secret");
  for (const auto& p : paths) CHECK(p == "/v1/chat/completions");
  for (const auto& b : bodies) CHECK(b["model"] == "toy");
}
