// Copyright 2026 The skillmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <thread>

#include "skillmpc/config.h"
#include "skillmpc/semantic.h"
#include "test_support.h"

namespace skillmpc {
namespace {

using testing::ReadFile;
using testing::SourcePath;

class SemanticTest : public ::testing::Test {
 protected:
  SemanticTest() : cfg_(LoadRunConfig(SourcePath("configs/door.json"))), lib_(cfg_.Library()) {}

  RunConfig cfg_;
  ExpertLibrary lib_;
};

TEST_F(SemanticTest, PromptListsTaskSkillsAndFormat) {
  const std::string prompt = BuildPrompt(cfg_.task, lib_);
  EXPECT_NE(prompt.find(cfg_.task.text), std::string::npos);
  for (const Expert& e : lib_.experts()) {
    EXPECT_NE(prompt.find("- " + e.descriptor.id + ": " + e.descriptor.description),
              std::string::npos);
  }
  EXPECT_NE(prompt.find("single JSON object"), std::string::npos);
  EXPECT_EQ(prompt, BuildPrompt(cfg_.task, lib_));
}

TEST_F(SemanticTest, ParsesJsonObjectFirst) {
  const PlannerResponse r =
      ParseResponse(R"(sure: {"turn": 3, "walk": -1, "extra": 9} trailing)", lib_);
  EXPECT_EQ(r.scores, (Vec{-1.0, 0.0, 0.0, 0.0, 3.0}));
}

TEST_F(SemanticTest, FallsBackToKeyValueText) {
  const PlannerResponse r = ParseResponse("reach = 2.5\nturn: 1e0, stand:-0.5", lib_);
  EXPECT_EQ(r.scores, (Vec{0.0, -0.5, 2.5, 0.0, 1.0}));
}

TEST_F(SemanticTest, UnparseableRepliesFail) {
  EXPECT_THROW(ParseResponse("", lib_), ParseFailure);
  EXPECT_THROW(ParseResponse("no scores here", lib_), ParseFailure);
  EXPECT_THROW(ParseResponse(R"({"unknown": 1})", lib_), ParseFailure);
}

TEST_F(SemanticTest, MockWeightsForTheDoorTask) {
  // Token overlaps: stand 3, reach 2, turn 3, walk 0, run 0.
  SemanticPlanner planner(cfg_.semantic);
  const Simplex w = planner.Plan(cfg_.task, lib_);
  const Vec expected = {0.020177509645426455, 0.40527611500118836, 0.14909275070677037,
                        0.020177509645426455, 0.40527611500118836};
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(w[i], expected[i], 1e-15);
  EXPECT_EQ(planner.requests(), 1);
  EXPECT_THROW(planner.Plan({"", ""}, lib_), InvalidInput);
}

class ScriptedTransport : public ChatTransport {
 public:
  explicit ScriptedTransport(std::vector<std::optional<std::string>> replies)
      : replies_(std::move(replies)) {}
  std::optional<std::string> Post(const std::string& body) override {
    bodies.push_back(body);
    const auto r = replies_.at(std::min(next_, replies_.size() - 1));
    ++next_;
    return r;
  }
  std::vector<std::string> bodies;

 private:
  std::vector<std::optional<std::string>> replies_;
  std::size_t next_ = 0;
};

SemanticPlannerConfig HttpConfig() {
  SemanticPlannerConfig c;
  c.backend = SemanticBackend::kHttp;
  c.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";
  c.max_retries = 2;
  return c;
}

TEST_F(SemanticTest, ReplaysRecordedExchange) {
  const std::string response = ReadFile(SourcePath("tests/fixtures/door_chat_response.json"));
  auto transport = std::make_shared<ScriptedTransport>(
      std::vector<std::optional<std::string>>{response});
  SemanticPlanner planner(HttpConfig(), transport);
  const Simplex w = planner.Plan(cfg_.task, lib_);
  ASSERT_EQ(transport->bodies.size(), 1u);
  EXPECT_EQ(nlohmann::json::parse(transport->bodies[0]),
            nlohmann::json::parse(ReadFile(SourcePath("tests/fixtures/door_chat_request.json"))));
  const Vec expected = {0.032837263366315204, 0.14716640432862738, 0.40003976264616438,
                        0.019916807012728651, 0.40003976264616438};
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(w[i], expected[i], 1e-15);
}

TEST_F(SemanticTest, ParseFailuresRetryThenDegradeToUniform) {
  const std::string junk = R"({"choices":[{"message":{"content":"I cannot help"}}]})";
  auto transport = std::make_shared<ScriptedTransport>(
      std::vector<std::optional<std::string>>{junk});
  SemanticPlanner planner(HttpConfig(), transport);
  const LogLevel saved = GlobalLogLevel();
  GlobalLogLevel() = LogLevel::kOff;
  const Simplex w = planner.Plan(cfg_.task, lib_);
  GlobalLogLevel() = saved;
  EXPECT_EQ(w.weights(), Simplex::Uniform(lib_.size()).weights());
  EXPECT_EQ(planner.requests(), 3);
  EXPECT_EQ(planner.parse_failures(), 3);
}

TEST_F(SemanticTest, UnreachableBackendIsReported) {
  auto transport = std::make_shared<ScriptedTransport>(
      std::vector<std::optional<std::string>>{std::nullopt});
  SemanticPlanner planner(HttpConfig(), transport);
  EXPECT_THROW(planner.Plan(cfg_.task, lib_), BackendUnavailable);
  EXPECT_EQ(planner.requests(), 3);
}

TEST(SemanticConfig, HttpNeedsEndpoint) {
  SemanticPlannerConfig c;
  c.backend = SemanticBackend::kHttp;
  EXPECT_THROW(c.Validate(), InvalidInput);
  EXPECT_THROW(HttpChatTransport("not a url"), InvalidInput);
}

TEST(ChatReplyContent, RejectsMalformedBodies) {
  EXPECT_THROW(ChatReplyContent("<html>"), ParseFailure);
  EXPECT_THROW(ChatReplyContent(R"({"choices": []})"), ParseFailure);
  EXPECT_EQ(ChatReplyContent(R"({"choices":[{"message":{"content":"x"}}]})"), "x");
}

// End to end over a loopback HTTP server.
TEST_F(SemanticTest, HttpBackendAgainstLocalServer) {
  const std::string response = ReadFile(SourcePath("tests/fixtures/door_chat_response.json"));
  httplib::Server server;
  std::string seen_auth, seen_body;
  int calls = 0;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    if (calls == 1) {
      res.status = 503;  // first attempt fails, the retry succeeds
      return;
    }
    res.set_content(response, "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv(kApiKeyEnvVar, "test-key", 1);
  SemanticPlannerConfig c = HttpConfig();
  c.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  SemanticPlanner planner(c);
  const LogLevel saved = GlobalLogLevel();
  GlobalLogLevel() = LogLevel::kOff;
  const Simplex w = planner.Plan(cfg_.task, lib_);
  GlobalLogLevel() = saved;
  unsetenv(kApiKeyEnvVar);
  server.stop();
  thread.join();

  EXPECT_EQ(calls, 2);
  EXPECT_EQ(planner.requests(), 2);
  EXPECT_EQ(seen_auth, "Bearer test-key");
  EXPECT_EQ(nlohmann::json::parse(seen_body)["temperature"], 0.3);
  EXPECT_NEAR(w[2], 0.40003976264616438, 1e-15);
}

TEST(HttpChatTransport, ConnectionRefusedIsNotAReply) {
  const LogLevel saved = GlobalLogLevel();
  GlobalLogLevel() = LogLevel::kOff;
  HttpChatTransport t("http://127.0.0.1:1/none", 1.0);
  EXPECT_FALSE(t.Post("{}").has_value());
  GlobalLogLevel() = saved;
}

}  // namespace
}  // namespace skillmpc
