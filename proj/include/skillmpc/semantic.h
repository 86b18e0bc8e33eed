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

#ifndef SKILLMPC_SEMANTIC_H_
#define SKILLMPC_SEMANTIC_H_

#include <httplib.h>
// <resolv.h> defines _res, which collides with Eigen parameter names.
#ifdef _res
#undef _res
#endif
#include <json.hpp>

#include <atomic>
#include <cctype>
#include <cstdlib>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "skillmpc/core.h"
#include "skillmpc/experts.h"

namespace skillmpc {

inline constexpr const char* kApiKeyEnvVar = "SEMANTIC_API_KEY";

struct TaskDescription {
  std::string text;
  std::string task_id;
};

struct PlannerResponse {
  std::string raw_text;
  Vec scores;  // one per expert, library order
};

enum class SemanticBackend { kMock, kHttp };

struct SemanticPlannerConfig {
  SemanticBackend backend = SemanticBackend::kMock;
  double temperature = 0.3;
  std::string endpoint_url;
  std::string model_name = "default";
  int max_retries = 2;

  void Validate() const {
    if (!(temperature >= 0.0)) {
      throw InvalidInput("SemanticPlannerConfig: temperature must be >= 0");
    }
    if (max_retries < 0) {
      throw InvalidInput("SemanticPlannerConfig: max_retries must be >= 0");
    }
    if (backend == SemanticBackend::kHttp && endpoint_url.empty()) {
      throw InvalidInput("SemanticPlannerConfig: http backend needs endpoint_url");
    }
  }
};

// -- prompt and reply parsing -- //

inline std::string BuildPrompt(const TaskDescription& task,
                               const ExpertLibrary& library) {
  std::ostringstream out;
  out << "You are the semantic planning layer of a robot controller. "
         "Score how useful each skill below is for the given task.\n\n";
  out << "Task: " << task.text << "\n\n";
  out << "Skills (id: capability):\n";
  for (const Expert& e : library.experts()) {
    out << "- " << e.descriptor.id << ": " << e.descriptor.description << "\n";
  }
  out << "\nReply with a single JSON object and nothing else. Its keys must be "
         "the skill ids listed above and its values numeric scores; a higher "
         "score means the skill matters more for the task.\n";
  return out.str();
}

namespace internal {

// Text of the first balanced {...} block, honoring JSON string quoting.
inline std::optional<std::string> FirstJsonObject(std::string_view text) {
  const std::size_t open = text.find('{');
  if (open == std::string_view::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      return std::string(text.substr(open, i - open + 1));
    }
  }
  return std::nullopt;
}

inline std::string RegexEscape(std::string_view s) {
  static const std::string kSpecial = R"(\^$.|?*+()[]{})";
  std::string out;
  for (char c : s) {
    if (kSpecial.find(c) != std::string::npos) out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace internal

// Primary path: the first JSON object in the reply. Fallback: scan for
// `<id> : <number>` or `<id> = <number>`. Experts without a score get 0.
inline PlannerResponse ParseResponse(const std::string& raw,
                                     const ExpertLibrary& library) {
  if (raw.empty()) throw ParseFailure("empty reply");
  PlannerResponse response{raw, Vec(library.size(), 0.0)};
  bool found = false;

  if (auto object = internal::FirstJsonObject(raw)) {
    const auto j = nlohmann::json::parse(*object, nullptr, false);
    if (j.is_object()) {
      for (std::size_t i = 0; i < library.size(); ++i) {
        const auto it = j.find(library.expert(i).descriptor.id);
        if (it != j.end() && it->is_number()) {
          const double score = it->get<double>();
          if (std::isfinite(score)) {
            response.scores[i] = score;
            found = true;
          }
        }
      }
    }
  }
  if (found) return response;

  static const std::string kNumber =
      R"(([-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?))";
  for (std::size_t i = 0; i < library.size(); ++i) {
    const std::regex pattern(
        "(?:^|[^A-Za-z0-9_])[\"']?" +
        internal::RegexEscape(library.expert(i).descriptor.id) +
        "[\"']?\\s*[:=]\\s*" + kNumber);
    std::smatch match;
    if (std::regex_search(raw, match, pattern)) {
      const double score = std::strtod(match[1].str().c_str(), nullptr);
      if (std::isfinite(score)) {
        response.scores[i] = score;
        found = true;
      }
    }
  }
  if (!found) throw ParseFailure("no expert score found in reply");
  return response;
}

// -- mock backend -- //

inline std::vector<std::string> Tokenize(std::string_view text) {
  static const std::set<std::string> kStopwords = {
      "a",   "an",   "and",  "at",   "be",  "by",  "for", "from", "in",
      "into", "is",  "it",   "its",  "of",  "on",  "or",  "the",  "then",
      "there", "to", "with", "while", "until"};
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && !kStopwords.count(current)) tokens.push_back(current);
    current.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

// Score of expert i = number of task tokens (with multiplicity) that occur in
// the expert's id or description.
inline Vec MockScores(const TaskDescription& task, const ExpertLibrary& library) {
  const std::vector<std::string> task_tokens = Tokenize(task.text);
  Vec scores(library.size(), 0.0);
  for (std::size_t i = 0; i < library.size(); ++i) {
    const ExpertDescriptor& d = library.expert(i).descriptor;
    std::set<std::string> vocabulary;
    for (auto& t : Tokenize(d.id)) vocabulary.insert(t);
    for (auto& t : Tokenize(d.description)) vocabulary.insert(t);
    for (const std::string& t : task_tokens) {
      if (vocabulary.count(t)) scores[i] += 1.0;
    }
  }
  return scores;
}

// The reply text the mock model "sends": a JSON object of MockScores.
inline std::string MockReply(const TaskDescription& task,
                             const ExpertLibrary& library) {
  const Vec scores = MockScores(task, library);
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < library.size(); ++i) {
    j[library.expert(i).descriptor.id] = scores[i];
  }
  return j.dump();
}

// -- chat-completion transport -- //

struct ChatMessage {
  std::string role;
  std::string content;
};

inline nlohmann::json ChatRequestBody(const SemanticPlannerConfig& cfg,
                                      const std::vector<ChatMessage>& messages) {
  nlohmann::json body;
  body["model"] = cfg.model_name;
  body["temperature"] = cfg.temperature;
  body["messages"] = nlohmann::json::array();
  for (const ChatMessage& m : messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  return body;
}

// choices[0].message.content of a chat-completion response body.
inline std::string ChatReplyContent(const std::string& response_body) {
  const auto j = nlohmann::json::parse(response_body, nullptr, false);
  if (j.is_discarded()) throw ParseFailure("response body is not JSON");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseFailure(std::string("malformed chat response: ") + e.what());
  }
}

// Posts a JSON body and returns the response body. Returns nullopt on any
// transport-level failure (connection error, non-2xx status).
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::optional<std::string> Post(const std::string& body) = 0;
};

class HttpChatTransport : public ChatTransport {
 public:
  explicit HttpChatTransport(const std::string& endpoint_url,
                             double timeout_seconds = 30.0)
      : timeout_seconds_(timeout_seconds) {
    static const std::regex kUrl(R"(^(https?)://([^/:]+)(?::(\d+))?(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(endpoint_url, m, kUrl)) {
      throw InvalidInput("HttpChatTransport: malformed endpoint_url '" +
                         endpoint_url + "'");
    }
    scheme_ = m[1].str();
    host_ = m[2].str();
    port_ = m[3].matched ? std::stoi(m[3].str()) : (scheme_ == "https" ? 443 : 80);
    path_ = m[4].matched ? m[4].str() : "/";
  }

  std::optional<std::string> Post(const std::string& body) override {
    if (scheme_ != "http") {
      Log(LogLevel::kError, "HttpChatTransport: only http:// endpoints are supported");
      return std::nullopt;
    }
    httplib::Client client(host_, port_);
    const auto secs = static_cast<time_t>(timeout_seconds_);
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv(kApiKeyEnvVar); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto result = client.Post(path_, headers, body, "application/json");
    if (!result) {
      Log(LogLevel::kWarning, "chat request failed: " +
                                  httplib::to_string(result.error()));
      return std::nullopt;
    }
    if (result->status < 200 || result->status >= 300) {
      Log(LogLevel::kWarning,
          "chat request returned HTTP " + std::to_string(result->status));
      return std::nullopt;
    }
    return result->body;
  }

 private:
  std::string scheme_;
  std::string host_;
  int port_ = 80;
  std::string path_;
  double timeout_seconds_;
};

// -- planner -- //

class SemanticPlanner {
 public:
  explicit SemanticPlanner(SemanticPlannerConfig cfg,
                           std::shared_ptr<ChatTransport> transport = nullptr)
      : cfg_(std::move(cfg)), transport_(std::move(transport)) {
    cfg_.Validate();
    if (cfg_.backend == SemanticBackend::kHttp && !transport_) {
      transport_ = std::make_shared<HttpChatTransport>(cfg_.endpoint_url);
    }
  }

  const SemanticPlannerConfig& config() const { return cfg_; }
  int requests() const { return requests_.load(); }
  int parse_failures() const { return parse_failures_.load(); }

  // Raw scores for the task; throws ParseFailure when every attempt fails to
  // parse and BackendUnavailable when the transport never answers.
  PlannerResponse Query(const TaskDescription& task,
                        const ExpertLibrary& library) {
    if (task.text.empty()) throw InvalidInput("TaskDescription: empty text");
    if (cfg_.backend == SemanticBackend::kMock) {
      ++requests_;
      return ParseResponse(MockReply(task, library), library);
    }
    const std::string body =
        ChatRequestBody(cfg_, {{"system", "You output JSON only."},
                               {"user", BuildPrompt(task, library)}})
            .dump();
    bool any_reply = false;
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      ++requests_;
      const std::optional<std::string> reply = transport_->Post(body);
      if (!reply) {
        last_error = "transport failure";
        continue;
      }
      any_reply = true;
      try {
        return ParseResponse(ChatReplyContent(*reply), library);
      } catch (const ParseFailure& e) {
        ++parse_failures_;
        last_error = e.what();
      }
    }
    if (!any_reply) {
      throw BackendUnavailable("chat endpoint " + cfg_.endpoint_url +
                               " unavailable after " +
                               std::to_string(cfg_.max_retries + 1) +
                               " attempts");
    }
    throw ParseFailure(last_error);
  }

  // w = softmax(scores). Parse failures degrade to uniform weights.
  Simplex Plan(const TaskDescription& task, const ExpertLibrary& library) {
    try {
      return Softmax(Query(task, library).scores);
    } catch (const ParseFailure& e) {
      Log(LogLevel::kWarning, std::string("semantic planner could not parse a "
                                          "reply, using uniform weights: ") +
                                  e.what());
      return Simplex::Uniform(library.size());
    }
  }

 private:
  SemanticPlannerConfig cfg_;
  std::shared_ptr<ChatTransport> transport_;
  std::atomic<int> requests_{0};
  std::atomic<int> parse_failures_{0};
};

}  // namespace skillmpc

#endif  // SKILLMPC_SEMANTIC_H_
