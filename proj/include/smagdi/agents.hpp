#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smagdi/dataset.hpp"

namespace smagdi::agents {

// Sentinel answer for responses that carry no parseable answer marker.
// Never a member of any answer space.
inline constexpr const char* kAbstain = "ABSTAIN";

// Number of debaters in the default roster.
inline constexpr int kRosterSize = 5;

struct Persona {
  std::string name;
  std::vector<std::string> directives;  // last entry is the decision instruction
  std::vector<std::string> domain_tags;
};

// The five role-instructed debaters: Lawyer, Scientist, Mathematician,
// Ethicist, Historian.
const std::vector<Persona>& default_roster();

struct AgentResponse {
  std::string agent_id;
  int round{1};
  std::string raw_text;
  std::string extracted_answer{kAbstain};
  double temperature{0.0};
};

// One generation request. The routing fields exist so scripted backends can
// key responses by (question_id, agent_id, round, purpose); the HTTP backend
// ignores them.
struct GenerateRequest {
  std::string prompt;
  double temperature{0.7};
  int max_tokens{512};

  std::string question_id;
  std::string agent_id;
  int round{0};
  std::string purpose{"debate"};  // debate | calibrate | sas | decompose | solve
  int index{0};                   // sub-question index for purpose "solve"
};

class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  // Must be safe for concurrent calls.
  virtual std::string generate(const GenerateRequest& request) = 0;
};

// Pure scripted backend. Responses are keyed by (question_id, agent_id,
// round) for debate/calibration/sas calls and by (question_id, purpose,
// index) for synthesis calls; unscripted keys return default_text.
class MockBackend : public AgentBackend {
 public:
  MockBackend() = default;
  static MockBackend from_file(const std::string& path);
  static MockBackend from_json(const nlohmann::json& script);

  void add_response(const std::string& question_id, const std::string& agent_id, int round,
                    const std::string& text);
  void add_synthesis(const std::string& question_id, const std::string& purpose, int index,
                     const std::string& text);
  void set_default_text(std::string text) { default_text_ = std::move(text); }

  nlohmann::json to_json() const;
  std::string generate(const GenerateRequest& request) override;

 private:
  std::map<std::string, std::string> scripted_;
  std::string default_text_;
};

// POSTs {prompt, temperature, max_tokens} as JSON, expects {text}.
class HttpBackend : public AgentBackend {
 public:
  explicit HttpBackend(std::string base_url, std::string path = "/generate",
                       int timeout_ms = 30000, int retries = 2);
  std::string generate(const GenerateRequest& request) override;

 private:
  std::string base_url_;
  std::string path_;
  int timeout_ms_;
  int retries_;
};

// Reads SMAGDI_HTTP_URL when url is empty; throws ValidationError when
// neither is set.
std::unique_ptr<HttpBackend> make_http_backend(const std::string& url = "",
                                               int timeout_ms = 30000, int retries = 2);

// A previous-round peer response paired with that agent's normalized weight.
struct WeightedPeer {
  AgentResponse response;
  double weight{0.0};
};

// Deterministic prompt construction. Round 1 takes no peers; later rounds
// list peers by descending weight. Violations raise ValidationError.
std::string build_prompt(const Persona& persona, const harness::QuestionRecord& question,
                         const std::vector<WeightedPeer>& peers, int round);

// Label following the final "Answer:" marker (case-insensitive) when it
// parses into the answer space; kAbstain otherwise. Never throws.
std::string extract_answer(const std::string& raw_text,
                           const std::vector<std::string>& answer_space);

AgentResponse respond(const Persona& persona, AgentBackend& backend,
                      const harness::QuestionRecord& question,
                      const std::vector<WeightedPeer>& peers, int round, double temperature,
                      const std::string& purpose = "debate", int max_tokens = 512);

}  // namespace smagdi::agents
