#include "smagdi/agents.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "smagdi/error.hpp"

namespace smagdi::agents {
namespace {

Persona make_lawyer() {
  return Persona{
      "Lawyer",
      {
          "Analyze under Common Law and Civil Law frameworks",
          "Simulate arguments from plaintiff/defendant perspectives simultaneously",
          "Identify conflicting precedents across federal circuits",
          "Apply game theory to predict settlement likelihoods using Nash equilibrium",
          "Check legality under local, national, and international law",
          "Identify who could sue whom if this decision is made",
          "Consider precedent this sets for future similar cases",
          "Evaluate enforceability and compliance mechanisms",
          "Assess constitutional and human rights implications",
          "Make Decision based on this",
      },
      {"law", "policy", "precedent"},
  };
}

Persona make_scientist() {
  return Persona{
      "Scientist",
      {
          "Generate two conflicting hypotheses before selecting an option",
          "Conduct a Red Team analysis attacking your own conclusion",
          "Calculate Bayesian probabilities for competing explanations using Bayes' theorem: "
          "P(H|E) = P(E|H) * P(H) / P(E)",
          "Model system interactions using both linear and chaotic frameworks",
          "Compare findings against contradictory studies from adjacent fields",
          "Test your reasoning by asking \"what could prove this wrong?\"",
          "Consider environmental and health impacts spanning 50+ years",
          "Demand evidence with statistical significance before accepting claims",
          "Make Decision based on this",
      },
      {"science", "evidence", "hypothesis-testing"},
  };
}

Persona make_mathematician() {
  return Persona{
      "Mathematician",
      {
          "Solve using both frequentist and Bayesian approaches",
          "Model with Monte Carlo and deterministic simulations",
          "Calculate error propagation through all estimation steps",
          "Apply robust optimization against adversarial inputs",
          "Quantify all variables and assign numerical values",
          "Calculate expected outcomes using probability theory",
          "Model best-case, worst-case, and most-likely scenarios",
          "Identify optimization targets and constraints",
          "Express uncertainty using confidence intervals",
          "Make Decision based on this",
      },
      {"mathematics", "probability", "optimization"},
  };
}

Persona make_ethicist() {
  return Persona{
      "Ethicist",
      {
          "Apply in sequence: Utilitarian, Deontological, Virtue Ethics lenses",
          "Calculate moral weightings using differentiable ethics equations",
          "Identify irreconcilable value conflicts through geometric mean analysis",
          "Apply multiple ethical tests: \"Is this fair?\", \"Does this reduce suffering?\", "
          "\"Would I want this if roles were reversed?\"",
          "Consider moral obligations to future generations",
          "Weigh individual rights against collective good",
          "Identify moral dilemmas and tragic trade-offs",
          "Question the moral legitimacy of the decision-makers",
          "Perform universalizability tests for proposed actions",
          "Make Decision based on this",
      },
      {"ethics", "values", "fairness"},
  };
}

Persona make_historian() {
  return Persona{
      "Historian",
      {
          "Contextualize the issue within relevant historical periods and events",
          "Identify historical precedents and analogues for each option",
          "Analyze the long-term consequences of similar decisions in the past",
          "Examine the roles of key actors, institutions, and social forces in shaping outcomes",
          "Assess the reliability and biases of historical sources and narratives",
          "Consider the impact of cultural, economic, and technological changes over time",
          "Highlight lessons learned from both successes and failures in history",
          "Address how collective memory and historiography influence present choices",
          "Make Decision based on this",
      },
      {"history", "context", "precedent"},
  };
}

bool iequals(const std::string& a, const std::string& b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
           return std::tolower(x) == std::tolower(y);
         });
}

constexpr const char* kTokenTrim = "*_\"'`.,;:!?()[]{}<>";

std::string response_key(const std::string& qid, const std::string& agent, int round) {
  return "r|" + qid + "|" + agent + "|" + std::to_string(round);
}

std::string synthesis_key(const std::string& qid, const std::string& purpose, int index) {
  return "s|" + qid + "|" + purpose + "|" + std::to_string(index);
}

std::string format_weight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", w);
  return buf;
}

}  // namespace

const std::vector<Persona>& default_roster() {
  static const std::vector<Persona> roster{
      make_lawyer(), make_scientist(), make_mathematician(), make_ethicist(), make_historian()};
  return roster;
}

std::string build_prompt(const Persona& persona, const harness::QuestionRecord& question,
                         const std::vector<WeightedPeer>& peers, int round) {
  if (round < 1) throw ValidationError("build_prompt: round must be >= 1");
  if (round == 1 && !peers.empty()) {
    throw ValidationError("build_prompt: round 1 takes no peer context");
  }
  if (round >= 2 && peers.empty()) {
    throw ValidationError("build_prompt: rounds after the first require peer context");
  }

  std::ostringstream out;
  out << "You are the " << persona.name << ". Approach the problem through your role.\n";
  out << "Directives:\n";
  for (const auto& d : persona.directives) out << "- " << d << "\n";
  out << "\nQuestion: " << question.text << "\n";
  out << "Options: ";
  for (std::size_t i = 0; i < question.answer_space.size(); ++i) {
    if (i > 0) out << " | ";
    out << question.answer_space[i];
  }
  out << "\n";

  if (round >= 2) {
    std::vector<WeightedPeer> ordered = peers;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const WeightedPeer& a, const WeightedPeer& b) {
                       return a.weight > b.weight;
                     });
    out << "\nPeer responses from round " << (round - 1)
        << ", ordered by influence (highest weight first):\n";
    for (const auto& p : ordered) {
      out << "[weight " << format_weight(p.weight) << "] " << p.response.agent_id
          << " answered \"" << p.response.extracted_answer << "\": " << p.response.raw_text
          << "\n";
    }
    out << "\nRefine your response based on the other agents, giving more consideration to "
           "higher-weighted peers.\n";
  }

  out << "\nProvide your analysis, then state your final answer on the last line in the form "
         "\"Answer: <option>\".";
  return out.str();
}

std::string extract_answer(const std::string& raw_text,
                           const std::vector<std::string>& answer_space) {
  if (answer_space.empty()) throw ValidationError("extract_answer: empty answer space");

  // Locate the final case-insensitive "answer" followed by optional spaces
  // and a colon.
  const std::string text = raw_text;
  const std::string needle = "answer";
  std::size_t marker_end = std::string::npos;
  for (std::size_t i = text.size(); i-- > 0;) {
    if (std::tolower(static_cast<unsigned char>(text[i])) != 'a') continue;
    if (i + needle.size() > text.size()) continue;
    bool match = true;
    for (std::size_t j = 0; j < needle.size(); ++j) {
      if (std::tolower(static_cast<unsigned char>(text[i + j])) != needle[j]) {
        match = false;
        break;
      }
    }
    if (!match) continue;
    std::size_t p = i + needle.size();
    while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
    if (p < text.size() && text[p] == ':') {
      marker_end = p + 1;
      break;
    }
  }
  if (marker_end == std::string::npos) return kAbstain;

  std::size_t start = marker_end;
  while (start < text.size() && std::isspace(static_cast<unsigned char>(text[start]))) ++start;
  std::size_t end = start;
  while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
  std::string token = text.substr(start, end - start);
  while (!token.empty() && std::strchr(kTokenTrim, token.front())) token.erase(token.begin());
  while (!token.empty() && std::strchr(kTokenTrim, token.back())) token.pop_back();
  if (token.empty()) return kAbstain;

  for (const auto& label : answer_space) {
    if (iequals(token, label)) return label;
  }
  // MMLU convention: letters A-D map onto the index labels.
  static const std::vector<std::string> indices{"0", "1", "2", "3"};
  if (answer_space == indices && token.size() == 1) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(token[0])));
    if (c >= 'a' && c <= 'd') return answer_space[c - 'a'];
  }
  return kAbstain;
}

AgentResponse respond(const Persona& persona, AgentBackend& backend,
                      const harness::QuestionRecord& question,
                      const std::vector<WeightedPeer>& peers, int round, double temperature,
                      const std::string& purpose, int max_tokens) {
  if (temperature <= 0.0) throw ValidationError("respond: temperature must be > 0");

  GenerateRequest req;
  req.prompt = build_prompt(persona, question, peers, round);
  req.temperature = temperature;
  req.max_tokens = max_tokens;
  req.question_id = question.question_id;
  req.agent_id = persona.name;
  req.round = round;
  req.purpose = purpose;

  std::string text;
  try {
    text = backend.generate(req);
  } catch (const BackendError& e) {
    throw BackendError(e.what(), e.retryable(), persona.name, round);
  } catch (const std::exception& e) {
    throw BackendError(std::string("backend failure: ") + e.what(), true, persona.name, round);
  }

  AgentResponse r;
  r.agent_id = persona.name;
  r.round = round;
  r.raw_text = std::move(text);
  r.extracted_answer = extract_answer(r.raw_text, question.answer_space);
  r.temperature = temperature;
  return r;
}

MockBackend MockBackend::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BackendError("cannot open mock script: " + path, false);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("mock script parse failure: ") + e.what(), "$");
  }
  return from_json(j);
}

MockBackend MockBackend::from_json(const nlohmann::json& script) {
  MockBackend mock;
  mock.default_text_ = script.value("default_text", "");
  if (script.contains("responses")) {
    for (const auto& r : script.at("responses")) {
      mock.add_response(r.at("question_id").get<std::string>(),
                        r.at("agent_id").get<std::string>(), r.at("round").get<int>(),
                        r.at("text").get<std::string>());
    }
  }
  if (script.contains("synthesis")) {
    for (const auto& s : script.at("synthesis")) {
      mock.add_synthesis(s.at("question_id").get<std::string>(),
                         s.at("purpose").get<std::string>(), s.value("index", 0),
                         s.at("text").get<std::string>());
    }
  }
  return mock;
}

void MockBackend::add_response(const std::string& question_id, const std::string& agent_id,
                               int round, const std::string& text) {
  scripted_[response_key(question_id, agent_id, round)] = text;
}

void MockBackend::add_synthesis(const std::string& question_id, const std::string& purpose,
                                int index, const std::string& text) {
  scripted_[synthesis_key(question_id, purpose, index)] = text;
}

nlohmann::json MockBackend::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["default_text"] = default_text_;
  auto responses = nlohmann::json::array();
  auto synthesis = nlohmann::json::array();
  for (const auto& [key, text] : scripted_) {
    std::vector<std::string> parts;
    std::string rest = key.substr(2);
    std::size_t pos = 0;
    while ((pos = rest.find('|')) != std::string::npos) {
      parts.push_back(rest.substr(0, pos));
      rest.erase(0, pos + 1);
    }
    parts.push_back(rest);
    if (key[0] == 'r') {
      responses.push_back({{"question_id", parts[0]},
                           {"agent_id", parts[1]},
                           {"round", std::stoi(parts[2])},
                           {"text", text}});
    } else {
      synthesis.push_back({{"question_id", parts[0]},
                           {"purpose", parts[1]},
                           {"index", std::stoi(parts[2])},
                           {"text", text}});
    }
  }
  j["responses"] = std::move(responses);
  j["synthesis"] = std::move(synthesis);
  return j;
}

std::string MockBackend::generate(const GenerateRequest& request) {
  std::string key;
  if (request.purpose == "decompose" || request.purpose == "solve") {
    key = synthesis_key(request.question_id, request.purpose, request.index);
  } else {
    key = response_key(request.question_id, request.agent_id, request.round);
  }
  const auto it = scripted_.find(key);
  return it == scripted_.end() ? default_text_ : it->second;
}

HttpBackend::HttpBackend(std::string base_url, std::string path, int timeout_ms, int retries)
    : base_url_(std::move(base_url)), path_(std::move(path)), timeout_ms_(timeout_ms),
      retries_(retries) {
  if (base_url_.empty()) throw ValidationError("HttpBackend: base url must not be empty");
}

std::string HttpBackend::generate(const GenerateRequest& request) {
  nlohmann::json body;
  body["prompt"] = request.prompt;
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  const std::string payload = body.dump();

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= retries_; ++attempt) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    auto res = client.Post(path_, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 400 && res->status < 500) {
      throw BackendError("http backend rejected request with status " +
                             std::to_string(res->status),
                         false);
    }
    if (res->status != 200) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(res->body);
      return j.at("text").get<std::string>();
    } catch (const std::exception& e) {
      throw BackendError(std::string("http backend returned malformed body: ") + e.what(),
                         false);
    }
  }
  throw BackendError("http backend failed after " + std::to_string(retries_ + 1) +
                     " attempts: " + last_error);
}

std::unique_ptr<HttpBackend> make_http_backend(const std::string& url, int timeout_ms,
                                               int retries) {
  std::string resolved = url;
  if (resolved.empty()) {
    if (const char* env = std::getenv("SMAGDI_HTTP_URL")) resolved = env;
  }
  if (resolved.empty()) {
    throw ValidationError("no HTTP backend url: pass --http-url or set SMAGDI_HTTP_URL");
  }
  return std::make_unique<HttpBackend>(resolved, "/generate", timeout_ms, retries);
}

}  // namespace smagdi::agents
