#include "smagdi/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <httplib.h>

#include "smagdi/error.hpp"
#include "smagdi/linalg.hpp"

namespace smagdi::graph {

const char* node_kind_name(NodeKind k) {
  return k == NodeKind::kQuestion ? "QUESTION" : "RESPONSE";
}

const char* edge_kind_name(EdgeKind k) {
  switch (k) {
    case EdgeKind::kRoot: return "ROOT";
    case EdgeKind::kContinuity: return "CONTINUITY";
    default: return "INFLUENCE";
  }
}

namespace {

NodeKind node_kind_from_name(const std::string& s, const std::string& path) {
  if (s == "QUESTION") return NodeKind::kQuestion;
  if (s == "RESPONSE") return NodeKind::kResponse;
  throw ParseError("unknown node kind '" + s + "'", path);
}

EdgeKind edge_kind_from_name(const std::string& s, const std::string& path) {
  if (s == "ROOT") return EdgeKind::kRoot;
  if (s == "CONTINUITY") return EdgeKind::kContinuity;
  if (s == "INFLUENCE") return EdgeKind::kInfluence;
  throw ParseError("unknown edge kind '" + s + "'", path);
}

}  // namespace

int InteractionGraph::num_rounds() const {
  return nodes.empty() ? 0 : static_cast<int>((nodes.size() - 1) / agents::kRosterSize);
}

InteractionGraph build_graph(const debate::DebateTranscript& transcript,
                             const debate::AgentWeights& weights, const std::string& gold) {
  const int agents_per_round = agents::kRosterSize;
  if (transcript.rounds.empty()) {
    throw ValidationError("build_graph: transcript has no rounds");
  }
  for (const auto& round : transcript.rounds) {
    if (round.size() != static_cast<std::size_t>(agents_per_round)) {
      throw ValidationError("build_graph: each round must hold exactly one response per agent");
    }
  }
  for (std::size_t r = 1; r < transcript.rounds.size(); ++r) {
    for (int i = 0; i < agents_per_round; ++i) {
      if (transcript.rounds[r][i].agent_id != transcript.rounds[0][i].agent_id) {
        throw ValidationError("build_graph: agent order must be stable across rounds");
      }
    }
  }
  if (gold.empty()) throw ValidationError("build_graph: empty gold label");

  InteractionGraph g;
  g.question_id = transcript.question.question_id;
  g.gold_answer = gold;
  g.final_answer = transcript.final_answer;

  MAGNode question;
  question.node_id = 0;
  question.kind = NodeKind::kQuestion;
  question.text = transcript.question.text;
  g.nodes.push_back(std::move(question));

  const int num_rounds = static_cast<int>(transcript.rounds.size());
  auto node_id = [agents_per_round](int round, int agent) {
    return 1 + (round - 1) * agents_per_round + agent;
  };

  for (int r = 1; r <= num_rounds; ++r) {
    for (int i = 0; i < agents_per_round; ++i) {
      const auto& resp = transcript.rounds[r - 1][i];
      MAGNode n;
      n.node_id = node_id(r, i);
      n.kind = NodeKind::kResponse;
      n.agent_id = resp.agent_id;
      n.round = r;
      n.text = resp.raw_text;
      n.correct = resp.extracted_answer == gold;
      g.nodes.push_back(std::move(n));
    }
  }

  for (int i = 0; i < agents_per_round; ++i) {
    g.edges.push_back({0, node_id(1, i), EdgeKind::kRoot, 1.0});
  }
  for (int r = 1; r < num_rounds; ++r) {
    for (int i = 0; i < agents_per_round; ++i) {
      g.edges.push_back({node_id(r, i), node_id(r + 1, i), EdgeKind::kContinuity, 1.0});
      for (int j = 0; j < agents_per_round; ++j) {
        if (j == i) continue;
        const std::string& influencer = transcript.rounds[0][j].agent_id;
        const auto it = weights.normalized.find(influencer);
        if (it == weights.normalized.end()) {
          throw ValidationError("build_graph: no normalized weight for agent " + influencer);
        }
        g.edges.push_back({node_id(r, j), node_id(r + 1, i), EdgeKind::kInfluence, it->second});
      }
    }
  }
  return g;
}

HashingEmbedder::HashingEmbedder(int dim) : dim_(dim) {
  if (dim < 1) throw ValidationError("HashingEmbedder: dim must be >= 1");
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

}  // namespace

std::vector<std::vector<double>> HashingEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    std::vector<double> v(dim_, 0.0);
    const auto tokens = tokenize_words(text);
    auto bump = [&](const std::string& feature) {
      const std::uint64_t h = fnv1a(feature);
      const int bucket = static_cast<int>(h % static_cast<std::uint64_t>(dim_));
      v[bucket] += (h >> 63) ? -1.0 : 1.0;
    };
    for (const auto& t : tokens) bump(t);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) bump(tokens[i] + " " + tokens[i + 1]);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (double& x : v) x /= norm;
    }
    out.push_back(std::move(v));
  }
  return out;
}

HttpEmbedder::HttpEmbedder(std::string base_url, int dim, std::string path, int timeout_ms)
    : base_url_(std::move(base_url)), dim_(dim), path_(std::move(path)),
      timeout_ms_(timeout_ms) {
  if (dim < 1) throw ValidationError("HttpEmbedder: dim must be >= 1");
}

std::vector<std::vector<double>> HttpEmbedder::embed(const std::vector<std::string>& texts) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
  client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
  nlohmann::json body;
  body["texts"] = texts;
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res || res->status != 200) {
    throw BackendError("embedding service failure" +
                       (res ? " (status " + std::to_string(res->status) + ")" : ""));
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(res->body);
  } catch (const std::exception& e) {
    throw BackendError(std::string("embedding service returned malformed body: ") + e.what(),
                       false);
  }
  auto vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
  return vectors;
}

std::vector<std::vector<double>> embed_nodes(const std::vector<std::string>& texts,
                                             TextEmbedder& embedder) {
  const auto vectors = embedder.embed(texts);
  if (vectors.size() != texts.size()) {
    throw BackendError("embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                           std::to_string(texts.size()) + " texts",
                       false);
  }
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (static_cast<int>(vectors[i].size()) != embedder.dim()) {
      throw BackendError("embedder dim mismatch at node_id " + std::to_string(i) +
                             ": expected " + std::to_string(embedder.dim()) + ", got " +
                             std::to_string(vectors[i].size()),
                         false);
    }
  }
  return vectors;
}

void attach_semantic_embeddings(InteractionGraph& graph, TextEmbedder& embedder) {
  std::vector<std::string> texts;
  texts.reserve(graph.nodes.size());
  for (const auto& n : graph.nodes) texts.push_back(n.text);
  auto vectors = embed_nodes(texts, embedder);
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    graph.nodes[i].semantic_embedding = std::move(vectors[i]);
  }
}

nn::Mat laplacian_pe(const InteractionGraph& graph, int k) {
  const int n = static_cast<int>(graph.nodes.size());
  if (k < 1) throw ValidationError("laplacian_pe: k must be >= 1");
  if (k >= n) throw ValidationError("laplacian_pe: k must be at most |V| - 1");

  // Undirected, unweighted skeleton.
  nn::Mat adj(n, n);
  for (const auto& e : graph.edges) {
    if (e.src == e.dst) continue;
    adj(e.src, e.dst) = 1.0;
    adj(e.dst, e.src) = 1.0;
  }
  std::vector<double> dinv_sqrt(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) deg += adj(i, j);
    if (deg > 0.0) dinv_sqrt[i] = 1.0 / std::sqrt(deg);
  }
  nn::Mat lap(n, n);
  for (int i = 0; i < n; ++i) {
    lap(i, i) = 1.0;
    for (int j = 0; j < n; ++j) {
      if (adj(i, j) != 0.0) lap(i, j) -= dinv_sqrt[i] * dinv_sqrt[j];
    }
  }

  const auto eig = nn::eigh_sym(lap);
  constexpr double kZeroTol = 1e-8;
  constexpr double kSignTol = 1e-10;

  nn::Mat pe(n, k);
  int col = 0;
  for (int e = 0; e < n && col < k; ++e) {
    if (eig.eigenvalues[e] <= kZeroTol) continue;
    double sign = 1.0;
    for (int i = 0; i < n; ++i) {
      if (std::abs(eig.eigenvectors(i, e)) > kSignTol) {
        sign = eig.eigenvectors(i, e) > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (int i = 0; i < n; ++i) pe(i, col) = sign * eig.eigenvectors(i, e);
    ++col;
  }
  // Remaining columns (graphs with fewer than k nonzero eigenvalues) stay 0.
  return pe;
}

void attach_positional_encodings(InteractionGraph& graph, int k) {
  if (k < 1) throw ValidationError("attach_positional_encodings: k must be >= 1");
  // Small graphs have fewer than k spectral dimensions available; the extra
  // columns stay zero so every graph carries width-k encodings.
  const int k_eff = std::min(k, static_cast<int>(graph.nodes.size()) - 1);
  const nn::Mat pe = laplacian_pe(graph, k_eff);
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    auto& vec = graph.nodes[i].positional_encoding;
    vec.assign(static_cast<std::size_t>(k), 0.0);
    for (int c = 0; c < k_eff; ++c) vec[c] = pe(static_cast<int>(i), c);
  }
}

GraphBatch tensorize(const std::vector<InteractionGraph>& graphs) {
  if (graphs.empty()) throw ValidationError("tensorize: empty graph list");

  const int d_sem = static_cast<int>(graphs[0].nodes.at(0).semantic_embedding.size());
  const int d_pe = static_cast<int>(graphs[0].nodes.at(0).positional_encoding.size());
  if (d_sem + d_pe == 0) {
    throw ValidationError("tensorize: graphs carry no node features; attach embeddings first");
  }
  int max_nodes = 0;
  for (const auto& g : graphs) {
    max_nodes = std::max(max_nodes, static_cast<int>(g.nodes.size()));
    for (const auto& nde : g.nodes) {
      if (static_cast<int>(nde.semantic_embedding.size()) != d_sem ||
          static_cast<int>(nde.positional_encoding.size()) != d_pe) {
        throw ValidationError("tensorize: embedding dimensions differ across nodes/graphs");
      }
    }
  }

  GraphBatch batch;
  batch.batch_size = static_cast<int>(graphs.size());
  batch.max_nodes = max_nodes;
  batch.feature_dim = d_sem + d_pe;
  batch.node_mask.assign(static_cast<std::size_t>(batch.batch_size) * max_nodes, 0);
  batch.labels.assign(static_cast<std::size_t>(batch.batch_size) * max_nodes, 0.0);
  batch.label_mask.assign(static_cast<std::size_t>(batch.batch_size) * max_nodes, 0);

  for (int b = 0; b < batch.batch_size; ++b) {
    const auto& g = graphs[b];
    const int n = static_cast<int>(g.nodes.size());

    nn::Mat feat(max_nodes, batch.feature_dim);
    for (int i = 0; i < n; ++i) {
      const auto& node = g.nodes[i];
      for (int c = 0; c < d_sem; ++c) feat(i, c) = node.semantic_embedding[c];
      for (int c = 0; c < d_pe; ++c) feat(i, d_sem + c) = node.positional_encoding[c];
      batch.node_mask[batch.flat_index(b, i)] = 1;
      if (node.kind == NodeKind::kResponse) {
        batch.labels[batch.flat_index(b, i)] = node.correct.value_or(false) ? 1.0 : 0.0;
        batch.label_mask[batch.flat_index(b, i)] = 1;
      }
    }
    batch.node_features.push_back(std::move(feat));

    // A_hat = A + A^T + I over real nodes, then symmetric normalization.
    nn::Mat ahat(max_nodes, max_nodes);
    for (const auto& e : g.edges) {
      ahat(e.src, e.dst) += e.weight;
      ahat(e.dst, e.src) += e.weight;
    }
    for (int i = 0; i < n; ++i) ahat(i, i) += 1.0;
    std::vector<double> dinv(max_nodes, 0.0);
    for (int i = 0; i < n; ++i) {
      double deg = 0.0;
      for (int j = 0; j < n; ++j) deg += ahat(i, j);
      if (deg > 0.0) dinv[i] = 1.0 / std::sqrt(deg);
    }
    nn::Mat norm(max_nodes, max_nodes);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) norm(i, j) = dinv[i] * ahat(i, j) * dinv[j];
    }
    batch.adjacency.push_back(std::move(norm));
  }
  return batch;
}

nlohmann::json serialize(const InteractionGraph& graph) {
  nlohmann::json j;
  j["mag_version"] = kMagVersion;
  j["question_id"] = graph.question_id;
  j["gold_answer"] = graph.gold_answer;
  j["final_answer"] = graph.final_answer;
  auto nodes = nlohmann::json::array();
  for (const auto& n : graph.nodes) {
    nlohmann::json nj;
    nj["node_id"] = n.node_id;
    nj["kind"] = node_kind_name(n.kind);
    nj["text"] = n.text;
    if (n.kind == NodeKind::kResponse) {
      nj["agent_id"] = n.agent_id;
      nj["round"] = n.round;
      nj["correct"] = n.correct.value_or(false);
    }
    nj["semantic_embedding"] = n.semantic_embedding;
    nj["positional_encoding"] = n.positional_encoding;
    nodes.push_back(std::move(nj));
  }
  j["nodes"] = std::move(nodes);
  auto edges = nlohmann::json::array();
  for (const auto& e : graph.edges) {
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"kind", edge_kind_name(e.kind)},
                     {"weight", e.weight}});
  }
  j["edges"] = std::move(edges);
  return j;
}

InteractionGraph deserialize(const nlohmann::json& j) {
  for (const char* key :
       {"mag_version", "question_id", "gold_answer", "final_answer", "nodes", "edges"}) {
    if (!j.contains(key)) throw ParseError("missing key", std::string("$.") + key);
  }
  if (j.at("mag_version").get<int>() != kMagVersion) {
    throw ParseError("unsupported mag_version", "$.mag_version");
  }

  InteractionGraph g;
  g.question_id = j.at("question_id").get<std::string>();
  g.gold_answer = j.at("gold_answer").get<std::string>();
  g.final_answer = j.at("final_answer").get<std::string>();

  int question_nodes = 0;
  std::size_t i = 0;
  for (const auto& nj : j.at("nodes")) {
    const std::string path = "$.nodes[" + std::to_string(i) + "]";
    for (const char* key : {"node_id", "kind", "text"}) {
      if (!nj.contains(key)) throw ParseError("missing key", path + "." + key);
    }
    MAGNode n;
    n.node_id = nj.at("node_id").get<int>();
    n.kind = node_kind_from_name(nj.at("kind").get<std::string>(), path + ".kind");
    n.text = nj.at("text").get<std::string>();
    if (n.kind == NodeKind::kResponse) {
      for (const char* key : {"agent_id", "round", "correct"}) {
        if (!nj.contains(key)) throw ParseError("missing key", path + "." + key);
      }
      n.agent_id = nj.at("agent_id").get<std::string>();
      n.round = nj.at("round").get<int>();
      n.correct = nj.at("correct").get<bool>();
    } else {
      ++question_nodes;
    }
    if (nj.contains("semantic_embedding")) {
      n.semantic_embedding = nj.at("semantic_embedding").get<std::vector<double>>();
    }
    if (nj.contains("positional_encoding")) {
      n.positional_encoding = nj.at("positional_encoding").get<std::vector<double>>();
    }
    g.nodes.push_back(std::move(n));
    ++i;
  }
  if (question_nodes != 1) {
    throw ParseError("graph must contain exactly one QUESTION node", "$.nodes");
  }

  i = 0;
  const int n_nodes = static_cast<int>(g.nodes.size());
  for (const auto& ej : j.at("edges")) {
    const std::string path = "$.edges[" + std::to_string(i) + "]";
    for (const char* key : {"src", "dst", "kind", "weight"}) {
      if (!ej.contains(key)) throw ParseError("missing key", path + "." + key);
    }
    MAGEdge e;
    e.src = ej.at("src").get<int>();
    e.dst = ej.at("dst").get<int>();
    e.kind = edge_kind_from_name(ej.at("kind").get<std::string>(), path + ".kind");
    e.weight = ej.at("weight").get<double>();
    if (e.src < 0 || e.src >= n_nodes || e.dst < 0 || e.dst >= n_nodes) {
      throw ParseError("edge endpoint out of range", path);
    }
    g.edges.push_back(e);
    ++i;
  }
  return g;
}

void write_graphs_jsonl(const std::string& path, const std::vector<InteractionGraph>& graphs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw BackendError("cannot open graph store for writing: " + path, false);
  for (const auto& g : graphs) out << serialize(g).dump() << "\n";
}

GraphReader::GraphReader(const std::string& path)
    : in_(std::make_unique<std::ifstream>(path)), path_(path) {
  if (!*in_) throw BackendError("cannot open graph store: " + path, false);
}

GraphReader::~GraphReader() = default;

std::optional<InteractionGraph> GraphReader::next() {
  std::string line;
  while (std::getline(*in_, line)) {
    ++line_;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSONL line ") + std::to_string(line_) + " in " +
                           path_ + ": " + e.what(),
                       "$");
    }
    return deserialize(j);
  }
  return std::nullopt;
}

std::vector<InteractionGraph> read_graphs_jsonl(const std::string& path) {
  GraphReader reader(path);
  std::vector<InteractionGraph> graphs;
  while (auto g = reader.next()) graphs.push_back(std::move(*g));
  return graphs;
}

}  // namespace smagdi::graph
