#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smagdi/debate.hpp"
#include "smagdi/mat.hpp"

namespace smagdi::graph {

inline constexpr int kMagVersion = 1;

enum class NodeKind { kQuestion, kResponse };
enum class EdgeKind { kRoot, kContinuity, kInfluence };

const char* node_kind_name(NodeKind k);
const char* edge_kind_name(EdgeKind k);

struct MAGNode {
  int node_id{0};
  NodeKind kind{NodeKind::kResponse};
  std::string agent_id;  // RESPONSE only
  int round{0};          // RESPONSE only, >= 1; QUESTION counts as round 0
  std::string text;
  std::optional<bool> correct;  // RESPONSE only: extracted == gold
  std::vector<double> semantic_embedding;
  std::vector<double> positional_encoding;
};

struct MAGEdge {
  int src{0};
  int dst{0};
  EdgeKind kind{EdgeKind::kRoot};
  double weight{1.0};
};

// Directed acyclic interaction graph of one debate: one QUESTION node plus
// five RESPONSE nodes per round; edges only ever increase round.
struct InteractionGraph {
  std::string question_id;
  std::vector<MAGNode> nodes;
  std::vector<MAGEdge> edges;
  std::string gold_answer;
  std::string final_answer;

  const MAGNode& question_node() const { return nodes.front(); }
  int num_rounds() const;
};

// ROOT question->round-1 (weight 1); CONTINUITY same agent r->r+1 (weight 1);
// INFLUENCE cross-agent r->r+1 weighted by the influencing agent's
// normalized weight.
InteractionGraph build_graph(const debate::DebateTranscript& transcript,
                             const debate::AgentWeights& weights, const std::string& gold);

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual int dim() const = 0;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

// Deterministic feature-hashing embedder (token n-gram buckets with hashed
// signs, L2-normalized). Desk-scale stand-in for a sentence-transformer.
class HashingEmbedder : public TextEmbedder {
 public:
  explicit HashingEmbedder(int dim = 64);
  int dim() const override { return dim_; }
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  int dim_;
};

// Adapter for sentence-transformer-class services (e.g. all-mpnet-base-v2
// behind an embedding server). POSTs {texts:[...]} and expects
// {vectors:[[...], ...]}; the advertised dim is verified against responses.
class HttpEmbedder : public TextEmbedder {
 public:
  HttpEmbedder(std::string base_url, int dim, std::string path = "/embed",
               int timeout_ms = 30000);
  int dim() const override { return dim_; }
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  std::string base_url_;
  int dim_;
  std::string path_;
  int timeout_ms_;
};

// One vector per text, in order. Embedder failures raise errors naming the
// position that failed.
std::vector<std::vector<double>> embed_nodes(const std::vector<std::string>& texts,
                                             TextEmbedder& embedder);
void attach_semantic_embeddings(InteractionGraph& graph, TextEmbedder& embedder);

// Rows of the k eigenvectors of the symmetric-normalized Laplacian
// L = I - D^{-1/2} A D^{-1/2} of the undirected, unweighted skeleton, for the
// k smallest nonzero eigenvalues. Signs fixed by making each vector's first
// nonzero component positive; zero-padded when fewer than k exist.
nn::Mat laplacian_pe(const InteractionGraph& graph, int k);
void attach_positional_encodings(InteractionGraph& graph, int k);

struct GraphBatch {
  int batch_size{0};
  int max_nodes{0};
  int feature_dim{0};
  // Per graph, padded to max_nodes rows: concat(semantic, positional).
  std::vector<nn::Mat> node_features;
  // Per graph: D^{-1/2} (A + A^T + I) D^{-1/2}, zero on padding.
  std::vector<nn::Mat> adjacency;
  std::vector<std::uint8_t> node_mask;   // batch_size * max_nodes, real nodes
  std::vector<double> labels;            // correctness labels, 0 elsewhere
  std::vector<std::uint8_t> label_mask;  // supervised (real RESPONSE) nodes

  std::size_t flat_index(int graph, int node) const {
    return static_cast<std::size_t>(graph) * max_nodes + node;
  }
};

// Pads node features and normalized adjacency with masks. All graphs must
// carry embeddings of identical dimensions.
GraphBatch tensorize(const std::vector<InteractionGraph>& graphs);

nlohmann::json serialize(const InteractionGraph& graph);
InteractionGraph deserialize(const nlohmann::json& j);

void write_graphs_jsonl(const std::string& path, const std::vector<InteractionGraph>& graphs);

// Streaming JSONL reader; one graph per line, no whole-file buffering.
class GraphReader {
 public:
  explicit GraphReader(const std::string& path);
  ~GraphReader();
  std::optional<InteractionGraph> next();

 private:
  std::unique_ptr<std::ifstream> in_;
  std::string path_;
  std::size_t line_{0};
};

std::vector<InteractionGraph> read_graphs_jsonl(const std::string& path);

}  // namespace smagdi::graph
