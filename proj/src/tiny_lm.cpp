#include "smagdi/tiny_lm.hpp"

#include <cmath>

#include "smagdi/error.hpp"
#include "smagdi/rng.hpp"

namespace smagdi::distill {

namespace {
constexpr double kInitStd = 0.08;
}

TinyTransformerLM::TinyTransformerLM(const Config& config, std::string name, std::uint64_t seed)
    : cfg_(config), name_(std::move(name)) {
  if (cfg_.dim % cfg_.heads != 0) {
    throw ValidationError("TinyTransformerLM: dim must divide evenly into heads");
  }
  if (cfg_.vocab < 258) throw ValidationError("TinyTransformerLM: vocab must cover bytes+BOS+EOS");
  head_dim_ = cfg_.dim / cfg_.heads;

  SplitMix64 rng(seed);
  tok_emb_ = nn::Mat::gaussian(cfg_.vocab, cfg_.dim, rng, kInitStd);
  pos_emb_ = nn::Mat::gaussian(cfg_.block, cfg_.dim, rng, kInitStd);
  head_ = nn::Mat::gaussian(cfg_.dim, cfg_.vocab, rng, kInitStd);
  for (int l = 0; l < cfg_.layers; ++l) {
    Layer layer;
    for (int h = 0; h < cfg_.heads; ++h) {
      layer.wq.push_back(nn::Mat::gaussian(cfg_.dim, head_dim_, rng, kInitStd));
      layer.wk.push_back(nn::Mat::gaussian(cfg_.dim, head_dim_, rng, kInitStd));
      layer.wv.push_back(nn::Mat::gaussian(cfg_.dim, head_dim_, rng, kInitStd));
      layer.wo.push_back(nn::Mat::gaussian(head_dim_, cfg_.dim, rng, kInitStd));
    }
    layer.mlp_w1 = nn::Mat::gaussian(cfg_.dim, cfg_.mlp_mult * cfg_.dim, rng, kInitStd);
    layer.mlp_w2 = nn::Mat::gaussian(cfg_.mlp_mult * cfg_.dim, cfg_.dim, rng, kInitStd);
    layers_.push_back(std::move(layer));
  }
}

std::vector<int> TinyTransformerLM::tokenize(const std::string& text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (unsigned char c : text) out.push_back(static_cast<int>(c));
  return out;
}

std::string TinyTransformerLM::detokenize(std::span<const int> tokens) const {
  std::string out;
  for (int t : tokens) {
    if (t >= 0 && t < 256) out.push_back(static_cast<char>(t));
  }
  return out;
}

void TinyTransformerLM::register_params(nn::ParamSet& set) {
  set.add(name_ + ".tok_emb", &tok_emb_);
  set.add(name_ + ".pos_emb", &pos_emb_);
  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string p = name_ + ".l" + std::to_string(l);
    for (int h = 0; h < cfg_.heads; ++h) {
      const std::string hs = std::to_string(h);
      set.add(p + ".wq" + hs, &layers_[l].wq[h]);
      set.add(p + ".wk" + hs, &layers_[l].wk[h]);
      set.add(p + ".wv" + hs, &layers_[l].wv[h]);
      set.add(p + ".wo" + hs, &layers_[l].wo[h]);
    }
    set.add(p + ".mlp_w1", &layers_[l].mlp_w1);
    set.add(p + ".mlp_w2", &layers_[l].mlp_w2);
  }
  set.add(name_ + ".head", &head_);
}

std::size_t TinyTransformerLM::num_params() const {
  std::size_t n = tok_emb_.size() + pos_emb_.size() + head_.size();
  for (const auto& l : layers_) {
    for (int h = 0; h < cfg_.heads; ++h) {
      n += l.wq[h].size() + l.wk[h].size() + l.wv[h].size() + l.wo[h].size();
    }
    n += l.mlp_w1.size() + l.mlp_w2.size();
  }
  return n;
}

CausalLM::Bound TinyTransformerLM::bind(nn::Tape& tape, bool requires_grad) {
  // Order must mirror register_params exactly; the trainer aligns gradients
  // with ParamSet entries by position.
  Bound b;
  b.vars.push_back(tape.input(tok_emb_, requires_grad));
  b.vars.push_back(tape.input(pos_emb_, requires_grad));
  for (int l = 0; l < cfg_.layers; ++l) {
    for (int h = 0; h < cfg_.heads; ++h) {
      b.vars.push_back(tape.input(layers_[l].wq[h], requires_grad));
      b.vars.push_back(tape.input(layers_[l].wk[h], requires_grad));
      b.vars.push_back(tape.input(layers_[l].wv[h], requires_grad));
      b.vars.push_back(tape.input(layers_[l].wo[h], requires_grad));
    }
    b.vars.push_back(tape.input(layers_[l].mlp_w1, requires_grad));
    b.vars.push_back(tape.input(layers_[l].mlp_w2, requires_grad));
  }
  b.vars.push_back(tape.input(head_, requires_grad));
  return b;
}

CausalLM::Output TinyTransformerLM::forward(nn::Tape& tape, const Bound& bound,
                                            std::span<const int> tokens) {
  const int t_len = static_cast<int>(tokens.size());
  if (t_len < 1) throw ValidationError("TinyTransformerLM::forward: empty token sequence");
  if (t_len > cfg_.block) {
    throw ValidationError("TinyTransformerLM::forward: sequence exceeds the context window");
  }
  const int per_layer = 4 * cfg_.heads + 2;
  if (static_cast<int>(bound.vars.size()) != 2 + cfg_.layers * per_layer + 1) {
    throw ValidationError("TinyTransformerLM::forward: bound vars do not match this model");
  }

  std::vector<int> ids(tokens.begin(), tokens.end());
  std::vector<int> pos(t_len);
  for (int i = 0; i < t_len; ++i) pos[i] = i;

  nn::Mat causal(t_len, t_len);
  for (int i = 0; i < t_len; ++i) {
    for (int j = i + 1; j < t_len; ++j) causal(i, j) = -1e30;
  }

  const nn::Var tok_var = bound.vars[0];
  const nn::Var pos_var = bound.vars[1];
  nn::Var x = tape.add(tape.embed_rows(tok_var, ids), tape.embed_rows(pos_var, pos));
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));

  for (int l = 0; l < cfg_.layers; ++l) {
    const int base = 2 + l * per_layer;
    nn::Var xn = tape.rmsnorm(x);
    nn::Var attn{-1};
    for (int h = 0; h < cfg_.heads; ++h) {
      const nn::Var wq = bound.vars[base + 4 * h + 0];
      const nn::Var wk = bound.vars[base + 4 * h + 1];
      const nn::Var wv = bound.vars[base + 4 * h + 2];
      const nn::Var wo = bound.vars[base + 4 * h + 3];
      nn::Var q = tape.matmul(xn, wq);
      nn::Var k = tape.matmul(xn, wk);
      nn::Var v = tape.matmul(xn, wv);
      nn::Var scores = tape.scale(tape.matmul_nt(q, k), att_scale);
      nn::Var probs = tape.softmax_rows(scores, &causal);
      nn::Var head_out = tape.matmul(tape.matmul(probs, v), wo);
      attn = h == 0 ? head_out : tape.add(attn, head_out);
    }
    x = tape.add(x, attn);

    const nn::Var w1 = bound.vars[base + 4 * cfg_.heads + 0];
    const nn::Var w2 = bound.vars[base + 4 * cfg_.heads + 1];
    nn::Var xm = tape.rmsnorm(x);
    x = tape.add(x, tape.matmul(tape.relu(tape.matmul(xm, w1)), w2));
  }

  Output out;
  out.hidden = tape.rmsnorm(x);
  out.logits = tape.matmul(out.hidden, bound.vars.back());
  return out;
}

std::string TinyTransformerLM::generate(const std::string& prompt, int max_tokens,
                                        double temperature, std::uint64_t seed) {
  std::vector<int> tokens;
  tokens.push_back(bos_token());
  for (int t : tokenize(prompt)) tokens.push_back(t);

  SplitMix64 rng(seed ^ 0x5eedf00dULL);
  std::string out;
  std::vector<int> window_buf;
  for (int step = 0; step < max_tokens; ++step) {
    // Window like training sequences: BOS first, then the most recent tokens.
    std::span<const int> window(tokens);
    if (static_cast<int>(tokens.size()) > cfg_.block) {
      window_buf.clear();
      window_buf.push_back(tokens.front());  // BOS
      window_buf.insert(window_buf.end(), tokens.end() - (cfg_.block - 1), tokens.end());
      window = window_buf;
    }

    nn::Tape tape;
    const Bound bound = bind(tape, false);
    const Output o = forward(tape, bound, window);
    const nn::Mat& logits = tape.value(o.logits);
    const int last = logits.rows() - 1;

    int next = 0;
    if (temperature <= 0.0) {
      double best = logits(last, 0);
      for (int v = 1; v < cfg_.vocab; ++v) {
        if (logits(last, v) > best) {
          best = logits(last, v);
          next = v;
        }
      }
    } else {
      double maxv = logits(last, 0);
      for (int v = 1; v < cfg_.vocab; ++v) maxv = std::max(maxv, logits(last, v));
      std::vector<double> probs(cfg_.vocab);
      double z = 0.0;
      for (int v = 0; v < cfg_.vocab; ++v) {
        probs[v] = std::exp((logits(last, v) - maxv) / temperature);
        z += probs[v];
      }
      double u = rng.next_double() * z;
      next = cfg_.vocab - 1;
      for (int v = 0; v < cfg_.vocab; ++v) {
        u -= probs[v];
        if (u <= 0.0) {
          next = v;
          break;
        }
      }
    }
    if (next == eos_token()) break;
    tokens.push_back(next);
    if (next >= 0 && next < 256) out.push_back(static_cast<char>(next));
  }
  return out;
}

}  // namespace smagdi::distill
