#include "smagdi/optim.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "smagdi/error.hpp"

namespace smagdi::nn {

namespace {
constexpr char kMagic[8] = {'S', 'M', 'A', 'G', 'D', 'I', 'C', '1'};
}

void ParamSet::add(const std::string& name, Mat* value) {
  if (find(name) != nullptr) throw ValidationError("ParamSet: duplicate name " + name);
  if (value == nullptr || value->empty()) {
    throw ValidationError("ParamSet: parameter '" + name + "' must be non-empty");
  }
  entries_.push_back(Entry{name, value, Mat(), Mat()});
}

ParamSet::Entry* ParamSet::find(const std::string& name) {
  for (auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::size_t ParamSet::total_parameters() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value->size();
  return n;
}

Adam::Adam(ParamSet& params, AdamConfig cfg) : params_(&params), cfg_(cfg) {
  for (auto& e : params_->entries()) {
    if (e.m.empty()) e.m = Mat(e.value->rows(), e.value->cols());
    if (e.v.empty()) e.v = Mat(e.value->rows(), e.value->cols());
  }
}

void Adam::step(const std::vector<const Mat*>& grads) {
  auto& entries = params_->entries();
  if (grads.size() != entries.size()) {
    throw ValidationError("Adam::step: gradient list does not align with parameters");
  }
  t_ += 1;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t p = 0; p < entries.size(); ++p) {
    auto& e = entries[p];
    const Mat* g = grads[p];
    if (g != nullptr && !g->empty() && !g->same_shape(*e.value)) {
      throw ValidationError("Adam::step: gradient shape mismatch for " + e.name);
    }
    double* w = e.value->data();
    double* m = e.m.data();
    double* v = e.v.data();
    const std::size_t n = e.value->size();
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = (g != nullptr && !g->empty()) ? g->data()[i] : 0.0;
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void save_checkpoint(const std::string& path, const ParamSet& params,
                     const nlohmann::json& extra, std::int64_t adam_steps,
                     bool include_moments) {
  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["extra"] = extra;
  manifest["adam_steps"] = adam_steps;
  manifest["has_moments"] = include_moments;

  std::uint64_t offset = 0;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& e : params.entries()) {
    nlohmann::json t;
    t["name"] = e.name;
    t["rows"] = e.value->rows();
    t["cols"] = e.value->cols();
    t["offset"] = offset;
    offset += e.value->size();
    if (include_moments) {
      t["offset_m"] = offset;
      offset += e.value->size();
      t["offset_v"] = offset;
      offset += e.value->size();
    }
    tensors.push_back(std::move(t));
  }
  manifest["tensors"] = std::move(tensors);

  const std::string mtext = manifest.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw BackendError("cannot open checkpoint for writing: " + path, false);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t mlen = mtext.size();
  out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
  out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  for (const auto& e : params.entries()) {
    out.write(reinterpret_cast<const char*>(e.value->data()),
              static_cast<std::streamsize>(e.value->size() * sizeof(double)));
    if (include_moments) {
      const Mat& m = e.m.empty() ? Mat(e.value->rows(), e.value->cols()) : e.m;
      const Mat& v = e.v.empty() ? Mat(e.value->rows(), e.value->cols()) : e.v;
      out.write(reinterpret_cast<const char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
      out.write(reinterpret_cast<const char*>(v.data()),
                static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
  }
  if (!out) throw BackendError("checkpoint write failed: " + path, false);
}

namespace {

nlohmann::json read_manifest(std::ifstream& in, const std::string& path) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a smagdi checkpoint: " + path, "$");
  }
  std::uint64_t mlen = 0;
  in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
  std::string mtext(mlen, '\0');
  in.read(mtext.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw ParseError("truncated checkpoint manifest: " + path, "$");
  return nlohmann::json::parse(mtext);
}

}  // namespace

CheckpointInfo load_checkpoint(const std::string& path, ParamSet& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BackendError("cannot open checkpoint: " + path, false);
  const nlohmann::json manifest = read_manifest(in, path);
  const bool has_moments = manifest.value("has_moments", false);
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != params.entries().size()) {
    throw ValidationError("checkpoint tensor count does not match model");
  }
  const std::streampos payload = in.tellg();
  auto read_block = [&](std::uint64_t offset, Mat& dst) {
    in.seekg(payload + static_cast<std::streamoff>(offset * sizeof(double)));
    in.read(reinterpret_cast<char*>(dst.data()),
            static_cast<std::streamsize>(dst.size() * sizeof(double)));
    if (!in) throw ParseError("truncated checkpoint payload: " + path, "$.tensors");
  };
  for (const auto& t : tensors) {
    const std::string name = t.at("name").get<std::string>();
    auto* e = params.find(name);
    if (e == nullptr) throw ValidationError("checkpoint tensor '" + name + "' unknown to model");
    if (t.at("rows").get<int>() != e->value->rows() ||
        t.at("cols").get<int>() != e->value->cols()) {
      throw ValidationError("checkpoint tensor '" + name + "' shape mismatch");
    }
    read_block(t.at("offset").get<std::uint64_t>(), *e->value);
    if (has_moments) {
      if (e->m.empty()) e->m = Mat(e->value->rows(), e->value->cols());
      if (e->v.empty()) e->v = Mat(e->value->rows(), e->value->cols());
      read_block(t.at("offset_m").get<std::uint64_t>(), e->m);
      read_block(t.at("offset_v").get<std::uint64_t>(), e->v);
    }
  }
  CheckpointInfo info;
  info.extra = manifest.value("extra", nlohmann::json::object());
  info.adam_steps = manifest.value("adam_steps", std::int64_t{0});
  info.has_moments = has_moments;
  return info;
}

nlohmann::json peek_checkpoint_extra(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BackendError("cannot open checkpoint: " + path, false);
  return read_manifest(in, path).value("extra", nlohmann::json::object());
}

}  // namespace smagdi::nn
