// Copyright 2026 The recipegen Authors
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

#include "recipegen/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "recipegen/corpus.hpp"
#include "recipegen/errors.hpp"

namespace recipegen::nn {

namespace {

constexpr std::string_view kMagic = "recipegen-checkpoint";
constexpr int kVersion = 1;
constexpr std::string_view kEndHeader = "end_header\n";

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string config_line(const ModelConfig& config) {
  std::ostringstream os;
  if (const auto* c = std::get_if<LSTMConfig>(&config)) {
    os << "vocab_size=" << c->vocab_size << " embed_dim=" << c->embed_dim << " hidden_dim=" << c->hidden_dim
       << " num_layers=" << c->num_layers << " context_len=" << c->context_len;
  } else {
    const auto& t = std::get<TransformerConfig>(config);
    os << "vocab_size=" << t.vocab_size << " d_model=" << t.d_model << " n_heads=" << t.n_heads
       << " n_layers=" << t.n_layers << " ff_dim=" << t.ff_dim << " context_len=" << t.context_len
       << " dropout_rate=" << fmt_double(t.dropout_rate) << " tie_weights=" << (t.tie_weights ? 1 : 0);
  }
  return os.str();
}

std::map<std::string, std::string> parse_kv(std::istringstream& is) {
  std::map<std::string, std::string> kv;
  std::string item;
  while (is >> item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint header item without '=': " + item);
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return kv;
}

std::size_t need_size(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("checkpoint config lacks " + key);
  return std::stoull(it->second);
}

ModelConfig parse_config(ModelKind kind, const std::map<std::string, std::string>& kv) {
  if (kind == ModelKind::lstm) {
    LSTMConfig c;
    c.vocab_size = need_size(kv, "vocab_size");
    c.embed_dim = need_size(kv, "embed_dim");
    c.hidden_dim = need_size(kv, "hidden_dim");
    c.num_layers = need_size(kv, "num_layers");
    c.context_len = need_size(kv, "context_len");
    return c;
  }
  TransformerConfig t;
  t.vocab_size = need_size(kv, "vocab_size");
  t.d_model = need_size(kv, "d_model");
  t.n_heads = need_size(kv, "n_heads");
  t.n_layers = need_size(kv, "n_layers");
  t.ff_dim = need_size(kv, "ff_dim");
  t.context_len = need_size(kv, "context_len");
  auto it = kv.find("dropout_rate");
  if (it == kv.end()) throw FormatError("checkpoint config lacks dropout_rate");
  t.dropout_rate = std::stod(it->second);
  t.tie_weights = need_size(kv, "tie_weights") != 0;
  return t;
}

void append_le(std::string& out, double x) {
  auto bits = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double read_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::string shape_field(const Shape& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s;
}

std::vector<double> last_row(const Tensor& logits) {
  const std::size_t v = logits.cols();
  const auto data = logits.data();
  return {data.end() - static_cast<std::ptrdiff_t>(v), data.end()};
}

class LstmDecode final : public DecodeState {
 public:
  explicit LstmDecode(const Model& model)
      : model_(model),
        config_(std::get<LSTMConfig>(model.config())),
        state_(LSTMState::zeros(config_, 1)) {}

  std::vector<double> feed(std::span<const TokenId> ids) override {
    if (ids.empty()) throw ValidationError("feed() needs at least one token");
    std::vector<std::size_t> in(ids.begin(), ids.end());
    Tape tape(false);
    auto out = lstm_forward(config_, frozen(tape, model_.params()), in, 1, in.size(), &state_);
    state_ = std::move(out.final);
    return last_row(out.logits.value());
  }

 private:
  const Model& model_;
  LSTMConfig config_;
  LSTMState state_;
};

class TransformerDecode final : public DecodeState {
 public:
  explicit TransformerDecode(const Model& model) : model_(model) {}

  std::vector<double> feed(std::span<const TokenId> ids) override {
    if (ids.empty()) throw ValidationError("feed() needs at least one token");
    history_.insert(history_.end(), ids.begin(), ids.end());
    const std::size_t ctx = model_.context_len();
    if (history_.size() > ctx) history_.erase(history_.begin(), history_.end() - static_cast<std::ptrdiff_t>(ctx));
    Tape tape(false);
    Var logits = model_.forward(tape, frozen(tape, model_.params()), history_, 1, history_.size());
    return last_row(logits.value());
  }

 private:
  const Model& model_;
  std::vector<std::size_t> history_;
};

}  // namespace

std::string_view to_string(ModelKind kind) { return kind == ModelKind::lstm ? "lstm" : "transformer"; }

ModelKind parse_model_kind(std::string_view name) {
  if (name == "lstm") return ModelKind::lstm;
  if (name == "transformer") return ModelKind::transformer;
  throw ValidationError("unknown model kind '" + std::string(name) + "'");
}

std::vector<ParamSpec> manifest(const ModelConfig& config) {
  return std::visit(
      [](const auto& c) -> std::vector<ParamSpec> {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, LSTMConfig>) {
          return lstm_manifest(c);
        } else {
          return transformer_manifest(c);
        }
      },
      config);
}

Model::Model(ModelConfig config, Vocabulary vocab) : config_(std::move(config)), vocab_(std::move(vocab)) {
  const auto specs = manifest(config_);
  params_ = ParameterSet(specs);
}

Model Model::create(ModelConfig config, Vocabulary vocab, std::uint64_t seed) {
  std::visit([&](auto& c) { c.vocab_size = vocab.size(); }, config);
  Model m(std::move(config), std::move(vocab));
  std::mt19937_64 rng(seed);
  if (const auto* c = std::get_if<LSTMConfig>(&m.config_)) {
    lstm_init(*c, m.params_, rng);
  } else {
    transformer_init(std::get<TransformerConfig>(m.config_), m.params_, rng);
  }
  m.meta.seed = seed;
  return m;
}

ModelKind Model::kind() const {
  return std::holds_alternative<LSTMConfig>(config_) ? ModelKind::lstm : ModelKind::transformer;
}

std::size_t Model::context_len() const {
  return std::visit([](const auto& c) { return c.context_len; }, config_);
}

Var Model::forward(Tape&, const ParamFn& param, std::span<const std::size_t> ids, std::size_t batch,
                   std::size_t seq, std::mt19937_64* rng) const {
  if (const auto* c = std::get_if<LSTMConfig>(&config_)) {
    return lstm_forward(*c, param, ids, batch, seq).logits;
  }
  return transformer_forward(std::get<TransformerConfig>(config_), param, ids, batch, seq, rng);
}

std::unique_ptr<DecodeState> Model::start_decoding() const {
  if (kind() == ModelKind::lstm) return std::make_unique<LstmDecode>(*this);
  return std::make_unique<TransformerDecode>(*this);
}

std::string Model::serialize() const {
  const std::string vocab_text = vocab_.to_text();
  std::ostringstream hs;
  hs << kMagic << ' ' << kVersion << '\n';
  hs << "kind " << to_string(kind()) << '\n';
  hs << "config " << config_line(config_) << '\n';
  hs << "meta steps=" << meta.steps << " final_loss=" << fmt_double(meta.final_loss) << " seed=" << meta.seed
     << '\n';
  hs << "vocab_hash " << vocab_.content_hash() << '\n';
  hs << "vocab_bytes " << vocab_text.size() << '\n';
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    hs << "param " << params_.name(i) << ' ' << shape_field(params_.at(i).shape()) << ' ' << offset << '\n';
    offset += params_.at(i).size() * sizeof(double);
  }
  hs << kEndHeader;
  std::string out = hs.str();
  out += vocab_text;
  out.reserve(out.size() + offset);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    for (double x : params_.at(i).data()) append_le(out, x);
  }
  return out;
}

Model Model::deserialize(std::string_view bytes) {
  const auto end = bytes.find(kEndHeader);
  if (end == std::string_view::npos) throw FormatError("checkpoint header is not terminated");
  std::istringstream hs{std::string(bytes.substr(0, end))};
  std::string line;
  auto next_line = [&](std::string_view key) {
    if (!std::getline(hs, line)) throw FormatError("checkpoint header ends before " + std::string(key));
    if (!line.starts_with(key)) throw FormatError("expected '" + std::string(key) + "' in checkpoint header");
    return std::istringstream(line.substr(key.size()));
  };

  {
    auto is = next_line(kMagic);
    int version = 0;
    is >> version;
    if (version != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  std::string kind_name;
  next_line("kind ") >> kind_name;
  const ModelKind kind = parse_model_kind(kind_name);
  auto config_is = next_line("config ");
  ModelConfig config = parse_config(kind, parse_kv(config_is));
  auto meta_is = next_line("meta ");
  const auto meta_kv = parse_kv(meta_is);
  std::string vocab_hash;
  next_line("vocab_hash ") >> vocab_hash;
  std::size_t vocab_bytes = 0;
  next_line("vocab_bytes ") >> vocab_bytes;

  struct Entry {
    std::string name;
    std::string shape;
    std::size_t offset;
  };
  std::vector<Entry> entries;
  while (std::getline(hs, line)) {
    if (!line.starts_with("param ")) throw FormatError("unexpected checkpoint header line: " + line);
    std::istringstream ps(line.substr(6));
    Entry e;
    if (!(ps >> e.name >> e.shape >> e.offset)) throw FormatError("bad param line: " + line);
    entries.push_back(std::move(e));
  }

  const std::size_t data_start = end + kEndHeader.size();
  if (bytes.size() < data_start + vocab_bytes) throw FormatError("checkpoint truncated inside vocabulary");
  Vocabulary vocab = Vocabulary::from_text(bytes.substr(data_start, vocab_bytes));
  if (vocab.content_hash() != vocab_hash) throw CompatibilityError("embedded vocabulary does not match its hash");
  const std::size_t config_vocab = std::visit([](const auto& c) { return c.vocab_size; }, config);
  if (config_vocab != vocab.size()) {
    throw CompatibilityError("model vocab_size " + std::to_string(config_vocab) + " != vocabulary size " +
                             std::to_string(vocab.size()));
  }

  Model m(std::move(config), std::move(vocab));
  if (entries.size() != m.params_.size()) throw CompatibilityError("checkpoint parameter count mismatch");
  const std::string_view data = bytes.substr(data_start + vocab_bytes);
  std::size_t expected_offset = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor& t = m.params_.at(i);
    if (entries[i].name != m.params_.name(i) || entries[i].shape != shape_field(t.shape())) {
      throw CompatibilityError("checkpoint parameter '" + entries[i].name + "' " + entries[i].shape +
                               " does not match manifest entry '" + m.params_.name(i) + "' " +
                               shape_field(t.shape()));
    }
    if (entries[i].offset != expected_offset) throw FormatError("checkpoint parameter offsets are not contiguous");
    const std::size_t nbytes = t.size() * sizeof(double);
    if (data.size() < expected_offset + nbytes) throw FormatError("checkpoint truncated in '" + entries[i].name + "'");
    const char* p = data.data() + expected_offset;
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = read_le(p + 8 * j);
    expected_offset += nbytes;
  }
  if (data.size() != expected_offset) throw FormatError("trailing bytes after checkpoint parameters");

  auto get_meta = [&](const std::string& key) {
    auto it = meta_kv.find(key);
    if (it == meta_kv.end()) throw FormatError("checkpoint meta lacks " + key);
    return it->second;
  };
  m.meta.steps = std::stoull(get_meta("steps"));
  m.meta.final_loss = std::stod(get_meta("final_loss"));
  m.meta.seed = std::stoull(get_meta("seed"));
  return m;
}

void Model::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

Model Model::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

}  // namespace recipegen::nn
