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

#include "recipegen/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "recipegen/errors.hpp"
#include "recipegen/rng.hpp"

namespace recipegen::nn {

// ---------------------------------------------------------------------------
// Tape

Var Tape::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant_ref(const Tensor& value) {
  Node n;
  n.ref = &value;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor& source) {
  Node n;
  n.ref = &source;
  n.sink = &source;
  n.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::push(Tensor value, bool requires_grad, BackwardFn fn) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad && grad_enabled_;
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(Var v) const {
  const Node& n = nodes_[v.index()];
  return n.ref ? *n.ref : n.owned;
}

std::vector<double>& Tape::grad(Var v) {
  Node& n = nodes_[v.index()];
  if (n.grad.empty()) n.grad.assign(value(v).size(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw Error("backward() called with a value from another tape");
  if (value(loss).size() != 1) throw ShapeError("backward() needs a single-element loss");
  if (!nodes_[loss.index()].requires_grad) return;
  grad(loss)[0] = 1.0;
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(Var(this, i));
    if (n.sink) {
      auto g = n.sink->grad();
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += n.grad[j];
    }
  }
}

// ---------------------------------------------------------------------------
// Ops

namespace {

struct Dims {
  std::size_t rows;
  std::size_t cols;
};

Dims dims(const Tensor& t) {
  if (t.rank() > 2 || t.rank() == 0) {
    throw ShapeError("ops take rank-1 or rank-2 tensors, got " + shape_string(t.shape()));
  }
  return {t.rows(), t.cols()};
}

bool needs(Var v) { return v.tape().requires_grad(v); }

void same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw Error("op inputs recorded on different tapes");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
}

// Elementwise op whose derivative is expressed through input x and output y.
template <typename F, typename D>
Var unary(Var a, F f, D df) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return a.tape().push(std::move(y), needs(a), [a, df](Var out) {
    Tape& t = a.tape();
    const auto& dy = t.grad(out);
    const Tensor& x = a.value();
    const Tensor& y = out.value();
    auto& dx = t.grad(a);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * df(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const auto [m, k] = dims(A);
  const auto [k2, n] = dims(B);
  if (k != k2) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_string(A.shape()) + " x " +
                     shape_string(B.shape()));
  }
  Tensor C({m, n});
  const double* ap = A.data().data();
  const double* bp = B.data().data();
  double* cp = C.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = cp + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ap[i * k + p];
      const double* brow = bp + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return a.tape().push(std::move(C), needs(a) || needs(b), [a, b, m, k, n](Var out) {
    Tape& t = a.tape();
    const double* dc = t.grad(out).data();
    const double* ap = a.value().data().data();
    const double* bp = b.value().data().data();
    if (needs(a)) {
      double* da = t.grad(a).data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* dcrow = dc + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = bp + p * n;
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += dcrow[j] * brow[j];
          da[i * k + p] += s;
        }
      }
    }
    if (needs(b)) {
      double* db = t.grad(b).data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* dcrow = dc + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double av = ap[i * k + p];
          double* dbrow = db + p * n;
          for (std::size_t j = 0; j < n; ++j) dbrow[j] += av * dcrow[j];
        }
      }
    }
  });
}

Var transpose(Var a) {
  const Tensor& x = a.value();
  const auto [m, n] = dims(x);
  Tensor y({n, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) y[j * m + i] = x[i * n + j];
  }
  return a.tape().push(std::move(y), needs(a), [a, m, n](Var out) {
    Tape& t = a.tape();
    const auto& dy = t.grad(out);
    auto& dx = t.grad(a);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) dx[i * n + j] += dy[j * m + i];
    }
  });
}

Var add(Var a, Var b) {
  same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor y(a.value().shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + b.value()[i];
  return a.tape().push(std::move(y), needs(a) || needs(b), [a, b](Var out) {
    Tape& t = a.tape();
    const auto& dy = t.grad(out);
    for (Var v : {a, b}) {
      if (!needs(v)) continue;
      auto& dv = t.grad(v);
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] += dy[i];
    }
  });
}

Var add_bias(Var a, Var bias) {
  same_tape(a, bias);
  const auto [m, n] = dims(a.value());
  if (bias.value().size() != n) {
    throw ShapeError("add_bias: bias of " + shape_string(bias.value().shape()) + " for " +
                     shape_string(a.value().shape()));
  }
  Tensor y(a.value().shape());
  const auto& x = a.value();
  const auto& bv = bias.value();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] = x[i * n + j] + bv[j];
  }
  return a.tape().push(std::move(y), needs(a) || needs(bias), [a, bias, m, n](Var out) {
    Tape& t = a.tape();
    const auto& dy = t.grad(out);
    if (needs(a)) {
      auto& dx = t.grad(a);
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
    }
    if (needs(bias)) {
      auto& db = t.grad(bias);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) db[j] += dy[i * n + j];
      }
    }
  });
}

Var mul(Var a, Var b) {
  same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor y(a.value().shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] * b.value()[i];
  return a.tape().push(std::move(y), needs(a) || needs(b), [a, b](Var out) {
    Tape& t = a.tape();
    const auto& dy = t.grad(out);
    if (needs(a)) {
      auto& da = t.grad(a);
      const auto& bv = b.value();
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * bv[i];
    }
    if (needs(b)) {
      auto& db = t.grad(b);
      const auto& av = a.value();
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy[i] * av[i];
    }
  });
}

Var scale(Var a, double factor) {
  return unary(a, [factor](double x) { return x * factor; },
               [factor](double, double) { return factor; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        // Split by sign so exp never overflows.
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var gelu(Var a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double k = 0.044715;
  return unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::tanh(c * (x + k * x * x * x))); },
      [](double x, double) {
        const double th = std::tanh(c * (x + k * x * x * x));
        return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * c * (1.0 + 3.0 * k * x * x);
      });
}

Var softmax(Var a, int axis) {
  const Tensor& x = a.value();
  const auto [rows, cols] = dims(x);
  if (x.rank() == 1 && (axis == 0 || axis == -1)) axis = 1;
  if (axis == -1) axis = 1;
  if (axis != 0 && axis != 1) throw ShapeError("softmax: axis must be 0 or 1");
  // Lanes of length `len`, element j of lane l at base(l) + j*stride.
  const std::size_t lanes = axis == 1 ? rows : cols;
  const std::size_t len = axis == 1 ? cols : rows;
  const std::size_t stride = axis == 1 ? 1 : cols;
  auto base = [axis, cols](std::size_t lane) { return axis == 1 ? lane * cols : lane; };

  Tensor y(x.shape());
  for (std::size_t l = 0; l < lanes; ++l) {
    const std::size_t b0 = base(l);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < len; ++j) {
      const double v = x[b0 + j * stride];
      if (std::isnan(v)) throw NanError("softmax: NaN input");
      mx = std::max(mx, v);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      const double e = std::exp(x[b0 + j * stride] - mx);
      y[b0 + j * stride] = e;
      total += e;
    }
    for (std::size_t j = 0; j < len; ++j) y[b0 + j * stride] /= total;
  }
  return a.tape().push(std::move(y), needs(a), [a, lanes, len, stride, base](Var out) {
    Tape& t = a.tape();
    const auto& dy = t.grad(out);
    const Tensor& y = out.value();
    auto& dx = t.grad(a);
    for (std::size_t l = 0; l < lanes; ++l) {
      const std::size_t b0 = base(l);
      double dot = 0.0;
      for (std::size_t j = 0; j < len; ++j) dot += dy[b0 + j * stride] * y[b0 + j * stride];
      for (std::size_t j = 0; j < len; ++j) {
        const std::size_t idx = b0 + j * stride;
        dx[idx] += y[idx] * (dy[idx] - dot);
      }
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  same_tape(x, gain);
  same_tape(x, bias);
  const Tensor& xv = x.value();
  const auto [rows, cols] = dims(xv);
  if (gain.value().size() != cols || bias.value().size() != cols) {
    throw ShapeError("layer_norm: gain/bias must match the last dimension " + std::to_string(cols));
  }
  auto xhat = std::make_shared<std::vector<double>>(xv.size());
  auto rstd = std::make_shared<std::vector<double>>(rows);
  Tensor y(xv.shape());
  const auto& g = gain.value();
  const auto& b = bias.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data().data() + r * cols;
    double mean = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mean += row[j];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(cols);
    const double rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t j = 0; j < cols; ++j) {
      const double h = (row[j] - mean) * rs;
      (*xhat)[r * cols + j] = h;
      y[r * cols + j] = h * g[j] + b[j];
    }
  }
  const bool req = needs(x) || needs(gain) || needs(bias);
  return x.tape().push(std::move(y), req, [x, gain, bias, xhat, rstd, rows, cols](Var out) {
    Tape& t = x.tape();
    const auto& dy = t.grad(out);
    const auto& g = gain.value();
    if (needs(gain) || needs(bias)) {
      auto* dg = needs(gain) ? &t.grad(gain) : nullptr;
      auto* db = needs(bias) ? &t.grad(bias) : nullptr;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < cols; ++j) {
          const std::size_t i = r * cols + j;
          if (dg) (*dg)[j] += dy[i] * (*xhat)[i];
          if (db) (*db)[j] += dy[i];
        }
      }
    }
    if (needs(x)) {
      auto& dx = t.grad(x);
      const double n = static_cast<double>(cols);
      for (std::size_t r = 0; r < rows; ++r) {
        double mean_dh = 0.0;
        double mean_dh_h = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
          const std::size_t i = r * cols + j;
          const double dh = dy[i] * g[j];
          mean_dh += dh;
          mean_dh_h += dh * (*xhat)[i];
        }
        mean_dh /= n;
        mean_dh_h /= n;
        for (std::size_t j = 0; j < cols; ++j) {
          const std::size_t i = r * cols + j;
          const double dh = dy[i] * g[j];
          dx[i] += (*rstd)[r] * (dh - mean_dh - (*xhat)[i] * mean_dh_h);
        }
      }
    }
  });
}

Var embedding(Var table, std::span<const std::size_t> ids) {
  const Tensor& tv = table.value();
  const auto [vocab, width] = dims(tv);
  for (auto id : ids) {
    if (id >= vocab) {
      throw RangeError("embedding: id " + std::to_string(id) + " out of range for " +
                       std::to_string(vocab) + " rows");
    }
  }
  Tensor y({ids.size(), width});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    std::copy_n(tv.data().data() + ids[r] * width, width, y.data().data() + r * width);
  }
  auto rows = std::make_shared<std::vector<std::size_t>>(ids.begin(), ids.end());
  return table.tape().push(std::move(y), needs(table), [table, rows, width](Var out) {
    Tape& t = table.tape();
    const auto& dy = t.grad(out);
    auto& dt = t.grad(table);
    for (std::size_t r = 0; r < rows->size(); ++r) {
      double* dst = dt.data() + (*rows)[r] * width;
      const double* src = dy.data() + r * width;
      for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
    }
  });
}

Var cross_entropy(Var logits, std::span<const std::size_t> targets) {
  const Tensor& z = logits.value();
  const auto [n, v] = dims(z);
  if (targets.size() != n) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(n) + " rows");
  }
  auto probs = std::make_shared<std::vector<double>>(z.size());
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (targets[r] >= v) throw RangeError("cross_entropy: target out of range");
    const double* row = z.data().data() + r * v;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < v; ++j) mx = std::max(mx, row[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < v; ++j) {
      const double e = std::exp(row[j] - mx);
      (*probs)[r * v + j] = e;
      total += e;
    }
    for (std::size_t j = 0; j < v; ++j) (*probs)[r * v + j] /= total;
    loss += (std::log(total) + mx) - row[targets[r]];
  }
  loss /= static_cast<double>(n);
  auto tgt = std::make_shared<std::vector<std::size_t>>(targets.begin(), targets.end());
  return logits.tape().push(Tensor({1}, std::vector<double>{loss}), needs(logits),
                            [logits, probs, tgt, n, v](Var out) {
                              Tape& t = logits.tape();
                              const double g = t.grad(out)[0] / static_cast<double>(n);
                              auto& dz = t.grad(logits);
                              for (std::size_t r = 0; r < n; ++r) {
                                for (std::size_t j = 0; j < v; ++j) {
                                  dz[r * v + j] += g * (*probs)[r * v + j];
                                }
                                dz[r * v + (*tgt)[r]] -= g;
                              }
                            });
}

Var concat_cols(Var a, Var b) {
  same_tape(a, b);
  const auto [m, p] = dims(a.value());
  const auto [m2, q] = dims(b.value());
  if (m != m2) throw ShapeError("concat_cols: row counts differ");
  const std::size_t n = p + q;
  Tensor y({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(a.value().data().data() + i * p, p, y.data().data() + i * n);
    std::copy_n(b.value().data().data() + i * q, q, y.data().data() + i * n + p);
  }
  return a.tape().push(std::move(y), needs(a) || needs(b), [a, b, m, p, q, n](Var out) {
    Tape& t = a.tape();
    const auto& dy = t.grad(out);
    if (needs(a)) {
      auto& da = t.grad(a);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < p; ++j) da[i * p + j] += dy[i * n + j];
      }
    }
    if (needs(b)) {
      auto& db = t.grad(b);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < q; ++j) db[i * q + j] += dy[i * n + p + j];
      }
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const auto [m, n] = dims(a.value());
  if (begin > end || end > n) throw ShapeError("slice_cols: bad range");
  const std::size_t w = end - begin;
  Tensor y({m, w});
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(a.value().data().data() + i * n + begin, w, y.data().data() + i * w);
  }
  return a.tape().push(std::move(y), needs(a), [a, m, n, begin, w](Var out) {
    Tape& t = a.tape();
    const auto& dy = t.grad(out);
    auto& dx = t.grad(a);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < w; ++j) dx[i * n + begin + j] += dy[i * w + j];
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  const auto [m, n] = dims(a.value());
  if (begin > end || end > m) throw ShapeError("slice_rows: bad range");
  Tensor y({end - begin, n});
  std::copy_n(a.value().data().data() + begin * n, (end - begin) * n, y.data().data());
  return a.tape().push(std::move(y), needs(a), [a, begin, n](Var out) {
    Tape& t = a.tape();
    const auto& dy = t.grad(out);
    auto& dx = t.grad(a);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[begin * n + i] += dy[i];
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t n = dims(parts.front().value()).cols;
  std::size_t total = 0;
  bool req = false;
  for (const auto& p : parts) {
    same_tape(parts.front(), p);
    if (dims(p.value()).cols != n) throw ShapeError("concat_rows: column counts differ");
    total += p.value().rows();
    req = req || needs(p);
  }
  Tensor y({total, n});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.value().data().begin(), p.value().data().end(), y.data().begin() + offset);
    offset += p.value().size();
  }
  auto inputs = std::make_shared<std::vector<Var>>(parts.begin(), parts.end());
  return parts.front().tape().push(std::move(y), req, [inputs](Var out) {
    Tape& t = out.tape();
    const auto& dy = t.grad(out);
    std::size_t offset = 0;
    for (const auto& p : *inputs) {
      const std::size_t sz = p.value().size();
      if (needs(p)) {
        auto& dp = t.grad(p);
        for (std::size_t i = 0; i < sz; ++i) dp[i] += dy[offset + i];
      }
      offset += sz;
    }
  });
}

Var dropout(Var a, double rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ValidationError("dropout rate must be in [0, 1)");
  if (rate == 0.0) return a;
  const Tensor& x = a.value();
  auto mask = std::make_shared<std::vector<double>>(x.size());
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    (*mask)[i] = uniform01(rng) >= rate ? keep_scale : 0.0;
    y[i] = x[i] * (*mask)[i];
  }
  return a.tape().push(std::move(y), needs(a), [a, mask](Var out) {
    Tape& t = a.tape();
    const auto& dy = t.grad(out);
    auto& dx = t.grad(a);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * (*mask)[i];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape().push(Tensor({1}, std::vector<double>{s}), needs(a), [a](Var out) {
    Tape& t = a.tape();
    const double g = t.grad(out)[0];
    for (auto& d : t.grad(a)) d += g;
  });
}

Var causal_attention_core(Var q, Var k, Var v, std::size_t batch, std::size_t seq,
                          std::size_t n_heads) {
  same_tape(q, k);
  same_tape(q, v);
  const Tensor& Q = q.value();
  const auto [rows, d] = dims(Q);
  if (rows != batch * seq) throw ShapeError("attention: rows != batch * seq");
  require_same_shape(Q, k.value(), "attention");
  require_same_shape(Q, v.value(), "attention");
  if (n_heads == 0 || d % n_heads != 0) throw ShapeError("attention: d_model not divisible by heads");
  const std::size_t dh = d / n_heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  const Tensor& K = k.value();
  const Tensor& V = v.value();

  // probs[((b*H + h)*T + i)*T + j], j <= i
  auto probs = std::make_shared<std::vector<double>>(batch * n_heads * seq * seq, 0.0);
  Tensor y({rows, d});
  std::vector<double> scores(seq);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < n_heads; ++h) {
      const std::size_t c0 = h * dh;
      for (std::size_t i = 0; i < seq; ++i) {
        const double* qi = Q.data().data() + (b * seq + i) * d + c0;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j <= i; ++j) {
          const double* kj = K.data().data() + (b * seq + j) * d + c0;
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
          scores[j] = s * sc;
          mx = std::max(mx, scores[j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
          scores[j] = std::exp(scores[j] - mx);
          total += scores[j];
        }
        double* prow = probs->data() + ((b * n_heads + h) * seq + i) * seq;
        double* yi = y.data().data() + (b * seq + i) * d + c0;
        for (std::size_t j = 0; j <= i; ++j) {
          const double p = scores[j] / total;
          prow[j] = p;
          const double* vj = V.data().data() + (b * seq + j) * d + c0;
          for (std::size_t c = 0; c < dh; ++c) yi[c] += p * vj[c];
        }
      }
    }
  }
  const bool req = needs(q) || needs(k) || needs(v);
  return q.tape().push(std::move(y), req, [q, k, v, probs, batch, seq, n_heads, d, dh, sc](Var out) {
    Tape& t = q.tape();
    const auto& dy = t.grad(out);
    const double* Qp = q.value().data().data();
    const double* Kp = k.value().data().data();
    const double* Vp = v.value().data().data();
    double* dq = needs(q) ? t.grad(q).data() : nullptr;
    double* dk = needs(k) ? t.grad(k).data() : nullptr;
    double* dv = needs(v) ? t.grad(v).data() : nullptr;
    std::vector<double> dp(seq);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t h = 0; h < n_heads; ++h) {
        const std::size_t c0 = h * dh;
        for (std::size_t i = 0; i < seq; ++i) {
          const double* prow = probs->data() + ((b * n_heads + h) * seq + i) * seq;
          const double* dyi = dy.data() + (b * seq + i) * d + c0;
          double weighted = 0.0;
          for (std::size_t j = 0; j <= i; ++j) {
            const double* vj = Vp + (b * seq + j) * d + c0;
            double s = 0.0;
            for (std::size_t c = 0; c < dh; ++c) s += dyi[c] * vj[c];
            dp[j] = s;
            weighted += prow[j] * s;
            if (dv) {
              double* dvj = dv + (b * seq + j) * d + c0;
              for (std::size_t c = 0; c < dh; ++c) dvj[c] += prow[j] * dyi[c];
            }
          }
          const double* qi = Qp + (b * seq + i) * d + c0;
          for (std::size_t j = 0; j <= i; ++j) {
            const double ds = prow[j] * (dp[j] - weighted) * sc;
            if (ds == 0.0) continue;
            const double* kj = Kp + (b * seq + j) * d + c0;
            if (dq) {
              double* dqi = dq + (b * seq + i) * d + c0;
              for (std::size_t c = 0; c < dh; ++c) dqi[c] += ds * kj[c];
            }
            if (dk) {
              double* dkj = dk + (b * seq + j) * d + c0;
              for (std::size_t c = 0; c < dh; ++c) dkj[c] += ds * qi[c];
            }
          }
        }
      }
    }
  });
}

}  // namespace recipegen::nn
