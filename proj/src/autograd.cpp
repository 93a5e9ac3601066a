#include "leo/autograd.hpp"

#include <algorithm>
#include <cmath>

#include "kernels.hpp"
#include "leo/errors.hpp"

namespace leo::num {
namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void require_matrix(const Tensor& t, const char* op) {
  require(t.rank() == 2, std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

constexpr double kProbFloor = 1e-12;

}  // namespace

std::string_view group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::encoder:
      return "encoder";
    case ParamGroup::selector:
      return "selector";
    case ParamGroup::classifier:
      return "classifier";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// ParameterStore

std::size_t ParameterStore::add(std::string name, ParamGroup group, Tensor init) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  const std::size_t idx = params_.size();
  Tensor grad(init.shape());
  index_.emplace(name, idx);
  params_.push_back(Parameter{std::move(name), group, std::move(init), std::move(grad), false, {}});
  return idx;
}

bool ParameterStore::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t ParameterStore::index_of(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

void ParameterStore::zero_grads() {
  for (auto& p : params_) {
    p.grad.fill(0.0);
    p.grad_ready = false;
  }
}

std::size_t ParameterStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

Segments conv_output_segments(const Segments& segs, std::size_t kernel) {
  Segments out;
  out.reserve(segs.size());
  std::size_t offset = 0;
  for (const auto& s : segs) {
    const std::size_t padded = std::max(s.length, kernel);
    const std::size_t windows = padded - kernel + 1;
    out.push_back({offset, windows});
    offset += windows;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Graph plumbing

Var Graph::push(Tensor value, std::string op, bool requires_grad) {
  const std::size_t id = nodes_.size();
  if (!value.all_finite()) {
    throw NumericError("non-finite value produced by node #" + std::to_string(id) + " (" + op + ")");
  }
  Node n;
  n.value = std::move(value);
  n.op = std::move(op);
  n.requires_grad = grad_enabled_ && requires_grad;
  nodes_.push_back(std::move(n));
  return Var{id};
}

void Graph::set_backward(Var out, std::function<void()> fn) {
  if (nodes_[out.id].requires_grad) nodes_[out.id].backward = std::move(fn);
}

Var Graph::constant(Tensor t, std::string name) { return push(std::move(t), std::move(name), false); }

Var Graph::param(ParameterStore& store, std::string_view name) {
  const std::size_t idx = store.index_of(name);
  Var v = push(store.at(idx).value, "param:" + std::string(name), true);
  nodes_[v.id].store = &store;
  nodes_[v.id].param_index = idx;
  if (grad_enabled_) stores_.insert(&store);
  return v;
}

void Graph::backward(Var loss) {
  if (!grad_enabled_) throw UsageError("backward on a graph built without gradients");
  if (!loss.valid() || loss.id >= nodes_.size()) throw UsageError("backward: invalid loss node");
  if (val(loss).size() != 1) {
    throw UsageError("backward: loss must be scalar, got " + shape_string(val(loss).shape()));
  }
  for (std::size_t i = 0; i <= loss.id; ++i) {
    if (nodes_[i].requires_grad) nodes_[i].grad = Tensor(nodes_[i].value.shape());
  }
  if (nodes_[loss.id].requires_grad) nodes_[loss.id].grad[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (nodes_[i].requires_grad && nodes_[i].backward) nodes_[i].backward();
  }

  for (ParameterStore* s : stores_) {
    for (auto& p : *s) {
      p.grad.fill(0.0);
      p.grad_ready = true;
    }
  }
  for (std::size_t i = 0; i <= loss.id; ++i) {
    const Node& n = nodes_[i];
    if (!n.store || !n.requires_grad) continue;
    Tensor& dst = n.store->at(n.param_index).grad;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += n.grad[j];
  }
  for (ParameterStore* s : stores_) {
    for (auto& p : *s) {
      const std::size_t c = p.grad.cols();
      for (std::size_t r : p.pinned_rows) {
        for (std::size_t j = 0; j < c; ++j) p.grad.at(r, j) = 0.0;
      }
      if (!p.grad.all_finite()) throw NumericError("non-finite gradient for parameter '" + p.name + "'");
    }
  }
}

// ---------------------------------------------------------------------------
// Linear algebra

Var Graph::matmul(Var a, Var b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  require_matrix(A, "matmul");
  require_matrix(B, "matmul");
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  require(B.rows() == k, "matmul: inner dimensions differ " + shape_string(A.shape()) + " * " +
                             shape_string(B.shape()));
  Tensor C({n, m});
  kernels::gemm_nn(A.data().data(), B.data().data(), C.data().data(), n, k, m);
  Var out = push(std::move(C), "matmul", needs(a) || needs(b));
  set_backward(out, [this, a, b, out, n, k, m] {
    const Tensor& G = g(out);
    if (needs(a)) kernels::gemm_nt(G.data().data(), val(b).data().data(), g(a).data().data(), n, m, k);
    if (needs(b)) kernels::gemm_tn(val(a).data().data(), G.data().data(), g(b).data().data(), n, k, m);
  });
  return out;
}

Var Graph::transpose(Var a) {
  const Tensor& A = val(a);
  require_matrix(A, "transpose");
  const std::size_t n = A.rows(), m = A.cols();
  Tensor T({m, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) T.at(j, i) = A.at(i, j);
  Var out = push(std::move(T), "transpose", needs(a));
  set_backward(out, [this, a, out, n, m] {
    const Tensor& G = g(out);
    Tensor& GA = g(a);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) GA.at(i, j) += G.at(j, i);
  });
  return out;
}

Var Graph::add_bias(Var a, Var bias) {
  const Tensor& A = val(a);
  const Tensor& B = val(bias);
  const std::size_t n = A.rows(), m = A.cols();
  require(B.size() == m, "add_bias: bias of size " + std::to_string(B.size()) + " for " +
                             std::to_string(m) + " columns");
  Tensor C = A;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) C[i * m + j] += B[j];
  Var out = push(std::move(C), "add_bias", needs(a) || needs(bias));
  set_backward(out, [this, a, bias, out, n, m] {
    const Tensor& G = g(out);
    if (needs(a)) {
      Tensor& GA = g(a);
      for (std::size_t i = 0; i < G.size(); ++i) GA[i] += G[i];
    }
    if (needs(bias)) {
      Tensor& GB = g(bias);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) GB[j] += G[i * m + j];
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise

Var Graph::add(Var a, Var b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  require(A.shape() == B.shape(), "add: shape mismatch " + shape_string(A.shape()) + " vs " +
                                      shape_string(B.shape()));
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] += B[i];
  Var out = push(std::move(C), "add", needs(a) || needs(b));
  set_backward(out, [this, a, b, out] {
    const Tensor& G = g(out);
    if (needs(a))
      for (std::size_t i = 0; i < G.size(); ++i) g(a)[i] += G[i];
    if (needs(b))
      for (std::size_t i = 0; i < G.size(); ++i) g(b)[i] += G[i];
  });
  return out;
}

Var Graph::sub(Var a, Var b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  require(A.shape() == B.shape(), "sub: shape mismatch " + shape_string(A.shape()) + " vs " +
                                      shape_string(B.shape()));
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] -= B[i];
  Var out = push(std::move(C), "sub", needs(a) || needs(b));
  set_backward(out, [this, a, b, out] {
    const Tensor& G = g(out);
    if (needs(a))
      for (std::size_t i = 0; i < G.size(); ++i) g(a)[i] += G[i];
    if (needs(b))
      for (std::size_t i = 0; i < G.size(); ++i) g(b)[i] -= G[i];
  });
  return out;
}

Var Graph::mul(Var a, Var b) {
  const Tensor& A = val(a);
  const Tensor& B = val(b);
  enum class Mode { same, scalar, column } mode;
  if (A.shape() == B.shape()) {
    mode = Mode::same;
  } else if (B.size() == 1) {
    mode = Mode::scalar;
  } else if (A.rank() == 2 && B.size() == A.rows() && B.cols() == 1) {
    mode = Mode::column;
  } else {
    throw ConfigError("mul: cannot broadcast " + shape_string(B.shape()) + " onto " +
                      shape_string(A.shape()));
  }
  const std::size_t cols = A.cols();
  auto bval = [mode, cols](const Tensor& Bt, std::size_t i) {
    switch (mode) {
      case Mode::same:
        return Bt[i];
      case Mode::scalar:
        return Bt[0];
      case Mode::column:
        return Bt[i / cols];
    }
    return 0.0;
  };
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= bval(B, i);
  Var out = push(std::move(C), "mul", needs(a) || needs(b));
  set_backward(out, [this, a, b, out, mode, cols, bval] {
    const Tensor& G = g(out);
    if (needs(a)) {
      const Tensor& Bt = val(b);
      Tensor& GA = g(a);
      for (std::size_t i = 0; i < G.size(); ++i) GA[i] += G[i] * bval(Bt, i);
    }
    if (needs(b)) {
      const Tensor& At = val(a);
      Tensor& GB = g(b);
      for (std::size_t i = 0; i < G.size(); ++i) {
        const double d = G[i] * At[i];
        switch (mode) {
          case Mode::same:
            GB[i] += d;
            break;
          case Mode::scalar:
            GB[0] += d;
            break;
          case Mode::column:
            GB[i / cols] += d;
            break;
        }
      }
    }
  });
  return out;
}

Var Graph::scale(Var a, double s) {
  Tensor C = val(a);
  for (auto& v : C.data()) v *= s;
  Var out = push(std::move(C), "scale", needs(a));
  set_backward(out, [this, a, out, s] {
    const Tensor& G = g(out);
    for (std::size_t i = 0; i < G.size(); ++i) g(a)[i] += s * G[i];
  });
  return out;
}

Var Graph::log(Var a) {
  Tensor C = val(a);
  for (auto& v : C.data()) v = std::log(v);
  Var out = push(std::move(C), "log", needs(a));
  set_backward(out, [this, a, out] {
    const Tensor& G = g(out);
    const Tensor& A = val(a);
    for (std::size_t i = 0; i < G.size(); ++i) g(a)[i] += G[i] / A[i];
  });
  return out;
}

Var Graph::exp(Var a) {
  Tensor C = val(a);
  for (auto& v : C.data()) v = std::exp(v);
  Var out = push(std::move(C), "exp", needs(a));
  set_backward(out, [this, a, out] {
    const Tensor& G = g(out);
    const Tensor& Y = val(out);
    for (std::size_t i = 0; i < G.size(); ++i) g(a)[i] += G[i] * Y[i];
  });
  return out;
}

Var Graph::relu(Var a) {
  Tensor C = val(a);
  for (auto& v : C.data()) v = v > 0.0 ? v : 0.0;
  Var out = push(std::move(C), "relu", needs(a));
  set_backward(out, [this, a, out] {
    const Tensor& G = g(out);
    const Tensor& A = val(a);
    for (std::size_t i = 0; i < G.size(); ++i)
      if (A[i] > 0.0) g(a)[i] += G[i];
  });
  return out;
}

Var Graph::sigmoid(Var a) {
  Tensor C = val(a);
  for (auto& v : C.data()) v = stable_sigmoid(v);
  Var out = push(std::move(C), "sigmoid", needs(a));
  set_backward(out, [this, a, out] {
    const Tensor& G = g(out);
    const Tensor& Y = val(out);
    for (std::size_t i = 0; i < G.size(); ++i) g(a)[i] += G[i] * Y[i] * (1.0 - Y[i]);
  });
  return out;
}

Var Graph::tanh(Var a) {
  Tensor C = val(a);
  for (auto& v : C.data()) v = std::tanh(v);
  Var out = push(std::move(C), "tanh", needs(a));
  set_backward(out, [this, a, out] {
    const Tensor& G = g(out);
    const Tensor& Y = val(out);
    for (std::size_t i = 0; i < G.size(); ++i) g(a)[i] += G[i] * (1.0 - Y[i] * Y[i]);
  });
  return out;
}

Var Graph::softmax(Var a) {
  Tensor C = val(a);
  const std::size_t n = C.rows(), m = C.cols();
  for (std::size_t i = 0; i < n; ++i) {
    auto r = C.row(i);
    const double mx = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (auto& v : r) {
      v = std::exp(v - mx);
      s += v;
    }
    for (auto& v : r) v /= s;
  }
  Var out = push(std::move(C), "softmax", needs(a));
  set_backward(out, [this, a, out, n, m] {
    const Tensor& G = g(out);
    const Tensor& Y = val(out);
    Tensor& GA = g(a);
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < m; ++j) dot += G[i * m + j] * Y[i * m + j];
      for (std::size_t j = 0; j < m; ++j) GA[i * m + j] += Y[i * m + j] * (G[i * m + j] - dot);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Sequence ops

Var Graph::conv1d(Var x, Var kernel, Var bias, const Segments& segs) {
  const Tensor& X = val(x);
  const Tensor& W = val(kernel);
  const Tensor& B = val(bias);
  require(W.rank() == 3, "conv1d: kernel must be (k x d_in x filters), got " + shape_string(W.shape()));
  const std::size_t k = W.dim(0), din = W.dim(1), nf = W.dim(2);
  require(k >= 1, "conv1d: kernel width must be >= 1");
  require(X.cols() == din, "conv1d: input has " + std::to_string(X.cols()) + " channels, kernel expects " +
                               std::to_string(din));
  require(B.size() == nf, "conv1d: bias size mismatch");
  for (const auto& s : segs) {
    require(s.offset + s.length <= X.rows(), "conv1d: segment out of range");
  }
  const Segments osegs = conv_output_segments(segs, k);
  const std::size_t total = osegs.empty() ? 0 : osegs.back().offset + osegs.back().length;
  Tensor Y({total, nf});
  for (std::size_t s = 0; s < segs.size(); ++s) {
    for (std::size_t w = 0; w < osegs[s].length; ++w) {
      double* y = &Y[(osegs[s].offset + w) * nf];
      for (std::size_t f = 0; f < nf; ++f) y[f] = B[f];
      for (std::size_t j = 0; j < k; ++j) {
        if (w + j >= segs[s].length) break;  // zero padding on the right
        const double* xr = &X.data()[(segs[s].offset + w + j) * din];
        kernels::gemm_nn(xr, &W.data()[j * din * nf], y, 1, din, nf);
      }
    }
  }
  Var out = push(std::move(Y), "conv1d", needs(x) || needs(kernel) || needs(bias));
  set_backward(out, [this, x, kernel, bias, out, segs, osegs, k, din, nf] {
    const Tensor& G = g(out);
    const Tensor& X = val(x);
    const Tensor& W = val(kernel);
    for (std::size_t s = 0; s < segs.size(); ++s) {
      for (std::size_t w = 0; w < osegs[s].length; ++w) {
        const double* gy = &G.data()[(osegs[s].offset + w) * nf];
        if (needs(bias))
          for (std::size_t f = 0; f < nf; ++f) g(bias)[f] += gy[f];
        for (std::size_t j = 0; j < k; ++j) {
          if (w + j >= segs[s].length) break;
          const std::size_t xr = segs[s].offset + w + j;
          if (needs(x)) kernels::gemm_nt(gy, &W.data()[j * din * nf], &g(x)[xr * din], 1, nf, din);
          if (needs(kernel)) kernels::gemm_tn(&X.data()[xr * din], gy, &g(kernel)[j * din * nf], 1, din, nf);
        }
      }
    }
  });
  return out;
}

Var Graph::segment_max(Var x, const Segments& segs) {
  const Tensor& X = val(x);
  const std::size_t m = X.cols();
  Tensor Y({segs.size(), m});
  std::vector<std::size_t> argmax(segs.size() * m);
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (segs[s].length == 0) throw UsageError("segment_max: empty segment");
    require(segs[s].offset + segs[s].length <= X.rows(), "segment_max: segment out of range");
    for (std::size_t j = 0; j < m; ++j) {
      std::size_t best = segs[s].offset;
      double bv = X[best * m + j];
      for (std::size_t r = segs[s].offset + 1; r < segs[s].offset + segs[s].length; ++r) {
        if (X[r * m + j] > bv) {
          bv = X[r * m + j];
          best = r;
        }
      }
      Y[s * m + j] = bv;
      argmax[s * m + j] = best;
    }
  }
  Var out = push(std::move(Y), "segment_max", needs(x));
  set_backward(out, [this, x, out, argmax = std::move(argmax), m] {
    const Tensor& G = g(out);
    Tensor& GX = g(x);
    for (std::size_t i = 0; i < argmax.size(); ++i) GX[argmax[i] * m + i % m] += G[i];
  });
  return out;
}

Var Graph::maxpool1d(Var x) {
  const Segments one{{0, val(x).rows()}};
  return segment_max(x, one);
}

Var Graph::dropout(Var x, double retain, Rng& rng, bool train) {
  if (!train || retain >= 1.0) return x;
  require(retain > 0.0, "dropout: retain probability must be in (0, 1]");
  const Tensor& X = val(x);
  Tensor mask(X.shape());
  const double inv = 1.0 / retain;
  for (auto& v : mask.data()) v = rng.bernoulli(retain) ? inv : 0.0;
  Tensor Y = X;
  for (std::size_t i = 0; i < Y.size(); ++i) Y[i] *= mask[i];
  Var out = push(std::move(Y), "dropout", needs(x));
  set_backward(out, [this, x, out, mask = std::move(mask)] {
    const Tensor& G = g(out);
    for (std::size_t i = 0; i < G.size(); ++i) g(x)[i] += G[i] * mask[i];
  });
  return out;
}

Var Graph::concat(std::span<const Var> parts, int axis) {
  require(!parts.empty(), "concat: no inputs");
  require(axis == 0 || axis == 1, "concat: axis must be 0 or 1");
  bool any = false;
  std::size_t rows = 0, cols = 0;
  for (Var p : parts) {
    const Tensor& T = val(p);
    require_matrix(T, "concat");
    any = any || needs(p);
    if (axis == 0) {
      if (cols == 0 && rows == 0) cols = T.cols();
      require(T.cols() == cols, "concat: column mismatch");
      rows += T.rows();
    } else {
      if (cols == 0 && rows == 0) rows = T.rows();
      require(T.rows() == rows, "concat: row mismatch");
      cols += T.cols();
    }
  }
  Tensor Y({rows, cols});
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& T = val(p);
    for (std::size_t i = 0; i < T.rows(); ++i)
      for (std::size_t j = 0; j < T.cols(); ++j) {
        if (axis == 0)
          Y.at(off + i, j) = T.at(i, j);
        else
          Y.at(i, off + j) = T.at(i, j);
      }
    off += axis == 0 ? T.rows() : T.cols();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  Var out = push(std::move(Y), "concat", any);
  set_backward(out, [this, ins = std::move(ins), out, axis] {
    const Tensor& G = g(out);
    std::size_t off = 0;
    for (Var p : ins) {
      const std::size_t r = val(p).rows(), c = val(p).cols();
      if (needs(p)) {
        Tensor& GP = g(p);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j)
            GP.at(i, j) += axis == 0 ? G.at(off + i, j) : G.at(i, off + j);
      }
      off += axis == 0 ? r : c;
    }
  });
  return out;
}

Var Graph::row_mean(Var x) {
  const Tensor& X = val(x);
  const std::size_t n = X.rows(), m = X.cols();
  require(n > 0, "row_mean: no rows");
  Tensor Y({1, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) Y[j] += X[i * m + j];
  for (auto& v : Y.data()) v /= static_cast<double>(n);
  Var out = push(std::move(Y), "row_mean", needs(x));
  set_backward(out, [this, x, out, n, m] {
    const Tensor& G = g(out);
    Tensor& GX = g(x);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) GX[i * m + j] += G[j] * inv;
  });
  return out;
}

Var Graph::sum(Var x) {
  double s = 0.0;
  for (double v : val(x).data()) s += v;
  Var out = push(Tensor::scalar(s), "sum", needs(x));
  set_backward(out, [this, x, out] {
    const double gv = g(out)[0];
    for (auto& v : g(x).data()) v += gv;
  });
  return out;
}

Var Graph::mean(Var x) {
  const std::size_t n = val(x).size();
  require(n > 0, "mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var Graph::reshape(Var x, Shape shape) {
  Tensor Y = val(x).reshaped(std::move(shape));
  Var out = push(std::move(Y), "reshape", needs(x));
  set_backward(out, [this, x, out] {
    const Tensor& G = g(out);
    for (std::size_t i = 0; i < G.size(); ++i) g(x)[i] += G[i];
  });
  return out;
}

Var Graph::embedding(Var table, std::span<const int> ids) {
  const Tensor& T = val(table);
  require_matrix(T, "embedding");
  const std::size_t vsize = T.rows(), d = T.cols();
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vsize) {
      throw UsageError("embedding: token id " + std::to_string(id) + " outside vocabulary of size " +
                       std::to_string(vsize));
    }
  }
  Tensor Y({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == 0) continue;
    std::copy_n(&T.data()[static_cast<std::size_t>(ids[i]) * d], d, &Y[i * d]);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  Var out = push(std::move(Y), "embedding", needs(table));
  set_backward(out, [this, table, out, idv = std::move(idv), d] {
    const Tensor& G = g(out);
    Tensor& GT = g(table);
    for (std::size_t i = 0; i < idv.size(); ++i) {
      if (idv[i] == 0) continue;
      double* dst = &GT[static_cast<std::size_t>(idv[i]) * d];
      for (std::size_t j = 0; j < d; ++j) dst[j] += G[i * d + j];
    }
  });
  return out;
}

Var Graph::scatter_rows(Var x, std::span<const std::size_t> dest, std::size_t total_rows) {
  const Tensor& X = val(x);
  const std::size_t m = X.cols();
  require(dest.size() == X.rows(), "scatter_rows: destination count does not match rows");
  Tensor Y({total_rows, m});
  for (std::size_t i = 0; i < dest.size(); ++i) {
    require(dest[i] < total_rows, "scatter_rows: destination out of range");
    for (std::size_t j = 0; j < m; ++j) Y[dest[i] * m + j] += X[i * m + j];
  }
  std::vector<std::size_t> dv(dest.begin(), dest.end());
  Var out = push(std::move(Y), "scatter_rows", needs(x));
  set_backward(out, [this, x, out, dv = std::move(dv), m] {
    const Tensor& G = g(out);
    Tensor& GX = g(x);
    for (std::size_t i = 0; i < dv.size(); ++i)
      for (std::size_t j = 0; j < m; ++j) GX[i * m + j] += G[dv[i] * m + j];
  });
  return out;
}

Var Graph::gather_rows(Var x, std::span<const std::size_t> rows) {
  const Tensor& X = val(x);
  const std::size_t m = X.cols();
  Tensor Y({rows.size(), m});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < X.rows(), "gather_rows: row out of range");
    std::copy_n(&X.data()[rows[i] * m], m, &Y[i * m]);
  }
  std::vector<std::size_t> rv(rows.begin(), rows.end());
  Var out = push(std::move(Y), "gather_rows", needs(x));
  set_backward(out, [this, x, out, rv = std::move(rv), m] {
    const Tensor& G = g(out);
    Tensor& GX = g(x);
    for (std::size_t i = 0; i < rv.size(); ++i)
      for (std::size_t j = 0; j < m; ++j) GX[rv[i] * m + j] += G[i * m + j];
  });
  return out;
}

// ---------------------------------------------------------------------------
// Loss-specific ops

Var Graph::relaxed_bernoulli(Var p, const Tensor& noise, double nu) {
  const Tensor& P = val(p);
  require(noise.size() == P.size(), "relaxed_bernoulli: noise size mismatch");
  require(nu > 0.0, "relaxed_bernoulli: temperature must be positive");
  Tensor Z(P.shape());
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double pc = std::clamp(P[i], kProbFloor, 1.0 - kProbFloor);
    Z[i] = stable_sigmoid((std::log(pc) - std::log1p(-pc) + noise[i]) / nu);
  }
  Var out = push(std::move(Z), "relaxed_bernoulli", needs(p));
  set_backward(out, [this, p, out, nu] {
    const Tensor& G = g(out);
    const Tensor& P = val(p);
    const Tensor& Z = val(out);
    for (std::size_t i = 0; i < G.size(); ++i) {
      if (P[i] <= kProbFloor || P[i] >= 1.0 - kProbFloor) continue;
      g(p)[i] += G[i] * Z[i] * (1.0 - Z[i]) / (nu * P[i] * (1.0 - P[i]));
    }
  });
  return out;
}

Var Graph::cross_entropy(Var probs, std::span<const int> labels) {
  const Tensor& P = val(probs);
  const std::size_t n = P.rows(), c = P.cols();
  if (labels.size() != n) throw UsageError("cross_entropy: label count does not match rows");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw UsageError("cross_entropy: label " + std::to_string(y) + " outside [0, " + std::to_string(c) + ")");
    }
  }
  Tensor L({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    L[i] = -std::log(std::clamp(P[i * c + static_cast<std::size_t>(labels[i])], kProbFloor, 1.0));
  }
  std::vector<int> lv(labels.begin(), labels.end());
  Var out = push(std::move(L), "cross_entropy", needs(probs));
  set_backward(out, [this, probs, out, lv = std::move(lv), c] {
    const Tensor& G = g(out);
    const Tensor& P = val(probs);
    for (std::size_t i = 0; i < lv.size(); ++i) {
      const std::size_t k = i * c + static_cast<std::size_t>(lv[i]);
      if (P[k] < kProbFloor) continue;
      g(probs)[k] -= G[i] / P[k];
    }
  });
  return out;
}

Var Graph::l2_normalize_rows(Var x) {
  const Tensor& X = val(x);
  const std::size_t n = X.rows(), m = X.cols();
  Tensor Y(X.shape());
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += X[i * m + j] * X[i * m + j];
    norms[i] = std::sqrt(s);
    if (norms[i] < 1e-12) continue;
    for (std::size_t j = 0; j < m; ++j) Y[i * m + j] = X[i * m + j] / norms[i];
  }
  Var out = push(std::move(Y), "l2_normalize_rows", needs(x));
  set_backward(out, [this, x, out, norms = std::move(norms), n, m] {
    const Tensor& G = g(out);
    const Tensor& Y = val(out);
    Tensor& GX = g(x);
    for (std::size_t i = 0; i < n; ++i) {
      if (norms[i] < 1e-12) continue;
      double dot = 0.0;
      for (std::size_t j = 0; j < m; ++j) dot += Y[i * m + j] * G[i * m + j];
      for (std::size_t j = 0; j < m; ++j) GX[i * m + j] += (G[i * m + j] - Y[i * m + j] * dot) / norms[i];
    }
  });
  return out;
}

Var Graph::masked_log_softmax(Var x, const Tensor& mask) {
  const Tensor& X = val(x);
  require(mask.shape() == X.shape(), "masked_log_softmax: mask shape mismatch");
  const std::size_t n = X.rows(), m = X.cols();
  Tensor Y(X.shape());
  Tensor S(X.shape());  // softmax over the masked entries, kept for backward
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j)
      if (mask[i * m + j] != 0.0) mx = std::max(mx, X[i * m + j]);
    if (!std::isfinite(mx)) continue;
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      if (mask[i * m + j] != 0.0) s += std::exp(X[i * m + j] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < m; ++j) {
      if (mask[i * m + j] == 0.0) continue;
      Y[i * m + j] = X[i * m + j] - lse;
      S[i * m + j] = std::exp(Y[i * m + j]);
    }
  }
  Var out = push(std::move(Y), "masked_log_softmax", needs(x));
  set_backward(out, [this, x, out, S = std::move(S), mask, n, m] {
    const Tensor& G = g(out);
    Tensor& GX = g(x);
    for (std::size_t i = 0; i < n; ++i) {
      double gs = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        if (mask[i * m + j] != 0.0) gs += G[i * m + j];
      for (std::size_t j = 0; j < m; ++j)
        if (mask[i * m + j] != 0.0) GX[i * m + j] += G[i * m + j] - S[i * m + j] * gs;
    }
  });
  return out;
}

}  // namespace leo::num
