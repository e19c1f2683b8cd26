#include "tev/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tev/errors.h"

namespace tev {

namespace {

// y[0..n) += a * x[0..n)
inline void axpy(double *y, double a, const double *x, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

inline double dot(const double *a, const double *b, int n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::string shapes(const Tensor &a, const Tensor &b) {
  return shape_string(a.shape()) + " and " + shape_string(b.shape());
}

}  // namespace

Tensor add(const Tensor &a, const Tensor &b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  Node *an = a.node(), *bn = b.node();
  return make_result(a.shape(), std::move(out), {a, b}, [an, bn](const Node &o) {
    for (Node *n : {an, bn}) {
      if (!n->requires_grad) continue;
      for (size_t i = 0; i < o.grad.size(); ++i) n->grad[i] += o.grad[i];
    }
  });
}

Tensor mul(const Tensor &a, const Tensor &b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  Node *an = a.node(), *bn = b.node();
  return make_result(a.shape(), std::move(out), {a, b}, [an, bn](const Node &o) {
    for (size_t i = 0; i < o.grad.size(); ++i) {
      if (an->requires_grad) an->grad[i] += o.grad[i] * bn->value[i];
      if (bn->requires_grad) bn->grad[i] += o.grad[i] * an->value[i];
    }
  });
}

Tensor scale(const Tensor &a, double factor) {
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  Node *an = a.node();
  return make_result(a.shape(), std::move(out), {a}, [an, factor](const Node &o) {
    for (size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += o.grad[i] * factor;
  });
}

Tensor sum(const Tensor &a) {
  double s = 0;
  for (double v : a.values()) s += v;
  Node *an = a.node();
  return make_result({}, {s}, {a}, [an](const Node &o) {
    for (double &g : an->grad) g += o.grad[0];
  });
}

Tensor add_n(const std::vector<Tensor> &terms) {
  if (terms.empty()) throw ShapeError("add_n: no terms");
  for (const Tensor &t : terms) require_same_shape("add_n", terms[0], t);
  if (terms.size() == 1) return terms[0];
  std::vector<double> out(terms[0].numel(), 0.0);
  std::vector<Node *> nodes;
  for (const Tensor &t : terms) {
    for (size_t i = 0; i < out.size(); ++i) out[i] += t[i];
    nodes.push_back(t.node());
  }
  return make_result(terms[0].shape(), std::move(out), terms, [nodes](const Node &o) {
    for (Node *n : nodes) {
      if (!n->requires_grad) continue;
      for (size_t i = 0; i < o.grad.size(); ++i) n->grad[i] += o.grad[i];
    }
  });
}

Tensor relu(const Tensor &a) {
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] > 0 ? a[i] : 0.0;
  Node *an = a.node();
  return make_result(a.shape(), std::move(out), {a}, [an](const Node &o) {
    for (size_t i = 0; i < o.grad.size(); ++i) {
      if (an->value[i] > 0) an->grad[i] += o.grad[i];
    }
  });
}

Tensor tanh(const Tensor &a) {
  std::vector<double> out(a.numel());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a[i]);
  Node *an = a.node();
  return make_result(a.shape(), std::move(out), {a}, [an](const Node &o) {
    for (size_t i = 0; i < o.grad.size(); ++i) {
      an->grad[i] += o.grad[i] * (1.0 - o.value[i] * o.value[i]);
    }
  });
}

Tensor affine(const Tensor &x, const Tensor &weight, const Tensor &bias) {
  require_rank("affine(weight)", weight, 2);
  require_rank("affine(bias)", bias, 1);
  const int out_dim = weight.dim(0);
  const int in_dim = weight.dim(1);
  if (bias.dim(0) != out_dim) {
    throw ShapeError("affine: weight " + shapes(weight, bias) + " bias disagree");
  }
  const bool batched = x.rank() == 2;
  if (x.rank() < 1 || x.rank() > 2 || x.dim(x.rank() - 1) != in_dim) {
    throw ShapeError("affine: input " + shapes(x, weight) + " weight incompatible");
  }
  const int rows = batched ? x.dim(0) : 1;
  std::vector<double> out(static_cast<size_t>(rows) * out_dim);
  const double *xv = x.values().data();
  const double *wv = weight.values().data();
  for (int r = 0; r < rows; ++r) {
    for (int o = 0; o < out_dim; ++o) {
      out[r * out_dim + o] =
          bias[o] + dot(wv + static_cast<size_t>(o) * in_dim, xv + r * in_dim, in_dim);
    }
  }
  Shape shape = batched ? Shape{rows, out_dim} : Shape{out_dim};
  Node *xn = x.node(), *wn = weight.node(), *bn = bias.node();
  return make_result(std::move(shape), std::move(out), {x, weight, bias},
                     [=](const Node &o) {
    for (int r = 0; r < rows; ++r) {
      const double *gy = o.grad.data() + r * out_dim;
      const double *xr = xn->value.data() + r * in_dim;
      for (int k = 0; k < out_dim; ++k) {
        if (gy[k] == 0.0) continue;
        if (bn->requires_grad) bn->grad[k] += gy[k];
        if (wn->requires_grad) axpy(wn->grad.data() + k * in_dim, gy[k], xr, in_dim);
        if (xn->requires_grad) {
          axpy(xn->grad.data() + r * in_dim, gy[k], wn->value.data() + k * in_dim, in_dim);
        }
      }
    }
  });
}

Tensor embedding_lookup(const std::vector<int> &ids, const Tensor &table) {
  require_rank("embedding_lookup", table, 2);
  const int vocab = table.dim(0);
  const int dim = table.dim(1);
  std::vector<double> out(ids.size() * dim);
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= vocab) {
      throw ShapeError("embedding_lookup: id " + std::to_string(ids[i]) +
                       " outside table " + shape_string(table.shape()));
    }
    std::copy_n(table.values().data() + static_cast<size_t>(ids[i]) * dim, dim,
                out.data() + i * dim);
  }
  Node *tn = table.node();
  return make_result({static_cast<int>(ids.size()), dim}, std::move(out), {table},
                     [tn, ids, dim](const Node &o) {
    for (size_t i = 0; i < ids.size(); ++i) {
      axpy(tn->grad.data() + static_cast<size_t>(ids[i]) * dim, 1.0,
           o.grad.data() + i * dim, dim);
    }
  });
}

Tensor conv_window(const Tensor &x, const Tensor &filters, const Tensor &bias,
                   int width) {
  require_rank("conv_window(x)", x, 2);
  require_rank("conv_window(filters)", filters, 2);
  const int n = x.dim(0);
  const int d = x.dim(1);
  const int count = filters.dim(0);
  const int span = width * d;
  if (width < 1 || filters.dim(1) != span || bias.rank() != 1 || bias.dim(0) != count) {
    throw ShapeError("conv_window: input " + shapes(x, filters) +
                     " filters incompatible with width " + std::to_string(width));
  }
  if (n < width) {
    throw ShapeError("conv_window: sequence of " + std::to_string(n) +
                     " rows shorter than width " + std::to_string(width));
  }
  const int positions = n - width + 1;
  std::vector<double> out(static_cast<size_t>(positions) * count);
  for (int p = 0; p < positions; ++p) {
    // A window of `width` consecutive rows is contiguous in memory.
    const double *window = x.values().data() + static_cast<size_t>(p) * d;
    for (int f = 0; f < count; ++f) {
      out[p * count + f] =
          bias[f] + dot(filters.values().data() + static_cast<size_t>(f) * span, window, span);
    }
  }
  Node *xn = x.node(), *fn = filters.node(), *bn = bias.node();
  return make_result({positions, count}, std::move(out), {x, filters, bias},
                     [=](const Node &o) {
    for (int p = 0; p < positions; ++p) {
      const double *window = xn->value.data() + static_cast<size_t>(p) * d;
      for (int f = 0; f < count; ++f) {
        const double g = o.grad[p * count + f];
        if (g == 0.0) continue;
        if (bn->requires_grad) bn->grad[f] += g;
        if (fn->requires_grad) axpy(fn->grad.data() + static_cast<size_t>(f) * span, g, window, span);
        if (xn->requires_grad) {
          axpy(xn->grad.data() + static_cast<size_t>(p) * d, g,
               fn->value.data() + static_cast<size_t>(f) * span, span);
        }
      }
    }
  });
}

Tensor max_pool_over_time(const Tensor &features) {
  require_rank("max_pool_over_time", features, 2);
  const int m = features.dim(0);
  const int f = features.dim(1);
  if (m < 1) throw ShapeError("max_pool_over_time: no rows");
  std::vector<double> out(f);
  std::vector<int> argmax(f, 0);
  for (int j = 0; j < f; ++j) {
    out[j] = features.at(0, j);
    for (int i = 1; i < m; ++i) {
      if (features.at(i, j) > out[j]) {
        out[j] = features.at(i, j);
        argmax[j] = i;
      }
    }
  }
  Node *fn = features.node();
  return make_result({f}, std::move(out), {features}, [fn, argmax, f](const Node &o) {
    for (int j = 0; j < f; ++j) fn->grad[argmax[j] * f + j] += o.grad[j];
  });
}

Tensor dropout(const Tensor &x, double rate, bool training, Rng *rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw std::invalid_argument("dropout rate must be in [0, 1)");
  }
  if (!training || rate == 0.0) return x;
  if (rng == nullptr) throw std::invalid_argument("dropout in training needs an rng");
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.numel());
  std::vector<double> out(x.numel());
  for (size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng->bernoulli(rate) ? 0.0 : keep_scale;
    out[i] = x[i] * mask[i];
  }
  Node *xn = x.node();
  return make_result(x.shape(), std::move(out), {x}, [xn, mask](const Node &o) {
    for (size_t i = 0; i < mask.size(); ++i) xn->grad[i] += o.grad[i] * mask[i];
  });
}

Tensor concat(const Tensor &a, const Tensor &b) {
  require_rank("concat", a, 1);
  require_rank("concat", b, 1);
  const int na = a.dim(0), nb = b.dim(0);
  std::vector<double> out(a.values().begin(), a.values().end());
  out.insert(out.end(), b.values().begin(), b.values().end());
  Node *an = a.node(), *bn = b.node();
  return make_result({na + nb}, std::move(out), {a, b}, [=](const Node &o) {
    if (an->requires_grad) axpy(an->grad.data(), 1.0, o.grad.data(), na);
    if (bn->requires_grad) axpy(bn->grad.data(), 1.0, o.grad.data() + na, nb);
  });
}

Tensor concat_to_rows(const Tensor &x, const Tensor &v) {
  require_rank("concat_to_rows(x)", x, 2);
  require_rank("concat_to_rows(v)", v, 1);
  const int n = x.dim(0), a = x.dim(1), b = v.dim(0);
  const int w = a + b;
  std::vector<double> out(static_cast<size_t>(n) * w);
  for (int r = 0; r < n; ++r) {
    std::copy_n(x.values().data() + static_cast<size_t>(r) * a, a, out.data() + r * w);
    std::copy_n(v.values().data(), b, out.data() + r * w + a);
  }
  Node *xn = x.node(), *vn = v.node();
  return make_result({n, w}, std::move(out), {x, v}, [=](const Node &o) {
    for (int r = 0; r < n; ++r) {
      if (xn->requires_grad) axpy(xn->grad.data() + r * a, 1.0, o.grad.data() + r * w, a);
      if (vn->requires_grad) axpy(vn->grad.data(), 1.0, o.grad.data() + r * w + a, b);
    }
  });
}

Tensor gather_rows(const Tensor &x, const std::vector<int> &rows) {
  require_rank("gather_rows", x, 2);
  const int m = x.dim(0), d = x.dim(1);
  std::vector<double> out(rows.size() * d);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= m) {
      throw ShapeError("gather_rows: row " + std::to_string(rows[i]) +
                       " outside " + shape_string(x.shape()));
    }
    std::copy_n(x.values().data() + static_cast<size_t>(rows[i]) * d, d, out.data() + i * d);
  }
  Node *xn = x.node();
  return make_result({static_cast<int>(rows.size()), d}, std::move(out), {x},
                     [xn, rows, d](const Node &o) {
    for (size_t i = 0; i < rows.size(); ++i) {
      axpy(xn->grad.data() + static_cast<size_t>(rows[i]) * d, 1.0, o.grad.data() + i * d, d);
    }
  });
}

Tensor slice_row(const Tensor &x, int row, int begin, int end) {
  require_rank("slice_row", x, 2);
  if (row < 0 || row >= x.dim(0) || begin < 0 || begin > end || end > x.dim(1)) {
    throw ShapeError("slice_row: bad range on " + shape_string(x.shape()));
  }
  const size_t offset = static_cast<size_t>(row) * x.dim(1) + begin;
  std::vector<double> out(x.values().begin() + offset,
                          x.values().begin() + offset + (end - begin));
  Node *xn = x.node();
  return make_result({end - begin}, std::move(out), {x}, [xn, offset](const Node &o) {
    axpy(xn->grad.data() + offset, 1.0, o.grad.data(), static_cast<int>(o.grad.size()));
  });
}

// ---------------------------------------------------------------------------
// BiLSTM

namespace {

struct LstmTrace {
  // Per step, post-activation gates [i f g o] (4h) and cell values.
  std::vector<double> gates;
  std::vector<double> cell;
  std::vector<double> cell_tanh;
};

void check_lstm(const LstmWeights &w, int input_dim) {
  require_rank("lstm(input weights)", w.input, 2);
  require_rank("lstm(recurrent weights)", w.recurrent, 2);
  require_rank("lstm(bias)", w.bias, 1);
  const int h = w.hidden();
  if (w.bias.dim(0) != 4 * h || w.input.dim(0) != input_dim || w.input.dim(1) != 4 * h ||
      w.recurrent.dim(0) != h || w.recurrent.dim(1) != 4 * h) {
    throw ShapeError("lstm: weights " + shape_string(w.input.shape()) + ", " +
                     shape_string(w.recurrent.shape()) + ", " +
                     shape_string(w.bias.shape()) + " do not match input width " +
                     std::to_string(input_dim));
  }
}

// Runs one direction; writes hidden states into out (stride 2h, offset col).
LstmTrace run_direction(const double *x, int n, int d, const LstmWeights &w,
                        bool reverse, double *out, int col) {
  const int h = w.hidden();
  const int g4 = 4 * h;
  const double *wi = w.input.values().data();
  const double *wr = w.recurrent.values().data();
  const double *b = w.bias.values().data();
  LstmTrace trace;
  trace.gates.assign(static_cast<size_t>(n) * g4, 0.0);
  trace.cell.assign(static_cast<size_t>(n) * h, 0.0);
  trace.cell_tanh.assign(static_cast<size_t>(n) * h, 0.0);
  std::vector<double> pre(g4);
  const double *h_prev = nullptr;
  const double *c_prev = nullptr;
  for (int s = 0; s < n; ++s) {
    const int t = reverse ? n - 1 - s : s;
    std::copy_n(b, g4, pre.data());
    const double *xt = x + static_cast<size_t>(t) * d;
    for (int j = 0; j < d; ++j) {
      if (xt[j] != 0.0) axpy(pre.data(), xt[j], wi + static_cast<size_t>(j) * g4, g4);
    }
    if (h_prev) {
      for (int j = 0; j < h; ++j) {
        if (h_prev[j] != 0.0) axpy(pre.data(), h_prev[j], wr + static_cast<size_t>(j) * g4, g4);
      }
    }
    double *gates = trace.gates.data() + static_cast<size_t>(t) * g4;
    double *c = trace.cell.data() + static_cast<size_t>(t) * h;
    double *ct = trace.cell_tanh.data() + static_cast<size_t>(t) * h;
    double *ht = out + static_cast<size_t>(t) * 2 * h + col;
    for (int k = 0; k < h; ++k) {
      const double ig = sigmoid(pre[k]);
      const double fg = sigmoid(pre[h + k]);
      const double cg = std::tanh(pre[2 * h + k]);
      const double og = sigmoid(pre[3 * h + k]);
      gates[k] = ig;
      gates[h + k] = fg;
      gates[2 * h + k] = cg;
      gates[3 * h + k] = og;
      c[k] = (c_prev ? fg * c_prev[k] : 0.0) + ig * cg;
      ct[k] = std::tanh(c[k]);
      ht[k] = og * ct[k];
    }
    h_prev = ht;
    c_prev = c;
  }
  return trace;
}

void backprop_direction(const Node &out, Node *xn, const LstmWeights &w,
                        const LstmTrace &trace, bool reverse, int col) {
  const int n = xn->shape[0];
  const int d = xn->shape[1];
  const int h = w.hidden();
  const int g4 = 4 * h;
  Node *wi = w.input.node();
  Node *wr = w.recurrent.node();
  Node *bn = w.bias.node();
  std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0), da(g4);
  for (int s = n - 1; s >= 0; --s) {
    const int t = reverse ? n - 1 - s : s;
    const int t_prev = reverse ? t + 1 : t - 1;
    const bool has_prev = s > 0;
    const double *gates = trace.gates.data() + static_cast<size_t>(t) * g4;
    const double *ct = trace.cell_tanh.data() + static_cast<size_t>(t) * h;
    const double *c_prev = has_prev ? trace.cell.data() + static_cast<size_t>(t_prev) * h : nullptr;
    const double *gout = out.grad.data() + static_cast<size_t>(t) * 2 * h + col;
    for (int k = 0; k < h; ++k) {
      const double ig = gates[k], fg = gates[h + k], cg = gates[2 * h + k], og = gates[3 * h + k];
      const double dh = gout[k] + dh_next[k];
      const double dc = dh * og * (1.0 - ct[k] * ct[k]) + dc_next[k];
      da[k] = dc * cg * ig * (1.0 - ig);
      da[h + k] = has_prev ? dc * c_prev[k] * fg * (1.0 - fg) : 0.0;
      da[2 * h + k] = dc * ig * (1.0 - cg * cg);
      da[3 * h + k] = dh * ct[k] * og * (1.0 - og);
      dc_next[k] = dc * fg;
    }
    if (bn->requires_grad) axpy(bn->grad.data(), 1.0, da.data(), g4);
    const double *xt = xn->value.data() + static_cast<size_t>(t) * d;
    double *gxt = xn->grad.data() + static_cast<size_t>(t) * d;
    for (int j = 0; j < d; ++j) {
      const double *row = wi->value.data() + static_cast<size_t>(j) * g4;
      if (wi->requires_grad && xt[j] != 0.0) {
        axpy(wi->grad.data() + static_cast<size_t>(j) * g4, xt[j], da.data(), g4);
      }
      if (xn->requires_grad) gxt[j] += dot(row, da.data(), g4);
    }
    if (has_prev) {
      const double *h_prev = out.value.data() + static_cast<size_t>(t_prev) * 2 * h + col;
      for (int j = 0; j < h; ++j) {
        const double *row = wr->value.data() + static_cast<size_t>(j) * g4;
        if (wr->requires_grad && h_prev[j] != 0.0) {
          axpy(wr->grad.data() + static_cast<size_t>(j) * g4, h_prev[j], da.data(), g4);
        }
        dh_next[j] = dot(row, da.data(), g4);
      }
    }
  }
}

}  // namespace

BiLstmOutput bilstm(const Tensor &x, const BiLstmWeights &weights) {
  require_rank("bilstm", x, 2);
  const int n = x.dim(0);
  const int d = x.dim(1);
  if (n < 1) throw ShapeError("bilstm: empty sequence");
  check_lstm(weights.forward, d);
  check_lstm(weights.backward, d);
  const int h = weights.forward.hidden();
  if (weights.backward.hidden() != h) {
    throw ShapeError("bilstm: directions have different hidden sizes");
  }
  std::vector<double> out(static_cast<size_t>(n) * 2 * h);
  auto fwd = std::make_shared<LstmTrace>(
      run_direction(x.values().data(), n, d, weights.forward, false, out.data(), 0));
  auto bwd = std::make_shared<LstmTrace>(
      run_direction(x.values().data(), n, d, weights.backward, true, out.data(), h));

  const LstmWeights wf = weights.forward;
  const LstmWeights wb = weights.backward;
  Node *xn = x.node();
  Tensor states = make_result(
      {n, 2 * h}, std::move(out),
      {x, wf.input, wf.recurrent, wf.bias, wb.input, wb.recurrent, wb.bias},
      [=](const Node &o) {
        backprop_direction(o, xn, wf, *fwd, false, 0);
        backprop_direction(o, xn, wb, *bwd, true, h);
      });
  BiLstmOutput result;
  result.final_forward = slice_row(states, n - 1, 0, h);
  result.final_backward = slice_row(states, 0, h, 2 * h);
  result.states = std::move(states);
  return result;
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (double &v : p) v /= z;
  return p;
}

namespace {

// Returns -log softmax(row)[gold] and writes the probabilities.
double row_xent(const double *row, int k, int gold, double *probs) {
  const double mx = *std::max_element(row, row + k);
  double z = 0;
  for (int i = 0; i < k; ++i) z += std::exp(row[i] - mx);
  const double log_z = mx + std::log(z);
  for (int i = 0; i < k; ++i) probs[i] = std::exp(row[i] - log_z);
  return gold >= 0 ? log_z - row[gold] : 0.0;
}

}  // namespace

SoftmaxXent softmax_xent(const Tensor &logits, int gold) {
  require_rank("softmax_xent", logits, 1);
  const int k = logits.dim(0);
  if (gold < 0 || gold >= k) {
    throw std::out_of_range("softmax_xent: gold index " + std::to_string(gold) +
                            " outside [0, " + std::to_string(k) + ")");
  }
  SoftmaxXent result;
  result.probabilities.resize(k);
  const double loss = row_xent(logits.values().data(), k, gold, result.probabilities.data());
  Node *ln = logits.node();
  auto probs = result.probabilities;
  result.loss = make_result({}, {loss}, {logits}, [ln, probs, gold](const Node &o) {
    for (size_t i = 0; i < probs.size(); ++i) {
      ln->grad[i] += o.grad[0] * (probs[i] - (static_cast<int>(i) == gold ? 1.0 : 0.0));
    }
  });
  return result;
}

RowSoftmaxXent softmax_xent_rows(const Tensor &logits, const std::vector<int> &golds) {
  require_rank("softmax_xent_rows", logits, 2);
  const int n = logits.dim(0), k = logits.dim(1);
  if (static_cast<int>(golds.size()) != n) {
    throw ShapeError("softmax_xent_rows: " + std::to_string(golds.size()) +
                     " golds for logits " + shape_string(logits.shape()));
  }
  RowSoftmaxXent result;
  result.probabilities.resize(static_cast<size_t>(n) * k);
  double loss = 0;
  for (int r = 0; r < n; ++r) {
    if (golds[r] >= k) {
      throw std::out_of_range("softmax_xent_rows: gold index " + std::to_string(golds[r]));
    }
    loss += row_xent(logits.values().data() + static_cast<size_t>(r) * k, k, golds[r],
                     result.probabilities.data() + static_cast<size_t>(r) * k);
  }
  Node *ln = logits.node();
  auto probs = result.probabilities;
  result.loss = make_result({}, {loss}, {logits}, [=](const Node &o) {
    for (int r = 0; r < n; ++r) {
      if (golds[r] < 0) continue;
      for (int i = 0; i < k; ++i) {
        const size_t idx = static_cast<size_t>(r) * k + i;
        ln->grad[idx] += o.grad[0] * (probs[idx] - (i == golds[r] ? 1.0 : 0.0));
      }
    }
  });
  return result;
}

}  // namespace tev
