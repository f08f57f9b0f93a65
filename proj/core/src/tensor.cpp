#include "moflp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "moflp/errors.hpp"
#include "moflp/rng.hpp"

namespace moflp {

void require_shape(const Tensor2& t, int rows, int cols, const char* what) {
  if (t.rows != rows || t.cols != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " + std::to_string(t.rows) + "x" +
                     std::to_string(t.cols));
  }
}

void ensure_finite(const Tensor2& t, const char* what) {
  for (double v : t.data) {
    if (!std::isfinite(v)) {
      throw DomainError(std::string(what) + " contains a non-finite value");
    }
  }
}

void matmul(const Tensor2& a, const Tensor2& b, Tensor2& out) {
  if (a.cols != b.rows) {
    throw ShapeError("matmul: inner dimensions disagree (" + std::to_string(a.cols) +
                     " vs " + std::to_string(b.rows) + ")");
  }
  out.rows = a.rows;
  out.cols = b.cols;
  out.data.assign(static_cast<std::size_t>(a.rows) * b.cols, 0.0);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      const double* brow = b.row(k);
      for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
}

void matmul_nt(const Tensor2& a, const Tensor2& b, Tensor2& out) {
  if (a.cols != b.cols) {
    throw ShapeError("matmul_nt: inner dimensions disagree (" + std::to_string(a.cols) +
                     " vs " + std::to_string(b.cols) + ")");
  }
  out.rows = a.rows;
  out.cols = b.rows;
  out.data.assign(static_cast<std::size_t>(a.rows) * b.rows, 0.0);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (int j = 0; j < b.rows; ++j) {
      const double* brow = b.row(j);
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      orow[j] = s;
    }
  }
}

void matmul_tn_acc(const Tensor2& a, const Tensor2& b, Tensor2& out) {
  if (a.rows != b.rows) {
    throw ShapeError("matmul_tn_acc: inner dimensions disagree (" + std::to_string(a.rows) +
                     " vs " + std::to_string(b.rows) + ")");
  }
  if (out.rows != a.cols || out.cols != b.cols) {
    throw ShapeError("matmul_tn_acc: output shape mismatch");
  }
  for (int k = 0; k < a.rows; ++k) {
    const double* arow = a.row(k);
    const double* brow = b.row(k);
    for (int i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      double* orow = out.row(i);
      for (int j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
    }
  }
}

Tensor2 linear(const Tensor2& x, const Tensor2& W, const Tensor2& bias) {
  if (bias.rows != 1 || bias.cols != W.cols) {
    throw ShapeError("linear: bias must be 1x" + std::to_string(W.cols));
  }
  Tensor2 y;
  matmul(x, W, y);
  for (int i = 0; i < y.rows; ++i) {
    double* yrow = y.row(i);
    const double* b = bias.row(0);
    for (int j = 0; j < y.cols; ++j) yrow[j] += b[j];
  }
  return y;
}

Tensor2 softmax_columns(const Tensor2& logits) {
  Tensor2 out(logits.rows, logits.cols);
  for (int j = 0; j < logits.cols; ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < logits.rows; ++i) mx = std::max(mx, logits.at(i, j));
    double sum = 0.0;
    for (int i = 0; i < logits.rows; ++i) {
      const double e = std::exp(logits.at(i, j) - mx);
      out.at(i, j) = e;
      sum += e;
    }
    for (int i = 0; i < logits.rows; ++i) out.at(i, j) /= sum;
  }
  return out;
}

Tensor2 relu(const Tensor2& x) {
  Tensor2 y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor2 relu_backward(const Tensor2& dy, const Tensor2& pre) {
  if (!dy.same_shape(pre)) throw ShapeError("relu_backward: shape mismatch");
  Tensor2 dx = dy;
  for (std::size_t k = 0; k < dx.data.size(); ++k) {
    if (!(pre.data[k] > 0.0)) dx.data[k] = 0.0;
  }
  return dx;
}

Tensor2 sigmoid(const Tensor2& x) {
  Tensor2 y = x;
  for (double& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
  return y;
}

void AdamState::init(const std::vector<Param*>& params) {
  step = 0;
  m.clear();
  v.clear();
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Param* p : params) {
    m.emplace_back(p->value.rows, p->value.cols);
    v.emplace_back(p->value.rows, p->value.cols);
  }
}

void adam_step(const std::vector<Param*>& params, AdamState& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: state was initialized for a different parameter list");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Param& param = *params[p];
    if (!param.value.same_shape(state.m[p]) || !param.value.same_shape(param.grad)) {
      throw ShapeError("adam_step: shape mismatch for parameter '" + param.name + "'");
    }
    double* val = param.value.data.data();
    const double* g = param.grad.data.data();
    double* mk = state.m[p].data.data();
    double* vk = state.v[p].data.data();
    const std::size_t count = param.value.size();
    for (std::size_t k = 0; k < count; ++k) {
      mk[k] = state.beta1 * mk[k] + (1.0 - state.beta1) * g[k];
      vk[k] = state.beta2 * vk[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = mk[k] / bc1;
      const double v_hat = vk[k] / bc2;
      val[k] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

double max_rel_grad_error(const std::function<double()>& loss,
                          const std::vector<Param*>& params, double probe_eps,
                          std::size_t probes, std::uint64_t seed) {
  struct Slot {
    Param* param;
    std::size_t index;
  };
  std::vector<Slot> slots;
  for (Param* p : params) {
    for (std::size_t k = 0; k < p->value.size(); ++k) slots.push_back({p, k});
  }
  if (slots.empty()) return 0.0;

  // Deterministic subsample when the parameter count exceeds the probe budget.
  if (probes < slots.size()) {
    Rng rng(seed);
    for (std::size_t k = 0; k < probes; ++k) {
      const std::size_t pick = k + rng.index(slots.size() - k);
      std::swap(slots[k], slots[pick]);
    }
    slots.resize(probes);
  }

  double worst = 0.0;
  for (const Slot& slot : slots) {
    double& entry = slot.param->value.data[slot.index];
    const double saved = entry;
    entry = saved + probe_eps;
    const double up = loss();
    entry = saved - probe_eps;
    const double down = loss();
    entry = saved;
    const double fd = (up - down) / (2.0 * probe_eps);
    const double an = slot.param->grad.data[slot.index];
    const double rel = std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1e-3});
    worst = std::max(worst, rel);
  }
  return worst;
}

BatchNorm::BatchNorm(const std::string& name, int channels)
    : gamma(name + ".gamma", 1, channels),
      beta(name + ".beta", 1, channels),
      running_mean(channels, 0.0),
      running_var(channels, 1.0) {
  std::fill(gamma.value.data.begin(), gamma.value.data.end(), 1.0);
}

Tensor2 BatchNorm::forward_train(const Tensor2& x, BnCache& cache) {
  if (x.rows < 1) throw DomainError("batch_norm requires at least one row in train mode");
  if (x.cols != channels()) throw ShapeError("batch_norm: channel count mismatch");
  const int rows = x.rows;
  const int c = x.cols;
  cache.x_hat = Tensor2(rows, c);
  cache.inv_std.assign(c, 0.0);

  Tensor2 y(rows, c);
  for (int j = 0; j < c; ++j) {
    double mean = 0.0;
    for (int i = 0; i < rows; ++i) mean += x.at(i, j);
    mean /= rows;
    double var = 0.0;
    for (int i = 0; i < rows; ++i) {
      const double d = x.at(i, j) - mean;
      var += d * d;
    }
    var /= rows;
    const double inv = 1.0 / std::sqrt(var + eps);
    cache.inv_std[j] = inv;
    const double g = gamma.value.at(0, j);
    const double b = beta.value.at(0, j);
    for (int i = 0; i < rows; ++i) {
      const double xh = (x.at(i, j) - mean) * inv;
      cache.x_hat.at(i, j) = xh;
      y.at(i, j) = g * xh + b;
    }
    running_mean[j] = (1.0 - momentum) * running_mean[j] + momentum * mean;
    running_var[j] = (1.0 - momentum) * running_var[j] + momentum * var;
  }
  return y;
}

Tensor2 BatchNorm::forward_eval(const Tensor2& x) const {
  if (x.cols != channels()) throw ShapeError("batch_norm: channel count mismatch");
  Tensor2 y(x.rows, x.cols);
  for (int j = 0; j < x.cols; ++j) {
    const double inv = 1.0 / std::sqrt(running_var[j] + eps);
    const double g = gamma.value.at(0, j);
    const double b = beta.value.at(0, j);
    const double mean = running_mean[j];
    for (int i = 0; i < x.rows; ++i) y.at(i, j) = g * (x.at(i, j) - mean) * inv + b;
  }
  return y;
}

Tensor2 BatchNorm::backward(const Tensor2& dy, const BnCache& cache) {
  if (!dy.same_shape(cache.x_hat)) throw ShapeError("batch_norm backward: shape mismatch");
  const int rows = dy.rows;
  const int c = dy.cols;
  Tensor2 dx(rows, c);
  for (int j = 0; j < c; ++j) {
    const double g = gamma.value.at(0, j);
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (int i = 0; i < rows; ++i) {
      const double d = dy.at(i, j);
      sum_dy += d;
      sum_dy_xhat += d * cache.x_hat.at(i, j);
    }
    gamma.grad.at(0, j) += sum_dy_xhat;
    beta.grad.at(0, j) += sum_dy;

    const double inv = cache.inv_std[j];
    const double mean_dy = sum_dy / rows;
    const double mean_dy_xhat = sum_dy_xhat / rows;
    for (int i = 0; i < rows; ++i) {
      const double dxh = dy.at(i, j) * g;
      dx.at(i, j) =
          inv * (dxh - g * mean_dy - cache.x_hat.at(i, j) * g * mean_dy_xhat);
    }
  }
  return dx;
}

}  // namespace moflp
