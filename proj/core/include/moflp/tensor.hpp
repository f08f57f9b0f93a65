#ifndef MOFLP_TENSOR_HPP
#define MOFLP_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace moflp {

/// Dense row-major matrix of doubles. Every kernel runs single-threaded with
/// a fixed summation order, so repeated calls are bit-reproducible.
struct Tensor2 {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
  void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

/// Throws ShapeError unless t has the given shape; `what` names the operand.
void require_shape(const Tensor2& t, int rows, int cols, const char* what);

/// Throws DomainError naming `what` if any entry is NaN or infinite.
void ensure_finite(const Tensor2& t, const char* what);

// Kernels. `out` must not alias an input.
void matmul(const Tensor2& a, const Tensor2& b, Tensor2& out);         // out = a b
void matmul_nt(const Tensor2& a, const Tensor2& b, Tensor2& out);      // out = a bT
void matmul_tn_acc(const Tensor2& a, const Tensor2& b, Tensor2& out);  // out += aT b

/// y = x W + b with the bias (1×H) broadcast over rows.
Tensor2 linear(const Tensor2& x, const Tensor2& W, const Tensor2& bias);

/// Column-wise softmax, stabilized by max subtraction. Every output column
/// sums to one.
Tensor2 softmax_columns(const Tensor2& logits);

Tensor2 relu(const Tensor2& x);
/// dx for y = relu(pre): passes dy where pre > 0.
Tensor2 relu_backward(const Tensor2& dy, const Tensor2& pre);
Tensor2 sigmoid(const Tensor2& x);

/// A named learnable tensor with its gradient accumulator.
struct Param {
  std::string name;
  Tensor2 value;
  Tensor2 grad;

  Param() = default;
  Param(std::string param_name, int rows, int cols)
      : name(std::move(param_name)), value(rows, cols), grad(rows, cols) {}

  void zero_grad() { grad.zero(); }
};

/// Adam with bias correction. One state instance steps a fixed parameter
/// list; moment tensors mirror parameter shapes.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Tensor2> m;
  std::vector<Tensor2> v;

  void init(const std::vector<Param*>& params);
};

/// One Adam update over `params` using their accumulated gradients.
/// Throws ShapeError if state and parameter shapes disagree.
void adam_step(const std::vector<Param*>& params, AdamState& state);

/// Central finite differences against the analytic gradients already stored
/// in each param's grad tensor. Perturbs up to `probes` randomly chosen
/// entries (all entries when probes covers the total count). `loss` must
/// recompute the scalar objective from the current parameter values.
/// The relative error denominator is floored at 1e-3 so discrepancies below
/// finite-difference resolution do not register.
double max_rel_grad_error(const std::function<double()>& loss,
                          const std::vector<Param*>& params, double probe_eps,
                          std::size_t probes, std::uint64_t seed);

enum class NormMode { train, eval };

/// Train-mode batch statistics cached for the backward pass.
struct BnCache {
  Tensor2 x_hat;
  std::vector<double> inv_std;
};

/// Column-wise batch normalization (eps 1e-5) with running statistics
/// (momentum 0.1) for eval mode. Train mode normalizes by the biased batch
/// variance; eval mode is const and thread-safe.
struct BatchNorm {
  Param gamma;  // 1×C, init 1
  Param beta;   // 1×C, init 0
  std::vector<double> running_mean;  // init 0
  std::vector<double> running_var;   // init 1
  double eps = 1e-5;
  double momentum = 0.1;

  BatchNorm() = default;
  BatchNorm(const std::string& name, int channels);

  int channels() const { return gamma.value.cols; }

  /// Requires at least one row; updates running statistics.
  Tensor2 forward_train(const Tensor2& x, BnCache& cache);
  Tensor2 forward_eval(const Tensor2& x) const;

  /// Accumulates into gamma.grad / beta.grad and returns dx.
  Tensor2 backward(const Tensor2& dy, const BnCache& cache);
};

}  // namespace moflp

#endif  // MOFLP_TENSOR_HPP
