#ifndef TEV_OPTIM_H_
#define TEV_OPTIM_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tev/random.h"
#include "tev/tensor.h"

namespace tev {

enum class Init {
  kUniformFanIn,  // U(-sqrt(1/fan_in), +sqrt(1/fan_in))
  kZeros,
  kNormalEmbedding,  // N(0, 1) * 0.1
};

struct Param {
  std::string name;
  Tensor tensor;
  // Adam first and second moments, same size as the tensor.
  std::vector<double> first_moment;
  std::vector<double> second_moment;
};

// Named trainable parameters plus optimizer state.
class ParamStore {
 public:
  // Throws std::invalid_argument on duplicate names.
  Tensor add(const std::string &name, Shape shape, Init init, Rng &rng,
             int fan_in = 0);
  Tensor get(const std::string &name) const;
  bool contains(const std::string &name) const;

  std::vector<Param> &params() { return params_; }
  const std::vector<Param> &params() const { return params_; }
  std::vector<Tensor> tensors() const;
  size_t total_size() const;

  void zero_grad();
  double grad_norm() const;
  // Rescales gradients so the global L2 norm is at most max_norm. Returns
  // the norm before clipping.
  double clip_grad_norm(double max_norm);
  bool grads_finite() const;

  int64_t adam_steps() const { return adam_steps_; }

  using Snapshot = std::vector<std::vector<double>>;
  Snapshot snapshot() const;
  void restore(const Snapshot &snapshot);

  // Names, shapes and values (optimizer state is not persisted).
  nlohmann::json to_json() const;
  // Overwrites values of existing parameters; shapes and names must match.
  void load_json(const nlohmann::json &j);

 private:
  friend void adam_step(ParamStore &, double, double, double, double);

  std::vector<Param> params_;
  int64_t adam_steps_ = 0;
};

void sgd_step(ParamStore &store, double lr);
void adam_step(ParamStore &store, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double epsilon = 1e-8);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  size_t checked = 0;
};

// Compares reverse-mode gradients against central differences. The error
// per entry is |g_ad - g_fd| / max(1, |g_ad|, |g_fd|). loss_fn must rebuild
// the graph on each call and be deterministic.
GradCheckResult grad_check(const std::function<Tensor()> &loss_fn,
                           const std::vector<std::pair<std::string, Tensor>> &params,
                           double epsilon = 1e-5);
GradCheckResult grad_check(const std::function<Tensor()> &loss_fn,
                           ParamStore &store, double epsilon = 1e-5);

}  // namespace tev

#endif  // TEV_OPTIM_H_
