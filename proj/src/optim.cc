#include "tev/optim.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tev/errors.h"

namespace tev {

Tensor ParamStore::add(const std::string &name, Shape shape, Init init, Rng &rng,
                       int fan_in) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  Tensor t = Tensor::zeros(shape, /*requires_grad=*/true);
  switch (init) {
    case Init::kZeros:
      break;
    case Init::kUniformFanIn: {
      if (fan_in <= 0) fan_in = shape.size() >= 2 ? shape[1] : shape[0];
      const double bound = std::sqrt(1.0 / fan_in);
      for (double &v : t.values()) v = rng.uniform(-bound, bound);
      break;
    }
    case Init::kNormalEmbedding:
      for (double &v : t.values()) v = rng.normal() * 0.1;
      break;
  }
  const size_t n = t.numel();
  params_.push_back({name, t, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)});
  return t;
}

Tensor ParamStore::get(const std::string &name) const {
  for (const Param &p : params_) {
    if (p.name == name) return p.tensor;
  }
  throw std::out_of_range("no parameter named " + name);
}

bool ParamStore::contains(const std::string &name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Param &p) { return p.name == name; });
}

std::vector<Tensor> ParamStore::tensors() const {
  std::vector<Tensor> out;
  for (const Param &p : params_) out.push_back(p.tensor);
  return out;
}

size_t ParamStore::total_size() const {
  size_t n = 0;
  for (const Param &p : params_) n += p.tensor.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (Param &p : params_) p.tensor.zero_grad();
}

double ParamStore::grad_norm() const {
  double sq = 0;
  for (const Param &p : params_) {
    for (double g : p.tensor.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double ParamStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0) {
    const double factor = max_norm / norm;
    for (Param &p : params_) {
      for (double &g : p.tensor.grad()) g *= factor;
    }
  }
  return norm;
}

bool ParamStore::grads_finite() const {
  for (const Param &p : params_) {
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) return false;
    }
  }
  return true;
}

ParamStore::Snapshot ParamStore::snapshot() const {
  Snapshot s;
  for (const Param &p : params_) s.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
  return s;
}

void ParamStore::restore(const Snapshot &snapshot) {
  if (snapshot.size() != params_.size()) throw std::invalid_argument("snapshot size mismatch");
  for (size_t i = 0; i < params_.size(); ++i) {
    auto values = params_[i].tensor.values();
    if (snapshot[i].size() != values.size()) throw std::invalid_argument("snapshot shape mismatch");
    std::copy(snapshot[i].begin(), snapshot[i].end(), values.begin());
  }
}

nlohmann::json ParamStore::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const Param &p : params_) {
    arr.push_back({{"name", p.name},
                   {"shape", p.tensor.shape()},
                   {"values", std::vector<double>(p.tensor.values().begin(),
                                                  p.tensor.values().end())}});
  }
  return arr;
}

void ParamStore::load_json(const nlohmann::json &j) {
  if (!j.is_array() || j.size() != params_.size()) {
    throw DataError("checkpoint parameter list does not match the model");
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    const auto &entry = j[i];
    Param &p = params_[i];
    if (entry.at("name").get<std::string>() != p.name ||
        entry.at("shape").get<Shape>() != p.tensor.shape()) {
      throw DataError("checkpoint parameter " + entry.at("name").get<std::string>() +
                      " does not match model parameter " + p.name + " " +
                      shape_string(p.tensor.shape()));
    }
    const auto values = entry.at("values").get<std::vector<double>>();
    if (values.size() != p.tensor.numel()) throw DataError("bad value count for " + p.name);
    std::copy(values.begin(), values.end(), p.tensor.values().begin());
  }
}

void sgd_step(ParamStore &store, double lr) {
  for (Param &p : store.params()) {
    auto values = p.tensor.values();
    auto grad = p.tensor.grad();
    for (size_t i = 0; i < values.size(); ++i) values[i] -= lr * grad[i];
  }
}

void adam_step(ParamStore &store, double lr, double beta1, double beta2,
               double epsilon) {
  ++store.adam_steps_;
  const double t = static_cast<double>(store.adam_steps_);
  const double correction1 = 1.0 - std::pow(beta1, t);
  const double correction2 = 1.0 - std::pow(beta2, t);
  for (Param &p : store.params_) {
    auto values = p.tensor.values();
    auto grad = p.tensor.grad();
    for (size_t i = 0; i < values.size(); ++i) {
      double &m = p.first_moment[i];
      double &v = p.second_moment[i];
      m = beta1 * m + (1.0 - beta1) * grad[i];
      v = beta2 * v + (1.0 - beta2) * grad[i] * grad[i];
      const double m_hat = m / correction1;
      const double v_hat = v / correction2;
      values[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon);
    }
  }
}

GradCheckResult grad_check(const std::function<Tensor()> &loss_fn,
                           const std::vector<std::pair<std::string, Tensor>> &params,
                           double epsilon) {
  for (auto [name, t] : params) t.zero_grad();
  backward(loss_fn());
  std::vector<std::vector<double>> analytic;
  for (const auto &[name, t] : params) analytic.emplace_back(t.grad().begin(), t.grad().end());

  GradCheckResult result;
  for (size_t k = 0; k < params.size(); ++k) {
    Tensor t = params[k].second;
    auto values = t.values();
    for (size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + epsilon;
      const double plus = loss_fn().item();
      values[i] = saved - epsilon;
      const double minus = loss_fn().item();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double ad = analytic[k][i];
      const double err = std::abs(ad - numeric) /
                         std::max({1.0, std::abs(ad), std::abs(numeric)});
      ++result.checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_param = params[k].first;
        result.worst_index = i;
      }
    }
  }
  return result;
}

GradCheckResult grad_check(const std::function<Tensor()> &loss_fn, ParamStore &store,
                           double epsilon) {
  std::vector<std::pair<std::string, Tensor>> params;
  for (const Param &p : store.params()) params.emplace_back(p.name, p.tensor);
  return grad_check(loss_fn, params, epsilon);
}

}  // namespace tev
