#include "tev/crf.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tev/bio.h"
#include "tev/errors.h"

namespace tev {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const double *v, int n) {
  double mx = kNegInf;
  for (int i = 0; i < n; ++i) mx = std::max(mx, v[i]);
  if (mx == kNegInf) return kNegInf;
  double s = 0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

void check(const EmissionMatrix &e, const CrfWeights &crf) {
  if (e.length < 1) throw ShapeError("crf: empty sequence");
  const size_t t = static_cast<size_t>(crf.num_tags);
  if (e.num_tags != crf.num_tags || e.scores.size() != e.length * t ||
      crf.transitions.size() != t * t || crf.start.size() != t || crf.end.size() != t) {
    throw ShapeError("crf: emissions [" + std::to_string(e.length) + "x" +
                     std::to_string(e.num_tags) + "] incompatible with " +
                     std::to_string(crf.num_tags) + " tags");
  }
}

// Forward log-space recursion; alpha is [n x T].
std::vector<double> forward_alpha(const EmissionMatrix &e, const CrfWeights &crf) {
  const int n = e.length, T = e.num_tags;
  std::vector<double> alpha(static_cast<size_t>(n) * T);
  std::vector<double> tmp(T);
  for (int j = 0; j < T; ++j) alpha[j] = crf.start[j] + e(0, j);
  for (int t = 1; t < n; ++t) {
    const double *prev = alpha.data() + static_cast<size_t>(t - 1) * T;
    for (int j = 0; j < T; ++j) {
      for (int i = 0; i < T; ++i) tmp[i] = prev[i] + crf.transition(i, j);
      alpha[static_cast<size_t>(t) * T + j] = log_sum_exp(tmp.data(), T) + e(t, j);
    }
  }
  return alpha;
}

}  // namespace

EmissionMatrix EmissionMatrix::from_tensor(const Tensor &emissions) {
  require_rank("emissions", emissions, 2);
  return {emissions.dim(0), emissions.dim(1),
          std::vector<double>(emissions.values().begin(), emissions.values().end())};
}

CrfWeights CrfWeights::zeros(int num_tags) {
  const size_t t = static_cast<size_t>(num_tags);
  return {num_tags, std::vector<double>(t * t, 0.0), std::vector<double>(t, 0.0),
          std::vector<double>(t, 0.0)};
}

CrfParams CrfParams::create(ParamStore &store, const std::string &prefix,
                            int num_tags, Rng &rng) {
  CrfParams p;
  p.transitions = store.add(prefix + ".transitions", {num_tags, num_tags},
                            Init::kUniformFanIn, rng, num_tags);
  p.start = store.add(prefix + ".start", {num_tags}, Init::kZeros, rng);
  p.end = store.add(prefix + ".end", {num_tags}, Init::kZeros, rng);
  return p;
}

CrfWeights CrfParams::weights() const {
  auto copy = [](const Tensor &t) {
    return std::vector<double>(t.values().begin(), t.values().end());
  };
  return {start.dim(0), copy(transitions), copy(start), copy(end)};
}

TransitionMask TransitionMask::bio() {
  TransitionMask mask;
  mask.num_tags = kNumTags;
  mask.allowed.assign(kNumTags * kNumTags, 1);
  mask.start_allowed.assign(kNumTags, 1);
  for (int j = 0; j < kNumTags; ++j) {
    const BioTag next = tag_from_index(j);
    mask.start_allowed[j] = transition_allowed(std::nullopt, next);
    for (int i = 0; i < kNumTags; ++i) {
      mask.allowed[i * kNumTags + j] = transition_allowed(tag_from_index(i), next);
    }
  }
  return mask;
}

double path_score(const EmissionMatrix &e, const CrfWeights &crf,
                  const std::vector<int> &tags) {
  check(e, crf);
  if (static_cast<int>(tags.size()) != e.length) {
    throw ShapeError("crf: " + std::to_string(tags.size()) + " tags for " +
                     std::to_string(e.length) + " positions");
  }
  for (int tag : tags) {
    if (tag < 0 || tag >= crf.num_tags) throw std::out_of_range("crf: tag out of range");
  }
  double s = crf.start[tags[0]] + e(0, tags[0]);
  for (int t = 1; t < e.length; ++t) {
    s = (s + crf.transition(tags[t - 1], tags[t])) + e(t, tags[t]);
  }
  return s + crf.end[tags.back()];
}

double log_partition(const EmissionMatrix &e, const CrfWeights &crf) {
  check(e, crf);
  const std::vector<double> alpha = forward_alpha(e, crf);
  const int T = e.num_tags;
  std::vector<double> last(T);
  for (int j = 0; j < T; ++j) {
    last[j] = alpha[static_cast<size_t>(e.length - 1) * T + j] + crf.end[j];
  }
  return log_sum_exp(last.data(), T);
}

double nll(const EmissionMatrix &e, const CrfWeights &crf, const std::vector<int> &gold) {
  return log_partition(e, crf) - path_score(e, crf, gold);
}

ViterbiResult viterbi(const EmissionMatrix &e, const CrfWeights &crf,
                      const TransitionMask *mask) {
  check(e, crf);
  const int n = e.length, T = e.num_tags;
  if (mask && mask->num_tags != T) throw ShapeError("viterbi: mask size mismatch");
  std::vector<double> delta(T), next(T);
  std::vector<int> back(static_cast<size_t>(n) * T, 0);
  for (int j = 0; j < T; ++j) {
    delta[j] = (mask && !mask->start_allowed[j]) ? kNegInf : crf.start[j] + e(0, j);
  }
  for (int t = 1; t < n; ++t) {
    for (int j = 0; j < T; ++j) {
      double best = kNegInf;
      int arg = 0;
      bool found = false;
      for (int i = 0; i < T; ++i) {
        if (mask && !mask->allowed[i * T + j]) continue;
        const double cand = delta[i] + crf.transition(i, j);
        if (!found || cand > best) {
          best = cand;
          arg = i;
          found = true;
        }
      }
      next[j] = found ? best + e(t, j) : kNegInf;
      back[static_cast<size_t>(t) * T + j] = arg;
    }
    std::swap(delta, next);
  }
  ViterbiResult result;
  int last = 0;
  double best = kNegInf;
  bool found = false;
  for (int j = 0; j < T; ++j) {
    const double cand = delta[j] + crf.end[j];
    if (!found || cand > best) {
      best = cand;
      last = j;
      found = true;
    }
  }
  result.score = best;
  result.tags.assign(n, 0);
  result.tags[n - 1] = last;
  for (int t = n - 1; t > 0; --t) {
    result.tags[t - 1] = back[static_cast<size_t>(t) * T + result.tags[t]];
  }
  return result;
}

OracleResult brute_force_oracle(const EmissionMatrix &e, const CrfWeights &crf) {
  check(e, crf);
  const int n = e.length, T = e.num_tags;
  double paths = 1;
  for (int t = 0; t < n; ++t) paths *= T;
  if (paths > 1e6) {
    throw std::invalid_argument("brute_force_oracle: " + std::to_string(T) + "^" +
                                std::to_string(n) + " paths exceed 10^6");
  }
  std::vector<double> scores;
  scores.reserve(static_cast<size_t>(paths));
  OracleResult result;
  std::vector<int> tags(n, 0);
  bool first = true;
  // Among equal scores prefer the path that is smaller when compared from
  // the last position backwards, matching viterbi()'s tie-break.
  auto reverse_less = [](const std::vector<int> &a, const std::vector<int> &b) {
    return std::lexicographical_compare(a.rbegin(), a.rend(), b.rbegin(), b.rend());
  };
  while (true) {
    const double s = path_score(e, crf, tags);
    scores.push_back(s);
    if (first || s > result.best_score ||
        (s == result.best_score && reverse_less(tags, result.best))) {
      result.best_score = s;
      result.best = tags;
      first = false;
    }
    int pos = n - 1;
    while (pos >= 0 && ++tags[pos] == T) tags[pos--] = 0;
    if (pos < 0) break;
  }
  result.log_partition = log_sum_exp(scores.data(), static_cast<int>(scores.size()));
  return result;
}

Tensor crf_nll(const Tensor &emissions, const CrfParams &params,
               const std::vector<int> &gold) {
  const EmissionMatrix e = EmissionMatrix::from_tensor(emissions);
  const CrfWeights crf = params.weights();
  check(e, crf);
  const int n = e.length, T = e.num_tags;
  const double gold_score = path_score(e, crf, gold);
  auto alpha = std::make_shared<std::vector<double>>(forward_alpha(e, crf));
  std::vector<double> last(T);
  for (int j = 0; j < T; ++j) last[j] = (*alpha)[static_cast<size_t>(n - 1) * T + j] + crf.end[j];
  const double log_z = log_sum_exp(last.data(), T);

  Node *en = emissions.node();
  Node *tn = params.transitions.node();
  Node *sn = params.start.node();
  Node *fn = params.end.node();
  return make_result(
      {}, {log_z - gold_score},
      {emissions, params.transitions, params.start, params.end},
      [=](const Node &o) {
        const double g = o.grad[0];
        // Backward recursion: beta[t][i] = log sum over suffixes from tag i at t.
        std::vector<double> beta(static_cast<size_t>(n) * T);
        std::vector<double> tmp(T);
        for (int j = 0; j < T; ++j) beta[static_cast<size_t>(n - 1) * T + j] = crf.end[j];
        for (int t = n - 2; t >= 0; --t) {
          for (int i = 0; i < T; ++i) {
            for (int j = 0; j < T; ++j) {
              tmp[j] = crf.transition(i, j) + e(t + 1, j) +
                       beta[static_cast<size_t>(t + 1) * T + j];
            }
            beta[static_cast<size_t>(t) * T + i] = log_sum_exp(tmp.data(), T);
          }
        }
        const std::vector<double> &a = *alpha;
        for (int t = 0; t < n; ++t) {
          for (int j = 0; j < T; ++j) {
            const size_t idx = static_cast<size_t>(t) * T + j;
            const double marginal = std::exp(a[idx] + beta[idx] - log_z);
            const double indicator = gold[t] == j ? 1.0 : 0.0;
            if (en->requires_grad) en->grad[idx] += g * (marginal - indicator);
            if (t == 0 && sn->requires_grad) sn->grad[j] += g * (marginal - indicator);
            if (t == n - 1 && fn->requires_grad) fn->grad[j] += g * (marginal - indicator);
          }
        }
        if (tn->requires_grad) {
          for (int t = 0; t + 1 < n; ++t) {
            for (int i = 0; i < T; ++i) {
              const double ai = a[static_cast<size_t>(t) * T + i];
              for (int j = 0; j < T; ++j) {
                const double pair =
                    std::exp(ai + crf.transition(i, j) + e(t + 1, j) +
                             beta[static_cast<size_t>(t + 1) * T + j] - log_z);
                tn->grad[static_cast<size_t>(i) * T + j] += g * pair;
              }
            }
            tn->grad[static_cast<size_t>(gold[t]) * T + gold[t + 1]] -= g;
          }
        }
      });
}

}  // namespace tev
