#ifndef TEV_CRF_H_
#define TEV_CRF_H_

#include <vector>

#include "tev/optim.h"
#include "tev/tensor.h"

namespace tev {

// Per-position tag scores, row-major [length x num_tags].
struct EmissionMatrix {
  int length = 0;
  int num_tags = 0;
  std::vector<double> scores;

  double operator()(int t, int tag) const {
    return scores[static_cast<size_t>(t) * num_tags + tag];
  }
  static EmissionMatrix from_tensor(const Tensor &emissions);
};

// Plain-value CRF scores. transitions[i * T + j] scores tag j following i.
struct CrfWeights {
  int num_tags = 0;
  std::vector<double> transitions;
  std::vector<double> start;
  std::vector<double> end;

  static CrfWeights zeros(int num_tags);
  double transition(int from, int to) const {
    return transitions[static_cast<size_t>(from) * num_tags + to];
  }
};

// Trainable CRF parameters registered in a ParamStore.
struct CrfParams {
  Tensor transitions;  // [T x T]
  Tensor start;        // [T]
  Tensor end;          // [T]

  static CrfParams create(ParamStore &store, const std::string &prefix,
                          int num_tags, Rng &rng);
  CrfWeights weights() const;
};

// Allowed-transition mask for constrained decoding.
struct TransitionMask {
  int num_tags = 0;
  std::vector<char> allowed;        // [T x T]
  std::vector<char> start_allowed;  // [T]

  // Forbids the BIO-illegal transitions of the 9-tag inventory.
  static TransitionMask bio();
};

// Score of one tag path, accumulated in the same order as viterbi().
double path_score(const EmissionMatrix &emissions, const CrfWeights &crf,
                  const std::vector<int> &tags);

// log of the sum over all paths of exp(path score). Throws on empty input.
double log_partition(const EmissionMatrix &emissions, const CrfWeights &crf);

// log_partition - path_score(gold).
double nll(const EmissionMatrix &emissions, const CrfWeights &crf,
           const std::vector<int> &gold);

struct ViterbiResult {
  std::vector<int> tags;
  double score = 0.0;
};

// Best-scoring path. Ties go to the lowest tag index at every backtrack
// step. With a mask, forbidden transitions score -infinity.
ViterbiResult viterbi(const EmissionMatrix &emissions, const CrfWeights &crf,
                      const TransitionMask *mask = nullptr);

struct OracleResult {
  double log_partition = 0.0;
  std::vector<int> best;
  double best_score = 0.0;
};

// Exhaustive enumeration of all num_tags^length paths (at most 10^6).
OracleResult brute_force_oracle(const EmissionMatrix &emissions,
                                const CrfWeights &crf);

// Differentiable negative log-likelihood of the gold path; gradients flow
// to the emissions ([n x T]) and all CRF parameters.
Tensor crf_nll(const Tensor &emissions, const CrfParams &crf,
               const std::vector<int> &gold);

}  // namespace tev

#endif  // TEV_CRF_H_
