#ifndef TEV_OPS_H_
#define TEV_OPS_H_

#include <vector>

#include "tev/random.h"
#include "tev/tensor.h"

namespace tev {

// Elementwise and reductions.
Tensor add(const Tensor &a, const Tensor &b);
Tensor mul(const Tensor &a, const Tensor &b);
Tensor scale(const Tensor &a, double factor);
Tensor sum(const Tensor &a);
// Sum of same-shape tensors; a single-input list returns the input.
Tensor add_n(const std::vector<Tensor> &terms);
Tensor relu(const Tensor &a);
Tensor tanh(const Tensor &a);

// y = W x + b for x of shape [in] or row-wise for x of shape [n x in].
// W is [out x in], b is [out].
Tensor affine(const Tensor &x, const Tensor &weight, const Tensor &bias);

// Rows of `table` ([vocab x dim]) selected by id, as [n x dim].
Tensor embedding_lookup(const std::vector<int> &ids, const Tensor &table);

// Valid 1-d convolution over time. X is [n x d], filters are
// [count x (width * d)] (a flattened window of `width` rows), bias is
// [count]. Produces [(n - width + 1) x count].
Tensor conv_window(const Tensor &x, const Tensor &filters, const Tensor &bias,
                   int width);

// Column-wise maximum of [m x f] as [f]; ties route the gradient to the
// earliest row.
Tensor max_pool_over_time(const Tensor &features);

// Inverted dropout. Identity when !training or rate == 0.
Tensor dropout(const Tensor &x, double rate, bool training, Rng *rng);

Tensor concat(const Tensor &a, const Tensor &b);
// Appends vector v ([b]) to every row of X ([n x a]), giving [n x (a + b)].
Tensor concat_to_rows(const Tensor &x, const Tensor &v);
// Rows of X ([m x d]) at the given indices, as [k x d].
Tensor gather_rows(const Tensor &x, const std::vector<int> &rows);
// Row `row`, columns [begin, end) of a rank-2 tensor, as a vector.
Tensor slice_row(const Tensor &x, int row, int begin, int end);

// Per-direction LSTM weights. Gate blocks are ordered input, forget,
// candidate, output; inputs multiply from the left (x W).
struct LstmWeights {
  Tensor input;      // [d x 4h]
  Tensor recurrent;  // [h x 4h]
  Tensor bias;       // [4h]

  int hidden() const { return bias.dim(0) / 4; }
};

struct BiLstmWeights {
  LstmWeights forward;
  LstmWeights backward;
};

struct BiLstmOutput {
  Tensor states;          // [n x 2h]: forward state then backward state
  Tensor final_forward;   // forward state after the last token [h]
  Tensor final_backward;  // backward state after the first token [h]
};

BiLstmOutput bilstm(const Tensor &x, const BiLstmWeights &weights);

// Max-shifted softmax of a plain vector.
std::vector<double> softmax(std::span<const double> logits);

struct SoftmaxXent {
  Tensor loss;  // scalar
  std::vector<double> probabilities;
};

// -log softmax(logits)[gold] for logits of shape [k].
SoftmaxXent softmax_xent(const Tensor &logits, int gold);

struct RowSoftmaxXent {
  Tensor loss;                       // scalar: sum over included rows
  std::vector<double> probabilities;  // [n x k], every row
};

// Row-wise softmax cross-entropy for [n x k] logits; rows whose gold is
// negative contribute no loss.
RowSoftmaxXent softmax_xent_rows(const Tensor &logits, const std::vector<int> &golds);

}  // namespace tev

#endif  // TEV_OPS_H_
