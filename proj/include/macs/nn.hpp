#pragma once

#include <string>
#include <utility>
#include <vector>

#include "macs/rng.hpp"
#include "macs/tensor.hpp"

namespace macs::nn {

enum class Activation { Identity, ReLU, Tanh };

double apply_activation(Activation a, double pre);
// Derivative expressed through the pre-activation value. ReLU subgradient at
// zero is defined as 0.
double activation_grad(Activation a, double pre);

// ---------------------------------------------------------------------------
// Dense layer: y = act(W x + b), W has shape [out, in].
// The caller keeps the input and pre-activation around as the backward cache.
// ---------------------------------------------------------------------------
struct DenseParams {
  Tensor W;  // [out, in]
  Tensor b;  // [out]

  DenseParams() = default;
  DenseParams(int in, int out) : W({out, in}), b({out}) {}

  int in_dim() const { return W.cols(); }
  int out_dim() const { return W.rows(); }

  void init(Rng& rng) {
    W.init_uniform(rng, in_dim());
    b.init_uniform(rng, in_dim());
  }
  void zero() {
    W.zero();
    b.zero();
  }
};

// pre and y may alias only if act == Identity.
void dense_forward(const DenseParams& p, Activation act, const double* x,
                   double* pre, double* y);

// Consumes dL/dy, writes dL/dpre into dpre, accumulates dL/dx into dx_acc
// (may be null) and parameter gradients into g.
void dense_backward(const DenseParams& p, Activation act, const double* x,
                    const double* pre, const double* dy, double* dpre,
                    double* dx_acc, DenseParams& g);

// ---------------------------------------------------------------------------
// Embedding table: row lookup with scatter-add backward.
// ---------------------------------------------------------------------------
struct EmbeddingParams {
  Tensor table;  // [vocab, dim]

  EmbeddingParams() = default;
  EmbeddingParams(int vocab, int dim) : table({vocab, dim}) {}

  int vocab() const { return table.rows(); }
  int dim() const { return table.cols(); }

  void init(Rng& rng) { table.init_normal(rng, 0.1); }
  void zero() { table.zero(); }
};

void embedding_forward(const EmbeddingParams& p, int id, double* out);
void embedding_backward(EmbeddingParams& g, int id, const double* dout);

// ---------------------------------------------------------------------------
// Gated recurrent cell, standard update:
//   r = sigmoid(Wr x + Ur h + br)
//   z = sigmoid(Wz x + Uz h + bz)
//   n = tanh(Wn x + r * (Un h + bn))
//   h' = (1 - z) * n + z * h
// ---------------------------------------------------------------------------
struct GruParams {
  DenseParams wr, wz, wn;  // input-to-hidden, [hidden, in]
  DenseParams ur, uz, un;  // hidden-to-hidden, [hidden, hidden]

  GruParams() = default;
  GruParams(int in, int hidden)
      : wr(in, hidden), wz(in, hidden), wn(in, hidden),
        ur(hidden, hidden), uz(hidden, hidden), un(hidden, hidden) {}

  int in_dim() const { return wr.in_dim(); }
  int hidden_dim() const { return wr.out_dim(); }

  void init(Rng& rng) {
    wr.init(rng); wz.init(rng); wn.init(rng);
    ur.init(rng); uz.init(rng); un.init(rng);
  }
  void zero() {
    wr.zero(); wz.zero(); wn.zero();
    ur.zero(); uz.zero(); un.zero();
  }
};

struct GruCache {
  std::vector<double> x, h, r, z, n, un_h;  // un_h = Un h + bn
};

void gru_step(const GruParams& p, const double* x, const double* h,
              double* h_out, GruCache* cache);

// Accumulates dL/dx into dx_acc and dL/dh into dh_acc (either may be null),
// parameter gradients into g.
void gru_backward(const GruParams& p, const GruCache& cache, const double* dh_out,
                  double* dx_acc, double* dh_acc, GruParams& g);

// ---------------------------------------------------------------------------
// Dropout (inverted scaling; identity unless training).
// ---------------------------------------------------------------------------
struct DropoutMask {
  std::vector<double> scale;  // 0 or 1/(1-rate) per coordinate
};

void dropout_forward(double rate, bool training, Rng& rng, double* x, int n,
                     DropoutMask* mask);
void dropout_backward(const DropoutMask& mask, double* dx, int n);

// ---------------------------------------------------------------------------
// Losses.
// ---------------------------------------------------------------------------

// (1/N) * sum_i w_i (pred_i - target_i)^2; writes d/dpred into dpred if
// non-null. Throws on an empty batch.
double weighted_mse(const std::vector<double>& pred, const std::vector<double>& target,
                    const std::vector<double>& weights, std::vector<double>* dpred);

// -alpha_c * log softmax(logits)[label]; writes d/dlogits if non-null.
double weighted_cross_entropy(const double* logits, int n_classes, int label,
                              const double* class_weights, double* dlogits);

void softmax(const double* logits, int n, double* probs);

// ---------------------------------------------------------------------------
// Named parameter enumeration. Models expose their weight tensors through a
// visitor so the optimizer, checkpointing and the gradient checker can all
// walk the same fixed order.
// ---------------------------------------------------------------------------
struct NamedTensorRef {
  std::string name;
  Tensor* tensor;
};

class TensorCollector {
 public:
  void operator()(const std::string& name, Tensor& t) { refs_.push_back({name, &t}); }
  void operator()(const std::string& prefix, DenseParams& d) {
    refs_.push_back({prefix + ".w", &d.W});
    refs_.push_back({prefix + ".b", &d.b});
  }
  void operator()(const std::string& prefix, EmbeddingParams& e) {
    refs_.push_back({prefix + ".table", &e.table});
  }
  void operator()(const std::string& prefix, GruParams& g) {
    (*this)(prefix + ".wr", g.wr);
    (*this)(prefix + ".wz", g.wz);
    (*this)(prefix + ".wn", g.wn);
    (*this)(prefix + ".ur", g.ur);
    (*this)(prefix + ".uz", g.uz);
    (*this)(prefix + ".un", g.un);
  }
  std::vector<NamedTensorRef>& refs() { return refs_; }

 private:
  std::vector<NamedTensorRef> refs_;
};

template <class Weights>
std::vector<NamedTensorRef> named_tensors(Weights& w) {
  TensorCollector c;
  w.visit(c);
  return std::move(c.refs());
}

// ---------------------------------------------------------------------------
// Adam with weight decay. Decay is coupled into the gradient (g += lambda*w)
// by default; set decoupled=true for the decoupled variant.
// ---------------------------------------------------------------------------
struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  bool decoupled = false;
};

class Adam {
 public:
  Adam() = default;
  template <class Weights>
  Adam(Weights& w, AdamConfig cfg) : cfg_(cfg) {
    for (auto& ref : named_tensors(w)) {
      names_.push_back(ref.name);
      m_.emplace_back(ref.tensor->shape);
      v_.emplace_back(ref.tensor->shape);
    }
  }

  // Applies one update with the given learning rate. Throws on non-finite
  // gradients, naming the offending parameter.
  template <class Weights>
  void step(Weights& weights, Weights& grads, double lr) {
    auto wr = named_tensors(weights);
    auto gr = named_tensors(grads);
    apply(wr, gr, lr);
  }

  std::int64_t step_count() const { return t_; }

 private:
  void apply(std::vector<NamedTensorRef>& weights, std::vector<NamedTensorRef>& grads,
             double lr);

  AdamConfig cfg_;
  std::vector<std::string> names_;
  std::vector<Tensor> m_, v_;
  std::int64_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Piecewise-linear schedule: start_value at step 0, end_value from
// end_fraction * total_steps onward.
// ---------------------------------------------------------------------------
struct LinearSchedule {
  double start_value = 0.0;
  double end_value = 0.0;
  double end_fraction = 1.0;
  std::int64_t total_steps = 1;

  double value(std::int64_t step) const {
    const double knee = end_fraction * static_cast<double>(total_steps);
    if (knee <= 0.0 || static_cast<double>(step) >= knee) return end_value;
    const double f = static_cast<double>(step) / knee;
    return start_value + f * (end_value - start_value);
  }
};

}  // namespace macs::nn
