#include "macs/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace macs::nn {

double apply_activation(Activation a, double pre) {
  switch (a) {
    case Activation::Identity: return pre;
    case Activation::ReLU: return pre > 0.0 ? pre : 0.0;
    case Activation::Tanh: return std::tanh(pre);
  }
  return pre;
}

double activation_grad(Activation a, double pre) {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::ReLU: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

void dense_forward(const DenseParams& p, Activation act, const double* x,
                   double* pre, double* y) {
  const int in = p.in_dim();
  const int out = p.out_dim();
  for (int o = 0; o < out; ++o) {
    const double* wrow = p.W.row(o);
    double acc = p.b(o);
    for (int i = 0; i < in; ++i) acc += wrow[i] * x[i];
    pre[o] = acc;
    y[o] = apply_activation(act, acc);
  }
}

void dense_backward(const DenseParams& p, Activation act, const double* x,
                    const double* pre, const double* dy, double* dpre,
                    double* dx_acc, DenseParams& g) {
  const int in = p.in_dim();
  const int out = p.out_dim();
  for (int o = 0; o < out; ++o) dpre[o] = dy[o] * activation_grad(act, pre[o]);
  for (int o = 0; o < out; ++o) {
    const double d = dpre[o];
    double* gw = g.W.row(o);
    for (int i = 0; i < in; ++i) gw[i] += d * x[i];
    g.b(o) += d;
  }
  if (dx_acc) {
    for (int o = 0; o < out; ++o) {
      const double d = dpre[o];
      const double* wrow = p.W.row(o);
      for (int i = 0; i < in; ++i) dx_acc[i] += d * wrow[i];
    }
  }
}

void embedding_forward(const EmbeddingParams& p, int id, double* out) {
  if (id < 0 || id >= p.vocab())
    throw std::out_of_range("embedding_forward: id " + std::to_string(id) +
                            " outside vocab " + std::to_string(p.vocab()));
  const double* row = p.table.row(id);
  for (int i = 0; i < p.dim(); ++i) out[i] = row[i];
}

void embedding_backward(EmbeddingParams& g, int id, const double* dout) {
  double* row = g.table.row(id);
  for (int i = 0; i < g.dim(); ++i) row[i] += dout[i];
}

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

void gru_step(const GruParams& p, const double* x, const double* h,
              double* h_out, GruCache* cache) {
  const int in = p.in_dim();
  const int hid = p.hidden_dim();
  std::vector<double> r(hid), z(hid), n(hid), un_h(hid), tmp(hid);

  auto affine = [&](const DenseParams& wi, const DenseParams& wh, std::vector<double>& out) {
    for (int o = 0; o < hid; ++o) {
      const double* wir = wi.W.row(o);
      const double* whr = wh.W.row(o);
      double acc = wi.b(o) + wh.b(o);
      for (int i = 0; i < in; ++i) acc += wir[i] * x[i];
      for (int i = 0; i < hid; ++i) acc += whr[i] * h[i];
      out[o] = acc;
    }
  };

  affine(p.wr, p.ur, r);
  affine(p.wz, p.uz, z);
  for (int o = 0; o < hid; ++o) {
    r[o] = sigmoid(r[o]);
    z[o] = sigmoid(z[o]);
  }
  // un_h = Un h + bn, kept pre-gate for backward
  for (int o = 0; o < hid; ++o) {
    const double* whr = p.un.W.row(o);
    double acc = p.un.b(o);
    for (int i = 0; i < hid; ++i) acc += whr[i] * h[i];
    un_h[o] = acc;
  }
  for (int o = 0; o < hid; ++o) {
    const double* wir = p.wn.W.row(o);
    double acc = p.wn.b(o);
    for (int i = 0; i < in; ++i) acc += wir[i] * x[i];
    n[o] = std::tanh(acc + r[o] * un_h[o]);
  }
  for (int o = 0; o < hid; ++o) h_out[o] = (1.0 - z[o]) * n[o] + z[o] * h[o];

  if (cache) {
    cache->x.assign(x, x + in);
    cache->h.assign(h, h + hid);
    cache->r = std::move(r);
    cache->z = std::move(z);
    cache->n = std::move(n);
    cache->un_h = std::move(un_h);
  }
}

void gru_backward(const GruParams& p, const GruCache& c, const double* dh_out,
                  double* dx_acc, double* dh_acc, GruParams& g) {
  const int in = p.in_dim();
  const int hid = p.hidden_dim();
  std::vector<double> dn(hid), dz(hid), dr(hid), dn_pre(hid), dz_pre(hid), dr_pre(hid);

  for (int o = 0; o < hid; ++o) {
    dn[o] = dh_out[o] * (1.0 - c.z[o]);
    dz[o] = dh_out[o] * (c.h[o] - c.n[o]);
    dn_pre[o] = dn[o] * (1.0 - c.n[o] * c.n[o]);   // through tanh
    dr[o] = dn_pre[o] * c.un_h[o];
    dz_pre[o] = dz[o] * c.z[o] * (1.0 - c.z[o]);   // through sigmoid
    dr_pre[o] = dr[o] * c.r[o] * (1.0 - c.r[o]);
  }

  auto accumulate = [&](const DenseParams& wi, const DenseParams& wh,
                        DenseParams& gwi, DenseParams& gwh,
                        const std::vector<double>& dpre, bool add_bias_to_both) {
    for (int o = 0; o < hid; ++o) {
      const double d = dpre[o];
      double* gwir = gwi.W.row(o);
      double* gwhr = gwh.W.row(o);
      for (int i = 0; i < in; ++i) gwir[i] += d * c.x[i];
      for (int i = 0; i < hid; ++i) gwhr[i] += d * c.h[i];
      gwi.b(o) += d;
      if (add_bias_to_both) gwh.b(o) += d;
      if (dx_acc) {
        const double* wir = wi.W.row(o);
        for (int i = 0; i < in; ++i) dx_acc[i] += d * wir[i];
      }
      if (dh_acc) {
        const double* whr = wh.W.row(o);
        for (int i = 0; i < hid; ++i) dh_acc[i] += d * whr[i];
      }
    }
  };

  accumulate(p.wr, p.ur, g.wr, g.ur, dr_pre, true);
  accumulate(p.wz, p.uz, g.wz, g.uz, dz_pre, true);

  // Candidate path: x goes straight in, h goes through r * (Un h + bn).
  for (int o = 0; o < hid; ++o) {
    const double d = dn_pre[o];
    double* gwir = g.wn.W.row(o);
    for (int i = 0; i < in; ++i) gwir[i] += d * c.x[i];
    g.wn.b(o) += d;
    if (dx_acc) {
      const double* wir = p.wn.W.row(o);
      for (int i = 0; i < in; ++i) dx_acc[i] += d * wir[i];
    }
    const double dun = d * c.r[o];  // into Un h + bn
    double* gwhr = g.un.W.row(o);
    for (int i = 0; i < hid; ++i) gwhr[i] += dun * c.h[i];
    g.un.b(o) += dun;
    if (dh_acc) {
      const double* whr = p.un.W.row(o);
      for (int i = 0; i < hid; ++i) dh_acc[i] += dun * whr[i];
    }
  }

  // Direct carry h' = ... + z * h.
  if (dh_acc)
    for (int o = 0; o < hid; ++o) dh_acc[o] += dh_out[o] * c.z[o];
}

void dropout_forward(double rate, bool training, Rng& rng, double* x, int n,
                     DropoutMask* mask) {
  if (!training || rate <= 0.0) {
    if (mask) mask->scale.assign(static_cast<std::size_t>(n), 1.0);
    return;
  }
  const double keep = 1.0 - rate;
  if (mask) mask->scale.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s = rng.uniform() < keep ? 1.0 / keep : 0.0;
    x[i] *= s;
    if (mask) mask->scale[static_cast<std::size_t>(i)] = s;
  }
}

void dropout_backward(const DropoutMask& mask, double* dx, int n) {
  for (int i = 0; i < n; ++i) dx[i] *= mask.scale[static_cast<std::size_t>(i)];
}

double weighted_mse(const std::vector<double>& pred, const std::vector<double>& target,
                    const std::vector<double>& weights, std::vector<double>* dpred) {
  const std::size_t n = pred.size();
  if (n == 0) throw std::invalid_argument("weighted_mse: empty batch");
  if (target.size() != n || weights.size() != n)
    throw std::invalid_argument("weighted_mse: size mismatch");
  if (dpred) dpred->assign(n, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = pred[i] - target[i];
    loss += weights[i] * e * e;
    if (dpred) (*dpred)[i] = 2.0 * weights[i] * e / static_cast<double>(n);
  }
  return loss / static_cast<double>(n);
}

void softmax(const double* logits, int n, double* probs) {
  double mx = logits[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (int i = 0; i < n; ++i) probs[i] /= sum;
}

double weighted_cross_entropy(const double* logits, int n_classes, int label,
                              const double* class_weights, double* dlogits) {
  if (n_classes <= 0) throw std::invalid_argument("weighted_cross_entropy: empty batch");
  if (label < 0 || label >= n_classes)
    throw std::invalid_argument("weighted_cross_entropy: label out of range");
  std::vector<double> probs(static_cast<std::size_t>(n_classes));
  softmax(logits, n_classes, probs.data());
  const double alpha = class_weights ? class_weights[label] : 1.0;
  const double loss = -alpha * std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-300));
  if (dlogits) {
    for (int i = 0; i < n_classes; ++i)
      dlogits[i] = alpha * (probs[static_cast<std::size_t>(i)] - (i == label ? 1.0 : 0.0));
  }
  return loss;
}

void Adam::apply(std::vector<NamedTensorRef>& weights, std::vector<NamedTensorRef>& grads,
                 double lr) {
  if (weights.size() != m_.size() || grads.size() != m_.size())
    throw std::invalid_argument("Adam: parameter set changed since construction");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < weights.size(); ++k) {
    Tensor& w = *weights[k].tensor;
    Tensor& gt = *grads[k].tensor;
    check_same_shape(w, gt, "Adam(" + names_[k] + ")");
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < w.numel(); ++i) {
      double g = gt.data[i];
      if (!std::isfinite(g))
        throw std::runtime_error("Adam: non-finite gradient in " + names_[k]);
      if (!cfg_.decoupled) g += cfg_.weight_decay * w.data[i];
      m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g;
      v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      w.data[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      if (cfg_.decoupled) w.data[i] -= lr * cfg_.weight_decay * w.data[i];
    }
  }
}

}  // namespace macs::nn
