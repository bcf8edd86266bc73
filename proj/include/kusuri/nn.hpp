#pragma once

// Double-precision building blocks with hand-written reverse-mode gradients.
//
// Every parameter struct exposes for_each(f), calling f(name, tensor) for
// each Eigen array it owns, in a fixed order. Gradients share the parameter
// type, so generic code (initialization, Adam, finite differences,
// checkpoints) works over any model built from these pieces.

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "kusuri/error.hpp"
#include "kusuri/random.hpp"

namespace kusuri::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

double sigmoid(double x);
Vec sigmoid(const Vec& x);
Vec tanh(const Vec& x);
// Max-subtracted; sums to 1 within rounding.
Vec softmax(const Vec& x);

bool all_finite(const Vec& v);
void check_finite(const Vec& v, std::string_view layer);

enum class Activation { kIdentity, kTanh, kSigmoid };

std::string_view activation_name(Activation a);
Activation activation_from_name(std::string_view name);

struct GruParams {
  Mat W_z, W_r, W_h;  // hidden x input
  Mat U_z, U_r, U_h;  // hidden x hidden
  Vec b_z, b_r, b_h;

  static GruParams zeros(Eigen::Index input, Eigen::Index hidden);
  Eigen::Index input_size() const { return W_z.cols(); }
  Eigen::Index hidden_size() const { return W_z.rows(); }

  template <class F>
  void for_each(F&& f) {
    f("W_z", W_z); f("W_r", W_r); f("W_h", W_h);
    f("U_z", U_z); f("U_r", U_r); f("U_h", U_h);
    f("b_z", b_z); f("b_r", b_r); f("b_h", b_h);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<GruParams*>(this)->for_each([&](const std::string& n, auto& t) { f(n, std::as_const(t)); });
  }
};

struct LstmParams {
  Mat W_i, W_f, W_o, W_g;  // hidden x input
  Mat U_i, U_f, U_o, U_g;  // hidden x hidden
  Vec b_i, b_f, b_o, b_g;

  static LstmParams zeros(Eigen::Index input, Eigen::Index hidden);
  Eigen::Index input_size() const { return W_i.cols(); }
  Eigen::Index hidden_size() const { return W_i.rows(); }

  template <class F>
  void for_each(F&& f) {
    f("W_i", W_i); f("W_f", W_f); f("W_o", W_o); f("W_g", W_g);
    f("U_i", U_i); f("U_f", U_f); f("U_o", U_o); f("U_g", U_g);
    f("b_i", b_i); f("b_f", b_f); f("b_o", b_o); f("b_g", b_g);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<LstmParams*>(this)->for_each([&](const std::string& n, auto& t) { f(n, std::as_const(t)); });
  }
};

// e_t = v . tanh(W s_t + b); alpha = softmax(e); context = sum_t alpha_t s_t
struct AttentionParams {
  Mat W;  // attention x state
  Vec b;
  Vec v;

  static AttentionParams zeros(Eigen::Index state, Eigen::Index attention);

  template <class F>
  void for_each(F&& f) {
    f("W", W); f("b", b); f("v", v);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<AttentionParams*>(this)->for_each([&](const std::string& n, auto& t) { f(n, std::as_const(t)); });
  }
};

struct DenseParams {
  Mat W;  // out x in
  Vec b;
  Activation activation = Activation::kIdentity;

  static DenseParams zeros(Eigen::Index in, Eigen::Index out, Activation act);

  template <class F>
  void for_each(F&& f) {
    f("W", W); f("b", b);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<DenseParams*>(this)->for_each([&](const std::string& n, auto& t) { f(n, std::as_const(t)); });
  }
};

// Applies f to every tensor of a nested member with a dotted name prefix.
template <class P, class F>
void for_each_prefixed(P& member, const std::string& prefix, F& f) {
  member.for_each([&](const std::string& name, auto& t) { f(prefix + "." + name, t); });
}

// ---------------------------------------------------------------- GRU

struct GruStepCache {
  Vec x, h_prev, z, r, h_tilde;
};

// z = s(W_z x + U_z h + b_z); r = s(W_r x + U_r h + b_r);
// h~ = tanh(W_h x + U_h (r*h) + b_h); h' = (1-z)*h + z*h~
Vec gru_step(const GruParams& p, const Vec& x, const Vec& h, GruStepCache* cache = nullptr);

// Accumulates parameter gradients into g, writes dx; returns dL/dh_prev.
Vec gru_step_backward(const GruParams& p, const GruStepCache& c, const Vec& dh, GruParams& g,
                      Vec& dx);

// ---------------------------------------------------------------- LSTM

struct LstmState {
  Vec h, c;
};

struct LstmStepCache {
  Vec x, h_prev, c_prev, i, f, o, g, tanh_c;
};

// i,f,o = s(W x + U h + b); g = tanh(W_g x + U_g h + b_g);
// c' = f*c + i*g; h' = o*tanh(c')
LstmState lstm_step(const LstmParams& p, const Vec& x, const LstmState& s,
                    LstmStepCache* cache = nullptr);

// Takes dL/dh' and dL/dc'; returns (dL/dh, dL/dc) for the previous state.
LstmState lstm_step_backward(const LstmParams& p, const LstmStepCache& c, const LstmState& d,
                             LstmParams& g, Vec& dx);

// ------------------------------------------------- recurrent sequences

struct GruCell {
  using Params = GruParams;
  using State = Vec;
  using Cache = GruStepCache;

  static State initial(const Params& p) { return Vec::Zero(p.hidden_size()); }
  static State step(const Params& p, const Vec& x, const State& s, Cache* c) {
    return gru_step(p, x, s, c);
  }
  static const Vec& hidden(const State& s) { return s; }
  static State zero_grad(const Params& p) { return initial(p); }
  static void add_hidden_grad(State& d, const Vec& dh) { d += dh; }
  static State step_backward(const Params& p, const Cache& c, const State& d, Params& g, Vec& dx) {
    return gru_step_backward(p, c, d, g, dx);
  }
};

struct LstmCell {
  using Params = LstmParams;
  using State = LstmState;
  using Cache = LstmStepCache;

  static State initial(const Params& p) {
    return {Vec::Zero(p.hidden_size()), Vec::Zero(p.hidden_size())};
  }
  static State step(const Params& p, const Vec& x, const State& s, Cache* c) {
    return lstm_step(p, x, s, c);
  }
  static const Vec& hidden(const State& s) { return s.h; }
  static State zero_grad(const Params& p) { return initial(p); }
  static void add_hidden_grad(State& d, const Vec& dh) { d.h += dh; }
  static State step_backward(const Params& p, const Cache& c, const State& d, Params& g, Vec& dx) {
    return lstm_step_backward(p, c, d, g, dx);
  }
};

template <class Cell>
struct RunCache {
  std::vector<typename Cell::Cache> steps;  // in processing order
};

// Hidden states aligned with input positions. With reverse=true the inputs
// are consumed from last to first, so output t summarizes inputs t..T.
template <class Cell>
std::vector<Vec> run_sequence(const typename Cell::Params& p, const std::vector<Vec>& xs,
                              bool reverse, RunCache<Cell>* cache = nullptr) {
  const std::size_t n = xs.size();
  std::vector<Vec> out(n);
  if (cache) cache->steps.assign(n, {});
  auto state = Cell::initial(p);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t t = reverse ? n - 1 - k : k;
    state = Cell::step(p, xs[t], state, cache ? &cache->steps[k] : nullptr);
    out[t] = Cell::hidden(state);
  }
  return out;
}

// dhs aligned with positions; accumulates into g and returns dxs.
template <class Cell>
std::vector<Vec> run_sequence_backward(const typename Cell::Params& p, const RunCache<Cell>& cache,
                                       const std::vector<Vec>& dhs, bool reverse,
                                       typename Cell::Params& g) {
  const std::size_t n = dhs.size();
  std::vector<Vec> dxs(n);
  auto carry = Cell::zero_grad(p);
  for (std::size_t k = n; k-- > 0;) {
    const std::size_t t = reverse ? n - 1 - k : k;
    Cell::add_hidden_grad(carry, dhs[t]);
    carry = Cell::step_backward(p, cache.steps[k], carry, g, dxs[t]);
  }
  return dxs;
}

template <class Cell>
struct BiCache {
  RunCache<Cell> fwd, bwd;
};

// Output t = concat(forward state after inputs 1..t, backward state after
// inputs T..t). Empty input is an error.
template <class Cell>
std::vector<Vec> bidirectional_run(const typename Cell::Params& fwd, const typename Cell::Params& bwd,
                                   const std::vector<Vec>& xs, BiCache<Cell>* cache = nullptr) {
  if (xs.empty()) throw Error("bidirectional_run: empty sequence");
  auto f = run_sequence<Cell>(fwd, xs, false, cache ? &cache->fwd : nullptr);
  auto b = run_sequence<Cell>(bwd, xs, true, cache ? &cache->bwd : nullptr);
  const Eigen::Index hf = fwd.hidden_size();
  const Eigen::Index hb = bwd.hidden_size();
  std::vector<Vec> out(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) {
    out[t].resize(hf + hb);
    out[t] << f[t], b[t];
  }
  return out;
}

template <class Cell>
std::vector<Vec> bidirectional_backward(const typename Cell::Params& fwd,
                                        const typename Cell::Params& bwd, const BiCache<Cell>& cache,
                                        const std::vector<Vec>& douts, typename Cell::Params& gfwd,
                                        typename Cell::Params& gbwd) {
  const Eigen::Index hf = fwd.hidden_size();
  const Eigen::Index hb = bwd.hidden_size();
  std::vector<Vec> df(douts.size()), db(douts.size());
  for (std::size_t t = 0; t < douts.size(); ++t) {
    df[t] = douts[t].head(hf);
    db[t] = douts[t].tail(hb);
  }
  auto dx = run_sequence_backward<Cell>(fwd, cache.fwd, df, false, gfwd);
  auto dxb = run_sequence_backward<Cell>(bwd, cache.bwd, db, true, gbwd);
  for (std::size_t t = 0; t < dx.size(); ++t) dx[t] += dxb[t];
  return dx;
}

// ----------------------------------------------------------- attention

struct AttentionCache {
  std::vector<Vec> states;
  std::vector<Vec> u;  // tanh(W s_t + b)
  Vec alpha;
};

struct AttentionOutput {
  Vec alpha;
  Vec context;
};

AttentionOutput attention(const AttentionParams& p, const std::vector<Vec>& states,
                          AttentionCache* cache = nullptr);

// Returns dL/ds_t for each state.
std::vector<Vec> attention_backward(const AttentionParams& p, const AttentionCache& c,
                                    const Vec& dcontext, AttentionParams& g);

// --------------------------------------------------------------- dense

struct DenseCache {
  Vec x, y;
};

Vec dense(const DenseParams& p, const Vec& x, DenseCache* cache = nullptr);
// From dL/dy; returns dL/dx.
Vec dense_backward(const DenseParams& p, const DenseCache& c, const Vec& dy, DenseParams& g);

// ---------------------------------------------------------------- loss

inline constexpr double kProbabilityEpsilon = 1e-12;

double bce_loss(double p, int y);
// dL/dp at the clamped probability; zero where the clamp is active.
double bce_grad(double p, int y);

// ------------------------------------------------------ generic helpers

template <class P>
P zeros_like(const P& p) {
  P z = p;
  z.for_each([](const std::string&, auto& t) { t.setZero(); });
  return z;
}

template <class P>
std::size_t parameter_count(const P& p) {
  std::size_t n = 0;
  p.for_each([&](const std::string&, const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

struct TensorRef {
  std::string name;
  double* data;
  Eigen::Index size;
};

template <class P>
std::vector<TensorRef> tensors(P& p) {
  std::vector<TensorRef> out;
  p.for_each([&](const std::string& name, auto& t) { out.push_back({name, t.data(), t.size()}); });
  return out;
}

template <class P>
void add_scaled(P& acc, const P& g, double scale) {
  auto a = tensors(acc);
  auto b = tensors(const_cast<P&>(g));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (Eigen::Index k = 0; k < a[i].size; ++k) a[i].data[k] += scale * b[i].data[k];
  }
}

// Matrices: uniform(-r, r), r = sqrt(6 / (fan_in + fan_out)). Attention
// vectors named "v" use fan_in = size, fan_out = 1. Other vectors (biases)
// are zero.
template <class P>
void glorot_init(P& p, Rng& rng) {
  p.for_each([&](const std::string& name, auto& t) {
    using T = std::decay_t<decltype(t)>;
    if constexpr (std::is_same_v<T, Mat>) {
      const double r = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
      for (Eigen::Index j = 0; j < t.cols(); ++j)
        for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) = rng.uniform(-r, r);
    } else {
      const bool is_v = name == "v" || (name.size() > 2 && name.substr(name.size() - 2) == ".v");
      if (is_v) {
        const double r = std::sqrt(6.0 / static_cast<double>(t.size() + 1));
        for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = rng.uniform(-r, r);
      } else {
        t.setZero();
      }
    }
  });
}

// Central differences of `loss` with respect to every scalar parameter.
template <class P>
P finite_diff_gradients(const std::function<double(const P&)>& loss, const P& params,
                        double epsilon = 1e-5) {
  P work = params;
  P grads = zeros_like(params);
  auto w = tensors(work);
  auto g = tensors(grads);
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (Eigen::Index k = 0; k < w[i].size; ++k) {
      const double orig = w[i].data[k];
      w[i].data[k] = orig + epsilon;
      const double up = loss(work);
      w[i].data[k] = orig - epsilon;
      const double down = loss(work);
      w[i].data[k] = orig;
      g[i].data[k] = (up - down) / (2.0 * epsilon);
    }
  }
  return grads;
}

inline constexpr double kRelativeErrorFloor = 1e-6;

struct GradientComparison {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t compared = 0;
};

// |a - b| / max(|a|, |b|, kRelativeErrorFloor), maximized over scalars.
template <class P>
GradientComparison compare_gradients(const P& analytic, const P& numeric) {
  GradientComparison out;
  auto a = tensors(const_cast<P&>(analytic));
  auto b = tensors(const_cast<P&>(numeric));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (Eigen::Index k = 0; k < a[i].size; ++k) {
      const double x = a[i].data[k], y = b[i].data[k];
      const double denom = std::max({std::abs(x), std::abs(y), kRelativeErrorFloor});
      const double rel = std::abs(x - y) / denom;
      ++out.compared;
      if (rel > out.max_relative_error) {
        out.max_relative_error = rel;
        out.worst_parameter = a[i].name + "[" + std::to_string(k) + "]";
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- Adam

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class P>
struct AdamState {
  P m;
  P v;
  long step = 0;

  static AdamState init(const P& params) { return {zeros_like(params), zeros_like(params), 0}; }
};

// Bias-corrected Adam update.
template <class P>
void adam_step(P& params, const P& grads, AdamState<P>& state, const AdamConfig& cfg = {}) {
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  auto p = tensors(params);
  auto g = tensors(const_cast<P&>(grads));
  auto m = tensors(state.m);
  auto v = tensors(state.v);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (Eigen::Index k = 0; k < p[i].size; ++k) {
      const double gk = g[i].data[k];
      double& mk = m[i].data[k];
      double& vk = v[i].data[k];
      mk = cfg.beta1 * mk + (1.0 - cfg.beta1) * gk;
      vk = cfg.beta2 * vk + (1.0 - cfg.beta2) * gk * gk;
      const double mhat = mk / c1;
      const double vhat = vk / c2;
      p[i].data[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
}

}  // namespace kusuri::nn
