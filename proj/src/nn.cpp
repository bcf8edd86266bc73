#include "kusuri/nn.hpp"

#include <algorithm>
#include <string>

namespace kusuri::nn {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(std::string("shape mismatch: ") + what);
}

Vec one_minus_sq(const Vec& t) { return (1.0 - t.array().square()).matrix(); }

Vec sig_deriv(const Vec& s) { return (s.array() * (1.0 - s.array())).matrix(); }

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec sigmoid(const Vec& x) { return x.unaryExpr([](double v) { return sigmoid(v); }); }

Vec tanh(const Vec& x) { return x.array().tanh().matrix(); }

Vec softmax(const Vec& x) {
  if (x.size() == 0) return x;
  const double m = x.maxCoeff();
  Vec e = (x.array() - m).exp().matrix();
  return e / e.sum();
}

bool all_finite(const Vec& v) { return v.allFinite(); }

void check_finite(const Vec& v, std::string_view layer) {
  if (!v.allFinite()) throw NumericError(std::string(layer));
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_name(std::string_view name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw Error("unknown activation '" + std::string(name) + "'");
}

GruParams GruParams::zeros(Eigen::Index input, Eigen::Index hidden) {
  GruParams p;
  for (Mat* m : {&p.W_z, &p.W_r, &p.W_h}) *m = Mat::Zero(hidden, input);
  for (Mat* m : {&p.U_z, &p.U_r, &p.U_h}) *m = Mat::Zero(hidden, hidden);
  for (Vec* b : {&p.b_z, &p.b_r, &p.b_h}) *b = Vec::Zero(hidden);
  return p;
}

LstmParams LstmParams::zeros(Eigen::Index input, Eigen::Index hidden) {
  LstmParams p;
  for (Mat* m : {&p.W_i, &p.W_f, &p.W_o, &p.W_g}) *m = Mat::Zero(hidden, input);
  for (Mat* m : {&p.U_i, &p.U_f, &p.U_o, &p.U_g}) *m = Mat::Zero(hidden, hidden);
  for (Vec* b : {&p.b_i, &p.b_f, &p.b_o, &p.b_g}) *b = Vec::Zero(hidden);
  return p;
}

AttentionParams AttentionParams::zeros(Eigen::Index state, Eigen::Index attention) {
  return {Mat::Zero(attention, state), Vec::Zero(attention), Vec::Zero(attention)};
}

DenseParams DenseParams::zeros(Eigen::Index in, Eigen::Index out, Activation act) {
  return {Mat::Zero(out, in), Vec::Zero(out), act};
}

// ---------------------------------------------------------------- GRU

Vec gru_step(const GruParams& p, const Vec& x, const Vec& h, GruStepCache* cache) {
  require(x.size() == p.input_size(), "gru input");
  require(h.size() == p.hidden_size(), "gru state");
  Vec z = sigmoid(p.W_z * x + p.U_z * h + p.b_z);
  Vec r = sigmoid(p.W_r * x + p.U_r * h + p.b_r);
  Vec rh = r.cwiseProduct(h);
  Vec h_tilde = tanh(p.W_h * x + p.U_h * rh + p.b_h);
  Vec out = (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(h_tilde);
  if (cache) *cache = {x, h, std::move(z), std::move(r), std::move(h_tilde)};
  return out;
}

Vec gru_step_backward(const GruParams& p, const GruStepCache& c, const Vec& dh, GruParams& g,
                      Vec& dx) {
  const Vec& h = c.h_prev;
  Vec dz = dh.cwiseProduct(c.h_tilde - h);
  Vec dht = dh.cwiseProduct(c.z);
  Vec dh_prev = dh.cwiseProduct((1.0 - c.z.array()).matrix());

  Vec da_h = dht.cwiseProduct(one_minus_sq(c.h_tilde));
  Vec rh = c.r.cwiseProduct(h);
  g.W_h.noalias() += da_h * c.x.transpose();
  g.U_h.noalias() += da_h * rh.transpose();
  g.b_h += da_h;
  Vec drh = p.U_h.transpose() * da_h;
  Vec dr = drh.cwiseProduct(h);
  dh_prev += drh.cwiseProduct(c.r);

  Vec da_z = dz.cwiseProduct(sig_deriv(c.z));
  Vec da_r = dr.cwiseProduct(sig_deriv(c.r));
  g.W_z.noalias() += da_z * c.x.transpose();
  g.U_z.noalias() += da_z * h.transpose();
  g.b_z += da_z;
  g.W_r.noalias() += da_r * c.x.transpose();
  g.U_r.noalias() += da_r * h.transpose();
  g.b_r += da_r;

  dx = p.W_h.transpose() * da_h + p.W_z.transpose() * da_z + p.W_r.transpose() * da_r;
  dh_prev += p.U_z.transpose() * da_z + p.U_r.transpose() * da_r;
  return dh_prev;
}

// ---------------------------------------------------------------- LSTM

LstmState lstm_step(const LstmParams& p, const Vec& x, const LstmState& s, LstmStepCache* cache) {
  require(x.size() == p.input_size(), "lstm input");
  require(s.h.size() == p.hidden_size() && s.c.size() == p.hidden_size(), "lstm state");
  Vec i = sigmoid(p.W_i * x + p.U_i * s.h + p.b_i);
  Vec f = sigmoid(p.W_f * x + p.U_f * s.h + p.b_f);
  Vec o = sigmoid(p.W_o * x + p.U_o * s.h + p.b_o);
  Vec g = tanh(p.W_g * x + p.U_g * s.h + p.b_g);
  Vec c = f.cwiseProduct(s.c) + i.cwiseProduct(g);
  Vec tc = tanh(c);
  LstmState out{o.cwiseProduct(tc), c};
  if (cache) *cache = {x, s.h, s.c, std::move(i), std::move(f), std::move(o), std::move(g), std::move(tc)};
  return out;
}

LstmState lstm_step_backward(const LstmParams& p, const LstmStepCache& c, const LstmState& d,
                             LstmParams& g, Vec& dx) {
  Vec d_o = d.h.cwiseProduct(c.tanh_c);
  Vec dc = d.c + d.h.cwiseProduct(c.o).cwiseProduct(one_minus_sq(c.tanh_c));
  Vec d_f = dc.cwiseProduct(c.c_prev);
  Vec d_i = dc.cwiseProduct(c.g);
  Vec d_g = dc.cwiseProduct(c.i);
  LstmState prev;
  prev.c = dc.cwiseProduct(c.f);

  Vec a_i = d_i.cwiseProduct(sig_deriv(c.i));
  Vec a_f = d_f.cwiseProduct(sig_deriv(c.f));
  Vec a_o = d_o.cwiseProduct(sig_deriv(c.o));
  Vec a_g = d_g.cwiseProduct(one_minus_sq(c.g));

  g.W_i.noalias() += a_i * c.x.transpose();
  g.W_f.noalias() += a_f * c.x.transpose();
  g.W_o.noalias() += a_o * c.x.transpose();
  g.W_g.noalias() += a_g * c.x.transpose();
  g.U_i.noalias() += a_i * c.h_prev.transpose();
  g.U_f.noalias() += a_f * c.h_prev.transpose();
  g.U_o.noalias() += a_o * c.h_prev.transpose();
  g.U_g.noalias() += a_g * c.h_prev.transpose();
  g.b_i += a_i;
  g.b_f += a_f;
  g.b_o += a_o;
  g.b_g += a_g;

  dx = p.W_i.transpose() * a_i + p.W_f.transpose() * a_f + p.W_o.transpose() * a_o +
       p.W_g.transpose() * a_g;
  prev.h = p.U_i.transpose() * a_i + p.U_f.transpose() * a_f + p.U_o.transpose() * a_o +
           p.U_g.transpose() * a_g;
  return prev;
}

// ----------------------------------------------------------- attention

AttentionOutput attention(const AttentionParams& p, const std::vector<Vec>& states,
                          AttentionCache* cache) {
  if (states.empty()) throw Error("attention: empty sequence");
  const std::size_t n = states.size();
  std::vector<Vec> u(n);
  Vec e(static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < n; ++t) {
    require(states[t].size() == p.W.cols(), "attention state");
    u[t] = tanh(p.W * states[t] + p.b);
    e(static_cast<Eigen::Index>(t)) = p.v.dot(u[t]);
  }
  AttentionOutput out;
  out.alpha = softmax(e);
  out.context = Vec::Zero(p.W.cols());
  for (std::size_t t = 0; t < n; ++t) out.context += out.alpha(static_cast<Eigen::Index>(t)) * states[t];
  if (cache) *cache = {states, std::move(u), out.alpha};
  return out;
}

std::vector<Vec> attention_backward(const AttentionParams& p, const AttentionCache& c,
                                    const Vec& dcontext, AttentionParams& g) {
  const std::size_t n = c.states.size();
  std::vector<Vec> ds(n);
  Vec dalpha(static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < n; ++t) {
    const auto ti = static_cast<Eigen::Index>(t);
    dalpha(ti) = dcontext.dot(c.states[t]);
    ds[t] = c.alpha(ti) * dcontext;
  }
  const double mean = c.alpha.dot(dalpha);
  for (std::size_t t = 0; t < n; ++t) {
    const auto ti = static_cast<Eigen::Index>(t);
    const double de = c.alpha(ti) * (dalpha(ti) - mean);
    g.v += de * c.u[t];
    Vec da = (de * p.v).cwiseProduct(one_minus_sq(c.u[t]));
    g.W.noalias() += da * c.states[t].transpose();
    g.b += da;
    ds[t].noalias() += p.W.transpose() * da;
  }
  return ds;
}

// --------------------------------------------------------------- dense

Vec dense(const DenseParams& p, const Vec& x, DenseCache* cache) {
  require(x.size() == p.W.cols(), "dense input");
  Vec a = p.W * x + p.b;
  switch (p.activation) {
    case Activation::kIdentity: break;
    case Activation::kTanh: a = tanh(a); break;
    case Activation::kSigmoid: a = sigmoid(a); break;
  }
  if (cache) *cache = {x, a};
  return a;
}

Vec dense_backward(const DenseParams& p, const DenseCache& c, const Vec& dy, DenseParams& g) {
  Vec da;
  switch (p.activation) {
    case Activation::kIdentity: da = dy; break;
    case Activation::kTanh: da = dy.cwiseProduct(one_minus_sq(c.y)); break;
    case Activation::kSigmoid: da = dy.cwiseProduct(sig_deriv(c.y)); break;
  }
  g.W.noalias() += da * c.x.transpose();
  g.b += da;
  return p.W.transpose() * da;
}

// ---------------------------------------------------------------- loss

double bce_loss(double p, int y) {
  const double q = std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  return y ? -std::log(q) : -std::log(1.0 - q);
}

double bce_grad(double p, int y) {
  if (p < kProbabilityEpsilon || p > 1.0 - kProbabilityEpsilon) return 0.0;
  return y ? -1.0 / p : 1.0 / (1.0 - p);
}

}  // namespace kusuri::nn
