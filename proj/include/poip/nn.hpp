#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "poip/hypergraph.hpp"

namespace poip {

/// Row-major dense matrix of doubles; vectors are 1xN.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

  void resize(int r, int c) {
    rows = r;
    cols = c;
    a.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0);
  }
  void zero() { std::fill(a.begin(), a.end(), 0.0); }
  double* row(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return a.data() + static_cast<std::size_t>(r) * cols; }
  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)]; }
};

struct ModelConfig {
  int embed_dim = 16;
  int hidden_dim = 64;
  int hyper_iters = 6;  // Eq.5/6 repetitions, weights shared
  int vc_iters = 1;
  double leaky_slope = 0.1;
  bool enable_hyper_conv = true;
  bool enable_vc_conv = true;
  std::uint64_t seed = 0;
};

/// Two-layer perceptron: linear -> LeakyReLU -> linear.
struct Mlp {
  Mat w1, b1, w2, b2;
};

struct ParamSet {
  Mlp embed_var, embed_cons, embed_member, embed_edge;
  Mlp phi_h;        // hyperedge-to-variable update
  Mlp phi_c, f_c;   // constraint-side edge message and update
  Mlp phi_v, f_v;   // variable-side edge message and update
  Mlp out;
};

template <typename PS, typename F>
void for_each_mlp(PS& ps, F&& f) {
  f("embed_var", ps.embed_var);
  f("embed_cons", ps.embed_cons);
  f("embed_member", ps.embed_member);
  f("embed_edge", ps.embed_edge);
  f("phi_h", ps.phi_h);
  f("phi_c", ps.phi_c);
  f("phi_v", ps.phi_v);
  f("f_c", ps.f_c);
  f("f_v", ps.f_v);
  f("out", ps.out);
}

template <typename PS, typename F>
void for_each_tensor(PS& ps, F&& f) {
  for_each_mlp(ps, [&](const char* name, auto& m) {
    f(std::string(name) + ".w1", m.w1);
    f(std::string(name) + ".b1", m.b1);
    f(std::string(name) + ".w2", m.w2);
    f(std::string(name) + ".b2", m.b2);
  });
}

struct ModelState {
  ModelConfig cfg;
  ParamSet params;
  ParamSet adam_m, adam_v;
  std::uint64_t step = 0;
};

/// Zero-filled parameter tensors shaped for the config (also the gradient
/// accumulator layout).
ParamSet make_param_set(const ModelConfig& cfg);
void zero_params(ParamSet& ps);

/// Xavier-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases, drawn
/// from per-tensor streams of the config seed.
ModelState init_model(const ModelConfig& cfg);

struct EmbeddingState {
  Mat h_var;     // n x d
  Mat h_cons;    // m x d
  Mat h_edge;    // n_h x d, produced by the first hyper conv step
  Mat h_member;  // s x d, fixed after embedding
  Mat h_vcedge;  // n_e x d, fixed after embedding
};

/// Embeds raw features (arcsinh-compressed elementwise) through the four
/// embedding MLPs. Hyperedge states start at zero.
EmbeddingState embed_raw(const Hypergraph& hg, const ModelState& st);

/// One shared-weight iteration: hyperedge states from member products, then
/// variable update through phi_h with residual. Aggregations reduce in
/// canonical value-sorted order.
void hyper_conv_step(const Hypergraph& hg, const ModelState& st, EmbeddingState& emb);

/// Constraint update (phi_c/f_c) followed by variable update (phi_v/f_v)
/// using the updated constraint states; residuals on both.
void vc_conv_step(const Hypergraph& hg, const ModelState& st, EmbeddingState& emb);

struct MlpTrace {
  Mat in, z, h, out;
};

/// Recorded activations of one forward pass (reused across calls to avoid
/// reallocation).
struct Tape {
  MlpTrace emb_var, emb_cons, emb_member, emb_edge;
  std::vector<Mat> e_stage;    // hyperedge states per hyper iteration
  std::vector<Mat> mean_msg;   // per-variable mean messages per iteration
  std::vector<MlpTrace> phi_h; // one per hyper iteration
  std::vector<Mat> x_stage;    // variable states: x[0] embedding ... x[L]
  struct VcTrace {
    Mat c_in, x_in;
    MlpTrace phi_c, f_c, phi_v, f_v;
    Mat c_out, x_out;
  };
  std::vector<VcTrace> vc;
  MlpTrace out;
  Mat logits;  // n x 1
};

/// Full pipeline producing one logit per variable. Requires at least one of
/// the conv stages enabled. Returns a view into tape.logits.
std::span<const double> forward(const Hypergraph& hg, const ModelState& st, Tape& tape);

/// Mean binary cross-entropy from logits, computed with the softplus
/// stabilization; exactly log(2) for zero logits.
double bce_loss(std::span<const double> logits, std::span<const double> labels);

/// Reverse pass for mean BCE over the recorded forward; accumulates
/// loss_scale-weighted gradients into grads (unused stages stay zero).
void backward(const Hypergraph& hg, const ModelState& st, const Tape& tape,
              std::span<const double> labels, double loss_scale, ParamSet& grads);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 64;
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;  // decoupled
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t shuffle_seed = 0;
};

/// One decoupled-weight-decay Adam update from accumulated gradients.
void adamw_step(ModelState& st, const ParamSet& grads, const TrainConfig& tc);

struct TrainSample {
  Hypergraph hg;
  std::vector<double> labels;  // one 0/1 label per variable
};

struct TrainResult {
  std::vector<double> loss_curve;  // per-epoch mean of per-instance losses
};

/// Mini-batch training: batches are whole instances, the batch loss is the
/// mean of per-instance mean BCE. Sample order reshuffles every epoch from
/// the shuffle seed.
TrainResult train(ModelState& st, std::span<const TrainSample> data, const TrainConfig& tc);

struct Prediction {
  std::vector<double> prob;
  std::vector<int> rounded;          // threshold 0.5, ties round to 1
  std::vector<double> uncertainty;   // min(p, 1-p)
};

Prediction predict(const Hypergraph& hg, const ModelState& st);
Prediction predict(const Instance& binarized, const ModelState& st);
/// All probabilities 0.5 (rounds to 1, uncertainty 0.5); the no-model baseline.
Prediction uniform_prediction(int n);

std::string checkpoint_to_json(const ModelState& st);
ModelState checkpoint_from_json(const std::string& text);
void save_checkpoint(const ModelState& st, const std::string& path);
ModelState load_checkpoint(const std::string& path);

}  // namespace poip
