#include "poip/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <utility>

#include "json.hpp"

#include "poip/common.hpp"
#include "poip/rng.hpp"

namespace poip {

namespace {

struct Shape {
  int rows = 0;
  int cols = 0;
};

std::vector<std::pair<std::string, Shape>> tensor_shapes(const ModelConfig& cfg) {
  const int d = cfg.embed_dim;
  const int h = cfg.hidden_dim;
  std::vector<std::pair<std::string, Shape>> shapes;
  auto mlp = [&](const std::string& name, int in, int out) {
    shapes.push_back({name + ".w1", {in, h}});
    shapes.push_back({name + ".b1", {1, h}});
    shapes.push_back({name + ".w2", {h, out}});
    shapes.push_back({name + ".b2", {1, out}});
  };
  mlp("embed_var", kVarFeatures, d);
  mlp("embed_cons", kConsFeatures, d);
  mlp("embed_member", kMemberFeatures, d);
  mlp("embed_edge", kEdgeFeatures, d);
  mlp("phi_h", 2 * d, d);
  mlp("phi_c", 3 * d, d);
  mlp("phi_v", 3 * d, d);
  mlp("f_c", 2 * d, d);
  mlp("f_v", 2 * d, d);
  mlp("out", d, 1);
  return shapes;
}

/// z = in*w1 + b1; h = leaky(z); out = h*w2 + b2. Zero inputs skip the
/// accumulation, which is bitwise equivalent.
void mlp_forward(const Mlp& m, double slope, MlpTrace& tr) {
  const int R = tr.in.rows;
  const int I = m.w1.rows;
  const int H = m.w1.cols;
  const int O = m.w2.cols;
  if (tr.in.cols != I) throw ValidationError("mlp input width mismatch");
  tr.z.resize(R, H);
  tr.h.resize(R, H);
  tr.out.resize(R, O);
  for (int r = 0; r < R; ++r) {
    const double* x = tr.in.row(r);
    double* z = tr.z.row(r);
    for (int j = 0; j < H; ++j) z[j] = m.b1.a[static_cast<std::size_t>(j)];
    for (int k = 0; k < I; ++k) {
      const double xk = x[k];
      if (xk == 0.0) continue;
      const double* w = m.w1.row(k);
      for (int j = 0; j < H; ++j) z[j] += xk * w[j];
    }
    double* h = tr.h.row(r);
    for (int j = 0; j < H; ++j) h[j] = z[j] > 0.0 ? z[j] : slope * z[j];
    double* o = tr.out.row(r);
    for (int j = 0; j < O; ++j) o[j] = m.b2.a[static_cast<std::size_t>(j)];
    for (int k = 0; k < H; ++k) {
      const double hk = h[k];
      if (hk == 0.0) continue;
      const double* w = m.w2.row(k);
      for (int j = 0; j < O; ++j) o[j] += hk * w[j];
    }
  }
}

/// Accumulates parameter gradients; if din is given it is overwritten with
/// the gradient w.r.t. tr.in.
void mlp_backward(const Mlp& m, double slope, const MlpTrace& tr, const Mat& dout,
                  Mlp& g, Mat* din) {
  const int R = tr.in.rows;
  const int I = m.w1.rows;
  const int H = m.w1.cols;
  const int O = m.w2.cols;
  std::vector<double> dz(static_cast<std::size_t>(H));
  if (din != nullptr) din->resize(R, I);
  for (int r = 0; r < R; ++r) {
    const double* dor = dout.row(r);
    const double* h = tr.h.row(r);
    for (int j = 0; j < O; ++j) g.b2.a[static_cast<std::size_t>(j)] += dor[j];
    for (int k = 0; k < H; ++k) {
      const double hk = h[k];
      if (hk != 0.0) {
        double* gw = g.w2.row(k);
        for (int j = 0; j < O; ++j) gw[j] += hk * dor[j];
      }
    }
    const double* z = tr.z.row(r);
    for (int k = 0; k < H; ++k) {
      const double* w = m.w2.row(k);
      double s = 0.0;
      for (int j = 0; j < O; ++j) s += w[j] * dor[j];
      dz[static_cast<std::size_t>(k)] = z[k] > 0.0 ? s : slope * s;
    }
    for (int k = 0; k < H; ++k) g.b1.a[static_cast<std::size_t>(k)] += dz[static_cast<std::size_t>(k)];
    const double* x = tr.in.row(r);
    for (int k = 0; k < I; ++k) {
      const double xk = x[k];
      if (xk != 0.0) {
        double* gw = g.w1.row(k);
        for (int j = 0; j < H; ++j) gw[j] += xk * dz[static_cast<std::size_t>(j)];
      }
    }
    if (din != nullptr) {
      double* dx = din->row(r);
      for (int k = 0; k < I; ++k) {
        const double* w = m.w1.row(k);
        double s = 0.0;
        for (int j = 0; j < H; ++j) s += w[j] * dz[static_cast<std::size_t>(j)];
        dx[k] = s;
      }
    }
  }
}

template <std::size_t K>
void compress_rows(const std::vector<std::array<double, K>>& src, Mat& dst) {
  dst.resize(static_cast<int>(src.size()), static_cast<int>(K));
  for (std::size_t r = 0; r < src.size(); ++r) {
    double* out = dst.row(static_cast<int>(r));
    for (std::size_t j = 0; j < K; ++j) out[j] = std::asinh(src[r][j]);
  }
}

void member_inputs(const Hypergraph& hg, Mat& dst) {
  dst.resize(static_cast<int>(hg.members.size()), kMemberFeatures);
  for (std::size_t i = 0; i < hg.members.size(); ++i) {
    double* out = dst.row(static_cast<int>(i));
    out[0] = std::asinh(hg.members[i].deg);
    out[1] = std::asinh(hg.members[i].coe);
  }
}

void edge_inputs(const Hypergraph& hg, Mat& dst) {
  dst.resize(static_cast<int>(hg.edges.size()), kEdgeFeatures);
  for (std::size_t i = 0; i < hg.edges.size(); ++i) {
    double* out = dst.row(static_cast<int>(i));
    out[0] = std::asinh(hg.edges[i].avg_coe);
    out[1] = std::asinh(hg.edges[i].avg_deg);
  }
}

void concat2(const Mat& a, const Mat& b, Mat& out) {
  out.resize(a.rows, a.cols + b.cols);
  for (int r = 0; r < a.rows; ++r) {
    double* o = out.row(r);
    std::copy(a.row(r), a.row(r) + a.cols, o);
    std::copy(b.row(r), b.row(r) + b.cols, o + a.cols);
  }
}

void add_rows(const Mat& a, const Mat& b, Mat& out) {
  out.resize(a.rows, a.cols);
  for (std::size_t i = 0; i < a.a.size(); ++i) out.a[i] = a.a[i] + b.a[i];
}

/// Hyperedge states: elementwise products of member-source embeddings with
/// membership embeddings, reduced in canonical order per column.
void eq5_forward(const Hypergraph& hg, const Mat& X, const Mat& C, const Mat& Wm,
                 Mat& E, std::vector<double>& buf) {
  const int nh = static_cast<int>(hg.hyperedges.size());
  const int d = X.cols;
  E.resize(nh, d);
  for (int he = 0; he < nh; ++he) {
    const Hyperedge& hy = hg.hyperedges[he];
    for (int j = 0; j < d; ++j) {
      buf.clear();
      for (int idx = hy.first_member; idx < hy.first_member + hy.n_members; ++idx) {
        const MemberRef& mr = hg.members[static_cast<std::size_t>(idx)];
        const double src = mr.is_constraint ? C.at(mr.vertex, j) : X.at(mr.vertex, j);
        buf.push_back(src * Wm.at(idx, j));
      }
      E.at(he, j) = sorted_sum(buf);
    }
  }
}

void eq5_backward(const Hypergraph& hg, const Mat& X, const Mat& C, const Mat& Wm,
                  const Mat& dE, Mat& dX, Mat& dC, Mat& dWm) {
  const int nh = static_cast<int>(hg.hyperedges.size());
  const int d = X.cols;
  for (int he = 0; he < nh; ++he) {
    const Hyperedge& hy = hg.hyperedges[he];
    for (int idx = hy.first_member; idx < hy.first_member + hy.n_members; ++idx) {
      const MemberRef& mr = hg.members[static_cast<std::size_t>(idx)];
      for (int j = 0; j < d; ++j) {
        const double g = dE.at(he, j);
        if (g == 0.0) continue;
        if (mr.is_constraint) {
          dC.at(mr.vertex, j) += g * Wm.at(idx, j);
          dWm.at(idx, j) += g * C.at(mr.vertex, j);
        } else {
          dX.at(mr.vertex, j) += g * Wm.at(idx, j);
          dWm.at(idx, j) += g * X.at(mr.vertex, j);
        }
      }
    }
  }
}

/// Per-variable mean over incident hyperedge states gated by the membership
/// embedding; zero rows for variables with no degree->=2 term.
void eq6_message(const Hypergraph& hg, const Mat& E, const Mat& Wm, Mat& M,
                 std::vector<double>& buf) {
  const int n = hg.n_vars;
  const int d = E.cols > 0 ? E.cols : M.cols;
  M.resize(n, d);
  for (int v = 0; v < n; ++v) {
    const auto& lst = hg.var_member_idx[static_cast<std::size_t>(v)];
    if (lst.empty()) continue;
    const double inv = 1.0 / static_cast<double>(lst.size());
    for (int j = 0; j < d; ++j) {
      buf.clear();
      for (int idx : lst) {
        const int he = hg.member_hyperedge[static_cast<std::size_t>(idx)];
        buf.push_back(E.at(he, j) * Wm.at(idx, j));
      }
      M.at(v, j) = sorted_sum(buf) * inv;
    }
  }
}

void eq6_backward(const Hypergraph& hg, const Mat& E, const Mat& Wm, const Mat& dM,
                  Mat& dE, Mat& dWm) {
  const int n = hg.n_vars;
  const int d = dM.cols;
  for (int v = 0; v < n; ++v) {
    const auto& lst = hg.var_member_idx[static_cast<std::size_t>(v)];
    if (lst.empty()) continue;
    const double inv = 1.0 / static_cast<double>(lst.size());
    for (int idx : lst) {
      const int he = hg.member_hyperedge[static_cast<std::size_t>(idx)];
      for (int j = 0; j < d; ++j) {
        const double g = dM.at(v, j) * inv;
        if (g == 0.0) continue;
        dE.at(he, j) += g * Wm.at(idx, j);
        dWm.at(idx, j) += g * E.at(he, j);
      }
    }
  }
}

/// Rows of [h_c | h_v | h_vc] per variable-constraint edge.
void edge_concat(const Hypergraph& hg, const Mat& C, const Mat& X, const Mat& We, Mat& out) {
  const int ne = static_cast<int>(hg.edges.size());
  const int d = X.cols;
  out.resize(ne, 3 * d);
  for (int idx = 0; idx < ne; ++idx) {
    const VcEdge& e = hg.edges[static_cast<std::size_t>(idx)];
    double* o = out.row(idx);
    std::copy(C.row(e.cons), C.row(e.cons) + d, o);
    std::copy(X.row(e.var), X.row(e.var) + d, o + d);
    std::copy(We.row(idx), We.row(idx) + d, o + 2 * d);
  }
}

/// Scatters the three slices of the edge-concat gradient back to their
/// sources (all accumulated).
void edge_concat_backward(const Hypergraph& hg, const Mat& dIn, Mat& dC, Mat& dX, Mat& dWe) {
  const int ne = static_cast<int>(hg.edges.size());
  const int d = dC.cols;
  for (int idx = 0; idx < ne; ++idx) {
    const VcEdge& e = hg.edges[static_cast<std::size_t>(idx)];
    const double* gi = dIn.row(idx);
    double* gc = dC.row(e.cons);
    double* gx = dX.row(e.var);
    double* ge = dWe.row(idx);
    for (int j = 0; j < d; ++j) {
      gc[j] += gi[j];
      gx[j] += gi[d + j];
      ge[j] += gi[2 * d + j];
    }
  }
}

/// Writes left | segment-sums-of-rows into dst (width 2d), reducing each
/// segment in canonical order.
void concat_with_segment_sum(const Mat& left, const std::vector<std::vector<int>>& segs,
                             const Mat& rows, Mat& dst, std::vector<double>& buf) {
  const int d = left.cols;
  dst.resize(left.rows, 2 * d);
  for (int r = 0; r < left.rows; ++r) {
    double* o = dst.row(r);
    std::copy(left.row(r), left.row(r) + d, o);
    const auto& seg = segs[static_cast<std::size_t>(r)];
    for (int j = 0; j < d; ++j) {
      buf.clear();
      for (int idx : seg) buf.push_back(rows.at(idx, j));
      o[d + j] = sorted_sum(buf);
    }
  }
}

void segment_sum_backward(const std::vector<std::vector<int>>& segs, const Mat& dSeg,
                          int col_offset, Mat& dRows) {
  const int d = dRows.cols;
  for (std::size_t r = 0; r < segs.size(); ++r) {
    const double* g = dSeg.row(static_cast<int>(r)) + col_offset;
    for (int idx : segs[r]) {
      double* o = dRows.row(idx);
      for (int j = 0; j < d; ++j) o[j] += g[j];
    }
  }
}

void split_halves(const Mat& both, const Mat& residual, Mat& dLeftOut, Mat& dRight) {
  const int d = both.cols / 2;
  dLeftOut.resize(both.rows, d);
  dRight.resize(both.rows, d);
  for (int r = 0; r < both.rows; ++r) {
    const double* b = both.row(r);
    const double* res = residual.row(r);
    double* l = dLeftOut.row(r);
    double* rt = dRight.row(r);
    for (int j = 0; j < d; ++j) {
      l[j] = b[j] + res[j];
      rt[j] = b[d + j];
    }
  }
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// One constraint-then-variable update; traces live in the caller.
void vc_iteration(const Hypergraph& hg, const ParamSet& P, double slope, const Mat& We,
                  Tape::VcTrace& tr, std::vector<double>& buf) {
  edge_concat(hg, tr.c_in, tr.x_in, We, tr.phi_c.in);
  mlp_forward(P.phi_c, slope, tr.phi_c);
  concat_with_segment_sum(tr.c_in, hg.cons_edge_idx, tr.phi_c.out, tr.f_c.in, buf);
  mlp_forward(P.f_c, slope, tr.f_c);
  add_rows(tr.f_c.out, tr.c_in, tr.c_out);

  edge_concat(hg, tr.c_out, tr.x_in, We, tr.phi_v.in);
  mlp_forward(P.phi_v, slope, tr.phi_v);
  concat_with_segment_sum(tr.x_in, hg.var_edge_idx, tr.phi_v.out, tr.f_v.in, buf);
  mlp_forward(P.f_v, slope, tr.f_v);
  add_rows(tr.f_v.out, tr.x_in, tr.x_out);
}

void hyper_iteration(const Hypergraph& hg, const ParamSet& P, double slope, const Mat& C,
                     const Mat& Wm, const Mat& x_prev, Mat& e_out, Mat& msg_out,
                     MlpTrace& phi_tr, Mat& x_next, std::vector<double>& buf) {
  eq5_forward(hg, x_prev, C, Wm, e_out, buf);
  msg_out.resize(x_prev.rows, x_prev.cols);
  eq6_message(hg, e_out, Wm, msg_out, buf);
  concat2(x_prev, msg_out, phi_tr.in);
  mlp_forward(P.phi_h, slope, phi_tr);
  add_rows(phi_tr.out, x_prev, x_next);
}

}  // namespace

ParamSet make_param_set(const ModelConfig& cfg) {
  ParamSet ps;
  const auto shapes = tensor_shapes(cfg);
  std::size_t i = 0;
  for_each_tensor(ps, [&](const std::string& name, Mat& m) {
    if (i >= shapes.size() || shapes[i].first != name)
      throw Error("tensor registry out of sync at " + name);
    m.resize(shapes[i].second.rows, shapes[i].second.cols);
    ++i;
  });
  return ps;
}

void zero_params(ParamSet& ps) {
  for_each_tensor(ps, [](const std::string&, Mat& m) { m.zero(); });
}

ModelState init_model(const ModelConfig& cfg) {
  if (cfg.embed_dim < 1 || cfg.hidden_dim < 1 || cfg.hyper_iters < 0 || cfg.vc_iters < 0)
    throw ConfigError("invalid model dimensions");
  ModelState st;
  st.cfg = cfg;
  st.params = make_param_set(cfg);
  st.adam_m = make_param_set(cfg);
  st.adam_v = make_param_set(cfg);
  Rng root(cfg.seed);
  for_each_tensor(st.params, [&](const std::string& name, Mat& m) {
    if (name.ends_with(".w1") || name.ends_with(".w2")) {
      Rng r = root.fork(name);
      const double bound = std::sqrt(6.0 / (m.rows + m.cols));
      for (double& w : m.a) w = bound * (2.0 * r.next_double() - 1.0);
    }
  });
  return st;
}

EmbeddingState embed_raw(const Hypergraph& hg, const ModelState& st) {
  const ParamSet& P = st.params;
  const double slope = st.cfg.leaky_slope;
  EmbeddingState emb;
  MlpTrace tr;
  compress_rows(hg.var_features, tr.in);
  mlp_forward(P.embed_var, slope, tr);
  emb.h_var = std::move(tr.out);
  compress_rows(hg.cons_features, tr.in);
  mlp_forward(P.embed_cons, slope, tr);
  emb.h_cons = std::move(tr.out);
  member_inputs(hg, tr.in);
  mlp_forward(P.embed_member, slope, tr);
  emb.h_member = std::move(tr.out);
  edge_inputs(hg, tr.in);
  mlp_forward(P.embed_edge, slope, tr);
  emb.h_vcedge = std::move(tr.out);
  emb.h_edge.resize(static_cast<int>(hg.hyperedges.size()), st.cfg.embed_dim);
  return emb;
}

void hyper_conv_step(const Hypergraph& hg, const ModelState& st, EmbeddingState& emb) {
  std::vector<double> buf;
  MlpTrace phi;
  Mat msg, x_next;
  hyper_iteration(hg, st.params, st.cfg.leaky_slope, emb.h_cons, emb.h_member,
                  emb.h_var, emb.h_edge, msg, phi, x_next, buf);
  emb.h_var = std::move(x_next);
}

void vc_conv_step(const Hypergraph& hg, const ModelState& st, EmbeddingState& emb) {
  std::vector<double> buf;
  Tape::VcTrace tr;
  tr.c_in = emb.h_cons;
  tr.x_in = emb.h_var;
  vc_iteration(hg, st.params, st.cfg.leaky_slope, emb.h_vcedge, tr, buf);
  emb.h_cons = std::move(tr.c_out);
  emb.h_var = std::move(tr.x_out);
}

std::span<const double> forward(const Hypergraph& hg, const ModelState& st, Tape& tape) {
  const ModelConfig& cfg = st.cfg;
  if (!cfg.enable_hyper_conv && !cfg.enable_vc_conv)
    throw ConfigError("at least one convolution stage must be enabled");
  const ParamSet& P = st.params;
  const double slope = cfg.leaky_slope;
  const int L = cfg.enable_hyper_conv ? cfg.hyper_iters : 0;
  const int V = cfg.enable_vc_conv ? cfg.vc_iters : 0;
  std::vector<double> buf;

  compress_rows(hg.var_features, tape.emb_var.in);
  mlp_forward(P.embed_var, slope, tape.emb_var);
  compress_rows(hg.cons_features, tape.emb_cons.in);
  mlp_forward(P.embed_cons, slope, tape.emb_cons);
  if (cfg.enable_hyper_conv) {
    member_inputs(hg, tape.emb_member.in);
    mlp_forward(P.embed_member, slope, tape.emb_member);
  }
  if (cfg.enable_vc_conv) {
    edge_inputs(hg, tape.emb_edge.in);
    mlp_forward(P.embed_edge, slope, tape.emb_edge);
  }

  tape.x_stage.resize(static_cast<std::size_t>(L) + 1);
  tape.x_stage[0] = tape.emb_var.out;
  tape.e_stage.resize(static_cast<std::size_t>(L));
  tape.mean_msg.resize(static_cast<std::size_t>(L));
  tape.phi_h.resize(static_cast<std::size_t>(L));
  for (int t = 0; t < L; ++t) {
    hyper_iteration(hg, P, slope, tape.emb_cons.out, tape.emb_member.out,
                    tape.x_stage[static_cast<std::size_t>(t)], tape.e_stage[static_cast<std::size_t>(t)],
                    tape.mean_msg[static_cast<std::size_t>(t)], tape.phi_h[static_cast<std::size_t>(t)],
                    tape.x_stage[static_cast<std::size_t>(t) + 1], buf);
  }

  const Mat* X = &tape.x_stage[static_cast<std::size_t>(L)];
  const Mat* C = &tape.emb_cons.out;
  tape.vc.resize(static_cast<std::size_t>(V));
  for (int it = 0; it < V; ++it) {
    Tape::VcTrace& tr = tape.vc[static_cast<std::size_t>(it)];
    tr.c_in = *C;
    tr.x_in = *X;
    vc_iteration(hg, P, slope, tape.emb_edge.out, tr, buf);
    C = &tr.c_out;
    X = &tr.x_out;
  }

  tape.out.in = *X;
  mlp_forward(P.out, slope, tape.out);
  tape.logits = tape.out.out;
  return {tape.logits.a.data(), static_cast<std::size_t>(hg.n_vars)};
}

double bce_loss(std::span<const double> logits, std::span<const double> labels) {
  if (logits.size() != labels.size()) throw ValidationError("logits/labels size mismatch");
  if (logits.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const double softplus = std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0);
    sum += softplus - labels[i] * z;
  }
  return sum / static_cast<double>(logits.size());
}

void backward(const Hypergraph& hg, const ModelState& st, const Tape& tape,
              std::span<const double> labels, double loss_scale, ParamSet& grads) {
  const ModelConfig& cfg = st.cfg;
  const ParamSet& P = st.params;
  const double slope = cfg.leaky_slope;
  const int n = hg.n_vars;
  const int m = hg.n_cons;
  const int d = cfg.embed_dim;
  const int L = cfg.enable_hyper_conv ? cfg.hyper_iters : 0;
  const int V = cfg.enable_vc_conv ? cfg.vc_iters : 0;
  if (static_cast<int>(labels.size()) != n) throw ValidationError("labels size mismatch");
  if (n == 0) return;

  Mat dLogit(n, 1);
  const double inv_n = loss_scale / static_cast<double>(n);
  for (int v = 0; v < n; ++v)
    dLogit.at(v, 0) = (sigmoid(tape.logits.at(v, 0)) - labels[static_cast<std::size_t>(v)]) * inv_n;

  Mat dX;
  mlp_backward(P.out, slope, tape.out, dLogit, grads.out, &dX);

  Mat dC(m, d);
  Mat dWe(static_cast<int>(hg.edges.size()), d);
  Mat dIn;
  for (int it = V - 1; it >= 0; --it) {
    const Tape::VcTrace& tr = tape.vc[static_cast<std::size_t>(it)];
    mlp_backward(P.f_v, slope, tr.f_v, dX, grads.f_v, &dIn);
    Mat dXin, dSv;
    split_halves(dIn, dX, dXin, dSv);
    Mat dPhiVout(static_cast<int>(hg.edges.size()), d);
    segment_sum_backward(hg.var_edge_idx, dSv, 0, dPhiVout);
    mlp_backward(P.phi_v, slope, tr.phi_v, dPhiVout, grads.phi_v, &dIn);
    Mat dCout = dC;
    edge_concat_backward(hg, dIn, dCout, dXin, dWe);
    mlp_backward(P.f_c, slope, tr.f_c, dCout, grads.f_c, &dIn);
    Mat dCin, dSc;
    split_halves(dIn, dCout, dCin, dSc);
    Mat dPhiCout(static_cast<int>(hg.edges.size()), d);
    segment_sum_backward(hg.cons_edge_idx, dSc, 0, dPhiCout);
    mlp_backward(P.phi_c, slope, tr.phi_c, dPhiCout, grads.phi_c, &dIn);
    edge_concat_backward(hg, dIn, dCin, dXin, dWe);
    dX = std::move(dXin);
    dC = std::move(dCin);
  }

  Mat dWm(static_cast<int>(hg.members.size()), d);
  for (int t = L - 1; t >= 0; --t) {
    mlp_backward(P.phi_h, slope, tape.phi_h[static_cast<std::size_t>(t)], dX, grads.phi_h, &dIn);
    Mat dXprev, dM;
    split_halves(dIn, dX, dXprev, dM);
    Mat dE(static_cast<int>(hg.hyperedges.size()), d);
    eq6_backward(hg, tape.e_stage[static_cast<std::size_t>(t)], tape.emb_member.out, dM, dE, dWm);
    eq5_backward(hg, tape.x_stage[static_cast<std::size_t>(t)], tape.emb_cons.out,
                 tape.emb_member.out, dE, dXprev, dC, dWm);
    dX = std::move(dXprev);
  }

  if (L > 0 && !hg.members.empty())
    mlp_backward(P.embed_member, slope, tape.emb_member, dWm, grads.embed_member, nullptr);
  if (V > 0 && !hg.edges.empty())
    mlp_backward(P.embed_edge, slope, tape.emb_edge, dWe, grads.embed_edge, nullptr);
  if (m > 0)
    mlp_backward(P.embed_cons, slope, tape.emb_cons, dC, grads.embed_cons, nullptr);
  mlp_backward(P.embed_var, slope, tape.emb_var, dX, grads.embed_var, nullptr);
}

void adamw_step(ModelState& st, const ParamSet& grads, const TrainConfig& tc) {
  st.step += 1;
  const double t = static_cast<double>(st.step);
  const double bc1 = 1.0 - std::pow(tc.beta1, t);
  const double bc2 = 1.0 - std::pow(tc.beta2, t);
  std::vector<Mat*> p, mm, vv;
  std::vector<const Mat*> gg;
  for_each_tensor(st.params, [&](const std::string&, Mat& x) { p.push_back(&x); });
  for_each_tensor(st.adam_m, [&](const std::string&, Mat& x) { mm.push_back(&x); });
  for_each_tensor(st.adam_v, [&](const std::string&, Mat& x) { vv.push_back(&x); });
  for_each_tensor(grads, [&](const std::string&, const Mat& x) { gg.push_back(&x); });
  for (std::size_t i = 0; i < p.size(); ++i) {
    Mat& par = *p[i];
    Mat& m1 = *mm[i];
    Mat& v2 = *vv[i];
    const Mat& g = *gg[i];
    for (std::size_t k = 0; k < par.a.size(); ++k) {
      m1.a[k] = tc.beta1 * m1.a[k] + (1.0 - tc.beta1) * g.a[k];
      v2.a[k] = tc.beta2 * v2.a[k] + (1.0 - tc.beta2) * g.a[k] * g.a[k];
      const double mh = m1.a[k] / bc1;
      const double vh = v2.a[k] / bc2;
      par.a[k] -= tc.learning_rate * (mh / (std::sqrt(vh) + tc.eps) + tc.weight_decay * par.a[k]);
    }
  }
}

TrainResult train(ModelState& st, std::span<const TrainSample> data, const TrainConfig& tc) {
  if (data.empty()) throw ValidationError("training requires at least one sample");
  if (tc.batch_size < 1) throw ConfigError("batch_size must be positive");
  if (tc.epochs < 0) throw ConfigError("epochs must be non-negative");
  for (const TrainSample& s : data) {
    if (static_cast<int>(s.labels.size()) != s.hg.n_vars)
      throw ValidationError("label vector does not match variable count");
  }
  const int N = static_cast<int>(data.size());
  std::vector<int> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);
  Rng shuffler(tc.shuffle_seed);
  Tape tape;
  ParamSet grads = make_param_set(st.cfg);
  TrainResult res;
  res.loss_curve.reserve(static_cast<std::size_t>(tc.epochs));
  for (int e = 0; e < tc.epochs; ++e) {
    Rng er = shuffler.fork("epoch", static_cast<std::uint64_t>(e));
    er.shuffle(order);
    double loss_sum = 0.0;
    for (int b0 = 0; b0 < N; b0 += tc.batch_size) {
      const int bn = std::min(tc.batch_size, N - b0);
      zero_params(grads);
      const double scale = 1.0 / static_cast<double>(bn);
      for (int i = b0; i < b0 + bn; ++i) {
        const TrainSample& s = data[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        const auto logits = forward(s.hg, st, tape);
        loss_sum += bce_loss(logits, s.labels);
        backward(s.hg, st, tape, s.labels, scale, grads);
      }
      adamw_step(st, grads, tc);
    }
    res.loss_curve.push_back(loss_sum / static_cast<double>(N));
  }
  return res;
}

Prediction predict(const Hypergraph& hg, const ModelState& st) {
  Tape tape;
  const auto logits = forward(hg, st, tape);
  Prediction pr;
  pr.prob.resize(logits.size());
  pr.rounded.resize(logits.size());
  pr.uncertainty.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = sigmoid(logits[i]);
    pr.prob[i] = p;
    pr.rounded[i] = p >= 0.5 ? 1 : 0;
    pr.uncertainty[i] = std::min(p, 1.0 - p);
  }
  return pr;
}

Prediction predict(const Instance& binarized, const ModelState& st) {
  return predict(encode(binarized), st);
}

Prediction uniform_prediction(int n) {
  Prediction pr;
  pr.prob.assign(static_cast<std::size_t>(n), 0.5);
  pr.rounded.assign(static_cast<std::size_t>(n), 1);
  pr.uncertainty.assign(static_cast<std::size_t>(n), 0.5);
  return pr;
}

namespace {

nlohmann::ordered_json params_to_json(const ParamSet& ps, bool with_shapes) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for_each_tensor(ps, [&](const std::string& name, const Mat& m) {
    if (with_shapes) {
      j[name] = {{"rows", m.rows}, {"cols", m.cols}, {"data", m.a}};
    } else {
      j[name] = m.a;
    }
  });
  return j;
}

void params_from_json(const nlohmann::json& j, bool with_shapes, ParamSet& ps) {
  for_each_tensor(ps, [&](const std::string& name, Mat& m) {
    if (!j.contains(name)) throw ValidationError("checkpoint missing tensor " + name);
    const nlohmann::json& t = j.at(name);
    const nlohmann::json& data = with_shapes ? t.at("data") : t;
    if (with_shapes) {
      if (t.at("rows").get<int>() != m.rows || t.at("cols").get<int>() != m.cols)
        throw ValidationError("checkpoint shape mismatch for " + name);
    }
    if (data.size() != m.a.size())
      throw ValidationError("checkpoint size mismatch for " + name);
    for (std::size_t i = 0; i < m.a.size(); ++i) m.a[i] = data[i].get<double>();
  });
}

}  // namespace

std::string checkpoint_to_json(const ModelState& st) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["model_config"] = {
      {"embed_dim", st.cfg.embed_dim},
      {"hidden_dim", st.cfg.hidden_dim},
      {"hyper_iters", st.cfg.hyper_iters},
      {"vc_iters", st.cfg.vc_iters},
      {"leaky_slope", st.cfg.leaky_slope},
      {"enable_hyper_conv", st.cfg.enable_hyper_conv},
      {"enable_vc_conv", st.cfg.enable_vc_conv},
      {"seed", st.cfg.seed},
  };
  j["step"] = st.step;
  j["tensors"] = params_to_json(st.params, true);
  j["optimizer_state"] = {{"m", params_to_json(st.adam_m, false)},
                          {"v", params_to_json(st.adam_v, false)}};
  return j.dump(2) + "\n";
}

ModelState checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint parse: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != 1)
      throw ValidationError("unsupported checkpoint format_version");
    const nlohmann::json& mc = j.at("model_config");
    ModelConfig cfg;
    cfg.embed_dim = mc.at("embed_dim").get<int>();
    cfg.hidden_dim = mc.at("hidden_dim").get<int>();
    cfg.hyper_iters = mc.at("hyper_iters").get<int>();
    cfg.vc_iters = mc.at("vc_iters").get<int>();
    cfg.leaky_slope = mc.at("leaky_slope").get<double>();
    cfg.enable_hyper_conv = mc.at("enable_hyper_conv").get<bool>();
    cfg.enable_vc_conv = mc.at("enable_vc_conv").get<bool>();
    cfg.seed = mc.at("seed").get<std::uint64_t>();
    ModelState st;
    st.cfg = cfg;
    st.params = make_param_set(cfg);
    st.adam_m = make_param_set(cfg);
    st.adam_v = make_param_set(cfg);
    st.step = j.at("step").get<std::uint64_t>();
    params_from_json(j.at("tensors"), true, st.params);
    params_from_json(j.at("optimizer_state").at("m"), false, st.adam_m);
    params_from_json(j.at("optimizer_state").at("v"), false, st.adam_v);
    return st;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint structure: ") + e.what());
  }
}

void save_checkpoint(const ModelState& st, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << checkpoint_to_json(st);
  if (!f.good()) throw Error("failed writing " + path);
}

ModelState load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return checkpoint_from_json(text);
  } catch (Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace poip
