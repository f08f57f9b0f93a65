#include "moflp/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "moflp/errors.hpp"
#include "moflp/rng.hpp"
#include "moflp/util.hpp"

namespace moflp {

using json = nlohmann::ordered_json;
using layers::ConvCache;
using layers::Dims;
using layers::MlpCache;

namespace {

constexpr double kLogFloor = 1e-12;

Dims dims_of(const GraphBatch& batch) { return {batch.graphs, batch.m, batch.n}; }

void add_inplace(Tensor2& a, const Tensor2& b) {
  for (std::size_t k = 0; k < a.data.size(); ++k) a.data[k] += b.data[k];
}

/// Per-edge sum of the incident node embeddings, n_i + n_j.
Tensor2 gather_node_sums(const Tensor2& nodes, const Dims& d) {
  const int h = nodes.cols;
  Tensor2 s(d.edge_rows(), h);
  for (int g = 0; g < d.graphs; ++g) {
    for (int i = 0; i < d.m; ++i) {
      const double* fac = nodes.row(d.fac_row(g, i));
      for (int j = 0; j < d.n; ++j) {
        const double* cus = nodes.row(d.cus_row(g, j));
        double* out = s.row(d.edge_row(g, i, j));
        for (int k = 0; k < h; ++k) out[k] = fac[k] + cus[k];
      }
    }
  }
  return s;
}

/// Gate-weighted neighbor aggregate per node.
Tensor2 gated_aggregate(const Tensor2& nodes, const Tensor2& sig, const Tensor2& d_fac,
                        const Tensor2& d_cus, const Dims& d) {
  const int h = nodes.cols;
  Tensor2 agg(d.node_rows(), h, 0.0);
  for (int g = 0; g < d.graphs; ++g) {
    for (int i = 0; i < d.m; ++i) {
      double* out = agg.row(d.fac_row(g, i));
      const double* denom = d_fac.row(g * d.m + i);
      for (int j = 0; j < d.n; ++j) {
        const double* srow = sig.row(d.edge_row(g, i, j));
        const double* nbr = nodes.row(d.cus_row(g, j));
        for (int k = 0; k < h; ++k) out[k] += srow[k] / denom[k] * nbr[k];
      }
    }
    for (int j = 0; j < d.n; ++j) {
      double* out = agg.row(d.cus_row(g, j));
      const double* denom = d_cus.row(g * d.n + j);
      for (int i = 0; i < d.m; ++i) {
        const double* srow = sig.row(d.edge_row(g, i, j));
        const double* nbr = nodes.row(d.fac_row(g, i));
        for (int k = 0; k < h; ++k) out[k] += srow[k] / denom[k] * nbr[k];
      }
    }
  }
  return agg;
}

}  // namespace

// ---------------------------------------------------------------------------
// Layer building blocks
// ---------------------------------------------------------------------------

namespace layers {

Tensor2 embed_forward(const EmbedBlock& eb, const Tensor2& x) {
  if (x.cols != eb.features) {
    throw ShapeError("embed: input width " + std::to_string(x.cols) + " != feature count " +
                     std::to_string(eb.features));
  }
  const int d = eb.block;
  Tensor2 out(x.rows, eb.features * d);
  for (int f = 0; f < eb.features; ++f) {
    const double* w = eb.weight[f].value.row(0);
    const double* b = eb.bias[f].value.row(0);
    for (int r = 0; r < x.rows; ++r) {
      const double xv = x.at(r, f);
      double* orow = out.row(r) + static_cast<std::size_t>(f) * d;
      for (int k = 0; k < d; ++k) orow[k] = xv * w[k] + b[k];
    }
  }
  return out;
}

void embed_backward(EmbedBlock& eb, const Tensor2& x, const Tensor2& dout) {
  const int d = eb.block;
  for (int f = 0; f < eb.features; ++f) {
    double* dw = eb.weight[f].grad.row(0);
    double* db = eb.bias[f].grad.row(0);
    for (int r = 0; r < x.rows; ++r) {
      const double xv = x.at(r, f);
      const double* drow = dout.row(r) + static_cast<std::size_t>(f) * d;
      for (int k = 0; k < d; ++k) {
        dw[k] += xv * drow[k];
        db[k] += drow[k];
      }
    }
  }
}

void compute_gates(const Tensor2& edges, const Dims& d, double delta, Tensor2& sig,
                   Tensor2& d_fac, Tensor2& d_cus) {
  const int h = edges.cols;
  sig = Tensor2(edges.rows, h);
  for (std::size_t k = 0; k < edges.data.size(); ++k) {
    sig.data[k] = 1.0 / (1.0 + std::exp(-edges.data[k]));
  }
  d_fac = Tensor2(d.graphs * d.m, h, delta);
  d_cus = Tensor2(d.graphs * d.n, h, delta);
  for (int g = 0; g < d.graphs; ++g) {
    for (int i = 0; i < d.m; ++i) {
      double* frow = d_fac.row(g * d.m + i);
      for (int j = 0; j < d.n; ++j) {
        const double* srow = sig.row(d.edge_row(g, i, j));
        for (int k = 0; k < h; ++k) frow[k] += srow[k];
      }
    }
    for (int j = 0; j < d.n; ++j) {
      double* crow = d_cus.row(g * d.n + j);
      for (int i = 0; i < d.m; ++i) {
        const double* srow = sig.row(d.edge_row(g, i, j));
        for (int k = 0; k < h; ++k) crow[k] += srow[k];
      }
    }
  }
}

void conv_forward_train(ConvLayer& layer, const Dims& d, double delta, const Tensor2& n_in,
                        const Tensor2& e_in, ConvCache& cache, Tensor2& n_out,
                        Tensor2& e_out) {
  cache.node_sums = gather_node_sums(n_in, d);
  Tensor2 a;
  matmul(e_in, layer.U.value, a);
  Tensor2 sv;
  matmul(cache.node_sums, layer.V.value, sv);
  add_inplace(a, sv);
  cache.edge_pre_relu = layer.bn_edge.forward_train(a, cache.bn_edge);
  e_out = e_in;
  add_inplace(e_out, relu(cache.edge_pre_relu));

  compute_gates(e_in, d, delta, cache.sig, cache.d_fac, cache.d_cus);
  cache.agg = gated_aggregate(n_in, cache.sig, cache.d_fac, cache.d_cus, d);
  Tensor2 c;
  matmul(n_in, layer.P.value, c);
  Tensor2 qc;
  matmul(cache.agg, layer.Q.value, qc);
  add_inplace(c, qc);
  cache.node_pre_relu = layer.bn_node.forward_train(c, cache.bn_node);
  n_out = n_in;
  add_inplace(n_out, relu(cache.node_pre_relu));
}

void conv_forward_eval(const ConvLayer& layer, const Dims& d, double delta,
                       const Tensor2& n_in, const Tensor2& e_in, Tensor2& n_out,
                       Tensor2& e_out) {
  Tensor2 a;
  matmul(e_in, layer.U.value, a);
  Tensor2 sv;
  matmul(gather_node_sums(n_in, d), layer.V.value, sv);
  add_inplace(a, sv);
  e_out = e_in;
  add_inplace(e_out, relu(layer.bn_edge.forward_eval(a)));

  Tensor2 sig, d_fac, d_cus;
  compute_gates(e_in, d, delta, sig, d_fac, d_cus);
  Tensor2 c;
  matmul(n_in, layer.P.value, c);
  Tensor2 qc;
  matmul(gated_aggregate(n_in, sig, d_fac, d_cus, d), layer.Q.value, qc);
  add_inplace(c, qc);
  n_out = n_in;
  add_inplace(n_out, relu(layer.bn_node.forward_eval(c)));
}

void conv_backward(ConvLayer& layer, const Dims& d, const Tensor2& n_in, const Tensor2& e_in,
                   const ConvCache& cache, const Tensor2& dn_out, const Tensor2& de_out,
                   Tensor2& dn_in, Tensor2& de_in) {
  const int h = n_in.cols;

  // Residual passthrough.
  de_in = de_out;
  dn_in = dn_out;

  // Edge path: e' = e + ReLU(BN(A)), A = e U + S V.
  {
    const Tensor2 d_pre = relu_backward(de_out, cache.edge_pre_relu);
    const Tensor2 da = layer.bn_edge.backward(d_pre, cache.bn_edge);
    Tensor2 tmp;
    matmul_nt(da, layer.U.value, tmp);
    add_inplace(de_in, tmp);
    matmul_tn_acc(e_in, da, layer.U.grad);
    matmul_tn_acc(cache.node_sums, da, layer.V.grad);
    Tensor2 ds;
    matmul_nt(da, layer.V.value, ds);
    for (int g = 0; g < d.graphs; ++g) {
      for (int i = 0; i < d.m; ++i) {
        double* fac = dn_in.row(d.fac_row(g, i));
        for (int j = 0; j < d.n; ++j) {
          const double* srow = ds.row(d.edge_row(g, i, j));
          double* cus = dn_in.row(d.cus_row(g, j));
          for (int k = 0; k < h; ++k) {
            fac[k] += srow[k];
            cus[k] += srow[k];
          }
        }
      }
    }
  }

  // Node path: n' = n + ReLU(BN(C)), C = n P + G Q.
  const Tensor2 d_pre_n = relu_backward(dn_out, cache.node_pre_relu);
  const Tensor2 dc = layer.bn_node.backward(d_pre_n, cache.bn_node);
  {
    Tensor2 tmp;
    matmul_nt(dc, layer.P.value, tmp);
    add_inplace(dn_in, tmp);
    matmul_tn_acc(n_in, dc, layer.P.grad);
    matmul_tn_acc(cache.agg, dc, layer.Q.grad);
  }
  Tensor2 dg;
  matmul_nt(dc, layer.Q.value, dg);

  // Gather backward: G[fac i] = sum_j (sig_e / d_fac_i) ⊙ n_cus(j), and the
  // symmetric customer-side sum. Each gate contributes a direct 1/denominator
  // term and a shared denominator term spread over the whole neighborhood.
  Tensor2 dsig(cache.sig.rows, h, 0.0);
  std::vector<double> d_denom(h);
  for (int g = 0; g < d.graphs; ++g) {
    for (int i = 0; i < d.m; ++i) {
      const double* dgrow = dg.row(d.fac_row(g, i));
      const double* denom = cache.d_fac.row(g * d.m + i);
      std::fill(d_denom.begin(), d_denom.end(), 0.0);
      for (int j = 0; j < d.n; ++j) {
        const int e = d.edge_row(g, i, j);
        const double* srow = cache.sig.row(e);
        const double* nbr = n_in.row(d.cus_row(g, j));
        double* dnbr = dn_in.row(d.cus_row(g, j));
        double* dsrow = dsig.row(e);
        for (int k = 0; k < h; ++k) {
          const double inv = 1.0 / denom[k];
          dnbr[k] += srow[k] * inv * dgrow[k];
          const double domega = dgrow[k] * nbr[k];
          dsrow[k] += domega * inv;
          d_denom[k] -= domega * srow[k] * inv * inv;
        }
      }
      for (int j = 0; j < d.n; ++j) {
        double* dsrow = dsig.row(d.edge_row(g, i, j));
        for (int k = 0; k < h; ++k) dsrow[k] += d_denom[k];
      }
    }
    for (int j = 0; j < d.n; ++j) {
      const double* dgrow = dg.row(d.cus_row(g, j));
      const double* denom = cache.d_cus.row(g * d.n + j);
      std::fill(d_denom.begin(), d_denom.end(), 0.0);
      for (int i = 0; i < d.m; ++i) {
        const int e = d.edge_row(g, i, j);
        const double* srow = cache.sig.row(e);
        const double* nbr = n_in.row(d.fac_row(g, i));
        double* dnbr = dn_in.row(d.fac_row(g, i));
        double* dsrow = dsig.row(e);
        for (int k = 0; k < h; ++k) {
          const double inv = 1.0 / denom[k];
          dnbr[k] += srow[k] * inv * dgrow[k];
          const double domega = dgrow[k] * nbr[k];
          dsrow[k] += domega * inv;
          d_denom[k] -= domega * srow[k] * inv * inv;
        }
      }
      for (int i = 0; i < d.m; ++i) {
        double* dsrow = dsig.row(d.edge_row(g, i, j));
        for (int k = 0; k < h; ++k) dsrow[k] += d_denom[k];
      }
    }
  }
  // Through the sigmoid onto the pre-update edge embeddings.
  for (std::size_t k = 0; k < dsig.data.size(); ++k) {
    const double s = cache.sig.data[k];
    de_in.data[k] += dsig.data[k] * s * (1.0 - s);
  }
}

Tensor2 mlp_forward(const MlpHead& mlp, const Tensor2& x, MlpCache* cache) {
  const std::size_t layer_count = mlp.W.size();
  Tensor2 h = x;
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  for (std::size_t l = 0; l < layer_count; ++l) {
    if (cache) cache->inputs.push_back(h);
    Tensor2 pre = linear(h, mlp.W[l].value, mlp.b[l].value);
    if (l + 1 < layer_count) {
      if (cache) cache->pre.push_back(pre);
      h = relu(pre);
    } else {
      h = std::move(pre);
    }
  }
  return h;
}

Tensor2 mlp_backward(MlpHead& mlp, const Tensor2& dout, const MlpCache& cache) {
  const std::size_t layer_count = mlp.W.size();
  Tensor2 g = dout;
  for (std::size_t l = layer_count; l-- > 0;) {
    if (l + 1 < layer_count) g = relu_backward(g, cache.pre[l]);
    matmul_tn_acc(cache.inputs[l], g, mlp.W[l].grad);
    double* db = mlp.b[l].grad.row(0);
    for (int r = 0; r < g.rows; ++r) {
      const double* grow = g.row(r);
      for (int c = 0; c < g.cols; ++c) db[c] += grow[c];
    }
    Tensor2 dx;
    matmul_nt(g, mlp.W[l].value, dx);
    g = std::move(dx);
  }
  return g;
}

}  // namespace layers

// ---------------------------------------------------------------------------
// Head transforms between stacked edge rows and the m × (graphs·n) layout
// ---------------------------------------------------------------------------

namespace {

Tensor2 edge_column_matrix(const Tensor2& edge_scalar, const Dims& d) {
  Tensor2 out(d.m, d.graphs * d.n);
  for (int g = 0; g < d.graphs; ++g)
    for (int i = 0; i < d.m; ++i)
      for (int j = 0; j < d.n; ++j)
        out.at(i, g * d.n + j) = edge_scalar.at(d.edge_row(g, i, j), 0);
  return out;
}

Tensor2 edge_row_vector(const Tensor2& col_matrix, const Dims& d) {
  Tensor2 out(d.edge_rows(), 1);
  for (int g = 0; g < d.graphs; ++g)
    for (int i = 0; i < d.m; ++i)
      for (int j = 0; j < d.n; ++j)
        out.at(d.edge_row(g, i, j), 0) = col_matrix.at(i, g * d.n + j);
  return out;
}

Tensor2 gather_facility_rows(const Tensor2& nodes, const Dims& d) {
  Tensor2 out(d.graphs * d.m, nodes.cols);
  for (int g = 0; g < d.graphs; ++g)
    for (int i = 0; i < d.m; ++i) {
      const double* src = nodes.row(d.fac_row(g, i));
      double* dst = out.row(g * d.m + i);
      for (int k = 0; k < nodes.cols; ++k) dst[k] = src[k];
    }
  return out;
}

// ---------------------------------------------------------------------------
// Full-network forward/backward
// ---------------------------------------------------------------------------

struct NetCaches {
  std::vector<Tensor2> n_states;
  std::vector<Tensor2> e_states;
  std::vector<ConvCache> convs;
  Tensor2 head_in;
  MlpCache mlp;
  Tensor2 logits;
  Tensor2 node_probs;
  Tensor2 edge_probs;
};

void forward_train(GcnNetwork& net, const GraphBatch& batch, NetCaches& caches) {
  const Dims d = dims_of(batch);
  const std::size_t layer_count = net.convs.size();
  caches.n_states.assign(layer_count + 1, Tensor2());
  caches.e_states.assign(layer_count + 1, Tensor2());
  caches.convs.assign(layer_count, ConvCache());
  caches.n_states[0] = layers::embed_forward(net.node_embed, batch.node_inputs);
  caches.e_states[0] = layers::embed_forward(net.edge_embed, batch.edge_inputs);
  for (std::size_t l = 0; l < layer_count; ++l) {
    layers::conv_forward_train(net.convs[l], d, net.config.delta, caches.n_states[l],
                               caches.e_states[l], caches.convs[l], caches.n_states[l + 1],
                               caches.e_states[l + 1]);
  }
  if (net.head == HeadKind::node) {
    caches.head_in = gather_facility_rows(caches.n_states[layer_count], d);
    caches.logits = layers::mlp_forward(net.mlp, caches.head_in, &caches.mlp);
    caches.node_probs = sigmoid(caches.logits);
  } else {
    caches.logits = layers::mlp_forward(net.mlp, caches.e_states[layer_count], &caches.mlp);
    caches.edge_probs = softmax_columns(edge_column_matrix(caches.logits, d));
  }
}

double head_loss(const GcnNetwork& net, const GraphBatch& batch, const NetCaches& caches) {
  if (net.head == HeadKind::node) {
    std::vector<double> p(caches.node_probs.data.begin(), caches.node_probs.data.end());
    return loss_node(p, batch.node_labels);
  }
  return loss_edge(caches.edge_probs, batch.edge_labels);
}

Tensor2 head_loss_backward(const GcnNetwork& net, const GraphBatch& batch,
                           const NetCaches& caches) {
  const Dims d = dims_of(batch);
  if (net.head == HeadKind::node) {
    const int count = caches.logits.rows;
    Tensor2 dz(count, 1);
    for (int r = 0; r < count; ++r) {
      const double p = caches.node_probs.at(r, 0);
      const double y = batch.node_labels[r];
      dz.at(r, 0) = 2.0 / count * (p - y) * p * (1.0 - p);
    }
    return dz;
  }
  // Softmax + floored cross entropy; exact gradient of the implemented loss.
  const Tensor2& probs = caches.edge_probs;
  const Tensor2& labels = batch.edge_labels;
  const int cols = probs.cols;
  Tensor2 dcol(probs.rows, cols);
  for (int j = 0; j < cols; ++j) {
    double s_total = 0.0;
    for (int i = 0; i < probs.rows; ++i) {
      const double ph = probs.at(i, j);
      s_total += labels.at(i, j) * ph / (ph + kLogFloor);
    }
    for (int i = 0; i < probs.rows; ++i) {
      const double ph = probs.at(i, j);
      const double s_i = labels.at(i, j) * ph / (ph + kLogFloor);
      dcol.at(i, j) = (ph * s_total - s_i) / cols;
    }
  }
  return edge_row_vector(dcol, d);
}

void backward_from_head(GcnNetwork& net, const GraphBatch& batch, NetCaches& caches,
                        const Tensor2& dlogits) {
  const Dims d = dims_of(batch);
  const std::size_t layer_count = net.convs.size();
  const int h = net.config.hidden;

  Tensor2 dn(d.node_rows(), h, 0.0);
  Tensor2 de(d.edge_rows(), h, 0.0);
  if (net.head == HeadKind::node) {
    const Tensor2 dhead = layers::mlp_backward(net.mlp, dlogits, caches.mlp);
    for (int g = 0; g < d.graphs; ++g)
      for (int i = 0; i < d.m; ++i) {
        const double* src = dhead.row(g * d.m + i);
        double* dst = dn.row(d.fac_row(g, i));
        for (int k = 0; k < h; ++k) dst[k] = src[k];
      }
  } else {
    de = layers::mlp_backward(net.mlp, dlogits, caches.mlp);
  }

  for (std::size_t l = layer_count; l-- > 0;) {
    Tensor2 dn_in, de_in;
    layers::conv_backward(net.convs[l], d, caches.n_states[l], caches.e_states[l],
                          caches.convs[l], dn, de, dn_in, de_in);
    dn = std::move(dn_in);
    de = std::move(de_in);
  }
  layers::embed_backward(net.node_embed, batch.node_inputs, dn);
  layers::embed_backward(net.edge_embed, batch.edge_inputs, de);
}

void zero_grads(GcnNetwork& net) {
  for (Param* p : net.params()) p->zero_grad();
}

}  // namespace

// ---------------------------------------------------------------------------
// Public surface
// ---------------------------------------------------------------------------

int padded_feature_count(int hidden, int raw_features) {
  if (raw_features < 1) throw ConfigError("feature count must be >= 1");
  for (int f = raw_features; f <= hidden; ++f) {
    if (hidden % f == 0) return f;
  }
  throw ConfigError("hidden width " + std::to_string(hidden) + " cannot host " +
                    std::to_string(raw_features) + " per-feature embedding blocks");
}

void ModelConfig::validate() const {
  if (hidden < 1) throw ConfigError("hidden must be >= 1");
  if (l_gcn < 1) throw ConfigError("l_gcn must be >= 1");
  if (l_mlp < 1) throw ConfigError("l_mlp must be >= 1");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  padded_feature_count(hidden, node_feature_width(variant));
  padded_feature_count(hidden, edge_feature_width());
}

namespace {

EmbedBlock make_embed(const std::string& name, int features, int hidden, Rng& rng) {
  EmbedBlock eb;
  eb.features = features;
  eb.block = hidden / features;
  for (int f = 0; f < features; ++f) {
    Param w(name + ".f" + std::to_string(f) + ".w", 1, eb.block);
    for (double& v : w.value.data) v = rng.uniform(-1.0, 1.0);  // fan_in = 1
    eb.weight.push_back(std::move(w));
    eb.bias.emplace_back(name + ".f" + std::to_string(f) + ".b", 1, eb.block);
  }
  return eb;
}

Param make_weight(const std::string& name, int rows, int cols, Rng& rng) {
  Param p(name, rows, cols);
  const double bound = std::sqrt(1.0 / rows);
  for (double& v : p.value.data) v = rng.uniform(-bound, bound);
  return p;
}

}  // namespace

GcnNetwork make_network(const ModelConfig& config, HeadKind head) {
  config.validate();
  GcnNetwork net;
  net.config = config;
  net.head = head;
  Rng rng(derive_seed(config.seed, {head == HeadKind::node ? 0ULL : 1ULL}));

  const int fn = padded_feature_count(config.hidden, node_feature_width(config.variant));
  const int fe = padded_feature_count(config.hidden, edge_feature_width());
  net.node_embed = make_embed("node_embed", fn, config.hidden, rng);
  net.edge_embed = make_embed("edge_embed", fe, config.hidden, rng);

  for (int l = 0; l < config.l_gcn; ++l) {
    const std::string base = "conv" + std::to_string(l);
    ConvLayer layer;
    layer.U = make_weight(base + ".U", config.hidden, config.hidden, rng);
    layer.V = make_weight(base + ".V", config.hidden, config.hidden, rng);
    layer.P = make_weight(base + ".P", config.hidden, config.hidden, rng);
    layer.Q = make_weight(base + ".Q", config.hidden, config.hidden, rng);
    layer.bn_edge = BatchNorm(base + ".bn_edge", config.hidden);
    layer.bn_node = BatchNorm(base + ".bn_node", config.hidden);
    net.convs.push_back(std::move(layer));
  }

  for (int l = 0; l < config.l_mlp; ++l) {
    const int out = (l + 1 == config.l_mlp) ? 1 : config.hidden;
    const std::string base = "mlp" + std::to_string(l);
    net.mlp.W.push_back(make_weight(base + ".W", config.hidden, out, rng));
    net.mlp.b.emplace_back(base + ".b", 1, out);
  }
  return net;
}

std::vector<Param*> GcnNetwork::params() {
  std::vector<Param*> out;
  auto add_embed = [&](EmbedBlock& eb) {
    for (auto& p : eb.weight) out.push_back(&p);
    for (auto& p : eb.bias) out.push_back(&p);
  };
  add_embed(node_embed);
  add_embed(edge_embed);
  for (auto& layer : convs) {
    out.push_back(&layer.U);
    out.push_back(&layer.V);
    out.push_back(&layer.P);
    out.push_back(&layer.Q);
    out.push_back(&layer.bn_edge.gamma);
    out.push_back(&layer.bn_edge.beta);
    out.push_back(&layer.bn_node.gamma);
    out.push_back(&layer.bn_node.beta);
  }
  for (auto& p : mlp.W) out.push_back(&p);
  for (auto& p : mlp.b) out.push_back(&p);
  return out;
}

Tensor2 GcnNetwork::infer(const GraphBatch& batch) const {
  const Dims d = dims_of(batch);
  Tensor2 n = layers::embed_forward(node_embed, batch.node_inputs);
  Tensor2 e = layers::embed_forward(edge_embed, batch.edge_inputs);
  for (const ConvLayer& layer : convs) {
    Tensor2 n_next, e_next;
    layers::conv_forward_eval(layer, d, config.delta, n, e, n_next, e_next);
    n = std::move(n_next);
    e = std::move(e_next);
  }
  if (head == HeadKind::node) {
    return sigmoid(layers::mlp_forward(mlp, gather_facility_rows(n, d), nullptr));
  }
  return softmax_columns(edge_column_matrix(layers::mlp_forward(mlp, e, nullptr), d));
}

double loss_node(const std::vector<double>& p_hat, const std::vector<double>& p_label) {
  if (p_hat.size() != p_label.size())
    throw ShapeError("loss_node: prediction and label lengths differ");
  if (p_hat.empty()) throw DomainError("loss_node: empty inputs");
  double total = 0.0;
  for (std::size_t k = 0; k < p_hat.size(); ++k) {
    const double d = p_hat[k] - p_label[k];
    total += d * d;
  }
  return total / static_cast<double>(p_hat.size());
}

double loss_edge(const Tensor2& p_hat, const Tensor2& p_label) {
  if (!p_hat.same_shape(p_label)) throw ShapeError("loss_edge: shape mismatch");
  if (p_hat.cols == 0) throw DomainError("loss_edge: empty inputs");
  double total = 0.0;
  for (int j = 0; j < p_hat.cols; ++j) {
    for (int i = 0; i < p_hat.rows; ++i) {
      const double y = p_label.at(i, j);
      if (y > 0.0) total -= y * std::log(p_hat.at(i, j) + kLogFloor);
    }
  }
  return total / static_cast<double>(p_hat.cols);
}

GraphBatch make_graph_batch(const std::vector<const DatasetEntry*>& items,
                            const ModelConfig& config, bool with_labels) {
  if (items.empty()) throw DomainError("make_graph_batch: empty batch");
  const GraphFeatures& first = items.front()->features(config.variant);
  GraphBatch batch;
  batch.graphs = static_cast<int>(items.size());
  batch.m = first.m;
  batch.n = first.n;
  const int fn = padded_feature_count(config.hidden, first.node_width);
  const int fe = padded_feature_count(config.hidden, first.edge_width);
  const Dims d = dims_of(batch);
  batch.node_inputs = Tensor2(d.node_rows(), fn, 0.0);
  batch.edge_inputs = Tensor2(d.edge_rows(), fe, 0.0);
  if (with_labels) {
    batch.has_labels = true;
    batch.node_labels.assign(static_cast<std::size_t>(batch.graphs) * batch.m, 0.0);
    batch.edge_labels = Tensor2(batch.m, batch.graphs * batch.n, 0.0);
  }

  for (int g = 0; g < batch.graphs; ++g) {
    const DatasetEntry& entry = *items[g];
    const GraphFeatures& gf = entry.features(config.variant);
    if (gf.m != batch.m || gf.n != batch.n)
      throw ShapeError("make_graph_batch: mixed graph scales in one batch");
    for (int r = 0; r < gf.m + gf.n; ++r)
      for (int c = 0; c < gf.node_width; ++c)
        batch.node_inputs.at(g * (batch.m + batch.n) + r, c) = gf.node_at(r, c);
    for (int r = 0; r < gf.m * gf.n; ++r)
      for (int c = 0; c < gf.edge_width; ++c)
        batch.edge_inputs.at(g * batch.m * batch.n + r, c) = gf.edge_at(r, c);
    if (with_labels) {
      for (int i = 0; i < batch.m; ++i)
        batch.node_labels[static_cast<std::size_t>(g) * batch.m + i] = entry.labels.p_node[i];
      for (int i = 0; i < batch.m; ++i)
        for (int j = 0; j < batch.n; ++j)
          batch.edge_labels.at(i, g * batch.n + j) = entry.labels.edge(i, j);
    }
  }
  return batch;
}

GraphBatch make_graph_batch(const GraphFeatures& features, const ModelConfig& config) {
  GraphBatch batch;
  batch.graphs = 1;
  batch.m = features.m;
  batch.n = features.n;
  const int fn = padded_feature_count(config.hidden, features.node_width);
  const int fe = padded_feature_count(config.hidden, features.edge_width);
  const Dims d = dims_of(batch);
  batch.node_inputs = Tensor2(d.node_rows(), fn, 0.0);
  batch.edge_inputs = Tensor2(d.edge_rows(), fe, 0.0);
  for (int r = 0; r < features.m + features.n; ++r)
    for (int c = 0; c < features.node_width; ++c)
      batch.node_inputs.at(r, c) = features.node_at(r, c);
  for (int r = 0; r < features.m * features.n; ++r)
    for (int c = 0; c < features.edge_width; ++c)
      batch.edge_inputs.at(r, c) = features.edge_at(r, c);
  return batch;
}

double training_loss_and_grads(GcnNetwork& net, const GraphBatch& batch) {
  if (!batch.has_labels) throw DomainError("training requires labels in the batch");
  NetCaches caches;
  forward_train(net, batch, caches);
  const double loss = head_loss(net, batch, caches);
  backward_from_head(net, batch, caches, head_loss_backward(net, batch, caches));
  return loss;
}

double training_loss(GcnNetwork& net, const GraphBatch& batch) {
  if (!batch.has_labels) throw DomainError("training requires labels in the batch");
  NetCaches caches;
  forward_train(net, batch, caches);
  return head_loss(net, batch, caches);
}

namespace {

std::pair<double, double> eval_losses(const GcnNetwork& node_net, const GcnNetwork& edge_net,
                                      const Dataset& set, int batch_size) {
  if (set.entries.empty())
    return {std::numeric_limits<double>::quiet_NaN(),
            std::numeric_limits<double>::quiet_NaN()};
  double node_total = 0.0;
  double edge_total = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < set.entries.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(set.entries.size(), start + batch_size);
    std::vector<const DatasetEntry*> items;
    for (std::size_t k = start; k < end; ++k) items.push_back(&set.entries[k]);
    const GraphBatch nb = make_graph_batch(items, node_net.config, true);
    const Tensor2 node_out = node_net.infer(nb);
    std::vector<double> p(node_out.data.begin(), node_out.data.end());
    const GraphBatch ebatch = make_graph_batch(items, edge_net.config, true);
    const Tensor2 edge_out = edge_net.infer(ebatch);
    const double w = static_cast<double>(end - start);
    node_total += loss_node(p, nb.node_labels) * w;
    edge_total += loss_edge(edge_out, ebatch.edge_labels) * w;
    count += end - start;
  }
  return {node_total / count, edge_total / count};
}

}  // namespace

TrainResult train_networks(const Dataset& train_set, const Dataset& val_set,
                           const ModelConfig& config, const TrainHyper& hyper) {
  config.validate();
  if (train_set.entries.empty()) throw DomainError("train_networks: empty training set");
  if (hyper.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (hyper.epochs < 0) throw ConfigError("epochs must be >= 0");

  TrainResult result;
  result.node_net = make_network(config, HeadKind::node);
  result.edge_net = make_network(config, HeadKind::edge);

  GcnNetwork node_net = result.node_net;
  GcnNetwork edge_net = result.edge_net;
  const std::vector<Param*> node_params = node_net.params();
  const std::vector<Param*> edge_params = edge_net.params();
  AdamState adam_node;
  adam_node.learning_rate = hyper.learning_rate;
  adam_node.init(node_params);
  AdamState adam_edge;
  adam_edge.learning_rate = hyper.learning_rate;
  adam_edge.init(edge_params);

  double best_val_node = std::numeric_limits<double>::infinity();
  double best_val_edge = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    const auto batches =
        batch_iter(train_set, hyper.batch_size,
                   derive_seed(config.seed,
                               {seed_stream::train, static_cast<std::uint64_t>(epoch)}));
    double node_total = 0.0;
    double edge_total = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<const DatasetEntry*> items;
      items.reserve(batches[b].size());
      for (std::size_t idx : batches[b]) items.push_back(&train_set.entries[idx]);

      const GraphBatch nb = make_graph_batch(items, node_net.config, true);
      zero_grads(node_net);
      const double ln = training_loss_and_grads(node_net, nb);
      const GraphBatch ebatch = make_graph_batch(items, edge_net.config, true);
      zero_grads(edge_net);
      const double le = training_loss_and_grads(edge_net, ebatch);
      if (!std::isfinite(ln) || !std::isfinite(le)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(b) + " (node " + fmt_double(ln) +
                            ", edge " + fmt_double(le) + ")");
      }
      adam_step(node_params, adam_node);
      adam_step(edge_params, adam_edge);

      const double w = static_cast<double>(items.size());
      node_total += ln * w;
      edge_total += le * w;
      seen += items.size();
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_node = node_total / static_cast<double>(seen);
    stats.train_edge = edge_total / static_cast<double>(seen);
    const auto [vn, ve] = eval_losses(node_net, edge_net, val_set, hyper.batch_size);
    stats.val_node = vn;
    stats.val_edge = ve;
    result.history.push_back(stats);

    if (!val_set.entries.empty()) {
      if (vn < best_val_node) {
        best_val_node = vn;
        result.node_net = node_net;
        result.best_epoch_node = epoch;
      }
      if (ve < best_val_edge) {
        best_val_edge = ve;
        result.edge_net = edge_net;
        result.best_epoch_edge = epoch;
      }
    }
  }

  if (val_set.entries.empty() && hyper.epochs > 0) {
    result.node_net = std::move(node_net);
    result.edge_net = std::move(edge_net);
  }
  return result;
}

void Prediction::validate() const {
  if (static_cast<int>(p_node.size()) != m) throw ValidationError("p_node length != m");
  if (p_edge.rows != m || p_edge.cols != n) throw ValidationError("p_edge shape != m×n");
  for (double p : p_node) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("p_node entries must lie in (0,1)");
  }
  for (int j = 0; j < n; ++j) {
    double col = 0.0;
    for (int i = 0; i < m; ++i) {
      const double p = p_edge.at(i, j);
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p_edge entries must lie in [0,1]");
      col += p;
    }
    if (std::fabs(col - 1.0) > 1e-9)
      throw ValidationError("p_edge column " + std::to_string(j) + " does not sum to 1");
  }
}

Prediction predict(const Instance& inst, const GcnNetwork& node_net,
                   const GcnNetwork& edge_net) {
  if (node_net.config.variant != edge_net.config.variant) {
    throw ConfigError("node and edge networks were trained on different feature variants");
  }
  if (node_net.head != HeadKind::node || edge_net.head != HeadKind::edge) {
    throw ConfigError("predict requires (node-head, edge-head) networks in that order");
  }
  const GraphFeatures gf = extract_features(inst, node_net.config.variant);
  const Tensor2 node_out = node_net.infer(make_graph_batch(gf, node_net.config));
  const Tensor2 edge_out = edge_net.infer(make_graph_batch(gf, edge_net.config));

  Prediction pred;
  pred.m = inst.m;
  pred.n = inst.n;
  pred.p_node.assign(node_out.data.begin(), node_out.data.end());
  pred.p_edge = edge_out;
  pred.validate();
  return pred;
}

namespace {

json tensor_to_json(const std::string& name, int rows, int cols,
                    const std::vector<double>& data) {
  json doc;
  doc["name"] = name;
  doc["rows"] = rows;
  doc["cols"] = cols;
  doc["data"] = data;
  return doc;
}

}  // namespace

std::string save_checkpoint(const GcnNetwork& net) {
  json doc;
  doc["schema"] = 1;
  doc["kind"] = "checkpoint";
  doc["head"] = net.head == HeadKind::node ? "node" : "edge";
  doc["config"] = {{"hidden", net.config.hidden},
                   {"l_gcn", net.config.l_gcn},
                   {"l_mlp", net.config.l_mlp},
                   {"variant", to_string(net.config.variant)},
                   {"delta", net.config.delta},
                   {"seed", net.config.seed}};
  json tensors = json::array();
  auto& mutable_net = const_cast<GcnNetwork&>(net);
  for (Param* p : mutable_net.params()) {
    tensors.push_back(tensor_to_json(p->name, p->value.rows, p->value.cols, p->value.data));
  }
  for (std::size_t l = 0; l < net.convs.size(); ++l) {
    const auto& layer = net.convs[l];
    const std::string base = "conv" + std::to_string(l);
    auto running = [&](const std::string& name, const std::vector<double>& v) {
      tensors.push_back(tensor_to_json(name, 1, static_cast<int>(v.size()), v));
    };
    running(base + ".bn_edge.running_mean", layer.bn_edge.running_mean);
    running(base + ".bn_edge.running_var", layer.bn_edge.running_var);
    running(base + ".bn_node.running_mean", layer.bn_node.running_mean);
    running(base + ".bn_node.running_var", layer.bn_node.running_var);
  }
  doc["tensors"] = std::move(tensors);
  return doc.dump(1) + "\n";
}

GcnNetwork load_checkpoint(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CheckpointError(std::string("malformed checkpoint document: ") + e.what());
  }
  try {
    if (doc.at("schema").get<int>() != 1)
      throw CheckpointError("unsupported checkpoint schema version");
    const std::string head_s = doc.at("head").get<std::string>();
    if (head_s != "node" && head_s != "edge")
      throw CheckpointError("unknown head kind '" + head_s + "'");
    const HeadKind head = head_s == "node" ? HeadKind::node : HeadKind::edge;
    const json& cfg = doc.at("config");
    ModelConfig config;
    config.hidden = cfg.at("hidden").get<int>();
    config.l_gcn = cfg.at("l_gcn").get<int>();
    config.l_mlp = cfg.at("l_mlp").get<int>();
    config.variant = variant_from_string(cfg.at("variant").get<std::string>());
    config.delta = cfg.at("delta").get<double>();
    config.seed = cfg.at("seed").get<std::uint64_t>();

    GcnNetwork net = make_network(config, head);

    std::map<std::string, const json*> by_name;
    for (const auto& t : doc.at("tensors")) {
      by_name[t.at("name").get<std::string>()] = &t;
    }
    auto load_into = [&](const std::string& name, Tensor2& dst) {
      auto it = by_name.find(name);
      if (it == by_name.end())
        throw CheckpointError("checkpoint is missing tensor '" + name + "'");
      const json& t = *it->second;
      const int rows = t.at("rows").get<int>();
      const int cols = t.at("cols").get<int>();
      if (rows != dst.rows || cols != dst.cols) {
        throw CheckpointError("tensor '" + name + "' has shape " + std::to_string(rows) +
                              "x" + std::to_string(cols) + ", expected " +
                              std::to_string(dst.rows) + "x" + std::to_string(dst.cols));
      }
      const auto data = t.at("data").get<std::vector<double>>();
      if (data.size() != dst.size())
        throw CheckpointError("tensor '" + name + "' data length mismatch");
      dst.data = data;
      by_name.erase(it);
    };
    auto load_running = [&](const std::string& name, std::vector<double>& dst) {
      Tensor2 tmp(1, static_cast<int>(dst.size()));
      load_into(name, tmp);
      dst = tmp.data;
    };

    for (Param* p : net.params()) load_into(p->name, p->value);
    for (std::size_t l = 0; l < net.convs.size(); ++l) {
      auto& layer = net.convs[l];
      const std::string base = "conv" + std::to_string(l);
      load_running(base + ".bn_edge.running_mean", layer.bn_edge.running_mean);
      load_running(base + ".bn_edge.running_var", layer.bn_edge.running_var);
      load_running(base + ".bn_node.running_mean", layer.bn_node.running_mean);
      load_running(base + ".bn_node.running_var", layer.bn_node.running_var);
    }
    if (!by_name.empty()) {
      throw CheckpointError("checkpoint carries unexpected tensor '" +
                            by_name.begin()->first + "'");
    }
    return net;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint document: ") + e.what());
  }
}

std::string history_csv(const std::vector<EpochStats>& history) {
  std::ostringstream os;
  os << "epoch,train_loss_node,train_loss_edge,val_loss_node,val_loss_edge\n";
  for (const auto& s : history) {
    os << s.epoch << ',' << fmt_double(s.train_node) << ',' << fmt_double(s.train_edge) << ','
       << fmt_double(s.val_node) << ',' << fmt_double(s.val_edge) << '\n';
  }
  return os.str();
}

}  // namespace moflp
