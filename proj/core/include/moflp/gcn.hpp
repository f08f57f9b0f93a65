#ifndef MOFLP_GCN_HPP
#define MOFLP_GCN_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "moflp/dataset.hpp"
#include "moflp/tensor.hpp"

namespace moflp {

/// Architecture hyperparameters shared by both networks of the dual model.
struct ModelConfig {
  int hidden = 128;  ///< embedding width H for nodes and edges
  int l_gcn = 3;     ///< graph convolution layers
  int l_mlp = 3;     ///< classifier layers
  FeatureVariant variant = FeatureVariant::A;
  double delta = 1e-6;  ///< gate denominator offset
  std::uint64_t seed = 0;

  void validate() const;
};

/// Smallest feature count >= raw_features that divides hidden evenly. Raw
/// feature matrices are zero-padded to this count so the concatenated
/// per-feature blocks fill the hidden width exactly; a pad feature
/// contributes only its learnable bias block. Throws ConfigError when no such
/// count exists (raw_features > hidden).
int padded_feature_count(int hidden, int raw_features);

/// Which prediction head a network carries.
enum class HeadKind { node, edge };

/// Per-feature embedding: every scalar input feature k has its own linear map
/// to a block of width hidden / features; blocks are concatenated in feature
/// order.
struct EmbedBlock {
  int features = 0;
  int block = 0;
  std::vector<Param> weight;  // per feature, 1×block
  std::vector<Param> bias;    // per feature, 1×block
};

/// One residual gated graph convolution layer (edge update, sigmoid gate from
/// pre-update edge embeddings, gated node update; both paths batch-normalized
/// with ReLU and a residual connection).
struct ConvLayer {
  Param U, V;  // edge path, H×H
  Param P, Q;  // node path, H×H
  BatchNorm bn_edge;
  BatchNorm bn_node;
};

/// MLP classifier: (l_mlp - 1) hidden layers H→H with ReLU, then H→1.
struct MlpHead {
  std::vector<Param> W;
  std::vector<Param> b;
};

/// Same-scale graphs stacked for one forward pass. Node rows per graph order
/// facilities first; edge rows are facility-major. Edge labels (and the edge
/// head's softmax) use an m × (graphs·n) layout with one column per
/// (graph, customer).
struct GraphBatch {
  int graphs = 0;
  int m = 0;
  int n = 0;
  Tensor2 node_inputs;  // (graphs·(m+n)) × padded node features
  Tensor2 edge_inputs;  // (graphs·m·n) × padded edge features
  bool has_labels = false;
  std::vector<double> node_labels;  // graphs·m, facility-major
  Tensor2 edge_labels;              // m × (graphs·n)
};

GraphBatch make_graph_batch(const std::vector<const DatasetEntry*>& items,
                            const ModelConfig& config, bool with_labels);
GraphBatch make_graph_batch(const GraphFeatures& features, const ModelConfig& config);

/// Layer-level building blocks of the network, exposed for direct testing and
/// inspection. Row conventions match GraphBatch.
namespace layers {

struct Dims {
  int graphs = 0;
  int m = 0;
  int n = 0;

  int node_rows() const { return graphs * (m + n); }
  int edge_rows() const { return graphs * m * n; }
  int fac_row(int g, int i) const { return g * (m + n) + i; }
  int cus_row(int g, int j) const { return g * (m + n) + m + j; }
  int edge_row(int g, int i, int j) const { return (g * m + i) * n + j; }
};

Tensor2 embed_forward(const EmbedBlock& eb, const Tensor2& x);
void embed_backward(EmbedBlock& eb, const Tensor2& x, const Tensor2& dout);

/// Sigmoid gates of the pre-update edge embeddings plus the per-node gate
/// denominators (sum over the neighborhood + delta); the gate weight of edge
/// (i,j) seen from node i is sig(e) / d_fac(i) elementwise.
void compute_gates(const Tensor2& edges, const Dims& d, double delta, Tensor2& sig,
                   Tensor2& d_fac, Tensor2& d_cus);

struct ConvCache {
  Tensor2 node_sums;
  Tensor2 sig;
  Tensor2 d_fac, d_cus;
  Tensor2 agg;
  Tensor2 edge_pre_relu;
  Tensor2 node_pre_relu;
  BnCache bn_edge;
  BnCache bn_node;
};

void conv_forward_train(ConvLayer& layer, const Dims& d, double delta, const Tensor2& n_in,
                        const Tensor2& e_in, ConvCache& cache, Tensor2& n_out,
                        Tensor2& e_out);
void conv_forward_eval(const ConvLayer& layer, const Dims& d, double delta,
                       const Tensor2& n_in, const Tensor2& e_in, Tensor2& n_out,
                       Tensor2& e_out);
void conv_backward(ConvLayer& layer, const Dims& d, const Tensor2& n_in, const Tensor2& e_in,
                   const ConvCache& cache, const Tensor2& dn_out, const Tensor2& de_out,
                   Tensor2& dn_in, Tensor2& de_in);

struct MlpCache {
  std::vector<Tensor2> inputs;
  std::vector<Tensor2> pre;
};

Tensor2 mlp_forward(const MlpHead& mlp, const Tensor2& x, MlpCache* cache);
Tensor2 mlp_backward(MlpHead& mlp, const Tensor2& dout, const MlpCache& cache);

}  // namespace layers

/// One of the two networks of the dual model: embedding block, conv stack and
/// one prediction head over a shared bipartite input encoding.
struct GcnNetwork {
  ModelConfig config;
  HeadKind head = HeadKind::node;
  EmbedBlock node_embed;
  EmbedBlock edge_embed;
  std::vector<ConvLayer> convs;
  MlpHead mlp;

  /// Learnable tensors in fixed declaration order.
  std::vector<Param*> params();

  /// Eval-mode forward (running batch-norm statistics); thread-safe on a
  /// const network. Returns the head output: sigmoid probabilities
  /// (graphs·m × 1) for the node head, column-stochastic m × (graphs·n) for
  /// the edge head.
  Tensor2 infer(const GraphBatch& batch) const;
};

/// Fresh network with uniform ±sqrt(1/fan_in) weights, zero biases,
/// batch-norm gamma 1 / beta 0; deterministic per (config.seed, head).
GcnNetwork make_network(const ModelConfig& config, HeadKind head);

/// Mean squared error between predicted and target selection probabilities.
double loss_node(const std::vector<double>& p_hat, const std::vector<double>& p_label);

/// Mean over customers (columns) of the cross entropy between target and
/// predicted assignment distributions, with a 1e-12 floor inside the log.
double loss_edge(const Tensor2& p_hat, const Tensor2& p_label);

/// Train-mode forward + backward on one batch: fills parameter gradients and
/// returns the loss. The batch must carry labels.
double training_loss_and_grads(GcnNetwork& net, const GraphBatch& batch);
/// Train-mode forward only (batch statistics, no gradient accumulation).
double training_loss(GcnNetwork& net, const GraphBatch& batch);

struct TrainHyper {
  int batch_size = 20;
  double learning_rate = 1e-3;
  int epochs = 300;
};

struct EpochStats {
  int epoch = 0;
  double train_node = 0.0;
  double train_edge = 0.0;
  double val_node = 0.0;
  double val_edge = 0.0;
};

struct TrainResult {
  GcnNetwork node_net;
  GcnNetwork edge_net;
  std::vector<EpochStats> history;
  int best_epoch_node = -1;  // -1 when no validation set was given
  int best_epoch_edge = -1;
};

/// Trains the two networks independently (separate parameters and Adam
/// states) on their respective losses. Returns the parameters with the best
/// validation loss per network (final parameters when val is empty).
/// Deterministic per config.seed. Throws TrainingError on a non-finite loss,
/// naming epoch and batch.
TrainResult train_networks(const Dataset& train_set, const Dataset& val_set,
                           const ModelConfig& config, const TrainHyper& hyper);

/// Dual-model output for one instance.
struct Prediction {
  int m = 0;
  int n = 0;
  std::vector<double> p_node;  // m, each in (0,1)
  Tensor2 p_edge;              // m×n, columns sum to 1

  void validate() const;
};

/// Full eval-mode forward of both networks on one instance.
Prediction predict(const Instance& inst, const GcnNetwork& node_net,
                   const GcnNetwork& edge_net);

/// Checkpoint document: schema version, config, head kind and all named
/// tensors with shapes. Round-trips at full precision.
std::string save_checkpoint(const GcnNetwork& net);
GcnNetwork load_checkpoint(const std::string& text);

std::string history_csv(const std::vector<EpochStats>& history);

}  // namespace moflp

#endif  // MOFLP_GCN_HPP
