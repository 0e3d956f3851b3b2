// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gridattn/autodiff.hpp"
#include "gridattn/graph.hpp"

namespace gridattn {

enum class LayerKind : std::uint8_t { kGcn, kSage, kGat, kGatV2, kTransformer, kTag, kCheb, kAppnp };

inline constexpr LayerKind kAllLayerKinds[] = {LayerKind::kGcn,         LayerKind::kSage, LayerKind::kGat,
                                               LayerKind::kGatV2,       LayerKind::kTransformer,
                                               LayerKind::kTag,         LayerKind::kCheb, LayerKind::kAppnp};

std::string_view layer_kind_name(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);
bool is_attention(LayerKind kind);

enum class Activation : std::uint8_t { kRelu, kIdentity };

struct LayerConfig {
  LayerKind kind = LayerKind::kGcn;
  std::size_t in_dim = 1;
  std::size_t out_dim = 1;     // per head for attention kinds; ignored by APPNP
  std::size_t heads = 1;       // GAT, GATv2, Transformer
  std::size_t hops = 1;        // TAG, Cheb, APPNP
  double teleport = 0.1;       // APPNP alpha
  Activation activation = Activation::kRelu;
  bool concat_heads = true;    // false: average heads (final conv layer)
  bool gcn_self_loops = true;  // GCN neighbourhood includes v itself
  bool appnp_sigma = false;    // apply `activation` inside every APPNP step

  /// Width of the layer output: heads * out_dim when concatenating heads,
  /// in_dim for APPNP, out_dim otherwise.
  std::size_t output_width() const;
  void validate() const;
};

/// Learnable tensors of one layer, as named groups ("weight", "att_src_0", ...).
struct LayerParams {
  std::vector<std::pair<std::string, DiffTensor>> groups;

  const DiffTensor& get(std::string_view name) const;
  std::vector<DiffTensor> tensors() const;
};

/// Glorot-uniform weights and attention vectors, zero biases.
LayerParams init_layer_params(const LayerConfig& cfg, std::mt19937_64& rng);

/// Row-stochastic attention over the neighbourhood (self-loop included) of
/// each node; alpha(v, u) is the weight node v gives to node u.
struct AttentionSnapshot {
  std::size_t layer = 0;
  std::size_t head = 0;
  Matrix alpha;
};

/// Graph-derived constants shared by every layer of a model.
class GraphOperators {
 public:
  GraphOperators() = default;
  /// Builds only what `kinds` need, so unused normalizations cannot fail.
  GraphOperators(WeightedGraph graph, const std::vector<LayerKind>& kinds, bool gcn_self_loops = true);

  const WeightedGraph& graph() const { return graph_; }
  std::size_t size() const { return graph_.size(); }
  const DiffTensor& gcn_adjacency() const;        // sym_norm with/without self loops
  const DiffTensor& appnp_adjacency() const;      // sym_norm with self loops
  const DiffTensor& tag_adjacency() const;        // sym_norm without self loops
  const DiffTensor& scaled_laplacian_op() const;  // for Cheb
  const Mask& attention_mask() const { return attention_mask_; }  // neighbours + self
  const Mask& neighbor_mask() const { return neighbor_mask_; }    // neighbours only

 private:
  WeightedGraph graph_;
  std::optional<DiffTensor> gcn_adj_, appnp_adj_, tag_adj_, cheb_lap_;
  Mask attention_mask_, neighbor_mask_;
};

using SnapshotSink = std::vector<AttentionSnapshot>;

DiffTensor gcn_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                       const LayerConfig& cfg);
DiffTensor sage_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                        const LayerConfig& cfg);
DiffTensor gat_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                       const LayerConfig& cfg, SnapshotSink* snapshots = nullptr, std::size_t layer_index = 0);
DiffTensor gatv2_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                         const LayerConfig& cfg, SnapshotSink* snapshots = nullptr, std::size_t layer_index = 0);
DiffTensor transformer_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                               const LayerConfig& cfg, SnapshotSink* snapshots = nullptr,
                               std::size_t layer_index = 0);
DiffTensor tag_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                       const LayerConfig& cfg);
DiffTensor cheb_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                        const LayerConfig& cfg);
DiffTensor appnp_forward(Tape& tape, const DiffTensor& h0, const GraphOperators& ops, const LayerParams& p,
                         const LayerConfig& cfg);

/// Dispatches on cfg.kind.
DiffTensor layer_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                         const LayerConfig& cfg, SnapshotSink* snapshots = nullptr, std::size_t layer_index = 0);

struct ModelSpec {
  std::vector<LayerConfig> layers;
  std::size_t input_dim = 1;
  std::size_t horizon = 48;

  /// Throws DimensionError when consecutive widths do not chain.
  void validate() const;
  std::size_t readout_in() const;
};

struct StackOptions {
  LayerKind kind = LayerKind::kGcn;
  std::size_t input_dim = 1;
  std::size_t hidden = 16;
  std::size_t n_layers = 1;
  std::size_t heads = 1;
  std::size_t hops = 1;
  double teleport = 0.1;
  std::size_t horizon = 48;
  bool gcn_self_loops = true;
  bool appnp_sigma = false;
};

/// Homogeneous stack: ReLU after every conv layer (identity inside APPNP
/// unless appnp_sigma), heads concatenated except on the last conv layer,
/// where they are averaged.
ModelSpec make_stack(const StackOptions& opts);

/// Conv layers followed by a linear readout applied at every node.
class GnnModel {
 public:
  GnnModel() = default;
  GnnModel(ModelSpec spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<LayerParams>& layer_params() const { return layers_; }
  std::vector<LayerParams>& layer_params() { return layers_; }
  const DiffTensor& readout_weight() const { return readout_w_; }
  const DiffTensor& readout_bias() const { return readout_b_; }

  /// All learnable tensors in a fixed order (layers, then readout).
  std::vector<DiffTensor> parameters() const;
  std::vector<std::string> parameter_names() const;

  bool has_attention() const;
  std::vector<LayerKind> kinds() const;

  DiffTensor forward(Tape& tape, const DiffTensor& h0, const GraphOperators& ops,
                     SnapshotSink* snapshots = nullptr) const;

  /// Deep copy of parameter values (for checkpoints).
  std::vector<Matrix> snapshot_values() const;
  void restore_values(const std::vector<Matrix>& values);

 private:
  ModelSpec spec_;
  std::vector<LayerParams> layers_;
  DiffTensor readout_w_, readout_b_;
};

}  // namespace gridattn
