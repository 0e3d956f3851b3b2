// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridattn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "gridattn/error.hpp"

namespace gridattn {

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kGcn: return "gcn";
    case LayerKind::kSage: return "sage";
    case LayerKind::kGat: return "gat";
    case LayerKind::kGatV2: return "gatv2";
    case LayerKind::kTransformer: return "transformer";
    case LayerKind::kTag: return "tag";
    case LayerKind::kCheb: return "cheb";
    case LayerKind::kAppnp: return "appnp";
  }
  return "unknown";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (LayerKind k : kAllLayerKinds)
    if (layer_kind_name(k) == name) return k;
  throw ContractError("convolutions::parse_layer_kind: unknown layer kind '" + std::string(name) + "'");
}

bool is_attention(LayerKind kind) {
  return kind == LayerKind::kGat || kind == LayerKind::kGatV2 || kind == LayerKind::kTransformer;
}

std::size_t LayerConfig::output_width() const {
  if (kind == LayerKind::kAppnp) return in_dim;
  if (is_attention(kind) && concat_heads) return heads * out_dim;
  return out_dim;
}

void LayerConfig::validate() const {
  const std::string where = "convolutions::" + std::string(layer_kind_name(kind)) + ": ";
  if (in_dim == 0 || (kind != LayerKind::kAppnp && out_dim == 0)) throw ContractError(where + "dimensions must be positive");
  if (heads == 0) throw ContractError(where + "heads must be >= 1");
  if (kind == LayerKind::kAppnp && !(teleport >= 0.0 && teleport <= 1.0)) {
    throw ContractError(where + "teleport must lie in [0, 1)");
  }
}

const DiffTensor& LayerParams::get(std::string_view name) const {
  for (const auto& [n, t] : groups)
    if (n == name) return t;
  throw ContractError("convolutions::LayerParams: no parameter group '" + std::string(name) + "'");
}

std::vector<DiffTensor> LayerParams::tensors() const {
  std::vector<DiffTensor> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(g.second);
  return out;
}

namespace {

Matrix glorot(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(fan_in, fan_out);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

std::string indexed(std::string_view base, std::size_t k) { return std::string(base) + "_" + std::to_string(k); }

DiffTensor activate(Tape& tape, const DiffTensor& x, Activation a) {
  return a == Activation::kRelu ? tape.relu(x) : x;
}

void check_input(const DiffTensor& h, const GraphOperators& ops, const LayerConfig& cfg) {
  if (h.rows() != ops.size() || h.cols() != cfg.in_dim) {
    throw DimensionError("convolutions::" + std::string(layer_kind_name(cfg.kind)) + ": input " + h.value().shape_str() +
                         " does not match (" + std::to_string(ops.size()) + "x" + std::to_string(cfg.in_dim) + ")");
  }
}

DiffTensor combine_heads(Tape& tape, const std::vector<DiffTensor>& heads, bool concat) {
  if (heads.size() == 1) return heads.front();
  if (concat) return tape.concat_cols(heads);
  DiffTensor acc = heads.front();
  for (std::size_t k = 1; k < heads.size(); ++k) acc = tape.add(acc, heads[k]);
  return tape.scalar_mul(1.0 / static_cast<double>(heads.size()), acc);
}

}  // namespace

LayerParams init_layer_params(const LayerConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  LayerParams p;
  auto add = [&](std::string name, Matrix m) { p.groups.emplace_back(std::move(name), DiffTensor::parameter(std::move(m))); };
  const std::size_t in = cfg.in_dim, out = cfg.out_dim;
  switch (cfg.kind) {
    case LayerKind::kGcn:
      add("weight", glorot(in, out, rng));
      add("bias", Matrix(1, out));
      break;
    case LayerKind::kSage:
      add("pool_weight", glorot(in, in, rng));
      add("pool_bias", Matrix(1, in));
      add("weight", glorot(2 * in, out, rng));
      break;
    case LayerKind::kGat:
      for (std::size_t k = 0; k < cfg.heads; ++k) {
        add(indexed("weight", k), glorot(in, out, rng));
        add(indexed("att_dst", k), glorot(out, 1, rng));
        add(indexed("att_src", k), glorot(out, 1, rng));
        add(indexed("bias", k), Matrix(1, out));
      }
      break;
    case LayerKind::kGatV2:
      for (std::size_t k = 0; k < cfg.heads; ++k) {
        add(indexed("weight_dst", k), glorot(in, out, rng));
        add(indexed("weight_src", k), glorot(in, out, rng));
        add(indexed("att", k), glorot(out, 1, rng));
        add(indexed("bias", k), Matrix(1, out));
      }
      break;
    case LayerKind::kTransformer:
      for (std::size_t k = 0; k < cfg.heads; ++k) {
        add(indexed("query", k), glorot(in, out, rng));
        add(indexed("key", k), glorot(in, out, rng));
        add(indexed("value", k), glorot(in, out, rng));
        add(indexed("bias", k), Matrix(1, out));
      }
      break;
    case LayerKind::kTag:
    case LayerKind::kCheb:
      for (std::size_t k = 0; k <= cfg.hops; ++k) add(indexed("weight", k), glorot(in, out, rng));
      break;
    case LayerKind::kAppnp:
      add("bias", Matrix(1, in));
      break;
  }
  return p;
}

GraphOperators::GraphOperators(WeightedGraph graph, const std::vector<LayerKind>& kinds, bool gcn_self_loops)
    : graph_(std::move(graph)) {
  auto uses = [&](LayerKind k) { return std::find(kinds.begin(), kinds.end(), k) != kinds.end(); };
  if (uses(LayerKind::kGcn)) gcn_adj_ = DiffTensor::constant(sym_normalize(graph_, gcn_self_loops).matrix);
  if (uses(LayerKind::kAppnp)) appnp_adj_ = DiffTensor::constant(sym_normalize(graph_, true).matrix);
  if (uses(LayerKind::kTag)) tag_adj_ = DiffTensor::constant(sym_normalize(graph_, false).matrix);
  if (uses(LayerKind::kCheb)) cheb_lap_ = DiffTensor::constant(scaled_laplacian(graph_).matrix);
  attention_mask_ = graph_.neighbor_mask(true);
  neighbor_mask_ = graph_.neighbor_mask(false);
}

namespace {

const DiffTensor& require(const std::optional<DiffTensor>& op, std::string_view what) {
  if (!op) throw ContractError("convolutions::GraphOperators: " + std::string(what) + " was not built for this model");
  return *op;
}

}  // namespace

const DiffTensor& GraphOperators::gcn_adjacency() const { return require(gcn_adj_, "GCN adjacency"); }
const DiffTensor& GraphOperators::appnp_adjacency() const { return require(appnp_adj_, "APPNP adjacency"); }
const DiffTensor& GraphOperators::tag_adjacency() const { return require(tag_adj_, "TAG adjacency"); }
const DiffTensor& GraphOperators::scaled_laplacian_op() const { return require(cheb_lap_, "scaled Laplacian"); }

DiffTensor gcn_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                       const LayerConfig& cfg) {
  check_input(h, ops, cfg);
  DiffTensor msg = tape.matmul(h, p.get("weight"));
  DiffTensor agg = tape.matmul(ops.gcn_adjacency(), msg);
  return activate(tape, tape.add_row_broadcast(agg, p.get("bias")), cfg.activation);
}

DiffTensor sage_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                        const LayerConfig& cfg) {
  check_input(h, ops, cfg);
  const Mask& mask = ops.neighbor_mask();
  for (std::size_t v = 0; v < mask.size(); ++v) {
    if (mask.row_count(v) == 0) {
      throw DegeneracyError("convolutions::sage: node " + ops.graph().node_ids()[v] + " has an empty neighbourhood");
    }
  }
  DiffTensor pooled_in = tape.relu(tape.add_row_broadcast(tape.matmul(h, p.get("pool_weight")), p.get("pool_bias")));
  DiffTensor pooled = tape.row_max_pool(pooled_in, mask);
  const DiffTensor parts[] = {h, pooled};
  return activate(tape, tape.matmul(tape.concat_cols(parts), p.get("weight")), cfg.activation);
}

namespace {

// Shared tail of the three attention kinds: masked softmax over scores,
// weighted sum of messages, bias.
DiffTensor attend(Tape& tape, const DiffTensor& scores, const DiffTensor& messages, const DiffTensor& bias,
                  const GraphOperators& ops, SnapshotSink* snapshots, std::size_t layer, std::size_t head) {
  DiffTensor alpha = tape.masked_row_softmax(scores, ops.attention_mask());
  if (snapshots) snapshots->push_back({layer, head, alpha.value()});
  return tape.add_row_broadcast(tape.matmul(alpha, messages), bias);
}

}  // namespace

DiffTensor gat_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                       const LayerConfig& cfg, SnapshotSink* snapshots, std::size_t layer_index) {
  check_input(h, ops, cfg);
  std::vector<DiffTensor> heads;
  for (std::size_t k = 0; k < cfg.heads; ++k) {
    DiffTensor z = tape.matmul(h, p.get(indexed("weight", k)));
    DiffTensor s_dst = tape.matmul(z, p.get(indexed("att_dst", k)));
    DiffTensor s_src = tape.matmul(z, p.get(indexed("att_src", k)));
    DiffTensor e = tape.leaky_relu(tape.pairwise_sum(s_dst, s_src));
    heads.push_back(attend(tape, e, z, p.get(indexed("bias", k)), ops, snapshots, layer_index, k));
  }
  return activate(tape, combine_heads(tape, heads, cfg.concat_heads), cfg.activation);
}

DiffTensor gatv2_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                         const LayerConfig& cfg, SnapshotSink* snapshots, std::size_t layer_index) {
  check_input(h, ops, cfg);
  std::vector<DiffTensor> heads;
  for (std::size_t k = 0; k < cfg.heads; ++k) {
    // W [h_v || h_u] = W_dst h_v + W_src h_u; the score is LeakyReLU(a^T of that).
    const DiffTensor& a = p.get(indexed("att", k));
    DiffTensor z_dst = tape.matmul(h, p.get(indexed("weight_dst", k)));
    DiffTensor z_src = tape.matmul(h, p.get(indexed("weight_src", k)));
    DiffTensor e = tape.leaky_relu(tape.pairwise_sum(tape.matmul(z_dst, a), tape.matmul(z_src, a)));
    heads.push_back(attend(tape, e, z_src, p.get(indexed("bias", k)), ops, snapshots, layer_index, k));
  }
  return activate(tape, combine_heads(tape, heads, cfg.concat_heads), cfg.activation);
}

DiffTensor transformer_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                               const LayerConfig& cfg, SnapshotSink* snapshots, std::size_t layer_index) {
  check_input(h, ops, cfg);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.out_dim));
  std::vector<DiffTensor> heads;
  for (std::size_t k = 0; k < cfg.heads; ++k) {
    DiffTensor q = tape.matmul(h, p.get(indexed("query", k)));
    DiffTensor key = tape.matmul(h, p.get(indexed("key", k)));
    DiffTensor v = tape.matmul(h, p.get(indexed("value", k)));
    DiffTensor scores = tape.scalar_mul(scale, tape.matmul(q, tape.transpose(key)));
    heads.push_back(attend(tape, scores, v, p.get(indexed("bias", k)), ops, snapshots, layer_index, k));
  }
  return activate(tape, combine_heads(tape, heads, cfg.concat_heads), cfg.activation);
}

DiffTensor tag_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                       const LayerConfig& cfg) {
  check_input(h, ops, cfg);
  DiffTensor power = h;
  DiffTensor acc = tape.matmul(power, p.get("weight_0"));
  if (cfg.hops > 0) {
    const DiffTensor& m = ops.tag_adjacency();
    for (std::size_t k = 1; k <= cfg.hops; ++k) {
      power = tape.matmul(m, power);
      acc = tape.add(acc, tape.matmul(power, p.get(indexed("weight", k))));
    }
  }
  return activate(tape, acc, cfg.activation);
}

DiffTensor cheb_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                        const LayerConfig& cfg) {
  check_input(h, ops, cfg);
  DiffTensor acc = tape.matmul(h, p.get("weight_0"));
  if (cfg.hops > 0) {
    const DiffTensor& lap = ops.scaled_laplacian_op();
    DiffTensor prev = h;
    DiffTensor cur = tape.matmul(lap, h);
    acc = tape.add(acc, tape.matmul(cur, p.get("weight_1")));
    for (std::size_t k = 2; k <= cfg.hops; ++k) {
      DiffTensor next = tape.sub(tape.scalar_mul(2.0, tape.matmul(lap, cur)), prev);
      acc = tape.add(acc, tape.matmul(next, p.get(indexed("weight", k))));
      prev = cur;
      cur = next;
    }
  }
  return activate(tape, acc, cfg.activation);
}

DiffTensor appnp_forward(Tape& tape, const DiffTensor& h0, const GraphOperators& ops, const LayerParams& p,
                         const LayerConfig& cfg) {
  check_input(h0, ops, cfg);
  const DiffTensor& a_hat = ops.appnp_adjacency();
  const double alpha = cfg.teleport;
  DiffTensor teleport = tape.scalar_mul(alpha, h0);
  DiffTensor h = h0;
  for (std::size_t k = 0; k < cfg.hops; ++k) {
    DiffTensor diffused = tape.scalar_mul(1.0 - alpha, tape.matmul(a_hat, h));
    h = tape.add_row_broadcast(tape.add(diffused, teleport), p.get("bias"));
    if (cfg.appnp_sigma) h = activate(tape, h, cfg.activation);
  }
  return h;
}

DiffTensor layer_forward(Tape& tape, const DiffTensor& h, const GraphOperators& ops, const LayerParams& p,
                         const LayerConfig& cfg, SnapshotSink* snapshots, std::size_t layer_index) {
  switch (cfg.kind) {
    case LayerKind::kGcn: return gcn_forward(tape, h, ops, p, cfg);
    case LayerKind::kSage: return sage_forward(tape, h, ops, p, cfg);
    case LayerKind::kGat: return gat_forward(tape, h, ops, p, cfg, snapshots, layer_index);
    case LayerKind::kGatV2: return gatv2_forward(tape, h, ops, p, cfg, snapshots, layer_index);
    case LayerKind::kTransformer: return transformer_forward(tape, h, ops, p, cfg, snapshots, layer_index);
    case LayerKind::kTag: return tag_forward(tape, h, ops, p, cfg);
    case LayerKind::kCheb: return cheb_forward(tape, h, ops, p, cfg);
    case LayerKind::kAppnp: return appnp_forward(tape, h, ops, p, cfg);
  }
  throw ContractError("convolutions::layer_forward: unknown layer kind");
}

std::size_t ModelSpec::readout_in() const { return layers.empty() ? input_dim : layers.back().output_width(); }

void ModelSpec::validate() const {
  if (horizon == 0) throw ContractError("convolutions::stack: horizon must be positive");
  std::size_t width = input_dim;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].validate();
    if (layers[i].in_dim != width) {
      throw DimensionError("convolutions::stack: layer " + std::to_string(i) + " expects width " +
                           std::to_string(layers[i].in_dim) + ", previous layer produces " + std::to_string(width));
    }
    width = layers[i].output_width();
  }
}

ModelSpec make_stack(const StackOptions& o) {
  ModelSpec spec;
  spec.input_dim = o.input_dim;
  spec.horizon = o.horizon;
  std::size_t width = o.input_dim;
  for (std::size_t i = 0; i < o.n_layers; ++i) {
    LayerConfig c;
    c.kind = o.kind;
    c.in_dim = width;
    c.out_dim = o.kind == LayerKind::kAppnp ? width : o.hidden;
    c.heads = is_attention(o.kind) ? o.heads : 1;
    c.hops = o.hops;
    c.teleport = o.teleport;
    c.activation = o.kind == LayerKind::kAppnp && !o.appnp_sigma ? Activation::kIdentity : Activation::kRelu;
    c.concat_heads = i + 1 < o.n_layers;
    c.gcn_self_loops = o.gcn_self_loops;
    c.appnp_sigma = o.appnp_sigma;
    spec.layers.push_back(c);
    width = c.output_width();
  }
  spec.validate();
  return spec;
}

GnnModel::GnnModel(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  std::mt19937_64 rng(seed);
  for (const auto& cfg : spec_.layers) layers_.push_back(init_layer_params(cfg, rng));
  readout_w_ = DiffTensor::parameter(glorot(spec_.readout_in(), spec_.horizon, rng));
  readout_b_ = DiffTensor::parameter(Matrix(1, spec_.horizon));
}

std::vector<DiffTensor> GnnModel::parameters() const {
  std::vector<DiffTensor> out;
  for (const auto& lp : layers_)
    for (const auto& g : lp.groups) out.push_back(g.second);
  out.push_back(readout_w_);
  out.push_back(readout_b_);
  return out;
}

std::vector<std::string> GnnModel::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    for (const auto& g : layers_[i].groups) out.push_back("layer" + std::to_string(i) + "." + g.first);
  out.push_back("readout.weight");
  out.push_back("readout.bias");
  return out;
}

bool GnnModel::has_attention() const {
  return std::any_of(spec_.layers.begin(), spec_.layers.end(), [](const LayerConfig& c) { return is_attention(c.kind); });
}

std::vector<LayerKind> GnnModel::kinds() const {
  std::vector<LayerKind> k;
  for (const auto& c : spec_.layers) k.push_back(c.kind);
  return k;
}

DiffTensor GnnModel::forward(Tape& tape, const DiffTensor& h0, const GraphOperators& ops, SnapshotSink* snapshots) const {
  if (h0.cols() != spec_.input_dim) {
    throw DimensionError("convolutions::stack: input width " + std::to_string(h0.cols()) + ", model expects " +
                         std::to_string(spec_.input_dim));
  }
  DiffTensor h = h0;
  for (std::size_t i = 0; i < layers_.size(); ++i) h = layer_forward(tape, h, ops, layers_[i], spec_.layers[i], snapshots, i);
  return tape.add_row_broadcast(tape.matmul(h, readout_w_), readout_b_);
}

std::vector<Matrix> GnnModel::snapshot_values() const {
  std::vector<Matrix> out;
  for (const auto& p : parameters()) out.push_back(p.value());
  return out;
}

void GnnModel::restore_values(const std::vector<Matrix>& values) {
  auto params = parameters();
  if (values.size() != params.size()) throw DimensionError("convolutions::restore_values: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!values[i].same_shape(params[i].value())) throw DimensionError("convolutions::restore_values: shape mismatch");
    params[i].mutable_value() = values[i];
  }
}

}  // namespace gridattn
