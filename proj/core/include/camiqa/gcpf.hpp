#pragma once

// Camera-parameter fusion: one visual node plus seven parameter nodes joined
// by photographic relationships, two graph-attention layers, readout at the
// visual node.

#include "camiqa/nn.hpp"
#include "camiqa/types.hpp"

#include <utility>
#include <vector>

namespace camiqa {

inline constexpr int kGraphNodes = 8;  // 0 = visual, 1 + Param index otherwise

using Edge = std::pair<int, int>;  // undirected, first < second
using AdjacencyMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// The 14 undirected edges: visual to every parameter, the exposure triangle
/// (aperture, shutter, iso), the post-processing clique (contrast, saturation,
/// sharpness) and white balance to saturation.
std::vector<Edge> build_edges();

/// Symmetric n x n neighbourhood mask, optionally with self-loops.
AdjacencyMask adjacency_mask(const std::vector<Edge>& edges, int n, bool self_loops = true);

/// Neighbours of one node, excluding itself, ascending.
std::vector<int> neighbors(const std::vector<Edge>& edges, int node);

struct GatLayerConfig {
  int heads = 1;
  int in_dim = 0;
  int out_per_head = 0;
  bool concat = true;
  bool activation = true;  // ELU on the output

  int out_dim() const { return concat ? heads * out_per_head : out_per_head; }
};

/// Multi-head graph attention: e_ij = LeakyReLU_0.2(a_dst . Wh_i + a_src . Wh_j),
/// softmax over the neighbourhood of i (self included), h'_i = sum_j alpha_ij Wh_j.
/// Heads are concatenated or averaged, then a bias and optional ELU.
class GatLayer {
 public:
  GatLayer() = default;
  GatLayer(nn::ParameterStore& store, const std::string& name, const GatLayerConfig& cfg, Rng& rng);

  /// `attention` receives one n x n matrix per head.
  ad::Var operator()(ad::Tape& tape, ad::Var x, const AdjacencyMask& mask,
                     std::vector<ad::Matrix>* attention = nullptr) const;

  GatLayerConfig cfg;
  std::vector<ad::Parameter*> weight;  // in_dim x out_per_head per head
  std::vector<ad::Parameter*> att_dst; // out_per_head x 1
  std::vector<ad::Parameter*> att_src;
  ad::Parameter* bias = nullptr;
};

/// Row 0 = F_q W_v + b_v; row 1+i = p_i * w_i + b_i.
class NodeEncoder {
 public:
  NodeEncoder() = default;
  NodeEncoder(nn::ParameterStore& store, const std::string& name, int channels, int dim, Rng& rng);

  ad::Var operator()(ad::Tape& tape, ad::Var f_q, const std::array<double, kNumParams>& p_norm) const;

  nn::Linear visual;
  ad::Parameter* param_weight = nullptr;  // 7 x D
  ad::Parameter* param_bias = nullptr;    // 7 x D
};

struct GcpfTrace {
  ad::Matrix nodes;
  std::vector<ad::Matrix> layer1_attention;
  std::vector<ad::Matrix> layer2_attention;
};

class ParameterFusion {
 public:
  ParameterFusion() = default;
  /// dim = D; layer 1 uses `heads` heads of D/heads each.
  ParameterFusion(nn::ParameterStore& store, const std::string& name, int channels, int dim,
                  int heads, Rng& rng);

  /// F_gcn (1 x C) from F_q (1 x C) and normalized parameters.
  ad::Var operator()(ad::Tape& tape, ad::Var f_q, const std::array<double, kNumParams>& p_norm,
                     GcpfTrace* trace = nullptr) const;

  NodeEncoder encoder;
  GatLayer layer1;
  GatLayer layer2;
  nn::Linear readout;
  AdjacencyMask mask;
};

}  // namespace camiqa
