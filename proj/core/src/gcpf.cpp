#include "camiqa/gcpf.hpp"

#include "camiqa/error.hpp"

#include <algorithm>

namespace camiqa {

using ad::Var;

namespace {

constexpr int node_of(Param p) { return 1 + static_cast<int>(p); }

}  // namespace

std::vector<Edge> build_edges() {
  std::vector<Edge> e;
  for (auto p : kParams) e.emplace_back(0, node_of(p));
  const auto link = [&](Param a, Param b) {
    e.emplace_back(std::min(node_of(a), node_of(b)), std::max(node_of(a), node_of(b)));
  };
  link(Param::aperture, Param::shutter);
  link(Param::aperture, Param::iso);
  link(Param::shutter, Param::iso);
  link(Param::contrast, Param::saturation);
  link(Param::contrast, Param::sharpness);
  link(Param::saturation, Param::sharpness);
  link(Param::white_balance, Param::saturation);
  return e;
}

AdjacencyMask adjacency_mask(const std::vector<Edge>& edges, int n, bool self_loops) {
  AdjacencyMask m = AdjacencyMask::Constant(n, n, false);
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw DataError("edge endpoint out of range");
    m(a, b) = true;
    m(b, a) = true;
  }
  if (self_loops) {
    for (int i = 0; i < n; ++i) m(i, i) = true;
  }
  return m;
}

std::vector<int> neighbors(const std::vector<Edge>& edges, int node) {
  std::vector<int> out;
  for (const auto& [a, b] : edges) {
    if (a == node && b != node) out.push_back(b);
    if (b == node && a != node) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

GatLayer::GatLayer(nn::ParameterStore& store, const std::string& name, const GatLayerConfig& c,
                   Rng& rng)
    : cfg(c) {
  if (c.heads < 1 || c.in_dim < 1 || c.out_per_head < 1) {
    throw UsageError("graph attention layer needs positive sizes");
  }
  for (int h = 0; h < c.heads; ++h) {
    const std::string p = name + ".head" + std::to_string(h);
    weight.push_back(&store.add(p + ".weight", nn::xavier_uniform(c.in_dim, c.out_per_head, rng)));
    att_dst.push_back(&store.add(p + ".att_dst", nn::xavier_uniform(c.out_per_head, 1, rng)));
    att_src.push_back(&store.add(p + ".att_src", nn::xavier_uniform(c.out_per_head, 1, rng)));
  }
  bias = &store.add(name + ".bias", ad::Matrix::Zero(1, c.out_dim()));
}

Var GatLayer::operator()(ad::Tape& tape, Var x, const AdjacencyMask& mask,
                         std::vector<ad::Matrix>* attention) const {
  if (x.cols() != cfg.in_dim) {
    throw DataError("graph attention: expected " + std::to_string(cfg.in_dim) +
                    " input features, got " + std::to_string(x.cols()));
  }
  if (mask.rows() != x.rows() || mask.cols() != x.rows()) {
    throw DataError("graph attention: mask does not match node count");
  }
  std::vector<Var> outs;
  for (int h = 0; h < cfg.heads; ++h) {
    Var wh = ad::matmul(x, tape.param(*weight[h]));
    Var dst = ad::matmul(wh, tape.param(*att_dst[h]));
    Var src = ad::matmul(wh, tape.param(*att_src[h]));
    Var alpha = ad::masked_softmax_rows(ad::leaky_relu(ad::outer_sum(dst, src), 0.2), mask);
    if (attention) attention->push_back(alpha.value());
    outs.push_back(ad::matmul(alpha, wh));
  }
  Var y;
  if (cfg.concat) {
    y = outs.size() == 1 ? outs[0] : ad::concat_cols(outs);
  } else {
    y = outs[0];
    for (size_t i = 1; i < outs.size(); ++i) y = ad::add(y, outs[i]);
    if (outs.size() > 1) y = ad::scale(y, 1.0 / static_cast<double>(outs.size()));
  }
  y = ad::add_row(y, tape.param(*bias));
  return cfg.activation ? ad::elu(y) : y;
}

NodeEncoder::NodeEncoder(nn::ParameterStore& store, const std::string& name, int channels, int dim,
                         Rng& rng)
    : visual(store, name + ".visual", channels, dim, rng, false),
      param_weight(&store.add(name + ".param_weight",
                              nn::he_normal(static_cast<Eigen::Index>(kNumParams), dim, 1.0, rng))),
      param_bias(&store.add(name + ".param_bias",
                            ad::Matrix::Zero(static_cast<Eigen::Index>(kNumParams), dim))) {}

Var NodeEncoder::operator()(ad::Tape& tape, Var f_q, const std::array<double, kNumParams>& p_norm) const {
  Eigen::VectorXd p(static_cast<Eigen::Index>(kNumParams));
  for (size_t i = 0; i < kNumParams; ++i) p(static_cast<Eigen::Index>(i)) = p_norm[i];
  Var params = ad::add(ad::scale_rows(tape.param(*param_weight), p), tape.param(*param_bias));
  const std::array<Var, 2> parts{visual(tape, f_q), params};
  return ad::concat_rows(parts);
}

ParameterFusion::ParameterFusion(nn::ParameterStore& store, const std::string& name, int channels,
                                 int dim, int heads, Rng& rng)
    : encoder(store, name + ".encode", channels, dim, rng),
      layer1(store, name + ".gat1", GatLayerConfig{heads, dim, dim / heads, true, true}, rng),
      layer2(store, name + ".gat2", GatLayerConfig{1, dim, dim, false, false}, rng),
      readout(store, name + ".readout", dim, channels, rng, false),
      mask(adjacency_mask(build_edges(), kGraphNodes, true)) {
  if (heads < 1 || dim % heads != 0) throw UsageError("graph width must be divisible by head count");
}

Var ParameterFusion::operator()(ad::Tape& tape, Var f_q, const std::array<double, kNumParams>& p_norm,
                                GcpfTrace* trace) const {
  Var x = encoder(tape, f_q, p_norm);
  std::vector<ad::Matrix>* a1 = trace ? &trace->layer1_attention : nullptr;
  std::vector<ad::Matrix>* a2 = trace ? &trace->layer2_attention : nullptr;
  Var h1 = layer1(tape, x, mask, a1);
  Var h2 = layer2(tape, h1, mask, a2);
  if (trace) trace->nodes = h2.value();
  const int visual_row[] = {0};
  return readout(tape, ad::gather_rows(h2, visual_row));
}

}  // namespace camiqa
