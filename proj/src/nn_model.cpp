#include "nnv/nn_model.hpp"

#include <numeric>
#include <utility>

#include "json_util.hpp"

namespace nnv {

NeuralNetwork::NeuralNetwork(std::vector<Layer> layers, Activation activation,
                             double leaky_slope)
    : layers_(std::move(layers)),
      activation_(activation),
      leaky_slope_(leaky_slope) {
  if (layers_.empty()) {
    throw Error(ErrorKind::kInvalidInput, "network needs at least one layer");
  }
  for (size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    if (layer.b.size() != layer.W.rows()) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "bias length must equal weight rows in layer " +
                      std::to_string(i + 1));
    }
    if (i > 0 && layer.W.cols() != layers_[i - 1].W.rows()) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "layer " + std::to_string(i + 1) +
                      " input width does not chain with previous layer");
    }
  }
  n_phi_ = 0;
  for (size_t i = 0; i + 1 < layers_.size(); ++i) {
    hidden_sizes_.push_back(layers_[i].W.rows());
    n_phi_ += layers_[i].W.rows();
  }
}

ForwardTrace forward(const NeuralNetwork& net, const Eigen::VectorXd& x) {
  if (x.size() != net.input_dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "state has length " + std::to_string(x.size()) +
                    ", network expects " + std::to_string(net.input_dim()));
  }
  ForwardTrace trace;
  trace.v_phi.resize(net.total_neurons());
  trace.w_phi.resize(net.total_neurons());
  Eigen::VectorXd w = x;
  Eigen::Index at = 0;
  const auto& layers = net.layers();
  for (Eigen::Index i = 0; i < net.hidden_count(); ++i) {
    const Eigen::VectorXd v = layers[i].W * w + layers[i].b;
    w = v.unaryExpr([&](double s) { return net.activate_scalar(s); });
    trace.v_phi.segment(at, v.size()) = v;
    trace.w_phi.segment(at, v.size()) = w;
    at += v.size();
  }
  trace.u = layers.back().W * w + layers.back().b;
  return trace;
}

StackedForm build_stacked(const NeuralNetwork& net) {
  StackedForm sf;
  sf.n_x = net.input_dim();
  sf.n_u = net.output_dim();
  sf.n_phi = net.total_neurons();
  const Eigen::Index l = net.hidden_count();
  const auto& layers = net.layers();

  sf.N_ux = Eigen::MatrixXd::Zero(sf.n_u, sf.n_x);
  sf.N_uw = Eigen::MatrixXd::Zero(sf.n_u, sf.n_phi);
  sf.N_vx = Eigen::MatrixXd::Zero(sf.n_phi, sf.n_x);
  sf.N_vw = Eigen::MatrixXd::Zero(sf.n_phi, sf.n_phi);
  sf.bias_u = layers.back().b;
  sf.bias_v.resize(sf.n_phi);

  if (l == 0) {
    sf.N_ux = layers[0].W;
    return sf;
  }

  // Row offsets of each hidden layer inside the stacked vectors.
  std::vector<Eigen::Index> offset(l + 1, 0);
  for (Eigen::Index i = 0; i < l; ++i) {
    offset[i + 1] = offset[i] + layers[i].W.rows();
  }

  sf.N_vx.topRows(layers[0].W.rows()) = layers[0].W;
  sf.bias_v.head(layers[0].b.size()) = layers[0].b;
  for (Eigen::Index i = 1; i < l; ++i) {
    sf.N_vw.block(offset[i], offset[i - 1], layers[i].W.rows(),
                  layers[i].W.cols()) = layers[i].W;
    sf.bias_v.segment(offset[i], layers[i].b.size()) = layers[i].b;
  }
  sf.N_uw.rightCols(layers[l].W.cols()) = layers[l].W;
  return sf;
}

ForwardTrace eval_stacked(const StackedForm& sf, Activation act,
                          const Eigen::VectorXd& x, double leaky_slope) {
  if (x.size() != sf.n_x) {
    throw Error(ErrorKind::kDimensionMismatch, "state length != n_x");
  }
  // N_vw is strictly block-sub-diagonal, so n_phi sweeps of the fixed point
  // v = N_vx x + N_vw phi(v) + bias_v reach it exactly.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(sf.n_phi);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(sf.n_phi);
  for (Eigen::Index sweep = 0; sweep <= sf.n_phi; ++sweep) {
    v = sf.N_vx * x + sf.N_vw * w + sf.bias_v;
    w = v.unaryExpr([&](double s) { return activate(act, s, leaky_slope); });
  }
  ForwardTrace trace;
  trace.v_phi = v;
  trace.w_phi = w;
  trace.u = sf.N_ux * x + sf.N_uw * w + sf.bias_u;
  return trace;
}

std::pair<StackedForm, SectorData> fold_affine_neurons(
    const StackedForm& sf, const SectorData& sectors) {
  sectors.validate();
  if (sectors.size() != sf.n_phi) {
    throw Error(ErrorKind::kDimensionMismatch, "sectors length != n_phi");
  }
  std::vector<Eigen::Index> keep, affine;
  for (Eigen::Index i = 0; i < sf.n_phi; ++i) {
    (sectors.beta[i] > sectors.alpha[i] ? keep : affine).push_back(i);
  }
  if (affine.empty()) return {sf, sectors};

  const Eigen::Index n = sf.n_phi;
  const Eigen::Index nk = static_cast<Eigen::Index>(keep.size());

  // Affine neurons obey w_i = w*_i + alpha_i (v_i - v*_i) exactly. Substitute
  // into v = N_vx x + N_vw w + bias_v and solve for v; the coupling matrix is
  // strictly block-sub-diagonal, so I - J is invertible.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd r = sf.bias_v;
  Eigen::MatrixXd Sk = Eigen::MatrixXd::Zero(n, nk);
  for (Eigen::Index c = 0; c < nk; ++c) Sk(keep[c], c) = 1.0;
  for (Eigen::Index i : affine) {
    J.col(i) = sf.N_vw.col(i) * sectors.alpha[i];
    r += sf.N_vw.col(i) * (sectors.w_star[i] - sectors.alpha[i] * sectors.v_star[i]);
  }
  const Eigen::MatrixXd inv = (Eigen::MatrixXd::Identity(n, n) - J).lu()
                                  .solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd M_x = inv * sf.N_vx;
  const Eigen::MatrixXd M_k = inv * (sf.N_vw * Sk);
  const Eigen::VectorXd m0 = inv * r;

  // u picks up the affine neurons through N_uw.
  Eigen::MatrixXd U_aff = Eigen::MatrixXd::Zero(sf.n_u, n);
  Eigen::VectorXd u0 = sf.bias_u;
  for (Eigen::Index i : affine) {
    U_aff.col(i) = sf.N_uw.col(i) * sectors.alpha[i];
    u0 += sf.N_uw.col(i) * (sectors.w_star[i] - sectors.alpha[i] * sectors.v_star[i]);
  }

  StackedForm out;
  out.n_x = sf.n_x;
  out.n_u = sf.n_u;
  out.n_phi = nk;
  out.N_vx = Sk.transpose() * M_x;
  out.N_vw = Sk.transpose() * M_k;
  out.bias_v = Sk.transpose() * m0;
  out.N_ux = sf.N_ux + U_aff * M_x;
  out.N_uw = sf.N_uw * Sk + U_aff * M_k;
  out.bias_u = u0 + U_aff * m0;

  SectorData reduced;
  reduced.alpha.resize(nk);
  reduced.beta.resize(nk);
  reduced.v_star.resize(nk);
  reduced.w_star.resize(nk);
  reduced.v_lo.resize(nk);
  reduced.v_hi.resize(nk);
  for (Eigen::Index c = 0; c < nk; ++c) {
    reduced.alpha[c] = sectors.alpha[keep[c]];
    reduced.beta[c] = sectors.beta[keep[c]];
    reduced.v_star[c] = sectors.v_star[keep[c]];
    reduced.w_star[c] = sectors.w_star[keep[c]];
    reduced.v_lo[c] = sectors.v_lo.size()
                          ? sectors.v_lo[keep[c]]
                          : -std::numeric_limits<double>::infinity();
    reduced.v_hi[c] = sectors.v_hi.size()
                          ? sectors.v_hi[keep[c]]
                          : std::numeric_limits<double>::infinity();
  }
  return {out, reduced};
}

TransformedForm loop_transform(const StackedForm& sf_in,
                               const SectorData& sectors_in) {
  auto [sf, sectors] = fold_affine_neurons(sf_in, sectors_in);
  const Eigen::Index n = sf.n_phi;

  const Eigen::VectorXd mid = 0.5 * (sectors.alpha + sectors.beta);
  const Eigen::VectorXd rad = 0.5 * (sectors.beta - sectors.alpha);

  TransformedForm tf;
  tf.C1 = sf.N_uw * rad.asDiagonal();
  tf.C2 = sf.N_uw * mid.asDiagonal();
  tf.C3 = sf.N_vw * rad.asDiagonal();
  tf.C4 = sf.N_vw * mid.asDiagonal();

  // C4 inherits the strict block-sub-diagonal pattern of N_vw, hence is
  // nilpotent and I - C4 is always invertible.
  const Eigen::MatrixXd inv = (Eigen::MatrixXd::Identity(n, n) - tf.C4).lu()
                                  .solve(Eigen::MatrixXd::Identity(n, n));

  const Eigen::VectorXd r_v =
      sf.N_vw * (sectors.w_star - mid.cwiseProduct(sectors.v_star)) + sf.bias_v;

  tf.N_vx = inv * sf.N_vx;
  tf.N_vz = inv * tf.C3;
  tf.bias_v = inv * r_v;
  tf.N_ux = sf.N_ux + tf.C2 * tf.N_vx;
  tf.N_uz = tf.C1 + tf.C2 * tf.N_vz;
  tf.bias_u = sf.N_uw * (sectors.w_star - mid.cwiseProduct(sectors.v_star)) +
              sf.bias_u + tf.C2 * tf.bias_v;
  return tf;
}

Eigen::VectorXd normalize_nonlinearity(const SectorData& sectors,
                                       const Eigen::VectorXd& v,
                                       const Eigen::VectorXd& w) {
  const Eigen::Index n = sectors.size();
  if (v.size() != n || w.size() != n) {
    throw Error(ErrorKind::kDimensionMismatch, "v, w must have length n_phi");
  }
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double rad = 0.5 * (sectors.beta[i] - sectors.alpha[i]);
    if (!(rad > 0.0)) {
      throw Error(ErrorKind::kInvalidSector,
                  "zero-width sector cannot be normalized; fold it first");
    }
    const double mid = 0.5 * (sectors.alpha[i] + sectors.beta[i]);
    z[i] = ((w[i] - sectors.w_star[i]) -
            mid * (v[i] - sectors.v_star[i])) / rad;
  }
  return z;
}

NeuralNetwork load_network(const std::string& path) {
  const auto j = detail::load_json_file(path);
  if (!j.contains("layers") || !j.contains("activation")) {
    throw Error(ErrorKind::kIo, path + ": missing 'layers' or 'activation'");
  }
  std::vector<Layer> layers;
  for (const auto& lj : j["layers"]) {
    Layer layer;
    layer.W = detail::matrix_from_json(lj.at("W"));
    layer.b = detail::vector_from_json(lj.at("b"));
    layers.push_back(std::move(layer));
  }
  const double slope = j.value("leaky_slope", 0.01);
  return NeuralNetwork(std::move(layers),
                       parse_activation(j["activation"].get<std::string>()),
                       slope);
}

void save_network(const NeuralNetwork& net, const std::string& path) {
  detail::json j;
  j["activation"] = to_string(net.activation());
  if (net.activation() == Activation::kLeakyRelu) {
    j["leaky_slope"] = net.leaky_slope();
  }
  j["layers"] = detail::json::array();
  for (const auto& layer : net.layers()) {
    detail::json lj;
    lj["W"] = detail::to_json(layer.W);
    lj["b"] = detail::to_json(layer.b);
    j["layers"].push_back(std::move(lj));
  }
  detail::save_json_file(j, path);
}

}  // namespace nnv
