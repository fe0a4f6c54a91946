#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nnv/activation.hpp"
#include "nnv/common.hpp"
#include "nnv/sectors.hpp"

namespace nnv {

struct Layer {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
};

/// Feed-forward fully connected network u = pi(x) with l hidden layers:
///   w^0 = x,  v^i = W^i w^{i-1} + b^i,  w^i = phi(v^i),  u = W^{l+1} w^l + b^{l+1}.
/// layers() holds l+1 entries, input to output.
class NeuralNetwork {
 public:
  NeuralNetwork(std::vector<Layer> layers, Activation activation,
                double leaky_slope = 0.01);

  const std::vector<Layer>& layers() const { return layers_; }
  Activation activation() const { return activation_; }
  double leaky_slope() const { return leaky_slope_; }

  Eigen::Index input_dim() const { return layers_.front().W.cols(); }
  Eigen::Index output_dim() const { return layers_.back().W.rows(); }
  /// Number of hidden (activated) layers l.
  Eigen::Index hidden_count() const {
    return static_cast<Eigen::Index>(layers_.size()) - 1;
  }
  /// Total neuron count n_phi = n_1 + ... + n_l.
  Eigen::Index total_neurons() const { return n_phi_; }
  /// Sizes n_1, ..., n_l of the hidden layers.
  const std::vector<Eigen::Index>& hidden_sizes() const { return hidden_sizes_; }

  double activate_scalar(double v) const {
    return activate(activation_, v, leaky_slope_);
  }

 private:
  std::vector<Layer> layers_;
  Activation activation_;
  double leaky_slope_;
  Eigen::Index n_phi_;
  std::vector<Eigen::Index> hidden_sizes_;
};

struct ForwardTrace {
  Eigen::VectorXd u;      // pi(x)
  Eigen::VectorXd v_phi;  // stacked preactivations [v^1; ...; v^l]
  Eigen::VectorXd w_phi;  // stacked postactivations [w^1; ...; w^l]
};

ForwardTrace forward(const NeuralNetwork& net, const Eigen::VectorXd& x);

/// Stacked isolation form of the network:
///   [u; v_phi] = [N_ux N_uw; N_vx N_vw] [x; w_phi] + [bias_u; bias_v],
///   w_phi = phi(v_phi).
/// N_vw is strictly block-sub-diagonal (layer i feeds only layer i+1) and
/// N_ux = 0 for networks with at least one hidden layer.
struct StackedForm {
  Eigen::MatrixXd N_ux, N_uw, N_vx, N_vw;
  Eigen::VectorXd bias_u;  // b^{l+1}
  Eigen::VectorXd bias_v;  // [b^1; ...; b^l]
  Eigen::Index n_x = 0, n_u = 0, n_phi = 0;
};

StackedForm build_stacked(const NeuralNetwork& net);

/// Evaluates the stacked form at x by forward substitution through the
/// strictly block-sub-diagonal N_vw (independent of forward()).
ForwardTrace eval_stacked(const StackedForm& sf, Activation act,
                          const Eigen::VectorXd& x, double leaky_slope = 0.01);

/// Loop-transformed form with the nonlinearity normalized to the symmetric
/// sector [-1, 1]:
///   [u; v_phi] = [Nt_ux Nt_uz; Nt_vx Nt_vz] [x; z_phi] + [bias_u; bias_v],
///   z_phi = phi_tilde(v_phi),  z^T Lambda z <= (v - v*)^T Lambda (v - v*).
struct TransformedForm {
  Eigen::MatrixXd N_ux, N_uz, N_vx, N_vz;
  // Intermediates C1 = N_uw (B-A)/2, C2 = N_uw (A+B)/2,
  // C3 = N_vw (B-A)/2, C4 = N_vw (A+B)/2.
  Eigen::MatrixXd C1, C2, C3, C4;
  // Constant terms of the transformed representation. The stability theorem
  // assumes an equilibrium at the origin, which requires both to vanish.
  Eigen::VectorXd bias_u;
  Eigen::VectorXd bias_v;
};

TransformedForm loop_transform(const StackedForm& sf, const SectorData& sectors);

/// Normalized nonlinearity value z = phi_tilde(v) given the raw w = phi(v).
/// Requires beta > alpha in every coordinate.
Eigen::VectorXd normalize_nonlinearity(const SectorData& sectors,
                                       const Eigen::VectorXd& v,
                                       const Eigen::VectorXd& w);

/// Eliminates neurons with a zero-width sector (alpha == beta): their output
/// is exactly affine, so they fold into the linear part of the stacked form.
/// Returns the reduced stacked form and sectors over the surviving neurons.
std::pair<StackedForm, SectorData> fold_affine_neurons(const StackedForm& sf,
                                                       const SectorData& sectors);

/// JSON weights file IO: {"layers":[{"W":[[...]],"b":[...]},...],
/// "activation":"relu|tanh|sigmoid|leaky_relu", "leaky_slope":optional}.
NeuralNetwork load_network(const std::string& path);
void save_network(const NeuralNetwork& net, const std::string& path);

}  // namespace nnv
