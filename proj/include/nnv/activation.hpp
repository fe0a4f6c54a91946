#pragma once

#include <cmath>
#include <string>

#include "nnv/common.hpp"

namespace nnv {

enum class Activation { kRelu, kTanh, kSigmoid, kLeakyRelu };

inline double activate(Activation act, double v, double leaky_slope = 0.01) {
  switch (act) {
    case Activation::kRelu: return v > 0.0 ? v : 0.0;
    case Activation::kTanh: return std::tanh(v);
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-v));
    case Activation::kLeakyRelu: return v > 0.0 ? v : leaky_slope * v;
  }
  throw Error(ErrorKind::kUnsupported, "unknown activation");
}

inline std::string to_string(Activation act) {
  switch (act) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kLeakyRelu: return "leaky_relu";
  }
  return "unknown";
}

inline Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "leaky_relu") return Activation::kLeakyRelu;
  throw Error(ErrorKind::kUnsupported, "unsupported activation: " + name);
}

}  // namespace nnv
