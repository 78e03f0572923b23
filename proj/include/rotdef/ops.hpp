#pragma once

#include <array>
#include <cstddef>

#include "rotdef/tensor.hpp"

namespace rotdef {

inline constexpr std::size_t kNumClasses = 10;

/// Probability vector over the ten digit classes.
using ProbVector = std::array<double, kNumClasses>;

struct PerturbationMetrics {
    std::size_t l0 = 0;  // pixels differing by more than 1e-12
    double l2 = 0.0;     // Euclidean distance
    double linf = 0.0;   // max absolute difference
};

/// Valid (no padding) 2-D convolution.
/// input [C_in,H,W], kernels [C_out,C_in,k,k], bias [C_out] -> [C_out,H',W']
/// with H' = (H-k)/stride + 1; (H-k) and (W-k) must divide evenly by stride.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                      std::size_t stride = 1);

struct Conv2dGrads {
    Tensor input;
    Tensor kernels;
    Tensor bias;
};

/// Analytic gradients of conv2d_forward for the cotangent grad_out.
Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& kernels,
                            std::size_t stride = 1);

/// Non-overlapping 2x2 mean pooling. input [C,H,W] -> [C,H/2,W/2]; H and W must be even.
Tensor avgpool2_forward(const Tensor& input);

/// Backward of avgpool2_forward: spreads each output gradient as grad/4 over its 2x2 block.
Tensor avgpool2_backward(const Tensor& grad_out);

/// Fully connected layer: weights [M,N] * input [N] + bias [M] -> [M].
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

DenseGrads dense_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights);

/// Elementwise hyperbolic tangent. Rejects non-finite input.
Tensor tanh_forward(const Tensor& input);

/// Backward of tanh given the forward *output*: grad * (1 - tanh^2).
Tensor tanh_backward(const Tensor& grad_out, const Tensor& tanh_out);

/// Numerically stable softmax (max-shifted) over a vector of any length.
Tensor softmax(const Tensor& logits);

/// Softmax over exactly ten logits, as a ProbVector.
ProbVector softmax_probs(const Tensor& logits);

ProbVector one_hot(int label);

/// True when the vector holds exactly one 1.0 and zeros elsewhere.
bool is_one_hot(const ProbVector& v);

/// -sum(y_true * log(y_pred)); probabilities are floored at 1e-12 before log.
double cross_entropy(const ProbVector& y_true, const ProbVector& y_pred);

/// Gradient of cross_entropy(softmax(logits)) w.r.t. the logits: softmax(logits) - y_true.
Tensor softmax_xent_grad(const ProbVector& y_true, const Tensor& logits);

/// Index of the largest value; ties resolve to the smallest index.
int argmax_class(const ProbVector& probs);
int argmax_class(const Tensor& values);

/// L0 / L2 / Linf distances between two same-shape tensors.
PerturbationMetrics lp_metrics(const Tensor& a, const Tensor& b);

}  // namespace rotdef
