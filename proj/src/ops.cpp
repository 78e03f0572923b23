#include "rotdef/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rotdef {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* name) {
    if (t.rank() != rank) {
        throw DimensionError(std::string(op) + ": " + name + " must have rank " +
                             std::to_string(rank) + ", got shape " + shape_string(t.shape));
    }
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                      std::size_t stride) {
    require_rank(input, 3, "conv2d", "input");
    require_rank(kernels, 4, "conv2d", "kernels");
    require_rank(bias, 1, "conv2d", "bias");
    const std::size_t c_in = input.shape[0], h = input.shape[1], w = input.shape[2];
    const std::size_t c_out = kernels.shape[0], k = kernels.shape[2];
    if (kernels.shape[1] != c_in) {
        throw DimensionError("conv2d: kernel input channels (" + std::to_string(kernels.shape[1]) +
                             ") != input channels (" + std::to_string(c_in) + ")");
    }
    if (kernels.shape[3] != k) {
        throw DimensionError("conv2d: kernels must be square, got " +
                             std::to_string(k) + "x" + std::to_string(kernels.shape[3]));
    }
    if (bias.shape[0] != c_out) {
        throw DimensionError("conv2d: bias length (" + std::to_string(bias.shape[0]) +
                             ") != output channels (" + std::to_string(c_out) + ")");
    }
    if (h < k || w < k) {
        throw DimensionError("conv2d: input " + std::to_string(h) + "x" + std::to_string(w) +
                             " smaller than kernel " + std::to_string(k) + "x" + std::to_string(k));
    }
    if (stride == 0 || (h - k) % stride != 0 || (w - k) % stride != 0) {
        throw DimensionError("conv2d: spatial extent " + std::to_string(h) + "x" +
                             std::to_string(w) + " minus kernel " + std::to_string(k) +
                             " not divisible by stride " + std::to_string(stride));
    }
    const std::size_t h_out = (h - k) / stride + 1;
    const std::size_t w_out = (w - k) / stride + 1;

    Tensor out = Tensor::zeros({c_out, h_out, w_out});
    const double* in = input.data.data();
    const double* ker = kernels.data.data();
    double* dst = out.data.data();
    for (std::size_t o = 0; o < c_out; ++o) {
        const double b = bias[o];
        for (std::size_t oh = 0; oh < h_out; ++oh) {
            for (std::size_t ow = 0; ow < w_out; ++ow) {
                double acc = b;
                for (std::size_t c = 0; c < c_in; ++c) {
                    const double* in_base = in + (c * h + oh * stride) * w + ow * stride;
                    const double* k_base = ker + ((o * c_in + c) * k) * k;
                    for (std::size_t kh = 0; kh < k; ++kh) {
                        const double* in_row = in_base + kh * w;
                        const double* k_row = k_base + kh * k;
                        for (std::size_t kw = 0; kw < k; ++kw) {
                            acc += in_row[kw] * k_row[kw];
                        }
                    }
                }
                dst[(o * h_out + oh) * w_out + ow] = acc;
            }
        }
    }
    return out;
}

Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& kernels,
                            std::size_t stride) {
    require_rank(grad_out, 3, "conv2d_backward", "grad_out");
    require_rank(input, 3, "conv2d_backward", "input");
    require_rank(kernels, 4, "conv2d_backward", "kernels");
    const std::size_t c_in = input.shape[0], h = input.shape[1], w = input.shape[2];
    const std::size_t c_out = kernels.shape[0], k = kernels.shape[2];
    if (kernels.shape[1] != c_in) {
        throw DimensionError("conv2d_backward: kernel input channels (" +
                             std::to_string(kernels.shape[1]) + ") != input channels (" +
                             std::to_string(c_in) + ")");
    }
    if (h < k || w < k || stride == 0 || (h - k) % stride != 0 || (w - k) % stride != 0) {
        throw DimensionError("conv2d_backward: input " + shape_string(input.shape) +
                             " incompatible with kernel size " + std::to_string(k) +
                             " and stride " + std::to_string(stride));
    }
    const std::size_t h_out = (h - k) / stride + 1;
    const std::size_t w_out = (w - k) / stride + 1;
    if (grad_out.shape != std::vector<std::size_t>{c_out, h_out, w_out}) {
        throw DimensionError("conv2d_backward: grad_out shape " + shape_string(grad_out.shape) +
                             " does not match forward output " +
                             shape_string({c_out, h_out, w_out}));
    }

    Conv2dGrads g;
    g.input = Tensor::zeros(input.shape);
    g.kernels = Tensor::zeros(kernels.shape);
    g.bias = Tensor::zeros({c_out});

    const double* go = grad_out.data.data();
    const double* in = input.data.data();
    const double* ker = kernels.data.data();
    double* gi = g.input.data.data();
    double* gk = g.kernels.data.data();
    for (std::size_t o = 0; o < c_out; ++o) {
        double bias_acc = 0.0;
        for (std::size_t oh = 0; oh < h_out; ++oh) {
            for (std::size_t ow = 0; ow < w_out; ++ow) {
                const double gv = go[(o * h_out + oh) * w_out + ow];
                bias_acc += gv;
                if (gv == 0.0) continue;
                for (std::size_t c = 0; c < c_in; ++c) {
                    const std::size_t in_base = (c * h + oh * stride) * w + ow * stride;
                    const std::size_t k_base = ((o * c_in + c) * k) * k;
                    for (std::size_t kh = 0; kh < k; ++kh) {
                        const double* in_row = in + in_base + kh * w;
                        double* gi_row = gi + in_base + kh * w;
                        const double* k_row = ker + k_base + kh * k;
                        double* gk_row = gk + k_base + kh * k;
                        for (std::size_t kw = 0; kw < k; ++kw) {
                            gi_row[kw] += k_row[kw] * gv;
                            gk_row[kw] += in_row[kw] * gv;
                        }
                    }
                }
            }
        }
        g.bias[o] = bias_acc;
    }
    return g;
}

Tensor avgpool2_forward(const Tensor& input) {
    require_rank(input, 3, "avgpool2", "input");
    const std::size_t c = input.shape[0], h = input.shape[1], w = input.shape[2];
    if (h % 2 != 0 || w % 2 != 0) {
        throw DimensionError("avgpool2: spatial extent " + std::to_string(h) + "x" +
                             std::to_string(w) + " must be even");
    }
    Tensor out = Tensor::zeros({c, h / 2, w / 2});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t oh = 0; oh < h / 2; ++oh) {
            for (std::size_t ow = 0; ow < w / 2; ++ow) {
                const double s = input.at(ch, 2 * oh, 2 * ow) + input.at(ch, 2 * oh, 2 * ow + 1) +
                                 input.at(ch, 2 * oh + 1, 2 * ow) +
                                 input.at(ch, 2 * oh + 1, 2 * ow + 1);
                out.at(ch, oh, ow) = s * 0.25;
            }
        }
    }
    return out;
}

Tensor avgpool2_backward(const Tensor& grad_out) {
    require_rank(grad_out, 3, "avgpool2_backward", "grad_out");
    const std::size_t c = grad_out.shape[0], ho = grad_out.shape[1], wo = grad_out.shape[2];
    Tensor g = Tensor::zeros({c, ho * 2, wo * 2});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t oh = 0; oh < ho; ++oh) {
            for (std::size_t ow = 0; ow < wo; ++ow) {
                const double v = grad_out.at(ch, oh, ow) * 0.25;
                g.at(ch, 2 * oh, 2 * ow) = v;
                g.at(ch, 2 * oh, 2 * ow + 1) = v;
                g.at(ch, 2 * oh + 1, 2 * ow) = v;
                g.at(ch, 2 * oh + 1, 2 * ow + 1) = v;
            }
        }
    }
    return g;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require_rank(input, 1, "dense", "input");
    require_rank(weights, 2, "dense", "weights");
    require_rank(bias, 1, "dense", "bias");
    const std::size_t m = weights.shape[0], n = weights.shape[1];
    if (input.shape[0] != n) {
        throw DimensionError("dense: input length (" + std::to_string(input.shape[0]) +
                             ") != weight columns (" + std::to_string(n) + ")");
    }
    if (bias.shape[0] != m) {
        throw DimensionError("dense: bias length (" + std::to_string(bias.shape[0]) +
                             ") != weight rows (" + std::to_string(m) + ")");
    }
    Tensor out = Tensor::zeros({m});
    const double* in = input.data.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = weights.data.data() + i * n;
        double acc = bias[i];
        for (std::size_t j = 0; j < n; ++j) {
            acc += row[j] * in[j];
        }
        out[i] = acc;
    }
    return out;
}

DenseGrads dense_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights) {
    require_rank(grad_out, 1, "dense_backward", "grad_out");
    require_rank(input, 1, "dense_backward", "input");
    require_rank(weights, 2, "dense_backward", "weights");
    const std::size_t m = weights.shape[0], n = weights.shape[1];
    if (input.shape[0] != n) {
        throw DimensionError("dense_backward: input length (" + std::to_string(input.shape[0]) +
                             ") != weight columns (" + std::to_string(n) + ")");
    }
    if (grad_out.shape[0] != m) {
        throw DimensionError("dense_backward: grad_out length (" +
                             std::to_string(grad_out.shape[0]) + ") != weight rows (" +
                             std::to_string(m) + ")");
    }
    DenseGrads g;
    g.input = Tensor::zeros({n});
    g.weights = Tensor::zeros({m, n});
    g.bias = grad_out;
    for (std::size_t i = 0; i < m; ++i) {
        const double gv = grad_out[i];
        const double* row = weights.data.data() + i * n;
        double* gw_row = g.weights.data.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            g.input[j] += row[j] * gv;
            gw_row[j] = input[j] * gv;
        }
    }
    return g;
}

Tensor tanh_forward(const Tensor& input) {
    Tensor out = Tensor::zeros(input.shape);
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double v = input[i];
        if (!std::isfinite(v)) {
            throw ValueError("tanh: non-finite input at flat index " + std::to_string(i));
        }
        out[i] = std::tanh(v);
    }
    return out;
}

Tensor tanh_backward(const Tensor& grad_out, const Tensor& tanh_out) {
    if (!grad_out.same_shape(tanh_out)) {
        throw DimensionError("tanh_backward: grad shape " + shape_string(grad_out.shape) +
                             " != output shape " + shape_string(tanh_out.shape));
    }
    Tensor g = Tensor::zeros(grad_out.shape);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = grad_out[i] * (1.0 - tanh_out[i] * tanh_out[i]);
    }
    return g;
}

Tensor softmax(const Tensor& logits) {
    require_rank(logits, 1, "softmax", "logits");
    if (logits.size() == 0) {
        throw DimensionError("softmax: empty logits");
    }
    double max = logits[0];
    for (std::size_t i = 1; i < logits.size(); ++i) max = std::max(max, logits[i]);
    Tensor out = Tensor::zeros(logits.shape);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - max);
        sum += out[i];
    }
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] /= sum;
    return out;
}

ProbVector softmax_probs(const Tensor& logits) {
    if (logits.rank() != 1 || logits.size() != kNumClasses) {
        throw DimensionError("softmax_probs: expected " + std::to_string(kNumClasses) +
                             " logits, got shape " + shape_string(logits.shape));
    }
    const Tensor p = softmax(logits);
    ProbVector out{};
    std::copy(p.data.begin(), p.data.end(), out.begin());
    return out;
}

ProbVector one_hot(int label) {
    if (label < 0 || label >= static_cast<int>(kNumClasses)) {
        throw ValueError("one_hot: label " + std::to_string(label) + " outside 0.." +
                         std::to_string(kNumClasses - 1));
    }
    ProbVector v{};
    v[static_cast<std::size_t>(label)] = 1.0;
    return v;
}

bool is_one_hot(const ProbVector& v) {
    int ones = 0;
    for (double x : v) {
        if (x == 1.0) {
            ++ones;
        } else if (x != 0.0) {
            return false;
        }
    }
    return ones == 1;
}

double cross_entropy(const ProbVector& y_true, const ProbVector& y_pred) {
    if (!is_one_hot(y_true)) {
        throw ValidationError("cross_entropy: y_true is not one-hot");
    }
    constexpr double kFloor = 1e-12;
    double loss = 0.0;
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        if (y_true[i] != 0.0) {
            loss -= y_true[i] * std::log(std::max(y_pred[i], kFloor));
        }
    }
    return loss;
}

Tensor softmax_xent_grad(const ProbVector& y_true, const Tensor& logits) {
    if (!is_one_hot(y_true)) {
        throw ValidationError("softmax_xent_grad: y_true is not one-hot");
    }
    const ProbVector p = softmax_probs(logits);
    Tensor g = Tensor::zeros({kNumClasses});
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        g[i] = p[i] - y_true[i];
    }
    return g;
}

int argmax_class(const ProbVector& probs) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(kNumClasses); ++i) {
        if (probs[static_cast<std::size_t>(i)] > probs[static_cast<std::size_t>(best)]) best = i;
    }
    return best;
}

int argmax_class(const Tensor& values) {
    if (values.size() == 0) {
        throw DimensionError("argmax_class: empty tensor");
    }
    int best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

PerturbationMetrics lp_metrics(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("lp_metrics: shape " + shape_string(a.shape) + " != " +
                             shape_string(b.shape));
    }
    constexpr double kL0Threshold = 1e-12;
    PerturbationMetrics m;
    double sumsq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        if (d > kL0Threshold) ++m.l0;
        sumsq += d * d;
        m.linf = std::max(m.linf, d);
    }
    m.l2 = std::sqrt(sumsq);
    return m;
}

}  // namespace rotdef
