#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "rotdef/mnist.hpp"
#include "rotdef/rng.hpp"
#include "rotdef/tensor.hpp"

namespace rotdef::test {

inline Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = uniform_in(rng, lo, hi);
    return t;
}

inline Image random_image(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    Image img;
    for (double& p : img.pixels) p = uniform_in(rng, lo, hi);
    return img;
}

/// Central finite difference d f / d x around x.
inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Relative error with a floor so near-zero gradient pairs compare cleanly.
inline double rel_error(double a, double b, double floor = 1e-6) {
    const double denom = std::max({std::abs(a), std::abs(b), floor});
    return std::abs(a - b) / denom;
}

/// Runs f, expecting it to throw E; returns the exception message.
template <typename E, typename F>
std::string thrown_message(F&& f) {
    try {
        f();
    } catch (const E& e) {
        return e.what();
    }
    return "<no exception>";
}

}  // namespace rotdef::test
