#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "studio/tivgan/tensor.hpp"

namespace studio::tivgan {

template <class T>
using NamedParams = std::vector<std::pair<std::string, Mat<T>*>>;

inline constexpr double kLeakySlope = 0.2;

template <class T>
Mat<T> leaky_relu(const Mat<T>& x) {
  return x.unaryExpr([](T v) { return v > T(0) ? v : static_cast<T>(kLeakySlope) * v; });
}

// Sign of the output equals the sign of the input, so the output suffices.
template <class T>
Mat<T> leaky_relu_backward(const Mat<T>& y, const Mat<T>& dy) {
  return dy.binaryExpr(y, [](T g, T v) { return v > T(0) ? g : static_cast<T>(kLeakySlope) * g; });
}

template <class T>
Mat<T> relu(const Mat<T>& x) {
  return x.cwiseMax(T(0));
}

template <class T>
Mat<T> relu_backward(const Mat<T>& y, const Mat<T>& dy) {
  return dy.binaryExpr(y, [](T g, T v) { return v > T(0) ? g : T(0); });
}

template <class T>
Mat<T> sigmoid(const Mat<T>& x) {
  return x.unaryExpr([](T v) { return T(1) / (T(1) + std::exp(-v)); });
}

template <class T>
struct Dense {
  Mat<T> weight;  // out x in
  Mat<T> bias;    // out x 1

  static Dense init(int in, int out, Rng& rng) {
    Dense d;
    d.weight = gaussian<T>(out, in, static_cast<T>(1.0 / std::sqrt(static_cast<double>(in))), rng);
    d.bias = Mat<T>::Zero(out, 1);
    return d;
  }

  int in_features() const { return static_cast<int>(weight.cols()); }
  int out_features() const { return static_cast<int>(weight.rows()); }

  Mat<T> forward(const Mat<T>& x) const {
    Mat<T> y = weight * x;
    y.colwise() += bias.col(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& x, const Mat<T>& dy, Dense& grad) const {
    grad.weight.noalias() += dy * x.transpose();
    grad.bias.col(0) += dy.rowwise().sum();
    return weight.transpose() * dy;
  }

  void collect(NamedParams<T>& out, const std::string& prefix) {
    out.emplace_back(prefix + ".weight", &weight);
    out.emplace_back(prefix + ".bias", &bias);
  }
};

// Strided 2-D convolution; weight rows are output channels, columns (c, ky, kx).
template <class T>
struct Conv2d {
  Mat<T> weight;
  Mat<T> bias;
  int in_channels = 0;
  int out_channels = 0;
  Window window;

  struct Cache {
    Mat<T> cols;
    int in_height = 0;
    int in_width = 0;
    int batch = 0;
  };

  static Conv2d init(int in, int out, Window win, Rng& rng) {
    Conv2d c;
    c.in_channels = in;
    c.out_channels = out;
    c.window = win;
    const int fan_in = in * win.kernel * win.kernel;
    c.weight = gaussian<T>(out, fan_in, static_cast<T>(1.0 / std::sqrt(static_cast<double>(fan_in))), rng);
    c.bias = Mat<T>::Zero(out, 1);
    return c;
  }

  FeatureMap<T> forward(const FeatureMap<T>& x, Cache* cache) const {
    if (x.channels != in_channels)
      throw Error(Errc::shape_error, "conv expects " + std::to_string(in_channels) + " channels, got " +
                                         std::to_string(x.channels));
    const int oh = window.conv_out(x.height), ow = window.conv_out(x.width);
    Mat<T> cols = im2col(x, window, oh, ow);
    FeatureMap<T> y;
    y.channels = out_channels;
    y.batch = x.batch;
    y.height = oh;
    y.width = ow;
    y.data.noalias() = weight * cols;
    y.data.colwise() += bias.col(0);
    if (cache != nullptr) *cache = Cache{std::move(cols), x.height, x.width, x.batch};
    return y;
  }

  FeatureMap<T> backward(const Cache& cache, const FeatureMap<T>& dy, Conv2d& grad) const {
    grad.weight.noalias() += dy.data * cache.cols.transpose();
    grad.bias.col(0) += dy.data.rowwise().sum();
    const Mat<T> dcols = weight.transpose() * dy.data;
    FeatureMap<T> dx(in_channels, cache.batch, cache.in_height, cache.in_width);
    col2im_add(dcols, window, dy.height, dy.width, dx);
    return dx;
  }

  void collect(NamedParams<T>& out, const std::string& prefix) {
    out.emplace_back(prefix + ".weight", &weight);
    out.emplace_back(prefix + ".bias", &bias);
  }
};

// Transposed convolution, the adjoint of Conv2d in the spatial sense: weight
// rows are input channels, columns (out_c, ky, kx).
template <class T>
struct ConvTranspose2d {
  Mat<T> weight;
  Mat<T> bias;
  int in_channels = 0;
  int out_channels = 0;
  Window window;

  struct Cache {
    Mat<T> input;  // in x (N*h*w)
    int in_height = 0;
    int in_width = 0;
    int batch = 0;
  };

  static ConvTranspose2d init(int in, int out, Window win, Rng& rng) {
    ConvTranspose2d c;
    c.in_channels = in;
    c.out_channels = out;
    c.window = win;
    // Each output pixel receives roughly in * (k/stride)^2 taps.
    const double taps = in * std::pow(static_cast<double>(win.kernel) / win.stride, 2.0);
    c.weight = gaussian<T>(in, out * win.kernel * win.kernel, static_cast<T>(1.0 / std::sqrt(taps)), rng);
    c.bias = Mat<T>::Zero(out, 1);
    return c;
  }

  FeatureMap<T> forward(const FeatureMap<T>& x, Cache* cache) const {
    if (x.channels != in_channels) throw Error(Errc::shape_error, "transposed conv channel mismatch");
    const Mat<T> cols = weight.transpose() * x.data;
    FeatureMap<T> y(out_channels, x.batch, window.transposed_out(x.height), window.transposed_out(x.width));
    col2im_add(cols, window, x.height, x.width, y);
    y.data.colwise() += bias.col(0);
    if (cache != nullptr) *cache = Cache{x.data, x.height, x.width, x.batch};
    return y;
  }

  FeatureMap<T> backward(const Cache& cache, const FeatureMap<T>& dy, ConvTranspose2d& grad) const {
    const Mat<T> dcols = im2col(dy, window, cache.in_height, cache.in_width);
    grad.weight.noalias() += cache.input * dcols.transpose();
    grad.bias.col(0) += dy.data.rowwise().sum();
    FeatureMap<T> dx;
    dx.channels = in_channels;
    dx.batch = cache.batch;
    dx.height = cache.in_height;
    dx.width = cache.in_width;
    dx.data.noalias() = weight * dcols;
    return dx;
  }

  void collect(NamedParams<T>& out, const std::string& prefix) {
    out.emplace_back(prefix + ".weight", &weight);
    out.emplace_back(prefix + ".bias", &bias);
  }
};

// Gated recurrent unit. Gate rows are stacked (reset, update, candidate).
template <class T>
struct GRUCell {
  Mat<T> w_input;   // 3H x in
  Mat<T> w_hidden;  // 3H x H
  Mat<T> b_input;   // 3H x 1
  Mat<T> b_hidden;  // 3H x 1

  struct Cache {
    Mat<T> x, h, reset, update, candidate, hidden_candidate;
  };

  int hidden_size() const { return static_cast<int>(w_hidden.cols()); }
  int input_size() const { return static_cast<int>(w_input.cols()); }

  static GRUCell init(int in, int hidden, Rng& rng) {
    GRUCell g;
    const auto s = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hidden)));
    g.w_input = gaussian<T>(3 * hidden, in, static_cast<T>(1.0 / std::sqrt(static_cast<double>(in))), rng);
    g.w_hidden = gaussian<T>(3 * hidden, hidden, s, rng);
    g.b_input = Mat<T>::Zero(3 * hidden, 1);
    g.b_hidden = Mat<T>::Zero(3 * hidden, 1);
    return g;
  }

  Mat<T> forward(const Mat<T>& x, const Mat<T>& h, Cache* cache) const {
    const int H = hidden_size();
    Mat<T> gx = w_input * x;
    gx.colwise() += b_input.col(0);
    Mat<T> gh = w_hidden * h;
    gh.colwise() += b_hidden.col(0);
    const Mat<T> r = sigmoid<T>(gx.topRows(H) + gh.topRows(H));
    const Mat<T> u = sigmoid<T>(gx.middleRows(H, H) + gh.middleRows(H, H));
    const Mat<T> hn = gh.bottomRows(H);
    const Mat<T> n = (gx.bottomRows(H) + r.cwiseProduct(hn)).array().tanh().matrix();
    Mat<T> next = (Mat<T>::Ones(H, x.cols()) - u).cwiseProduct(n) + u.cwiseProduct(h);
    if (cache != nullptr) *cache = Cache{x, h, r, u, n, hn};
    return next;
  }

  // Accumulates parameter gradients; writes input and previous-hidden gradients.
  void backward(const Cache& c, const Mat<T>& dnext, GRUCell& grad, Mat<T>& dx, Mat<T>& dh) const {
    const int H = hidden_size();
    const Eigen::Index N = dnext.cols();
    const Mat<T> ones = Mat<T>::Ones(H, N);
    const Mat<T> dn = dnext.cwiseProduct(ones - c.update);
    const Mat<T> du = dnext.cwiseProduct(c.h - c.candidate);
    const Mat<T> dn_pre = dn.cwiseProduct(ones - c.candidate.cwiseProduct(c.candidate));
    const Mat<T> dr = dn_pre.cwiseProduct(c.hidden_candidate);
    const Mat<T> dr_pre = dr.cwiseProduct(c.reset.cwiseProduct(ones - c.reset));
    const Mat<T> du_pre = du.cwiseProduct(c.update.cwiseProduct(ones - c.update));

    Mat<T> dgx(3 * H, N), dgh(3 * H, N);
    dgx.topRows(H) = dr_pre;
    dgx.middleRows(H, H) = du_pre;
    dgx.bottomRows(H) = dn_pre;
    dgh.topRows(H) = dr_pre;
    dgh.middleRows(H, H) = du_pre;
    dgh.bottomRows(H) = dn_pre.cwiseProduct(c.reset);

    grad.w_input.noalias() += dgx * c.x.transpose();
    grad.b_input.col(0) += dgx.rowwise().sum();
    grad.w_hidden.noalias() += dgh * c.h.transpose();
    grad.b_hidden.col(0) += dgh.rowwise().sum();
    dx = w_input.transpose() * dgx;
    dh = w_hidden.transpose() * dgh + dnext.cwiseProduct(c.update);
  }

  void collect(NamedParams<T>& out, const std::string& prefix) {
    out.emplace_back(prefix + ".w_input", &w_input);
    out.emplace_back(prefix + ".w_hidden", &w_hidden);
    out.emplace_back(prefix + ".b_input", &b_input);
    out.emplace_back(prefix + ".b_hidden", &b_hidden);
  }
};

}  // namespace studio::tivgan
