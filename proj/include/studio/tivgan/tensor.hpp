#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <random>
#include <string>
#include <vector>

#include "studio/error.hpp"

namespace studio::tivgan {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Rng = std::mt19937_64;

// A batch of feature maps stored channel-major: row c holds, for every sample n,
// the h x w plane of that channel. Channel concatenation is row stacking.
template <class T>
struct FeatureMap {
  int channels = 0;
  int batch = 0;
  int height = 0;
  int width = 0;
  Mat<T> data;

  FeatureMap() = default;
  FeatureMap(int c, int n, int h, int w)
      : channels(c), batch(n), height(h), width(w), data(Mat<T>::Zero(c, static_cast<Eigen::Index>(n) * h * w)) {}

  int plane() const { return height * width; }
  T& at(int c, int n, int y, int x) { return data(c, (static_cast<Eigen::Index>(n) * height + y) * width + x); }
  T at(int c, int n, int y, int x) const { return data(c, (static_cast<Eigen::Index>(n) * height + y) * width + x); }
  bool same_shape(const FeatureMap& o) const {
    return channels == o.channels && batch == o.batch && height == o.height && width == o.width;
  }
};

// (C*H*W) x N, the column layout dense layers consume. Feature order is (c, y, x).
template <class T>
Mat<T> flatten(const FeatureMap<T>& f) {
  const int p = f.plane();
  Mat<T> out(static_cast<Eigen::Index>(f.channels) * p, f.batch);
  for (int c = 0; c < f.channels; ++c)
    for (int n = 0; n < f.batch; ++n)
      for (int i = 0; i < p; ++i) out(static_cast<Eigen::Index>(c) * p + i, n) = f.data(c, static_cast<Eigen::Index>(n) * p + i);
  return out;
}

template <class T>
FeatureMap<T> unflatten(const Mat<T>& cols, int c, int h, int w) {
  FeatureMap<T> f(c, static_cast<int>(cols.cols()), h, w);
  const int p = h * w;
  assert(cols.rows() == static_cast<Eigen::Index>(c) * p);
  for (int ch = 0; ch < c; ++ch)
    for (int n = 0; n < f.batch; ++n)
      for (int i = 0; i < p; ++i) f.data(ch, static_cast<Eigen::Index>(n) * p + i) = cols(static_cast<Eigen::Index>(ch) * p + i, n);
  return f;
}

struct Window {
  int kernel = 4;
  int stride = 2;
  int pad = 1;

  int conv_out(int in) const { return (in + 2 * pad - kernel) / stride + 1; }
  int transposed_out(int in) const { return (in - 1) * stride - 2 * pad + kernel; }
};

// Patch matrix for a strided convolution of `x` producing an oh x ow output:
// rows (c, ky, kx), columns (n, oy, ox). Out-of-bounds taps read zero.
template <class T>
Mat<T> im2col(const FeatureMap<T>& x, Window win, int oh, int ow) {
  const int k = win.kernel;
  Mat<T> cols = Mat<T>::Zero(static_cast<Eigen::Index>(x.channels) * k * k, static_cast<Eigen::Index>(x.batch) * oh * ow);
  for (int c = 0; c < x.channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = cols.row((static_cast<Eigen::Index>(c) * k + ky) * k + kx).data();
        const T* src = x.data.row(c).data();
        for (int n = 0; n < x.batch; ++n) {
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * win.stride - win.pad + ky;
            if (iy < 0 || iy >= x.height) continue;
            const T* src_row = src + (static_cast<Eigen::Index>(n) * x.height + iy) * x.width;
            T* dst = row + (static_cast<Eigen::Index>(n) * oh + oy) * ow;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * win.stride - win.pad + kx;
              if (ix >= 0 && ix < x.width) dst[ox] = src_row[ix];
            }
          }
        }
      }
    }
  }
  return cols;
}

// Adjoint of im2col: scatters patch columns back into `x` (accumulating).
template <class T>
void col2im_add(const Mat<T>& cols, Window win, int oh, int ow, FeatureMap<T>& x) {
  const int k = win.kernel;
  for (int c = 0; c < x.channels; ++c) {
    T* dst = x.data.row(c).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = cols.row((static_cast<Eigen::Index>(c) * k + ky) * k + kx).data();
        for (int n = 0; n < x.batch; ++n) {
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * win.stride - win.pad + ky;
            if (iy < 0 || iy >= x.height) continue;
            T* dst_row = dst + (static_cast<Eigen::Index>(n) * x.height + iy) * x.width;
            const T* src = row + (static_cast<Eigen::Index>(n) * oh + oy) * ow;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * win.stride - win.pad + kx;
              if (ix >= 0 && ix < x.width) dst_row[ix] += src[ox];
            }
          }
        }
      }
    }
  }
}

// Frames of `items` sequences of `steps` frames each are stored item-major
// (sample index = item * steps + step). These helpers move between that layout
// and the channel-stacked layout step-discriminators consume (channel
// step * C + c, one sample per item).
template <class T>
FeatureMap<T> stack_steps(const FeatureMap<T>& frames, int steps) {
  if (steps <= 0 || frames.batch % steps != 0) throw Error(Errc::shape_error, "frame count not divisible by steps");
  const int items = frames.batch / steps;
  const int p = frames.plane();
  FeatureMap<T> out(frames.channels * steps, items, frames.height, frames.width);
  for (int b = 0; b < items; ++b)
    for (int s = 0; s < steps; ++s)
      for (int c = 0; c < frames.channels; ++c)
        out.data.row(s * frames.channels + c).segment(static_cast<Eigen::Index>(b) * p, p) =
            frames.data.row(c).segment((static_cast<Eigen::Index>(b) * steps + s) * p, p);
  return out;
}

template <class T>
FeatureMap<T> unstack_steps(const FeatureMap<T>& stacked, int steps) {
  if (steps <= 0 || stacked.channels % steps != 0) throw Error(Errc::shape_error, "channel count not divisible by steps");
  const int c_single = stacked.channels / steps;
  const int p = stacked.plane();
  FeatureMap<T> out(c_single, stacked.batch * steps, stacked.height, stacked.width);
  for (int b = 0; b < stacked.batch; ++b)
    for (int s = 0; s < steps; ++s)
      for (int c = 0; c < c_single; ++c)
        out.data.row(c).segment((static_cast<Eigen::Index>(b) * steps + s) * p, p) =
            stacked.data.row(s * c_single + c).segment(static_cast<Eigen::Index>(b) * p, p);
  return out;
}

// One frame per item: picks[b] selects the step of item b.
template <class T>
FeatureMap<T> pick_steps(const FeatureMap<T>& frames, int steps, const std::vector<int>& picks) {
  const int items = static_cast<int>(picks.size());
  if (items * steps != frames.batch) throw Error(Errc::shape_error, "pick count does not match frame batch");
  const int p = frames.plane();
  FeatureMap<T> out(frames.channels, items, frames.height, frames.width);
  for (int b = 0; b < items; ++b)
    for (int c = 0; c < frames.channels; ++c)
      out.data.row(c).segment(static_cast<Eigen::Index>(b) * p, p) =
          frames.data.row(c).segment((static_cast<Eigen::Index>(b) * steps + picks[b]) * p, p);
  return out;
}

template <class T>
void scatter_steps_add(const FeatureMap<T>& picked, int steps, const std::vector<int>& picks, FeatureMap<T>& frames) {
  const int p = frames.plane();
  for (int b = 0; b < picked.batch; ++b)
    for (int c = 0; c < frames.channels; ++c)
      frames.data.row(c).segment((static_cast<Eigen::Index>(b) * steps + picks[b]) * p, p) +=
          picked.data.row(c).segment(static_cast<Eigen::Index>(b) * p, p);
}

template <class T>
Mat<T> gaussian(Eigen::Index rows, Eigen::Index cols, T stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat<T> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(dist(rng) * static_cast<double>(stddev));
  return m;
}

}  // namespace studio::tivgan
