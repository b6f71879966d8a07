#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "sonarmatch/errors.hpp"
#include "sonarmatch/rng.hpp"

// Minimal convolutional building blocks. Feature maps are stored as
// (channels x positions) matrices with spatial positions flattened row-major,
// which is also the activation layout the transfer losses consume.
namespace sonarmatch::nn {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

inline int conv_out_dim(int in, int k, int pad) { return in + 2 * pad - k + 1; }

/// Unfold (C x H*W) into (C*k*k x Ho*Wo) patches; out-of-bounds reads are zero.
template <class T>
Mat<T> im2col(const Mat<T>& x, int h, int w, int k, int pad) {
    const int c = static_cast<int>(x.rows());
    const int ho = conv_out_dim(h, k, pad);
    const int wo = conv_out_dim(w, k, pad);
    Mat<T> col = Mat<T>::Zero(static_cast<long>(c) * k * k, static_cast<long>(ho) * wo);
    for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
            const long out_pos = static_cast<long>(oy) * wo + ox;
            for (int ky = 0; ky < k; ++ky) {
                const int iy = oy + ky - pad;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < k; ++kx) {
                    const int ix = ox + kx - pad;
                    if (ix < 0 || ix >= w) continue;
                    const long in_pos = static_cast<long>(iy) * w + ix;
                    for (int ch = 0; ch < c; ++ch)
                        col((static_cast<long>(ch) * k + ky) * k + kx, out_pos) = x(ch, in_pos);
                }
            }
        }
    }
    return col;
}

/// Adjoint of im2col: scatter-add column gradients back onto the input grid.
template <class T>
Mat<T> col2im(const Mat<T>& dcol, int c, int h, int w, int k, int pad) {
    const int ho = conv_out_dim(h, k, pad);
    const int wo = conv_out_dim(w, k, pad);
    Mat<T> dx = Mat<T>::Zero(c, static_cast<long>(h) * w);
    for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
            const long out_pos = static_cast<long>(oy) * wo + ox;
            for (int ky = 0; ky < k; ++ky) {
                const int iy = oy + ky - pad;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < k; ++kx) {
                    const int ix = ox + kx - pad;
                    if (ix < 0 || ix >= w) continue;
                    const long in_pos = static_cast<long>(iy) * w + ix;
                    for (int ch = 0; ch < c; ++ch)
                        dx(ch, in_pos) += dcol((static_cast<long>(ch) * k + ky) * k + kx, out_pos);
                }
            }
        }
    }
    return dx;
}

template <class T>
struct Conv2D {
    int in_ch = 0, out_ch = 0, k = 0, pad = 0;
    Mat<T> weight; // out_ch x in_ch*k*k
    Vec<T> bias;   // out_ch

    Conv2D() = default;
    Conv2D(int in_c, int out_c, int kernel, int padding)
        : in_ch(in_c), out_ch(out_c), k(kernel), pad(padding),
          weight(Mat<T>::Zero(out_c, static_cast<long>(in_c) * kernel * kernel)),
          bias(Vec<T>::Zero(out_c)) {}

    void init_random(Rng& rng, double scale = 0.0) {
        const double s = scale > 0.0 ? scale : std::sqrt(2.0 / (in_ch * k * k));
        for (long i = 0; i < weight.size(); ++i)
            weight.data()[i] = static_cast<T>(rng.normal() * s);
        bias.setZero();
    }

    Mat<T> forward(const Mat<T>& x, int h, int w, Mat<T>* col_cache = nullptr) const {
        Mat<T> col = im2col<T>(x, h, w, k, pad);
        Mat<T> y = weight * col;
        y.colwise() += bias;
        if (col_cache) *col_cache = std::move(col);
        return y;
    }

    /// dy: out_ch x Ho*Wo. Accumulates parameter grads, returns dx.
    Mat<T> backward(const Mat<T>& dy, const Mat<T>& col_cache, int h, int w,
                    Mat<T>* dweight, Vec<T>* dbias) const {
        if (dweight) *dweight += dy * col_cache.transpose();
        if (dbias) *dbias += dy.rowwise().sum();
        Mat<T> dcol = weight.transpose() * dy;
        return col2im<T>(dcol, in_ch, h, w, k, pad);
    }
};

template <class T>
struct Linear {
    Mat<T> weight; // out x in
    Vec<T> bias;

    Linear() = default;
    Linear(int in_dim, int out_dim)
        : weight(Mat<T>::Zero(out_dim, in_dim)), bias(Vec<T>::Zero(out_dim)) {}

    void init_random(Rng& rng, double scale = 0.0) {
        const double s = scale > 0.0 ? scale : std::sqrt(1.0 / weight.cols());
        for (long i = 0; i < weight.size(); ++i)
            weight.data()[i] = static_cast<T>(rng.normal() * s);
        bias.setZero();
    }

    Vec<T> forward(const Vec<T>& x) const { return weight * x + bias; }

    Vec<T> backward(const Vec<T>& dy, const Vec<T>& x_cache, Mat<T>* dweight, Vec<T>* dbias) const {
        if (dweight) *dweight += dy * x_cache.transpose();
        if (dbias) *dbias += dy;
        return weight.transpose() * dy;
    }
};

// Elementwise nonlinearities.
template <class T>
Mat<T> tanh_forward(const Mat<T>& x) {
    return x.array().tanh().matrix();
}
template <class T>
Mat<T> tanh_backward(const Mat<T>& dy, const Mat<T>& y) {
    return (dy.array() * (T(1) - y.array().square())).matrix();
}
template <class T>
Mat<T> relu_forward(const Mat<T>& x) {
    return x.cwiseMax(T(0));
}
template <class T>
Mat<T> relu_backward(const Mat<T>& dy, const Mat<T>& y) {
    return (y.array() > T(0)).template cast<T>().matrix().cwiseProduct(dy);
}

/// 2x2 max pool (stride 2); odd trailing row/column is dropped.
template <class T>
Mat<T> maxpool2_forward(const Mat<T>& x, int h, int w, std::vector<long>* argmax) {
    const int ho = h / 2, wo = w / 2;
    const int c = static_cast<int>(x.rows());
    Mat<T> y(c, static_cast<long>(ho) * wo);
    if (argmax) argmax->assign(static_cast<size_t>(c) * ho * wo, 0);
    for (int ch = 0; ch < c; ++ch) {
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                long best_pos = static_cast<long>(2 * oy) * w + 2 * ox;
                T best = x(ch, best_pos);
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const long pos = static_cast<long>(2 * oy + dy) * w + 2 * ox + dx;
                        if (x(ch, pos) > best) {
                            best = x(ch, pos);
                            best_pos = pos;
                        }
                    }
                const long opos = static_cast<long>(oy) * wo + ox;
                y(ch, opos) = best;
                if (argmax) (*argmax)[static_cast<size_t>(ch) * ho * wo + opos] = best_pos;
            }
        }
    }
    return y;
}

template <class T>
Mat<T> maxpool2_backward(const Mat<T>& dy, const std::vector<long>& argmax, int c, int h, int w) {
    Mat<T> dx = Mat<T>::Zero(c, static_cast<long>(h) * w);
    const long n = dy.cols();
    for (int ch = 0; ch < c; ++ch)
        for (long p = 0; p < n; ++p)
            dx(ch, argmax[static_cast<size_t>(ch) * n + p]) += dy(ch, p);
    return dx;
}

/// 2x2 average pool (stride 2), smooth alternative for gradient-checked stacks.
template <class T>
Mat<T> avgpool2_forward(const Mat<T>& x, int h, int w) {
    const int ho = h / 2, wo = w / 2;
    const int c = static_cast<int>(x.rows());
    Mat<T> y(c, static_cast<long>(ho) * wo);
    for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox) {
                T s = 0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx)
                        s += x(ch, static_cast<long>(2 * oy + dy) * w + 2 * ox + dx);
                y(ch, static_cast<long>(oy) * wo + ox) = s / T(4);
            }
    return y;
}

template <class T>
Mat<T> avgpool2_backward(const Mat<T>& dy, int c, int h, int w) {
    const int ho = h / 2, wo = w / 2;
    Mat<T> dx = Mat<T>::Zero(c, static_cast<long>(h) * w);
    for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox) {
                const T g = dy(ch, static_cast<long>(oy) * wo + ox) / T(4);
                for (int py = 0; py < 2; ++py)
                    for (int px = 0; px < 2; ++px)
                        dx(ch, static_cast<long>(2 * oy + py) * w + 2 * ox + px) += g;
            }
    return dx;
}

// ---------------------------------------------------------------------------
// Named-tensor weight files: magic "TFW1", u32le tensor count, then per tensor
// u16le name length, UTF-8 name, u8 rank, u32le dims[rank], float32le data.

struct NamedTensor {
    std::string name;
    std::vector<uint32_t> dims;
    std::vector<float> data;

    size_t element_count() const {
        size_t n = 1;
        for (uint32_t d : dims) n *= d;
        return n;
    }
};

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensors(const std::string& path);

} // namespace sonarmatch::nn
