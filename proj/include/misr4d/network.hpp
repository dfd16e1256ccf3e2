#ifndef MISR4D_NETWORK_HPP
#define MISR4D_NETWORK_HPP

#include <memory>
#include <string>
#include <vector>

#include "misr4d/nn_ops.hpp"
#include "misr4d/rng.hpp"

#include "json.hpp"

namespace misr4d {

struct ModelConfig {
  int in_views = 16;
  std::vector<int> encoder_channels{64, 128, 256, 512, 1024};
  int upscale = 3;              ///< r
  double f_int_ratio = 0.5;     ///< attention width as a fraction of skip channels
  double prelu_init = 0.25;

  int depth() const { return static_cast<int>(encoder_channels.size()); }
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

/// Named view of one parameter (or state) array.
template <typename T>
struct ParamRef {
  std::string name;
  std::vector<T>* value = nullptr;
  std::vector<T>* grad = nullptr;  // null for non-trainable state (running stats)
  std::vector<int> shape;
  bool trainable = true;
};

/// Multiplicative gating of encoder skip features by a sigmoid map computed
/// from decoder context:
///   x' = x * sigmoid(psi(ReLU(BN(Wg g) + BN(Wx x)))).
template <typename T>
struct AttentionGate {
  Conv2d<T> wg, wx, psi;
  BatchNorm2d<T> bng, bnx;
  ReLU<T> relu;
  Sigmoid<T> sig;
  Tensor<T> x_, att_;

  void init_shape(int channels, int f_int) {
    wg.init_shape(channels, f_int, 1, false);
    wx.init_shape(channels, f_int, 1, false);
    psi.init_shape(f_int, 1, 1, true);
    bng.init_shape(f_int);
    bnx.init_shape(f_int);
  }

  Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& g, bool train, bool update, bool keep) {
    if (x.h != g.h || x.w != g.w) throw config_error("attention gate: spatial mismatch");
    Tensor<T> a = bng.forward(wg.forward(g, keep), train, update, keep);
    Tensor<T> b = bnx.forward(wx.forward(x, keep), train, update, keep);
    for (size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
    Tensor<T> att = sig.forward(psi.forward(relu.forward(a, keep), keep), keep);
    Tensor<T> y = x;
    for (int in = 0; in < x.n; ++in) {
      const T* m = att.ptr(in, 0);
      for (int ci = 0; ci < x.c; ++ci) {
        T* p = y.ptr(in, ci);
        for (size_t i = 0; i < x.plane(); ++i) p[i] *= m[i];
      }
    }
    if (keep) {
      x_ = x;
      att_ = att;
    }
    return y;
  }

  /// Returns (dx, dg).
  std::pair<Tensor<T>, Tensor<T>> backward(const Tensor<T>& dy) {
    Tensor<T> datt(dy.n, 1, dy.h, dy.w);
    Tensor<T> dx = dy;
    for (int in = 0; in < dy.n; ++in) {
      T* dm = datt.ptr(in, 0);
      const T* m = att_.ptr(in, 0);
      for (int ci = 0; ci < dy.c; ++ci) {
        const T* d = dy.ptr(in, ci);
        const T* xv = x_.ptr(in, ci);
        T* o = dx.ptr(in, ci);
        for (size_t i = 0; i < dy.plane(); ++i) {
          dm[i] += d[i] * xv[i];
          o[i] = d[i] * m[i];
        }
      }
    }
    Tensor<T> ds = relu.backward(psi.backward(sig.backward(datt)));
    Tensor<T> dg = wg.backward(bng.backward(ds));
    Tensor<T> dxb = wx.backward(bnx.backward(ds));
    for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dxb.v[i];
    return {dx, dg};
  }
};

/// Two rounds of conv3x3 -> BN -> ReLU.
template <typename T>
struct DoubleConv {
  Conv2d<T> c1, c2;
  BatchNorm2d<T> b1, b2;
  ReLU<T> r1, r2;

  void init_shape(int in_c, int out_c) {
    c1.init_shape(in_c, out_c, 3, false);
    b1.init_shape(out_c);
    c2.init_shape(out_c, out_c, 3, false);
    b2.init_shape(out_c);
  }
  Tensor<T> forward(const Tensor<T>& x, bool train, bool update, bool keep) {
    Tensor<T> t = r1.forward(b1.forward(c1.forward(x, keep), train, update, keep), keep);
    return r2.forward(b2.forward(c2.forward(t, keep), train, update, keep), keep);
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> d = c2.backward(b2.backward(r2.backward(dy)));
    return c1.backward(b1.backward(r1.backward(d)));
  }
};

/// One decoder stage: nearest x2 upsample -> conv -> BN -> ReLU, gated skip
/// concat, then a double conv.
template <typename T>
struct UpStage {
  UpsampleNearest2<T> up;
  Conv2d<T> upconv;
  BatchNorm2d<T> upbn;
  ReLU<T> uprelu;
  AttentionGate<T> att;
  DoubleConv<T> fuse;
  int skip_c = 0;

  void init_shape(int coarse_c, int skip_channels, int f_int) {
    skip_c = skip_channels;
    upconv.init_shape(coarse_c, skip_channels, 3, false);
    upbn.init_shape(skip_channels);
    att.init_shape(skip_channels, f_int);
    fuse.init_shape(2 * skip_channels, skip_channels);
  }

  Tensor<T> forward(const Tensor<T>& d, const Tensor<T>& skip, bool train, bool update,
                    bool keep) {
    Tensor<T> u = uprelu.forward(
        upbn.forward(upconv.forward(up.forward(d), keep), train, update, keep), keep);
    Tensor<T> xg = att.forward(skip, u, train, update, keep);
    return fuse.forward(concat_channels(u, xg), train, update, keep);
  }

  /// Returns (d_coarse, d_skip).
  std::pair<Tensor<T>, Tensor<T>> backward(const Tensor<T>& dy) {
    Tensor<T> dcat = fuse.backward(dy);
    Tensor<T> du, dxg;
    split_channels(dcat, skip_c, du, dxg);
    auto [dskip, dg] = att.backward(dxg);
    for (size_t i = 0; i < du.v.size(); ++i) du.v[i] += dg.v[i];
    Tensor<T> dd = up.backward(upconv.backward(upbn.backward(uprelu.backward(du))));
    return {dd, dskip};
  }
};

/// The full model: attention-gated encoder-decoder over the view stack,
/// then a sub-pixel upsampling head
/// (conv -> PReLU -> depth-to-space(r) -> 1x1 conv).
template <typename T>
struct Model {
  ModelConfig cfg;
  std::vector<DoubleConv<T>> enc;
  std::vector<MaxPool2<T>> pools;
  std::vector<UpStage<T>> dec;
  Conv2d<T> head1, head2;
  PReLU<T> prelu;
  int d2s_r = 3;

  explicit Model(const ModelConfig& config) : cfg(config) {
    cfg.validate();
    const int D = cfg.depth();
    const auto& ch = cfg.encoder_channels;
    enc.resize(D);
    pools.resize(D - 1);
    dec.resize(D - 1);
    enc[0].init_shape(cfg.in_views, ch[0]);
    for (int i = 1; i < D; ++i) enc[i].init_shape(ch[i - 1], ch[i]);
    for (int j = 0; j < D - 1; ++j) {
      const int f_int = std::max(1, static_cast<int>(ch[j] * cfg.f_int_ratio));
      dec[j].init_shape(ch[j + 1], ch[j], f_int);
    }
    head1.init_shape(ch[0], cfg.upscale * cfg.upscale, 3, true);
    head2.init_shape(1, 1, 1, true);
    d2s_r = cfg.upscale;
    prelu.slope[0] = static_cast<T>(cfg.prelu_init);
  }

  /// Deterministic initialization: fan-in-scaled uniform kernels, BN scale 1
  /// shift 0, zero biases, PReLU at cfg.prelu_init, and a near-identity
  /// final 1x1 convolution.
  void init_params(uint64_t seed) {
    SplitMix64 g(derive_seed(seed, 0x4D4F44454CULL));
    for (auto& p : params()) {
      if (!p.trainable) continue;
      if (p.name.ends_with(".weight") && p.shape.size() == 4) {
        const int fan_in = p.shape[1] * p.shape[2] * p.shape[3];
        const double bound = std::sqrt(6.0 / fan_in);
        for (auto& v : *p.value) v = static_cast<T>(g.uniform(-bound, bound));
      }
      // biases, BN scale/shift, PReLU keep their constructed values
    }
    head2.weight.assign(1, T(1));
    head2.bias.assign(1, T(0));
  }

  Tensor<T> forward(const Tensor<T>& views, bool train, bool update_running = false) {
    if (views.c != cfg.in_views)
      throw config_error("forward: expected " + std::to_string(cfg.in_views) + " views, got " +
                         std::to_string(views.c));
    const int D = cfg.depth();
    const int div = 1 << (D - 1);
    if (views.h % div || views.w % div)
      throw config_error("forward: spatial dims " + std::to_string(views.h) + "x" +
                         std::to_string(views.w) + " not divisible by " + std::to_string(div) +
                         " (encoder stage " + std::to_string(D - 1) + ")");
    const bool keep = train;

    std::vector<Tensor<T>> e(D);
    e[0] = enc[0].forward(views, train, update_running, keep);
    for (int i = 1; i < D; ++i)
      e[i] = enc[i].forward(pools[i - 1].forward(e[i - 1], keep), train, update_running, keep);

    Tensor<T> d = e[D - 1];
    for (int j = D - 2; j >= 0; --j) d = dec[j].forward(d, e[j], train, update_running, keep);

    Tensor<T> t = prelu.forward(head1.forward(d, keep), keep);
    Tensor<T> y = depth_to_space(t, d2s_r);
    return head2.forward(y, keep);
  }

  /// Backward pass after a forward with train = true. Accumulates parameter
  /// gradients and returns the gradient w.r.t. the input views.
  Tensor<T> backward(const Tensor<T>& dout) {
    const int D = cfg.depth();
    Tensor<T> d = head2.backward(dout);
    d = space_to_depth(d, d2s_r);
    d = head1.backward(prelu.backward(d));

    std::vector<Tensor<T>> dskip(D - 1);
    for (int j = 0; j <= D - 2; ++j) {
      auto [dd, ds] = dec[j].backward(d);
      d = std::move(dd);
      dskip[j] = std::move(ds);
    }
    // d now holds the gradient on e[D-1]
    for (int i = D - 1; i >= 1; --i) {
      if (i <= D - 2)
        for (size_t k = 0; k < d.v.size(); ++k) d.v[k] += dskip[i].v[k];
      d = pools[i - 1].backward(enc[i].backward(d));
    }
    for (size_t k = 0; k < d.v.size(); ++k) d.v[k] += dskip[0].v[k];
    return enc[0].backward(d);
  }

  void zero_grad() {
    for (auto& p : params())
      if (p.grad) std::fill(p.grad->begin(), p.grad->end(), T(0));
  }

  std::vector<ParamRef<T>> params();
};

template <typename T>
std::vector<ParamRef<T>> Model<T>::params() {
  std::vector<ParamRef<T>> out;
  auto add_conv = [&](const std::string& base, Conv2d<T>& c) {
    out.push_back({base + ".weight", &c.weight, &c.gweight,
                   {c.out_c, c.in_c, c.ksize, c.ksize}, true});
    if (c.has_bias) out.push_back({base + ".bias", &c.bias, &c.gbias, {c.out_c}, true});
  };
  auto add_bn = [&](const std::string& base, BatchNorm2d<T>& b) {
    out.push_back({base + ".scale", &b.scale, &b.gscale, {b.c}, true});
    out.push_back({base + ".shift", &b.shift, &b.gshift, {b.c}, true});
    out.push_back({base + ".running_mean", &b.running_mean, nullptr, {b.c}, false});
    out.push_back({base + ".running_var", &b.running_var, nullptr, {b.c}, false});
  };
  auto add_double = [&](const std::string& base, DoubleConv<T>& dcv) {
    add_conv(base + ".conv1", dcv.c1);
    add_bn(base + ".bn1", dcv.b1);
    add_conv(base + ".conv2", dcv.c2);
    add_bn(base + ".bn2", dcv.b2);
  };
  for (size_t i = 0; i < enc.size(); ++i) add_double("enc" + std::to_string(i + 1), enc[i]);
  for (size_t j = 0; j < dec.size(); ++j) {
    const std::string base = "dec" + std::to_string(j + 1);
    add_conv(base + ".upconv", dec[j].upconv);
    add_bn(base + ".upbn", dec[j].upbn);
    add_conv(base + ".att.wg", dec[j].att.wg);
    add_bn(base + ".att.bng", dec[j].att.bng);
    add_conv(base + ".att.wx", dec[j].att.wx);
    add_bn(base + ".att.bnx", dec[j].att.bnx);
    add_conv(base + ".att.psi", dec[j].att.psi);
    add_double(base + ".fuse", dec[j].fuse);
  }
  add_conv("head.conv1", head1);
  out.push_back({"head.prelu.slope", &prelu.slope, &prelu.gslope, {1}, true});
  add_conv("head.conv2", head2);
  return out;
}

/// Adam with bias correction; state indexed by registry order.
template <typename T>
struct Adam {
  double lr = 1e-4, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  std::vector<std::vector<double>> m, v;

  void step(std::vector<ParamRef<T>> ps) {
    if (m.empty()) {
      m.resize(ps.size());
      v.resize(ps.size());
      for (size_t i = 0; i < ps.size(); ++i) {
        if (!ps[i].trainable) continue;
        m[i].assign(ps[i].value->size(), 0.0);
        v[i].assign(ps[i].value->size(), 0.0);
      }
    }
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (size_t i = 0; i < ps.size(); ++i) {
      if (!ps[i].trainable || !ps[i].grad) continue;
      auto& val = *ps[i].value;
      auto& grd = *ps[i].grad;
      for (size_t k = 0; k < val.size(); ++k) {
        const double g = grd[k];
        m[i][k] = beta1 * m[i][k] + (1.0 - beta1) * g;
        v[i][k] = beta2 * v[i][k] + (1.0 - beta2) * g * g;
        val[k] -= static_cast<T>(lr * (m[i][k] / bc1) / (std::sqrt(v[i][k] / bc2) + eps));
      }
    }
  }
};

/// Checkpoint directory layout: manifest.json plus one little-endian
/// float32 raw binary per named array.
void save_checkpoint(const std::string& dir, Model<float>& model,
                     const nlohmann::json& provenance);
std::unique_ptr<Model<float>> load_checkpoint(const std::string& dir,
                                              nlohmann::json* manifest_out = nullptr);

} // namespace misr4d

#endif
