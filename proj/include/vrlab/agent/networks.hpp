#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vrlab/numerics/init.hpp"
#include "vrlab/numerics/ops.hpp"
#include "vrlab/numerics/optim.hpp"
#include "vrlab/numerics/spectral.hpp"
#include "vrlab/rng.hpp"

namespace vrlab {

struct MlpLayerSpec {
  int64_t out = 0;
  Act act = Act::identity;
  bool layer_norm = false;
  bool spectral_norm = false;
};

// Fully connected stack. CReLU layers double the width seen by the next layer.
// Spectral-norm layers persist a power-iteration vector that is advanced once
// per taped forward; inference forwards leave it untouched.
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string name, int64_t in_dim, std::vector<MlpLayerSpec> specs, InitScheme scheme, T lr,
      Rng& rng)
      : name_(std::move(name)), in_dim_(in_dim), specs_(std::move(specs)), scheme_(scheme), lr_(lr) {
    int64_t in = in_dim_;
    for (size_t i = 0; i < specs_.size(); ++i) {
      const auto& s = specs_[i];
      Layer layer;
      const std::string base = name_ + ".fc" + std::to_string(i);
      layer.w = Parameter<T>(base + ".weight", init_layer<T>({s.out, in}, scheme_, rng), lr_);
      layer.b = Parameter<T>(base + ".bias", Tensor<T>({s.out}), lr_);
      if (s.layer_norm) {
        const std::string ln = name_ + ".ln" + std::to_string(i);
        layer.ln_gain = Parameter<T>(ln + ".gain", Tensor<T>({s.out}, T(1)), lr_);
        layer.ln_bias = Parameter<T>(ln + ".bias", Tensor<T>({s.out}), lr_);
      }
      if (s.spectral_norm) {
        layer.sn_u.resize(static_cast<size_t>(s.out));
        T norm = T(0);
        for (auto& u : layer.sn_u) {
          u = static_cast<T>(rng.normal());
          norm += u * u;
        }
        norm = std::sqrt(norm);
        for (auto& u : layer.sn_u) u /= norm;
      }
      layers_.push_back(std::move(layer));
      in = (s.act == Act::crelu) ? 2 * s.out : s.out;
    }
    out_dim_ = in;
  }

  TensorPtr<T> forward(Tape<T>* tape, const TensorPtr<T>& x, FauProbe* probe = nullptr) {
    TensorPtr<T> h = x;
    for (size_t i = 0; i < layers_.size(); ++i) {
      auto& l = layers_[i];
      TensorPtr<T> w = l.w.value;
      if (specs_[i].spectral_norm) {
        std::vector<T> u = l.sn_u;
        std::vector<T> v;
        power_iteration_step(*l.w.value, u, v);
        if (tape) l.sn_u = u;  // persist only on training forwards
        auto uc = make_tensor<T>({static_cast<int64_t>(u.size())}, u);
        auto vc = make_tensor<T>({static_cast<int64_t>(v.size())}, v);
        w = spectral_scale(tape, l.w.value, uc, vc);
      }
      h = linear(tape, h, w, l.b.value);
      if (l.ln_gain) h = layer_norm(tape, h, l.ln_gain->value, l.ln_bias->value);
      h = activate(tape, h, specs_[i].act, probe);
    }
    return h;
  }

  // Structural copy under a new name; fresh=true redraws the weights.
  Mlp clone(const std::string& new_name, bool fresh, Rng* rng) const {
    if (fresh) return Mlp(new_name, in_dim_, specs_, scheme_, lr_, *rng);
    Mlp out;
    out.name_ = new_name;
    out.in_dim_ = in_dim_;
    out.out_dim_ = out_dim_;
    out.specs_ = specs_;
    out.scheme_ = scheme_;
    out.lr_ = lr_;
    for (size_t i = 0; i < layers_.size(); ++i) {
      const auto& src = layers_[i];
      Layer l;
      const std::string base = new_name + ".fc" + std::to_string(i);
      l.w = Parameter<T>(base + ".weight", *src.w.value, lr_);
      l.b = Parameter<T>(base + ".bias", *src.b.value, lr_);
      if (src.ln_gain) {
        const std::string ln = new_name + ".ln" + std::to_string(i);
        l.ln_gain = Parameter<T>(ln + ".gain", *src.ln_gain->value, lr_);
        l.ln_bias = Parameter<T>(ln + ".bias", *src.ln_bias->value, lr_);
      }
      l.sn_u = src.sn_u;
      out.layers_.push_back(std::move(l));
    }
    return out;
  }

  void copy_values_from(const Mlp& other) {
    auto mine = params();
    auto theirs = const_cast<Mlp&>(other).params();
    if (mine.size() != theirs.size()) throw ContractViolation("mlp copy: structure mismatch");
    for (size_t i = 0; i < mine.size(); ++i) mine[i]->value->data = theirs[i]->value->data;
  }

  void set_frozen(bool frozen) {
    frozen_ = frozen;
    for (auto* p : params()) {
      p->trainable = !frozen;
      p->value->requires_grad = !frozen;
    }
  }
  bool frozen() const { return frozen_; }

  std::vector<Parameter<T>*> params() {
    std::vector<Parameter<T>*> out;
    for (auto& l : layers_) {
      out.push_back(&l.w);
      out.push_back(&l.b);
      if (l.ln_gain) {
        out.push_back(&*l.ln_gain);
        out.push_back(&*l.ln_bias);
      }
    }
    return out;
  }

  const std::string& name() const { return name_; }
  int64_t in_dim() const { return in_dim_; }
  int64_t out_dim() const { return out_dim_; }

 private:
  struct Layer {
    Parameter<T> w, b;
    std::optional<Parameter<T>> ln_gain, ln_bias;
    std::vector<T> sn_u;
  };

  std::string name_;
  int64_t in_dim_ = 0;
  int64_t out_dim_ = 0;
  std::vector<MlpLayerSpec> specs_;
  InitScheme scheme_ = InitScheme::orthogonal;
  T lr_ = T(1e-4);
  std::vector<Layer> layers_;
  bool frozen_ = false;
};

// Pixel encoder: three 32-filter 3x3 convs (strides 2,2,1) with relu, then a
// linear projection to the feature dimension bounded by tanh. Optional layer
// norm after each conv and after the projection.
template <typename T>
class Encoder {
 public:
  Encoder() = default;
  Encoder(std::string name, int64_t channels, int64_t height, int64_t width, int64_t features,
          bool use_layer_norm, InitScheme scheme, T lr, Rng& rng)
      : name_(std::move(name)), channels_(channels), height_(height), width_(width),
        features_(features), layer_norm_(use_layer_norm) {
    const int64_t strides[3] = {2, 2, 1};
    int64_t c = channels, h = height, w = width;
    for (int i = 0; i < 3; ++i) {
      if (h < 3 || w < 3) throw ConfigError("encoder: frame too small for conv stack");
      Conv conv;
      const std::string base = name_ + ".conv" + std::to_string(i);
      conv.w = Parameter<T>(base + ".weight", init_layer<T>({32, c, 3, 3}, scheme, rng), lr);
      conv.b = Parameter<T>(base + ".bias", Tensor<T>({32}), lr);
      conv.stride = strides[i];
      h = (h - 3) / strides[i] + 1;
      w = (w - 3) / strides[i] + 1;
      c = 32;
      if (layer_norm_) {
        const std::string ln = name_ + ".convln" + std::to_string(i);
        conv.ln_gain = Parameter<T>(ln + ".gain", Tensor<T>({c * h * w}, T(1)), lr);
        conv.ln_bias = Parameter<T>(ln + ".bias", Tensor<T>({c * h * w}), lr);
      }
      convs_.push_back(std::move(conv));
    }
    repr_dim_ = c * h * w;
    fc_w_ = Parameter<T>(name_ + ".fc.weight", init_layer<T>({features, repr_dim_}, scheme, rng), lr);
    fc_b_ = Parameter<T>(name_ + ".fc.bias", Tensor<T>({features}), lr);
    if (layer_norm_) {
      fc_ln_gain_ = Parameter<T>(name_ + ".fcln.gain", Tensor<T>({features}, T(1)), lr);
      fc_ln_bias_ = Parameter<T>(name_ + ".fcln.bias", Tensor<T>({features}), lr);
    }
  }

  TensorPtr<T> forward(Tape<T>* tape, const TensorPtr<T>& x, FauProbe* probe = nullptr) {
    TensorPtr<T> h = x;
    for (auto& c : convs_) {
      h = conv2d(tape, h, c.w.value, c.stride);
      h = bias_channels(tape, h, c.b.value);
      if (c.ln_gain) h = layer_norm(tape, h, c.ln_gain->value, c.ln_bias->value);
      h = activate(tape, h, Act::relu, probe);
    }
    h = linear(tape, h, fc_w_.value, fc_b_.value);
    if (fc_ln_gain_) h = layer_norm(tape, h, fc_ln_gain_->value, fc_ln_bias_->value);
    return activate(tape, h, Act::tanh);
  }

  std::vector<Parameter<T>*> params() {
    std::vector<Parameter<T>*> out;
    for (auto& c : convs_) {
      out.push_back(&c.w);
      out.push_back(&c.b);
      if (c.ln_gain) {
        out.push_back(&*c.ln_gain);
        out.push_back(&*c.ln_bias);
      }
    }
    out.push_back(&fc_w_);
    out.push_back(&fc_b_);
    if (fc_ln_gain_) {
      out.push_back(&*fc_ln_gain_);
      out.push_back(&*fc_ln_bias_);
    }
    return out;
  }

  int64_t out_dim() const { return features_; }
  int64_t repr_dim() const { return repr_dim_; }

 private:
  struct Conv {
    Parameter<T> w, b;
    std::optional<Parameter<T>> ln_gain, ln_bias;
    int64_t stride = 1;
  };

  std::string name_;
  int64_t channels_ = 0, height_ = 0, width_ = 0, features_ = 0, repr_dim_ = 0;
  bool layer_norm_ = false;
  std::vector<Conv> convs_;
  Parameter<T> fc_w_, fc_b_;
  std::optional<Parameter<T>> fc_ln_gain_, fc_ln_bias_;
};

// A head that supports output-preserving plasticity injection. Before
// injection it is just the base MLP. After injection the base is frozen and
// the output becomes base(z) + fresh1(z) - fresh2(z), where fresh1 is the only
// trainable piece and fresh2 stays at the shared fresh initialization.
template <typename T>
class HeadEnsemble {
 public:
  HeadEnsemble() = default;
  explicit HeadEnsemble(Mlp<T> base) : base_(std::move(base)) {}

  TensorPtr<T> forward(Tape<T>* tape, const TensorPtr<T>& x, FauProbe* probe = nullptr) {
    auto out = base_.forward(tape, x, probe);
    if (!injected_) return out;
    auto o1 = inj1_.forward(tape, x, probe);
    auto o2 = inj2_.forward(tape, x, probe);
    // out + o1 - o2, elementwise
    auto y = make_tensor<T>(out->shape);
    for (int64_t i = 0; i < y->numel(); ++i)
      y->data[i] = out->data[i] + o1->data[i] - o2->data[i];
    const bool rg = tape && (out->requires_grad || o1->requires_grad || o2->requires_grad);
    if (rg) {
      y->requires_grad = true;
      y->ensure_grad();
      if (out->requires_grad) out->ensure_grad();
      if (o1->requires_grad) o1->ensure_grad();
      if (o2->requires_grad) o2->ensure_grad();
      tape->push([out, o1, o2, y] {
        for (int64_t i = 0; i < y->numel(); ++i) {
          if (out->requires_grad) out->grad[i] += y->grad[i];
          if (o1->requires_grad) o1->grad[i] += y->grad[i];
          if (o2->requires_grad) o2->grad[i] -= y->grad[i];
        }
      });
    }
    return y;
  }

  // Injects using `fresh` as the shared initialization of both new copies.
  void inject(const Mlp<T>& fresh) {
    if (injected_) throw ConfigError("plasticity injection: module already injected");
    inj1_ = fresh.clone(base_.name() + ".inj1", false, nullptr);
    inj2_ = fresh.clone(base_.name() + ".inj2", false, nullptr);
    base_.set_frozen(true);
    inj2_.set_frozen(true);
    injected_ = true;
  }

  bool injected() const { return injected_; }
  Mlp<T>& base() { return base_; }
  Mlp<T>& inj1() { return inj1_; }
  Mlp<T>& inj2() { return inj2_; }

  std::vector<Parameter<T>*> params() {
    auto out = base_.params();
    if (injected_) {
      for (auto* p : inj1_.params()) out.push_back(p);
      for (auto* p : inj2_.params()) out.push_back(p);
    }
    return out;
  }

  std::vector<Parameter<T>*> trainable_params() {
    std::vector<Parameter<T>*> out;
    for (auto* p : params())
      if (p->trainable) out.push_back(p);
    return out;
  }

 private:
  Mlp<T> base_;
  Mlp<T> inj1_, inj2_;
  bool injected_ = false;
};

}  // namespace vrlab
