#pragma once

// Fixed-topology feed-forward network (two rectified hidden layers, linear
// head) with backpropagation for the TD loss and an Adam optimizer.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <span>
#include <string>

#include <json.hpp>

#include "irl_dr/error.hpp"
#include "irl_dr/rng.hpp"

namespace irl_dr {

template <std::size_t In, std::size_t H1, std::size_t H2, std::size_t Out>
class Mlp {
 public:
  static constexpr std::size_t kInputs = In;
  static constexpr std::size_t kOutputs = Out;

  // Flat parameter layout: W1 (H1 x In, row-major), b1, W2 (H2 x H1), b2,
  // W3 (Out x H2), b3.
  static constexpr std::size_t kW1 = 0;
  static constexpr std::size_t kB1 = kW1 + H1 * In;
  static constexpr std::size_t kW2 = kB1 + H1;
  static constexpr std::size_t kB2 = kW2 + H2 * H1;
  static constexpr std::size_t kW3 = kB2 + H2;
  static constexpr std::size_t kB3 = kW3 + Out * H2;
  static constexpr std::size_t kParamCount = kB3 + Out;

  using Input = std::array<double, In>;
  using Output = std::array<double, Out>;
  using Params = std::array<double, kParamCount>;

  /// Activations kept for the backward pass.
  struct Cache {
    Input x{};
    std::array<double, H1> h1{};
    std::array<double, H2> h2{};
    Output q{};
  };

  Mlp() : params_(std::make_unique<Params>()) { params_->fill(0.0); }
  Mlp(const Mlp& o) : params_(std::make_unique<Params>(*o.params_)) {}
  Mlp& operator=(const Mlp& o) {
    if (this != &o) *params_ = *o.params_;
    return *this;
  }
  Mlp(Mlp&&) noexcept = default;
  Mlp& operator=(Mlp&&) noexcept = default;

  /// He-uniform weights, zero biases.
  static Mlp initialized(Rng& rng) {
    Mlp net;
    auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (std::size_t i = 0; i < count; ++i) net.p()[offset + i] = rng.uniform(-limit, limit);
    };
    fill(kW1, H1 * In, In);
    fill(kW2, H2 * H1, H1);
    fill(kW3, Out * H2, H2);
    return net;
  }

  Params& p() { return *params_; }
  const Params& p() const { return *params_; }

  Output forward(const Input& x) const {
    Cache c;
    forward(x, c);
    return c.q;
  }

  void forward(const Input& x, Cache& c) const {
    for (double v : x)
      if (!std::isfinite(v)) throw ContractError("mlp forward: non-finite input");
    const Params& w = *params_;
    c.x = x;
    for (std::size_t j = 0; j < H1; ++j) {
      double s = w[kB1 + j];
      const double* row = &w[kW1 + j * In];
      for (std::size_t i = 0; i < In; ++i) s += row[i] * x[i];
      c.h1[j] = s > 0.0 ? s : 0.0;
    }
    for (std::size_t j = 0; j < H2; ++j) {
      double s = w[kB2 + j];
      const double* row = &w[kW2 + j * H1];
      for (std::size_t i = 0; i < H1; ++i) s += row[i] * c.h1[i];
      c.h2[j] = s > 0.0 ? s : 0.0;
    }
    for (std::size_t j = 0; j < Out; ++j) {
      double s = w[kB3 + j];
      const double* row = &w[kW3 + j * H2];
      for (std::size_t i = 0; i < H2; ++i) s += row[i] * c.h2[i];
      c.q[j] = s;
    }
  }

  /// Adds scale * d/dtheta [ 0.5 (Q(x)[action] - target)^2 ] into `grad`.
  void accumulate_gradient(const Cache& c, std::size_t action, double target, Params& grad, double scale = 1.0) const {
    require(action < Out, "mlp backward: action index out of range");
    const Params& w = *params_;
    const double delta = scale * (c.q[action] - target);
    if (delta == 0.0) return;
    std::array<double, H2> d2{};
    const double* w3 = &w[kW3 + action * H2];
    double* g3 = &grad[kW3 + action * H2];
    for (std::size_t i = 0; i < H2; ++i) {
      g3[i] += delta * c.h2[i];
      d2[i] = c.h2[i] > 0.0 ? delta * w3[i] : 0.0;
    }
    grad[kB3 + action] += delta;
    std::array<double, H1> d1{};
    for (std::size_t j = 0; j < H2; ++j) {
      if (d2[j] == 0.0) continue;
      const double* row = &w[kW2 + j * H1];
      double* g = &grad[kW2 + j * H1];
      for (std::size_t i = 0; i < H1; ++i) {
        g[i] += d2[j] * c.h1[i];
        d1[i] += d2[j] * row[i];
      }
      grad[kB2 + j] += d2[j];
    }
    for (std::size_t j = 0; j < H1; ++j) {
      if (c.h1[j] <= 0.0 || d1[j] == 0.0) continue;
      double* g = &grad[kW1 + j * In];
      for (std::size_t i = 0; i < In; ++i) g[i] += d1[j] * c.x[i];
      grad[kB1 + j] += d1[j];
    }
  }

  /// Gradient of 0.5 (Q(x)[action] - target)^2 for a single sample.
  Params gradient(const Input& x, std::size_t action, double target) const {
    Cache c;
    forward(x, c);
    Params g{};
    accumulate_gradient(c, action, target, g);
    return g;
  }

  bool all_finite() const {
    return std::all_of(params_->begin(), params_->end(), [](double v) { return std::isfinite(v); });
  }

  bool operator==(const Mlp& o) const { return *params_ == *o.params_; }

 private:
  std::unique_ptr<Params> params_;
};

/// The Q-network: 8 observation inputs, two hidden layers of 32, 11 levels.
using QNet = Mlp<8, 32, 32, 11>;

template <std::size_t N>
struct AdamState {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::array<double, N> m{};
  std::array<double, N> v{};
  std::uint64_t step = 0;
};

template <std::size_t N>
void apply_update(std::array<double, N>& params, const std::array<double, N>& grad, AdamState<N>& opt) {
  ++opt.step;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (std::size_t i = 0; i < N; ++i) {
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * grad[i];
    opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
    const double m_hat = opt.m[i] / c1;
    const double v_hat = opt.v[i] / c2;
    params[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
  }
}

/// target <- tau * online + (1 - tau) * target.
template <class Net>
void blend(Net& target, const Net& online, double tau) {
  require(tau >= 0.0 && tau <= 1.0, "blend: tau must lie in [0, 1]");
  auto& t = target.p();
  const auto& o = online.p();
  if (tau == 1.0) {
    t = o;
    return;
  }
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = tau * o[i] + (1.0 - tau) * t[i];
}

// Checkpoint format: <base>.bin holds every parameter as a little-endian
// IEEE-754 float64 in the flat layout above; <base>.json describes shapes
// and carries caller metadata under "meta".

template <std::size_t In, std::size_t H1, std::size_t H2, std::size_t Out>
nlohmann::json describe(const Mlp<In, H1, H2, Out>&) {
  using Net = Mlp<In, H1, H2, Out>;
  return {{"format", "irl-dr-mlp"},
          {"version", 1},
          {"dtype", "float64-le"},
          {"activation", {"relu", "relu", "identity"}},
          {"layers",
           {{{"weight", {H1, In}}, {"bias", {H1}}, {"offset", Net::kW1}},
            {{"weight", {H2, H1}}, {"bias", {H2}}, {"offset", Net::kW2}},
            {{"weight", {Out, H2}}, {"bias", {Out}}, {"offset", Net::kW3}}}},
          {"param_count", Net::kParamCount}};
}

template <class Net>
void save_checkpoint(const std::string& base, const Net& net, const nlohmann::json& meta = nlohmann::json::object()) {
  std::ofstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write checkpoint " + base + ".bin");
  for (double v : net.p()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>((bits >> (8 * k)) & 0xFF);
    bin.write(bytes, 8);
  }
  auto sidecar = describe(net);
  sidecar["meta"] = meta;
  std::ofstream js(base + ".json");
  if (!js) throw std::runtime_error("cannot write checkpoint " + base + ".json");
  js << sidecar.dump(2) << '\n';
}

/// Loads parameters; returns the sidecar's "meta" object.
template <class Net>
nlohmann::json load_checkpoint(const std::string& base, Net& net) {
  std::ifstream js(base + ".json");
  if (!js) throw std::runtime_error("missing checkpoint sidecar " + base + ".json");
  const auto sidecar = nlohmann::json::parse(js);
  if (sidecar.at("param_count").get<std::size_t>() != Net::kParamCount || sidecar.at("layers") != describe(net)["layers"])
    throw std::runtime_error("checkpoint " + base + " has a different network shape");
  std::ifstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("missing checkpoint " + base + ".bin");
  for (double& v : net.p()) {
    unsigned char bytes[8];
    if (!bin.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("checkpoint " + base + ".bin truncated");
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
    v = std::bit_cast<double>(bits);
  }
  return sidecar.value("meta", nlohmann::json::object());
}

}  // namespace irl_dr
