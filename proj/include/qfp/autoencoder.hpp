#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <new>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qfp/matrix.hpp"

namespace qfp {

// Fixed 64-byte alignment keeps vectorized reduction order independent of
// where the allocator happened to place the buffer.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using AlignedVector = std::vector<double, AlignedAllocator<double>>;

enum class Activation { tanh, relu, linear };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

struct LayerSpec {
  std::size_t width = 0;
  Activation activation = Activation::tanh;

  bool operator==(const LayerSpec&) const = default;
};

struct AdamParams {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamParams&) const = default;
};

struct TrainConfig {
  std::size_t epochs = 300;
  AdamParams adam;
  std::size_t batch_size = 16;
  std::uint64_t shuffle_seed = 0;

  bool operator==(const TrainConfig&) const = default;
};

// First and second moment estimates, shaped like the flat parameter vector.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
  bool operator==(const AdamState&) const = default;
};

// One bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamParams& cfg);

// Seven hidden layers tapering to a ReLU bottleneck, then a linear output of width d.
// Throws ConfigError when d < 8.
std::vector<LayerSpec> default_architecture(std::size_t d);

// Dense auto-encoder. Parameters are stored flat: for each layer the weight
// matrix (out x in, row-major) followed by the bias vector.
class Autoencoder {
 public:
  Autoencoder() = default;

  // Validates the shape invariants and draws Glorot-uniform weights; biases start at zero.
  Autoencoder(std::size_t input_dim, std::vector<LayerSpec> layers, std::uint64_t seed);

  std::size_t input_dim() const noexcept { return input_dim_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  const AdamState& adam_state() const noexcept { return adam_; }
  AdamState& adam_state() noexcept { return adam_; }

  std::span<double> weights(std::size_t layer);
  std::span<double> biases(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<const double> biases(std::size_t layer) const;
  std::size_t layer_input_width(std::size_t layer) const;

  // Glorot bound sqrt(6 / (fan_in + fan_out)) of a layer.
  double init_bound(std::size_t layer) const;

  std::vector<double> forward(std::span<const double> x) const;

  // Mean squared reconstruction error of one sample and its gradient with
  // respect to every parameter (accumulated into grads, which must be sized).
  double accumulate_gradient(std::span<const double> x, std::span<double> grads) const;

  double loss(std::span<const double> x) const;

  bool operator==(const Autoencoder&) const = default;

 private:
  friend Autoencoder load_autoencoder(const std::filesystem::path&);

  void validate() const;
  void compute_offsets();

  std::size_t input_dim_ = 0;
  std::vector<LayerSpec> layers_;
  std::uint64_t seed_ = 0;
  std::vector<std::size_t> weight_offsets_;
  std::vector<std::size_t> bias_offsets_;
  AlignedVector params_;
  AdamState adam_;
};

struct TrainResult {
  std::vector<double> loss_trace;  // mean per-sample loss seen during each epoch
};

// Mini-batch Adam on the MSE reconstruction loss, rows shuffled each epoch.
// Throws DataError on empty or mis-shaped data and DivergenceError on NaN/Inf.
TrainResult train(Autoencoder& model, const Matrix& data, const TrainConfig& cfg);

// max |g_a - g_fd| / max(1, |g_a| + |g_fd|) over all parameters, with central differences.
double gradient_check(const Autoencoder& model, std::span<const double> x, double epsilon = 1e-5);
double gradient_check(const Autoencoder& model, std::span<const double> x,
                      std::span<const double> analytic_grads, double epsilon = 1e-5);

// Binary model file plus a JSON sidecar "<path>.json" with hyperparameters.
void save_autoencoder(const Autoencoder& model, const std::filesystem::path& path,
                      const TrainConfig* cfg = nullptr);
Autoencoder load_autoencoder(const std::filesystem::path& path);

void save_loss_trace_csv(const std::vector<double>& trace, const std::filesystem::path& path);

}  // namespace qfp
