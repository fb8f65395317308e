#include "qfp/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <Eigen/Core>
#include <json.hpp>

#include "qfp/binary_io.hpp"
#include "qfp/corpus.hpp"
#include "qfp/error.hpp"
#include "qfp/rng.hpp"

namespace qfp {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::linear: return "linear";
  }
  return "?";
}

Activation activation_from_string(std::string_view s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  if (s == "linear") return Activation::linear;
  throw FormatError("unknown activation: " + std::string(s));
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamParams& cfg) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw DataError("adam_step: shape mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  const double b1 = cfg.beta1, b2 = cfg.beta2, lr = cfg.learning_rate, eps = cfg.epsilon;
  double* __restrict p = params.data();
  double* __restrict m = state.m.data();
  double* __restrict v = state.v.data();
  const double* __restrict g = grads.data();
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

std::vector<LayerSpec> default_architecture(std::size_t d) {
  if (d < 8) throw ConfigError("auto-encoder needs input dimension >= 8, got " + std::to_string(d));
  // Widths ceil(d * num / 8) for the taper 3/4, 1/2, 1/4, 1/8, 1/4, 1/2, 3/4.
  static constexpr std::size_t kEighths[] = {6, 4, 2, 1, 2, 4, 6};
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < 7; ++i) {
    const std::size_t width = std::max<std::size_t>(4, (d * kEighths[i] + 7) / 8);
    layers.push_back({width, i == 3 ? Activation::relu : Activation::tanh});
  }
  layers.push_back({d, Activation::linear});
  return layers;
}

Autoencoder::Autoencoder(std::size_t input_dim, std::vector<LayerSpec> layers, std::uint64_t seed)
    : input_dim_(input_dim), layers_(std::move(layers)), seed_(seed) {
  validate();
  compute_offsets();
  Rng rng(seed);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const double bound = init_bound(l);
    for (auto& w : weights(l)) {
      do {
        w = rng.uniform(-bound, bound);
      } while (w == -bound);
    }
  }
}

void Autoencoder::validate() const {
  if (input_dim_ == 0) throw ConfigError("auto-encoder input dimension must be positive");
  if (layers_.size() < 2) throw ConfigError("auto-encoder needs at least one hidden layer");
  std::size_t relu = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& spec = layers_[l];
    if (spec.width == 0) throw ConfigError("layer width must be at least 1");
    const bool output = l + 1 == layers_.size();
    if (output) {
      if (spec.width != input_dim_ || spec.activation != Activation::linear)
        throw ConfigError("output layer must be linear with width equal to the input dimension");
    } else if (spec.activation == Activation::relu) {
      ++relu;
    } else if (spec.activation != Activation::tanh) {
      throw ConfigError("hidden layers must be tanh or relu");
    }
  }
  if (relu != 1) throw ConfigError("exactly one hidden layer must use relu");
}

void Autoencoder::compute_offsets() {
  weight_offsets_.clear();
  bias_offsets_.clear();
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    weight_offsets_.push_back(offset);
    offset += layers_[l].width * layer_input_width(l);
    bias_offsets_.push_back(offset);
    offset += layers_[l].width;
  }
  params_.assign(offset, 0.0);
  adam_ = AdamState(offset);
}

std::size_t Autoencoder::layer_input_width(std::size_t layer) const {
  return layer == 0 ? input_dim_ : layers_[layer - 1].width;
}

std::span<double> Autoencoder::weights(std::size_t l) {
  return {params_.data() + weight_offsets_[l], layers_[l].width * layer_input_width(l)};
}
std::span<double> Autoencoder::biases(std::size_t l) {
  return {params_.data() + bias_offsets_[l], layers_[l].width};
}
std::span<const double> Autoencoder::weights(std::size_t l) const {
  return {params_.data() + weight_offsets_[l], layers_[l].width * layer_input_width(l)};
}
std::span<const double> Autoencoder::biases(std::size_t l) const {
  return {params_.data() + bias_offsets_[l], layers_[l].width};
}

double Autoencoder::init_bound(std::size_t layer) const {
  return std::sqrt(6.0 / static_cast<double>(layer_input_width(layer) + layers_[layer].width));
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMatrix>;
using GradWeights = Eigen::Map<RowMatrix>;
using ConstBias = Eigen::Map<const Eigen::RowVectorXd>;
using GradBias = Eigen::Map<Eigen::RowVectorXd>;

// Layer outputs for a batch (one row per sample); outs[0] is the input.
struct Workspace {
  std::vector<RowMatrix> outs;
  std::vector<RowMatrix> deltas;
};

void apply_activation(Activation a, RowMatrix& z) {
  switch (a) {
    case Activation::tanh: z = z.array().tanh(); break;
    case Activation::relu: z = z.array().max(0.0); break;
    case Activation::linear: break;
  }
}

// Multiplies delta in place by the activation derivative, expressed through the output.
void apply_derivative(Activation a, const RowMatrix& out, RowMatrix& delta) {
  switch (a) {
    case Activation::tanh: delta.array() *= 1.0 - out.array().square(); break;
    case Activation::relu: delta.array() *= (out.array() > 0.0).cast<double>(); break;  // 0 at the kink
    case Activation::linear: break;
  }
}

void run_forward(const Autoencoder& m, Workspace& ws) {
  const auto& layers = m.layers();
  ws.outs.resize(layers.size() + 1);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto w = m.weights(l);
    const auto b = m.biases(l);
    const ConstWeights W(w.data(), static_cast<Eigen::Index>(layers[l].width),
                         static_cast<Eigen::Index>(m.layer_input_width(l)));
    const ConstBias B(b.data(), static_cast<Eigen::Index>(b.size()));
    auto& out = ws.outs[l + 1];
    out.noalias() = ws.outs[l] * W.transpose();
    out.rowwise() += B;
    apply_activation(layers[l].activation, out);
  }
}

// Sum over the batch of per-sample MSE; gradients of (scale * that sum) are added to grads.
double run_backward(const Autoencoder& m, Workspace& ws, std::span<double> grads, double scale) {
  const auto& layers = m.layers();
  const std::size_t L = layers.size();
  const RowMatrix& x = ws.outs[0];
  const RowMatrix& y = ws.outs[L];
  const double d = static_cast<double>(x.cols());

  ws.deltas.resize(L);
  RowMatrix& top = ws.deltas[L - 1];
  top = y - x;
  const double loss = top.squaredNorm() / d;
  top *= 2.0 * scale / d;
  apply_derivative(layers[L - 1].activation, y, top);

  const double* base = m.parameters().data();
  for (std::size_t l = L; l-- > 0;) {
    const auto w = m.weights(l);
    const auto rows = static_cast<Eigen::Index>(layers[l].width);
    const auto cols = static_cast<Eigen::Index>(m.layer_input_width(l));
    const RowMatrix& delta = ws.deltas[l];
    GradWeights gw(grads.data() + (w.data() - base), rows, cols);
    GradBias gb(grads.data() + (m.biases(l).data() - base), rows);
    gw.noalias() += delta.transpose() * ws.outs[l];
    gb += delta.colwise().sum();
    if (l == 0) break;
    RowMatrix& prev = ws.deltas[l - 1];
    prev.noalias() = delta * ConstWeights(w.data(), rows, cols);
    apply_derivative(layers[l - 1].activation, ws.outs[l], prev);
  }
  return loss;
}

void load_row(Workspace& ws, std::span<const double> x) {
  ws.outs.resize(1);
  ws.outs[0] = Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

}  // namespace

std::vector<double> Autoencoder::forward(std::span<const double> x) const {
  if (x.size() != input_dim_)
    throw DataError("forward: input has dimension " + std::to_string(x.size()) + ", model expects " +
                    std::to_string(input_dim_));
  Workspace ws;
  load_row(ws, x);
  run_forward(*this, ws);
  const auto& y = ws.outs.back();
  return {y.data(), y.data() + y.size()};
}

double Autoencoder::accumulate_gradient(std::span<const double> x, std::span<double> grads) const {
  if (x.size() != input_dim_) throw DataError("accumulate_gradient: dimension mismatch");
  if (grads.size() != params_.size()) throw DataError("accumulate_gradient: gradient buffer size mismatch");
  Workspace ws;
  load_row(ws, x);
  run_forward(*this, ws);
  return run_backward(*this, ws, grads, 1.0);
}

double Autoencoder::loss(std::span<const double> x) const {
  const auto y = forward(x);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - x[i]) * (y[i] - x[i]);
  return s / static_cast<double>(y.size());
}

TrainResult train(Autoencoder& model, const Matrix& data, const TrainConfig& cfg) {
  if (data.rows == 0) throw DataError("train: no training rows");
  if (data.cols != model.input_dim())
    throw DataError("train: data has " + std::to_string(data.cols) + " columns, model expects " +
                    std::to_string(model.input_dim()));
  if (cfg.epochs < 1) throw ConfigError("train: epochs must be at least 1");
  if (!(cfg.adam.learning_rate > 0.0)) throw ConfigError("train: learning rate must be positive");
  if (cfg.batch_size < 1) throw ConfigError("train: batch size must be at least 1");

  Rng rng(cfg.shuffle_seed);
  std::vector<std::size_t> order(data.rows);
  std::iota(order.begin(), order.end(), 0);
  AlignedVector grads(model.parameter_count());
  Workspace ws;
  TrainResult result;
  result.loss_trace.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      ws.outs.resize(1);
      auto& batch = ws.outs[0];
      batch.resize(static_cast<Eigen::Index>(end - start), static_cast<Eigen::Index>(data.cols));
      for (std::size_t b = start; b < end; ++b) {
        const auto row = data.row(order[b]);
        std::copy(row.begin(), row.end(), batch.row(static_cast<Eigen::Index>(b - start)).data());
      }
      std::fill(grads.begin(), grads.end(), 0.0);
      run_forward(model, ws);
      epoch_loss += run_backward(model, ws, grads, 1.0 / static_cast<double>(end - start));
      adam_step(model.parameters(), grads, model.adam_state(), cfg.adam);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) throw DivergenceError("training loss is not finite", epoch + 1);
    for (double p : model.parameters())
      if (!std::isfinite(p)) throw DivergenceError("parameters became non-finite", epoch + 1);
    result.loss_trace.push_back(epoch_loss);
  }
  return result;
}

double gradient_check(const Autoencoder& model, std::span<const double> x, double epsilon) {
  std::vector<double> grads(model.parameter_count(), 0.0);
  model.accumulate_gradient(x, grads);
  return gradient_check(model, x, grads, epsilon);
}

double gradient_check(const Autoencoder& model, std::span<const double> x,
                      std::span<const double> analytic_grads, double epsilon) {
  if (analytic_grads.size() != model.parameter_count())
    throw DataError("gradient_check: gradient size mismatch");
  Autoencoder probe = model;
  auto params = probe.parameters();
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + epsilon;
    const double up = probe.loss(x);
    params[i] = saved - epsilon;
    const double down = probe.loss(x);
    params[i] = saved;
    const double fd = (up - down) / (2.0 * epsilon);
    const double ga = analytic_grads[i];
    worst = std::max(worst, std::abs(ga - fd) / std::max(1.0, std::abs(ga) + std::abs(fd)));
  }
  return worst;
}

namespace {
constexpr std::string_view kModelMagic = "QFPM";
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

void save_autoencoder(const Autoencoder& model, const std::filesystem::path& path,
                      const TrainConfig* cfg) {
  BinaryWriter w(kModelMagic, kModelVersion);
  w.u64(model.input_dim());
  w.u64(model.seed());
  w.u64(model.layers().size());
  for (const auto& l : model.layers()) {
    w.u64(l.width);
    w.u32(static_cast<std::uint32_t>(l.activation));
  }
  w.u64(model.parameter_count());
  w.f64s(model.parameters());
  const auto& adam = model.adam_state();
  w.u64(adam.step);
  w.f64s(adam.m);
  w.f64s(adam.v);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  w.write_to(path);

  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : model.layers()) layers.push_back({{"width", l.width}, {"activation", to_string(l.activation)}});
  nlohmann::json side{{"format", "qfp-model"},
                      {"version", kModelVersion},
                      {"input_dim", model.input_dim()},
                      {"seed", model.seed()},
                      {"parameter_count", model.parameter_count()},
                      {"layers", layers}};
  if (cfg) {
    side["train"] = {{"epochs", cfg->epochs},
                     {"learning_rate", cfg->adam.learning_rate},
                     {"beta1", cfg->adam.beta1},
                     {"beta2", cfg->adam.beta2},
                     {"epsilon", cfg->adam.epsilon},
                     {"batch_size", cfg->batch_size},
                     {"shuffle_seed", cfg->shuffle_seed},
                     {"loss", "mse"}};
  }
  write_text_file(path.string() + ".json", side.dump(2) + "\n");
}

Autoencoder load_autoencoder(const std::filesystem::path& path) {
  BinaryReader r(path, kModelMagic, kModelVersion);
  Autoencoder m;
  m.input_dim_ = r.u64();
  m.seed_ = r.u64();
  const auto n_layers = r.u64();
  if (n_layers > 1024) throw FormatError(path.string() + ": implausible layer count");
  for (std::uint64_t i = 0; i < n_layers; ++i) {
    LayerSpec spec;
    spec.width = r.u64();
    const auto act = r.u32();
    if (act > 2) throw FormatError(path.string() + ": unknown activation tag");
    spec.activation = static_cast<Activation>(act);
    m.layers_.push_back(spec);
  }
  try {
    m.validate();
  } catch (const ConfigError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  m.compute_offsets();
  const auto count = r.u64();
  if (count != m.params_.size()) throw FormatError(path.string() + ": parameter count mismatch");
  const auto values = r.f64s(count);
  m.params_.assign(values.begin(), values.end());
  m.adam_.step = r.u64();
  m.adam_.m = r.f64s(count);
  m.adam_.v = r.f64s(count);
  r.expect_end();
  return m;
}

void save_loss_trace_csv(const std::vector<double>& trace, const std::filesystem::path& path) {
  std::string out = "epoch,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, trace[i]);
    out += buf;
  }
  write_text_file(path, out);
}

}  // namespace qfp
