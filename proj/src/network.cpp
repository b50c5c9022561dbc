#include "permnet/network.hpp"

#include <cmath>

#include "linalg.hpp"
#include "permnet/error.hpp"
#include "permnet/rng.hpp"

namespace permnet {

using detail::gemm_a_bt_acc;
using detail::gemm_acc;
using detail::gemm_at_b_acc;

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::ShapeMismatch, what);
}

void check_params(std::span<const Tensor> params, std::size_t count, const char* layer) {
  require(params.size() == count, std::string(layer) + ": expected " + std::to_string(count) +
                                      " parameter tensors, got " + std::to_string(params.size()));
}

/// Inverted-dropout multipliers: 0 with probability `rate`, else 1/(1-rate).
std::vector<double> dropout_mask(std::size_t n, double rate, std::uint64_t seed) {
  std::vector<double> mask(n);
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (auto& m : mask) m = uniform01(rng) < rate ? 0.0 : keep_scale;
  return mask;
}

// Splits a [rows, 3*units] gate matrix into three contiguous [rows, units] blocks.
std::array<std::vector<double>, 3> split_gates(const Tensor& t, std::size_t rows, std::size_t units) {
  std::array<std::vector<double>, 3> out;
  for (std::size_t g = 0; g < 3; ++g) {
    out[g].resize(rows * units);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t u = 0; u < units; ++u) out[g][r * units + u] = t[r * 3 * units + g * units + u];
    }
  }
  return out;
}

}  // namespace

Tensor dense_forward(const Tensor& x, const DenseSpec& spec, std::span<const Tensor> params, Mode mode,
                     std::uint64_t dropout_seed, LayerCache* cache) {
  check_params(params, 2, "dense");
  require(x.rank() == 2 && x.dim(1) == spec.in_dim,
          "dense: input " + shape_string(x.shape) + " does not match in_dim " + std::to_string(spec.in_dim));
  const Tensor& w = params[0];
  const Tensor& b = params[1];
  require(w.shape == Shape{spec.in_dim, spec.out_dim} && b.shape == Shape{spec.out_dim},
          "dense: parameter shapes do not match the layer");

  const std::size_t batch = x.dim(0);
  const std::size_t out_dim = spec.out_dim;
  Tensor pre({batch, out_dim});
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < out_dim; ++j) pre[i * out_dim + j] = b[j];
  }
  gemm_acc(x.data(), w.data(), pre.data(), batch, spec.in_dim, out_dim);

  Tensor y({batch, out_dim});
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = activate(spec.activation, pre[i]);

  std::vector<double> mask;
  if (mode == Mode::Train && spec.dropout_rate > 0.0) {
    mask = dropout_mask(y.size(), spec.dropout_rate, dropout_seed);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
  }
  if (cache) {
    cache->input = x;
    cache->pre = std::move(pre);
    cache->output = y;
    cache->mask = std::move(mask);
  }
  return y;
}

Tensor dense_backward(const LayerCache& cache, const DenseSpec& spec, std::span<const Tensor> params,
                      const Tensor& dy, std::span<Tensor> grads) {
  const std::size_t batch = cache.input.dim(0);
  const std::size_t in_dim = spec.in_dim;
  const std::size_t out_dim = spec.out_dim;
  require(dy.shape == Shape{batch, out_dim}, "dense backward: gradient shape mismatch");

  Tensor dz({batch, out_dim});
  for (std::size_t i = 0; i < dz.size(); ++i) {
    const double m = cache.mask.empty() ? 1.0 : cache.mask[i];
    if (m == 0.0) continue;
    // Recover the undropped activation for the derivative.
    const double y = cache.output[i] / m;
    dz[i] = dy[i] * m * activation_derivative(spec.activation, cache.pre[i], y);
  }
  gemm_at_b_acc(cache.input.data(), dz.data(), grads[0].data(), batch, in_dim, out_dim);
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < out_dim; ++j) grads[1][j] += dz[i * out_dim + j];
  }
  Tensor dx({batch, in_dim});
  gemm_a_bt_acc(dz.data(), params[0].data(), dx.data(), batch, out_dim, in_dim);
  return dx;
}

Tensor conv1d_forward(const Tensor& x, const Conv1DSpec& spec, std::span<const Tensor> params,
                      LayerCache* cache) {
  check_params(params, 2, "conv1d");
  require(x.rank() == 3 && x.dim(2) == spec.in_channels,
          "conv1d: input " + shape_string(x.shape) + " does not match in_channels");
  const Tensor& k = params[0];
  const Tensor& b = params[1];
  require(k.shape == Shape{spec.kernel_size, spec.in_channels, spec.filters} && b.shape == Shape{spec.filters},
          "conv1d: parameter shapes do not match the layer");

  const std::size_t batch = x.dim(0), len = x.dim(1), ch = spec.in_channels, f = spec.filters;
  const std::size_t ks = spec.kernel_size;
  const std::ptrdiff_t left = static_cast<std::ptrdiff_t>((ks - 1) / 2);

  Tensor pre({batch, len, f});
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t t = 0; t < len; ++t) {
      double* out = &pre[(n * len + t) * f];
      for (std::size_t o = 0; o < f; ++o) out[o] = b[o];
      for (std::size_t j = 0; j < ks; ++j) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) - left;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
        const double* xi = &x[(n * len + static_cast<std::size_t>(src)) * ch];
        const double* kj = &k[j * ch * f];
        for (std::size_t c = 0; c < ch; ++c) {
          const double xv = xi[c];
          if (xv == 0.0) continue;
          const double* kc = kj + c * f;
          for (std::size_t o = 0; o < f; ++o) out[o] += xv * kc[o];
        }
      }
    }
  }
  Tensor y(pre.shape);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = relu(pre[i]);
  if (cache) {
    cache->input = x;
    cache->pre = std::move(pre);
    cache->output = y;
  }
  return y;
}

Tensor conv1d_backward(const LayerCache& cache, const Conv1DSpec& spec, std::span<const Tensor> params,
                       const Tensor& dy, std::span<Tensor> grads) {
  const Tensor& x = cache.input;
  const std::size_t batch = x.dim(0), len = x.dim(1), ch = spec.in_channels, f = spec.filters;
  const std::size_t ks = spec.kernel_size;
  const std::ptrdiff_t left = static_cast<std::ptrdiff_t>((ks - 1) / 2);
  require(dy.shape == cache.pre.shape, "conv1d backward: gradient shape mismatch");

  const Tensor& k = params[0];
  Tensor& dk = grads[0];
  Tensor& db = grads[1];
  Tensor dx(x.shape);
  std::vector<double> dz(f);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t row = (n * len + t) * f;
      bool any = false;
      for (std::size_t o = 0; o < f; ++o) {
        dz[o] = cache.pre[row + o] > 0 ? dy[row + o] : 0.0;
        db[o] += dz[o];
        any = any || dz[o] != 0.0;
      }
      if (!any) continue;
      for (std::size_t j = 0; j < ks; ++j) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) - left;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
        const std::size_t xoff = (n * len + static_cast<std::size_t>(src)) * ch;
        for (std::size_t c = 0; c < ch; ++c) {
          const double xv = x[xoff + c];
          const std::size_t koff = (j * ch + c) * f;
          double acc = 0.0;
          for (std::size_t o = 0; o < f; ++o) {
            dk[koff + o] += xv * dz[o];
            acc += k[koff + o] * dz[o];
          }
          dx[xoff + c] += acc;
        }
      }
    }
  }
  return dx;
}

Tensor maxpool1d_forward(const Tensor& x, const MaxPool1DSpec& spec, LayerCache* cache) {
  require(x.rank() == 3, "maxpool1d: expected [batch,length,channels]");
  require(spec.pool_size >= 1 && x.dim(1) >= spec.pool_size, "maxpool1d: sequence shorter than pool_size");
  const std::size_t batch = x.dim(0), len = x.dim(1), ch = x.dim(2), p = spec.pool_size;
  const std::size_t out_len = len / p;
  Tensor y({batch, out_len, ch});
  std::vector<std::size_t> argmax(y.size());
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t t = 0; t < out_len; ++t) {
      for (std::size_t c = 0; c < ch; ++c) {
        std::size_t best = (n * len + t * p) * ch + c;
        for (std::size_t j = 1; j < p; ++j) {
          const std::size_t idx = (n * len + t * p + j) * ch + c;
          if (x[idx] > x[best]) best = idx;  // ties stay with the earliest index
        }
        const std::size_t o = (n * out_len + t) * ch + c;
        y[o] = x[best];
        argmax[o] = best;
      }
    }
  }
  if (cache) {
    cache->input = Tensor(x.shape);  // only the shape is needed
    cache->argmax = std::move(argmax);
    cache->output = y;
  }
  return y;
}

Tensor maxpool1d_backward(const LayerCache& cache, const Tensor& dy) {
  require(dy.size() == cache.argmax.size(), "maxpool1d backward: gradient shape mismatch");
  Tensor dx(cache.input.shape);
  for (std::size_t i = 0; i < dy.size(); ++i) dx[cache.argmax[i]] += dy[i];
  return dx;
}

Tensor gru_forward(const Tensor& x_in, const GruSpec& spec, std::span<const Tensor> params, Mode mode,
                   std::uint64_t dropout_seed, LayerCache* cache) {
  check_params(params, 3, "gru");
  require(x_in.rank() == 3, "gru: expected [batch,steps,features]");
  const std::size_t batch = x_in.dim(0), steps = x_in.dim(1), feat = x_in.dim(2), units = spec.units;
  require(steps >= 1, "gru: sequence must have at least one step");
  require(params[0].shape == Shape{feat, 3 * units} && params[1].shape == Shape{units, 3 * units} &&
              params[2].shape == Shape{3 * units},
          "gru: parameter shapes do not match input/units");

  Tensor x = x_in;
  std::vector<double> mask;
  if (mode == Mode::Train && spec.dropout_rate > 0.0) {
    // One mask per (sample, feature), reused at every step.
    mask = dropout_mask(batch * feat, spec.dropout_rate, dropout_seed);
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t c = 0; c < feat; ++c) x[(n * steps + t) * feat + c] *= mask[n * feat + c];
      }
    }
  }

  const auto rec = split_gates(params[1], units, units);
  const Tensor& w = params[0];
  const Tensor& b = params[2];
  const std::size_t g3 = 3 * units;

  Tensor hidden({steps + 1, batch, units});
  Tensor zs({steps, batch, units}), rs({steps, batch, units}), cs({steps, batch, units});
  std::vector<double> xt(batch * feat), ax(batch * g3), az(batch * units), ar(batch * units),
      rh(batch * units), ah(batch * units);

  for (std::size_t t = 0; t < steps; ++t) {
    const double* h_prev = &hidden[t * batch * units];
    double* h_next = &hidden[(t + 1) * batch * units];
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t c = 0; c < feat; ++c) xt[n * feat + c] = x[(n * steps + t) * feat + c];
      for (std::size_t g = 0; g < g3; ++g) ax[n * g3 + g] = b[g];
    }
    gemm_acc(xt.data(), w.data(), ax.data(), batch, feat, g3);
    std::fill(az.begin(), az.end(), 0.0);
    std::fill(ar.begin(), ar.end(), 0.0);
    gemm_acc(h_prev, rec[0].data(), az.data(), batch, units, units);
    gemm_acc(h_prev, rec[1].data(), ar.data(), batch, units, units);

    double* z = &zs[t * batch * units];
    double* r = &rs[t * batch * units];
    double* cand = &cs[t * batch * units];
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t u = 0; u < units; ++u) {
        const std::size_t i = n * units + u;
        z[i] = sigmoid(ax[n * g3 + u] + az[i]);
        r[i] = sigmoid(ax[n * g3 + units + u] + ar[i]);
        rh[i] = r[i] * h_prev[i];
      }
    }
    std::fill(ah.begin(), ah.end(), 0.0);
    gemm_acc(rh.data(), rec[2].data(), ah.data(), batch, units, units);
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t u = 0; u < units; ++u) {
        const std::size_t i = n * units + u;
        cand[i] = std::tanh(ax[n * g3 + 2 * units + u] + ah[i]);
        h_next[i] = (1.0 - z[i]) * h_prev[i] + z[i] * cand[i];
      }
    }
  }

  Tensor y({batch, units});
  std::copy_n(&hidden[steps * batch * units], batch * units, y.data());
  if (cache) {
    cache->input = std::move(x);
    cache->mask = std::move(mask);
    cache->hidden = std::move(hidden);
    cache->update_gate = std::move(zs);
    cache->reset_gate = std::move(rs);
    cache->candidate = std::move(cs);
    cache->output = y;
  }
  return y;
}

Tensor gru_backward(const LayerCache& cache, const GruSpec& spec, std::span<const Tensor> params,
                    const Tensor& dy, std::span<Tensor> grads) {
  const Tensor& x = cache.input;
  const std::size_t batch = x.dim(0), steps = x.dim(1), feat = x.dim(2), units = spec.units;
  const std::size_t g3 = 3 * units;
  require(dy.shape == Shape{batch, units}, "gru backward: gradient shape mismatch");

  const auto rec = split_gates(params[1], units, units);
  const Tensor& w = params[0];
  std::array<std::vector<double>, 3> drec;
  for (auto& d : drec) d.assign(units * units, 0.0);

  Tensor dx(x.shape);
  std::vector<double> dh(dy.values), dh_prev(batch * units), da(batch * g3), da_h(batch * units),
      drh(batch * units), rh(batch * units), xt(batch * feat), dxt(batch * feat);

  for (std::size_t t = steps; t-- > 0;) {
    const double* h_prev = &cache.hidden[t * batch * units];
    const double* z = &cache.update_gate[t * batch * units];
    const double* r = &cache.reset_gate[t * batch * units];
    const double* cand = &cache.candidate[t * batch * units];

    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t u = 0; u < units; ++u) {
        const std::size_t i = n * units + u;
        const double dz = dh[i] * (cand[i] - h_prev[i]);
        const double dcand = dh[i] * z[i];
        dh_prev[i] = dh[i] * (1.0 - z[i]);
        da_h[i] = dcand * (1.0 - cand[i] * cand[i]);
        da[n * g3 + u] = dz * z[i] * (1.0 - z[i]);
        da[n * g3 + 2 * units + u] = da_h[i];
        rh[i] = r[i] * h_prev[i];
      }
    }
    // Candidate path through the reset-gated recurrence.
    gemm_at_b_acc(rh.data(), da_h.data(), drec[2].data(), batch, units, units);
    std::fill(drh.begin(), drh.end(), 0.0);
    gemm_a_bt_acc(da_h.data(), rec[2].data(), drh.data(), batch, units, units);
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t u = 0; u < units; ++u) {
        const std::size_t i = n * units + u;
        dh_prev[i] += drh[i] * r[i];
        const double dr = drh[i] * h_prev[i];
        da[n * g3 + units + u] = dr * r[i] * (1.0 - r[i]);
      }
    }
    // Update and reset gate recurrences.
    std::vector<double> da_z(batch * units), da_r(batch * units);
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t u = 0; u < units; ++u) {
        da_z[n * units + u] = da[n * g3 + u];
        da_r[n * units + u] = da[n * g3 + units + u];
      }
    }
    gemm_at_b_acc(h_prev, da_z.data(), drec[0].data(), batch, units, units);
    gemm_at_b_acc(h_prev, da_r.data(), drec[1].data(), batch, units, units);
    gemm_a_bt_acc(da_z.data(), rec[0].data(), dh_prev.data(), batch, units, units);
    gemm_a_bt_acc(da_r.data(), rec[1].data(), dh_prev.data(), batch, units, units);

    // Input kernel and bias.
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t c = 0; c < feat; ++c) xt[n * feat + c] = x[(n * steps + t) * feat + c];
      for (std::size_t g = 0; g < g3; ++g) grads[2][g] += da[n * g3 + g];
    }
    gemm_at_b_acc(xt.data(), da.data(), grads[0].data(), batch, feat, g3);
    std::fill(dxt.begin(), dxt.end(), 0.0);
    gemm_a_bt_acc(da.data(), w.data(), dxt.data(), batch, g3, feat);
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t c = 0; c < feat; ++c) {
        const double m = cache.mask.empty() ? 1.0 : cache.mask[n * feat + c];
        dx[(n * steps + t) * feat + c] = dxt[n * feat + c] * m;
      }
    }
    dh.swap(dh_prev);
  }

  for (std::size_t g = 0; g < 3; ++g) {
    for (std::size_t r = 0; r < units; ++r) {
      for (std::size_t u = 0; u < units; ++u) grads[1][r * g3 + g * units + u] += drec[g][r * units + u];
    }
  }
  return dx;
}

namespace {

void check_finite(const Tensor& t, std::size_t layer) {
  if (!t.all_finite()) {
    throw Error(Errc::NonFiniteActivation, "non-finite activation in layer " + std::to_string(layer) + " (" +
                                               shape_string(t.shape) + ")");
  }
}

}  // namespace

Tensor forward(const ModelConfig& config, const Parameters& params, const Tensor& batch, Mode mode,
               std::uint64_t seed, ForwardTrace* trace) {
  require(batch.rank() == 2 && batch.dim(1) == config.input_dim,
          "forward: batch " + shape_string(batch.shape) + " does not match input_dim " +
              std::to_string(config.input_dim));
  require(params.layers.size() == config.layers.size(), "forward: parameter/layer count mismatch");

  Tensor act = batch;
  if (uses_sequence_input(config)) act.shape = {batch.dim(0), batch.dim(1), 1};
  if (trace) {
    trace->layers.clear();
    trace->layers.resize(config.layers.size());
  }

  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    LayerCache* cache = trace ? &trace->layers[i] : nullptr;
    const std::span<const Tensor> p(params.layers[i]);
    const std::uint64_t layer_seed = derive_seed(seed, i);
    act = std::visit(
        [&](const auto& s) -> Tensor {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, DenseSpec>) {
            return dense_forward(act, s, p, mode, layer_seed, cache);
          } else if constexpr (std::is_same_v<T, Conv1DSpec>) {
            return conv1d_forward(act, s, p, cache);
          } else if constexpr (std::is_same_v<T, MaxPool1DSpec>) {
            return maxpool1d_forward(act, s, cache);
          } else if constexpr (std::is_same_v<T, GruSpec>) {
            return gru_forward(act, s, p, mode, layer_seed, cache);
          } else {
            if (cache) cache->input = Tensor(act.shape);
            Tensor flat = std::move(act);
            const std::size_t n = flat.dim(0);
            flat.shape = {n, n == 0 ? 0 : flat.size() / n};
            return flat;
          }
        },
        config.layers[i]);
    check_finite(act, i);
  }
  require(act.rank() == 2 && act.dim(1) == 1, "forward: model does not end in a single output");
  return act;
}

Parameters backward_from_scores(const ModelConfig& config, const Parameters& params,
                                const ForwardTrace& trace, const Tensor& dscores) {
  require(trace.layers.size() == config.layers.size(), "backward: trace does not match model");
  Parameters grads = zeros_like(params);
  Tensor grad = dscores;
  for (std::size_t i = config.layers.size(); i-- > 0;) {
    const LayerCache& cache = trace.layers[i];
    const std::span<const Tensor> p(params.layers[i]);
    const std::span<Tensor> g(grads.layers[i]);
    grad = std::visit(
        [&](const auto& s) -> Tensor {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, DenseSpec>) {
            return dense_backward(cache, s, p, grad, g);
          } else if constexpr (std::is_same_v<T, Conv1DSpec>) {
            return conv1d_backward(cache, s, p, grad, g);
          } else if constexpr (std::is_same_v<T, MaxPool1DSpec>) {
            return maxpool1d_backward(cache, grad);
          } else if constexpr (std::is_same_v<T, GruSpec>) {
            return gru_backward(cache, s, p, grad, g);
          } else {
            Tensor out = std::move(grad);
            out.shape = cache.input.shape;
            return out;
          }
        },
        config.layers[i]);
  }
  return grads;
}

}  // namespace permnet
