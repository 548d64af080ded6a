#include "ood/network.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "ood/error.hpp"
#include "ood/rng.hpp"

namespace ood {

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.in = in;
    s.out = out;
    return s;
}

LayerSpec LayerSpec::conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride) {
    LayerSpec s;
    s.kind = LayerKind::Conv2d;
    s.in_channels = in_ch;
    s.out_channels = out_ch;
    s.kernel = kernel;
    s.stride = stride;
    return s;
}

LayerSpec LayerSpec::maxpool2d(std::size_t window) {
    LayerSpec s;
    s.kind = LayerKind::MaxPool2d;
    s.window = window;
    return s;
}

LayerSpec LayerSpec::relu() {
    LayerSpec s;
    s.kind = LayerKind::Relu;
    return s;
}

std::string LayerSpec::to_string() const {
    std::ostringstream os;
    switch (kind) {
        case LayerKind::Dense: os << "dense(" << in << "->" << out << ")"; break;
        case LayerKind::Conv2d:
            os << "conv2d(" << in_channels << "->" << out_channels << ",k=" << kernel << ",s=" << stride << ")";
            break;
        case LayerKind::MaxPool2d: os << "maxpool2d(" << window << ")"; break;
        case LayerKind::Relu: os << "relu"; break;
    }
    return os.str();
}

namespace {

std::size_t shape_product(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

[[noreturn]] void layer_error(std::size_t index, const LayerSpec& spec, const std::string& msg) {
    throw config_error("layer " + std::to_string(index) + " " + spec.to_string() + ": " + msg);
}

}  // namespace

Network::Network(std::vector<std::size_t> input_shape, std::vector<LayerSpec> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
    if (input_shape_.empty()) throw config_error("network input shape is empty");
    if (layers_.empty()) throw config_error("network has no layers");
    validate_and_infer_shapes();

    weights_.resize(layers_.size());
    biases_.resize(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& s = layers_[i];
        if (s.kind == LayerKind::Dense) {
            weights_[i] = Tensor({s.out, s.in});
            biases_[i] = Tensor({s.out});
        } else if (s.kind == LayerKind::Conv2d) {
            weights_[i] = Tensor({s.out_channels, s.in_channels, s.kernel, s.kernel});
            biases_[i] = Tensor({s.out_channels});
        }
    }
}

void Network::validate_and_infer_shapes() {
    io_shapes_.clear();
    std::vector<std::size_t> cur = input_shape_;
    io_shapes_.push_back(cur);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& s = layers_[i];
        switch (s.kind) {
            case LayerKind::Dense: {
                if (s.in == 0 || s.out == 0) layer_error(i, s, "dense dimensions must be positive");
                if (shape_product(cur) != s.in)
                    layer_error(i, s, "expects input of " + std::to_string(s.in) + " values, got " +
                                          shape_to_string(cur));
                cur = {s.out};
                break;
            }
            case LayerKind::Conv2d: {
                if (s.kernel == 0 || s.stride == 0 || s.in_channels == 0 || s.out_channels == 0)
                    layer_error(i, s, "conv2d parameters must be positive");
                if (cur.size() != 3)
                    layer_error(i, s, "expects CxHxW input, got " + shape_to_string(cur));
                if (cur[0] != s.in_channels)
                    layer_error(i, s, "expects " + std::to_string(s.in_channels) + " input channels, got " +
                                          std::to_string(cur[0]));
                if (cur[1] < s.kernel || cur[2] < s.kernel)
                    layer_error(i, s, "kernel larger than input " + shape_to_string(cur));
                const std::size_t ho = (cur[1] - s.kernel) / s.stride + 1;
                const std::size_t wo = (cur[2] - s.kernel) / s.stride + 1;
                cur = {s.out_channels, ho, wo};
                break;
            }
            case LayerKind::MaxPool2d: {
                if (s.window == 0) layer_error(i, s, "window must be positive");
                if (cur.size() != 3)
                    layer_error(i, s, "expects CxHxW input, got " + shape_to_string(cur));
                if (cur[1] < s.window || cur[2] < s.window)
                    layer_error(i, s, "window larger than input " + shape_to_string(cur));
                cur = {cur[0], cur[1] / s.window, cur[2] / s.window};
                break;
            }
            case LayerKind::Relu:
                break;
        }
        io_shapes_.push_back(cur);
    }
    if (cur.size() != 1)
        throw config_error("network output must be a flat embedding, got " + shape_to_string(cur) +
                           " (end with a dense layer)");
    embedding_dim_ = cur[0];
}

void Network::init_params(std::uint64_t seed) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& s = layers_[i];
        if (!s.has_params()) continue;

        // relu directly after (possibly with pooling in between) selects He init
        bool feeds_relu = false;
        for (std::size_t j = i + 1; j < layers_.size(); ++j) {
            if (layers_[j].kind == LayerKind::MaxPool2d) continue;
            feeds_relu = layers_[j].kind == LayerKind::Relu;
            break;
        }

        std::size_t fan_in, fan_out;
        if (s.kind == LayerKind::Dense) {
            fan_in = s.in;
            fan_out = s.out;
        } else {
            fan_in = s.in_channels * s.kernel * s.kernel;
            fan_out = s.out_channels * s.kernel * s.kernel;
        }
        const double limit = feeds_relu ? std::sqrt(6.0 / static_cast<double>(fan_in))
                                        : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));

        Rng rng(mix_seed(seed, i));
        for (double& w : weights_[i].values()) w = rng.uniform(-limit, limit);
        biases_[i].fill(0.0);
    }
    ++version_;
}

ForwardTrace Network::forward(const Tensor& batch) const {
    if (batch.rank() != input_shape_.size() + 1)
        throw config_error("input batch rank " + std::to_string(batch.rank()) + " does not match network input " +
                           shape_to_string(input_shape_) + " plus batch dimension");
    for (std::size_t d = 0; d < input_shape_.size(); ++d) {
        if (batch.dim(d + 1) != input_shape_[d])
            throw config_error("input batch shape " + batch.shape_string() + " does not match network input " +
                               shape_to_string(input_shape_));
    }
    const std::size_t n = batch.dim(0);

    ForwardTrace trace;
    trace.params_version = version_;
    trace.batch_size = n;
    trace.layer_inputs.reserve(layers_.size());

    Tensor cur = batch;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& s = layers_[i];
        const std::vector<std::size_t>& in_shape = io_shapes_[i];
        const std::vector<std::size_t>& out_shape = io_shapes_[i + 1];
        const std::size_t in_size = shape_product(in_shape);
        const std::size_t out_size = shape_product(out_shape);

        std::vector<std::size_t> batched_out = out_shape;
        batched_out.insert(batched_out.begin(), n);
        Tensor next(batched_out);

        switch (s.kind) {
            case LayerKind::Dense: {
                const Tensor& w = weights_[i];
                const Tensor& b = biases_[i];
                for (std::size_t sample = 0; sample < n; ++sample) {
                    const double* x = cur.data() + sample * in_size;
                    double* y = next.data() + sample * out_size;
                    for (std::size_t o = 0; o < s.out; ++o) {
                        double acc = b[o];
                        const double* wrow = w.data() + o * s.in;
                        for (std::size_t k = 0; k < s.in; ++k) acc += wrow[k] * x[k];
                        y[o] = acc;
                    }
                }
                break;
            }
            case LayerKind::Conv2d: {
                const Tensor& w = weights_[i];
                const Tensor& b = biases_[i];
                const std::size_t hi = in_shape[1], wi = in_shape[2];
                const std::size_t ho = out_shape[1], wo = out_shape[2];
                const std::size_t k = s.kernel, st = s.stride;
                for (std::size_t sample = 0; sample < n; ++sample) {
                    const double* x = cur.data() + sample * in_size;
                    double* y = next.data() + sample * out_size;
                    for (std::size_t oc = 0; oc < s.out_channels; ++oc) {
                        for (std::size_t oy = 0; oy < ho; ++oy) {
                            for (std::size_t ox = 0; ox < wo; ++ox) {
                                double acc = b[oc];
                                for (std::size_t ic = 0; ic < s.in_channels; ++ic) {
                                    const double* xc = x + ic * hi * wi + oy * st * wi + ox * st;
                                    const double* wk = w.data() + ((oc * s.in_channels + ic) * k) * k;
                                    for (std::size_t ky = 0; ky < k; ++ky)
                                        for (std::size_t kx = 0; kx < k; ++kx)
                                            acc += wk[ky * k + kx] * xc[ky * wi + kx];
                                }
                                y[(oc * ho + oy) * wo + ox] = acc;
                            }
                        }
                    }
                }
                break;
            }
            case LayerKind::MaxPool2d: {
                const std::size_t c = in_shape[0], hi = in_shape[1], wi = in_shape[2];
                const std::size_t ho = out_shape[1], wo = out_shape[2];
                const std::size_t win = s.window;
                std::vector<std::size_t> argmax(n * out_size);
                for (std::size_t sample = 0; sample < n; ++sample) {
                    const double* x = cur.data() + sample * in_size;
                    double* y = next.data() + sample * out_size;
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        for (std::size_t oy = 0; oy < ho; ++oy) {
                            for (std::size_t ox = 0; ox < wo; ++ox) {
                                std::size_t best = ch * hi * wi + oy * win * wi + ox * win;
                                double bv = x[best];
                                for (std::size_t ky = 0; ky < win; ++ky) {
                                    for (std::size_t kx = 0; kx < win; ++kx) {
                                        const std::size_t idx = ch * hi * wi + (oy * win + ky) * wi + ox * win + kx;
                                        if (x[idx] > bv) {
                                            bv = x[idx];
                                            best = idx;
                                        }
                                    }
                                }
                                y[(ch * ho + oy) * wo + ox] = bv;
                                argmax[sample * out_size + (ch * ho + oy) * wo + ox] = sample * in_size + best;
                            }
                        }
                    }
                }
                trace.pool_argmax.push_back(std::move(argmax));
                break;
            }
            case LayerKind::Relu: {
                for (std::size_t j = 0; j < cur.size(); ++j) next[j] = cur[j] > 0.0 ? cur[j] : 0.0;
                break;
            }
        }
        trace.layer_inputs.push_back(std::move(cur));
        cur = std::move(next);
    }
    cur.require_finite("forward");
    trace.output = std::move(cur);
    return trace;
}

Gradients Network::backward(const ForwardTrace& trace, const Tensor& output_grad) const {
    if (trace.params_version != version_)
        throw usage_error("stale forward trace: parameters changed since forward()");
    if (trace.layer_inputs.size() != layers_.size())
        throw usage_error("forward trace does not match this network");
    if (output_grad.rank() != 2 || output_grad.dim(0) != trace.batch_size ||
        output_grad.dim(1) != embedding_dim_)
        throw usage_error("output gradient shape " + output_grad.shape_string() + " does not match embeddings");

    const std::size_t n = trace.batch_size;
    Gradients grads = zero_gradients();

    Tensor delta = output_grad;  // gradient wrt current layer output
    std::size_t pool_cursor = trace.pool_argmax.size();

    for (std::size_t ri = layers_.size(); ri-- > 0;) {
        const LayerSpec& s = layers_[ri];
        const Tensor& input = trace.layer_inputs[ri];
        const std::vector<std::size_t>& in_shape = io_shapes_[ri];
        const std::vector<std::size_t>& out_shape = io_shapes_[ri + 1];
        const std::size_t in_size = shape_product(in_shape);
        const std::size_t out_size = shape_product(out_shape);

        std::vector<std::size_t> batched_in = in_shape;
        batched_in.insert(batched_in.begin(), n);
        Tensor prev_delta(batched_in);

        switch (s.kind) {
            case LayerKind::Dense: {
                const Tensor& w = weights_[ri];
                Tensor& dw = grads.weight[ri];
                Tensor& db = grads.bias[ri];
                for (std::size_t sample = 0; sample < n; ++sample) {
                    const double* x = input.data() + sample * in_size;
                    const double* g = delta.data() + sample * out_size;
                    double* dx = prev_delta.data() + sample * in_size;
                    for (std::size_t o = 0; o < s.out; ++o) {
                        const double go = g[o];
                        db[o] += go;
                        double* dwrow = dw.data() + o * s.in;
                        const double* wrow = w.data() + o * s.in;
                        for (std::size_t k = 0; k < s.in; ++k) {
                            dwrow[k] += go * x[k];
                            dx[k] += go * wrow[k];
                        }
                    }
                }
                break;
            }
            case LayerKind::Conv2d: {
                const Tensor& w = weights_[ri];
                Tensor& dw = grads.weight[ri];
                Tensor& db = grads.bias[ri];
                const std::size_t hi = in_shape[1], wi = in_shape[2];
                const std::size_t ho = out_shape[1], wo = out_shape[2];
                const std::size_t k = s.kernel, st = s.stride;
                for (std::size_t sample = 0; sample < n; ++sample) {
                    const double* x = input.data() + sample * in_size;
                    const double* g = delta.data() + sample * out_size;
                    double* dx = prev_delta.data() + sample * in_size;
                    for (std::size_t oc = 0; oc < s.out_channels; ++oc) {
                        for (std::size_t oy = 0; oy < ho; ++oy) {
                            for (std::size_t ox = 0; ox < wo; ++ox) {
                                const double go = g[(oc * ho + oy) * wo + ox];
                                db[oc] += go;
                                for (std::size_t ic = 0; ic < s.in_channels; ++ic) {
                                    const std::size_t xoff = ic * hi * wi + oy * st * wi + ox * st;
                                    const std::size_t woff = ((oc * s.in_channels + ic) * k) * k;
                                    for (std::size_t ky = 0; ky < k; ++ky) {
                                        for (std::size_t kx = 0; kx < k; ++kx) {
                                            dw[woff + ky * k + kx] += go * x[xoff + ky * wi + kx];
                                            dx[xoff + ky * wi + kx] += go * w[woff + ky * k + kx];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                break;
            }
            case LayerKind::MaxPool2d: {
                --pool_cursor;
                const std::vector<std::size_t>& argmax = trace.pool_argmax[pool_cursor];
                for (std::size_t j = 0; j < delta.size(); ++j) prev_delta[argmax[j]] += delta[j];
                break;
            }
            case LayerKind::Relu: {
                for (std::size_t j = 0; j < delta.size(); ++j)
                    prev_delta[j] = input[j] > 0.0 ? delta[j] : 0.0;
                break;
            }
        }
        delta = std::move(prev_delta);
    }

    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i].has_params()) {
            grads.weight[i].require_finite("backward");
            grads.bias[i].require_finite("backward");
        }
    }
    return grads;
}

std::size_t Network::param_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) n += weights_[i].size() + biases_[i].size();
    return n;
}

std::vector<Tensor*> Network::param_tensors() {
    std::vector<Tensor*> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (!layers_[i].has_params()) continue;
        out.push_back(&weights_[i]);
        out.push_back(&biases_[i]);
    }
    return out;
}

std::vector<const Tensor*> Network::param_tensors() const {
    std::vector<const Tensor*> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (!layers_[i].has_params()) continue;
        out.push_back(&weights_[i]);
        out.push_back(&biases_[i]);
    }
    return out;
}

std::vector<const Tensor*> Network::flatten(const Gradients& grads, const std::vector<LayerSpec>& layers) {
    std::vector<const Tensor*> out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (!layers[i].has_params()) continue;
        out.push_back(&grads.weight[i]);
        out.push_back(&grads.bias[i]);
    }
    return out;
}

Gradients Network::zero_gradients() const {
    Gradients g;
    g.weight.resize(layers_.size());
    g.bias.resize(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (!layers_[i].has_params()) continue;
        g.weight[i] = Tensor(weights_[i].shape());
        g.bias[i] = Tensor(biases_[i].shape());
    }
    return g;
}

}  // namespace ood
