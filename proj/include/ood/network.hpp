#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ood/tensor.hpp"

namespace ood {

enum class LayerKind { Dense, Conv2d, MaxPool2d, Relu };

// One layer descriptor. Only the fields relevant to `kind` are used.
struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    std::size_t in = 0, out = 0;                                        // dense
    std::size_t in_channels = 0, out_channels = 0, kernel = 0, stride = 1;  // conv2d
    std::size_t window = 0;                                             // maxpool2d

    static LayerSpec dense(std::size_t in, std::size_t out);
    static LayerSpec conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                            std::size_t stride = 1);
    static LayerSpec maxpool2d(std::size_t window);
    static LayerSpec relu();

    std::string to_string() const;
    bool has_params() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2d; }
};

// Activations retained by forward() so backward() can run without recomputing.
// Valid only while the network parameters are unchanged (version check).
struct ForwardTrace {
    std::uint64_t params_version = 0;
    std::size_t batch_size = 0;
    std::vector<Tensor> layer_inputs;               // input batch of every layer
    Tensor output;                                  // N x embedding_dim
    std::vector<std::vector<std::size_t>> pool_argmax;  // per maxpool layer, in layer order
};

// Per-parameter gradients, aligned with Network::layer_params().
struct Gradients {
    std::vector<Tensor> weight;  // one entry per layer; empty tensor if layer has no params
    std::vector<Tensor> bias;
};

// Feedforward map from images (or flat vectors) to d-dimensional embeddings.
// Layer wiring is validated at construction; parameter arrays match the specs exactly.
class Network {
public:
    Network(std::vector<std::size_t> input_shape, std::vector<LayerSpec> layers);

    // He-uniform init for ReLU-fed layers, Glorot-uniform for the rest, biases zero.
    // Each layer draws from its own seed-derived stream, so layers shared between
    // two architectures initialize identically for the same seed.
    void init_params(std::uint64_t seed);

    // batch: {N, input_shape...}. Returns embeddings and retained activations.
    ForwardTrace forward(const Tensor& batch) const;

    // output_grad: {N, embedding_dim} = dLoss/dEmbedding. Returns parameter gradients.
    Gradients backward(const ForwardTrace& trace, const Tensor& output_grad) const;

    const std::vector<LayerSpec>& layers() const { return layers_; }
    const std::vector<std::size_t>& input_shape() const { return input_shape_; }
    std::size_t embedding_dim() const { return embedding_dim_; }
    std::uint64_t params_version() const { return version_; }
    std::size_t param_count() const;

    Tensor& weight(std::size_t layer) { return weights_[layer]; }
    Tensor& bias(std::size_t layer) { return biases_[layer]; }
    const Tensor& weight(std::size_t layer) const { return weights_[layer]; }
    const Tensor& bias(std::size_t layer) const { return biases_[layer]; }

    // flat list of mutable parameter arrays, layer order, weight before bias
    std::vector<Tensor*> param_tensors();
    std::vector<const Tensor*> param_tensors() const;

    // flattens a Gradients struct into the same order as param_tensors()
    static std::vector<const Tensor*> flatten(const Gradients& grads,
                                              const std::vector<LayerSpec>& layers);

    void bump_version() { ++version_; }

    Gradients zero_gradients() const;

private:
    std::vector<std::size_t> input_shape_;  // per-sample, e.g. {C,H,W} or {D}
    std::vector<LayerSpec> layers_;
    std::vector<Tensor> weights_;  // indexed by layer; empty for non-param layers
    std::vector<Tensor> biases_;
    std::vector<std::vector<std::size_t>> io_shapes_;  // per-sample shape before each layer + final
    std::size_t embedding_dim_ = 0;
    std::uint64_t version_ = 0;

    void validate_and_infer_shapes();
};

}  // namespace ood
