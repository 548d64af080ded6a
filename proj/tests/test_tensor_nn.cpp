#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "ood/checkpoint.hpp"
#include "ood/error.hpp"
#include "ood/gradcheck.hpp"
#include "ood/network.hpp"
#include "ood/optimizer.hpp"
#include "ood/rng.hpp"
#include "ood/tensor.hpp"

using namespace ood;

namespace {

Tensor random_batch(const std::vector<std::size_t>& sample_shape, std::size_t n, Rng& rng) {
    std::vector<std::size_t> shape = sample_shape;
    shape.insert(shape.begin(), n);
    Tensor t(shape);
    for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
    return t;
}

// scalar loss with fixed mixing coefficients: L = sum c.e + 0.5 sum e^2
struct MixLoss {
    Tensor coeffs;  // N x d
    double operator()(const Network& net, const Tensor& batch) const {
        const ForwardTrace trace = net.forward(batch);
        double loss = 0.0;
        for (std::size_t i = 0; i < trace.output.size(); ++i)
            loss += coeffs[i] * trace.output[i] + 0.5 * trace.output[i] * trace.output[i];
        return loss;
    }
    Tensor output_grad(const Tensor& output) const {
        Tensor g(output.shape());
        for (std::size_t i = 0; i < output.size(); ++i) g[i] = coeffs[i] + output[i];
        return g;
    }
};

}  // namespace

TEST_CASE("tensor shape bookkeeping") {
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    t.at(1, 2) = 4.0;
    CHECK(t[5] == 4.0);
    CHECK(t.shape_string() == "[2x3]");
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1.0}), usage_error);
}

TEST_CASE("dense identity network maps input to itself") {
    Network net({3}, {LayerSpec::dense(3, 3)});
    for (std::size_t i = 0; i < 3; ++i) net.weight(0).at(i, i) = 1.0;

    Rng rng(11);
    const Tensor batch = random_batch({3}, 4, rng);
    const ForwardTrace trace = net.forward(batch);
    for (std::size_t i = 0; i < batch.size(); ++i) CHECK(trace.output[i] == batch[i]);
}

TEST_CASE("dense layer affine map, hand evaluated") {
    Network net({2}, {LayerSpec::dense(2, 1)});
    net.weight(0).at(0, 0) = 0.5;
    net.weight(0).at(0, 1) = 0.5;
    net.bias(0)[0] = 0.1;

    const Tensor batch({1, 2}, {1.0, 2.0});
    const ForwardTrace trace = net.forward(batch);
    CHECK(trace.output[0] == doctest::Approx(1.6).epsilon(1e-12));
}

TEST_CASE("relu layer clamps negatives") {
    Network net({3}, {LayerSpec::relu(), LayerSpec::dense(3, 3)});
    for (std::size_t i = 0; i < 3; ++i) net.weight(1).at(i, i) = 1.0;
    const Tensor batch({1, 3}, {-1.0, 0.0, 2.0});
    const ForwardTrace trace = net.forward(batch);
    CHECK(trace.output[0] == 0.0);
    CHECK(trace.output[1] == 0.0);
    CHECK(trace.output[2] == 2.0);
}

TEST_CASE("forward rejects shape mismatches naming the layer") {
    CHECK_THROWS_WITH_AS(Network({4}, {LayerSpec::dense(3, 2)}), doctest::Contains("layer 0"),
                         config_error);
    CHECK_THROWS_WITH_AS(Network({1, 8, 8}, {LayerSpec::conv2d(2, 4, 3)}), doctest::Contains("channels"),
                         config_error);

    Network net({2}, {LayerSpec::dense(2, 2)});
    CHECK_THROWS_AS(net.forward(Tensor({1, 3})), config_error);
}

TEST_CASE("network output must end flat") {
    CHECK_THROWS_AS(Network({1, 6, 6}, {LayerSpec::conv2d(1, 2, 3)}), config_error);
}

TEST_CASE("backward with zero output gradient is exactly zero") {
    Network net({1, 6, 6}, {LayerSpec::conv2d(1, 2, 3), LayerSpec::relu(), LayerSpec::dense(32, 4)});
    net.init_params(3);
    Rng rng(4);
    const Tensor batch = random_batch({1, 6, 6}, 3, rng);
    const ForwardTrace trace = net.forward(batch);
    const Gradients grads = net.backward(trace, Tensor({3, 4}));
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        for (double v : grads.weight[l].values()) CHECK(v == 0.0);
        for (double v : grads.bias[l].values()) CHECK(v == 0.0);
    }
}

TEST_CASE("backward rejects stale traces") {
    Network net({2}, {LayerSpec::dense(2, 2)});
    net.init_params(5);
    const Tensor batch({1, 2}, {0.5, -0.5});
    const ForwardTrace trace = net.forward(batch);
    net.init_params(6);  // parameters changed
    CHECK_THROWS_AS(net.backward(trace, Tensor({1, 2})), usage_error);
}

TEST_CASE("single dense layer weight gradient equals g times x") {
    Network net({3}, {LayerSpec::dense(3, 1)});
    net.init_params(9);
    const Tensor batch({1, 3}, {0.3, -0.7, 1.1});
    const ForwardTrace trace = net.forward(batch);
    const double g = 2.5;
    const Gradients grads = net.backward(trace, Tensor({1, 1}, {g}));
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(grads.weight[0][j] == doctest::Approx(g * batch[j]).epsilon(1e-12));
    CHECK(grads.bias[0][0] == doctest::Approx(g).epsilon(1e-12));
}

TEST_CASE("forward is deterministic bit for bit") {
    Network net({1, 8, 8},
                {LayerSpec::conv2d(1, 4, 3), LayerSpec::relu(), LayerSpec::maxpool2d(2),
                 LayerSpec::dense(36, 5)});
    net.init_params(17);
    Rng rng(18);
    const Tensor batch = random_batch({1, 8, 8}, 4, rng);
    const ForwardTrace a = net.forward(batch);
    const ForwardTrace b = net.forward(batch);
    for (std::size_t i = 0; i < a.output.size(); ++i) CHECK(a.output[i] == b.output[i]);
}

TEST_CASE("analytic gradients match central finite differences across architectures") {
    struct Arch {
        std::vector<std::size_t> input;
        std::vector<LayerSpec> layers;
    };
    const std::vector<Arch> archs = {
        {{5}, {LayerSpec::dense(5, 4), LayerSpec::relu(), LayerSpec::dense(4, 3)}},
        {{1, 8, 8},
         {LayerSpec::conv2d(1, 3, 3), LayerSpec::relu(), LayerSpec::maxpool2d(2), LayerSpec::dense(27, 4)}},
        {{2, 7, 7},
         {LayerSpec::conv2d(2, 4, 3, 2), LayerSpec::relu(), LayerSpec::dense(36, 8), LayerSpec::relu(),
          LayerSpec::dense(8, 2)}},
        {{3, 6, 6}, {LayerSpec::maxpool2d(2), LayerSpec::dense(27, 6), LayerSpec::relu(), LayerSpec::dense(6, 5)}},
    };

    int cases = 0;
    for (std::size_t a = 0; a < archs.size(); ++a) {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            Network net(archs[a].input, archs[a].layers);
            CHECK(net.param_count() <= 10000);
            net.init_params(mix_seed(100 + a, seed));

            Rng rng(mix_seed(200 + a, seed));
            const std::size_t n = 1 + rng.below(8);
            const Tensor batch = random_batch(archs[a].input, n, rng);

            MixLoss loss{random_batch({net.embedding_dim()}, n, rng)};
            const ForwardTrace trace = net.forward(batch);
            const Gradients analytic = net.backward(trace, loss.output_grad(trace.output));
            const Gradients fd = finite_difference_gradient(
                net, [&](const Network& p) { return loss(p, batch); }, 1e-5);

            CHECK(max_relative_gradient_error(analytic, fd) <= 1e-4);
            ++cases;
        }
    }
    CHECK(cases == 16);
}

TEST_CASE("finite differences recover the derivative of a quadratic") {
    Network net({1}, {LayerSpec::dense(1, 1)});
    net.weight(0)[0] = 3.0;
    const Gradients fd = finite_difference_gradient(
        net, [](const Network& p) { return p.weight(0)[0] * p.weight(0)[0]; }, 1e-5);
    CHECK(fd.weight[0][0] == doctest::Approx(6.0).epsilon(1e-6));

    const Gradients constant = finite_difference_gradient(net, [](const Network&) { return 42.0; }, 1e-5);
    CHECK(constant.weight[0][0] == 0.0);
    CHECK(constant.bias[0][0] == 0.0);
    CHECK_THROWS_AS(finite_difference_gradient(net, [](const Network&) { return 0.0; }, 0.0), usage_error);
}

TEST_CASE("sgd step follows p minus lr g") {
    Tensor p({1}, {1.0});
    Tensor g({1}, {2.0});
    Optimizer opt(OptimizerKind::Sgd, 0.1);
    opt.step({&p}, {&g});
    CHECK(p[0] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(opt.step_count() == 1);
}

TEST_CASE("zero gradients are a fixed point for both optimizers") {
    for (OptimizerKind kind : {OptimizerKind::Sgd, OptimizerKind::Adam}) {
        Tensor p({3}, {0.5, -1.5, 2.0});
        const Tensor before = p;
        Tensor g({3});
        Optimizer opt(kind, 0.01);
        for (int i = 0; i < 5; ++i) opt.step({&p}, {&g});
        for (std::size_t j = 0; j < 3; ++j) CHECK(p[j] == before[j]);
    }
}

TEST_CASE("adam first step is roughly lr times sign of gradient") {
    Tensor p({1}, {0.0});
    Tensor g({1}, {1.0});
    Optimizer opt(OptimizerKind::Adam, 0.001);
    opt.step({&p}, {&g});
    CHECK(p[0] == doctest::Approx(-0.001).epsilon(1e-6));
}

TEST_CASE("optimizer rejects shape mismatches") {
    Tensor p({2});
    Tensor g({3});
    Optimizer opt(OptimizerKind::Sgd, 0.1);
    CHECK_THROWS_AS(opt.step({&p}, {&g}), usage_error);
}

TEST_CASE("init is seed deterministic and shares the trunk across head widths") {
    const auto trunk = [](std::size_t head) {
        return std::vector<LayerSpec>{LayerSpec::conv2d(1, 4, 3), LayerSpec::relu(), LayerSpec::maxpool2d(2),
                                      LayerSpec::dense(36, 16), LayerSpec::relu(), LayerSpec::dense(16, head)};
    };
    Network a({1, 8, 8}, trunk(3));
    Network b({1, 8, 8}, trunk(5));
    Network c({1, 8, 8}, trunk(3));
    a.init_params(42);
    b.init_params(42);
    c.init_params(42);

    for (std::size_t l = 0; l < 4; ++l) {  // shared layers
        if (!a.layers()[l].has_params()) continue;
        for (std::size_t j = 0; j < a.weight(l).size(); ++j) {
            CHECK(a.weight(l)[j] == b.weight(l)[j]);
            CHECK(a.weight(l)[j] == c.weight(l)[j]);
        }
    }
    // heads differ in shape, not in stream identity
    CHECK(a.weight(5).size() == 48);
    CHECK(b.weight(5).size() == 80);
}

TEST_CASE("checkpoint round trip is bit exact") {
    Network net({1, 8, 8},
                {LayerSpec::conv2d(1, 4, 3), LayerSpec::relu(), LayerSpec::maxpool2d(2), LayerSpec::dense(36, 5)});
    net.init_params(77);

    const std::string path = (std::filesystem::temp_directory_path() / "oodkit_ckpt_test.bin").string();
    save_checkpoint(net, path);
    const Network loaded = load_checkpoint(path);

    CHECK(loaded.input_shape() == net.input_shape());
    CHECK(loaded.embedding_dim() == net.embedding_dim());
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        if (!net.layers()[l].has_params()) continue;
        for (std::size_t j = 0; j < net.weight(l).size(); ++j) CHECK(loaded.weight(l)[j] == net.weight(l)[j]);
        for (std::size_t j = 0; j < net.bias(l).size(); ++j) CHECK(loaded.bias(l)[j] == net.bias(l)[j]);
    }
    std::remove(path.c_str());
}

TEST_CASE("checkpoint loader rejects garbage") {
    const std::string path = (std::filesystem::temp_directory_path() / "oodkit_bad_ckpt.bin").string();
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("not a checkpoint at all", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_checkpoint(path), format_error);
    std::remove(path.c_str());
}
