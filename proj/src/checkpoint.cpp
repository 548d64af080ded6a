#include "ood/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "ood/error.hpp"

namespace ood {

namespace {

constexpr char kMagic[8] = {'O', 'O', 'D', 'C', 'K', 'P', 'T', '1'};

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

void write_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t read_u32(std::istream& is, const std::string& path) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4))
        throw format_error("truncated checkpoint " + path + " at byte " + std::to_string(is.tellg()));
    return v;
}

double read_f64(std::istream& is, const std::string& path) {
    double v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 8))
        throw format_error("truncated checkpoint " + path + " at byte " + std::to_string(is.tellg()));
    return v;
}

void write_tensor(std::ostream& os, const Tensor& t) {
    write_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) write_u32(os, static_cast<std::uint32_t>(d));
    for (double v : t.values()) write_f64(os, v);
}

Tensor read_tensor(std::istream& is, const std::string& path) {
    const std::uint32_t rank = read_u32(is, path);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = read_u32(is, path);
    Tensor t(shape);
    for (double& v : t.values()) v = read_f64(is, path);
    return t;
}

}  // namespace

void save_checkpoint(const Network& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error("cannot open checkpoint for writing: " + path);
    os.write(kMagic, sizeof(kMagic));

    write_u32(os, static_cast<std::uint32_t>(net.input_shape().size()));
    for (std::size_t d : net.input_shape()) write_u32(os, static_cast<std::uint32_t>(d));

    write_u32(os, static_cast<std::uint32_t>(net.layers().size()));
    for (const LayerSpec& s : net.layers()) {
        write_u32(os, static_cast<std::uint32_t>(s.kind));
        write_u32(os, static_cast<std::uint32_t>(s.in));
        write_u32(os, static_cast<std::uint32_t>(s.out));
        write_u32(os, static_cast<std::uint32_t>(s.in_channels));
        write_u32(os, static_cast<std::uint32_t>(s.out_channels));
        write_u32(os, static_cast<std::uint32_t>(s.kernel));
        write_u32(os, static_cast<std::uint32_t>(s.stride));
        write_u32(os, static_cast<std::uint32_t>(s.window));
    }
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
        if (!net.layers()[i].has_params()) continue;
        write_tensor(os, net.weight(i));
        write_tensor(os, net.bias(i));
    }
    if (!os) throw format_error("failed writing checkpoint: " + path);
}

Network load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error("cannot open checkpoint: " + path);
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw format_error("bad checkpoint magic in " + path + " at byte 0");

    const std::uint32_t in_rank = read_u32(is, path);
    if (in_rank == 0 || in_rank > 4) throw format_error("implausible input rank in " + path);
    std::vector<std::size_t> input_shape(in_rank);
    for (auto& d : input_shape) d = read_u32(is, path);

    const std::uint32_t n_layers = read_u32(is, path);
    std::vector<LayerSpec> layers(n_layers);
    for (LayerSpec& s : layers) {
        const std::uint32_t kind = read_u32(is, path);
        if (kind > 3) throw format_error("unknown layer kind in " + path);
        s.kind = static_cast<LayerKind>(kind);
        s.in = read_u32(is, path);
        s.out = read_u32(is, path);
        s.in_channels = read_u32(is, path);
        s.out_channels = read_u32(is, path);
        s.kernel = read_u32(is, path);
        s.stride = read_u32(is, path);
        s.window = read_u32(is, path);
    }

    Network net(input_shape, layers);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (!layers[i].has_params()) continue;
        Tensor w = read_tensor(is, path);
        Tensor b = read_tensor(is, path);
        if (!w.same_shape(net.weight(i)) || !b.same_shape(net.bias(i)))
            throw format_error("parameter shape mismatch for layer " + std::to_string(i) + " in " + path);
        net.weight(i) = std::move(w);
        net.bias(i) = std::move(b);
    }
    net.bump_version();
    return net;
}

}  // namespace ood
