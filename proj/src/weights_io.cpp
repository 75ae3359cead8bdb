#include "insar/weights_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "insar/raster.hpp"

namespace insar::nn {

namespace {

constexpr char kMagic[4] = {'C', 'N', 'N', 'W'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void array(const std::vector<float>& a) {
        u32(static_cast<std::uint32_t>(a.size()));
        for (float f : a) {
            if (!std::isfinite(f)) throw DataError("refusing to encode non-finite weight");
            u32(std::bit_cast<std::uint32_t>(f));
        }
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

    void set_context(std::string ctx) { context_ = std::move(ctx); }

    void need(std::size_t n) const {
        if (pos_ + n > b_.size())
            throw TruncationError("CNNW file truncated while reading " + context_ + " (offset " +
                                  std::to_string(pos_) + ", need " + std::to_string(n) + " more bytes)");
    }
    std::uint8_t u8() {
        need(1);
        return b_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::vector<float> array(std::size_t expected) {
        const std::uint32_t n = u32();
        if (n != expected)
            throw FormatError("CNNW " + context_ + ": array holds " + std::to_string(n) +
                              " values, layer shape needs " + std::to_string(expected));
        need(static_cast<std::size_t>(n) * 4);
        std::vector<float> a(n);
        for (auto& f : a) {
            f = std::bit_cast<float>(u32());
            if (!std::isfinite(f)) throw DataError("CNNW " + context_ + ": non-finite weight");
        }
        return a;
    }
    bool at_end() const { return pos_ == b_.size(); }

private:
    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
    std::string context_ = "header";
};

void write_layer(Writer& w, const LayerParams<float>& p) {
    w.array(p.kernel);
    w.array(p.pointwise);
    w.array(p.bias);
}

LayerParams<float> read_layer(Reader& r, const LayerSpec& spec) {
    const LayerParams<float> shape = zero_params<float>(spec);
    LayerParams<float> p;
    p.kernel = r.array(shape.kernel.size());
    p.pointwise = r.array(shape.pointwise.size());
    p.bias = r.array(shape.bias.size());
    return p;
}

LayerKind parse_kind(std::uint8_t v, std::size_t layer) {
    if (v > static_cast<std::uint8_t>(LayerKind::Upsample3))
        throw FormatError("CNNW layer " + std::to_string(layer) + ": unknown layer kind " + std::to_string(v));
    return static_cast<LayerKind>(v);
}

Activation parse_activation(std::uint8_t v, std::size_t layer) {
    if (v > static_cast<std::uint8_t>(Activation::Sigmoid))
        throw FormatError("CNNW layer " + std::to_string(layer) + ": unknown activation " + std::to_string(v));
    return static_cast<Activation>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_weights(const NetworkParams<float>& params, WeightCodecOptions options) {
    check_consistent(params);
    const bool with_adam = options.include_adam_state && params.adam.step > 0;
    Writer w;
    w.bytes(kMagic, 4);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(params.spec.size()));
    for (const LayerSpec& l : params.spec) {
        w.u8(static_cast<std::uint8_t>(l.kind));
        w.u8(static_cast<std::uint8_t>(l.activation));
        w.u32(static_cast<std::uint32_t>(l.in_channels));
        w.u32(static_cast<std::uint32_t>(l.out_channels));
    }
    w.u8(with_adam ? 1 : 0);
    w.f64(params.learning_rate);
    if (with_adam) w.u64(params.adam.step);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        write_layer(w, params.layers[l]);
        if (with_adam) {
            write_layer(w, params.adam.first_moment[l]);
            write_layer(w, params.adam.second_moment[l]);
        }
    }
    return w.take();
}

NetworkParams<float> decode_weights(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    r.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("not a CNNW weight file (bad magic)");
    for (int i = 0; i < 4; ++i) r.u8();
    const std::uint32_t version = r.u32();
    if (version != kVersion) throw FormatError("unsupported CNNW version " + std::to_string(version));
    const std::uint32_t count = r.u32();
    if (count == 0 || count > 4096) throw FormatError("CNNW layer count out of range");

    NetworkParams<float> params;
    for (std::size_t l = 0; l < count; ++l) {
        r.set_context("layer table entry " + std::to_string(l));
        LayerSpec s;
        s.kind = parse_kind(r.u8(), l);
        s.activation = parse_activation(r.u8(), l);
        s.in_channels = static_cast<int>(r.u32());
        s.out_channels = static_cast<int>(r.u32());
        if (s.in_channels <= 0 || s.out_channels <= 0 || s.in_channels > 65536 || s.out_channels > 65536)
            throw FormatError("CNNW layer " + std::to_string(l) + ": channel count out of range");
        params.spec.push_back(s);
    }
    try {
        validate(params.spec);
    } catch (const ShapeError& e) {
        throw FormatError(std::string("CNNW layer table is inconsistent: ") + e.what());
    }
    r.set_context("header");
    const std::uint8_t has_adam = r.u8();
    if (has_adam > 1) throw FormatError("CNNW: bad Adam flag");
    params.learning_rate = r.f64();
    if (has_adam) params.adam.step = r.u64();

    for (std::size_t l = 0; l < count; ++l) {
        r.set_context("layer " + std::to_string(l));
        params.layers.push_back(read_layer(r, params.spec[l]));
        if (has_adam) {
            r.set_context("layer " + std::to_string(l) + " Adam moments");
            params.adam.first_moment.push_back(read_layer(r, params.spec[l]));
            params.adam.second_moment.push_back(read_layer(r, params.spec[l]));
        } else {
            params.adam.first_moment.push_back(zero_params<float>(params.spec[l]));
            params.adam.second_moment.push_back(zero_params<float>(params.spec[l]));
        }
    }
    if (!r.at_end()) throw FormatError("CNNW: trailing bytes after the last layer");
    return params;
}

NetworkParams<float> decode_weights(std::span<const std::uint8_t> bytes, const NetworkSpec& expected) {
    NetworkParams<float> params = decode_weights(bytes);
    if (params.spec.size() != expected.size())
        throw FormatError("CNNW holds " + std::to_string(params.spec.size()) + " layers, expected " +
                          std::to_string(expected.size()));
    for (std::size_t l = 0; l < expected.size(); ++l)
        if (!(params.spec[l] == expected[l]))
            throw FormatError("CNNW layer " + std::to_string(l) + " (" + to_string(params.spec[l].kind) +
                              ") does not match the expected network layer (" +
                              to_string(expected[l].kind) + ")");
    return params;
}

void save_weights(const std::filesystem::path& path, const NetworkParams<float>& params,
                  WeightCodecOptions options) {
    write_file(path, encode_weights(params, options));
}

NetworkParams<float> load_weights(const std::filesystem::path& path) {
    return decode_weights(read_file(path));
}

NetworkParams<float> load_weights(const std::filesystem::path& path, const NetworkSpec& expected) {
    return decode_weights(read_file(path), expected);
}

}  // namespace insar::nn
