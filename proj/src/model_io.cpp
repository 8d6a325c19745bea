#include "sheepweight/model_io.hpp"

#include "sheepweight/errors.hpp"
#include "sheepweight/file_util.hpp"
#include "sheepweight/numeric_text.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <sstream>

namespace sheepweight {
namespace {

constexpr std::size_t kMaxRank = 8;

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Writer {
public:
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
    std::vector<std::uint8_t>& buffer() { return out_; }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(get(8)); }
    std::string text(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw CorruptFileError("model file is truncated");
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::string build_header(const ModelContainer& c) {
    std::string h;
    auto line = [&h](const std::string& key, const std::string& value) { h += key + "=" + value + "\n"; };
    line("kind", std::string(model_kind_name(c.kind)));
    line("seed", std::to_string(c.seed));
    line("layers", std::to_string(c.layers.size()));
    for (std::size_t i = 0; i < c.layers.size(); ++i) line("layer." + std::to_string(i), c.layers[i]);
    for (const auto& [k, v] : c.attributes) line("attr." + k, v);
    for (const auto& [k, v] : c.config) line("config." + k, v);
    return h;
}

std::uint64_t parse_u64(const std::string& text, const char* what) {
    std::uint64_t v = 0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
        throw CorruptFileError(std::string("model header: bad ") + what + " '" + text + "'");
    }
    return v;
}

void parse_header(const std::string& header, ModelContainer& c) {
    std::istringstream in(header);
    std::string line;
    bool have_kind = false;
    std::size_t declared_layers = 0;
    std::map<std::size_t, std::string> layers;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw CorruptFileError("model header: malformed line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "kind") {
            if (value == "segmenter") {
                c.kind = ModelKind::segmenter;
            } else if (value == "regressor") {
                c.kind = ModelKind::regressor;
            } else {
                throw CorruptFileError("model header: unknown kind '" + value + "'");
            }
            have_kind = true;
        } else if (key == "seed") {
            c.seed = parse_u64(value, "seed");
        } else if (key == "layers") {
            declared_layers = parse_u64(value, "layer count");
        } else if (key.starts_with("layer.")) {
            layers[parse_u64(key.substr(6), "layer index")] = value;
        } else if (key.starts_with("attr.")) {
            c.attributes[key.substr(5)] = value;
        } else if (key.starts_with("config.")) {
            c.config[key.substr(7)] = value;
        } else {
            throw CorruptFileError("model header: unknown key '" + key + "'");
        }
    }
    if (!have_kind) throw CorruptFileError("model header: missing kind");
    if (layers.size() != declared_layers) throw CorruptFileError("model header: layer table is incomplete");
    for (std::size_t i = 0; i < declared_layers; ++i) {
        const auto it = layers.find(i);
        if (it == layers.end()) throw CorruptFileError("model header: missing layer." + std::to_string(i));
        c.layers.push_back(it->second);
    }
}

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

std::size_t descriptor_number(const std::vector<std::string>& words, std::size_t i, const std::string& desc) {
    if (i >= words.size()) throw ShapeMismatchError("bad layer descriptor '" + desc + "'");
    std::size_t v = 0;
    const auto& w = words[i];
    const auto r = std::from_chars(w.data(), w.data() + w.size(), v);
    if (r.ec != std::errc{} || r.ptr != w.data() + w.size() || v == 0) {
        throw ShapeMismatchError("bad layer descriptor '" + desc + "'");
    }
    return v;
}

const TensorRecord& find_tensor(const ModelContainer& c, const std::string& name) {
    for (const TensorRecord& t : c.tensors) {
        if (t.name == name) return t;
    }
    throw ShapeMismatchError("model is missing tensor '" + name + "'");
}

Tensor tensor_from(const ModelContainer& c, const std::string& name, const Shape& expected) {
    const TensorRecord& t = find_tensor(c, name);
    if (t.shape != expected) {
        throw ShapeMismatchError("tensor '" + name + "' has shape " + shape_to_string(t.shape) + ", layer expects " +
                                 shape_to_string(expected));
    }
    if (t.values.size() != shape_size(t.shape)) {
        throw ShapeMismatchError("tensor '" + name + "' declares shape " + shape_to_string(t.shape) + " but stores " +
                                 std::to_string(t.values.size()) + " values");
    }
    return Tensor(t.shape, t.values);
}

std::size_t attribute_size(const ModelContainer& c, const std::string& key) {
    const auto it = c.attributes.find(key);
    if (it == c.attributes.end()) throw CorruptFileError("model is missing attribute '" + key + "'");
    return parse_u64(it->second, key.c_str());
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace

std::string_view model_kind_name(ModelKind kind) noexcept {
    return kind == ModelKind::segmenter ? "segmenter" : "regressor";
}

std::vector<std::uint8_t> serialize_model(const ModelContainer& c) {
    Writer w;
    w.bytes(std::string_view(kModelMagic, sizeof kModelMagic));
    w.u32(c.format_version);
    const std::string header = build_header(c);
    w.u32(static_cast<std::uint32_t>(header.size()));
    w.bytes(header);
    w.u32(static_cast<std::uint32_t>(c.tensors.size()));
    for (const TensorRecord& t : c.tensors) {
        w.u32(static_cast<std::uint32_t>(t.name.size()));
        w.bytes(t.name);
        w.u32(static_cast<std::uint32_t>(t.shape.size()));
        for (std::size_t d : t.shape) w.u64(d);
        w.u64(t.values.size());
        for (double v : t.values) w.f64(v);
    }
    w.u64(fnv1a(w.buffer()));
    return std::move(w.buffer());
}

ModelContainer deserialize_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof kModelMagic + 4 ||
        std::memcmp(bytes.data(), kModelMagic, sizeof kModelMagic) != 0) {
        throw CorruptFileError("not a model file (bad magic)");
    }
    Reader r(bytes.subspan(sizeof kModelMagic));
    ModelContainer c;
    c.format_version = r.u32();
    if (c.format_version != kModelFormatVersion) {
        throw VersionError("unsupported model format version " + std::to_string(c.format_version) + " (expected " +
                           std::to_string(kModelFormatVersion) + ")");
    }
    if (bytes.size() < sizeof kModelMagic + 4 + 8) throw CorruptFileError("model file is truncated");
    const auto body = bytes.first(bytes.size() - 8);
    Reader tail(bytes.last(8));
    if (fnv1a(body) != tail.u64()) throw CorruptFileError("model file checksum mismatch (truncated or corrupt)");

    Reader in(body.subspan(sizeof kModelMagic + 4));
    const std::uint32_t header_len = in.u32();
    parse_header(in.text(header_len), c);
    const std::uint32_t n_tensors = in.u32();
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        TensorRecord t;
        t.name = in.text(in.u32());
        const std::uint32_t rank = in.u32();
        if (rank == 0 || rank > kMaxRank) throw CorruptFileError("tensor '" + t.name + "' has invalid rank");
        for (std::uint32_t d = 0; d < rank; ++d) t.shape.push_back(in.u64());
        const std::uint64_t count = in.u64();
        if (count > in.remaining() / 8) throw CorruptFileError("tensor '" + t.name + "' overruns the file");
        t.values.resize(count);
        for (double& v : t.values) v = in.f64();
        c.tensors.push_back(std::move(t));
    }
    if (in.remaining() != 0) throw CorruptFileError("trailing bytes after tensor table");
    validate_container(c);
    return c;
}

void validate_container(const ModelContainer& c) {
    if (c.format_version != kModelFormatVersion) {
        throw VersionError("unsupported model format version " + std::to_string(c.format_version));
    }
    for (const auto* table : {&c.attributes, &c.config}) {
        for (const auto& [k, v] : *table) {
            if (k.empty() || k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
                throw ValidationError("model header entry '" + k + "' is not a single key=value line");
            }
        }
    }
    for (const TensorRecord& t : c.tensors) {
        if (t.values.size() != shape_size(t.shape)) {
            throw ShapeMismatchError("tensor '" + t.name + "' declares shape " + shape_to_string(t.shape) +
                                     " but stores " + std::to_string(t.values.size()) + " values");
        }
    }
    (void)network_from_container(c);
    if (c.kind == ModelKind::regressor) {
        (void)reg_model_from_container(c);
    } else {
        (void)seg_model_from_container(c);
    }
}

void save_model(const ModelContainer& container, const std::filesystem::path& path) {
    validate_container(container);
    const auto bytes = serialize_model(container);
    write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

ModelContainer load_model(const std::filesystem::path& path) {
    const std::string raw = read_file(path);
    return deserialize_model(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

std::vector<std::string> describe_layers(const Network& network) {
    std::vector<std::string> out;
    for (const Layer& layer : network.layers) {
        out.push_back(std::visit(
            overloaded{
                [](const DenseLayer& l) {
                    return "dense " + std::to_string(l.in_features()) + " " + std::to_string(l.out_features()) + " " +
                           std::string(activation_name(l.activation));
                },
                [](const Conv2dLayer& l) {
                    return "conv2d " + std::to_string(l.in_channels()) + " " + std::to_string(l.out_channels()) + " " +
                           std::to_string(l.kernel_size());
                },
                [](const ActivationLayer& l) { return "activation " + std::string(activation_name(l.kind)); },
                [](const MaxPool2x2Layer&) { return std::string("maxpool2x2"); },
                [](const Upsample2xLayer&) { return std::string("upsample2x"); },
            },
            layer));
    }
    return out;
}

Network network_from_container(const ModelContainer& c) {
    Network net;
    for (std::size_t i = 0; i < c.layers.size(); ++i) {
        const std::string& desc = c.layers[i];
        const auto words = split_words(desc);
        if (words.empty()) throw ShapeMismatchError("empty layer descriptor at index " + std::to_string(i));
        const std::string prefix = "layer" + std::to_string(i) + ".";
        if (words[0] == "dense" && words.size() == 4) {
            const std::size_t in = descriptor_number(words, 1, desc), out = descriptor_number(words, 2, desc);
            Activation act;
            try {
                act = parse_activation(words[3]);
            } catch (const ValidationError&) {
                throw ShapeMismatchError("bad layer descriptor '" + desc + "'");
            }
            net.layers.emplace_back(DenseLayer{tensor_from(c, prefix + "weights", {in, out}),
                                               tensor_from(c, prefix + "bias", {out}), act});
        } else if (words[0] == "conv2d" && words.size() == 4) {
            const std::size_t in = descriptor_number(words, 1, desc), out = descriptor_number(words, 2, desc),
                              k = descriptor_number(words, 3, desc);
            if (k % 2 == 0) throw ShapeMismatchError("conv2d kernel must be odd in '" + desc + "'");
            net.layers.emplace_back(Conv2dLayer{tensor_from(c, prefix + "kernels", {out, in, k, k}),
                                                tensor_from(c, prefix + "bias", {out})});
        } else if (words[0] == "activation" && words.size() == 2) {
            try {
                net.layers.emplace_back(ActivationLayer{parse_activation(words[1])});
            } catch (const ValidationError&) {
                throw ShapeMismatchError("bad layer descriptor '" + desc + "'");
            }
        } else if (words[0] == "maxpool2x2" && words.size() == 1) {
            net.layers.emplace_back(MaxPool2x2Layer{});
        } else if (words[0] == "upsample2x" && words.size() == 1) {
            net.layers.emplace_back(Upsample2xLayer{});
        } else {
            throw ShapeMismatchError("unknown layer descriptor '" + desc + "'");
        }
    }
    return net;
}

namespace {

void append_network_tensors(ModelContainer& c, const Network& network) {
    Network copy = network;
    for (ParamView& p : copy.parameters()) {
        c.tensors.push_back({p.name, p.shape, std::vector<double>(p.values.begin(), p.values.end())});
    }
}

}  // namespace

ModelContainer to_container(const SegModel& model, std::uint64_t seed, std::map<std::string, std::string> config) {
    ModelContainer c;
    c.kind = ModelKind::segmenter;
    c.seed = seed;
    c.layers = describe_layers(model.network);
    c.attributes["input_height"] = std::to_string(model.input_size.height);
    c.attributes["input_width"] = std::to_string(model.input_size.width);
    c.config = std::move(config);
    append_network_tensors(c, model.network);
    return c;
}

ModelContainer to_container(const RegModel& model, std::uint64_t seed, std::map<std::string, std::string> config) {
    if (!model.scaler.fitted) throw ValidationError("cannot save a regressor whose scaler is not fitted");
    ModelContainer c;
    c.kind = ModelKind::regressor;
    c.seed = seed;
    c.layers = describe_layers(model.network);
    c.attributes["feature_order"] = "area,age,gender";
    c.config = std::move(config);
    append_network_tensors(c, model.network);
    c.tensors.push_back({"scaler.mean", {2}, {model.scaler.mean[0], model.scaler.mean[1]}});
    c.tensors.push_back({"scaler.std", {2}, {model.scaler.stddev[0], model.scaler.stddev[1]}});
    return c;
}

SegModel seg_model_from_container(const ModelContainer& c) {
    if (c.kind != ModelKind::segmenter) throw ValidationError("model file holds a regressor, not a segmenter");
    SegModel model{network_from_container(c), {attribute_size(c, "input_height"), attribute_size(c, "input_width")}};
    const auto expected = describe_layers(build_seg_model(model.input_size, 0).network);
    if (c.layers != expected) throw ShapeMismatchError("segmenter layer table does not match the fixed architecture");
    return model;
}

RegModel reg_model_from_container(const ModelContainer& c) {
    if (c.kind != ModelKind::regressor) throw ValidationError("model file holds a segmenter, not a regressor");
    const auto order = c.attributes.find("feature_order");
    if (order == c.attributes.end() || order->second != "area,age,gender") {
        throw CorruptFileError("regressor feature order must be area,age,gender");
    }
    RegModel model{network_from_container(c), {}};
    try {
        check_regressor_layout(model);
    } catch (const ValidationError& e) {
        throw ShapeMismatchError(e.what());
    }
    const Tensor mean = tensor_from(c, "scaler.mean", {2});
    const Tensor stddev = tensor_from(c, "scaler.std", {2});
    model.scaler = Scaler{{mean[0], mean[1]}, {stddev[0], stddev[1]}, true};
    return model;
}

}  // namespace sheepweight
