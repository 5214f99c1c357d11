#include "avdn/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "avdn/errors.hpp"

namespace avdn {

namespace {

constexpr const char* kMagic = "avdn-checkpoint";

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : "none"; }

double round_to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

void append_float_le(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

float read_float_le(const unsigned char* p) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return std::bit_cast<float>(bits);
}

[[noreturn]] void fail(const std::string& source, const std::string& message) {
    throw FormatError("checkpoint " + source + ": " + message);
}

std::string expect_key(std::istringstream& header, const std::string& key, const std::string& source) {
    std::string line;
    if (!std::getline(header, line)) fail(source, "truncated header, expected '" + key + "'");
    const auto space = line.find(' ');
    if (line.substr(0, space) != key) fail(source, "expected '" + key + "', got '" + line + "'");
    return space == std::string::npos ? std::string() : line.substr(space + 1);
}

double parse_double(const std::string& text, const std::string& source, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        fail(source, "bad value for " + what + ": '" + text + "'");
    }
}

std::int64_t parse_int(const std::string& text, const std::string& source, const std::string& what) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        fail(source, "bad value for " + what + ": '" + text + "'");
    }
}

std::uint64_t parse_uint(const std::string& text, const std::string& source, const std::string& what) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(text, &used);
        if (used != text.size() || text.starts_with('-')) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        fail(source, "bad value for " + what + ": '" + text + "'");
    }
}

std::string config_line(const ModelConfig& c) {
    std::ostringstream out;
    out << "d_model=" << c.d_model << " n_heads=" << c.n_heads << " n_layers=" << c.n_layers << " d_ff=" << c.d_ff
        << " lstm_input=" << c.lstm_input << " lstm_hidden=" << c.lstm_hidden << " vocab_size=" << c.vocab_size
        << " patch_grid=" << c.patch_grid << " obs_resolution=" << c.obs_resolution
        << " step_max=" << format_double(c.step_max);
    return out.str();
}

ModelConfig parse_config(ModelKind kind, const std::string& line, const std::string& source) {
    std::map<std::string, std::string> kv;
    std::istringstream in(line);
    std::string item;
    while (in >> item) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) fail(source, "bad config entry '" + item + "'");
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    const auto get = [&](const std::string& key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) fail(source, "config missing '" + key + "'");
        return it->second;
    };
    const auto size = [&](const std::string& key) { return static_cast<std::size_t>(parse_uint(get(key), source, key)); };
    ModelConfig c;
    c.kind = kind;
    c.d_model = size("d_model");
    c.n_heads = size("n_heads");
    c.n_layers = size("n_layers");
    c.d_ff = size("d_ff");
    c.lstm_input = size("lstm_input");
    c.lstm_hidden = size("lstm_hidden");
    c.vocab_size = size("vocab_size");
    c.patch_grid = size("patch_grid");
    c.obs_resolution = size("obs_resolution");
    c.step_max = parse_double(get("step_max"), source, "step_max");
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        fail(source, e.what());
    }
    return c;
}

}  // namespace

const nn::Tensor2* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, t] : tensors) {
        if (n == name) return &t;
    }
    return nullptr;
}

Checkpoint make_checkpoint(PolicyNetwork& network, std::int64_t iteration, std::uint64_t seed) {
    Checkpoint ck;
    ck.config = network.config();
    ck.iteration = iteration;
    ck.seed = seed;
    network.visit([&](const std::string& name, nn::Parameter& p) {
        nn::Tensor2 t = p.value;
        for (double& v : t.data()) v = round_to_float(v);
        ck.tensors.emplace_back(name, std::move(t));
    });
    return ck;
}

std::unique_ptr<PolicyNetwork> network_from_checkpoint(const Checkpoint& ck) {
    auto network = make_network(ck.config, 0);
    std::size_t used = 0;
    network->visit([&](const std::string& name, nn::Parameter& p) {
        const nn::Tensor2* t = ck.find(name);
        if (!t) throw FormatError("checkpoint: missing tensor '" + name + "'");
        if (t->rows() != p.value.rows() || t->cols() != p.value.cols()) {
            throw FormatError("checkpoint: tensor '" + name + "' is " + nn::shape_string(*t) + ", expected " +
                              nn::shape_string(p.value));
        }
        p.value = *t;
        ++used;
    });
    if (used != ck.tensors.size()) throw FormatError("checkpoint: unexpected extra tensors");
    return network;
}

std::string serialize_checkpoint(const Checkpoint& ck) {
    std::string out;
    out += std::string(kMagic) + " " + std::to_string(kCheckpointSchemaVersion) + "\n";
    out += std::string("kind ") + to_string(ck.config.kind) + "\n";
    out += "iteration " + std::to_string(ck.iteration) + "\n";
    out += "seed " + std::to_string(ck.seed) + "\n";
    out += "train_loss " + format_optional(ck.train_loss) + "\n";
    out += "val_loss " + format_optional(ck.val_loss) + "\n";
    out += "config " + config_line(ck.config) + "\n";
    out += "tensors " + std::to_string(ck.tensors.size()) + "\n";
    for (const auto& [name, t] : ck.tensors) {
        out += name + " " + std::to_string(t.rows()) + " " + std::to_string(t.cols()) + "\n";
    }
    out += "payload\n";
    for (const auto& entry : ck.tensors) {
        for (double v : entry.second.data()) append_float_le(out, v);
    }
    return out;
}

Checkpoint parse_checkpoint(const std::string& bytes, const std::string& source) {
    const std::string marker = "\npayload\n";
    const auto payload_at = bytes.find(marker);
    if (payload_at == std::string::npos) fail(source, "missing payload marker");
    std::istringstream header(bytes.substr(0, payload_at + 1));

    const std::string version = expect_key(header, kMagic, source);
    if (parse_int(version, source, "schema version") != kCheckpointSchemaVersion) {
        fail(source, "unsupported schema version " + version);
    }
    Checkpoint ck;
    ModelKind kind;
    try {
        kind = model_kind_from_string(expect_key(header, "kind", source));
    } catch (const ValidationError& e) {
        fail(source, e.what());
    }
    ck.iteration = parse_int(expect_key(header, "iteration", source), source, "iteration");
    ck.seed = parse_uint(expect_key(header, "seed", source), source, "seed");
    for (auto [key, slot] : {std::pair{"train_loss", &ck.train_loss}, std::pair{"val_loss", &ck.val_loss}}) {
        const std::string v = expect_key(header, key, source);
        if (v != "none") *slot = parse_double(v, source, key);
    }
    ck.config = parse_config(kind, expect_key(header, "config", source), source);
    const auto count = parse_uint(expect_key(header, "tensors", source), source, "tensor count");

    std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> manifest;
    std::size_t total = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
        std::string line;
        if (!std::getline(header, line)) fail(source, "manifest truncated");
        std::istringstream in(line);
        std::string name;
        long long rows = -1;
        long long cols = -1;
        if (!(in >> name >> rows >> cols) || rows < 0 || cols < 0) fail(source, "bad manifest line '" + line + "'");
        manifest.push_back({name, {static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)}});
        total += static_cast<std::size_t>(rows * cols);
    }

    const std::size_t start = payload_at + marker.size();
    if (bytes.size() - start != total * 4) {
        fail(source, "payload has " + std::to_string(bytes.size() - start) + " bytes, manifest needs " +
                         std::to_string(total * 4));
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + start);
    for (const auto& [name, shape] : manifest) {
        nn::Tensor2 t(shape.first, shape.second);
        for (double& v : t.data()) {
            v = static_cast<double>(read_float_le(p));
            p += 4;
        }
        ck.tensors.emplace_back(name, std::move(t));
    }
    return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const std::string bytes = serialize_checkpoint(ck);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("checkpoint " + path.string() + ": cannot open file");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_checkpoint(bytes, path.string());
}

}  // namespace avdn
