#include "moeprof/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "moeprof/errors.hpp"

namespace moeprof::train {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

class Writer {
public:
    template <typename U>
    void put(U v) {
        char b[sizeof(U)];
        std::memcpy(b, &v, sizeof(U));
        out_.append(b, sizeof(U));
    }
    void put_bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
    void put_string(const std::string& s) {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        out_ += s;
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    Reader(const std::string& bytes, std::string origin) : bytes_(bytes), origin_(std::move(origin)) {}

    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw FormatError(origin_ + ": truncated checkpoint (need " + std::to_string(n) + " bytes at offset " +
                              std::to_string(pos_) + ")");
        }
    }
    template <typename U>
    U get() {
        need(sizeof(U));
        U v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(U));
        pos_ += sizeof(U);
        return v;
    }
    void get_bytes(void* p, std::size_t n) {
        need(n);
        std::memcpy(p, bytes_.data() + pos_, n);
        pos_ += n;
    }
    std::string get_string() {
        const auto n = get<std::uint32_t>();
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    const std::string& bytes_;
    std::string origin_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    Writer w;
    w.put_bytes(kCheckpointMagic, 4);
    w.put<std::uint32_t>(kCheckpointVersion);
    w.put_string(to_text(ckpt.config.to_kv()));
    w.put<double>(ckpt.norm.age_mean);
    w.put<double>(ckpt.norm.age_std);
    w.put<double>(ckpt.norm.height_mean);
    w.put<double>(ckpt.norm.height_std);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        w.put_string(name);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(t.shape().size()));
        for (auto d : t.shape()) w.put<std::uint64_t>(d);
        w.put_bytes(t.data().data(), t.numel() * sizeof(float));
    }
    return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin) {
    Reader r(bytes, origin);
    char magic[4];
    r.get_bytes(magic, 4);
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw FormatError(origin + ": not a checkpoint (bad magic)");
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw ConfigError(origin + ": unsupported checkpoint format version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    Checkpoint c;
    c.config = TrainConfig::from_kv(parse_kv_text(r.get_string()));
    c.norm.age_mean = r.get<double>();
    c.norm.age_std = r.get<double>();
    c.norm.height_mean = r.get<double>();
    c.norm.height_std = r.get<double>();
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.get_string();
        const auto rank = r.get<std::uint32_t>();
        if (rank == 0 || rank > 8) throw FormatError(origin + ": tensor " + name + " has invalid rank");
        numeric::Shape shape(rank);
        std::size_t numel = 1;
        for (auto& d : shape) {
            d = static_cast<std::size_t>(r.get<std::uint64_t>());
            if (d == 0 || d > (std::size_t{1} << 32)) throw FormatError(origin + ": tensor " + name + " has invalid shape");
            numel *= d;
        }
        r.need(numel * sizeof(float));
        std::vector<float> data(numel);
        r.get_bytes(data.data(), numel * sizeof(float));
        c.tensors.emplace_back(std::move(name), numeric::Tensor<float>(std::move(shape), std::move(data)));
    }
    if (!r.at_end()) throw FormatError(origin + ": trailing bytes after checkpoint payload");
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const std::string bytes = serialize_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes, path.string());
}

Checkpoint make_checkpoint(const TrainConfig& cfg, const losses::NormStats& norm,
                           const numeric::ParamSet<float>& params) {
    Checkpoint c;
    c.config = cfg;
    c.config.lr = cfg.effective_lr();
    c.norm = norm;
    for (const auto& [name, v] : params.entries()) c.tensors.emplace_back(name, v.value());
    return c;
}

model::SpeakerModel<float> restore_model(const Checkpoint& ckpt) {
    model::SpeakerModel<float> m(ckpt.config.model_config(), ckpt.config.seed);
    auto& ps = m.params();
    std::size_t matched = 0;
    for (const auto& [name, t] : ckpt.tensors) {
        if (!ps.contains(name)) throw ConfigError("checkpoint tensor '" + name + "' does not fit the configured model");
        auto& v = ps.get(name);
        if (v.shape() != t.shape()) {
            throw ConfigError("checkpoint tensor '" + name + "' has shape " + numeric::shape_str(t.shape()) +
                              ", model expects " + numeric::shape_str(v.shape()));
        }
        v.mutable_value() = t;
        ++matched;
    }
    if (matched != ps.size()) {
        throw ConfigError("checkpoint holds " + std::to_string(matched) + " of the model's " +
                          std::to_string(ps.size()) + " tensors");
    }
    return m;
}

}  // namespace moeprof::train
