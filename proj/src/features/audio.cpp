#include "moeprof/features/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <map>
#include <sstream>
#include <string>

#include "moeprof/errors.hpp"

namespace moeprof::features {

namespace {

std::string hex_prefix(const std::vector<unsigned char>& bytes) {
    std::ostringstream os;
    const std::size_t n = std::min<std::size_t>(bytes.size(), 12);
    for (std::size_t i = 0; i < n; ++i) {
        if (i) os << ' ';
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(bytes[i]);
    }
    return os.str();
}

std::uint32_t le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::vector<float> decode_pcm16(const unsigned char* p, std::size_t count, bool big_endian) {
    std::vector<float> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned char lo = big_endian ? p[2 * i + 1] : p[2 * i];
        const unsigned char hi = big_endian ? p[2 * i] : p[2 * i + 1];
        const auto s = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
        out[i] = static_cast<float>(s) / 32768.0f;
    }
    return out;
}

Waveform parse_riff(const std::vector<unsigned char>& b, const std::string& path) {
    if (b.size() < 12 || std::memcmp(b.data() + 8, "WAVE", 4) != 0) {
        throw FormatError(path + ": RIFF file without WAVE tag (header bytes " + hex_prefix(b) + ")");
    }
    std::size_t pos = 12;
    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    while (pos + 8 <= b.size()) {
        const std::uint32_t size = le32(b.data() + pos + 4);
        const std::string id(reinterpret_cast<const char*>(b.data() + pos), 4);
        const std::size_t body = pos + 8;
        if (id == "fmt ") {
            if (size < 16 || body + 16 > b.size()) throw FormatError(path + ": truncated fmt chunk");
            format = le16(b.data() + body);
            channels = le16(b.data() + body + 2);
            rate = le32(b.data() + body + 4);
            bits = le16(b.data() + body + 14);
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) throw FormatError(path + ": data chunk before fmt chunk");
            if (format != 1 || bits != 16) {
                throw FormatError(path + ": unsupported WAV encoding (format " + std::to_string(format) + ", " +
                                  std::to_string(bits) + " bits; header bytes " + hex_prefix(b) +
                                  "); 16-bit PCM required");
            }
            if (channels != 1) {
                throw ChannelError(path + ": expected mono audio, found " + std::to_string(channels) + " channels");
            }
            if (body + size > b.size()) {
                throw FormatError(path + ": truncated data chunk (declared " + std::to_string(size) + " bytes, " +
                                  std::to_string(b.size() - body) + " present)");
            }
            if (size < 2) throw FormatError(path + ": empty data chunk");
            Waveform w;
            w.sample_rate = static_cast<int>(rate);
            w.samples = decode_pcm16(b.data() + body, size / 2, false);
            return w;
        }
        pos = body + size + (size & 1u);
    }
    throw FormatError(path + ": no data chunk found (truncated file?)");
}

Waveform parse_sphere(const std::vector<unsigned char>& b, const std::string& path) {
    // "NIST_1A\n   1024\n" then "key -type value" lines up to "end_head".
    const std::string head(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(b.size(), 64)));
    std::istringstream hs(head);
    std::string magic;
    std::size_t header_size = 0;
    hs >> magic >> header_size;
    if (magic != "NIST_1A" || header_size < 16 || header_size > b.size()) {
        throw FormatError(path + ": malformed NIST SPHERE header (header bytes " + hex_prefix(b) + ")");
    }
    std::istringstream fields(std::string(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(header_size)));
    std::string line;
    std::getline(fields, line);
    std::getline(fields, line);
    std::map<std::string, std::string> kv;
    bool ended = false;
    while (std::getline(fields, line)) {
        std::istringstream ls(line);
        std::string key, type, value;
        ls >> key;
        if (key == "end_head") {
            ended = true;
            break;
        }
        ls >> type;
        std::getline(ls >> std::ws, value);
        if (!key.empty()) kv[key] = value;
    }
    if (!ended) throw FormatError(path + ": NIST SPHERE header missing end_head");

    auto get_int = [&](const std::string& k, long fallback) -> long {
        auto it = kv.find(k);
        if (it == kv.end()) return fallback;
        try {
            return std::stol(it->second);
        } catch (...) {
            throw FormatError(path + ": bad SPHERE field " + k + "=" + it->second);
        }
    };
    const long channels = get_int("channel_count", 1);
    const long nbytes = get_int("sample_n_bytes", 2);
    const long rate = get_int("sample_rate", kExpectedSampleRate);
    const std::string coding = kv.count("sample_coding") ? kv["sample_coding"] : "pcm";
    const std::string order = kv.count("sample_byte_format") ? kv["sample_byte_format"] : "01";
    if (coding != "pcm" || nbytes != 2) {
        throw FormatError(path + ": unsupported SPHERE encoding '" + coding + "' with " + std::to_string(nbytes) +
                          "-byte samples (header bytes " + hex_prefix(b) + "); 16-bit pcm required");
    }
    if (channels != 1) {
        throw ChannelError(path + ": expected mono audio, found " + std::to_string(channels) + " channels");
    }
    const std::size_t available = (b.size() - header_size) / 2;
    const long declared = get_int("sample_count", static_cast<long>(available));
    if (declared <= 0) throw FormatError(path + ": SPHERE file has no samples");
    if (static_cast<std::size_t>(declared) > available) {
        throw FormatError(path + ": truncated SPHERE file (declared " + std::to_string(declared) + " samples, " +
                          std::to_string(available) + " present)");
    }
    Waveform w;
    w.sample_rate = static_cast<int>(rate);
    w.samples = decode_pcm16(b.data() + header_size, static_cast<std::size_t>(declared), order == "10");
    return w;
}

std::int16_t to_pcm16(float x) {
    const float scaled = std::round(x * 32768.0f);
    return static_cast<std::int16_t>(std::clamp(scaled, -32768.0f, 32767.0f));
}

void put16(std::ostream& os, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    os.write(b, 2);
}

void put32(std::ostream& os, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

}  // namespace

Waveform read_audio(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open audio file: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), "RIFF", 4) == 0) return parse_riff(bytes, path.string());
    if (bytes.size() >= 7 && std::memcmp(bytes.data(), "NIST_1A", 7) == 0) return parse_sphere(bytes, path.string());
    throw FormatError(path.string() + ": unrecognized audio header (header bytes " + hex_prefix(bytes) + ")");
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path.string());
    const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
    os.write("RIFF", 4);
    put32(os, 36 + data_bytes);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    put32(os, 16);
    put16(os, 1);
    put16(os, 1);
    put32(os, static_cast<std::uint32_t>(w.sample_rate));
    put32(os, static_cast<std::uint32_t>(w.sample_rate * 2));
    put16(os, 2);
    put16(os, 16);
    os.write("data", 4);
    put32(os, data_bytes);
    for (float x : w.samples) put16(os, static_cast<std::uint16_t>(to_pcm16(x)));
}

void write_sphere(const std::filesystem::path& path, const Waveform& w) {
    std::ostringstream hdr;
    hdr << "NIST_1A\n   1024\n"
        << "channel_count -i 1\n"
        << "sample_count -i " << w.samples.size() << '\n'
        << "sample_rate -i " << w.sample_rate << '\n'
        << "sample_n_bytes -i 2\n"
        << "sample_byte_format -s2 01\n"
        << "sample_coding -s3 pcm\n"
        << "end_head\n";
    std::string h = hdr.str();
    h.resize(1024, ' ');
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path.string());
    os.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (float x : w.samples) put16(os, static_cast<std::uint16_t>(to_pcm16(x)));
}

}  // namespace moeprof::features
