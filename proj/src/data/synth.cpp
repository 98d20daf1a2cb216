#include "moeprof/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "moeprof/data/phones.hpp"
#include "moeprof/errors.hpp"
#include "moeprof/features/audio.hpp"

namespace moeprof::data {

namespace fs = std::filesystem;

namespace {

constexpr int kRate = features::kExpectedSampleRate;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMinHeightIn = 58.0, kMaxHeightIn = 80.0;
constexpr int kMinAgeYears = 21, kMaxAgeYears = 76;

// Test speakers: indices congruent to 2, 5 or 7 mod 10 (about 30%, both sexes).
bool is_test_speaker(std::size_t i) {
    const std::size_t r = i % 10;
    return r == 2 || r == 5 || r == 7;
}

std::string speaker_id(std::size_t i) {
    std::string id(4, 'A');
    id[0] = static_cast<char>('A' + (i / 676) % 26);
    id[1] = static_cast<char>('A' + (i / 26) % 26);
    id[2] = static_cast<char>('A' + i % 26);
    id[3] = '0';
    return id;
}

double age_tilt(int age) { return 0.5 + 2.0 * (age - kMinAgeYears) / static_cast<double>(kMaxAgeYears - kMinAgeYears); }

double height_depth(int inches) { return 0.1 + 0.8 * (inches - kMinHeightIn) / (kMaxHeightIn - kMinHeightIn); }

enum class SegKind { silence, vowel, nasal, fricative };

struct Segment {
    std::size_t start, end;
    SegKind kind;
    std::string symbol;
};

std::vector<Segment> plan_segments(std::size_t n, bool single_class, std::mt19937_64& rng) {
    auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    auto pick = [&](std::initializer_list<const char*> xs) {
        std::uniform_int_distribution<std::size_t> d(0, xs.size() - 1);
        return std::string(*(xs.begin() + d(rng)));
    };
    if (single_class) return {{0, n, SegKind::vowel, "aa"}};

    std::vector<Segment> segs;
    const auto lead = static_cast<std::size_t>(uni(0.05, 0.10) * kRate);
    const auto tail = static_cast<std::size_t>(uni(0.05, 0.10) * kRate);
    segs.push_back({0, lead, SegKind::silence, "h#"});
    const std::size_t body_end = n - tail;
    std::size_t pos = lead;
    std::size_t k = 0;
    while (pos < body_end) {
        Segment s{};
        if (k % 2 == 0) {
            s.kind = SegKind::vowel;
            s.symbol = pick({"iy", "aa", "ae", "ow", "uw", "eh"});
            s.end = pos + static_cast<std::size_t>(uni(0.08, 0.16) * kRate);
        } else if (k % 4 == 1) {
            s.kind = SegKind::nasal;
            s.symbol = pick({"m", "n"});
            s.end = pos + static_cast<std::size_t>(uni(0.04, 0.08) * kRate);
        } else {
            s.kind = SegKind::fricative;
            s.symbol = pick({"s", "sh", "f"});
            s.end = pos + static_cast<std::size_t>(uni(0.04, 0.08) * kRate);
        }
        s.start = pos;
        s.end = std::min(s.end, body_end);
        segs.push_back(s);
        pos = s.end;
        ++k;
    }
    segs.push_back({body_end, n, SegKind::silence, "h#"});
    return segs;
}

/// Unit-power harmonic series with amplitudes k^-tilt below 4 kHz.
struct Harmonics {
    std::vector<double> amp;
    std::vector<double> phase;
};

Harmonics make_harmonics(double f0, double tilt, std::mt19937_64& rng) {
    Harmonics h;
    std::uniform_real_distribution<double> ph(0.0, kTwoPi);
    double power = 0.0;
    for (int k = 1; k * f0 < 4000.0; ++k) {
        const double a = std::pow(static_cast<double>(k), -tilt);
        h.amp.push_back(a);
        h.phase.push_back(ph(rng));
        power += a * a / 2.0;
    }
    const double norm = 1.0 / std::sqrt(power);
    for (auto& a : h.amp) a *= norm;
    return h;
}

features::Waveform synth_utterance(const SynthSpeaker& spk, const SynthOptions& opts, std::mt19937_64& rng,
                                   PhoneticTranscription& phn) {
    std::uniform_real_distribution<double> dur(opts.min_duration_s, opts.max_duration_s);
    const auto n = static_cast<std::size_t>(std::lround(dur(rng) * kRate));
    std::normal_distribution<double> unit(0.0, 1.0);
    const double f0 = spk.f0_hz * (1.0 + 0.01 * std::clamp(unit(rng), -2.0, 2.0));

    const double vowel_tilt = age_tilt(spk.age_years);
    const double nasal_tilt = opts.age_cue == AgeCue::all_voiced ? vowel_tilt + 1.0 : 2.5;
    const Harmonics vowel_h = make_harmonics(f0, vowel_tilt, rng);
    const Harmonics nasal_h = make_harmonics(f0, nasal_tilt, rng);

    const auto segs = plan_segments(n, opts.single_class, rng);
    const double depth = height_depth(spk.height_inches);

    features::Waveform w;
    w.sample_rate = kRate;
    w.samples.assign(n, 0.0f);
    double prev_noise = 0.0;
    for (const auto& s : segs) {
        phn.push_back({s.start, s.end, s.symbol});
        for (std::size_t i = s.start; i < s.end; ++i) {
            const double t = static_cast<double>(i) / kRate;
            double v = 0.0;
            switch (s.kind) {
                case SegKind::vowel:
                case SegKind::nasal: {
                    const auto& h = s.kind == SegKind::vowel ? vowel_h : nasal_h;
                    for (std::size_t k = 0; k < h.amp.size(); ++k) {
                        v += h.amp[k] * std::sin(kTwoPi * static_cast<double>(k + 1) * f0 * t + h.phase[k]);
                    }
                    if (s.kind == SegKind::nasal) v *= 0.5;
                    break;
                }
                case SegKind::fricative: {
                    const double noise = unit(rng);
                    v = 0.4 * (noise - prev_noise);
                    prev_noise = noise;
                    break;
                }
                case SegKind::silence: break;
            }
            const double env = 1.0 - depth * 0.5 * (1.0 - std::cos(kTwoPi * 4.0 * t));
            const double x = 0.25 * env * v + 0.002 * unit(rng);
            w.samples[i] = static_cast<float>(std::clamp(x, -1.0, 1.0));
        }
    }
    return w;
}

}  // namespace

std::vector<SynthSpeaker> synth_speakers(const SynthOptions& opts) {
    if (opts.n_speakers < 2) throw ContractError("synthetic corpus needs at least 2 speakers (both sexes)");
    if (opts.utts_per_speaker < 1) throw ContractError("synthetic corpus needs at least 1 utterance per speaker");
    if (!(opts.min_duration_s >= 0.1 && opts.max_duration_s >= opts.min_duration_s)) {
        throw ContractError("synthetic durations must satisfy 0.1 <= min <= max");
    }
    std::mt19937_64 rng(opts.seed);
    std::vector<SynthSpeaker> out;
    for (std::size_t i = 0; i < opts.n_speakers; ++i) {
        SynthSpeaker s;
        s.gender = static_cast<int>(i % 2);
        s.id = speaker_id(i);
        s.dir = std::string(s.gender ? "F" : "M") + s.id;
        s.age_years = std::uniform_int_distribution<int>(kMinAgeYears, kMaxAgeYears)(rng);
        s.height_inches = s.gender ? std::uniform_int_distribution<int>(58, 72)(rng)
                                   : std::uniform_int_distribution<int>(64, 80)(rng);
        s.f0_hz = s.gender ? std::uniform_real_distribution<double>(kFemaleF0Min, 240.0)(rng)
                           : std::uniform_real_distribution<double>(100.0, kMaleF0Max)(rng);
        s.test = is_test_speaker(i);
        out.push_back(s);
    }
    return out;
}

std::vector<SynthSpeaker> synth_corpus(const fs::path& root, const SynthOptions& opts) {
    const auto speakers = synth_speakers(opts);
    fs::create_directories(root / "DOC");

    std::ofstream info(root / "DOC" / "SPKRINFO.TXT");
    if (!info) throw DataError("cannot write speaker table under " + root.string());
    info << "; Synthetic speaker table (TIMIT SPKRINFO layout)\n"
         << ";\n"
         << ";  ID  Sex DR Use  RecDate   BirthDate  Ht     Race Edu\n";

    for (std::size_t i = 0; i < speakers.size(); ++i) {
        const auto& spk = speakers[i];
        const int dialect = static_cast<int>(i % 8) + 1;
        std::mt19937_64 date_rng(opts.seed * 1000003ULL + i);
        const int month = std::uniform_int_distribution<int>(1, 12)(date_rng);
        const int day = std::uniform_int_distribution<int>(1, 28)(date_rng);
        char line[160];
        std::snprintf(line, sizeof line, "%s  %c  %d  %s  %02d/%02d/86  %02d/%02d/%02d  %d'%d\"  WHT  BS\n",
                      spk.id.c_str(), spk.gender ? 'F' : 'M', dialect, spk.test ? "TST" : "TRN", month, day, month,
                      day, 86 - spk.age_years, spk.height_inches / 12, spk.height_inches % 12);
        info << line;

        const fs::path dir = root / (spk.test ? "TEST" : "TRAIN") / ("DR" + std::to_string(dialect)) / spk.dir;
        fs::create_directories(dir);
        for (std::size_t u = 0; u < opts.utts_per_speaker; ++u) {
            std::mt19937_64 utt_rng(opts.seed ^ (0x9E3779B97F4A7C15ULL * (i * 131 + u + 1)));
            PhoneticTranscription phn;
            const auto w = synth_utterance(spk, opts, utt_rng, phn);
            const std::string stem = "SX" + std::to_string(u + 1);
            features::write_wav(dir / (stem + ".WAV"), w);
            write_phn(dir / (stem + ".PHN"), phn);
        }
    }
    return speakers;
}

}  // namespace moeprof::data
