#include "moeprof/data/batching.hpp"

#include <algorithm>
#include <random>

#include "moeprof/errors.hpp"
#include "moeprof/losses/mixup.hpp"

namespace moeprof::data {

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                    std::size_t epoch) {
    if (batch_size == 0) throw ContractError("batch_size must be >= 1");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(seed ^ (0xD1B54A32D192ED03ULL * (epoch + 1)));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < n; i += batch_size) {
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
    }
    return out;
}

BatchIterator::BatchIterator(const std::vector<Utterance>& utts, std::size_t batch_size, std::uint64_t seed,
                             std::size_t epoch)
    : utts_(&utts), batches_(batch_indices(utts.size(), batch_size, seed, epoch)) {}

Batch BatchIterator::next() {
    if (done()) throw ContractError("BatchIterator exhausted");
    Batch b;
    b.indices = batches_[next_++];
    std::size_t longest = 0;
    for (auto i : b.indices) longest = std::max(longest, (*utts_)[i].waveform.size());
    for (auto i : b.indices) {
        const auto& w = (*utts_)[i].waveform;
        b.original_lengths.push_back(w.size());
        b.waveforms.push_back(w.size() == longest ? w : losses::tile_to_length(w, longest));
    }
    return b;
}

}  // namespace moeprof::data
