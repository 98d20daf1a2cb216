#pragma once

#include <cstdint>
#include <vector>

#include "moeprof/data/corpus.hpp"

namespace moeprof::data {

/// Indices of each batch for one epoch, shuffled with a seed salted by the
/// epoch number. The last batch may be short.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                    std::size_t epoch);

struct Batch {
    std::vector<std::size_t> indices;
    /// Waveforms tiled to the longest item in the batch.
    std::vector<features::Waveform> waveforms;
    /// Sample counts before tiling.
    std::vector<std::size_t> original_lengths;
};

/// Single-consumer iterator over one epoch of aligned batches.
class BatchIterator {
public:
    BatchIterator(const std::vector<Utterance>& utts, std::size_t batch_size, std::uint64_t seed, std::size_t epoch);

    bool done() const { return next_ >= batches_.size(); }
    Batch next();
    std::size_t num_batches() const { return batches_.size(); }

private:
    const std::vector<Utterance>* utts_;
    std::vector<std::vector<std::size_t>> batches_;
    std::size_t next_ = 0;
};

inline BatchIterator make_batches(const std::vector<Utterance>& utts, std::size_t batch_size, std::uint64_t seed,
                                  std::size_t epoch = 0) {
    return BatchIterator(utts, batch_size, seed, epoch);
}

}  // namespace moeprof::data
