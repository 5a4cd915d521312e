#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <utility>
#include <vector>

#include "tbinfo/deadtime.hpp"
#include "tbinfo/detection.hpp"
#include "tbinfo/jitter.hpp"
#include "tbinfo/source_model.hpp"

namespace tbinfo {

struct SimConfig {
  SourceModel source = SourceModel::poissonian(0.0);
  ChannelConfig channel;
  JitterProfile jitter;
  DeadTimeConfig deadtime;
  int frame_size = 8;
  std::uint64_t n_frames = 1;
  std::uint64_t seed = 1;
  /// Frames per independently seeded chunk; part of the reproducibility key.
  std::uint64_t chunk_frames = 1u << 16;
  /// Pattern pairs are stored for classes with x, y <= this (and N <= 64).
  int max_stored_clicks = 3;
  /// The (1,1) cell matrix is stored for N up to this size.
  int max_cell_frame = 2048;
  /// Worker threads, 0 = default. Does not affect the result.
  unsigned threads = 0;

  /// Throws std::invalid_argument on an invalid configuration.
  void validate() const;
  /// Bins simulated before each chunk so that jitter and dead-time carry
  /// over from earlier bins.
  int warmup_bins() const;
};

using PatternPair = std::pair<std::uint64_t, std::uint64_t>;

struct SimResult {
  int frame_size = 0;
  std::uint64_t n_frames = 0;
  std::map<std::pair<int, int>, std::uint64_t> class_counts;
  /// Per-bin joint outcomes in the order 00, 0c, c0, cc (first index Alice).
  std::array<std::uint64_t, 4> bin_joint{};
  /// (1,1) frames by click cells, row i = Alice bin i+1, N x N; empty if not stored.
  std::vector<std::uint64_t> cells11;
  /// Pattern pair counts per stored class; bit i = bin i+1.
  std::map<std::pair<int, int>, std::map<PatternPair, std::uint64_t>> pattern_pairs;

  std::uint64_t count(int x, int y) const;
  void merge(const SimResult& other);
};

SimResult simulate(const SimConfig& cfg);

/// Clicks in the frame region of one chunk (after dead-time).
struct ChunkClicks {
  std::uint64_t first_bin = 0;  ///< absolute index of a[0]
  std::vector<std::uint8_t> a, b;
};
ChunkClicks simulate_chunk(const SimConfig& cfg, std::uint64_t chunk);
std::uint64_t chunk_count(const SimConfig& cfg);

enum class TagFormat { csv, binary };
/// One record per click in stream order. CSV: header "side,bin" then rows
/// like "A,1234". Binary: 9 bytes per record, uint8 side (0 = A, 1 = B)
/// followed by the uint64 bin index, little-endian.
void write_tags(const SimConfig& cfg, std::ostream& out, TagFormat format);

struct CondMiEstimate {
  double bits = 0.0;     ///< plug-in plus Miller-Madow correction
  double plugin = 0.0;   ///< raw plug-in value
  double stderr_bits = 0.0;
  std::uint64_t samples = 0;
};
/// Conditional MI of class (x, y) from stored pattern pairs; standard error
/// from a multinomial bootstrap of the class's frames. Throws
/// InsufficientSamples below 1000 frames and DomainError if the class was
/// not stored.
CondMiEstimate estimate_cond_mi(const SimResult& result, int x, int y, std::uint64_t seed = 1, int resamples = 200);

/// splitmix64 finaliser; also used to derive per-chunk seeds.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace tbinfo
