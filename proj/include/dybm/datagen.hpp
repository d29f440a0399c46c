#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dybm/rng.hpp"
#include "dybm/sequence.hpp"

namespace dybm {

struct MarkovSpec {
  int n_dims = 7;
  double p_stay = 0.95;
  int length = 1000;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Each dimension is an independent two-state chain: keep the previous value
// with probability p_stay, flip otherwise. Initial state uniform.
BinarySequence markov_generate(const MarkovSpec& spec);

// Total NLL of seq under the generating chain; the first step costs
// -log(1/2) per dimension.
double markov_true_nll(const BinarySequence& seq, const MarkovSpec& spec);

// Split into consecutive non-overlapping windows; a trailing remainder shorter
// than chunk_len is dropped.
std::vector<BinarySequence> chunk_sequence(const BinarySequence& seq, int chunk_len);

struct FrameSequence {
  int height = 0;
  int width = 0;
  std::vector<std::vector<std::uint8_t>> frames;  // grayscale 0-255, row-major
  std::string source;
};

struct VideoSpec {
  int patch_size = 64;
  int n_frames = 19;
  int n_sprites = 2;
  int frame_threshold = 127;
  int sprite_size = 6;
  double speed_min = 0.5;  // pixels per frame
  double speed_max = 1.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Continuous position folded into [lo, hi] by elastic reflection.
double reflect_position(double start, double velocity, double t, double lo, double hi);

// Fixed-shape sprites moving with constant speed, uniform random direction,
// bouncing off the patch edges; overlaps render as pixelwise max.
FrameSequence bouncing_sprites_generate(const VideoSpec& spec);

// Block mean over factor x factor tiles, rounded half-up.
std::vector<std::uint8_t> downsample_frame(const std::vector<std::uint8_t>& frame, int h,
                                           int w, int factor);
FrameSequence downsample(const FrameSequence& video, int factor);

// 1 where pixel > threshold (strict), else 0.
std::vector<std::uint8_t> binarize_frame(const std::vector<std::uint8_t>& frame,
                                         int threshold);
FrameSequence binarize(const FrameSequence& video, int threshold);

// Flatten each binarized frame row-major into a column; the first
// n_input_frames frames become an (H*W) x n_input_frames sequence.
BinarySequence video_to_sequence(const FrameSequence& binary_frames, int n_input_frames);
BinarySequence frames_to_sequence(const FrameSequence& binary_frames, int from_frame,
                                  int count);

// Raw-frames container: "DYVF" magic, u32 n_videos/n_frames/height/width
// (little-endian), then row-major byte pixels ordered [video][frame][row][col].
// All videos in one file share the frame count and dimensions.
void export_frames(const std::filesystem::path& path,
                   const std::vector<FrameSequence>& videos);
std::vector<FrameSequence> ingest_frames(const std::filesystem::path& path);

// One CSV row per dimension.
void export_sequence_csv(const std::filesystem::path& path, const BinarySequence& seq);

}  // namespace dybm
