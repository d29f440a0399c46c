#include "dybm/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dybm/errors.hpp"

namespace dybm {

void MarkovSpec::validate() const {
  if (n_dims < 1) throw ConfigError("markov n_dims must be >= 1");
  if (!(p_stay > 0.0 && p_stay < 1.0)) throw ConfigError("p_stay outside (0,1)");
  if (length < 0) throw ConfigError("markov length must be >= 0");
}

BinarySequence markov_generate(const MarkovSpec& spec) {
  spec.validate();
  Rng rng(spec.rng_seed);
  BinarySequence seq(spec.n_dims, spec.length);
  std::vector<std::uint8_t> state(spec.n_dims);
  for (auto& s : state) s = rng.bernoulli(0.5) ? 1 : 0;
  for (int t = 0; t < spec.length; ++t) {
    for (int i = 0; i < spec.n_dims; ++i) {
      if (t > 0 && !rng.bernoulli(spec.p_stay)) state[i] ^= 1;
      seq.set(i, t, state[i]);
    }
  }
  return seq;
}

double markov_true_nll(const BinarySequence& seq, const MarkovSpec& spec) {
  spec.validate();
  if (seq.n_dims != spec.n_dims) throw ShapeError("markov_true_nll: dimension mismatch");
  const double log_half = std::log(0.5);
  const double log_stay = std::log(spec.p_stay);
  const double log_flip = std::log(1.0 - spec.p_stay);
  double nll = 0.0;
  if (seq.length > 0) nll -= spec.n_dims * log_half;
  for (int t = 1; t < seq.length; ++t) {
    for (int i = 0; i < seq.n_dims; ++i) {
      nll -= (seq.at(i, t) == seq.at(i, t - 1)) ? log_stay : log_flip;
    }
  }
  return nll;
}

std::vector<BinarySequence> chunk_sequence(const BinarySequence& seq, int chunk_len) {
  if (chunk_len < 1) throw ConfigError("chunk_len must be >= 1");
  std::vector<BinarySequence> chunks;
  for (int at = 0; at + chunk_len <= seq.length; at += chunk_len) {
    BinarySequence c(seq.n_dims, chunk_len);
    std::copy(seq.step(at), seq.step(at) + std::size_t(chunk_len) * seq.n_dims,
              c.values.begin());
    chunks.push_back(std::move(c));
  }
  return chunks;
}

void VideoSpec::validate() const {
  if (patch_size < 4) throw ConfigError("patch_size must be >= 4");
  if (n_frames < 2) throw ConfigError("n_frames must be >= 2");
  if (n_sprites < 1) throw ConfigError("n_sprites must be >= 1");
  if (frame_threshold < 0 || frame_threshold > 255)
    throw ConfigError("frame_threshold outside [0,255]");
  if (sprite_size < 1) throw ConfigError("sprite_size must be >= 1");
  if (sprite_size > patch_size) throw ConfigError("sprite larger than patch");
  if (!(speed_min > 0.0 && speed_max >= speed_min))
    throw ConfigError("bad sprite speed range");
}

double reflect_position(double start, double velocity, double t, double lo, double hi) {
  const double span = hi - lo;
  if (span <= 0.0) return lo;
  const double period = 2.0 * span;
  double x = std::fmod(start - lo + velocity * t, period);
  if (x < 0.0) x += period;
  return lo + (x > span ? period - x : x);
}

namespace {

// 7x7 stroke-dense glyphs, roughly digit-like in coverage; scaled by
// nearest-neighbour when sprite_size differs.
constexpr int kGlyphSide = 7;
constexpr std::uint8_t kGlyphs[6][49] = {
    // 0: ring
    {0, 1, 1, 1, 1, 1, 0,
     1, 1, 0, 0, 0, 1, 1,
     1, 0, 0, 0, 0, 0, 1,
     1, 0, 0, 0, 0, 0, 1,
     1, 0, 0, 0, 0, 0, 1,
     1, 1, 0, 0, 0, 1, 1,
     0, 1, 1, 1, 1, 1, 0},
    // 1: thick stroke with serif
    {0, 0, 1, 1, 0, 0, 0,
     0, 1, 1, 1, 0, 0, 0,
     1, 1, 1, 1, 0, 0, 0,
     0, 0, 1, 1, 0, 0, 0,
     0, 0, 1, 1, 0, 0, 0,
     0, 0, 1, 1, 0, 0, 0,
     1, 1, 1, 1, 1, 1, 0},
    // 2: s-curve
    {0, 1, 1, 1, 1, 1, 0,
     1, 1, 0, 0, 1, 1, 0,
     0, 0, 0, 1, 1, 0, 0,
     0, 0, 1, 1, 0, 0, 0,
     0, 1, 1, 0, 0, 0, 0,
     1, 1, 0, 0, 0, 1, 1,
     1, 1, 1, 1, 1, 1, 1},
    // 3: cross
    {0, 0, 1, 1, 1, 0, 0,
     0, 0, 1, 1, 1, 0, 0,
     1, 1, 1, 1, 1, 1, 1,
     1, 1, 1, 1, 1, 1, 1,
     1, 1, 1, 1, 1, 1, 1,
     0, 0, 1, 1, 1, 0, 0,
     0, 0, 1, 1, 1, 0, 0},
    // 4: corner block
    {1, 1, 1, 1, 0, 0, 0,
     1, 1, 1, 1, 0, 0, 0,
     1, 1, 1, 1, 0, 0, 0,
     1, 1, 1, 1, 1, 1, 1,
     0, 0, 0, 1, 1, 1, 1,
     0, 0, 0, 1, 1, 1, 1,
     0, 0, 0, 1, 1, 1, 1},
    // 5: diagonal bar
    {1, 1, 1, 0, 0, 0, 0,
     1, 1, 1, 1, 0, 0, 0,
     0, 1, 1, 1, 1, 0, 0,
     0, 0, 1, 1, 1, 1, 0,
     0, 0, 0, 1, 1, 1, 1,
     0, 0, 0, 0, 1, 1, 1,
     0, 0, 0, 0, 0, 1, 1},
};

std::vector<std::uint8_t> scaled_glyph(int glyph, int size) {
  std::vector<std::uint8_t> g(std::size_t(size) * size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const int sr = r * kGlyphSide / size;
      const int sc = c * kGlyphSide / size;
      g[std::size_t(r) * size + c] = kGlyphs[glyph][sr * kGlyphSide + sc];
    }
  }
  return g;
}

}  // namespace

FrameSequence bouncing_sprites_generate(const VideoSpec& spec) {
  spec.validate();
  Rng rng(spec.rng_seed);
  const double limit = double(spec.patch_size - spec.sprite_size);

  struct Sprite {
    std::vector<std::uint8_t> shape;
    double x0, y0, vx, vy;
  };
  std::vector<Sprite> sprites;
  for (int s = 0; s < spec.n_sprites; ++s) {
    Sprite sp;
    sp.shape = scaled_glyph(int(rng.below(6)), spec.sprite_size);
    sp.x0 = rng.uniform() * limit;
    sp.y0 = rng.uniform() * limit;
    const double angle = rng.uniform() * 2.0 * 3.141592653589793238462643383279502884;
    const double speed = spec.speed_min + rng.uniform() * (spec.speed_max - spec.speed_min);
    sp.vx = speed * std::cos(angle);
    sp.vy = speed * std::sin(angle);
    sprites.push_back(std::move(sp));
  }

  FrameSequence video;
  video.height = spec.patch_size;
  video.width = spec.patch_size;
  video.source = "synthetic";
  video.frames.reserve(spec.n_frames);
  for (int t = 0; t < spec.n_frames; ++t) {
    std::vector<std::uint8_t> frame(std::size_t(spec.patch_size) * spec.patch_size, 0);
    for (const Sprite& sp : sprites) {
      const int px = int(std::floor(reflect_position(sp.x0, sp.vx, t, 0.0, limit) + 0.5));
      const int py = int(std::floor(reflect_position(sp.y0, sp.vy, t, 0.0, limit) + 0.5));
      for (int r = 0; r < spec.sprite_size; ++r) {
        for (int c = 0; c < spec.sprite_size; ++c) {
          if (!sp.shape[std::size_t(r) * spec.sprite_size + c]) continue;
          std::uint8_t& px_out = frame[std::size_t(py + r) * spec.patch_size + (px + c)];
          px_out = std::max<std::uint8_t>(px_out, 255);
        }
      }
    }
    video.frames.push_back(std::move(frame));
  }
  return video;
}

std::vector<std::uint8_t> downsample_frame(const std::vector<std::uint8_t>& frame, int h,
                                           int w, int factor) {
  if (factor < 1) throw ConfigError("downsample factor must be >= 1");
  if (h % factor != 0 || w % factor != 0)
    throw ShapeError("downsample_frame: dimensions not divisible by factor");
  if (int(frame.size()) != h * w) throw ShapeError("downsample_frame: size mismatch");
  const int oh = h / factor, ow = w / factor;
  std::vector<std::uint8_t> out(std::size_t(oh) * ow);
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      long sum = 0;
      for (int dr = 0; dr < factor; ++dr) {
        for (int dc = 0; dc < factor; ++dc) {
          sum += frame[std::size_t(r * factor + dr) * w + (c * factor + dc)];
        }
      }
      const double mean = double(sum) / double(factor * factor);
      out[std::size_t(r) * ow + c] = std::uint8_t(std::floor(mean + 0.5));
    }
  }
  return out;
}

FrameSequence downsample(const FrameSequence& video, int factor) {
  FrameSequence out;
  out.height = video.height / factor;
  out.width = video.width / factor;
  out.source = video.source;
  out.frames.reserve(video.frames.size());
  for (const auto& f : video.frames) {
    out.frames.push_back(downsample_frame(f, video.height, video.width, factor));
  }
  return out;
}

std::vector<std::uint8_t> binarize_frame(const std::vector<std::uint8_t>& frame,
                                         int threshold) {
  std::vector<std::uint8_t> out(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) out[i] = frame[i] > threshold ? 1 : 0;
  return out;
}

FrameSequence binarize(const FrameSequence& video, int threshold) {
  FrameSequence out;
  out.height = video.height;
  out.width = video.width;
  out.source = video.source;
  out.frames.reserve(video.frames.size());
  for (const auto& f : video.frames) out.frames.push_back(binarize_frame(f, threshold));
  return out;
}

BinarySequence frames_to_sequence(const FrameSequence& binary_frames, int from_frame,
                                  int count) {
  const int n = binary_frames.height * binary_frames.width;
  if (from_frame < 0 || from_frame + count > int(binary_frames.frames.size()))
    throw ShapeError("frames_to_sequence: frame range out of bounds");
  BinarySequence seq(n, count);
  for (int t = 0; t < count; ++t) {
    const auto& f = binary_frames.frames[from_frame + t];
    if (int(f.size()) != n) throw ShapeError("frames_to_sequence: inconsistent frame size");
    for (int i = 0; i < n; ++i) {
      if (f[i] > 1) throw ShapeError("frames_to_sequence: frame not binarized");
      seq.set(i, t, f[i]);
    }
  }
  return seq;
}

BinarySequence video_to_sequence(const FrameSequence& binary_frames, int n_input_frames) {
  return frames_to_sequence(binary_frames, 0, n_input_frames);
}

namespace {
constexpr char kVideoMagic[4] = {'D', 'Y', 'V', 'F'};
}

void export_frames(const std::filesystem::path& path,
                   const std::vector<FrameSequence>& videos) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write frames file: " + path.string());
  const std::uint32_t n_videos = std::uint32_t(videos.size());
  std::uint32_t n_frames = 0, h = 0, w = 0;
  if (!videos.empty()) {
    n_frames = std::uint32_t(videos[0].frames.size());
    h = std::uint32_t(videos[0].height);
    w = std::uint32_t(videos[0].width);
  }
  for (const auto& v : videos) {
    if (std::uint32_t(v.frames.size()) != n_frames || std::uint32_t(v.height) != h ||
        std::uint32_t(v.width) != w) {
      throw ShapeError("export_frames: videos must share frame count and dimensions");
    }
  }
  os.write(kVideoMagic, 4);
  os.write(reinterpret_cast<const char*>(&n_videos), 4);
  os.write(reinterpret_cast<const char*>(&n_frames), 4);
  os.write(reinterpret_cast<const char*>(&h), 4);
  os.write(reinterpret_cast<const char*>(&w), 4);
  for (const auto& v : videos) {
    for (const auto& f : v.frames) {
      os.write(reinterpret_cast<const char*>(f.data()), std::streamsize(f.size()));
    }
  }
  if (!os) throw Error("frames write failed: " + path.string());
}

std::vector<FrameSequence> ingest_frames(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open frames file: " + path.string());
  std::uint64_t offset = 0;
  auto need = [&](void* dst, std::size_t n, const char* what) {
    is.read(static_cast<char*>(dst), std::streamsize(n));
    if (std::size_t(is.gcount()) != n) {
      throw ParseError(std::string("frames file: truncated ") + what + " at byte " +
                       std::to_string(offset + std::size_t(std::max<std::streamsize>(
                                                   is.gcount(), 0))));
    }
    offset += n;
  };
  char magic[4];
  need(magic, 4, "magic");
  if (std::memcmp(magic, kVideoMagic, 4) != 0) {
    throw ParseError("frames file: bad magic at byte 0");
  }
  std::uint32_t n_videos, n_frames, h, w;
  need(&n_videos, 4, "header");
  need(&n_frames, 4, "header");
  need(&h, 4, "header");
  need(&w, 4, "header");
  if (h == 0 || w == 0 || n_frames == 0) {
    throw ParseError("frames file: zero dimension in header at byte 4");
  }
  std::vector<FrameSequence> videos;
  videos.reserve(n_videos);
  for (std::uint32_t v = 0; v < n_videos; ++v) {
    FrameSequence fs;
    fs.height = int(h);
    fs.width = int(w);
    fs.source = path.string();
    fs.frames.reserve(n_frames);
    for (std::uint32_t f = 0; f < n_frames; ++f) {
      std::vector<std::uint8_t> frame(std::size_t(h) * w);
      need(frame.data(), frame.size(), "frame payload");
      fs.frames.push_back(std::move(frame));
    }
    videos.push_back(std::move(fs));
  }
  return videos;
}

void export_sequence_csv(const std::filesystem::path& path, const BinarySequence& seq) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write sequence csv: " + path.string());
  for (int i = 0; i < seq.n_dims; ++i) {
    for (int t = 0; t < seq.length; ++t) {
      os << int(seq.at(i, t));
      if (t + 1 < seq.length) os << ',';
    }
    os << '\n';
  }
}

}  // namespace dybm
