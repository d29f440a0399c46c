#include "dybm/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "dybm/errors.hpp"

namespace dybm {
namespace {

constexpr char kMagic[8] = {'D', 'Y', 'B', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

// Little-endian writer; this codebase targets little-endian hosts and the
// format is defined little-endian.
struct Writer {
  std::ofstream os;
  explicit Writer(const std::filesystem::path& path)
      : os(path, std::ios::binary | std::ios::trunc) {
    if (!os) throw Error("cannot open for writing: " + path.string());
  }
  void bytes(const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), std::streamsize(n));
  }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void i32(std::int32_t v) { bytes(&v, 4); }
  void f64(double v) { bytes(&v, 8); }
  void f64_array(const double* p, std::size_t n) { bytes(p, n * 8); }
  void i32_array(const std::vector<int>& v) {
    for (int x : v) i32(x);
  }
  void u8_array(const std::vector<std::uint8_t>& v) { bytes(v.data(), v.size()); }
};

struct Reader {
  std::ifstream is;
  std::uint64_t offset = 0;
  explicit Reader(const std::filesystem::path& path) : is(path, std::ios::binary) {
    if (!is) throw Error("cannot open for reading: " + path.string());
  }
  void bytes(void* p, std::size_t n) {
    is.read(static_cast<char*>(p), std::streamsize(n));
    if (std::size_t(is.gcount()) != n) {
      throw ParseError("checkpoint truncated at byte " + std::to_string(offset));
    }
    offset += n;
  }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  std::int32_t i32() { std::int32_t v; bytes(&v, 4); return v; }
  double f64() { double v; bytes(&v, 8); return v; }
  void f64_array(double* p, std::size_t n) { bytes(p, n * 8); }
  void i32_array(std::vector<int>& v, std::size_t n) {
    v.resize(n);
    for (auto& x : v) x = i32();
  }
  void u8_array(std::vector<std::uint8_t>& v, std::size_t n) {
    v.resize(n);
    bytes(v.data(), n);
  }
};

}  // namespace

Checkpoint snapshot_model(const DybmModel& model, RegMethod method, double reg_p) {
  Checkpoint c;
  c.valid = true;
  c.model_config = model.config;
  c.method = method;
  c.reg_p = reg_p;
  c.params = model.params;
  c.delays = model.queues.delay;
  c.original_delays = model.original_delays;
  c.keep.resize(c.delays.size());
  for (std::size_t e = 0; e < c.delays.size(); ++e) {
    c.keep[e] = (c.delays[e] == c.original_delays[e]) ? 1 : 0;
  }
  return c;
}

DybmModel model_from_checkpoint(const Checkpoint& ckpt) {
  if (!ckpt.valid) throw Error("model_from_checkpoint: invalid checkpoint");
  DybmModel m = init_model(ckpt.model_config);
  m.params = ckpt.params;
  m.original_delays = ckpt.original_delays;
  const int n = ckpt.model_config.n_units;
  for (int pair = 0; pair < n * n; ++pair) {
    m.queues.set_delay(pair, ckpt.delays[pair]);
  }
  reset_dynamic_state(m);
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (!ckpt.valid) throw Error("save_checkpoint: invalid checkpoint");
  Writer w(path);
  w.bytes(kMagic, 8);
  w.u32(kVersion);
  const ModelConfig& mc = ckpt.model_config;
  w.i32(mc.n_units);
  w.i32(mc.n_synaptic_traces);
  w.i32(mc.n_neural_traces);
  w.i32(mc.delay_min);
  w.i32(mc.delay_max);
  w.u64(mc.rng_seed);
  w.f64_array(mc.synaptic_decays.data(), mc.synaptic_decays.size());
  w.f64_array(mc.neural_decays.data(), mc.neural_decays.size());
  w.u32(std::uint32_t(ckpt.method));
  w.f64(ckpt.reg_p);
  w.f64(ckpt.epsilon);
  w.f64(ckpt.tnl);
  w.f64(ckpt.onl);
  w.u64(ckpt.step);
  w.f64_array(ckpt.params.data.data(), ckpt.params.data.size());
  w.i32_array(ckpt.delays);
  w.i32_array(ckpt.original_delays);
  w.u8_array(ckpt.keep);
  if (!w.os) throw Error("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw ParseError("not a checkpoint file (bad magic at byte 0): " + path.string());
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.valid = true;
  ModelConfig& mc = c.model_config;
  mc.n_units = r.i32();
  mc.n_synaptic_traces = r.i32();
  mc.n_neural_traces = r.i32();
  mc.delay_min = r.i32();
  mc.delay_max = r.i32();
  mc.rng_seed = r.u64();
  mc.synaptic_decays.resize(mc.n_synaptic_traces);
  r.f64_array(mc.synaptic_decays.data(), mc.synaptic_decays.size());
  mc.neural_decays.resize(mc.n_neural_traces);
  r.f64_array(mc.neural_decays.data(), mc.neural_decays.size());
  mc.validate();
  c.method = RegMethod(r.u32());
  c.reg_p = r.f64();
  c.epsilon = r.f64();
  c.tnl = r.f64();
  c.onl = r.f64();
  c.step = r.u64();
  const int n = mc.n_units;
  c.params.resize(n, mc.n_synaptic_traces, mc.n_neural_traces);
  r.f64_array(c.params.data.data(), c.params.data.size());
  const std::size_t pairs = std::size_t(n) * n;
  r.i32_array(c.delays, pairs);
  r.i32_array(c.original_delays, pairs);
  r.u8_array(c.keep, pairs);
  return c;
}

}  // namespace dybm
