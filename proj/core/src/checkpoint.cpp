#include "fzoo/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fzoo {
namespace {

constexpr char kMagic[4] = {'F', 'Z', 'C', 'K'};

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) { append(v, 4); }
  void u64(std::uint64_t v) { append(v, 8); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void doubles(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  std::vector<std::uint8_t> finish() {
    const std::uint64_t hash = fnv1a(bytes_.data(), bytes_.size());
    u64(hash);
    return std::move(bytes_);
  }

 private:
  void append(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  std::uint64_t u64() { return take(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_),
                  static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return s;
  }
  std::vector<double> doubles() {
    const std::uint64_t n = u64();
    // Guard the multiply: a corrupt count near 2^64/8 must not wrap past need().
    if (n > (bytes_.size() - pos_) / 8)
      throw std::runtime_error("truncated checkpoint");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = f64();
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::uint64_t take(int n) {
    need(static_cast<std::uint64_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_)
      throw std::runtime_error("truncated checkpoint");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Checkpoint make_checkpoint(const std::string& optimizer_name,
                           const OptimizerConfig& config,
                           const OptimizerState& state) {
  Checkpoint ckpt;
  ckpt.optimizer_name = optimizer_name;
  ckpt.kind = config.kind;
  ckpt.run_seed = config.run_seed;
  ckpt.eta = config.eta;
  ckpt.epsilon = config.epsilon;
  ckpt.n_directions = config.n_directions;
  ckpt.batch_size = config.batch_size;
  ckpt.step = state.step;
  ckpt.forward_passes = state.forward_passes;
  ckpt.degenerate_sigma_batches = state.degenerate_sigma_batches;
  ckpt.shapes = state.theta.shapes();
  ckpt.theta = state.theta.values();
  ckpt.previous_losses = state.previous_losses;
  ckpt.adam_m = state.adam.m;
  ckpt.adam_v = state.adam.v;
  return ckpt;
}

OptimizerState restore_state(const Checkpoint& ckpt) {
  OptimizerState state{ParamVector(ckpt.theta, ckpt.shapes)};
  state.step = ckpt.step;
  state.forward_passes = ckpt.forward_passes;
  state.degenerate_sigma_batches = ckpt.degenerate_sigma_batches;
  state.previous_losses = ckpt.previous_losses;
  state.adam.m = ckpt.adam_m;
  state.adam.v = ckpt.adam_v;
  return state;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(ckpt.version);
  w.u8(static_cast<std::uint8_t>(ckpt.kind));
  w.u64(ckpt.run_seed);
  w.f64(ckpt.eta);
  w.f64(ckpt.epsilon);
  w.i32(ckpt.n_directions);
  w.u64(ckpt.batch_size);
  w.i64(ckpt.step);
  w.i64(ckpt.forward_passes);
  w.i64(ckpt.degenerate_sigma_batches);
  w.str(ckpt.optimizer_name);
  w.u64(ckpt.shapes.size());
  for (const auto& shape : ckpt.shapes) {
    w.str(shape.name);
    w.u64(shape.rows);
    w.u64(shape.cols);
  }
  w.doubles(ckpt.theta);
  w.doubles(ckpt.previous_losses);
  w.doubles(ckpt.adam_m);
  w.doubles(ckpt.adam_v);
  return w.finish();
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw std::runtime_error("not a checkpoint file (bad magic)");
  Reader r(bytes);
  for (int i = 0; i < 4; ++i) r.u8();

  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(ckpt.version) + " (expected " +
                             std::to_string(kCheckpointVersion) + ")");
  const std::uint8_t kind = r.u8();
  if (kind > static_cast<std::uint8_t>(OptimizerKind::kAdam))
    throw std::runtime_error("corrupt checkpoint: unknown optimizer kind " +
                             std::to_string(kind));
  ckpt.kind = static_cast<OptimizerKind>(kind);
  ckpt.run_seed = r.u64();
  ckpt.eta = r.f64();
  ckpt.epsilon = r.f64();
  ckpt.n_directions = r.i32();
  ckpt.batch_size = r.u64();
  ckpt.step = r.i64();
  ckpt.forward_passes = r.i64();
  ckpt.degenerate_sigma_batches = r.i64();
  ckpt.optimizer_name = r.str();
  const std::uint64_t n_shapes = r.u64();
  for (std::uint64_t i = 0; i < n_shapes; ++i) {
    LayerShape shape;
    shape.name = r.str();
    shape.rows = static_cast<std::size_t>(r.u64());
    shape.cols = static_cast<std::size_t>(r.u64());
    ckpt.shapes.push_back(std::move(shape));
  }
  ckpt.theta = r.doubles();
  ckpt.previous_losses = r.doubles();
  ckpt.adam_m = r.doubles();
  ckpt.adam_v = r.doubles();

  const std::size_t body = r.pos();
  const std::uint64_t stored = r.u64();
  if (r.pos() != bytes.size())
    throw std::runtime_error("corrupt checkpoint: trailing bytes");
  if (stored != fnv1a(bytes.data(), body))
    throw std::runtime_error("corrupt checkpoint: checksum mismatch");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::vector<std::uint8_t> bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

nlohmann::json checkpoint_debug_json(const Checkpoint& ckpt) {
  nlohmann::json j;
  j["version"] = ckpt.version;
  j["optimizer_name"] = ckpt.optimizer_name;
  j["kind"] = optimizer_kind_name(ckpt.kind);
  j["run_seed"] = ckpt.run_seed;
  j["eta"] = ckpt.eta;
  j["epsilon"] = ckpt.epsilon;
  j["n_directions"] = ckpt.n_directions;
  j["batch_size"] = ckpt.batch_size;
  j["step"] = ckpt.step;
  j["forward_passes"] = ckpt.forward_passes;
  j["degenerate_sigma_batches"] = ckpt.degenerate_sigma_batches;
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& shape : ckpt.shapes)
    shapes.push_back({{"name", shape.name}, {"rows", shape.rows}, {"cols", shape.cols}});
  j["shapes"] = shapes;
  j["dim"] = ckpt.theta.size();
  j["theta"] = ckpt.theta;
  j["previous_losses"] = ckpt.previous_losses;
  j["adam_m"] = ckpt.adam_m;
  j["adam_v"] = ckpt.adam_v;
  return j;
}

}  // namespace fzoo
