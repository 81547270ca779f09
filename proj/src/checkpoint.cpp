#include "net3/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "net3/error.hpp"

namespace net3 {

namespace {

constexpr char kMagic[8] = {'N', 'E', 'T', '3', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <class T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    uint(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  const std::vector<char>& buffer() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(std::vector<char> data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}

  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  template <class T>
  T uint() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::string str() {
    const auto n = uint<std::uint32_t>();
    need(n);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw ValidationError(source_ + ": truncated checkpoint");
  }

  std::vector<char> data_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

const std::string& Checkpoint::get(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  throw ValidationError("checkpoint has no '" + key + "' entry");
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.uint(kVersion);
  w.uint(static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    w.str(k);
    w.str(v);
  }
  const std::size_t series = ckpt.stats.mean.size();
  if (ckpt.stats.stddev.size() != series || ckpt.stats.constant.size() != series) {
    throw ShapeError("write_checkpoint: inconsistent normalization statistics");
  }
  w.uint(static_cast<std::uint64_t>(series));
  for (double v : ckpt.stats.mean) w.f64(v);
  for (double v : ckpt.stats.stddev) w.f64(v);
  for (std::uint8_t v : ckpt.stats.constant) w.uint(v);
  w.uint(static_cast<std::uint32_t>(ckpt.blocks.size()));
  for (const auto& [name, m] : ckpt.blocks) {
    w.str(name);
    w.uint(std::uint32_t{2});
    w.uint(static_cast<std::uint64_t>(m.rows()));
    w.uint(static_cast<std::uint64_t>(m.cols()));
    for (double v : m.data()) w.f64(v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write checkpoint " + path.string());
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw ValidationError("write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}), path.string());
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw ValidationError(path.string() + ": not a checkpoint");
  const auto version = r.uint<std::uint32_t>();
  if (version != kVersion) {
    throw ValidationError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto entries = r.uint<std::uint32_t>();
  for (std::uint32_t i = 0; i < entries; ++i) {
    std::string k = r.str();
    std::string v = r.str();
    ckpt.meta.emplace_back(std::move(k), std::move(v));
  }
  const auto series = r.uint<std::uint64_t>();
  ckpt.stats.mean.resize(series);
  ckpt.stats.stddev.resize(series);
  ckpt.stats.constant.resize(series);
  for (auto& v : ckpt.stats.mean) v = r.f64();
  for (auto& v : ckpt.stats.stddev) v = r.f64();
  for (auto& v : ckpt.stats.constant) v = r.uint<std::uint8_t>();
  const auto blocks = r.uint<std::uint32_t>();
  for (std::uint32_t b = 0; b < blocks; ++b) {
    std::string name = r.str();
    const auto order = r.uint<std::uint32_t>();
    if (order != 2) throw ValidationError(path.string() + ": block " + name + " is not a matrix");
    const auto rows = r.uint<std::uint64_t>();
    const auto cols = r.uint<std::uint64_t>();
    Matrix m(rows, cols);
    for (double& v : m.data()) v = r.f64();
    ckpt.blocks.emplace_back(std::move(name), std::move(m));
  }
  if (!r.done()) throw ValidationError(path.string() + ": trailing bytes after checkpoint");
  return ckpt;
}

std::vector<std::pair<std::string, Matrix>> collect_blocks(const Net3Params& params) {
  std::vector<std::pair<std::string, Matrix>> out;
  for_each_block(params, [&out](const std::string& name, const Matrix& m) { out.emplace_back(name, m); });
  return out;
}

void assign_blocks(Net3Params& params, const std::vector<std::pair<std::string, Matrix>>& blocks) {
  std::map<std::string, const Matrix*> by_name;
  for (const auto& [name, m] : blocks) by_name[name] = &m;
  std::size_t used = 0;
  for_each_block(params, [&](const std::string& name, Matrix& m) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw ValidationError("checkpoint is missing parameter block " + name);
    if (it->second->rows() != m.rows() || it->second->cols() != m.cols()) {
      throw ValidationError("checkpoint block " + name + " is " + std::to_string(it->second->rows()) + "x" +
                            std::to_string(it->second->cols()) + ", model expects " + std::to_string(m.rows()) +
                            "x" + std::to_string(m.cols()));
    }
    m = *it->second;
    ++used;
  });
  if (used != by_name.size()) throw ValidationError("checkpoint has parameter blocks the model does not use");
}

}  // namespace net3
