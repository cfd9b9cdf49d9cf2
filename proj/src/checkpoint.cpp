// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "mmwnoma/neural.hpp"

namespace mmwnoma::nn {

namespace {

constexpr char kMagic[8] = {'M', 'W', 'N', 'O', 'M', 'A', 'C', 'K'};
constexpr std::uint8_t kLittleEndian = 1;

class Writer {
 public:
  template <class U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const char* p, std::size_t n) { buf_.append(p, n); }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}

  template <class U>
  U uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw std::runtime_error("checkpoint: truncated data");
  }
  const std::string& buf_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const std::vector<NamedNetwork>& networks) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.uint<std::uint32_t>(kCheckpointVersion);
  w.uint<std::uint8_t>(kLittleEndian);
  for (int i = 0; i < 3; ++i) w.uint<std::uint8_t>(0);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(networks.size()));
  for (const auto& net : networks) {
    net.params.validate();
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(net.name.size()));
    w.bytes(net.name.data(), net.name.size());
    w.uint<std::uint64_t>(net.params.version);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(net.params.layers.size()));
    for (const auto& l : net.params.layers) {
      w.uint<std::uint32_t>(static_cast<std::uint32_t>(l.weight.cols()));
      w.uint<std::uint32_t>(static_cast<std::uint32_t>(l.weight.rows()));
      w.uint<std::uint8_t>(static_cast<std::uint8_t>(l.activation));
    }
    for (const auto& l : net.params.layers) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.f64(l.weight(r, c));
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) w.f64(l.bias[r]);
    }
  }
  return w.take();
}

std::vector<NamedNetwork> decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic))
    throw std::runtime_error("checkpoint: bad magic");
  const auto version = r.uint<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
  if (r.uint<std::uint8_t>() != kLittleEndian)
    throw std::runtime_error("checkpoint: unsupported byte order");
  r.bytes(3);

  const auto count = r.uint<std::uint32_t>();
  std::vector<NamedNetwork> out;
  for (std::uint32_t n = 0; n < count; ++n) {
    NamedNetwork net;
    net.name = r.bytes(r.uint<std::uint32_t>());
    net.params.version = r.uint<std::uint64_t>();
    const auto layers = r.uint<std::uint32_t>();
    for (std::uint32_t i = 0; i < layers; ++i) {
      const auto in = r.uint<std::uint32_t>();
      const auto outw = r.uint<std::uint32_t>();
      const auto act = r.uint<std::uint8_t>();
      if (act > static_cast<std::uint8_t>(Activation::tanh))
        throw std::runtime_error("checkpoint: unknown activation tag");
      DenseLayer l;
      l.activation = static_cast<Activation>(act);
      l.weight.resize(outw, in);
      l.bias.resize(outw);
      net.params.layers.push_back(std::move(l));
    }
    for (auto& l : net.params.layers) {
      for (Eigen::Index row = 0; row < l.weight.rows(); ++row)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(row, c) = r.f64();
      for (Eigen::Index row = 0; row < l.bias.size(); ++row) l.bias[row] = r.f64();
    }
    try {
      net.params.validate();
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(std::string("checkpoint: ") + e.what());
    }
    out.push_back(std::move(net));
  }
  if (!r.done()) throw std::runtime_error("checkpoint: trailing bytes");
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedNetwork>& networks) {
  const std::string bytes = encode_checkpoint(networks);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open '" + path.string() + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("checkpoint: write failed for '" + path.string() + "'");
}

std::vector<NamedNetwork> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace mmwnoma::nn
