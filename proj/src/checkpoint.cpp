#include <stdexcept>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "m2dqn/errors.hpp"
#include "m2dqn/qnet.hpp"

namespace m2dqn {

namespace {

constexpr char kMagic[8] = {'M', '2', 'D', 'Q', 'N', 'N', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kEndianTag = 0x01020304u;

template <typename T>
void write_raw(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T byteswap(T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

class Reader {
 public:
  Reader(std::ifstream& in, std::string path) : in_(in), path_(std::move(path)) {}

  template <typename T>
  T read() {
    T value;
    if (!in_.read(reinterpret_cast<char*>(&value), sizeof(T))) {
      throw std::runtime_error("checkpoint " + path_ + ": truncated file");
    }
    return swap_ ? byteswap(value) : value;
  }

  void set_swap(bool swap) { swap_ = swap; }

 private:
  std::ifstream& in_;
  std::string path_;
  bool swap_ = false;
};

}  // namespace

void save_checkpoint(const QNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_raw(out, kVersion);
  write_raw(out, kEndianTag);
  write_raw(out, static_cast<std::uint32_t>(net.layer_sizes().size()));
  for (int n : net.layer_sizes()) write_raw(out, static_cast<std::uint64_t>(n));
  write_raw(out, static_cast<std::uint64_t>(net.num_parameters()));
  const FlatVector& params = net.flatten();
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

QNetwork load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  Reader reader(in, path.string());

  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint " + path.string() + ": bad magic");
  }
  const auto version_raw = reader.read<std::uint32_t>();
  const auto tag = reader.read<std::uint32_t>();
  if (tag == byteswap(kEndianTag)) {
    reader.set_swap(true);
  } else if (tag != kEndianTag) {
    throw std::runtime_error("checkpoint " + path.string() + ": unrecognised endianness tag");
  }
  const std::uint32_t version = tag == kEndianTag ? version_raw : byteswap(version_raw);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint " + path.string() + ": unsupported version " + std::to_string(version));
  }

  const auto n_sizes = reader.read<std::uint32_t>();
  if (n_sizes < 2 || n_sizes > 64) throw std::runtime_error("checkpoint " + path.string() + ": bad layer count");
  std::vector<int> sizes;
  for (std::uint32_t i = 0; i < n_sizes; ++i) {
    const auto n = reader.read<std::uint64_t>();
    if (n == 0 || n > (1u << 24)) throw std::runtime_error("checkpoint " + path.string() + ": bad layer size");
    sizes.push_back(static_cast<int>(n));
  }
  QNetwork net(sizes);
  const auto p = reader.read<std::uint64_t>();
  if (p != net.num_parameters()) {
    throw std::runtime_error("checkpoint " + path.string() + ": parameter count does not match layer sizes");
  }
  FlatVector params(static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < params.size(); ++i) params[i] = reader.read<double>();
  if (in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("checkpoint " + path.string() + ": trailing bytes");
  }
  net.unflatten(params);
  return net;
}

}  // namespace m2dqn
