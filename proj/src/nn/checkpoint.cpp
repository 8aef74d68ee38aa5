#include <bit>
#include <cstring>
#include <fstream>

#include "cdgnn/nn.hpp"

namespace cdgnn::nn {
namespace {

constexpr char kMagic[8] = {'C', 'D', 'G', 'N', 'N', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

template <class U>
void put(std::ostream& out, U v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class U>
U get(std::istream& in, const std::string& path) {
  U v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw std::runtime_error("checkpoint " + path + ": truncated");
  return v;
}

std::string get_string(std::istream& in, std::size_t len, const std::string& path) {
  std::string s(len, '\0');
  if (len && !in.read(s.data(), static_cast<std::streamsize>(len)))
    throw std::runtime_error("checkpoint " + path + ": truncated");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckp.header.size()));
  out.write(ckp.header.data(), static_cast<std::streamsize>(ckp.header.size()));
  const auto& entries = ckp.params.entries();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<std::uint64_t>(out, e.value.rows());
    put<std::uint64_t>(out, e.value.cols());
    out.write(reinterpret_cast<const char*>(e.value.data()),
              static_cast<std::streamsize>(e.value.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint " + path + ": bad magic");
  if (const auto v = get<std::uint32_t>(in, path); v != kVersion)
    throw std::runtime_error("checkpoint " + path + ": unsupported version " + std::to_string(v));
  Checkpoint ckp;
  ckp.header = get_string(in, get<std::uint32_t>(in, path), path);
  const auto count = get<std::uint32_t>(in, path);
  for (std::uint32_t a = 0; a < count; ++a) {
    const std::string name = get_string(in, get<std::uint32_t>(in, path), path);
    const auto rows = get<std::uint64_t>(in, path);
    const auto cols = get<std::uint64_t>(in, path);
    if (rows * cols > (std::uint64_t{1} << 32))
      throw std::runtime_error("checkpoint " + path + ": implausible array size for " + name);
    Matrix<float>& m = ckp.params.add(name, rows, cols);
    if (m.size() && !in.read(reinterpret_cast<char*>(m.data()),
                             static_cast<std::streamsize>(m.size() * sizeof(float))))
      throw std::runtime_error("checkpoint " + path + ": truncated");
  }
  return ckp;
}

}  // namespace cdgnn::nn
