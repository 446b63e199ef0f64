#include "itr/checkpoint.hpp"

#include "itr/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

namespace itr {
namespace {

constexpr std::uint8_t kDtypeF32 = 1;

template <typename T>
void put(std::ostream& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& where) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw ParseError(where + ": truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, std::string_view magic,
                      const std::vector<NamedTensor>& tensors) {
  if (magic.size() != 4) throw ContractError("checkpoint magic must be 4 bytes");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out.write(magic.data(), 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint8_t>(out, kDtypeF32);
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value.cols()));
    for (Index i = 0; i < t.value.size(); ++i) put<float>(out, t.value.data()[i]);
  }
  if (!out) throw ParseError("failed writing " + path.string());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path, std::string_view magic) {
  std::ifstream in(path, std::ios::binary);
  const std::string where = path.string();
  if (!in) throw ParseError("cannot read " + where);
  char head[4];
  if (!in.read(head, 4) || std::string_view(head, 4) != magic) {
    throw ParseError(where + ": bad magic, expected '" + std::string(magic) + "'");
  }
  const auto version = get<std::uint32_t>(in, where);
  if (version != kCheckpointVersion) throw ParseError(where + ": unsupported version " + std::to_string(version));
  const auto count = get<std::uint32_t>(in, where);
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto len = get<std::uint32_t>(in, where);
    t.name.resize(len);
    if (!in.read(t.name.data(), len)) throw ParseError(where + ": truncated checkpoint");
    const auto dtype = get<std::uint8_t>(in, where);
    if (dtype != kDtypeF32) throw ParseError(where + ": tensor " + t.name + " has unknown dtype");
    const auto rank = get<std::uint32_t>(in, where);
    if (rank == 0 || rank > 2) throw ParseError(where + ": tensor " + t.name + " has unsupported rank");
    const auto rows = get<std::uint64_t>(in, where);
    const auto cols = rank == 2 ? get<std::uint64_t>(in, where) : 1;
    t.value.resize(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index k = 0; k < t.value.size(); ++k) t.value.data()[k] = get<float>(in, where);
    out.push_back(std::move(t));
  }
  return out;
}

void save_parameters(const std::filesystem::path& path, std::string_view magic,
                     const std::vector<Parameter<float>*>& params) {
  std::vector<NamedTensor> tensors;
  tensors.reserve(params.size());
  for (const auto* p : params) tensors.push_back({p->name, p->value});
  write_checkpoint(path, magic, tensors);
}

void load_parameters(const std::filesystem::path& path, std::string_view magic,
                     const std::vector<Parameter<float>*>& params) {
  auto tensors = read_checkpoint(path, magic);
  if (tensors.size() != params.size()) {
    throw ConfigError(path.string() + ": checkpoint holds " + std::to_string(tensors.size()) +
                      " tensors, model expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<float>& p = *params[i];
    const NamedTensor& t = tensors[i];
    if (t.name != p.name) {
      throw ConfigError(path.string() + ": tensor " + std::to_string(i) + " is '" + t.name + "', expected '" +
                        p.name + "'");
    }
    if (t.value.rows() != p.value.rows() || t.value.cols() != p.value.cols()) {
      throw ConfigError(path.string() + ": tensor '" + p.name + "' has shape " + shape_of(t.value) +
                        ", model expects " + shape_of(p.value));
    }
    p.value = t.value;
    p.zero_grad();
  }
}

}  // namespace itr
