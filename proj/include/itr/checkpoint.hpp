#pragma once

#include "itr/tape.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Binary tensor checkpoints:
//   magic (4 bytes) | version u32 | count u32 |
//   per tensor: name (u32 length + UTF-8) | dtype u8 | rank u32 | extents u64[rank] | data
// All integers and f32 data little-endian; data is column-major.
namespace itr {

inline constexpr std::string_view kModelMagic = "ITR1";
inline constexpr std::string_view kRankerMagic = "IRK1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor<float> value;
};

void write_checkpoint(const std::filesystem::path& path, std::string_view magic,
                      const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path, std::string_view magic);

// Whole-parameter-list helpers. Loading requires the same names, order and
// shapes.
void save_parameters(const std::filesystem::path& path, std::string_view magic,
                     const std::vector<Parameter<float>*>& params);
void load_parameters(const std::filesystem::path& path, std::string_view magic,
                     const std::vector<Parameter<float>*>& params);

}  // namespace itr
