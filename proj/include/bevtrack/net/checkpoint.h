#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bevtrack/net/optim.h"

namespace bevtrack::net {

inline constexpr char kCheckpointMagic[4] = {'B', 'S', 'T', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Parsed "BSTK" container: magic, u32 version, u32-length text metadata
// ("key=value" lines), then little-endian f32 arrays in declaration order.
struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::vector<std::string> names;
  std::vector<std::vector<int>> shapes;
  std::vector<std::vector<float>> values;
};

template <typename T>
std::string encode_checkpoint(const ParamStore<T>& store,
                              const std::map<std::string, std::string>& metadata);

Checkpoint decode_checkpoint(const std::string& bytes);

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamStore<T>& store,
                     const std::map<std::string, std::string>& metadata);

Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies checkpoint values into `store`; names and shapes must match exactly.
template <typename T>
void apply_checkpoint(const Checkpoint& ckpt, ParamStore<T>& store);

}  // namespace bevtrack::net
