#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "bevtrack/net/checkpoint.h"
#include "bevtrack/net/optim.h"
#include "bevtrack/rpn2d.h"
#include "bevtrack/sim3d.h"

namespace bevtrack {

struct NetworkConfig {
  RpnConfig rpn;
  ShapeNetConfig shape;
  std::uint64_t init_seed = 1;
};

// Both Siamese networks over one parameter store. Parameters are declared in
// a fixed order (backbone, RPN heads, shape encoder, decoder), which is also
// the checkpoint order.
template <typename T>
struct Networks {
  explicit Networks(const NetworkConfig& cfg);

  NetworkConfig config;
  net::ParamStore<T> store;
  Rng init_rng;
  RpnNet<T> rpn;
  ShapeNet<T> shape;
};

std::map<std::string, std::string> network_metadata(const NetworkConfig& cfg);
NetworkConfig network_config_from_metadata(const std::map<std::string, std::string>& meta);

template <typename T>
void save_networks(const std::filesystem::path& path, const Networks<T>& nets,
                   std::map<std::string, std::string> extra_metadata = {});

// Rebuilds the networks described by the checkpoint metadata and loads weights.
Networks<float> load_networks(const std::filesystem::path& path);

}  // namespace bevtrack
