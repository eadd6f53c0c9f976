#include "bevtrack/networks.h"

#include <sstream>

#include "bevtrack/errors.h"

namespace bevtrack {

template <typename T>
Networks<T>::Networks(const NetworkConfig& cfg)
    : config(cfg), init_rng(cfg.init_seed), rpn(cfg.rpn, store, init_rng), shape(cfg.shape, store, init_rng) {}

namespace {

template <typename C>
std::string join(const C& values) {
  std::ostringstream ss;
  bool first = true;
  for (const auto& v : values) {
    if (!first) ss << ',';
    ss << v;
    first = false;
  }
  return ss.str();
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

const std::string& need(const std::map<std::string, std::string>& meta, const std::string& key) {
  const auto it = meta.find(key);
  if (it == meta.end()) throw InvalidArgument("checkpoint metadata lacks " + key);
  return it->second;
}

}  // namespace

std::map<std::string, std::string> network_metadata(const NetworkConfig& cfg) {
  return {
      {"rpn.widths", join(cfg.rpn.widths)},
      {"rpn.in_channels", std::to_string(cfg.rpn.in_channels)},
      {"shape.mlp", join(cfg.shape.mlp)},
      {"shape.latent", std::to_string(cfg.shape.latent)},
      {"shape.decoder_hidden", std::to_string(cfg.shape.decoder_hidden)},
      {"shape.decoder_points", std::to_string(cfg.shape.decoder_points)},
  };
}

NetworkConfig network_config_from_metadata(const std::map<std::string, std::string>& meta) {
  NetworkConfig cfg;
  const auto widths = split_ints(need(meta, "rpn.widths"));
  if (widths.size() != 5) throw InvalidArgument("checkpoint: rpn.widths must have 5 entries");
  std::copy(widths.begin(), widths.end(), cfg.rpn.widths.begin());
  cfg.rpn.in_channels = std::stoi(need(meta, "rpn.in_channels"));
  cfg.shape.mlp = split_ints(need(meta, "shape.mlp"));
  cfg.shape.latent = std::stoi(need(meta, "shape.latent"));
  cfg.shape.decoder_hidden = std::stoi(need(meta, "shape.decoder_hidden"));
  cfg.shape.decoder_points = std::stoi(need(meta, "shape.decoder_points"));
  return cfg;
}

template <typename T>
void save_networks(const std::filesystem::path& path, const Networks<T>& nets,
                   std::map<std::string, std::string> extra_metadata) {
  auto meta = network_metadata(nets.config);
  meta.insert(extra_metadata.begin(), extra_metadata.end());
  net::save_checkpoint(path, nets.store, meta);
}

Networks<float> load_networks(const std::filesystem::path& path) {
  const auto ckpt = net::load_checkpoint(path);
  Networks<float> nets(network_config_from_metadata(ckpt.metadata));
  net::apply_checkpoint(ckpt, nets.store);
  return nets;
}

template struct Networks<float>;
template struct Networks<double>;
template void save_networks<float>(const std::filesystem::path&, const Networks<float>&,
                                   std::map<std::string, std::string>);
template void save_networks<double>(const std::filesystem::path&, const Networks<double>&,
                                    std::map<std::string, std::string>);

}  // namespace bevtrack
