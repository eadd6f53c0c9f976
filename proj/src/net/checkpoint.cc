#include "bevtrack/net/checkpoint.h"

#include <bit>
#include <cstring>
#include <sstream>

#include "bevtrack/errors.h"
#include "bevtrack/io.h"

namespace bevtrack::net {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw ParseError("checkpoint: truncated u32", pos);
  std::uint32_t v;
  std::memcpy(&v, in.data() + pos, 4);
  pos += 4;
  return v;
}

std::string shape_field(const std::vector<int>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s;
}

}  // namespace

template <typename T>
std::string encode_checkpoint(const ParamStore<T>& store,
                              const std::map<std::string, std::string>& metadata) {
  std::string meta;
  for (const auto& [k, v] : metadata) {
    if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos ||
        v.find('\n') != std::string::npos) {
      throw InvalidArgument("checkpoint metadata must not contain '=' in keys or newlines");
    }
    meta += k + "=" + v + "\n";
  }
  meta += "param_count=" + std::to_string(store.entries().size()) + "\n";
  for (std::size_t i = 0; i < store.entries().size(); ++i) {
    const auto& e = store.entries()[i];
    meta += "param." + std::to_string(i) + "=" + e.name + " " + shape_field(e.var->value.shape) + "\n";
  }

  std::string out(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out += meta;
  for (const auto& e : store.entries()) {
    for (T v : e.var->value.data) {
      const float f = static_cast<float>(v);
      char buf[4];
      std::memcpy(buf, &f, 4);
      out.append(buf, 4);
    }
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw ParseError("checkpoint: bad magic", 0);
  }
  std::size_t pos = 4;
  const std::uint32_t version = get_u32(bytes, pos);
  if (version != kCheckpointVersion) {
    throw ParseError("checkpoint: unsupported version " + std::to_string(version), 4);
  }
  const std::uint32_t meta_len = get_u32(bytes, pos);
  if (pos + meta_len > bytes.size()) throw ParseError("checkpoint: truncated metadata", pos);
  const std::string meta = bytes.substr(pos, meta_len);
  pos += meta_len;

  Checkpoint ck;
  std::istringstream lines(meta);
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("checkpoint: bad metadata line", 12);
    ck.metadata[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto count_it = ck.metadata.find("param_count");
  if (count_it == ck.metadata.end()) throw ParseError("checkpoint: missing param_count", 12);
  const std::size_t count = std::stoul(count_it->second);
  for (std::size_t i = 0; i < count; ++i) {
    const auto it = ck.metadata.find("param." + std::to_string(i));
    if (it == ck.metadata.end()) throw ParseError("checkpoint: missing param." + std::to_string(i), 12);
    const std::string& field = it->second;
    const auto sp = field.rfind(' ');
    ck.names.push_back(field.substr(0, sp));
    std::vector<int> shape;
    std::istringstream dims(sp == std::string::npos ? "" : field.substr(sp + 1));
    std::string d;
    while (std::getline(dims, d, ',')) shape.push_back(std::stoi(d));
    std::size_t n = 1;
    for (int v : shape) n *= static_cast<std::size_t>(v);
    if (pos + 4 * n > bytes.size()) throw ParseError("checkpoint: truncated array " + ck.names.back(), pos);
    std::vector<float> values(n);
    std::memcpy(values.data(), bytes.data() + pos, 4 * n);
    pos += 4 * n;
    ck.shapes.push_back(std::move(shape));
    ck.values.push_back(std::move(values));
  }
  if (pos != bytes.size()) throw ParseError("checkpoint: trailing bytes", pos);
  return ck;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamStore<T>& store,
                     const std::map<std::string, std::string>& metadata) {
  write_file_atomic(path, encode_checkpoint(store, metadata));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

template <typename T>
void apply_checkpoint(const Checkpoint& ckpt, ParamStore<T>& store) {
  auto& entries = store.entries();
  if (entries.size() != ckpt.names.size()) {
    throw InvalidArgument("checkpoint has " + std::to_string(ckpt.names.size()) +
                          " parameters, network expects " + std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].name != ckpt.names[i] || entries[i].var->value.shape != ckpt.shapes[i]) {
      throw InvalidArgument("checkpoint parameter mismatch at " + entries[i].name);
    }
    for (std::size_t k = 0; k < ckpt.values[i].size(); ++k) {
      entries[i].var->value.data[k] = static_cast<T>(ckpt.values[i][k]);
    }
  }
}

template std::string encode_checkpoint<float>(const ParamStore<float>&, const std::map<std::string, std::string>&);
template std::string encode_checkpoint<double>(const ParamStore<double>&, const std::map<std::string, std::string>&);
template void save_checkpoint<float>(const std::filesystem::path&, const ParamStore<float>&,
                                     const std::map<std::string, std::string>&);
template void save_checkpoint<double>(const std::filesystem::path&, const ParamStore<double>&,
                                      const std::map<std::string, std::string>&);
template void apply_checkpoint<float>(const Checkpoint&, ParamStore<float>&);
template void apply_checkpoint<double>(const Checkpoint&, ParamStore<double>&);

}  // namespace bevtrack::net
