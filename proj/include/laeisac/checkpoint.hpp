#pragma once

// Binary blobs: 8-byte magic, u64 little-endian header length, a JSON header, then a
// flat array of little-endian IEEE doubles. Networks and replay dumps share it.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "laeisac/nn.hpp"

namespace laeisac::io {

using json = nlohmann::json;

inline constexpr std::string_view kNetworkMagic = "LAECKPT1";
inline constexpr std::string_view kBufferMagic = "LAEBUF01";

struct Blob {
  json header;
  std::vector<double> data;
};

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  os.write(b.data(), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> b{};
  is.read(reinterpret_cast<char*>(b.data()), 8);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline void write_blob(const std::filesystem::path& path, std::string_view magic, const json& header,
                       std::span<const double> data) {
  if (magic.size() != 8) throw std::invalid_argument("write_blob: magic must be 8 bytes");
  json h = header;
  h["count"] = data.size();
  const std::string text = h.dump();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("write_blob: cannot open " + path.string());
  os.write(magic.data(), 8);
  detail::put_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (double d : data) detail::put_u64(os, std::bit_cast<std::uint64_t>(d));
  if (!os) throw std::runtime_error("write_blob: write failed for " + path.string());
}

inline Blob read_blob(const std::filesystem::path& path, std::string_view magic) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_blob: cannot open " + path.string());
  std::array<char, 8> m{};
  is.read(m.data(), 8);
  if (!is || std::string_view(m.data(), 8) != magic) {
    throw std::runtime_error("read_blob: " + path.string() + " is not a " + std::string(magic) + " file");
  }
  const std::uint64_t len = detail::get_u64(is);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw std::runtime_error("read_blob: truncated header");
  Blob b;
  b.header = json::parse(text);
  const auto count = b.header.at("count").get<std::uint64_t>();
  b.data.resize(count);
  for (auto& d : b.data) d = std::bit_cast<double>(detail::get_u64(is));
  return b;
}

inline json spec_to_json(const nn::NetworkSpec& s) {
  return json{{"input", s.input},
              {"gru_hidden", s.gru_hidden},
              {"fc_hidden", s.fc_hidden},
              {"output", s.output},
              {"fc_activation", nn::to_string(s.fc_activation)},
              {"output_activation", nn::to_string(s.output_activation)},
              {"output_scale", std::vector<double>(s.output_scale.data(), s.output_scale.data() + s.output_scale.size())}};
}

inline nn::Activation activation_from(const std::string& name) {
  if (name == "linear") return nn::Activation::linear;
  if (name == "relu") return nn::Activation::relu;
  if (name == "tanh") return nn::Activation::tanh;
  throw std::runtime_error("checkpoint: unknown activation '" + name + "'");
}

inline nn::NetworkSpec spec_from_json(const json& j) {
  nn::NetworkSpec s;
  s.input = j.at("input").get<int>();
  s.gru_hidden = j.at("gru_hidden").get<int>();
  s.fc_hidden = j.at("fc_hidden").get<int>();
  s.output = j.at("output").get<int>();
  s.fc_activation = activation_from(j.at("fc_activation").get<std::string>());
  s.output_activation = activation_from(j.at("output_activation").get<std::string>());
  const auto scale = j.at("output_scale").get<std::vector<double>>();
  s.output_scale = Eigen::Map<const nn::Vec>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  return s;
}

struct NamedNetwork {
  std::string name;
  const nn::Network* net = nullptr;
};

/// Saves several networks into one file; `extra` is merged into the header (seed, step, ...).
inline void save_networks(const std::filesystem::path& path, std::span<const NamedNetwork> nets,
                          const json& extra = json::object()) {
  json header = extra;
  header["networks"] = json::array();
  std::vector<double> data;
  for (const auto& [name, net] : nets) {
    header["networks"].push_back(json{{"name", name}, {"offset", data.size()}, {"spec", spec_to_json(net->spec())}});
    data.insert(data.end(), net->params().data(), net->params().data() + net->param_count());
  }
  write_blob(path, kNetworkMagic, header, data);
}

struct LoadedNetworks {
  json header;
  std::vector<std::pair<std::string, nn::Network>> nets;

  const nn::Network& at(std::string_view name) const {
    for (const auto& [n, net] : nets) {
      if (n == name) return net;
    }
    throw std::out_of_range("checkpoint: no network named " + std::string(name));
  }
};

inline LoadedNetworks load_networks(const std::filesystem::path& path) {
  Blob b = read_blob(path, kNetworkMagic);
  LoadedNetworks out;
  for (const json& entry : b.header.at("networks")) {
    nn::Network net(spec_from_json(entry.at("spec")));
    const auto off = entry.at("offset").get<std::size_t>();
    if (off + static_cast<std::size_t>(net.param_count()) > b.data.size()) {
      throw std::runtime_error("checkpoint: parameter block overruns file");
    }
    net.set_params(Eigen::Map<const nn::Vec>(b.data.data() + off, net.param_count()));
    out.nets.emplace_back(entry.at("name").get<std::string>(), std::move(net));
  }
  out.header = std::move(b.header);
  return out;
}

}  // namespace laeisac::io
