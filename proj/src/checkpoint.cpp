#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <json.hpp>

#include "countflow/net.hpp"

namespace countflow {

namespace {

constexpr char kMagic[8] = {'C', 'F', 'L', 'W', 'N', 'E', 'T', '1'};
constexpr int kFormatVersion = 1;

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw std::runtime_error("checkpoint truncated");
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(in[pos + b]) << (8 * b);
  pos += 8;
  return v;
}

void put_array(std::vector<std::uint8_t>& out, std::span<const double> values) {
  for (double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::vector<double> get_array(std::span<const std::uint8_t> in, std::size_t& pos, std::size_t n) {
  std::vector<double> values(n);
  for (auto& v : values) v = std::bit_cast<double>(get_u64(in, pos));
  return values;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const RateNetwork& net) {
  const NetworkShape& s = net.shape();
  nlohmann::json meta = {
      {"format_version", kFormatVersion},
      {"dim", s.dim},
      {"hidden", s.hidden},
      {"time_frequencies", s.time_frequencies},
      {"n_labels", s.n_labels},
      {"label_embedding", s.label_embedding},
      {"input_scale_bits", std::bit_cast<std::uint64_t>(s.input_scale)},
      {"input_scale", s.input_scale},
      {"n_params", net.count_params()},
      {"optimizer_step", net.optimizer().step},
  };
  const std::string text = meta.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  put_array(out, net.params());
  put_array(out, net.optimizer().m);
  put_array(out, net.optimizer().v);
  return out;
}

RateNetwork deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw std::runtime_error("not a countflow checkpoint");
  }
  std::size_t pos = 8;
  const std::uint64_t meta_len = get_u64(bytes, pos);
  if (pos + meta_len > bytes.size()) throw std::runtime_error("checkpoint truncated");
  const auto meta = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                          bytes.begin() + static_cast<std::ptrdiff_t>(pos + meta_len));
  pos += meta_len;
  if (meta.at("format_version").get<int>() != kFormatVersion) {
    throw std::runtime_error("unsupported checkpoint format version");
  }

  NetworkShape shape;
  shape.dim = meta.at("dim").get<std::size_t>();
  shape.hidden = meta.at("hidden").get<std::vector<std::size_t>>();
  shape.time_frequencies = meta.at("time_frequencies").get<std::size_t>();
  shape.n_labels = meta.at("n_labels").get<std::size_t>();
  shape.label_embedding = meta.at("label_embedding").get<std::size_t>();
  shape.input_scale = std::bit_cast<double>(meta.at("input_scale_bits").get<std::uint64_t>());
  const auto n = meta.at("n_params").get<std::size_t>();
  if (bytes.size() - pos != 3 * 8 * n) throw std::runtime_error("checkpoint payload size mismatch");

  std::vector<double> params = get_array(bytes, pos, n);
  AdamState adam;
  adam.m = get_array(bytes, pos, n);
  adam.v = get_array(bytes, pos, n);
  adam.step = meta.at("optimizer_step").get<std::int64_t>();
  return network_from_parts(std::move(shape), std::move(params), std::move(adam));
}

void save_checkpoint(const RateNetwork& net, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

RateNetwork load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace countflow
