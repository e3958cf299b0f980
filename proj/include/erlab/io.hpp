#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "erlab/dimlab.hpp"
#include "erlab/errors.hpp"
#include "erlab/fractal.hpp"

namespace erlab {

// Point-set file: magic "ERLABPS1", u32 LE header length, JSON header,
// then `count` little-endian float64 values.
inline constexpr char kPointSetMagic[8] = {'E', 'R', 'L', 'A', 'B', 'P', 'S', '1'};
inline constexpr int kPointSetVersion = 1;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw Error("point set: truncated header");
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
}

inline void put_f64(std::ostream& os, double v) {
  auto u = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64(const unsigned char* b) {
  std::uint64_t u = 0;
  for (int i = 7; i >= 0; --i) u = u << 8 | b[i];
  return std::bit_cast<double>(u);
}

}  // namespace detail

inline void write_point_set(std::ostream& os, const PointSet1D& p) {
  nlohmann::json h = {{"version", kPointSetVersion}, {"count", p.size()},         {"dimension", p.dimension},
                      {"lo", p.lo},                {"hi", p.hi},                 {"spec", p.provenance},
                      {"hash", p.hash}};
  std::string text = h.dump();
  os.write(kPointSetMagic, 8);
  detail::put_u32(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (double v : p.points) detail::put_f64(os, v);
  if (!os) throw Error("point set: write failed");
}

inline PointSet1D read_point_set(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kPointSetMagic, 8) != 0) throw Error("point set: bad magic");
  std::uint32_t len = detail::get_u32(is);
  if (len > (1u << 20)) throw Error("point set: header too large");
  std::string text(len, '\0');
  if (!is.read(text.data(), len)) throw Error("point set: truncated header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("point set: bad header: ") + e.what());
  }
  if (h.value("version", 0) != kPointSetVersion) throw Error("point set: unsupported version");
  PointSet1D p;
  auto count = h.at("count").get<std::uint64_t>();
  p.dimension = h.at("dimension").get<double>();
  p.lo = h.at("lo").get<double>();
  p.hi = h.at("hi").get<double>();
  p.provenance = h.at("spec").get<std::string>();
  p.hash = h.at("hash").get<std::uint64_t>();
  if (count > kPointBudget) throw Error("point set: count exceeds the budget");
  std::vector<unsigned char> raw(count * 8);
  if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw Error("point set: truncated data");
  }
  p.points.resize(count);
  for (std::size_t i = 0; i < count; ++i) p.points[i] = detail::get_f64(raw.data() + 8 * i);
  p.validate();
  if (fnv1a(p.provenance) != p.hash) throw Error("point set: hash does not match spec");
  return p;
}

inline void save_point_set(const PointSet1D& p, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path);
  write_point_set(os, p);
}

inline PointSet1D load_point_set(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return read_point_set(is);
}

/// delta, N, log(1/delta), log N; one row per rung.
inline std::string ladder_csv(const Ladder& l) {
  std::ostringstream os;
  os << std::setprecision(17) << "delta,count,log_inv_delta,log_count\n";
  for (const auto& r : l) {
    os << r.delta << ',' << r.count << ',' << -std::log(r.delta) << ',' << std::log(static_cast<double>(r.count))
       << '\n';
  }
  return os.str();
}

inline void save_text(const std::string& text, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path);
  os << text;
  if (!os) throw Error("write failed: " + path);
}

}  // namespace erlab
