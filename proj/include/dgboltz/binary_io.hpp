#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <type_traits>

#include "dgboltz/common.hpp"

namespace dgboltz::detail {

// Little-endian scalar and bulk encoding shared by the field and kernel files.

template <typename T>
void byteswap_inplace(T& value)
{
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  for (std::size_t k = 0; k < sizeof(T) / 2; ++k) std::swap(buf[k], buf[sizeof(T) - 1 - k]);
  std::memcpy(&value, buf, sizeof(T));
}

template <typename T>
void write_le(std::ostream& out, T value)
{
  static_assert(std::is_arithmetic_v<T>);
  if constexpr (std::endian::native == std::endian::big) byteswap_inplace(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in)
{
  static_assert(std::is_arithmetic_v<T>);
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw FormatError("unexpected end of file while reading header");
  if constexpr (std::endian::native == std::endian::big) byteswap_inplace(value);
  return value;
}

inline void write_doubles(std::ostream& out, std::span<const double> data)
{
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size_bytes()));
  } else {
    for (double x : data) write_le(out, x);
  }
}

inline void read_doubles(std::istream& in, std::span<double> data)
{
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
  if (!in) throw FormatError("truncated payload");
  if constexpr (std::endian::native == std::endian::big) {
    for (double& x : data) byteswap_inplace(x);
  }
}

inline void write_magic(std::ostream& out, const char (&magic)[5])
{
  out.write(magic, 4);
}

inline void expect_magic(std::istream& in, const char (&magic)[5])
{
  char buf[4] = {};
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0) {
    throw FormatError(std::string("bad magic, expected ") + magic);
  }
}

}  // namespace dgboltz::detail
