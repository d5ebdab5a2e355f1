#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace dgboltz {

/// Three-component velocity vector (u, v, w).
struct Vec3
{
  std::array<double, 3> c{0.0, 0.0, 0.0};

  constexpr Vec3() = default;
  constexpr Vec3(double u, double v, double w) : c{u, v, w} {}

  constexpr double& operator[](std::size_t d) { return c[d]; }
  constexpr double operator[](std::size_t d) const { return c[d]; }

  constexpr Vec3& operator+=(const Vec3& o)
  {
    for (std::size_t d = 0; d < 3; ++d) c[d] += o.c[d];
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o)
  {
    for (std::size_t d = 0; d < 3; ++d) c[d] -= o.c[d];
    return *this;
  }
  constexpr Vec3& operator*=(double s)
  {
    for (auto& x : c) x *= s;
    return *this;
  }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b)
{
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline constexpr double pi = 3.14159265358979323846;

// Error hierarchy. The CLI maps each family onto a process exit code.
struct Error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error
{
  using Error::Error;
};

struct IndexError : Error
{
  using Error::Error;
};

struct DegenerateFieldError : Error
{
  using Error::Error;
};

struct IncompatibleError : Error
{
  using Error::Error;
};

struct FormatError : Error
{
  using Error::Error;
};

struct IoError : Error
{
  using Error::Error;
};

struct NumericError : Error
{
  using Error::Error;
};

struct SizingError : Error
{
  using Error::Error;
};

}  // namespace dgboltz
