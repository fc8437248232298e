#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "biro/rng.hpp"

namespace biro {

struct FlatTerrain {};

/// Inclined plane rising along `heading` (rad from +x) at `angle` (rad).
struct SlopeTerrain {
  double angle = 0.0;
  double heading = 0.0;
};

/// Ridges along x: h = amplitude * sin(2 pi x / wavelength).
struct SinusoidalTerrain {
  double amplitude = 0.03;
  double wavelength = 0.8;
};

enum class TerrainKind { Flat, Slope, Sinusoidal };

class Terrain {
 public:
  using Shape = std::variant<FlatTerrain, SlopeTerrain, SinusoidalTerrain>;

  Terrain() = default;
  explicit Terrain(Shape shape, double friction = 0.8, std::string name = {});

  static Terrain flat(double friction = 0.8) { return Terrain(FlatTerrain{}, friction); }
  static Terrain slope(double angle, double heading = 0.0, double friction = 0.8) {
    return Terrain(SlopeTerrain{angle, heading}, friction);
  }
  static Terrain sinusoidal(double amplitude, double wavelength, double friction = 0.8) {
    return Terrain(SinusoidalTerrain{amplitude, wavelength}, friction);
  }

  TerrainKind kind() const;
  const Shape& shape() const { return shape_; }
  double friction() const { return friction_; }
  const std::string& name() const { return name_; }

  double height_at(double x, double y) const;
  /// (dh/dx, dh/dy)
  Eigen::Vector2d gradient_at(double x, double y) const;
  /// Unit upward normal, normalize(-dh/dx, -dh/dy, 1).
  Eigen::Vector3d normal_at(double x, double y) const;

 private:
  Shape shape_ = FlatTerrain{};
  double friction_ = 0.8;
  std::string name_;
};

/// Discrete set of terrain configurations sampled once per episode.
class TerrainSet {
 public:
  TerrainSet() = default;
  explicit TerrainSet(std::vector<Terrain> entries);

  const std::vector<Terrain>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Uniform pick; deterministic given the generator state.
  const Terrain& sample(Rng& rng) const;
  /// Looks up an entry by name; throws std::out_of_range when absent.
  const Terrain& by_name(const std::string& name) const;

 private:
  std::vector<Terrain> entries_;
};

std::string to_string(TerrainKind kind);

}  // namespace biro
