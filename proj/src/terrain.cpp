#include "biro/terrain.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace biro {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

Terrain::Terrain(Shape shape, double friction, std::string name)
    : shape_(shape), friction_(friction), name_(std::move(name)) {
  if (!(friction > 0.0)) throw std::invalid_argument("terrain friction must be > 0");
  if (const auto* s = std::get_if<SlopeTerrain>(&shape_)) {
    if (!(std::abs(s->angle) < std::numbers::pi / 2)) {
      throw std::invalid_argument("slope angle must satisfy |angle| < pi/2");
    }
  }
  if (const auto* s = std::get_if<SinusoidalTerrain>(&shape_)) {
    if (!(s->wavelength > 0.0)) throw std::invalid_argument("sinusoid wavelength must be > 0");
  }
  if (name_.empty()) name_ = to_string(kind());
}

TerrainKind Terrain::kind() const {
  return std::visit(overloaded{[](const FlatTerrain&) { return TerrainKind::Flat; },
                               [](const SlopeTerrain&) { return TerrainKind::Slope; },
                               [](const SinusoidalTerrain&) { return TerrainKind::Sinusoidal; }},
                    shape_);
}

double Terrain::height_at(double x, double y) const {
  return std::visit(
      overloaded{[](const FlatTerrain&) { return 0.0; },
                 [&](const SlopeTerrain& s) {
                   return std::tan(s.angle) * (x * std::cos(s.heading) + y * std::sin(s.heading));
                 },
                 [&](const SinusoidalTerrain& s) {
                   return s.amplitude * std::sin(2.0 * std::numbers::pi * x / s.wavelength);
                 }},
      shape_);
}

Eigen::Vector2d Terrain::gradient_at(double x, double /*y*/) const {
  return std::visit(
      overloaded{[](const FlatTerrain&) { return Eigen::Vector2d(0.0, 0.0); },
                 [](const SlopeTerrain& s) {
                   const double t = std::tan(s.angle);
                   return Eigen::Vector2d(t * std::cos(s.heading), t * std::sin(s.heading));
                 },
                 [&](const SinusoidalTerrain& s) {
                   const double k = 2.0 * std::numbers::pi / s.wavelength;
                   return Eigen::Vector2d(s.amplitude * k * std::cos(k * x), 0.0);
                 }},
      shape_);
}

Eigen::Vector3d Terrain::normal_at(double x, double y) const {
  const Eigen::Vector2d g = gradient_at(x, y);
  return Eigen::Vector3d(-g.x(), -g.y(), 1.0).normalized();
}

TerrainSet::TerrainSet(std::vector<Terrain> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("terrain set must not be empty");
}

const Terrain& TerrainSet::sample(Rng& rng) const {
  if (entries_.empty()) throw std::logic_error("sampling from an empty terrain set");
  return entries_[rng.index(entries_.size())];
}

const Terrain& TerrainSet::by_name(const std::string& name) const {
  for (const auto& t : entries_) {
    if (t.name() == name) return t;
  }
  throw std::out_of_range("no terrain named '" + name + "'");
}

std::string to_string(TerrainKind kind) {
  switch (kind) {
    case TerrainKind::Flat:
      return "flat";
    case TerrainKind::Slope:
      return "slope";
    case TerrainKind::Sinusoidal:
      return "sinusoidal";
  }
  return "unknown";
}

}  // namespace biro
