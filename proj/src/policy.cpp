#include "biro/policy.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace biro {

void ActionBounds::validate() const {
  for (int i = 0; i < kActionSize; ++i) {
    if (!(lo[i] < hi[i])) throw std::invalid_argument("action bounds require min < max");
  }
}

ObservationVector observe(const TorsoState& torso, const VelocityCommand& command) {
  const Eigen::Vector3d rpy = roll_pitch_yaw(torso.orientation);
  const Eigen::Vector3d rates = rpy_rates(rpy, torso.angular_velocity);
  const Eigen::Vector3d v = to_heading_frame(torso.linear_velocity, rpy[2]);

  ObservationVector s;
  s << rpy, rates, v.x() - command.vx, v.y() - command.vy, v.z(), command.vx, command.vy;
  return s;
}

ObservationVector mirror_observation(const ObservationVector& s) {
  ObservationVector m = s;
  for (int i : {obs::kRoll, obs::kYaw, obs::kRollRate, obs::kYawRate, obs::kVelErrY, obs::kCmdVy}) {
    m[i] = -s[i];
  }
  return m;
}

Eigen::Vector4d policy_output(const PolicyMatrix& M, const ObservationVector& s) {
  return M.entries * s;
}

ActionVector act(const PolicyMatrix& M, const ObservationVector& s, const ActionBounds& bounds) {
  const Eigen::Vector4d raw = policy_output(M, s);
  return ActionVector::from_vector(raw.cwiseMax(bounds.lo).cwiseMin(bounds.hi));
}

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double parse_number(const std::string& tok, int line, int column) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = first + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw PolicyFileError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                          ": not a number: '" + tok + "'");
  }
  return v;
}

}  // namespace

std::string format_policy(const PolicyMatrix& M) {
  std::ostringstream out;
  out << kActionSize << ' ' << kObservationSize << '\n';
  for (int r = 0; r < kActionSize; ++r) {
    for (int c = 0; c < kObservationSize; ++c) {
      if (c) out << ' ';
      out << shortest(M.entries(r, c));
    }
    out << '\n';
  }
  if (M.mask != PolicyMask::Ones()) {
    for (int r = 0; r < kActionSize; ++r) {
      for (int c = 0; c < kObservationSize; ++c) {
        if (c) out << ' ';
        out << (M.mask(r, c) != 0.0 ? '1' : '0');
      }
      out << '\n';
    }
  }
  return out.str();
}

PolicyMatrix parse_policy(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::vector<std::string>> lines;
  std::vector<int> line_numbers;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    lines.push_back(std::move(toks));
    line_numbers.push_back(number);
  }
  if (lines.empty()) throw PolicyFileError("empty policy file");

  const auto& header = lines[0];
  if (header.size() != 2) throw PolicyFileError("line 1: header must be '<rows> <cols>'");
  const double rows = parse_number(header[0], line_numbers[0], 1);
  const double cols = parse_number(header[1], line_numbers[0], 2);
  if (rows != kActionSize || cols != kObservationSize) {
    throw PolicyFileError("dimension mismatch: file declares " + header[0] + "x" + header[1] +
                          ", expected " + std::to_string(kActionSize) + "x" +
                          std::to_string(kObservationSize));
  }
  if (lines.size() != 1 + kActionSize && lines.size() != 1 + 2 * kActionSize) {
    throw PolicyFileError("expected " + std::to_string(kActionSize) + " matrix rows and optionally " +
                          std::to_string(kActionSize) + " mask rows, found " +
                          std::to_string(lines.size() - 1) + " data rows");
  }

  PolicyMatrix M;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const bool is_mask = i > static_cast<std::size_t>(kActionSize);
    const int r = static_cast<int>(is_mask ? i - 1 - kActionSize : i - 1);
    const auto& toks = lines[i];
    if (toks.size() != kObservationSize) {
      throw PolicyFileError("line " + std::to_string(line_numbers[i]) + ": expected " +
                            std::to_string(kObservationSize) + " values, found " +
                            std::to_string(toks.size()));
    }
    for (int c = 0; c < kObservationSize; ++c) {
      const double v = parse_number(toks[c], line_numbers[i], c + 1);
      if (is_mask) {
        if (v != 0.0 && v != 1.0) {
          throw PolicyFileError("line " + std::to_string(line_numbers[i]) + ", column " +
                                std::to_string(c + 1) + ": mask entries must be 0 or 1");
        }
        M.mask(r, c) = v;
      } else {
        M.entries(r, c) = v;
      }
    }
  }
  return M;
}

void save_policy(const PolicyMatrix& M, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PolicyFileError("cannot open '" + path.string() + "' for writing");
  out << format_policy(M);
  if (!out) throw PolicyFileError("write failed for '" + path.string() + "'");
}

PolicyMatrix load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PolicyFileError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_policy(buf.str());
}

}  // namespace biro
