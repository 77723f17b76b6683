#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pcsamp/attention.hpp"
#include "pcsamp/errors.hpp"
#include "pcsamp/pipeline.hpp"
#include "pcsamp/point_cloud.hpp"

namespace pcsamp {

static_assert(std::endian::native == std::endian::little,
              "weights files are little-endian; big-endian hosts are unsupported");

enum class CloudFormat { xyz, ply_ascii };

inline CloudFormat parse_format(const std::string& token) {
  if (token == "xyz") return CloudFormat::xyz;
  if (token == "ply-ascii") return CloudFormat::ply_ascii;
  throw FormatError("unknown cloud format '" + token + "' (expected xyz or ply-ascii)");
}

/// Full-precision shortest round-trip formatting for text outputs.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

}  // namespace detail

/// Whitespace-separated `x y z` rows, one point per line, `#` comments and
/// blank lines skipped.
inline PointCloud read_xyz(std::istream& in, const std::string& id = "") {
  std::vector<double> coords;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 3) throw ParseError("expected 3 coordinates, got " +
                                           std::to_string(toks.size()), line_no);
    for (const auto& t : toks) {
      double v;
      if (!detail::parse_double(t, v))
        throw ParseError("malformed coordinate '" + t + "'", line_no);
      coords.push_back(v);
    }
  }
  if (coords.empty()) throw EmptyCloud("xyz input holds no points");
  PointCloud cloud;
  cloud.id = id;
  const Index n = static_cast<Index>(coords.size() / 3);
  cloud.points.resize(n, 3);
  for (Index i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a)
      cloud.points(i, a) = coords[static_cast<std::size_t>(3 * i + a)];
  return cloud;
}

/// ASCII PLY restricted to a leading `element vertex` with float/double
/// x, y, z properties; extra scalar vertex properties are skipped, later
/// elements are ignored.
inline PointCloud read_ply_ascii(std::istream& in, const std::string& id = "") {
  std::string line;
  long line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  };

  if (!next_line() || detail::split_ws(line) != std::vector<std::string>{"ply"})
    throw ParseError("missing 'ply' magic", line_no ? line_no : 1);

  long vertex_count = -1;
  std::vector<std::string> property_names;
  bool in_vertex_element = false;
  bool saw_format = false;
  while (next_line()) {
    const auto toks = detail::split_ws(line);
    if (toks.empty() || toks[0] == "comment") continue;
    if (toks[0] == "format") {
      if (toks.size() < 2 || toks[1] != "ascii")
        throw ParseError("only 'format ascii' is supported", line_no);
      saw_format = true;
    } else if (toks[0] == "element") {
      if (toks.size() != 3) throw ParseError("malformed element declaration", line_no);
      if (toks[1] == "vertex") {
        if (vertex_count >= 0) throw ParseError("duplicate vertex element", line_no);
        vertex_count = std::stol(toks[2]);
        in_vertex_element = true;
      } else {
        if (vertex_count < 0)
          throw ParseError("element '" + toks[1] + "' precedes the vertex element", line_no);
        in_vertex_element = false;
      }
    } else if (toks[0] == "property") {
      if (!in_vertex_element) continue;
      if (toks.size() == 3) {
        if (toks[1] != "float" && toks[1] != "double" && toks[1] != "float32" &&
            toks[1] != "float64")
          throw ParseError("vertex property '" + toks[2] + "' has non-float type", line_no);
        property_names.push_back(toks[2]);
      } else {
        throw ParseError("list properties are not supported on vertices", line_no);
      }
    } else if (toks[0] == "end_header") {
      break;
    } else {
      throw ParseError("unrecognized header line '" + toks[0] + "'", line_no);
    }
  }
  if (!saw_format) throw ParseError("header lacks a format line", line_no);
  if (vertex_count < 0) throw ParseError("header lacks an 'element vertex' line", line_no);
  if (vertex_count == 0) throw EmptyCloud("ply input declares zero vertices");

  int xi = -1, yi = -1, zi = -1;
  for (std::size_t i = 0; i < property_names.size(); ++i) {
    if (property_names[i] == "x") xi = static_cast<int>(i);
    if (property_names[i] == "y") yi = static_cast<int>(i);
    if (property_names[i] == "z") zi = static_cast<int>(i);
  }
  if (xi < 0 || yi < 0 || zi < 0)
    throw ParseError("vertex element lacks x/y/z properties", line_no);

  PointCloud cloud;
  cloud.id = id;
  cloud.points.resize(vertex_count, 3);
  for (long v = 0; v < vertex_count; ++v) {
    if (!next_line()) throw ParseError("fewer vertex rows than declared", line_no);
    const auto toks = detail::split_ws(line);
    if (toks.size() < property_names.size())
      throw ParseError("vertex row has " + std::to_string(toks.size()) + " fields, expected " +
                       std::to_string(property_names.size()), line_no);
    double x, y, z;
    if (!detail::parse_double(toks[static_cast<std::size_t>(xi)], x) ||
        !detail::parse_double(toks[static_cast<std::size_t>(yi)], y) ||
        !detail::parse_double(toks[static_cast<std::size_t>(zi)], z))
      throw ParseError("malformed vertex coordinate", line_no);
    cloud.points(v, 0) = x;
    cloud.points(v, 1) = y;
    cloud.points(v, 2) = z;
  }
  return cloud;
}

inline PointCloud load_pointcloud(const std::string& path, CloudFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return format == CloudFormat::xyz ? read_xyz(in, path) : read_ply_ascii(in, path);
}

inline void write_xyz(std::ostream& out, const PointCloud& cloud) {
  for (Index i = 0; i < cloud.size(); ++i)
    out << fmt_g17(cloud.points(i, 0)) << ' ' << fmt_g17(cloud.points(i, 1)) << ' '
        << fmt_g17(cloud.points(i, 2)) << '\n';
}

// ---------------------------------------------------------------------------
// Weights file: magic, version, dims, then row-major little-endian doubles
// for w_query, w_key, bin_tokens in that order.
// ---------------------------------------------------------------------------

inline constexpr char kWeightsMagic[8] = {'P', 'C', 'S', 'A', 'M', 'P', 'W', 'T'};
inline constexpr std::uint32_t kWeightsVersion = 1;

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw FormatError("weights file truncated in header");
  return v;
}

inline void write_matrix(std::ostream& out, const MatrixX<double>& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

inline void read_matrix(std::istream& in, MatrixX<double>& m, Index rows, Index cols) {
  m.resize(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      if (!in) throw FormatError("weights file payload shorter than header declares");
      m(i, j) = v;
    }
}

}  // namespace detail

inline void save_weights(std::ostream& out, const WeightSet& ws) {
  out.write(kWeightsMagic, sizeof kWeightsMagic);
  detail::write_u32(out, kWeightsVersion);
  detail::write_u32(out, static_cast<std::uint32_t>(ws.d_in()));
  detail::write_u32(out, static_cast<std::uint32_t>(ws.d()));
  detail::write_u32(out, static_cast<std::uint32_t>(ws.token_count()));
  detail::write_matrix(out, ws.w_query);
  detail::write_matrix(out, ws.w_key);
  detail::write_matrix(out, ws.bin_tokens);
}

inline void save_weights(const std::string& path, const WeightSet& ws) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  save_weights(out, ws);
}

inline WeightSet load_weights(std::istream& in, const std::string& provenance = "") {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kWeightsMagic, sizeof magic) != 0)
    throw FormatError("not a weights file (bad magic)");
  const std::uint32_t version = detail::read_u32(in);
  if (version != kWeightsVersion)
    throw FormatError("unsupported weights version " + std::to_string(version));
  const Index d_in = detail::read_u32(in);
  const Index d = detail::read_u32(in);
  const Index n_b = detail::read_u32(in);
  if (d_in < 1 || d < 1) throw FormatError("weights header declares empty projections");
  WeightSet ws;
  detail::read_matrix(in, ws.w_query, d_in, d);
  detail::read_matrix(in, ws.w_key, d_in, d);
  detail::read_matrix(in, ws.bin_tokens, n_b, d_in);
  ws.provenance = provenance;
  return ws;
}

inline WeightSet load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return load_weights(in, path);
}

// ---------------------------------------------------------------------------
// Boundary state file: `n_b gamma steps` header line, one boundary per line.
// ---------------------------------------------------------------------------

inline void save_state(std::ostream& out, const CalibrationState& state) {
  out << "# bin boundary state\n";
  out << state.bin_count << ' ' << fmt_g17(state.gamma) << ' ' << state.steps << '\n';
  for (Index i = 0; i < state.boundaries.size(); ++i)
    out << fmt_g17(state.boundaries[i]) << '\n';
}

inline void save_state(const std::string& path, const CalibrationState& state) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  save_state(out, state);
}

inline CalibrationState load_state(std::istream& in) {
  std::string line;
  long line_no = 0;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto toks = detail::split_ws(line);
    if (!toks.empty()) rows.push_back(std::move(toks));
  }
  if (rows.empty() || rows[0].size() != 3)
    throw FormatError("state file lacks the 'n_b gamma steps' header line");
  CalibrationState state;
  state.bin_count = std::stol(rows[0][0]);
  double gamma, steps_d;
  if (!detail::parse_double(rows[0][1], gamma)) throw FormatError("state file: bad gamma");
  state.gamma = gamma;
  if (!detail::parse_double(rows[0][2], steps_d)) throw FormatError("state file: bad step count");
  state.steps = static_cast<Index>(steps_d);
  if (static_cast<Index>(rows.size()) - 1 != state.bin_count - 1)
    throw FormatError("state file declares n_b=" + std::to_string(state.bin_count) + " but holds " +
                      std::to_string(rows.size() - 1) + " boundaries");
  state.boundaries.resize(state.bin_count - 1);
  for (Index i = 0; i < state.bin_count - 1; ++i) {
    if (rows[static_cast<std::size_t>(i + 1)].size() != 1)
      throw FormatError("state file: boundary lines hold one value each");
    double v;
    if (!detail::parse_double(rows[static_cast<std::size_t>(i + 1)][0], v))
      throw FormatError("state file: malformed boundary value");
    state.boundaries[i] = v;
  }
  return state;
}

inline CalibrationState load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return load_state(in);
}

// ---------------------------------------------------------------------------
// Flat key-value config: `key value` or `key=value`, '#' comments.
// ---------------------------------------------------------------------------

struct ConfigFile {
  PipelineConfig config;
  std::optional<std::uint64_t> seed;
};

inline ConfigFile parse_config(std::istream& in) {
  ConfigFile out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    for (auto& c : line)
      if (c == '=') c = ' ';
    const auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 2)
      throw FormatError("config line " + std::to_string(line_no) +
                        ": expected 'key value', got '" + line + "'");
    const std::string& key = toks[0];
    const std::string& value = toks[1];
    const auto as_long = [&]() -> long {
      double v;
      if (!detail::parse_double(value, v))
        throw FormatError("config: '" + key + "' expects a number, got '" + value + "'");
      return static_cast<long>(v);
    };
    const auto as_double = [&]() -> double {
      double v;
      if (!detail::parse_double(value, v))
        throw FormatError("config: '" + key + "' expects a number, got '" + value + "'");
      return v;
    };
    if (key == "mode") {
      out.config.mode = parse_mode(value);
    } else if (key == "k") {
      out.config.k = as_long();
    } else if (key == "n_b") {
      out.config.bin_count = as_long();
    } else if (key == "gamma") {
      out.config.gamma = as_double();
    } else if (key == "tau") {
      out.config.tau = as_double();
    } else if (key == "variant") {
      if (value == "carve") out.config.variant = SamVariant::carve;
      else if (value == "insert") out.config.variant = SamVariant::insert;
      else throw FormatError("config: unknown variant '" + value + "'");
    } else if (key == "policy") {
      out.config.policy = parse_policy(value);
    } else if (key == "seed") {
      out.seed = static_cast<std::uint64_t>(std::stoull(value));
    } else if (key == "d") {
      out.config.key_dim = as_long();
    } else {
      throw FormatError("config: unknown key '" + key + "'");
    }
  }
  validate_config(out.config);
  return out;
}

inline ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_config(in);
}

// ---------------------------------------------------------------------------
// Result tables. All CLI outputs are delimited text with '#' metadata lines.
// ---------------------------------------------------------------------------

inline void write_sample_result(std::ostream& out, const SampleResult& result, Index n) {
  out << "# N=" << n << " M=" << result.size() << " seed=" << result.seed
      << " policy=" << to_string(result.policy);
  if (result.shortfall) out << " shortfall=1";
  out << '\n';
  for (Index i = 0; i < result.size(); ++i)
    out << result.indices[i] << ' ' << fmt_g17(result.scores[i]) << ' ' << result.bins[i] << '\n';
}

inline void write_score_table(std::ostream& out, const ScoreVector& scores,
                              const PipelineConfig& cfg) {
  out << "# mode=" << mode_token(scores.mode) << " k=" << cfg.k
      << " variant=" << to_string(cfg.variant) << '\n';
  out << "# index raw normalized\n";
  for (Index i = 0; i < scores.raw.size(); ++i)
    out << i << ' ' << fmt_g17(scores.raw[i]) << ' ' << fmt_g17(scores.normalized[i]) << '\n';
}

inline void write_bin_histogram(std::ostream& out, const BinModel& model,
                                const std::string& shape_id, Index n, Index m) {
  out << "# shape=" << (shape_id.empty() ? "-" : shape_id) << " N=" << n << " M=" << m
      << " n_b=" << model.bin_count << '\n';
  out << "# bin beta kappa ratio omega\n";
  for (Index j = 0; j < model.bin_count; ++j)
    out << j << ' ' << model.counts[j] << ' ' << model.allocations[j] << ' '
        << fmt_g17(model.ratios[j]) << ' ' << fmt_g17(model.weights[j]) << '\n';
}

inline void write_frequency_table(std::ostream& out, const IndexVector& counts, Index k) {
  out << "# k=" << k << " N=" << counts.size() << '\n';
  out << "# index count\n";
  for (Index i = 0; i < counts.size(); ++i) out << i << ' ' << counts[i] << '\n';
}

}  // namespace pcsamp
