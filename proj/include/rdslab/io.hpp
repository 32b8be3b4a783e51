#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdslab/manifolds.hpp"
#include "rdslab/transport.hpp"

namespace rdslab {

namespace fs = std::filesystem;

/// Shortest round-trip decimal form of a double (locale independent).
std::string format_double(double v);

/// Writes text exactly as given (binary mode, no newline translation).
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& path);

/// Minimal CSV builder: header, then rows of already formatted cells.
class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(const std::vector<std::string>& cells);
  std::string str() const { return out_; }
  void save(const fs::path& path) const { write_text(path, out_); }

private:
  std::size_t columns_;
  std::string out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;  ///< -1 when absent
  std::vector<double> numbers(const std::string& name) const;
};

CsvTable read_csv(const fs::path& path);

/// Columnar little-endian float64 file (all x, then all y, then all weights)
/// plus a JSON sidecar at <path>.json holding `meta` and the layout.
void write_ensemble(const fs::path& path, const ParticleEnsemble& e, const nlohmann::json& meta);
ParticleEnsemble read_ensemble(const fs::path& path);

/// m rows of m comma-separated cell densities dμ/dLeb; row 0 is the lowest y strip.
void write_density_csv(const fs::path& path, const UlamDensity& d);
UlamDensity read_density_csv(const fs::path& path);

/// One row per leaf node: leaf, intercept, u, v, x, y (and log_density when carried).
void write_leaf_csv(const fs::path& path, const LeafStack& stack, const std::string& kind);

}  // namespace rdslab
