#include "rdslab/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "rdslab/errors.hpp"

namespace rdslab {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("IoError", "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("IoError", "short write to " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) out_ += (i ? "," : "") + header[i];
  out_ += '\n';
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw Error("IoError", "CSV row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) out_ += (i ? "," : "") + cells[i];
  out_ += '\n';
  return *this;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw Error("IoError", "missing CSV column " + name);
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(std::stod(r.at(static_cast<std::size_t>(c))));
  return v;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

void put_le(std::string& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out += static_cast<char>((bits >> (8 * b)) & 0xff);
}

double get_le(const std::string& in, std::size_t off) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[off + b])) << (8 * b);
  return std::bit_cast<double>(bits);
}

fs::path sidecar(const fs::path& path) { return fs::path(path.string() + ".json"); }

}  // namespace

CsvTable read_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error("IoError", "empty CSV " + path.string());
  t.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split_line(line));
  }
  return t;
}

void write_ensemble(const fs::path& path, const ParticleEnsemble& e, const nlohmann::json& meta) {
  const std::size_t n = e.size();
  std::string bytes;
  bytes.reserve(24 * n);
  for (const auto& p : e.points) put_le(bytes, p.x());
  for (const auto& p : e.points) put_le(bytes, p.y());
  for (double w : e.weights) put_le(bytes, w);
  write_text(path, bytes);

  nlohmann::ordered_json side;
  side["format"] = "columnar-float64-le";
  side["columns"] = {"x", "y", "weight"};
  side["count"] = n;
  side["total_mass"] = e.total_mass();
  side["provenance"] = {{"kind", e.provenance.kind}, {"depth", e.provenance.depth}, {"seed", e.provenance.seed}};
  side["meta"] = meta;
  write_text(sidecar(path), side.dump(2) + "\n");
}

ParticleEnsemble read_ensemble(const fs::path& path) {
  const nlohmann::json side = nlohmann::json::parse(read_text(sidecar(path)));
  const std::size_t n = side.at("count").get<std::size_t>();
  const std::string bytes = read_text(path);
  if (bytes.size() != 24 * n) throw Error("IoError", "ensemble size mismatch in " + path.string());
  ParticleEnsemble e;
  e.points.resize(n);
  e.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    e.points[i] = TorusPoint(get_le(bytes, 8 * i), get_le(bytes, 8 * (n + i)));
    e.weights[i] = get_le(bytes, 8 * (2 * n + i));
  }
  const auto& prov = side.at("provenance");
  e.provenance.kind = prov.at("kind").get<std::string>();
  e.provenance.depth = prov.at("depth").get<int>();
  e.provenance.seed = prov.at("seed").get<std::uint64_t>();
  return e;
}

void write_density_csv(const fs::path& path, const UlamDensity& d) {
  std::string out;
  const double scale = static_cast<double>(d.m) * d.m;
  for (int iy = 0; iy < d.m; ++iy) {
    for (int ix = 0; ix < d.m; ++ix) {
      if (ix) out += ',';
      out += format_double(d.cells[static_cast<std::size_t>(iy * d.m + ix)] * scale);
    }
    out += '\n';
  }
  write_text(path, out);
}

UlamDensity read_density_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> r;
    for (const auto& c : split_line(line)) r.push_back(std::stod(c));
    rows.push_back(std::move(r));
  }
  UlamDensity d;
  d.m = static_cast<int>(rows.size());
  const double scale = static_cast<double>(d.m) * d.m;
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != d.m) throw Error("IoError", "density grid is not square in " + path.string());
    for (double v : r) d.cells.push_back(v / scale);
  }
  return d;
}

void write_leaf_csv(const fs::path& path, const LeafStack& stack, const std::string& kind) {
  CsvWriter csv({"kind", "leaf", "intercept", "u", "v", "x", "y", "log_density"});
  for (const Leaf& leaf : stack.leaves) {
    const UGraph& g = leaf.graph;
    for (int i = 0; i < g.nodes(); ++i) {
      const double u = g.node(i);
      const double v = g.values[static_cast<std::size_t>(i)];
      const TorusPoint p = g.frame.from_chart(Vec2(u, v));
      csv.row({kind, std::to_string(leaf.id), format_double(leaf.intercept), format_double(u), format_double(v),
               format_double(p.x()), format_double(p.y()),
               g.has_density() ? format_double(g.log_density[static_cast<std::size_t>(i)]) : std::string("0")});
    }
  }
  csv.save(path);
}

}  // namespace rdslab
