#pragma once

// File emission: deterministic CSV, standalone SVG plots and the run manifest.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace kamlattice {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kManifestSchema = "kamlattice.manifest/1";

/// Shortest round-trip-safe text: printf("%.17g").
std::string format_double(double v);

class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  void row(const std::vector<std::string>& cells);
  void row(const std::vector<double>& cells);
  void close();
  ~CsvWriter();

private:
  std::FILE* f_ = nullptr;
  std::filesystem::path path_;
  std::size_t columns_ = 0;
};

void write_text(const std::filesystem::path& path, const std::string& content);

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::filesystem::path& path);

struct SvgSeries {
  std::vector<std::pair<double, double>> points;
  std::string color = "#1f4e9c";
  bool line = false;
  double radius = 0.6;
  std::string label;
};

struct SvgPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  int width = 640;
  int height = 640;
  std::vector<SvgSeries> series;
};

std::string render_svg(const SvgPlot& plot);

/// Run manifest: resolved configuration, version, seed and every output with its SHA-256.
class Manifest {
public:
  Manifest(std::string command, nlohmann::json config, std::uint64_t seed);
  void add_output(const std::filesystem::path& path, const std::string& kind);
  void set_status(const std::string& status, const std::string& message = "");
  void write(const std::filesystem::path& path) const;
  const nlohmann::json& json() const { return j_; }

private:
  nlohmann::json j_;
};

}  // namespace kamlattice
