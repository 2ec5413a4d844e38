#include "kamlattice/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "kamlattice/errors.hpp"

namespace kamlattice {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path) {
  f_ = std::fopen(path.c_str(), "wb");
  if (!f_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  columns_ = header.size();
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (!f_) throw std::logic_error("write to closed csv " + path_.string());
  if (cells.size() != columns_) {
    throw std::logic_error("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(columns_));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) std::fputc(',', f_);
    std::fputs(cells[i].c_str(), f_);
  }
  std::fputc('\n', f_);
}

void CsvWriter::row(const std::vector<double>& cells) {
  std::vector<std::string> s;
  s.reserve(cells.size());
  for (double v : cells) s.push_back(format_double(v));
  row(s);
}

void CsvWriter::close() {
  if (f_) {
    std::fclose(f_);
    f_ = nullptr;
  }
}

CsvWriter::~CsvWriter() { close(); }

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
}

namespace {

std::string digest_hex(const unsigned char* md, unsigned len) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s.push_back(hex[md[i] >> 4]);
    s.push_back(hex[md[i] & 15]);
  }
  return s;
}

std::string xml_escape(const std::string& in) {
  std::string out;
  for (char c : in) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  return digest_hex(md, len);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::string render_svg(const SvgPlot& p) {
  const double ml = 70, mr = 20, mt = 36, mb = 56;
  const double W = p.width, H = p.height;
  const double pw = W - ml - mr, ph = H - mt - mb;
  auto X = [&](double x) { return ml + (x - p.x_min) / (p.x_max - p.x_min) * pw; };
  auto Y = [&](double y) { return mt + (p.y_max - y) / (p.y_max - p.y_min) * ph; };
  auto f = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.2f", v);
    return std::string(b);
  };
  auto tick = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return std::string(b);
  };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << p.width << "\" height=\"" << p.height
    << "\" viewBox=\"0 0 " << p.width << ' ' << p.height << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << f(W / 2) << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"14\">"
    << xml_escape(p.title) << "</text>\n";
  s << "<rect x=\"" << f(ml) << "\" y=\"" << f(mt) << "\" width=\"" << f(pw) << "\" height=\"" << f(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = p.x_min + i * (p.x_max - p.x_min) / 4;
    const double yv = p.y_min + i * (p.y_max - p.y_min) / 4;
    s << "<text x=\"" << f(X(xv)) << "\" y=\"" << f(mt + ph + 18)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << tick(xv)
      << "</text>\n";
    s << "<text x=\"" << f(ml - 6) << "\" y=\"" << f(Y(yv) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << tick(yv)
      << "</text>\n";
  }
  s << "<text x=\"" << f(ml + pw / 2) << "\" y=\"" << f(H - 14)
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(p.x_label)
    << "</text>\n";
  s << "<text x=\"16\" y=\"" << f(mt + ph / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"13\" transform=\"rotate(-90 16 "
    << f(mt + ph / 2) << ")\">" << xml_escape(p.y_label) << "</text>\n";
  s << "<clipPath id=\"plot\"><rect x=\"" << f(ml) << "\" y=\"" << f(mt) << "\" width=\"" << f(pw)
    << "\" height=\"" << f(ph) << "\"/></clipPath>\n<g clip-path=\"url(#plot)\">\n";
  for (const auto& ser : p.series) {
    if (ser.line) {
      s << "<polyline fill=\"none\" stroke=\"" << xml_escape(ser.color) << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& [x, y] : ser.points) {
        if (std::isfinite(x) && std::isfinite(y)) s << f(X(x)) << ',' << f(Y(y)) << ' ';
      }
      s << "\"/>\n";
    } else {
      s << "<g fill=\"" << xml_escape(ser.color) << "\">";
      for (const auto& [x, y] : ser.points) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        const double px = X(x), py = Y(y);
        if (px < ml || px > ml + pw || py < mt || py > mt + ph) continue;
        s << "<circle cx=\"" << f(px) << "\" cy=\"" << f(py) << "\" r=\"" << ser.radius << "\"/>";
      }
      s << "</g>\n";
    }
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

Manifest::Manifest(std::string command, nlohmann::json config, std::uint64_t seed) {
  j_["schema"] = kManifestSchema;
  j_["version"] = kVersion;
  j_["command"] = std::move(command);
  j_["seed"] = seed;
  j_["config"] = std::move(config);
  j_["outputs"] = nlohmann::json::array();
  j_["status"] = "ok";
}

void Manifest::add_output(const std::filesystem::path& path, const std::string& kind) {
  j_["outputs"].push_back({{"path", path.filename().string()},
                           {"kind", kind},
                           {"sha256", sha256_file(path)},
                           {"bytes", std::filesystem::file_size(path)}});
}

void Manifest::set_status(const std::string& status, const std::string& message) {
  j_["status"] = status;
  if (!message.empty()) j_["message"] = message;
}

void Manifest::write(const std::filesystem::path& path) const {
  write_text(path, j_.dump(2) + "\n");
}

}  // namespace kamlattice
