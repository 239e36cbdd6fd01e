#pragma once

// CSV and SVG output. Numbers use the shortest round-trip decimal form so
// identical runs give byte-identical files.

#include "ultracarl/regions.hpp"

#include <filesystem>
#include <fstream>

namespace ultracarl {

inline std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// CSV document with leading "# " metadata lines, one header row and data rows.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void meta(const std::string& line) { meta_.push_back(line); }

  class Row {
   public:
    explicit Row(CsvTable& t) : table_(t) {}
    Row& operator<<(const std::string& s) { cells_.push_back(csv_escape(s)); return *this; }
    Row& operator<<(const char* s) { return *this << std::string(s); }
    Row& operator<<(double v) { cells_.push_back(format_double(v)); return *this; }
    Row& operator<<(bool v) { cells_.push_back(v ? "1" : "0"); return *this; }
    Row& operator<<(int v) { cells_.push_back(std::to_string(v)); return *this; }
    Row& operator<<(std::size_t v) { cells_.push_back(std::to_string(v)); return *this; }
    ~Row() { table_.rows_.push_back(std::move(cells_)); }

   private:
    CsvTable& table_;
    std::vector<std::string> cells_;
  };

  Row row() { return Row(*this); }

  std::size_t size() const { return rows_.size(); }

  std::string str() const {
    std::string out;
    for (const auto& m : meta_) out += "# " + m + "\n";
    out += join(header_);
    for (const auto& r : rows_) out += join(r);
    return out;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::config, "cannot write " + path.string());
    f << str();
  }

 private:
  static std::string join(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    return out + "\n";
  }

  std::vector<std::string> header_;
  std::vector<std::string> meta_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::config, "cannot write " + path.string());
  f << text;
}

// ---------------------------------------------------------------------------
// SVG slices of the boundary regions.

struct SvgStyle {
  int size = 480;
  std::string focus_color = "#d62728";  // red: the highlighted region
  std::string rest_color = "#f2c200";   // yellow: remaining boundary
  std::string point_color = "#1f77b4";  // blue: the reference point
};

namespace detail {
inline std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}
}  // namespace detail

/// One fixed-time slice: boundary points as dots coloured by membership, the
/// cone section |x - x(p)| = tau as a dashed circle, and x(p).
/// Coordinates are the first two spatial axes; n = 1 uses (x, t).
struct SlicePoint {
  double x0 = 0.0;
  double x1 = 0.0;
  bool focus = false;
};

inline std::string render_slice_svg(const std::vector<SlicePoint>& pts, double px0, double px1,
                                    double cone_radius, double lo0, double hi0, double lo1, double hi1,
                                    const std::string& title, const SvgStyle& style) {
  const double span = std::max(hi0 - lo0, hi1 - lo1);
  const double pad = 0.08 * span;
  const double scale = style.size / (span + 2.0 * pad);
  auto X = [&](double v) { return detail::fmt_coord((v - lo0 + pad) * scale); };
  auto Y = [&](double v) { return detail::fmt_coord(style.size - (v - lo1 + pad) * scale); };
  const double dot = std::max(1.5, style.size / 160.0);
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(style.size) +
                  "\" height=\"" + std::to_string(style.size + 24) + "\" viewBox=\"0 0 " +
                  std::to_string(style.size) + " " + std::to_string(style.size + 24) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"6\" y=\"" + std::to_string(style.size + 18) + "\" font-family=\"sans-serif\" font-size=\"13\">" +
       title + "</text>\n";
  if (cone_radius > 0.0) {
    s += "<circle cx=\"" + X(px0) + "\" cy=\"" + Y(px1) + "\" r=\"" + detail::fmt_coord(cone_radius * scale) +
         "\" fill=\"none\" stroke=\"#888888\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (bool focus : {false, true}) {
    s += "<g fill=\"" + (focus ? style.focus_color : style.rest_color) + "\">\n";
    for (const auto& p : pts) {
      if (p.focus != focus) continue;
      s += "<circle cx=\"" + X(p.x0) + "\" cy=\"" + Y(p.x1) + "\" r=\"" + detail::fmt_coord(dot) + "\"/>\n";
    }
    s += "</g>\n";
  }
  s += "<circle cx=\"" + X(px0) + "\" cy=\"" + Y(px1) + "\" r=\"" + detail::fmt_coord(dot * 2.0) + "\" fill=\"" +
       style.point_color + "\"/>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace ultracarl
