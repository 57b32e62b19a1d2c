#include "latlab/trace_io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace latlab {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(const std::string& field, std::size_t line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE)
    throw std::runtime_error("csv line " + std::to_string(line_no) + ": bad number '" + field +
                             "'");
  return v;
}

// Column layout shared by the CSV writer, the CSV reader and the plotter.
constexpr int kFixedCols = 9;  // t + states + inputs

double value_at(const Trace& trace, std::size_t col, std::size_t row) {
  switch (col) {
    case 0: return trace.t[row];
    case 1: return trace.x_true[row](0);
    case 2: return trace.x_true[row](1);
    case 3: return trace.x_nominal[row](0);
    case 4: return trace.x_nominal[row](1);
    case 5: return trace.u_nominal[row](0);
    case 6: return trace.u_injected[row](0);
    case 7: return trace.u_nominal[row](1);
    case 8: return trace.u_injected[row](1);
    default: break;
  }
  const std::size_t k = (col - kFixedCols) / 3;
  if (k < static_cast<std::size_t>(trace.output_dim)) {
    const auto ch = static_cast<long>(k);
    switch ((col - kFixedCols) % 3) {
      case 0: return trace.y_true[row](ch);
      case 1: return trace.y_received[row](ch);
      default: return trace.y_nominal[row](ch);
    }
  }
  return static_cast<double>(trace.clipped[row]);
}

}  // namespace

std::vector<std::string> trace_channels(const Trace& trace) {
  std::vector<std::string> names = {"t",      "vy_true",   "r_true", "vy_nom",   "r_nom",
                                    "mz_nom", "mz_inj",    "delta_nom", "delta_inj"};
  for (int k = 0; k < trace.output_dim; ++k) {
    names.push_back("y_true_" + std::to_string(k));
    names.push_back("y_recv_" + std::to_string(k));
    names.push_back("y_nom_" + std::to_string(k));
  }
  names.emplace_back("clipped");
  return names;
}

std::string trace_to_csv(const Trace& trace) {
  const std::vector<std::string> names = trace_channels(trace);
  std::string out;
  out.reserve(trace.rows() * names.size() * 14 + 256);
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (c) out += ',';
    out += names[c];
  }
  out += '\n';
  const std::size_t cols = names.size();
  for (std::size_t i = 0; i < trace.rows(); ++i) {
    for (std::size_t c = 0; c + 1 < cols; ++c) {
      if (c) out += ',';
      out += fmt("%.17g", value_at(trace, c, i));
    }
    out += ',';
    out += trace.clipped[i] ? '1' : '0';
    out += '\n';
  }
  return out;
}

void emit_csv(const Trace& trace, const std::string& path) {
  write_file_atomic(path, trace_to_csv(trace));
}

Trace trace_from_csv(const std::string& text) {
  std::vector<std::string> lines = split(text, '\n');
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() < 3) throw std::runtime_error("csv: need a header and at least two rows");

  const std::vector<std::string> header = split(lines[0], ',');
  const std::size_t cols = header.size();
  if (cols < kFixedCols + 4 || (cols - kFixedCols - 1) % 3 != 0)
    throw std::runtime_error("csv: unexpected column layout");
  const int p = static_cast<int>((cols - kFixedCols - 1) / 3);

  Trace probe;
  probe.output_dim = p;
  const std::vector<std::string> expected = trace_channels(probe);
  for (std::size_t c = 0; c < cols; ++c)
    if (header[c] != expected[c])
      throw std::runtime_error("csv: unexpected column '" + header[c] + "'");

  Trace trace;
  trace.output_dim = p;
  const std::size_t rows = lines.size() - 1;
  trace.t.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::vector<std::string> fields = split(lines[i + 1], ',');
    if (fields.size() != cols)
      throw std::runtime_error("csv line " + std::to_string(i + 2) + ": wrong field count");
    auto fd = [&](std::size_t c) { return parse_double(fields[c], i + 2); };
    trace.t.push_back(fd(0));
    trace.x_true.emplace_back(fd(1), fd(2));
    trace.x_nominal.emplace_back(fd(3), fd(4));
    trace.u_nominal.emplace_back(fd(5), fd(7));
    trace.u_injected.emplace_back(fd(6), fd(8));
    Eigen::VectorXd yt(p), yr(p), yn(p);
    for (int k = 0; k < p; ++k) {
      yt(k) = fd(kFixedCols + 3 * k);
      yr(k) = fd(kFixedCols + 3 * k + 1);
      yn(k) = fd(kFixedCols + 3 * k + 2);
    }
    trace.y_true.push_back(std::move(yt));
    trace.y_received.push_back(std::move(yr));
    trace.y_nominal.push_back(std::move(yn));
    trace.clipped.push_back(fields[cols - 1] == "1" ? 1 : 0);
  }
  // The grid is reconstructed from the time column; the stored samples stay
  // exactly as written.
  trace.grid = TimeGrid(trace.t[0], trace.t[1] - trace.t[0], rows - 1);
  return trace;
}

Trace parse_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return trace_from_csv(text);
}

namespace {

constexpr double kW = 960.0, kH = 540.0;
constexpr double kMl = 70.0, kMr = 22.0, kMt = 42.0, kMb = 48.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string coord(double v) { return fmt("%.2f", v); }

}  // namespace

std::string trace_to_svg(const Trace& trace, const std::vector<std::string>& channels) {
  const std::vector<std::string> names = trace_channels(trace);
  std::vector<std::size_t> picked;
  for (const std::string& ch : channels) {
    const auto it = std::find(names.begin(), names.end(), ch);
    if (it == names.end()) throw UnknownChannelError("unknown trace channel '" + ch + "'");
    picked.push_back(static_cast<std::size_t>(it - names.begin()));
  }

  const std::size_t rows = trace.rows();
  double t_lo = 0.0, t_hi = 1.0, v_lo = 0.0, v_hi = 1.0;
  if (rows > 0) {
    t_lo = trace.t.front();
    t_hi = trace.t.back();
  }
  if (!picked.empty() && rows > 0) {
    v_lo = v_hi = value_at(trace, picked[0], 0);
    for (std::size_t c : picked)
      for (std::size_t i = 0; i < rows; ++i) {
        const double v = value_at(trace, c, i);
        v_lo = std::min(v_lo, v);
        v_hi = std::max(v_hi, v);
      }
  }
  if (!(t_hi > t_lo)) t_hi = t_lo + 1.0;
  if (!(v_hi > v_lo)) {
    v_lo -= 1.0;
    v_hi += 1.0;
  }
  const double pad = 0.04 * (v_hi - v_lo);
  v_lo -= pad;
  v_hi += pad;

  auto sx = [&](double t) { return kMl + (t - t_lo) / (t_hi - t_lo) * (kW - kMl - kMr); };
  auto sy = [&](double v) { return kH - kMb - (v - v_lo) / (v_hi - v_lo) * (kH - kMt - kMb); };

  std::string svg;
  svg.reserve(1 << 16);
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + coord(kW) + " " + coord(kH) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"" + coord(kW) + "\" height=\"" + coord(kH) + "\" fill=\"white\"/>\n";

  // Gridlines and tick labels.
  for (int k = 0; k <= 5; ++k) {
    const double f = static_cast<double>(k) / 5.0;
    const double tx = t_lo + f * (t_hi - t_lo);
    const double vy = v_lo + f * (v_hi - v_lo);
    svg += "<line x1=\"" + coord(sx(tx)) + "\" y1=\"" + coord(kMt) + "\" x2=\"" + coord(sx(tx)) +
           "\" y2=\"" + coord(kH - kMb) + "\" stroke=\"#e0e0e0\"/>\n";
    svg += "<line x1=\"" + coord(kMl) + "\" y1=\"" + coord(sy(vy)) + "\" x2=\"" +
           coord(kW - kMr) + "\" y2=\"" + coord(sy(vy)) + "\" stroke=\"#e0e0e0\"/>\n";
    svg += "<text x=\"" + coord(sx(tx)) + "\" y=\"" + coord(kH - kMb + 16.0) +
           "\" text-anchor=\"middle\">" + fmt("%.6g", tx) + "</text>\n";
    svg += "<text x=\"" + coord(kMl - 6.0) + "\" y=\"" + coord(sy(vy) + 4.0) +
           "\" text-anchor=\"end\">" + fmt("%.6g", vy) + "</text>\n";
  }
  svg += "<rect x=\"" + coord(kMl) + "\" y=\"" + coord(kMt) + "\" width=\"" +
         coord(kW - kMl - kMr) + "\" height=\"" + coord(kH - kMt - kMb) +
         "\" fill=\"none\" stroke=\"#404040\"/>\n";
  svg += "<text x=\"" + coord((kMl + kW - kMr) / 2.0) + "\" y=\"" + coord(kH - 10.0) +
         "\" text-anchor=\"middle\">t [s]</text>\n";

  // One polyline per channel, stride-thinned to keep files small.
  const std::size_t stride = rows > 2000 ? (rows + 1999) / 2000 : 1;
  for (std::size_t n = 0; n < picked.size(); ++n) {
    const char* color = kPalette[n % (sizeof kPalette / sizeof kPalette[0])];
    svg += "<polyline fill=\"none\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"1.3\" points=\"";
    for (std::size_t i = 0; i < rows; i += stride) {
      svg += coord(sx(trace.t[i]));
      svg += ',';
      svg += coord(sy(value_at(trace, picked[n], i)));
      svg += ' ';
    }
    if (rows > 0 && (rows - 1) % stride != 0) {
      svg += coord(sx(trace.t[rows - 1]));
      svg += ',';
      svg += coord(sy(value_at(trace, picked[n], rows - 1)));
    }
    svg += "\"/>\n";
    const double lx = kMl + 8.0 + 150.0 * static_cast<double>(n);
    svg += "<line x1=\"" + coord(lx) + "\" y1=\"" + coord(kMt - 14.0) + "\" x2=\"" +
           coord(lx + 18.0) + "\" y2=\"" + coord(kMt - 14.0) + "\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"3\"/>\n";
    svg += "<text x=\"" + coord(lx + 23.0) + "\" y=\"" + coord(kMt - 10.0) + "\">" +
           channels[n] + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void emit_plot(const Trace& trace, const std::vector<std::string>& channels,
               const std::string& path) {
  write_file_atomic(path, trace_to_svg(trace, channels));
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("rename " + tmp + " -> " + path + ": " + ec.message());
}

}  // namespace latlab
