#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "maxmin/harness.hpp"

namespace maxmin {

namespace {

struct Series {
  std::string label;
  std::vector<double> y;  // x is the timestep index
  std::string color;
  bool dashed = false;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string svg_line_plot(const std::vector<Series>& series, const std::string& title,
                          const std::string& ylabel, double asymptote = std::nan(""),
                          const std::string& asymptote_label = "") {
  const double width = 760, height = 430;
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  std::size_t max_len = 1;
  for (const auto& s : series) {
    for (double v : s.y) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
    max_len = std::max(max_len, s.y.size());
  }
  if (!std::isnan(asymptote)) {
    ymin = std::min(ymin, asymptote);
    ymax = std::max(ymax, asymptote);
  }
  if (!std::isfinite(ymin)) {
    ymin = 0.0;
    ymax = 1.0;
  }
  if (ymax - ymin < 1e-12) {
    ymax += 1.0;
    ymin -= 1.0;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto sx = [&](double t) {
    return ml + (width - ml - mr) * (max_len > 1 ? t / (max_len - 1) : 0.5);
  };
  auto sy = [&](double v) { return mt + (height - mt - mb) * (1.0 - (v - ymin) / (ymax - ymin)); };

  std::ostringstream out;
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
         "font-family=\"sans-serif\">" << title << "</text>\n";

  // axes and ticks
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml,
                height - mb, width - mr, height - mb);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml, mt,
                ml, height - mb);
  out << buf;
  for (int k = 0; k <= 4; ++k) {
    const double v = ymin + (ymax - ymin) * k / 4.0;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" text-anchor=\"end\" font-size=\"11\" "
                  "font-family=\"sans-serif\">%.3g</text>\n",
                  ml - 6, sy(v) + 4, v);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"#dddddd\"/>\n", ml,
                  sy(v), width - mr, sy(v));
    out << buf;
  }
  const double t_last = static_cast<double>(max_len - 1);
  for (int k = 0; k <= 5; ++k) {
    const double t = t_last * k / 5.0;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\" font-size=\"11\" "
                  "font-family=\"sans-serif\">%g</text>\n",
                  sx(t), height - mb + 18, std::round(t));
    out << buf;
  }
  out << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">timestep"
         "</text>\n";
  out << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" "
         "transform=\"rotate(-90 16 "
      << (mt + height - mb) / 2 << ")\">" << ylabel << "</text>\n";

  if (!std::isnan(asymptote)) {
    std::snprintf(buf, sizeof(buf),
                  "<line class=\"optimal-asymptote\" x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" "
                  "stroke=\"#444444\" stroke-dasharray=\"6,4\"/>\n",
                  ml, sy(asymptote), width - mr, sy(asymptote));
    out << buf;
    out << "<text x=\"" << width - mr - 4 << "\" y=\"" << sy(asymptote) - 5
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
        << asymptote_label << "</text>\n";
  }

  int legend_y = static_cast<int>(mt) + 8;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& sr = series[s];
    out << "<polyline fill=\"none\" stroke=\"" << sr.color << "\""
        << (sr.dashed ? " stroke-dasharray=\"4,3\"" : "") << " stroke-width=\"1.6\" points=\"";
    for (std::size_t t = 0; t < sr.y.size(); ++t) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", sx(static_cast<double>(t)), sy(sr.y[t]));
      out << buf;
    }
    out << "\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%g\" y1=\"%d\" x2=\"%g\" y2=\"%d\" stroke=\"%s\" "
                  "stroke-width=\"2\"/>\n",
                  ml + 10, legend_y, ml + 34, legend_y, sr.color.c_str());
    out << buf;
    out << "<text x=\"" << ml + 40 << "\" y=\"" << legend_y + 4
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << sr.label << "</text>\n";
    legend_y += 18;
  }
  out << "</svg>\n";
  return out.str();
}

std::vector<double> worst_series(const RunRecord& record) {
  std::vector<double> y;
  y.reserve(record.steps.size());
  for (const auto& ts : record.steps) y.push_back(ts.worst_instantaneous);
  return y;
}

}  // namespace

void write_report(const std::vector<RunRecord>& records, const std::string& out_dir) {
  if (records.empty()) throw std::invalid_argument("write_report: need at least one record");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("write_report: cannot create " + out_dir);

  std::vector<Series> overlay;
  double asymptote = std::nan("");
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& record = records[r];
    const std::string stem =
        record.algorithm + "_seed" + std::to_string(record.seed);
    {
      std::ofstream out(fs::path(out_dir) / (stem + ".csv"), std::ios::binary);
      if (!out) throw std::runtime_error("write_report: cannot write in " + out_dir);
      out << run_record_csv(record);
    }
    Series s;
    s.label = stem;
    s.y = worst_series(record);
    s.color = kPalette[r % 6];
    if (record.algorithm == "optimal") {
      s.dashed = true;
      asymptote = record.final_worst_instantaneous();
    }
    {
      std::ofstream out(fs::path(out_dir) / (stem + ".svg"));
      out << svg_line_plot({s}, "worst-agent instantaneous reward: " + stem,
                           "worst-agent reward");
    }
    overlay.push_back(std::move(s));
  }

  {
    std::ofstream out(fs::path(out_dir) / "overlay.svg");
    out << svg_line_plot(overlay, "worst-agent instantaneous reward", "worst-agent reward",
                         asymptote, std::isnan(asymptote) ? "" : "optimal steady state");
  }
  {
    std::ofstream out(fs::path(out_dir) / "summary.csv");
    out << "# report_summary_csv v1\n";
    out << "algorithm,seed,worst_cumulative,final_worst_instantaneous\n";
    char buf[160];
    for (const auto& record : records) {
      std::snprintf(buf, sizeof(buf), "%s,%llu,%.17g,%.17g\n", record.algorithm.c_str(),
                    static_cast<unsigned long long>(record.seed), record.worst_cumulative(),
                    record.final_worst_instantaneous());
      out << buf;
    }
  }
}

}  // namespace maxmin
