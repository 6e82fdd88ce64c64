#include "drivetraits/scatter_svg.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "drivetraits/errors.hpp"

namespace drivetraits {

void write_scatter_svg(const std::filesystem::path& file,
                       const Eigen::Ref<const Eigen::VectorXd>& truth,
                       const Eigen::Ref<const Eigen::VectorXd>& predicted,
                       const std::string& title) {
  if (truth.size() != predicted.size() || truth.size() == 0) {
    throw ValidationError("scatter plot needs equal-length nonempty vectors");
  }
  const double w = 480, h = 360, margin = 48;

  double lo = std::min(truth.minCoeff(), predicted.minCoeff());
  double hi = std::max(truth.maxCoeff(), predicted.maxCoeff());
  if (hi <= lo) {
    lo -= 1;
    hi += 1;
  }
  const double pad = 0.06 * (hi - lo);
  lo -= pad;
  hi += pad;

  auto sx = [&](double v) { return margin + (v - lo) / (hi - lo) * (w - 2 * margin); };
  auto sy = [&](double v) { return h - margin - (v - lo) / (hi - lo) * (h - 2 * margin); };

  std::ofstream out(file);
  if (!out) throw IoError("cannot write svg " + file.string());
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"360\" "
         "viewBox=\"0 0 480 360\">\n";
  out << "<rect width=\"480\" height=\"360\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                "stroke=\"black\"/>\n",
                margin, h - margin, w - margin, h - margin);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                "stroke=\"black\"/>\n",
                margin, margin, margin, h - margin);
  out << buf;
  // identity line
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                "stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n",
                sx(lo), sy(lo), sx(hi), sy(hi));
  out << buf;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3.5\" fill=\"#2166ac\" "
                  "fill-opacity=\"0.8\"/>\n",
                  sx(truth[i]), sy(predicted[i]));
    out << buf;
  }
  out << "<text x=\"240\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << title << "</text>\n";
  out << "<text x=\"240\" y=\"350\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"11\">true</text>\n";
  out << "<text x=\"14\" y=\"180\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"11\" transform=\"rotate(-90 14 180)\">predicted</text>\n";
  out << "</svg>\n";
}

}  // namespace drivetraits
