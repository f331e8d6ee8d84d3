#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "seiznet/experiments.hpp"

namespace seiznet {

namespace {

std::string cell(const Metric& m) { return m.defined ? format_number(m.value) : ""; }

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Series {
  std::string name;
  std::vector<double> x, y, lo, hi;
};

constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

// Line chart; log axes map through log10.
std::string chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                  const std::vector<Series>& series, bool log_x, bool log_y) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min({y0, ty(s.lo[i]), ty(s.y[i])});
      y1 = std::max({y1, ty(s.hi[i]), ty(s.y[i])});
    }
  }
  const bool empty = !(x0 <= x1);
  if (empty) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto sx = [&](double v) { return kLeft + (tx(v) - x0) / (x1 - x0) * pw; };
  auto sy = [&](double v) { return kTop + ph - (ty(v) - y0) / (y1 - y0) * ph; };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(kW) + "\" height=\"" + px(kH) +
                  "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + px(kW / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + title + "</text>\n";
  s += "<rect x=\"" + px(kLeft) + "\" y=\"" + px(kTop) + "\" width=\"" + px(pw) + "\" height=\"" + px(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4, fy = y0 + (y1 - y0) * k / 4;
    const double vx = log_x ? std::pow(10.0, fx) : fx, vy = log_y ? std::pow(10.0, fy) : fy;
    const double gx = kLeft + pw * k / 4, gy = kTop + ph - ph * k / 4;
    s += "<text x=\"" + px(gx) + "\" y=\"" + px(kTop + ph + 16) + "\" text-anchor=\"middle\">" +
         format_number(std::round(vx * 1000) / 1000) + "</text>\n";
    s += "<text x=\"" + px(kLeft - 6) + "\" y=\"" + px(gy + 4) + "\" text-anchor=\"end\">" +
         format_number(std::round(vy * 1000) / 1000) + "</text>\n";
  }
  s += "<text x=\"" + px(kLeft + pw / 2) + "\" y=\"" + px(kH - 10) + "\" text-anchor=\"middle\">" + xlabel +
       "</text>\n";
  s += "<text x=\"16\" y=\"" + px(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       px(kTop + ph / 2) + ")\">" + ylabel + "</text>\n";
  if (empty) {
    s += "<text x=\"" + px(kLeft + pw / 2) + "\" y=\"" + px(kTop + ph / 2) +
         "\" text-anchor=\"middle\">no data</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& sr = series[k];
    const std::string color = kColors[k % std::size(kColors)];
    std::string pts;
    for (std::size_t i = 0; i < sr.x.size(); ++i) {
      const double X = sx(sr.x[i]);
      pts += (i ? " " : "") + px(X) + "," + px(sy(sr.y[i]));
      if (sr.lo[i] != sr.hi[i]) {
        s += "<line x1=\"" + px(X) + "\" y1=\"" + px(sy(sr.lo[i])) + "\" x2=\"" + px(X) + "\" y2=\"" +
             px(sy(sr.hi[i])) + "\" stroke=\"" + color + "\"/>\n";
      }
      if (sr.x.size() <= 200) {
        s += "<circle cx=\"" + px(X) + "\" cy=\"" + px(sy(sr.y[i])) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
      }
    }
    if (sr.x.size() > 1) s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\"/>\n";
    s += "<text x=\"" + px(kW - kRight + 10) + "\" y=\"" + px(kTop + 14 + 16.0 * static_cast<double>(k)) +
         "\" fill=\"" + color + "\">" + sr.name + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace

std::string trace_svg(const std::string& title, std::span<const double> probability, std::span<const std::uint8_t> ref,
                      double threshold) {
  Series p{"probability", {}, {}, {}, {}}, a{"reference", {}, {}, {}, {}}, t{"threshold", {}, {}, {}, {}};
  for (std::size_t i = 0; i < probability.size(); ++i) {
    const double x = static_cast<double>(i) / 60.0;
    p.x.push_back(x);
    p.y.push_back(probability[i]);
    if (i < ref.size()) a.x.push_back(x), a.y.push_back(ref[i] ? 1.0 : 0.0);
  }
  p.lo = p.hi = p.y;
  a.lo = a.hi = a.y;
  if (!p.x.empty()) {
    t.x = {p.x.front(), p.x.back()};
    t.y = t.lo = t.hi = {threshold, threshold};
  }
  std::vector<Series> all;
  for (auto* s : {&p, &a, &t}) {
    if (!s->x.empty()) all.push_back(std::move(*s));
  }
  return chart(title, "time (min)", "probability", all, false, false);
}

std::string format_scaling_csv(const ScalingRunResult& r) {
  std::string s = "axis,x,label,trial,seed,train_size,diverged";
  for (const auto& m : scaling_metrics()) s += "," + m;
  s += "\n";
  for (const auto& p : r.points) {
    for (std::size_t t = 0; t < p.trials.size(); ++t) {
      const auto& tr = p.trials[t];
      s += axis_name(r.axis) + "," + format_number(p.x) + "," + p.label + "," + std::to_string(t) + "," +
           std::to_string(tr.seed) + "," + std::to_string(tr.train_size) + "," + (tr.diverged ? "1" : "0");
      for (const auto& m : scaling_metrics()) s += "," + (tr.diverged ? std::string() : cell(metric_by_name(tr.metrics, m)));
      s += "\n";
    }
  }
  return s;
}

std::string format_fit_csv(const ScalingRunResult& r) {
  std::string s = "metric,exponent,coefficient,points,reason\n";
  for (std::size_t i = 0; i < r.metrics.size() && i < r.fits.size(); ++i) {
    const auto& f = r.fits[i];
    s += r.metrics[i] + "," + (f.defined ? format_number(f.exponent) : "") + "," +
         (f.defined ? format_number(f.coefficient) : "") + "," + std::to_string(f.points) + "," + f.reason + "\n";
  }
  return s;
}

std::string format_montage_csv(const MontageStressResult& r) {
  std::string s = "fraction,affected,trials,auc_degradation_pct,mcc_degradation_pct\n";
  for (const auto& c : r.cells) {
    s += format_number(c.fraction) + "," + std::to_string(c.affected) + "," + std::to_string(c.trials) + "," +
         cell(c.auc_degradation) + "," + cell(c.mcc_degradation) + "\n";
  }
  return s;
}

std::string scaling_svg(const ScalingRunResult& r, std::string_view metric) {
  Series sr;
  sr.name = std::string(metric);
  bool positive = true;
  for (const auto& p : r.points) {
    std::vector<double> v;
    for (const auto& t : p.trials) {
      if (t.diverged) continue;
      const Metric m = metric_by_name(t.metrics, metric);
      if (m.defined) v.push_back(m.value);
    }
    if (v.empty() || !(p.x > 0)) continue;
    double sum = 0;
    for (double x : v) sum += x;
    sr.x.push_back(p.x);
    sr.y.push_back(sum / static_cast<double>(v.size()));
    sr.lo.push_back(*std::min_element(v.begin(), v.end()));
    sr.hi.push_back(*std::max_element(v.begin(), v.end()));
    if (!(sr.lo.back() > 0)) positive = false;
  }
  const std::string xlabel = r.axis == ScalingAxis::kModel ? "parameters" : axis_name(r.axis);
  return chart(std::string(metric) + " vs " + xlabel, xlabel, std::string(metric), {sr}, true, positive);
}

std::string montage_svg(const MontageStressResult& r, std::string_view metric) {
  if (metric != "auc" && metric != "mcc") throw std::invalid_argument("montage_svg: metric must be auc or mcc");
  std::vector<Series> series;
  for (std::size_t k = 1; k < std::max<std::size_t>(r.channels, 1); ++k) {
    Series sr;
    sr.name = std::to_string(k) + " channel" + (k == 1 ? "" : "s");
    for (const auto& c : r.cells) {
      if (c.affected != k) continue;
      const Metric& m = metric == "auc" ? c.auc_degradation : c.mcc_degradation;
      if (!m.defined) continue;
      sr.x.push_back(c.fraction);
      sr.y.push_back(m.value);
      sr.lo.push_back(m.value);
      sr.hi.push_back(m.value);
    }
    if (!sr.x.empty()) series.push_back(std::move(sr));
  }
  const std::string name = metric == "auc" ? "AUC" : "MCC";
  return chart(name + " degradation", "drop fraction", name + " degradation (%)", series, false, false);
}

void emit_report(const ScalingRunResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "scaling.csv", format_scaling_csv(r));
  write_text(dir / "scaling_fit.csv", format_fit_csv(r));
  for (const auto& m : r.metrics) write_text(dir / ("scaling_" + m + ".svg"), scaling_svg(r, m));
}

void emit_report(const MontageStressResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "montage.csv", format_montage_csv(r));
  write_text(dir / "montage_auc.svg", montage_svg(r, "auc"));
  write_text(dir / "montage_mcc.svg", montage_svg(r, "mcc"));
}

}  // namespace seiznet
