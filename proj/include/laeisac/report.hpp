#pragma once

// Run artifacts: episodes.csv, summary.json, curves.svg, plus the sweep comparison table.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "laeisac/config.hpp"
#include "laeisac/experiment.hpp"

namespace laeisac {

inline constexpr const char* kEpisodesHeader =
    "episode,sum_rate,mean_snr_db,mission_ok,collisions,ma200_sum_rate,ma200_snr_db";

namespace report_detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::trunc);
  if (!os) throw std::runtime_error("report: cannot write " + p.string());
  return os;
}

// json cannot hold inf/nan; the SNR in dB is -inf for a zero echo.
inline nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace report_detail

inline void write_episodes_csv(std::ostream& os, const RunMetrics& m, std::size_t window) {
  const auto ma_rate = moving_average(column(m, &EpisodeMetrics::sum_rate), window);
  const auto ma_snr = moving_average_snr_db(m, window);
  os << kEpisodesHeader << '\n';
  for (std::size_t i = 0; i < m.episodes.size(); ++i) {
    const auto& e = m.episodes[i];
    os << e.episode << ',' << report_detail::num(e.sum_rate) << ',' << report_detail::num(e.mean_snr_db) << ','
       << (e.mission_ok ? 1 : 0) << ',' << e.collisions << ',' << report_detail::num(ma_rate[i]) << ','
       << report_detail::num(ma_snr[i]) << '\n';
  }
}

inline nlohmann::json summary_json(const RunSummary& s, const RunConfig& cfg) {
  using report_detail::finite_or_null;
  return nlohmann::json{
      {"scheme", cfg.scheme},
      {"seed", cfg.seed},
      {"episodes", s.episodes},
      {"aborted", s.aborted},
      {"ma_window", cfg.ma_window},
      {"final_ma_sum_rate", finite_or_null(s.final_ma_sum_rate)},
      {"mean_snr_db", finite_or_null(s.final_ma_snr_db)},
      {"snr_min_db", s.snr_min_db},
      {"snr_constraint_met", s.snr_constraint_met},
      {"mission_constraint_met", s.mission_constraint_met},
      {"collision_free", s.collision_free},
      {"mission_ok_rate", s.mission_ok_rate},
      {"convergence_episode", s.convergence_episode},
      {"mean_reward_first100", s.mean_reward_first},
      {"mean_reward_last100", s.mean_reward_last},
      {"wall_seconds", s.wall_seconds},
  };
}

/// Two stacked panels, one polyline each. Non-finite points are dropped.
inline void write_curves_svg(std::ostream& os, const RunMetrics& m, std::size_t window) {
  constexpr double W = 640, H = 240, pad = 40;
  const auto ma_rate = moving_average(column(m, &EpisodeMetrics::sum_rate), window);
  const auto ma_snr = moving_average_snr_db(m, window);
  auto polyline = [&](const std::vector<double>& ys, double y0, const char* colour) {
    double lo = INFINITY, hi = -INFINITY;
    for (double y : ys) {
      if (std::isfinite(y)) {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
    }
    if (!(hi > lo)) {
      lo = std::isfinite(lo) ? lo - 1.0 : 0.0;
      hi = lo + 2.0;
    }
    const double n = std::max<double>(1.0, static_cast<double>(ys.size()) - 1.0);
    std::ostringstream pts;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (!std::isfinite(ys[i])) continue;
      const double x = pad + (W - 2 * pad) * static_cast<double>(i) / n;
      const double y = y0 + pad + (H - 2 * pad) * (1.0 - (ys[i] - lo) / (hi - lo));
      pts << report_detail::num(x) << ',' << report_detail::num(y) << ' ';
    }
    os << "  <polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"" << pts.str()
       << "\"/>\n";
    os << "  <text x=\"4\" y=\"" << report_detail::num(y0 + pad - 6) << "\" font-size=\"11\">max "
       << report_detail::num(hi) << "</text>\n";
    os << "  <text x=\"4\" y=\"" << report_detail::num(y0 + H - pad + 14) << "\" font-size=\"11\">min "
       << report_detail::num(lo) << "</text>\n";
  };
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << 2 * H << "\" viewBox=\"0 0 "
     << W << ' ' << 2 * H << "\">\n";
  os << "  <text x=\"" << W / 2 << "\" y=\"16\" font-size=\"13\" text-anchor=\"middle\">moving-average sum rate"
     << " (bps/Hz), window " << window << "</text>\n";
  polyline(ma_rate, 0.0, "#1f77b4");
  os << "  <text x=\"" << W / 2 << "\" y=\"" << H + 16
     << "\" font-size=\"13\" text-anchor=\"middle\">moving-average sensing SNR (dB)</text>\n";
  polyline(ma_snr, H, "#d62728");
  os << "</svg>\n";
}

struct ReportFiles {
  std::filesystem::path csv, summary, svg;
};

inline ReportFiles report(const RunMetrics& m, const RunConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  ReportFiles f{dir / "episodes.csv", dir / "summary.json", dir / "curves.svg"};
  const auto w = static_cast<std::size_t>(cfg.ma_window);
  {
    auto os = report_detail::open_out(f.csv);
    write_episodes_csv(os, m, w);
  }
  {
    auto os = report_detail::open_out(f.summary);
    os << summary_json(summarize(m, cfg), cfg).dump(2) << '\n';
  }
  {
    auto os = report_detail::open_out(f.svg);
    write_curves_svg(os, m, w);
  }
  return f;
}

/// Plain-text table: one row per (scheme, metric), one column per swept value.
inline void write_sweep_table(std::ostream& os, const SweepResult& r) {
  const char* axis = r.axis == SweepAxis::m ? "M" : "T";
  os << "scheme,metric";
  for (int v : r.values) os << ',' << axis << '=' << v;
  os << '\n';
  auto row = [&](const std::string& s, const char* name, auto get) {
    os << s << ',' << name;
    for (int v : r.values) os << ',' << get(r.at(s, v).summary);
    os << '\n';
  };
  for (const auto& s : r.schemes) {
    row(s, "sum_rate", [](const RunSummary& x) { return report_detail::num(x.final_ma_sum_rate); });
    row(s, "snr_db", [](const RunSummary& x) { return report_detail::num(x.final_ma_snr_db); });
    row(s, "snr_constraint", [](const RunSummary& x) { return x.snr_constraint_met ? "yes" : "no"; });
    row(s, "mission_constraint", [](const RunSummary& x) { return x.mission_constraint_met ? "yes" : "no"; });
    row(s, "collision_free", [](const RunSummary& x) { return x.collision_free ? "yes" : "no"; });
  }
}

inline nlohmann::json sweep_json(const SweepResult& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"scheme", c.scheme},
                     {"value", c.value},
                     {"final_ma_sum_rate", report_detail::finite_or_null(c.summary.final_ma_sum_rate)},
                     {"mean_snr_db", report_detail::finite_or_null(c.summary.final_ma_snr_db)},
                     {"snr_constraint_met", c.summary.snr_constraint_met},
                     {"mission_constraint_met", c.summary.mission_constraint_met},
                     {"collision_free", c.summary.collision_free}});
  }
  return {{"axis", r.axis == SweepAxis::m ? "m" : "t"}, {"values", r.values}, {"schemes", r.schemes}, {"cells", cells}};
}

}  // namespace laeisac
