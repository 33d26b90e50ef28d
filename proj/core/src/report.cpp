#include "cretok/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>

#include "cretok/error.hpp"
#include "cretok/io.hpp"

namespace cretok::eval {

namespace fs = std::filesystem;

std::vector<LogRow> parse_train_log(std::string_view text, std::string_view source) {
  const auto table = io::parse_csv(text, source);
  if (io::csv_join(table.header) != "step,lr,loss,mean_cos")
    throw Error(ErrorCode::kMalformedRecord, std::string(source) + ": unexpected training log header");
  std::vector<LogRow> rows;
  rows.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    try {
      rows.push_back({std::stoll(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3])});
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kMalformedRecord, fmt::format("{}:{}: bad number", source, table.lines[i]));
    }
  }
  return rows;
}

std::vector<LogRow> read_train_log(const fs::path& path) { return parse_train_log(io::read_file(path), path.string()); }

namespace {

constexpr std::array<std::string_view, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                   "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

Series reduce(const Series& s, std::size_t max_points) {
  if (s.x.size() <= max_points || max_points == 0) return s;
  Series out{s.label, {}, {}};
  const std::size_t bucket = (s.x.size() + max_points - 1) / max_points;
  for (std::size_t i = 0; i < s.x.size(); i += bucket) {
    const std::size_t end = std::min(s.x.size(), i + bucket);
    double sx = 0, sy = 0;
    for (std::size_t j = i; j < end; ++j) {
      sx += s.x[j];
      sy += s.y[j];
    }
    out.x.push_back(sx / static_cast<double>(end - i));
    out.y.push_back(sy / static_cast<double>(end - i));
  }
  return out;
}

std::string tick(double v) { return fmt::format("{:.4g}", v); }

}  // namespace

std::string line_chart_svg(std::string_view title, std::string_view x_label, std::string_view y_label,
                           std::span<const Series> series, std::size_t max_points) {
  constexpr double W = 640, H = 400, L = 70, R = 160, T = 40, B = 50;
  std::vector<Series> data;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    data.push_back(reduce(s, max_points));
    for (std::size_t i = 0; i < data.back().x.size(); ++i) {
      const double x = data.back().x[i], y = data.back().y[i];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      W, H, W, H);
  svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", W, H);
  svg += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", (W - R + L) / 2,
                     xml_escape(title));
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", L, T,
                     W - L - R, H - T - B);
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", px(xv), H - B + 16, tick(xv));
    svg += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", L - 6, py(yv) + 4, tick(yv));
    svg += fmt::format("<line x1=\"{}\" x2=\"{}\" y1=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#ddd\"/>\n", L, W - R, py(yv),
                       py(yv));
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (W - R + L) / 2, H - 12,
                     xml_escape(x_label));
  svg += fmt::format("<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
                     (H - B + T) / 2, (H - B + T) / 2, xml_escape(y_label));

  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto colour = kPalette[k % kPalette.size()];
    std::string points;
    for (std::size_t i = 0; i < data[k].x.size(); ++i) {
      if (!std::isfinite(data[k].x[i]) || !std::isfinite(data[k].y[i])) continue;
      points += fmt::format("{}{:.2f},{:.2f}", points.empty() ? "" : " ", px(data[k].x[i]), py(data[k].y[i]));
    }
    const char* marker = data[k].x.size() == 1 ? "circle" : "polyline";
    if (std::string_view(marker) == "circle" && !points.empty()) {
      svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(data[k].x[0]),
                         py(data[k].y[0]), colour);
    } else {
      svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", colour, points);
    }
    const double ly = T + 14 + 18.0 * static_cast<double>(k);
    svg += fmt::format("<line x1=\"{}\" x2=\"{}\" y1=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n", W - R + 12,
                       W - R + 32, ly - 4, ly - 4, colour);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", W - R + 38, ly, xml_escape(data[k].label));
  }
  svg += "</svg>\n";
  return svg;
}

namespace {

std::string two_panel(const std::string& top, const std::string& bottom) {
  auto body = [](const std::string& svg) {
    const auto open = svg.find('>') + 1;
    return svg.substr(open, svg.rfind("</svg>") - open);
  };
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"800\" viewBox=\"0 0 640 800\" "
         "font-family=\"sans-serif\" font-size=\"12\">\n<g>" +
         body(top) + "</g>\n<g transform=\"translate(0 400)\">" + body(bottom) + "</g>\n</svg>\n";
}

std::string theta_label(const TrainingCurve& c) {
  return c.theta ? fmt::format("theta={}", *c.theta) : c.label;
}

void write(const fs::path& dir, const std::string& name, std::string_view text, ReportOutput& out) {
  io::write_file_atomic(dir / name, text);
  out.files.emplace_back(name);
}

}  // namespace

ReportOutput emit_training_plots(std::span<const TrainingCurve> curves, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  ReportOutput out;
  if (curves.empty()) {
    out.notices.push_back("Convergence plot omitted: no training logs.");
  } else {
    std::vector<Series> loss, cos;
    for (const auto& c : curves) {
      Series l{theta_label(c), {}, {}}, m{theta_label(c), {}, {}};
      for (const auto& r : c.rows) {
        l.x.push_back(static_cast<double>(r.step));
        l.y.push_back(r.loss);
        m.x.push_back(static_cast<double>(r.step));
        m.y.push_back(r.mean_cos);
      }
      loss.push_back(std::move(l));
      cos.push_back(std::move(m));
    }
    write(out_dir, "convergence.svg",
          two_panel(line_chart_svg("Training loss", "step", "loss", loss),
                    line_chart_svg("Mean cosine similarity", "step", "mean cos", cos)),
          out);

    std::vector<const TrainingCurve*> with_theta;
    for (const auto& c : curves)
      if (c.theta && !c.rows.empty()) with_theta.push_back(&c);
    std::sort(with_theta.begin(), with_theta.end(),
              [](const TrainingCurve* a, const TrainingCurve* b) { return *a->theta < *b->theta; });
    if (with_theta.size() < 2) {
      out.notices.push_back("Threshold ablation plot omitted: fewer than two runs with a known theta.");
    } else {
      std::vector<Series> series;
      std::string csv = "theta,label,final_step,final_mean_cos\n";
      for (const auto* c : with_theta) {
        Series s{theta_label(*c), {}, {}};
        for (const auto& r : c->rows) {
          s.x.push_back(static_cast<double>(r.step));
          s.y.push_back(r.mean_cos);
        }
        series.push_back(std::move(s));
        csv += io::csv_join({fmt::format("{}", *c->theta), c->label, std::to_string(c->rows.back().step),
                             fmt::format("{:.9g}", c->rows.back().mean_cos)}) +
               "\n";
      }
      write(out_dir, "theta_ablation.svg",
            line_chart_svg("Mean cosine by clamp threshold", "step", "mean cos", series), out);
      write(out_dir, "theta_ablation.csv", csv, out);
    }
  }

  return out;
}

ReportOutput emit_report(const ReportInputs& inputs, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  ReportOutput out;

  std::set<std::string> method_set;
  for (const auto& a : inputs.scores) method_set.insert(a.method);
  for (const auto& m : kTableMethods) method_set.insert(m);
  const auto methods = order_methods({method_set.begin(), method_set.end()});
  const std::string header_methods = io::csv_join(methods);

  // Table 1: alignment / preference metrics.
  {
    std::vector<std::string> metrics;
    std::map<std::pair<std::string, std::string>, const Aggregate*> cell;
    for (const auto& a : inputs.scores) {
      if (a.kind == ScorerKind::kJudge) continue;
      if (std::find(metrics.begin(), metrics.end(), a.metric) == metrics.end()) metrics.push_back(a.metric);
      cell[{a.metric, a.method}] = &a;
    }
    std::stable_sort(metrics.begin(), metrics.end(), [&](const std::string& a, const std::string& b) {
      auto kind = [&](const std::string& m) {
        for (const auto& x : inputs.scores)
          if (x.metric == m) return static_cast<int>(x.kind);
        return 0;
      };
      return kind(a) < kind(b);
    });
    if (metrics.empty()) {
      out.notices.push_back("Alignment/preference table omitted: no alignment or preference scores.");
    } else {
      std::string t = "metric," + header_methods + "\n";
      for (const auto& m : metrics) {
        std::vector<std::string> row{m};
        for (const auto& meth : methods) {
          const auto it = cell.find({m, meth});
          row.push_back(it == cell.end() ? "" : it->second->stats.format(3));
        }
        t += io::csv_join(row) + "\n";
      }
      write(out_dir, "table1_alignment_preference.csv", t, out);
    }
  }

  // Table 2: judge criteria.
  {
    std::map<std::pair<std::string, std::string>, const Aggregate*> cell;
    std::set<std::string> judged;
    for (const auto& a : inputs.scores) {
      if (a.kind != ScorerKind::kJudge) continue;
      cell[{a.method, a.metric}] = &a;
      judged.insert(a.method);
    }
    if (judged.empty()) {
      out.notices.push_back("Judge table omitted: no judge scores.");
    } else {
      std::string t = "method,Integ.,Align.,Orig.,Aesth.,Compr.\n";
      for (const auto& meth : order_methods({judged.begin(), judged.end()})) {
        std::vector<std::string> row{meth};
        for (auto name : JudgeScores::kNames) {
          const auto it = cell.find({meth, std::string(name)});
          row.push_back(it == cell.end() ? "" : it->second->stats.format(1));
        }
        t += io::csv_join(row) + "\n";
      }
      write(out_dir, "table2_judge.csv", t, out);
    }
  }

  // Table 3 and the per-pair breakdown.
  if (inputs.rankings.empty()) {
    out.notices.push_back("User-study tables omitted: no ranking records.");
  } else {
    const auto summary = aggregate_rankings(inputs.rankings);
    std::string t3 = "metric," + io::csv_join(summary.methods) + "\n";
    std::vector<std::string> row{"avg_rank"};
    for (const auto& m : summary.methods) row.push_back(summary.overall.at(m).format(1));
    t3 += io::csv_join(row) + "\n";
    write(out_dir, "table3_user_study.csv", t3, out);

    std::string c1 = "pair,pair_first,pair_second,responses," + io::csv_join(summary.methods) + "\n";
    for (std::size_t i = 0; i < summary.per_pair.size(); ++i) {
      const auto& p = summary.per_pair[i];
      std::vector<std::string> r{std::to_string(i + 1), p.pair_first, p.pair_second, std::to_string(p.responses)};
      for (const auto& m : summary.methods) r.push_back(fmt::format("{:.2f}", p.mean_rank.at(m)));
      c1 += io::csv_join(r) + "\n";
    }
    write(out_dir, "table_c1_per_pair.csv", c1, out);
  }

  const auto plots = emit_training_plots(inputs.curves, out_dir);
  out.files.insert(out.files.end(), plots.files.begin(), plots.files.end());
  out.notices.insert(out.notices.end(), plots.notices.begin(), plots.notices.end());

  std::string md = "# Report\n\n";
  for (const auto& f : out.files) md += "- " + f.string() + "\n";
  if (!out.notices.empty()) {
    md += "\n## Notices\n\n";
    for (const auto& n : out.notices) md += "- " + n + "\n";
  }
  md += "\nValues are mean±std; std is the population standard deviation (divide by N).\n";
  io::write_file_atomic(out_dir / "report.md", md);
  out.files.emplace_back("report.md");
  return out;
}

}  // namespace cretok::eval
