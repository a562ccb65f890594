// Copyright 2026 The MIA Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mia/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "mia/errors.h"
#include "mia/io.h"
#include "mia/math_util.h"

namespace mia {

using nlohmann::json;

namespace {

std::string GridLabel(double f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "tpr@%g", f);
  return buf;
}

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

json CurveToJson(const RocCurve& c) {
  return {{"thresholds", c.thresholds},         {"tp_mass", c.tp_mass},
          {"fp_mass", c.fp_mass},               {"member_total", c.member_total},
          {"nonmember_total", c.nonmember_total}};
}

RocCurve CurveFromJson(const json& j) {
  RocCurve c;
  c.thresholds = j.at("thresholds").get<std::vector<double>>();
  c.tp_mass = j.at("tp_mass").get<std::vector<double>>();
  c.fp_mass = j.at("fp_mass").get<std::vector<double>>();
  c.member_total = j.at("member_total").get<double>();
  c.nonmember_total = j.at("nonmember_total").get<double>();
  if (c.tp_mass.size() != c.fp_mass.size() || c.thresholds.size() + 1 != c.tp_mass.size()) {
    throw InvalidInputError("results.json: inconsistent ROC curve lengths");
  }
  return c;
}

}  // namespace

std::vector<double> MakeFprGrid(std::span<const double> extra) {
  std::vector<double> grid = StandardFprGrid();
  for (double f : extra) {
    if (!(f >= 0.0 && f <= 1.0)) throw InvalidInputError("FPR grid values must lie in [0, 1]");
    grid.push_back(f);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

AttackResult SummarizeAttack(const std::string& attack, const std::string& dataset,
                             std::vector<RocCurve> curves, std::span<const double> fpr_grid) {
  AttackResult r;
  r.attack = attack;
  r.dataset = dataset;
  for (const RocCurve& c : curves) {
    r.auc_per_run.push_back(Auc(c));
    std::vector<double> row;
    for (double f : fpr_grid) row.push_back(TprAtFpr(c, f));
    r.tpr_per_run.push_back(std::move(row));
  }
  r.curves = std::move(curves);
  if (!r.curves.empty()) r.mean_curve = AverageRuns(r.curves);
  return r;
}

EvalReport BuildReport(std::span<const AttackScores> scores, const std::string& dataset,
                       std::span<const double> fpr_grid) {
  EvalReport report;
  report.fpr_grid.assign(fpr_grid.begin(), fpr_grid.end());
  std::vector<std::string> order;
  std::map<std::string, std::vector<RocCurve>> curves;
  for (const AttackScores& s : scores) {
    if (!curves.count(s.attack)) order.push_back(s.attack);
    curves[s.attack].push_back(BuildRoc(s));
  }
  for (const std::string& name : order) {
    report.attacks.push_back(SummarizeAttack(name, dataset, std::move(curves[name]), fpr_grid));
  }
  return report;
}

json ReportToJson(const EvalReport& report) {
  json attacks = json::array();
  for (const AttackResult& a : report.attacks) {
    json curves = json::array();
    for (const RocCurve& c : a.curves) curves.push_back(CurveToJson(c));
    attacks.push_back({{"attack", a.attack},
                       {"dataset", a.dataset},
                       {"auc_per_run", a.auc_per_run},
                       {"tpr_per_run", a.tpr_per_run},
                       {"curves", curves},
                       {"mean_curve",
                        {{"fpr", a.mean_curve.fpr},
                         {"mean_tpr", a.mean_curve.mean_tpr},
                         {"stderr_tpr", a.mean_curve.stderr_tpr}}}});
  }
  json j = {{"format", "mia-results"},
            {"version", 1},
            {"fpr_grid", report.fpr_grid},
            {"attacks", attacks},
            {"metadata", report.metadata},
            {"diagnostics", report.diagnostics}};
  if (report.pca) {
    json pts = json::array();
    for (const auto& p : report.pca->scatter) pts.push_back({p.set, p.pc1, p.pc2});
    j["pca"] = {{"explained_variance", report.pca->explained_variance}, {"scatter", pts}};
  }
  return j;
}

EvalReport ReportFromJson(const json& j) {
  if (j.value("format", "") != "mia-results" || j.value("version", 0) != 1) {
    throw InvalidInputError("not a mia-results v1 document");
  }
  EvalReport r;
  try {
    r.fpr_grid = j.at("fpr_grid").get<std::vector<double>>();
    for (const json& a : j.at("attacks")) {
      AttackResult ar;
      ar.attack = a.at("attack").get<std::string>();
      ar.dataset = a.at("dataset").get<std::string>();
      ar.auc_per_run = a.at("auc_per_run").get<std::vector<double>>();
      ar.tpr_per_run = a.at("tpr_per_run").get<std::vector<std::vector<double>>>();
      for (const json& c : a.at("curves")) ar.curves.push_back(CurveFromJson(c));
      const json& m = a.at("mean_curve");
      ar.mean_curve.fpr = m.at("fpr").get<std::vector<double>>();
      ar.mean_curve.mean_tpr = m.at("mean_tpr").get<std::vector<double>>();
      ar.mean_curve.stderr_tpr = m.at("stderr_tpr").get<std::vector<double>>();
      r.attacks.push_back(std::move(ar));
    }
    r.metadata = j.at("metadata");
    r.diagnostics = j.at("diagnostics");
    if (j.contains("pca")) {
      PcaDiagnostics p;
      p.explained_variance = j["pca"].at("explained_variance").get<std::vector<double>>();
      for (const json& pt : j["pca"].at("scatter")) {
        p.scatter.push_back({pt.at(0).get<std::string>(), pt.at(1).get<double>(),
                             pt.at(2).get<double>()});
      }
      r.pca = std::move(p);
    }
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("results.json: ") + e.what());
  }
  return r;
}

std::string FormatResultsCsv(const EvalReport& report) {
  std::string out = "attack,dataset,n_runs,auc_mean,auc_stderr";
  for (double f : report.fpr_grid) out += "," + GridLabel(f);
  out += "\n";
  for (const AttackResult& a : report.attacks) {
    const MeanStderr auc = a.auc_per_run.empty() ? MeanStderr{} : MeanAndStderr(a.auc_per_run);
    out += a.attack + "," + a.dataset + "," + std::to_string(a.curves.size()) + "," +
           Fixed(auc.mean) + "," + Fixed(auc.standard_error);
    for (size_t g = 0; g < report.fpr_grid.size(); ++g) {
      std::vector<double> v;
      for (const auto& run : a.tpr_per_run) v.push_back(run[g]);
      out += "," + (v.empty() ? Fixed(0) : Fixed(MeanAndStderr(v).mean));
    }
    out += "\n";
  }
  return out;
}

std::string RenderRocSvg(const EvalReport& report) {
  constexpr double kW = 520, kH = 440, kLeft = 60, kTop = 20, kPlot = 360;
  constexpr double kLo = -3.0;  // log10 of the clip floor
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  auto px = [&](double f) {
    return kLeft + (std::log10(std::clamp(f, 1e-3, 1.0)) - kLo) / -kLo * kPlot;
  };
  auto py = [&](double t) {
    return kTop + kPlot - (std::log10(std::clamp(t, 1e-3, 1.0)) - kLo) / -kLo * kPlot;
  };
  char buf[256];
  std::string s;
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                "viewBox=\"0 0 %g %g\">\n",
                kW, kH, kW, kH);
  s += buf;
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" "
                "stroke=\"black\"/>\n",
                kLeft, kTop, kPlot, kPlot);
  s += buf;
  for (int e = -3; e <= 0; ++e) {
    const double v = std::pow(10.0, e);
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" text-anchor=\"middle\">1e%d</text>\n",
                  px(v), kTop + kPlot + 16, e);
    s += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" text-anchor=\"end\">1e%d</text>\n",
                  kLeft - 6, py(v) + 4, e);
    s += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.2f\" y=\"%.2f\" font-size=\"12\" text-anchor=\"middle\">FPR</text>\n"
                "<text x=\"14\" y=\"%.2f\" font-size=\"12\" text-anchor=\"middle\" "
                "transform=\"rotate(-90 14 %.2f)\">TPR</text>\n",
                kLeft + kPlot / 2, kH - 8, kTop + kPlot / 2, kTop + kPlot / 2);
  s += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"gray\" "
                "stroke-dasharray=\"4 3\"/>\n",
                px(1e-3), py(1e-3), px(1.0), py(1.0));
  s += buf;
  for (size_t a = 0; a < report.attacks.size(); ++a) {
    const AveragedRoc& m = report.attacks[a].mean_curve;
    const char* color = kColors[a % std::size(kColors)];
    s += "<polyline fill=\"none\" stroke=\"";
    s += color;
    s += "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < m.fpr.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s%.2f,%.2f", i ? " " : "", px(m.fpr[i]), py(m.mean_tpr[i]));
      s += buf;
    }
    s += "\"/>\n";
    const double ly = kTop + 14 + 16 * static_cast<double>(a);
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\" "
                  "stroke-width=\"2\"/>\n<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\">",
                  kLeft + kPlot + 8, ly, kLeft + kPlot + 24, ly, color, kLeft + kPlot + 28,
                  ly + 4);
    s += buf;
    s += report.attacks[a].attack + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

void EmitReport(const EvalReport& report, const std::string& out_dir) {
  EnsureDirectory(out_dir);
  const std::string base = out_dir + "/";
  AtomicWriteFile(base + "results.csv", FormatResultsCsv(report));
  AtomicWriteFile(base + "results.json", ReportToJson(report).dump(2) + "\n");
  AtomicWriteFile(base + "roc_loglog.svg", RenderRocSvg(report));

  std::string scree = "component,explained_variance,ratio,cumulative_ratio\n";
  std::string scatter = "set,pc1,pc2\n";
  if (report.pca) {
    double total = 0;
    for (double v : report.pca->explained_variance) total += v;
    double cum = 0;
    for (size_t i = 0; i < report.pca->explained_variance.size(); ++i) {
      const double v = report.pca->explained_variance[i];
      cum += v;
      scree += std::to_string(i + 1) + "," + FormatDouble(v) + "," +
               FormatDouble(total > 0 ? v / total : 0) + "," +
               FormatDouble(total > 0 ? cum / total : 0) + "\n";
    }
    for (const auto& p : report.pca->scatter) {
      scatter += p.set + "," + FormatDouble(p.pc1) + "," + FormatDouble(p.pc2) + "\n";
    }
  }
  AtomicWriteFile(base + "pca_scree.csv", scree);
  AtomicWriteFile(base + "pca_top_components.csv", scatter);
}

}  // namespace mia
