#include "faceattr/eval.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "faceattr/stats.hpp"

namespace faceattr {
namespace {

std::string format_fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

ScoreVector fuse_scores(const std::vector<ScoreVector>& views) {
  if (views.empty()) throw Error("fuse_scores: no views");
  ScoreVector sum = views.front();
  for (std::size_t i = 1; i < views.size(); ++i) {
    if (views[i].size() != sum.size())
      throw Error("fuse_scores: view length mismatch");
    sum += views[i];
  }
  return sum / static_cast<double>(views.size());
}

AttributeVector classify(const ScoreVector& scores, double tau) {
  AttributeVector labels(scores.size());
  for (Eigen::Index j = 0; j < scores.size(); ++j)
    labels[j] = scores[j] > tau ? 1 : -1;
  return labels;
}

ErrorTable error_table(const std::vector<AttributeVector>& predictions,
                       const std::vector<AttributeVector>& truths,
                       const std::vector<std::string>& names) {
  if (predictions.size() != truths.size())
    throw Error("error_table: prediction/truth count mismatch");
  if (predictions.empty()) throw Error("error_table: no images");
  Eigen::Index n_attrs = static_cast<Eigen::Index>(names.size());
  Eigen::VectorXd mismatches = Eigen::VectorXd::Zero(n_attrs);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].size() != n_attrs || truths[i].size() != n_attrs)
      throw Error("error_table: attribute length mismatch");
    mismatches +=
        (predictions[i].array() != truths[i].array()).cast<double>().matrix();
  }
  ErrorTable table;
  table.attribute_names = names;
  table.errors = mismatches * (100.0 / static_cast<double>(predictions.size()));
  return table;
}

std::string emit_table(const ErrorTable& table, TableFormat format) {
  std::ostringstream out;
  const char* sep = format == TableFormat::kTsv ? "\t" : ",";
  if (format == TableFormat::kMarkdown) {
    out << "| attribute | error |\n|---|---|\n";
    for (std::size_t i = 0; i < table.attribute_names.size(); ++i)
      out << "| " << table.attribute_names[i] << " | "
          << format_fixed2(table.errors[static_cast<Eigen::Index>(i)]) << " |\n";
    out << "| OVERALL | " << format_fixed2(table.overall()) << " |\n";
    return out.str();
  }
  out << "attribute" << sep << "error\n";
  for (std::size_t i = 0; i < table.attribute_names.size(); ++i)
    out << table.attribute_names[i] << sep
        << format_fixed2(table.errors[static_cast<Eigen::Index>(i)]) << "\n";
  out << "OVERALL" << sep << format_fixed2(table.overall()) << "\n";
  return out.str();
}

ErrorTable parse_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ErrorTable table;
  std::vector<double> errors;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    char sep = line.find('\t') != std::string::npos ? '\t' : ',';
    auto fields = split(line, sep);
    if (fields.size() != 2) throw ParseError("expected 2 columns", line_no);
    if (line_no == 1 && fields[0] == "attribute") continue;
    if (fields[0] == "OVERALL") continue;  // recomputed from the rows
    double v = 0;
    auto [ptr, ec] = std::from_chars(
        fields[1].data(), fields[1].data() + fields[1].size(), v);
    if (ec != std::errc() || ptr != fields[1].data() + fields[1].size())
      throw ParseError("bad error value '" + fields[1] + "'", line_no);
    table.attribute_names.push_back(fields[0]);
    errors.push_back(v);
  }
  if (errors.empty()) throw ParseError("empty table", line_no);
  table.errors = Eigen::Map<Eigen::VectorXd>(errors.data(),
                                             static_cast<Eigen::Index>(errors.size()));
  return table;
}

TTestResult paired_ttest(const std::vector<double>& a,
                         const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error("paired_ttest: length mismatch");
  std::size_t n = a.size();
  if (n < 2) throw TooFewSamplesError("paired_ttest: need at least 2 pairs");

  double mean = 0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  double var = ss / static_cast<double>(n - 1);
  if (var == 0.0)
    throw ZeroVarianceError("paired_ttest: all differences identical");

  TTestResult r;
  r.dof = static_cast<double>(n - 1);
  r.t = mean / std::sqrt(var / static_cast<double>(n));
  r.p = student_t_two_sided_p(r.t, r.dof);
  return r;
}

std::string emit_scores(const ScoreDump& dump) {
  if (dump.ids.size() != dump.scores.size())
    throw Error("emit_scores: id/score count mismatch");
  std::ostringstream out;
  for (std::size_t i = 0; i < dump.ids.size(); ++i) {
    out << dump.ids[i];
    const ScoreVector& s = dump.scores[i];
    for (Eigen::Index j = 0; j < s.size(); ++j) out << " " << format_full(s[j]);
    out << "\n";
  }
  return out.str();
}

ScoreDump parse_scores(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ScoreDump dump;
  long line_no = 0;
  Eigen::Index n_attrs = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id;
    row >> id;
    std::vector<double> values;
    double v;
    while (row >> v) values.push_back(v);
    if (!row.eof()) throw ParseError("bad score value", line_no);
    if (values.empty()) throw ParseError("row without scores", line_no);
    if (n_attrs < 0) n_attrs = static_cast<Eigen::Index>(values.size());
    if (static_cast<Eigen::Index>(values.size()) != n_attrs)
      throw ParseError("inconsistent score count", line_no);
    dump.ids.push_back(id);
    dump.scores.push_back(
        Eigen::Map<ScoreVector>(values.data(), n_attrs));
  }
  return dump;
}

}  // namespace faceattr
