#ifndef FACEATTR_EVAL_HPP
#define FACEATTR_EVAL_HPP

#include <string>
#include <vector>

#include <Eigen/Core>

#include "faceattr/errors.hpp"
#include "faceattr/types.hpp"

namespace faceattr {

/// Per-attribute arithmetic mean over views.
ScoreVector fuse_scores(const std::vector<ScoreVector>& views);

/// label_j = +1 if scores_j > tau, else -1 (ties at exactly tau go to -1).
AttributeVector classify(const ScoreVector& scores, double tau = 0.0);

/// Per-attribute and overall classification error, in percent.
/// overall is the unweighted mean across attributes.
struct ErrorTable {
  std::vector<std::string> attribute_names;
  Eigen::VectorXd errors;  // percent, one per attribute

  double overall() const { return errors.mean(); }
};

ErrorTable error_table(const std::vector<AttributeVector>& predictions,
                       const std::vector<AttributeVector>& truths,
                       const std::vector<std::string>& names);

enum class TableFormat { kCsv, kTsv, kMarkdown };

/// One row per attribute plus an OVERALL row; values with two decimals.
std::string emit_table(const ErrorTable& table, TableFormat format);

/// Parses csv/tsv output of emit_table (the OVERALL row is recomputed).
ErrorTable parse_table(const std::string& text);

struct TTestResult {
  double t;
  double p;
  double dof;
};

/// Two-sided paired t-test on the differences a - b.
/// Throws TooFewSamplesError for n < 2 and ZeroVarianceError when all
/// differences are identical.
TTestResult paired_ttest(const std::vector<double>& a,
                         const std::vector<double>& b);

/// Score dump: one line per image, "id s_1 ... s_A".
struct ScoreDump {
  std::vector<std::string> ids;
  std::vector<ScoreVector> scores;
};

std::string emit_scores(const ScoreDump& dump);
ScoreDump parse_scores(const std::string& text);

}  // namespace faceattr

#endif
