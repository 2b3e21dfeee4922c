// include/omr/metrics.hpp

// Copyright 2026  omr-toolkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.
//
// Evaluation engine: Levenshtein alignment, sequence/symbol error rates,
// token grammar for pitch/type/note accuracy, and the per-category
// normalized insertion+deletion report 100*(I+D)/(N1+N2). A substitution is
// attributed as one deletion of the ground-truth token's category plus one
// insertion of the predicted token's category.

#ifndef OMR_METRICS_HPP_
#define OMR_METRICS_HPP_

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace omr {

struct MetricsError : std::runtime_error {
  explicit MetricsError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Edit distance with full alignment.
// ---------------------------------------------------------------------------

enum class EditKind { Match, Substitute, Delete, Insert };

struct EditStep {
  EditKind kind;
  long gt_index;    // -1 for Insert
  long pred_index;  // -1 for Delete
};

struct EditOps {
  std::size_t distance = 0;
  std::vector<EditStep> alignment;
};

// Minimal Levenshtein distance (unit costs). Backtrace ties prefer
// match/substitute over delete over insert so category attribution is
// deterministic.
template <class Token>
EditOps edit_distance(const std::vector<Token>& gt,
                      const std::vector<Token>& pred) {
  const std::size_t n = gt.size(), m = pred.size();
  std::vector<std::size_t> dp((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& {
    return dp[i * (m + 1) + j];
  };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = at(i - 1, j - 1) + (gt[i - 1] == pred[j - 1] ? 0 : 1);
      const std::size_t del = at(i - 1, j) + 1;
      const std::size_t ins = at(i, j - 1) + 1;
      at(i, j) = std::min({sub, del, ins});
    }

  EditOps ops;
  ops.distance = at(n, m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const std::size_t sub_cost = gt[i - 1] == pred[j - 1] ? 0 : 1;
      if (at(i, j) == at(i - 1, j - 1) + sub_cost) {
        ops.alignment.push_back(
            {sub_cost == 0 ? EditKind::Match : EditKind::Substitute,
             static_cast<long>(i - 1), static_cast<long>(j - 1)});
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ops.alignment.push_back({EditKind::Delete, static_cast<long>(i - 1), -1});
      --i;
      continue;
    }
    ops.alignment.push_back({EditKind::Insert, -1, static_cast<long>(j - 1)});
    --j;
  }
  std::reverse(ops.alignment.begin(), ops.alignment.end());
  return ops;
}

// Replays an alignment against the ground truth; the result must equal the
// prediction (used as a self-check in tests).
template <class Token>
std::vector<Token> replay_alignment(const std::vector<Token>& gt,
                                    const std::vector<Token>& pred,
                                    const EditOps& ops) {
  std::vector<Token> out;
  for (const EditStep& s : ops.alignment) {
    switch (s.kind) {
      case EditKind::Match:
        out.push_back(gt[static_cast<std::size_t>(s.gt_index)]);
        break;
      case EditKind::Substitute:
      case EditKind::Insert:
        out.push_back(pred[static_cast<std::size_t>(s.pred_index)]);
        break;
      case EditKind::Delete:
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SeER / SyER
// ---------------------------------------------------------------------------

using TokenSeq = std::vector<std::string>;
using SeqPair = std::pair<TokenSeq, TokenSeq>;  // (ground truth, prediction)

struct SequenceMetrics {
  double seer_pct = 0;  // share of sequences with at least one error
  double syer_pct = 0;  // total edit ops / total ground-truth symbols
};

inline SequenceMetrics sequence_metrics(const std::vector<SeqPair>& pairs) {
  if (pairs.empty()) throw MetricsError("sequence_metrics: no pairs");
  std::size_t wrong = 0, total_dist = 0, total_len = 0;
  for (const auto& [gt, pred] : pairs) {
    const std::size_t d = edit_distance(gt, pred).distance;
    if (d > 0) ++wrong;
    total_dist += d;
    total_len += gt.size();
  }
  if (total_len == 0)
    throw MetricsError("sequence_metrics: all ground truths empty, SyER undefined");
  SequenceMetrics m;
  m.seer_pct = 100.0 * static_cast<double>(wrong) / static_cast<double>(pairs.size());
  m.syer_pct =
      100.0 * static_cast<double>(total_dist) / static_cast<double>(total_len);
  return m;
}

// ---------------------------------------------------------------------------
// Token grammar
// ---------------------------------------------------------------------------

enum class Encoding { Semantic, Agnostic };

inline const char* encoding_name(Encoding e) {
  return e == Encoding::Semantic ? "semantic" : "agnostic";
}

inline Encoding parse_encoding(const std::string& s) {
  if (s == "semantic") return Encoding::Semantic;
  if (s == "agnostic") return Encoding::Agnostic;
  throw MetricsError("unknown encoding: " + s);
}

struct NoteFields {
  std::string category;
  std::optional<std::string> pitch;      // engaged iff Notes or GraceNotes
  std::optional<std::string> note_type;  // engaged iff Notes or GraceNotes
};

// Semantic tokens select their category by the prefix before the first '-'
// (note-C4_quarter, barline, keySignature-GM). Agnostic tokens select it by
// the prefix before the first '.' (note.quarter-L2, digit.3-S5). Anything
// unmatched falls into "Others".
inline NoteFields parse_token(const std::string& token, Encoding encoding) {
  if (token.empty()) throw MetricsError("parse_token: empty token");
  NoteFields f;
  if (encoding == Encoding::Semantic) {
    const std::size_t dash = token.find('-');
    const std::string head = token.substr(0, dash);
    if (head == "note") f.category = "Notes";
    else if (head == "gracenote") f.category = "GraceNotes";
    else if (head == "rest") f.category = "Rests";
    else if (head == "multirest") f.category = "MultiRests";
    else if (head == "barline") f.category = "Barlines";
    else if (head == "clef") f.category = "Clefs";
    else if (head == "keySignature") f.category = "KeySignatures";
    else if (head == "timeSignature") f.category = "TimeSignatures";
    else if (head == "tie") f.category = "Ties";
    else f.category = "Others";
    if (f.category == "Notes" || f.category == "GraceNotes") {
      const std::string tail = dash == std::string::npos ? "" : token.substr(dash + 1);
      const std::size_t us = tail.find('_');
      f.pitch = tail.substr(0, us);
      f.note_type = us == std::string::npos ? "" : tail.substr(us + 1);
    }
  } else {
    // category prefix ends at the first '.' or '-' (barline-L1 has no dot)
    const std::size_t dot = token.find('.');
    const std::string head = token.substr(0, std::min(dot, token.find('-')));
    if (head == "accidental") f.category = "Accidentals";
    else if (head == "barline") f.category = "Barlines";
    else if (head == "clef") f.category = "Clefs";
    else if (head == "fermata") f.category = "Fermatas";
    else if (head == "gracenote") f.category = "GraceNotes";
    else if (head == "metersign") f.category = "MeterSigns";
    else if (head == "note") f.category = "Notes";
    else if (head == "rest") f.category = "Rests";
    else if (head == "slur") f.category = "Slurs";
    else f.category = "Others";
    if (f.category == "Notes" || f.category == "GraceNotes") {
      // note.<type>-<staff position>: the position plays the pitch role
      const std::string tail = dot == std::string::npos ? "" : token.substr(dot + 1);
      const std::size_t dash = tail.find('-');
      f.note_type = tail.substr(0, dash);
      f.pitch = dash == std::string::npos ? "" : tail.substr(dash + 1);
    }
  }
  return f;
}

inline bool is_note_bearing(const NoteFields& f) {
  return f.category == "Notes" || f.category == "GraceNotes";
}

// ---------------------------------------------------------------------------
// Pitch / type / note accuracy over ground-truth note-bearing tokens.
// Deleted notes count as wrong in all three accuracies.
// ---------------------------------------------------------------------------

struct NoteAccuracies {
  double pitch_pct = 0;
  double type_pct = 0;
  double note_pct = 0;
  std::size_t gt_notes = 0;
};

inline NoteAccuracies note_accuracies(const std::vector<SeqPair>& pairs,
                                      Encoding encoding) {
  std::size_t total = 0, pitch_ok = 0, type_ok = 0, note_ok = 0;
  for (const auto& [gt, pred] : pairs) {
    const EditOps ops = edit_distance(gt, pred);
    for (const EditStep& s : ops.alignment) {
      if (s.kind == EditKind::Insert) continue;
      const NoteFields gf = parse_token(gt[static_cast<std::size_t>(s.gt_index)], encoding);
      if (!is_note_bearing(gf)) continue;
      ++total;
      if (s.kind == EditKind::Delete) continue;  // unrecoverable: all wrong
      if (s.kind == EditKind::Match) {
        ++pitch_ok;
        ++type_ok;
        ++note_ok;
        continue;
      }
      const NoteFields pf =
          parse_token(pred[static_cast<std::size_t>(s.pred_index)], encoding);
      const bool p = pf.pitch && gf.pitch && *pf.pitch == *gf.pitch;
      const bool t = pf.note_type && gf.note_type && *pf.note_type == *gf.note_type;
      if (p) ++pitch_ok;
      if (t) ++type_ok;
      if (p && t) ++note_ok;
    }
  }
  if (total == 0)
    throw MetricsError("note_accuracies: no ground-truth notes in the pair set");
  NoteAccuracies acc;
  acc.gt_notes = total;
  acc.pitch_pct = 100.0 * static_cast<double>(pitch_ok) / static_cast<double>(total);
  acc.type_pct = 100.0 * static_cast<double>(type_ok) / static_cast<double>(total);
  acc.note_pct = 100.0 * static_cast<double>(note_ok) / static_cast<double>(total);
  return acc;
}

// ---------------------------------------------------------------------------
// Per-category normalized insertion+deletion report.
// ---------------------------------------------------------------------------

struct OmrNedRow {
  std::string category;
  std::size_t insertions = 0;   // I
  std::size_t deletions = 0;    // D
  std::size_t pred_count = 0;   // N1
  std::size_t gt_count = 0;     // N2
  double ned_pct = 0;
  double error_share_pct = 0;
};

struct OmrNedReport {
  std::vector<OmrNedRow> rows;  // sorted by category name
  std::size_t total_insertions = 0;
  std::size_t total_deletions = 0;
  std::size_t total_pred = 0;
  std::size_t total_gt = 0;
  double overall_pct = 0;
};

// 100 * (I + D) / (N1 + N2), defined as 0 when the denominator is 0.
inline double omr_ned_pct(std::size_t ins, std::size_t del, std::size_t n1,
                          std::size_t n2) {
  const std::size_t denom = n1 + n2;
  if (denom == 0) return 0.0;
  return 100.0 * static_cast<double>(ins + del) / static_cast<double>(denom);
}

inline OmrNedReport omr_ned_report(const std::vector<SeqPair>& pairs,
                                   Encoding encoding) {
  struct Counts {
    std::size_t ins = 0, del = 0, pred = 0, gt = 0;
  };
  std::map<std::string, Counts> by_cat;
  for (const auto& [gt, pred] : pairs) {
    for (const auto& tok : gt) ++by_cat[parse_token(tok, encoding).category].gt;
    for (const auto& tok : pred) ++by_cat[parse_token(tok, encoding).category].pred;
    const EditOps ops = edit_distance(gt, pred);
    for (const EditStep& s : ops.alignment) {
      switch (s.kind) {
        case EditKind::Match:
          break;
        case EditKind::Substitute:
          ++by_cat[parse_token(gt[static_cast<std::size_t>(s.gt_index)], encoding).category].del;
          ++by_cat[parse_token(pred[static_cast<std::size_t>(s.pred_index)], encoding).category].ins;
          break;
        case EditKind::Delete:
          ++by_cat[parse_token(gt[static_cast<std::size_t>(s.gt_index)], encoding).category].del;
          break;
        case EditKind::Insert:
          ++by_cat[parse_token(pred[static_cast<std::size_t>(s.pred_index)], encoding).category].ins;
          break;
      }
    }
  }

  OmrNedReport report;
  for (const auto& [cat, c] : by_cat) {
    report.total_insertions += c.ins;
    report.total_deletions += c.del;
    report.total_pred += c.pred;
    report.total_gt += c.gt;
  }
  const std::size_t total_errors = report.total_insertions + report.total_deletions;
  for (const auto& [cat, c] : by_cat) {
    OmrNedRow row;
    row.category = cat;
    row.insertions = c.ins;
    row.deletions = c.del;
    row.pred_count = c.pred;
    row.gt_count = c.gt;
    row.ned_pct = omr_ned_pct(c.ins, c.del, c.pred, c.gt);
    row.error_share_pct =
        total_errors == 0 ? 0.0
                          : 100.0 * static_cast<double>(c.ins + c.del) /
                                static_cast<double>(total_errors);
    report.rows.push_back(row);
  }
  report.overall_pct = omr_ned_pct(report.total_insertions, report.total_deletions,
                                   report.total_pred, report.total_gt);
  return report;
}

}  // namespace omr

#endif  // OMR_METRICS_HPP_
