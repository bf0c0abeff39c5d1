// Copyright 2026 The ATS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

#include "ats/matrix.hpp"

namespace ats {

struct EvalReport {
  std::vector<std::size_t> ranks;
  double top1 = 0.0;  // percent
  double top5 = 0.0;  // percent
  double map = 0.0;   // percent
  double similarity = 0.0;
  std::size_t n_candidates = 0;
  std::size_t n_queries = 0;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

// rank = 1 + #{j : s_j > s_gt} + #{j < gt : s_j == s_gt} over cosine scores.
// Ties are resolved against the query by candidate index.
std::vector<std::size_t> rank_queries(const Matrix& queries, const Matrix& candidates,
                                      const std::vector<std::size_t>& ground_truth);

// Same rule applied to a precomputed score matrix (queries x candidates).
std::vector<std::size_t> rank_from_scores(const Matrix& scores,
                                          const std::vector<std::size_t>& ground_truth);

double top_k_accuracy(const std::vector<std::size_t>& ranks, std::size_t k);
double mean_average_precision(const std::vector<std::size_t>& ranks);
// Mean cosine over index-matched pairs.
double similarity_score(const Matrix& a, const Matrix& b);

// Retrieval over groups: each group is a set of row indices into
// (queries, candidates); query i is matched against the candidates of its
// own group and its ground truth is its own row.
EvalReport evaluate_groups(const Matrix& queries, const Matrix& candidates,
                           const std::vector<std::vector<std::size_t>>& groups);

// ---- representational similarity ------------------------------------------

// Synthetic classes are dealt round-robin into this many super-categories.
inline constexpr int kSuperCategories = 5;
inline int super_category(int label) { return label % kSuperCategories; }

struct RSM {
  Matrix matrix;                     // cosine similarities in sorted order
  std::vector<std::size_t> order;    // sorted position -> original row
  std::vector<int> labels;           // labels in sorted order
  std::vector<std::size_t> boundaries;  // sorted positions where a super-category starts
};

// Rows are stably sorted by (super-category, label).
RSM compute_rsm(const Matrix& z, const std::vector<int>& labels);
RSM cross_rsm(const Matrix& za, const Matrix& zb, const std::vector<int>& labels);

struct BlockContrast {
  double within = 0.0;
  double across = 0.0;
  double margin() const { return within - across; }
};

// Mean off-diagonal similarity within vs across groups, where the group of
// a row is given by `group_of(label)`.
BlockContrast category_contrast(const RSM& rsm);
BlockContrast class_contrast(const RSM& rsm);

std::string rsm_to_csv(const RSM& rsm);

// ---- robustness statistics -------------------------------------------------

struct RobustnessStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample SD (n - 1)
  double ci_low = 0.0;
  double ci_high = 0.0;
  double cohens_d = 0.0;
  bool zero_variance = false;  // pooled SD was zero; cohens_d reported as 0
};

double student_t_quantile(double p, double dof);

// Mean, SD and 95% Student-t CI of `series`; Cohen's d of series vs
// baseline with pooled SD. An empty baseline leaves cohens_d at 0.
RobustnessStats robustness(const std::vector<double>& series,
                           const std::vector<double>& baseline);

}  // namespace ats
