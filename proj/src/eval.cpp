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

#include "ats/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "ats/error.hpp"
#include "ats/math.hpp"

namespace ats {

nlohmann::json EvalReport::to_json() const {
  return {{"top1", top1},   {"top5", top5},         {"map", map},
          {"similarity", similarity}, {"n_candidates", n_candidates},
          {"n_queries", n_queries},   {"ranks", ranks}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.top1 = j.at("top1");
  r.top5 = j.at("top5");
  r.map = j.at("map");
  r.similarity = j.at("similarity");
  r.n_candidates = j.at("n_candidates");
  r.n_queries = j.at("n_queries");
  r.ranks = j.at("ranks").get<std::vector<std::size_t>>();
  return r;
}

std::vector<std::size_t> rank_from_scores(const Matrix& scores,
                                          const std::vector<std::size_t>& ground_truth) {
  if (ground_truth.size() != scores.rows()) {
    throw ShapeError("rank_queries: " + std::to_string(ground_truth.size()) +
                     " ground-truth entries for " + std::to_string(scores.rows()) + " queries");
  }
  if (scores.cols() == 0) throw ShapeError("rank_queries: no candidates");
  std::vector<std::size_t> ranks(scores.rows());
  for (std::size_t q = 0; q < scores.rows(); ++q) {
    const std::size_t gt = ground_truth[q];
    if (gt >= scores.cols()) {
      throw std::out_of_range("rank_queries: ground truth " + std::to_string(gt) +
                              " out of range for " + std::to_string(scores.cols()) +
                              " candidates");
    }
    auto s = scores.row(q);
    std::size_t rank = 1;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[j] > s[gt] || (j < gt && s[j] == s[gt])) ++rank;
    }
    ranks[q] = rank;
  }
  return ranks;
}

std::vector<std::size_t> rank_queries(const Matrix& queries, const Matrix& candidates,
                                      const std::vector<std::size_t>& ground_truth) {
  return rank_from_scores(cosine_similarity_matrix(queries, candidates), ground_truth);
}

double top_k_accuracy(const std::vector<std::size_t>& ranks, std::size_t k) {
  if (k < 1) throw std::invalid_argument("top_k_accuracy: k must be >= 1");
  if (ranks.empty()) throw std::invalid_argument("top_k_accuracy: no queries");
  const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mean_average_precision(const std::vector<std::size_t>& ranks) {
  if (ranks.empty()) throw std::invalid_argument("mean_average_precision: no queries");
  double total = 0.0;
  for (std::size_t r : ranks) total += 1.0 / static_cast<double>(r);
  return 100.0 * total / static_cast<double>(ranks.size());
}

double similarity_score(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("similarity_score: shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
  if (a.rows() == 0) throw std::invalid_argument("similarity_score: no pairs");
  const Matrix an = l2_normalize_rows(a).unit;
  const Matrix bn = l2_normalize_rows(b).unit;
  double total = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) total += dot(an.row(i), bn.row(i));
  return total / static_cast<double>(a.rows());
}

EvalReport evaluate_groups(const Matrix& queries, const Matrix& candidates,
                           const std::vector<std::vector<std::size_t>>& groups) {
  EvalReport rep;
  std::vector<std::size_t> all;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    const Matrix q = queries.gather_rows(g);
    const Matrix c = candidates.gather_rows(g);
    std::vector<std::size_t> gt(g.size());
    std::iota(gt.begin(), gt.end(), std::size_t{0});
    const auto ranks = rank_queries(q, c, gt);
    rep.ranks.insert(rep.ranks.end(), ranks.begin(), ranks.end());
    rep.n_candidates = std::max(rep.n_candidates, g.size());
    all.insert(all.end(), g.begin(), g.end());
  }
  rep.n_queries = rep.ranks.size();
  rep.top1 = top_k_accuracy(rep.ranks, 1);
  rep.top5 = top_k_accuracy(rep.ranks, 5);
  rep.map = mean_average_precision(rep.ranks);
  rep.similarity = similarity_score(queries.gather_rows(all), candidates.gather_rows(all));
  return rep;
}

namespace {

std::vector<std::size_t> rsm_order(const std::vector<int>& labels) {
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const int ca = super_category(labels[a]);
    const int cb = super_category(labels[b]);
    if (ca != cb) return ca < cb;
    return labels[a] < labels[b];
  });
  return order;
}

RSM finish_rsm(Matrix m, std::vector<std::size_t> order, const std::vector<int>& labels) {
  RSM rsm;
  rsm.matrix = std::move(m);
  rsm.order = std::move(order);
  for (std::size_t i = 0; i < rsm.order.size(); ++i) {
    rsm.labels.push_back(labels[rsm.order[i]]);
    if (i == 0 || super_category(rsm.labels[i]) != super_category(rsm.labels[i - 1])) {
      rsm.boundaries.push_back(i);
    }
  }
  return rsm;
}

template <typename SameGroup>
BlockContrast contrast(const RSM& rsm, SameGroup same) {
  double within = 0.0;
  double across = 0.0;
  std::size_t nw = 0;
  std::size_t na = 0;
  const std::size_t n = rsm.matrix.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (same(rsm.labels[i], rsm.labels[j])) {
        within += rsm.matrix(i, j);
        ++nw;
      } else {
        across += rsm.matrix(i, j);
        ++na;
      }
    }
  }
  return {nw ? within / static_cast<double>(nw) : 0.0, na ? across / static_cast<double>(na) : 0.0};
}

}  // namespace

RSM compute_rsm(const Matrix& z, const std::vector<int>& labels) {
  if (labels.size() != z.rows()) throw ShapeError("compute_rsm: labels do not align with rows");
  auto order = rsm_order(labels);
  const Matrix sorted = z.gather_rows(order);
  return finish_rsm(cosine_similarity_matrix(sorted, sorted), std::move(order), labels);
}

RSM cross_rsm(const Matrix& za, const Matrix& zb, const std::vector<int>& labels) {
  if (labels.size() != za.rows() || labels.size() != zb.rows()) {
    throw ShapeError("cross_rsm: labels do not align with rows");
  }
  auto order = rsm_order(labels);
  Matrix m = cosine_similarity_matrix(za.gather_rows(order), zb.gather_rows(order));
  return finish_rsm(std::move(m), std::move(order), labels);
}

BlockContrast category_contrast(const RSM& rsm) {
  return contrast(rsm, [](int a, int b) { return super_category(a) == super_category(b); });
}

BlockContrast class_contrast(const RSM& rsm) {
  return contrast(rsm, [](int a, int b) { return a == b; });
}

std::string rsm_to_csv(const RSM& rsm) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < rsm.labels.size(); ++i) {
    if (i) out << ',';
    out << rsm.labels[i];
  }
  out << '\n';
  for (std::size_t i = 0; i < rsm.matrix.rows(); ++i) {
    for (std::size_t j = 0; j < rsm.matrix.cols(); ++j) {
      if (j) out << ',';
      out << rsm.matrix(i, j);
    }
    out << '\n';
  }
  return out.str();
}

double student_t_quantile(double p, double dof) {
  return boost::math::quantile(boost::math::students_t_distribution<double>(dof), p);
}

RobustnessStats robustness(const std::vector<double>& series,
                           const std::vector<double>& baseline) {
  if (series.size() < 2) throw std::invalid_argument("robustness: need at least 2 values");
  auto moments = [](const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::pair{mean, ss};
  };
  RobustnessStats st;
  st.n = series.size();
  const auto [mean, ss] = moments(series);
  st.mean = mean;
  st.sd = std::sqrt(ss / static_cast<double>(st.n - 1));
  const double half = student_t_quantile(0.975, static_cast<double>(st.n - 1)) * st.sd /
                      std::sqrt(static_cast<double>(st.n));
  st.ci_low = mean - half;
  st.ci_high = mean + half;

  if (baseline.size() >= 2) {
    const auto [bmean, bss] = moments(baseline);
    const double dof = static_cast<double>(series.size() + baseline.size() - 2);
    const double pooled = std::sqrt((ss + bss) / dof);
    if (pooled > 0.0) {
      st.cohens_d = (mean - bmean) / pooled;
    } else {
      st.zero_variance = true;
    }
  }
  return st;
}

}  // namespace ats
