// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Per-finding ROC AUC, aggregate mean/std, AUC bucket counts and parameter
// accounting.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "molre/core/tensor.hpp"
#include "molre/pipeline/model.hpp"

namespace molre {

/// Mann-Whitney AUC: P(score_pos > score_neg) with ties counted 0.5.
/// Rank based, O(n log n). nullopt when either class is empty.
std::optional<double> auc(std::span<const double> scores, std::span<const double> labels);

/// AUC of every column of probs [N x C] against labels [N x C].
std::vector<std::optional<double>> per_class_auc(const Tensor& probs, const Tensor& labels);

struct AucSummary {
    double mean = 0.0;
    double std = 0.0;          // population std over non-null classes
    std::size_t high = 0;      // AUC >= 0.90
    std::size_t mid = 0;       // 0.80 <= AUC < 0.90
    std::size_t evaluated = 0;  // non-null classes
};

inline constexpr double kHighAucThreshold = 0.90;
inline constexpr double kMidAucThreshold = 0.80;

/// Throws DataError when every entry is null.
AucSummary aggregate(std::span<const std::optional<double>> per_class);

/// Macro mean AUC over non-null classes; nullopt when none is defined.
std::optional<double> mean_auc(const Tensor& probs, const Tensor& labels);

struct ParamTable {
    std::vector<ParamCount> rows;
    std::int64_t trainable_total = 0;
    std::int64_t frozen_total = 0;
    std::int64_t molre_total = 0;  // experts + router; 0 without MoLRE
};

ParamTable param_report(const Model& model);

struct MetricsReport {
    std::vector<std::string> class_names;
    std::vector<std::optional<double>> per_class_auc;
    std::vector<std::size_t> n_pos;
    std::vector<std::size_t> n_neg;
    AucSummary summary;
    ParamTable params;
};

MetricsReport build_report(const Tensor& probs, const Tensor& labels, std::vector<std::string> class_names,
                           ParamTable params);

/// One tab-separated record per class: name, auc (or "null"), n_pos, n_neg.
void write_class_table(const MetricsReport& report, std::ostream& os);
/// JSON summary: mean, std, buckets, parameter rows.
std::string summary_json(const MetricsReport& report);
void write_param_table(const ParamTable& table, std::ostream& os);

}  // namespace molre
