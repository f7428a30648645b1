// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "molre/core/errors.hpp"

namespace molre {

std::optional<double> auc(std::span<const double> scores, std::span<const double> labels) {
    if (scores.size() != labels.size()) {
        throw DimensionError("auc: " + std::to_string(scores.size()) + " scores vs " +
                             std::to_string(labels.size()) + " labels");
    }
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (double y : labels) {
        if (y != 0.0 && y != 1.0) throw DataError("auc: labels must be 0 or 1");
        n_pos += y == 1.0;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of midranks (1-based) of the positives.
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        std::size_t pos_in_group = 0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            pos_in_group += labels[order[j]] == 1.0;
            ++j;
        }
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        rank_sum += midrank * static_cast<double>(pos_in_group);
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    const double u = rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(n_neg));
}

std::vector<std::optional<double>> per_class_auc(const Tensor& probs, const Tensor& labels) {
    if (probs.shape() != labels.shape() || probs.rank() != 2) {
        throw DimensionError("per_class_auc: probs " + shape_to_string(probs.shape()) + " vs labels " +
                             shape_to_string(labels.shape()));
    }
    const std::size_t N = probs.rows(), C = probs.cols();
    std::vector<std::optional<double>> out(C);
    std::vector<double> s(N), y(N);
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t n = 0; n < N; ++n) {
            s[n] = probs.at(n, c);
            y[n] = labels.at(n, c);
        }
        out[c] = auc(s, y);
    }
    return out;
}

AucSummary aggregate(std::span<const std::optional<double>> per_class) {
    AucSummary summary;
    double sum = 0.0;
    for (const auto& a : per_class) {
        if (!a) continue;
        ++summary.evaluated;
        sum += *a;
        if (*a >= kHighAucThreshold) {
            ++summary.high;
        } else if (*a >= kMidAucThreshold) {
            ++summary.mid;
        }
    }
    if (summary.evaluated == 0) throw DataError("aggregate: no class has both positives and negatives");
    summary.mean = sum / static_cast<double>(summary.evaluated);
    double ss = 0.0;
    for (const auto& a : per_class)
        if (a) ss += (*a - summary.mean) * (*a - summary.mean);
    summary.std = std::sqrt(ss / static_cast<double>(summary.evaluated));
    return summary;
}

std::optional<double> mean_auc(const Tensor& probs, const Tensor& labels) {
    const auto per_class = per_class_auc(probs, labels);
    if (std::none_of(per_class.begin(), per_class.end(), [](const auto& a) { return a.has_value(); })) {
        return std::nullopt;
    }
    return aggregate(per_class).mean;
}

ParamTable param_report(const Model& model) {
    ParamTable table;
    table.rows = model.parameter_counts();
    for (const auto& r : table.rows) {
        (r.trainable ? table.trainable_total : table.frozen_total) += r.count;
        if (r.component == "molre experts" || r.component == "router") table.molre_total += r.count;
    }
    return table;
}

MetricsReport build_report(const Tensor& probs, const Tensor& labels, std::vector<std::string> class_names,
                           ParamTable params) {
    MetricsReport report;
    const std::size_t C = labels.cols();
    if (class_names.size() != C) throw DimensionError("build_report: class name count does not match labels");
    report.class_names = std::move(class_names);
    report.per_class_auc = per_class_auc(probs, labels);
    report.n_pos.assign(C, 0);
    report.n_neg.assign(C, 0);
    for (std::size_t n = 0; n < labels.rows(); ++n) {
        for (std::size_t c = 0; c < C; ++c) (labels.at(n, c) == 1.0 ? report.n_pos : report.n_neg)[c]++;
    }
    report.summary = aggregate(report.per_class_auc);
    report.params = std::move(params);
    return report;
}

void write_class_table(const MetricsReport& report, std::ostream& os) {
    os << "class\tauc\tn_pos\tn_neg\n";
    os << std::setprecision(17);
    for (std::size_t c = 0; c < report.class_names.size(); ++c) {
        os << report.class_names[c] << '\t';
        if (report.per_class_auc[c]) {
            os << *report.per_class_auc[c];
        } else {
            os << "null";
        }
        os << '\t' << report.n_pos[c] << '\t' << report.n_neg[c] << '\n';
    }
}

std::string summary_json(const MetricsReport& report) {
    nlohmann::json j;
    j["mean_auc"] = report.summary.mean;
    j["std_auc"] = report.summary.std;
    j["bucket_high"] = report.summary.high;
    j["bucket_mid"] = report.summary.mid;
    j["evaluated_classes"] = report.summary.evaluated;
    j["num_classes"] = report.class_names.size();
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.params.rows) {
        rows.push_back({{"component", r.component}, {"count", r.count}, {"trainable", r.trainable}});
    }
    j["params"] = rows;
    j["trainable_total"] = report.params.trainable_total;
    j["frozen_total"] = report.params.frozen_total;
    j["molre_total"] = report.params.molre_total;
    return j.dump(2);
}

void write_param_table(const ParamTable& table, std::ostream& os) {
    os << std::left << std::setw(20) << "component" << std::right << std::setw(14) << "params" << "  trainable\n";
    for (const auto& r : table.rows) {
        os << std::left << std::setw(20) << r.component << std::right << std::setw(14) << r.count << "  "
           << (r.trainable ? "yes" : "no") << '\n';
    }
    os << std::left << std::setw(20) << "total trainable" << std::right << std::setw(14) << table.trainable_total
       << '\n';
    os << std::left << std::setw(20) << "total frozen" << std::right << std::setw(14) << table.frozen_total << '\n';
    if (table.molre_total > 0) {
        os << std::left << std::setw(20) << "molre total" << std::right << std::setw(14) << table.molre_total << '\n';
    }
}

}  // namespace molre
