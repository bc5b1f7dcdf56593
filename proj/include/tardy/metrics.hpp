#pragma once

#include <cstddef>
#include <span>

#include "tardy/core.hpp"

namespace tardy {

/// Sign-threshold confusion counts over regression outputs: a prediction
/// counts as "delay" when it is strictly positive, "timely" otherwise.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

ConfusionCounts confusion(std::span<const double> predictions,
                          std::span<const double> targets);

// All ratio metrics return 0 on a zero denominator so that grid search
// stays total on degenerate folds.
double f_tp(const ConfusionCounts& c);
double f_tn(const ConfusionCounts& c);
double ppv(const ConfusionCounts& c);
double tpr(const ConfusionCounts& c);
double acc(const ConfusionCounts& c);
double mcc(const ConfusionCounts& c);

/// Normalized mean absolute error: (1/T) * sum |yhat - y| / y_max.
double mae_normalized(std::span<const double> predictions,
                      std::span<const double> targets, double y_max);

/// Multi-objective validation score G = ((1 - E) + F_tp + F_tn) / 3.
/// Not clamped: E > 1 is allowed and keeps the ordering meaningful.
double g_score(double e, double f_tp, double f_tn);

struct MetricReport {
    double f_tp = 0.0;
    double f_tn = 0.0;
    double ppv = 0.0;
    double tpr = 0.0;
    double mcc = 0.0;
    double acc = 0.0;
    double mae = 0.0;  // normalized E
    double g = 0.0;
};

/// Every score from one confusion pass.
MetricReport evaluate(std::span<const double> predictions,
                      std::span<const double> targets, double y_max);

}  // namespace tardy
