#include "tardy/metrics.hpp"

#include <cmath>

namespace tardy {

ConfusionCounts confusion(std::span<const double> predictions,
                          std::span<const double> targets) {
    if (predictions.size() != targets.size())
        throw Error("confusion: prediction/target length mismatch");
    if (predictions.empty()) throw Error("confusion: empty input");

    ConfusionCounts c;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        bool pred_delay = predictions[i] > 0.0;
        bool true_delay = targets[i] > 0.0;
        if (pred_delay && true_delay)
            ++c.tp;
        else if (pred_delay && !true_delay)
            ++c.fp;
        else if (!pred_delay && !true_delay)
            ++c.tn;
        else
            ++c.fn;
    }
    return c;
}

namespace {
double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
}  // namespace

double f_tp(const ConfusionCounts& c) {
    return ratio(2.0 * static_cast<double>(c.tp),
                 2.0 * static_cast<double>(c.tp) + static_cast<double>(c.fp) +
                     static_cast<double>(c.fn));
}

double f_tn(const ConfusionCounts& c) {
    return ratio(2.0 * static_cast<double>(c.tn),
                 2.0 * static_cast<double>(c.tn) + static_cast<double>(c.fp) +
                     static_cast<double>(c.fn));
}

double ppv(const ConfusionCounts& c) {
    return ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
}

double tpr(const ConfusionCounts& c) {
    return ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
}

double acc(const ConfusionCounts& c) {
    return ratio(static_cast<double>(c.tp + c.tn), static_cast<double>(c.total()));
}

double mcc(const ConfusionCounts& c) {
    double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
    double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
    return ratio(tp * tn - fp * fn, den);
}

double mae_normalized(std::span<const double> predictions,
                      std::span<const double> targets, double y_max) {
    if (y_max <= 0.0) throw Error("mae_normalized: y_max must be positive");
    if (predictions.size() != targets.size())
        throw Error("mae_normalized: prediction/target length mismatch");
    if (predictions.empty()) throw Error("mae_normalized: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        s += std::abs(predictions[i] - targets[i]);
    return s / (y_max * static_cast<double>(predictions.size()));
}

double g_score(double e, double f_tp, double f_tn) {
    return ((1.0 - e) + f_tp + f_tn) / 3.0;
}

MetricReport evaluate(std::span<const double> predictions,
                      std::span<const double> targets, double y_max) {
    ConfusionCounts c = confusion(predictions, targets);
    MetricReport r;
    r.f_tp = f_tp(c);
    r.f_tn = f_tn(c);
    r.ppv = ppv(c);
    r.tpr = tpr(c);
    r.mcc = mcc(c);
    r.acc = acc(c);
    r.mae = mae_normalized(predictions, targets, y_max);
    r.g = g_score(r.mae, r.f_tp, r.f_tn);
    return r;
}

}  // namespace tardy
