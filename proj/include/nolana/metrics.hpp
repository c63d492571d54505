#pragma once

#include "nolana/loss.hpp"
#include "nolana/types.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace nolana {

// Shortest round-trip decimal form, so artifacts are byte-stable.
inline std::string format_double(double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

struct MetricRecord {
    long step = 0;  // 1-based, post-warm-up
    double prediction = 0.0;
    double label = 0.0;
    double loss = 0.0;
    double cum_metric = 0.0;
    bool updated = false;
    long long elapsed_ns = 0;
};

// Prequential per-step records plus streaming accumulators: cumulative
// accuracy for classification, running RMSE for regression.
class MetricsLog {
public:
    explicit MetricsLog(Task task) : task_(task) {}

    Task task() const { return task_; }

    void record(double prediction, double label, double loss, bool updated,
                long long elapsed_ns = 0) {
        MetricRecord rec;
        rec.step = static_cast<long>(records_.size()) + 1;
        rec.prediction = prediction;
        rec.label = label;
        rec.loss = loss;
        rec.updated = updated;
        rec.elapsed_ns = elapsed_ns;
        if (task_ == Task::Classification) {
            if ((prediction >= 0.0 ? 1.0 : -1.0) == label) ++correct_;
            rec.cum_metric = static_cast<double>(correct_) / rec.step;
        } else {
            const double err = label - prediction;
            squared_error_sum_ += err * err;
            rec.cum_metric = std::sqrt(squared_error_sum_ / rec.step);
        }
        if (updated) ++updates_;
        cumulative_loss_ += loss;
        records_.push_back(rec);
    }

    const std::vector<MetricRecord>& records() const { return records_; }
    long steps() const { return static_cast<long>(records_.size()); }
    long updates() const { return updates_; }
    double cumulative_loss() const { return cumulative_loss_; }

    // Final accuracy (fraction) or running RMSE.
    double final_metric() const {
        return records_.empty() ? 0.0 : records_.back().cum_metric;
    }

    // Recomputes the final metric from the raw records, bypassing the
    // streaming accumulators.
    double recompute_final_metric() const {
        if (records_.empty()) return 0.0;
        if (task_ == Task::Classification) {
            long correct = 0;
            for (const auto& rec : records_)
                if ((rec.prediction >= 0.0 ? 1.0 : -1.0) == rec.label) ++correct;
            return static_cast<double>(correct) / static_cast<double>(records_.size());
        }
        double sum = 0.0;
        for (const auto& rec : records_) {
            const double err = rec.label - rec.prediction;
            sum += err * err;
        }
        return std::sqrt(sum / static_cast<double>(records_.size()));
    }

    void write_csv(std::ostream& out) const {
        out << "step,prediction,label,loss,cum_metric,updated,elapsed_ns\n";
        for (const auto& rec : records_) {
            out << rec.step << ',' << format_double(rec.prediction) << ','
                << format_double(rec.label) << ',' << format_double(rec.loss) << ','
                << format_double(rec.cum_metric) << ',' << (rec.updated ? 1 : 0)
                << ',' << rec.elapsed_ns << '\n';
        }
    }

private:
    Task task_;
    std::vector<MetricRecord> records_;
    long correct_ = 0;
    long updates_ = 0;
    double squared_error_sum_ = 0.0;
    double cumulative_loss_ = 0.0;
};

// Stored-real accounting, computed from live state. The map budget is
// what a method keeps to represent its feature map (for the landmark
// methods: landmarks + eigenvectors + counts + eigenvalues; for random
// Fourier features: frequencies + phases); model weights are reported
// separately since every method carries them.
struct BudgetReport {
    std::string method;
    Index landmark_reals = 0;
    Index eigenvector_reals = 0;
    Index count_slots = 0;
    Index eigenvalue_reals = 0;
    Index frequency_reals = 0;
    Index phase_reals = 0;
    Index weight_reals = 0;

    Index map_budget() const {
        return landmark_reals + eigenvector_reals + count_slots +
               eigenvalue_reals + frequency_reals + phase_reals;
    }

    Index total() const { return map_budget() + weight_reals; }
};

}  // namespace nolana
