#include "gatesim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace gatesim {

std::vector<double> sweep_range(double from, double to, double step) {
    if (!(from > 0.0) || !(step > 0.0) || to < from) {
        throw ConfigError("sweep range must satisfy 0 < from <= to, step > 0");
    }
    std::vector<double> values;
    // integer stepping avoids accumulation drift across the range
    const int n = int(std::floor((to - from) / step + 1e-9)) + 1;
    for (int i = 0; i < n; ++i) values.push_back(from + double(i) * step);
    return values;
}

namespace {

SweepCell evaluate_cell(const ChipNetwork& chip, const SweepSpec& spec,
                        double value, const std::string& point_id) {
    PulseTrainSpec train = spec.base;
    if (spec.variable == SweepVariable::GatingTime) {
        train.gating_time = value;
    } else {
        train.inter_pulse = value;
    }
    const auto schedule = build_train(train);
    const auto sim = simulate(schedule, chip, spec.overrides);
    const auto& trace = sim.traces.at(point_id);
    const NcipTrace ncip = normalize_ncip(trace);
    DetectorConfig det;
    det.min_separation = train.gating_time;
    const auto pulses = detect_pulses(ncip, det);
    const auto tm = train_metrics(pulses, ncip);

    SweepCell cell;
    cell.value = value;
    cell.point_id = point_id;
    cell.n_pulses = int(pulses.size());
    cell.n_resolved = tm.n_resolved;
    cell.mean_width = tm.mean_width;
    if (!tm.inter_pulse.empty()) {
        double acc = 0.0;
        for (double t : tm.inter_pulse) acc += t;
        cell.mean_inter_pulse = acc / double(tm.inter_pulse.size());
    }
    if (!tm.isi_ratio.empty()) {
        double acc = 0.0;
        int n_ok = 0;
        for (size_t i = 0; i < tm.isi_ratio.size(); ++i) {
            acc += tm.isi_ratio[i];
            if (tm.distinguishable[i]) ++n_ok;
        }
        cell.mean_isi_ratio = acc / double(tm.isi_ratio.size());
        cell.frac_distinguishable = double(n_ok) / double(tm.isi_ratio.size());
    }
    return cell;
}

} // namespace

SweepResult run_sweep(const ChipNetwork& chip, const SweepSpec& spec) {
    if (spec.values.empty()) {
        throw ConfigError("sweep needs at least one value");
    }
    std::vector<std::string> points = spec.points;
    if (points.empty()) {
        for (const auto& sp : chip.sample_points) points.push_back(sp.point_id);
    }

    struct Task {
        double value;
        std::string point;
    };
    std::vector<Task> tasks;
    for (double v : spec.values) {
        for (const auto& p : points) tasks.push_back({v, p});
    }

    SweepResult result;
    result.cells.resize(tasks.size());
    const int jobs = std::max(1, spec.jobs);
    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                result.cells[i] = evaluate_cell(chip, spec, tasks[i].value, tasks[i].point);
            } catch (...) {
                std::scoped_lock lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::stable_sort(result.cells.begin(), result.cells.end(),
                     [](const SweepCell& a, const SweepCell& b) {
                         if (a.value != b.value) return a.value < b.value;
                         return a.point_id < b.point_id;
                     });

    for (const auto& p : points) {
        std::vector<double> xs, ys;
        for (const auto& cell : result.cells) {
            if (cell.point_id != p) continue;
            const double y = (spec.variable == SweepVariable::GatingTime)
                                 ? cell.mean_width
                                 : cell.mean_inter_pulse;
            if (y > 0.0) {
                xs.push_back(cell.value);
                ys.push_back(y);
            }
        }
        if (xs.size() >= 2) {
            result.fits[p] = linear_fit(xs, ys);
        }
    }
    return result;
}

} // namespace gatesim
