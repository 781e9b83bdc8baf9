#include "gcondnet/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>

#include "gcondnet/rng.hpp"
#include "gcondnet/synth.hpp"

namespace gcondnet {

double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size())
        throw std::invalid_argument("balanced_accuracy: length mismatch");
    if (y_true.empty()) throw std::invalid_argument("balanced_accuracy: empty input");
    const int c = *std::max_element(y_true.begin(), y_true.end()) + 1;
    std::vector<double> total(c, 0.0), correct(c, 0.0);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        total[y_true[i]] += 1.0;
        if (y_true[i] == y_pred[i]) correct[y_true[i]] += 1.0;
    }
    double sum = 0.0;
    for (int cls = 0; cls < c; ++cls) {
        if (total[cls] == 0.0)
            throw std::invalid_argument("balanced_accuracy: class " + std::to_string(cls) +
                                        " has no true instances");
        sum += correct[cls] / total[cls];
    }
    return sum / double(c);
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
    return out;
}

std::vector<int> take_labels(const std::vector<int>& y, const std::vector<int>& idx) {
    std::vector<int> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = y[idx[i]];
    return out;
}

template <typename T>
SplitRunOutput run_split_impl(const TabularDataset& data, const ModelSpec& spec,
                              const Split& split, const BenchSettings& settings,
                              std::uint64_t run_seed, int resample) {
    using Mat = typename Tape<T>::Mat;

    // per-split normalization, fitted on the training core only
    const Eigen::MatrixXd x_core = take_rows(data.matrix, split.train);
    const Normalizer norm = zscore_fit(x_core);
    const Eigen::MatrixXd x_train_n = zscore_apply(norm, x_core);

    TrainerData<T> td;
    td.x_train = x_train_n.cast<T>();
    td.y_train = take_labels(data.labels, split.train);
    td.x_val = zscore_apply(norm, take_rows(data.matrix, split.val)).cast<T>();
    td.y_val = take_labels(data.labels, split.val);
    const auto w = class_weights(td.y_train, data.class_count);
    td.class_weights.assign(w.begin(), w.end());

    std::vector<FeatureGraph> graphs;
    if (spec.use_gnn || (spec.init == InitKind::Wl && !spec.first_layer)) {
        GraphConfig gc = spec.graph;
        if (spec.init == InitKind::Wl && !spec.use_gnn) gc.kind = GraphKind::Srd;
        graphs = build_feature_graphs(x_train_n, gc,
                                      mix_seed(run_seed, 7 + static_cast<std::uint64_t>(resample)));
    }

    std::optional<Eigen::MatrixXd> first_init;
    MixingSchedule schedule = spec.schedule;
    if (!spec.use_gnn) {
        schedule.mode = MixingSchedule::Mode::Fixed;
        schedule.fixed_alpha = 0.0;
        if (spec.first_layer)
            first_init = *spec.first_layer;
        else
            first_init = first_layer_init(spec.init, x_train_n, graphs,
                                          settings.model.mlp_widths.front(), mix_seed(run_seed, 13));
    }

    auto model = make_model<T>(data.num_features(), data.class_count,
                               spec.use_gnn ? static_cast<int>(split.train.size()) : 0,
                               settings.model, schedule, mix_seed(run_seed, 11), first_init);

    if (spec.use_gnn) {
        td.graphs.reserve(graphs.size());
        for (const auto& g : graphs) td.graphs.push_back(GraphOperator<T>::from_graph(g));
    }

    TrainConfig tc = settings.train;
    tc.seed = run_seed;
    Trainer<T> trainer(std::move(td), std::move(model), tc);
    trainer.run();
    auto trained = trainer.finalize();

    const Eigen::MatrixXd x_test_n = zscore_apply(norm, take_rows(data.matrix, split.test));
    const auto y_test = take_labels(data.labels, split.test);
    const auto y_pred = trained.predict_labels(x_test_n.cast<T>());

    Mat x_val_t = zscore_apply(norm, take_rows(data.matrix, split.val)).cast<T>();
    const auto y_val_pred = trained.predict_labels(x_val_t);

    SplitRunOutput out;
    out.result.spec = spec.name;
    out.result.resample = resample;
    out.result.seed = run_seed;
    out.result.test_bacc = balanced_accuracy(y_test, y_pred);
    out.result.val_bacc = balanced_accuracy(take_labels(data.labels, split.val), y_val_pred);
    out.result.best_val_loss = trainer.best_val_loss();
    out.result.steps = trainer.current_step();
    out.history = trainer.history();
    out.mlp = trained.mlp.template cast<double>();
    out.first_layer = trained.first_layer.template cast<double>();
    return out;
}

}  // namespace

SplitRunOutput run_split(const TabularDataset& data, const ModelSpec& spec, const Split& split,
                         const BenchSettings& settings, std::uint64_t run_seed, int resample) {
    if (settings.precision == Precision::F64)
        return run_split_impl<double>(data, spec, split, settings, run_seed, resample);
    return run_split_impl<float>(data, spec, split, settings, run_seed, resample);
}

BenchmarkReport run_benchmark(const TabularDataset& data, const std::vector<ModelSpec>& specs,
                              const SplitPlan& plan, const BenchSettings& settings,
                              std::vector<History>* histories) {
    struct Job {
        const ModelSpec* spec;
        int split_id;
        int resample;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    std::uint64_t run_index = 0;
    for (const auto& spec : specs) {
        const int resamples =
            spec.use_gnn && spec.graph.kind == GraphKind::Random ? settings.random_resamples : 1;
        for (int s = 0; s < static_cast<int>(plan.splits.size()); ++s)
            for (int g = 0; g < resamples; ++g)
                jobs.push_back({&spec, s, g, settings.master_seed ^ run_index++});
    }

    std::vector<RunResult> rows(jobs.size());
    std::vector<History> hist(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                auto out = run_split(data, *jobs[i].spec, plan.splits[jobs[i].split_id], settings,
                                     jobs[i].seed, jobs[i].resample);
                out.result.split_id = jobs[i].split_id;
                rows[i] = out.result;
                if (histories) hist[i] = std::move(out.history);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };

    const int n_threads = std::max(1, std::min<int>(settings.jobs, static_cast<int>(jobs.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    BenchmarkReport report;
    report.rows = std::move(rows);
    if (histories) *histories = std::move(hist);
    aggregate(report);
    return report;
}

void aggregate(BenchmarkReport& report) {
    report.aggregates.clear();
    std::vector<std::string> order;
    for (const auto& r : report.rows)
        if (std::find(order.begin(), order.end(), r.spec) == order.end()) order.push_back(r.spec);

    for (const auto& name : order) {
        Aggregate a;
        a.spec = name;
        double sum = 0.0;
        for (const auto& r : report.rows)
            if (r.spec == name) {
                sum += r.test_bacc;
                ++a.runs;
            }
        a.mean = sum / double(a.runs);
        double ss = 0.0;
        for (const auto& r : report.rows)
            if (r.spec == name) ss += (r.test_bacc - a.mean) * (r.test_bacc - a.mean);
        a.stddev = std::sqrt(ss / double(a.runs));
        report.aggregates.push_back(a);
    }

    // competition ranks on mean accuracy, ties averaged
    for (auto& a : report.aggregates) {
        double less = 0.0, equal = 0.0;
        for (const auto& b : report.aggregates) {
            if (b.mean > a.mean) less += 1.0;
            if (b.mean == a.mean) equal += 1.0;
        }
        a.rank = less + (equal + 1.0) / 2.0;
    }
}

std::vector<CurveResult> curve_study(const TabularDataset& data,
                                     const std::vector<double>& fixed_alphas, bool include_decay,
                                     const GraphConfig& graph, const SplitPlan& plan,
                                     const BenchSettings& settings) {
    std::vector<ModelSpec> specs;
    for (double a : fixed_alphas) {
        ModelSpec s;
        s.name = "alpha_" + std::to_string(a).substr(0, 3);
        s.graph = graph;
        s.schedule.mode = MixingSchedule::Mode::Fixed;
        s.schedule.fixed_alpha = a;
        if (a == 0.0) s.use_gnn = false;  // exactly the plain-MLP baseline
        specs.push_back(s);
    }
    if (include_decay) {
        ModelSpec s;
        s.name = "decay";
        s.graph = graph;
        s.schedule.mode = MixingSchedule::Mode::LinearDecay;
        specs.push_back(s);
    }

    BenchSettings cfg = settings;
    cfg.train.patience = cfg.train.max_steps;  // curves need the full horizon

    std::vector<CurveResult> curves;
    for (const auto& spec : specs) {
        std::vector<History> histories;
        run_benchmark(data, {spec}, plan, cfg, &histories);
        CurveResult c;
        c.name = spec.name;
        const std::size_t steps = histories[0].rows.size();
        c.train_loss.assign(steps, 0.0);
        c.val_loss.assign(steps, 0.0);
        for (const auto& h : histories)
            for (std::size_t i = 0; i < steps; ++i) {
                c.train_loss[i] += h.rows[i].train_loss / double(histories.size());
                c.val_loss[i] += h.rows[i].val_loss / double(histories.size());
            }
        curves.push_back(std::move(c));
    }
    return curves;
}

void write_curves_csv(const std::vector<CurveResult>& curves, const std::string& path) {
    std::ofstream out(path);
    out.precision(10);
    out << "step";
    for (const auto& c : curves) out << ',' << c.name << "_train," << c.name << "_val";
    out << '\n';
    const std::size_t steps = curves.empty() ? 0 : curves[0].train_loss.size();
    for (std::size_t i = 0; i < steps; ++i) {
        out << i;
        for (const auto& c : curves) out << ',' << c.train_loss[i] << ',' << c.val_loss[i];
        out << '\n';
    }
}

}  // namespace gcondnet
