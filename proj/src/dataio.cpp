#include "gcondnet/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "gcondnet/rng.hpp"

namespace gcondnet {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && std::isfinite(out);
}

bool parse_int(const std::string& s, int& out) {
    const std::string t = trim(s);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    return ec == std::errc() && p == t.data() + t.size();
}

}  // namespace

TabularDataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw CsvError(CsvErrorCode::MissingFile, "cannot open file: " + path);

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) lines.push_back(line);
    }
    if (lines.empty()) throw CsvError(CsvErrorCode::EmptyDataset, "empty file: " + path);

    int label_index = -1;
    const bool label_is_index = parse_int(label_column, label_index);

    auto first = split_line(lines[0]);
    bool has_header = false;
    if (!label_is_index) {
        has_header = true;  // header row required when the label column is a name
    } else {
        // header auto-detection: any non-numeric cell in the first row
        double v;
        for (const auto& c : first)
            if (!parse_double(c, v)) { has_header = true; break; }
    }

    std::vector<std::string> header;
    std::size_t first_data = 0;
    if (has_header) {
        for (auto& c : first) header.push_back(trim(c));
        first_data = 1;
    }

    const int n_cols = static_cast<int>(first.size());
    if (label_is_index) {
        if (label_index < 0 || label_index >= n_cols)
            throw CsvError(CsvErrorCode::LabelColumnAbsent,
                           "label column index " + label_column + " out of range (columns: " +
                               std::to_string(n_cols) + ")");
    } else {
        auto it = std::find(header.begin(), header.end(), trim(label_column));
        if (it == header.end())
            throw CsvError(CsvErrorCode::LabelColumnAbsent, "label column not found: " + label_column);
        label_index = static_cast<int>(it - header.begin());
    }

    const std::size_t n_rows = lines.size() - first_data;
    if (n_rows == 0 || n_cols < 2)
        throw CsvError(CsvErrorCode::EmptyDataset, "no data rows or no feature columns in " + path);

    TabularDataset data;
    data.matrix.resize(static_cast<int>(n_rows), n_cols - 1);
    data.labels.resize(n_rows);

    std::map<std::string, int> label_map;  // dense ids in first-appearance order
    std::vector<int> order;

    for (std::size_t r = 0; r < n_rows; ++r) {
        auto cells = split_line(lines[first_data + r]);
        if (static_cast<int>(cells.size()) != n_cols)
            throw CsvError(CsvErrorCode::NonNumericCell,
                           "row " + std::to_string(r) + " has " + std::to_string(cells.size()) +
                               " cells, expected " + std::to_string(n_cols));
        int fc = 0;
        for (int c = 0; c < n_cols; ++c) {
            if (c == label_index) {
                const std::string key = trim(cells[c]);
                auto it = label_map.find(key);
                if (it == label_map.end()) {
                    it = label_map.emplace(key, static_cast<int>(label_map.size())).first;
                    // first-appearance order: map value is appearance rank
                }
                data.labels[r] = it->second;
            } else {
                double v;
                if (!parse_double(cells[c], v))
                    throw CsvError(CsvErrorCode::NonNumericCell,
                                   "non-numeric cell at row " + std::to_string(r) + ", column " +
                                       std::to_string(c) + ": '" + trim(cells[c]) + "'");
                data.matrix(static_cast<int>(r), fc++) = v;
            }
        }
    }
    // std::map assigned ids in first-appearance order already (emplace on miss)
    data.class_count = static_cast<int>(label_map.size());

    if (has_header) {
        for (int c = 0; c < n_cols; ++c)
            if (c != label_index) data.feature_names.push_back(header[c]);
    }
    return data;
}

void save_csv(const TabularDataset& data, const std::string& path, const std::string& label_name) {
    std::ofstream out(path);
    if (!out) throw CsvError(CsvErrorCode::MissingFile, "cannot write file: " + path);
    out.precision(17);
    const int d = data.num_features();
    for (int j = 0; j < d; ++j) {
        if (j < static_cast<int>(data.feature_names.size()))
            out << data.feature_names[j];
        else
            out << "f" << j;
        out << ',';
    }
    out << label_name << '\n';
    for (int i = 0; i < data.num_samples(); ++i) {
        for (int j = 0; j < d; ++j) out << data.matrix(i, j) << ',';
        out << data.labels[i] << '\n';
    }
}

Normalizer zscore_fit(const Eigen::MatrixXd& train_matrix) {
    const auto n = train_matrix.rows();
    Normalizer norm;
    norm.means = train_matrix.colwise().mean();
    Eigen::MatrixXd centred = train_matrix.rowwise() - norm.means.transpose();
    norm.stds = (centred.array().square().colwise().sum() / double(n)).sqrt();
    norm.stds = norm.stds.cwiseMax(Normalizer::kStdFloor);
    return norm;
}

Eigen::MatrixXd zscore_apply(const Normalizer& norm, const Eigen::MatrixXd& matrix) {
    if (matrix.cols() != norm.means.size())
        throw std::invalid_argument("zscore_apply: column count mismatch (" +
                                    std::to_string(matrix.cols()) + " vs fitted " +
                                    std::to_string(norm.means.size()) + ")");
    return (matrix.rowwise() - norm.means.transpose()).array().rowwise() /
           norm.stds.transpose().array();
}

SplitPlan stratified_splits(const std::vector<int>& labels, int k, int r, double val_fraction,
                            std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("stratified_splits: k must be >= 2");
    if (val_fraction <= 0.0 || val_fraction >= 1.0)
        throw std::invalid_argument("stratified_splits: val_fraction must be in (0, 1)");

    const int n = static_cast<int>(labels.size());
    const int c = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::vector<int>> by_class(c);
    for (int i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
    for (int cls = 0; cls < c; ++cls)
        if (static_cast<int>(by_class[cls].size()) < k)
            throw std::invalid_argument("stratified_splits: class " + std::to_string(cls) + " has " +
                                        std::to_string(by_class[cls].size()) + " members, fewer than k=" +
                                        std::to_string(k));

    SplitPlan plan;
    plan.folds = k;
    plan.repeats = r;
    plan.seed = seed;

    for (int rep = 0; rep < r; ++rep) {
        // per-class shuffle, then round-robin deal into k test folds
        std::vector<std::vector<int>> fold_test(k);
        auto eng = make_engine(seed, static_cast<std::uint64_t>(rep));
        for (int cls = 0; cls < c; ++cls) {
            auto idx = by_class[cls];
            std::shuffle(idx.begin(), idx.end(), eng);
            for (std::size_t i = 0; i < idx.size(); ++i) fold_test[i % k].push_back(idx[i]);
        }
        for (int f = 0; f < k; ++f) {
            Split s;
            s.test = fold_test[f];
            std::sort(s.test.begin(), s.test.end());
            std::vector<char> in_test(n, 0);
            for (int i : s.test) in_test[i] = 1;

            std::vector<std::vector<int>> pool(c);
            for (int i = 0; i < n; ++i)
                if (!in_test[i]) pool[labels[i]].push_back(i);

            // stratified validation holdout, seeded by (repeat, fold)
            auto veng = make_engine(seed, 1000003ULL * (rep + 1) + static_cast<std::uint64_t>(f));
            for (int cls = 0; cls < c; ++cls) {
                auto idx = pool[cls];
                std::shuffle(idx.begin(), idx.end(), veng);
                int n_val = static_cast<int>(std::floor(val_fraction * double(idx.size()) + 0.5));
                n_val = std::min(n_val, static_cast<int>(idx.size()) - 1);
                for (std::size_t i = 0; i < idx.size(); ++i)
                    (static_cast<int>(i) < n_val ? s.val : s.train).push_back(idx[i]);
            }
            if (s.val.empty() && !s.train.empty()) {
                // guarantee a non-empty validation set on tiny datasets
                s.val.push_back(s.train.back());
                s.train.pop_back();
            }
            std::sort(s.val.begin(), s.val.end());
            std::sort(s.train.begin(), s.train.end());
            plan.splits.push_back(std::move(s));
        }
    }
    return plan;
}

std::vector<double> class_weights(const std::vector<int>& labels, int class_count) {
    std::vector<double> counts(class_count, 0.0);
    for (int y : labels) counts[y] += 1.0;
    std::vector<double> w(class_count);
    for (int cls = 0; cls < class_count; ++cls)
        w[cls] = counts[cls] > 0 ? double(labels.size()) / (double(class_count) * counts[cls]) : 0.0;
    return w;
}

}  // namespace gcondnet
