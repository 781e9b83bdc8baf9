#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcondnet {

struct TabularDataset {
    Eigen::MatrixXd matrix;  // N x D
    std::vector<int> labels;  // dense, in [0, class_count)
    std::vector<std::string> feature_names;  // empty when the file had no header
    int class_count = 0;

    int num_samples() const { return static_cast<int>(matrix.rows()); }
    int num_features() const { return static_cast<int>(matrix.cols()); }
};

struct Normalizer {
    Eigen::VectorXd means;
    Eigen::VectorXd stds;  // floored at kStdFloor
    static constexpr double kStdFloor = 1e-8;
};

struct Split {
    std::vector<int> train;  // training core, excludes validation
    std::vector<int> val;
    std::vector<int> test;
};

struct SplitPlan {
    int folds = 0;
    int repeats = 0;
    std::uint64_t seed = 0;
    std::vector<Split> splits;  // folds * repeats entries, repeat-major
};

enum class CsvErrorCode { MissingFile, NonNumericCell, EmptyDataset, LabelColumnAbsent };

class CsvError : public std::runtime_error {
public:
    CsvError(CsvErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    CsvErrorCode code() const { return code_; }

private:
    CsvErrorCode code_;
};

/// label_column is either a header name or a 0-based column index given as an
/// integer string. A header row is required when a name is used.
TabularDataset load_csv(const std::string& path, const std::string& label_column);

void save_csv(const TabularDataset& data, const std::string& path, const std::string& label_name = "label");

Normalizer zscore_fit(const Eigen::MatrixXd& train_matrix);
inline Normalizer zscore_fit(const TabularDataset& train) { return zscore_fit(train.matrix); }

Eigen::MatrixXd zscore_apply(const Normalizer& norm, const Eigen::MatrixXd& matrix);

/// Stratified k-fold plan with r repeats and a stratified validation holdout
/// carved from each split's training portion. Deterministic under `seed`.
SplitPlan stratified_splits(const std::vector<int>& labels, int k, int r, double val_fraction,
                            std::uint64_t seed);

/// Per-class weights w_c = N / (C * N_c) computed from training labels.
std::vector<double> class_weights(const std::vector<int>& labels, int class_count);

}  // namespace gcondnet
