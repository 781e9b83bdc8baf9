#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gcondnet/graphs.hpp"

namespace gcondnet {

enum class InitKind { Kaiming, Pca, Nmf, Wl };

InitKind init_kind_from_string(const std::string& s);
std::string to_string(InitKind k);

/// i.i.d. N(0, 2/cols) entries (fan_in = cols for an out-by-in weight).
Eigen::MatrixXd kaiming_init(int rows, int cols, std::mt19937_64& rng);

/// Zero-centre each row, then scale it so the row's population std equals
/// sqrt(2/cols). Rows with zero variance after centring are replaced by a
/// fresh (centred, rescaled) Kaiming row.
Eigen::MatrixXd rescale_to_kaiming(const Eigen::MatrixXd& w, std::mt19937_64& rng);

struct PcaInit {
    Eigen::MatrixXd w;  // k x D, rescaled
    Eigen::MatrixXd raw;  // k x D loadings before rescaling
    std::vector<int> padded_rows;  // rows beyond the data rank, Kaiming-filled
};

/// Rows are the top-k right singular vectors of the column-centred training
/// matrix; rank-deficient rows are padded with Kaiming draws.
PcaInit pca_init(const Eigen::MatrixXd& x_train, int k, std::mt19937_64& rng);

/// Multiplicative-update NMF (Frobenius objective) on the column-min-shifted
/// matrix; returns the rescaled H (k x D).
Eigen::MatrixXd nmf_init(const Eigen::MatrixXd& x_train, int k, std::mt19937_64& rng,
                         int iterations = 500);

/// Raw NMF factors before rescaling, plus the per-iteration objective. The
/// objective must be monotone non-increasing.
struct NmfResult {
    Eigen::MatrixXd w;  // N x k
    Eigen::MatrixXd h;  // k x D
    std::vector<double> objective;
};
NmfResult nmf_factorize(const Eigen::MatrixXd& x_nonneg, int k, std::mt19937_64& rng,
                        int iterations);

/// Per-graph WL colour refinement (canonical signature ranks, so the result
/// is invariant under node relabelling), histogrammed into k bins over a
/// range shared across all graphs and normalized to a probability density.
Eigen::MatrixXd wl_init(const std::vector<FeatureGraph>& graphs, int k, std::mt19937_64& rng,
                        int wl_iterations = 3);

/// Pre-rescale WL histogram columns (each sums to 1); exposed for the
/// isomorphism-invariance contract.
Eigen::MatrixXd wl_histogram_columns(const std::vector<FeatureGraph>& graphs, int k,
                                     int wl_iterations = 3);

/// Final node colours of WL refinement, as canonical ranks.
std::vector<int> wl_colors(const FeatureGraph& g, int iterations);

/// Dispatch: first-layer matrix (k x D) for a scheme. WL requires graphs.
Eigen::MatrixXd first_layer_init(InitKind kind, const Eigen::MatrixXd& x_train_normalized,
                                 const std::vector<FeatureGraph>& graphs, int k,
                                 std::uint64_t seed);

}  // namespace gcondnet
