#include "gcondnet/synth.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "gcondnet/rng.hpp"

namespace gcondnet {

TabularDataset make_planted_dataset(int n, int d, int informative, std::uint64_t seed,
                                    double signal, double shared, double noise,
                                    double label_flip) {
    auto rng = make_engine(seed, 301);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    TabularDataset data;
    data.matrix.resize(n, d);
    data.labels.resize(n);
    data.class_count = 2;

    // balanced classes, shuffled row order
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) y[i] = i % 2;
    std::shuffle(y.begin(), y.end(), rng);

    for (int i = 0; i < n; ++i) {
        const double z = y[i] == 0 ? -1.0 : 1.0;
        const double h = gauss(rng);
        for (int j = 0; j < d; ++j) {
            if (j < informative)
                data.matrix(i, j) = signal * z + shared * h + noise * gauss(rng);
            else
                data.matrix(i, j) = gauss(rng);
        }
        data.labels[i] = y[i];
        if (unif(rng) < label_flip) data.labels[i] = 1 - data.labels[i];
    }
    return data;
}

TabularDataset make_toy_dataset(int n, int d, std::uint64_t seed) {
    auto rng = make_engine(seed, 302);
    std::normal_distribution<double> gauss(0.0, 1.0);

    TabularDataset data;
    data.matrix.resize(n, d);
    data.labels.resize(n);
    data.class_count = 2;
    for (int i = 0; i < n; ++i) {
        const int y = i % 2;
        const double z = y == 0 ? -2.0 : 2.0;
        for (int j = 0; j < d; ++j)
            data.matrix(i, j) = (j < 3 ? z : 0.0) + 0.5 * gauss(rng);
        data.labels[i] = y;
    }
    return data;
}

}  // namespace gcondnet
