#include "gcondnet/serialize.hpp"

#include <fstream>
#include <stdexcept>

namespace gcondnet {

Json matrix_to_json(const Eigen::MatrixXd& m) {
    Json j;
    j["shape"] = {m.rows(), m.cols()};
    std::vector<double> data;
    data.reserve(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
    j["data"] = std::move(data);
    return j;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
    const auto shape = j.at("shape");
    Eigen::MatrixXd m(shape[0].get<Eigen::Index>(), shape[1].get<Eigen::Index>());
    const auto& data = j.at("data");
    std::size_t p = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = data[p++].get<double>();
    return m;
}

Json split_plan_to_json(const SplitPlan& plan) {
    Json j;
    j["format_version"] = 1;
    j["folds"] = plan.folds;
    j["repeats"] = plan.repeats;
    j["seed"] = plan.seed;
    Json splits = Json::array();
    for (const auto& s : plan.splits)
        splits.push_back({{"train", s.train}, {"val", s.val}, {"test", s.test}});
    j["splits"] = std::move(splits);
    return j;
}

SplitPlan split_plan_from_json(const Json& j) {
    SplitPlan plan;
    plan.folds = j.at("folds").get<int>();
    plan.repeats = j.at("repeats").get<int>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& s : j.at("splits")) {
        Split sp;
        sp.train = s.at("train").get<std::vector<int>>();
        sp.val = s.at("val").get<std::vector<int>>();
        sp.test = s.at("test").get<std::vector<int>>();
        plan.splits.push_back(std::move(sp));
    }
    return plan;
}

std::string graph_kind_to_string(GraphKind k) {
    switch (k) {
        case GraphKind::Knn: return "knn";
        case GraphKind::Srd: return "srd";
        case GraphKind::Random: return "random";
    }
    return "?";
}

GraphKind graph_kind_from_string(const std::string& s) {
    if (s == "knn") return GraphKind::Knn;
    if (s == "srd") return GraphKind::Srd;
    if (s == "random") return GraphKind::Random;
    throw std::invalid_argument("unknown graph kind: " + s);
}

Json graph_bundle_to_json(const GraphBundle& bundle) {
    Json j;
    j["format_version"] = 1;
    j["config"] = {{"type", graph_kind_to_string(bundle.config.kind)},
                   {"k", bundle.config.k},
                   {"rel_dist", bundle.config.rel_dist},
                   {"max_degree", bundle.config.max_degree},
                   {"mu", bundle.config.mu},
                   {"sigma", bundle.config.sigma}};
    j["seed"] = bundle.seed;
    Json graphs = Json::array();
    for (const auto& g : bundle.graphs) {
        Json gj;
        gj["node_count"] = g.node_count;
        std::vector<double> vals(g.values.data(), g.values.data() + g.values.size());
        gj["values"] = std::move(vals);
        Json edges = Json::array();
        for (const auto& e : g.edges) edges.push_back({e.first, e.second});
        gj["edges"] = std::move(edges);
        graphs.push_back(std::move(gj));
    }
    j["graphs"] = std::move(graphs);
    return j;
}

GraphBundle graph_bundle_from_json(const Json& j) {
    GraphBundle b;
    const auto& c = j.at("config");
    b.config.kind = graph_kind_from_string(c.at("type").get<std::string>());
    b.config.k = c.at("k").get<int>();
    b.config.rel_dist = c.at("rel_dist").get<double>();
    b.config.max_degree = c.at("max_degree").get<int>();
    b.config.mu = c.at("mu").get<double>();
    b.config.sigma = c.at("sigma").get<double>();
    b.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& gj : j.at("graphs")) {
        FeatureGraph g;
        g.node_count = gj.at("node_count").get<int>();
        const auto vals = gj.at("values").get<std::vector<double>>();
        g.values = Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
        for (const auto& e : gj.at("edges")) g.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
        b.graphs.push_back(std::move(g));
    }
    return b;
}

Json trained_model_to_json(const MlpParams<double>& mlp, const Eigen::MatrixXd& first_layer) {
    Json j;
    j["format_version"] = 1;
    Json tensors;
    tensors["first_layer"] = matrix_to_json(first_layer);
    auto put_row = [&](const std::string& name, const Eigen::Matrix<double, 1, Eigen::Dynamic>& r) {
        tensors[name] = matrix_to_json(r);
    };
    for (std::size_t l = 0; l < mlp.hidden.size(); ++l) {
        const auto& layer = mlp.hidden[l];
        const std::string tag = "mlp.l" + std::to_string(l);
        if (l > 0) tensors[tag + ".w"] = matrix_to_json(layer.w.value);
        tensors[tag + ".b"] = matrix_to_json(layer.b.value);
        tensors[tag + ".gamma"] = matrix_to_json(layer.gamma.value);
        tensors[tag + ".beta"] = matrix_to_json(layer.beta.value);
        put_row(tag + ".running_mean", layer.running.mean);
        put_row(tag + ".running_var", layer.running.var);
    }
    tensors["mlp.out.w"] = matrix_to_json(mlp.out_w.value);
    tensors["mlp.out.b"] = matrix_to_json(mlp.out_b.value);
    j["tensors"] = std::move(tensors);
    j["hyper"] = {{"dropout_p", mlp.dropout_p},
                  {"leaky_slope", mlp.leaky_slope},
                  {"bn_momentum", mlp.bn_momentum},
                  {"bn_eps", mlp.bn_eps},
                  {"widths", [&] {
                       std::vector<int> w;
                       for (const auto& layer : mlp.hidden)
                           w.push_back(static_cast<int>(layer.b.value.cols()));
                       return w;
                   }()}};
    return j;
}

void trained_model_from_json(const Json& j, MlpParams<double>& mlp, Eigen::MatrixXd& first_layer) {
    const auto& tensors = j.at("tensors");
    first_layer = matrix_from_json(tensors.at("first_layer"));
    const auto& hyper = j.at("hyper");
    const auto widths = hyper.at("widths").get<std::vector<int>>();

    mlp = MlpParams<double>();
    mlp.dropout_p = hyper.at("dropout_p").get<double>();
    mlp.leaky_slope = hyper.at("leaky_slope").get<double>();
    mlp.bn_momentum = hyper.at("bn_momentum").get<double>();
    mlp.bn_eps = hyper.at("bn_eps").get<double>();
    for (std::size_t l = 0; l < widths.size(); ++l) {
        typename MlpParams<double>::Layer layer;
        const std::string tag = "mlp.l" + std::to_string(l);
        if (l > 0) layer.w = Parameter<double>(tag + ".w", matrix_from_json(tensors.at(tag + ".w")));
        layer.b = Parameter<double>(tag + ".b", matrix_from_json(tensors.at(tag + ".b")));
        layer.gamma = Parameter<double>(tag + ".gamma", matrix_from_json(tensors.at(tag + ".gamma")));
        layer.beta = Parameter<double>(tag + ".beta", matrix_from_json(tensors.at(tag + ".beta")));
        layer.running.mean = matrix_from_json(tensors.at(tag + ".running_mean"));
        layer.running.var = matrix_from_json(tensors.at(tag + ".running_var"));
        layer.running.initialized = true;
        mlp.hidden.push_back(std::move(layer));
    }
    mlp.out_w = Parameter<double>("mlp.out.w", matrix_from_json(tensors.at("mlp.out.w")));
    mlp.out_b = Parameter<double>("mlp.out.b", matrix_from_json(tensors.at("mlp.out.b")));
}

Json init_checkpoint_to_json(const std::string& scheme, const Eigen::MatrixXd& w) {
    Json j;
    j["format_version"] = 1;
    j["scheme"] = scheme;
    j["first_layer"] = matrix_to_json(w);
    return j;
}

Eigen::MatrixXd init_checkpoint_from_json(const Json& j, std::string* scheme) {
    if (scheme) *scheme = j.at("scheme").get<std::string>();
    return matrix_from_json(j.at("first_layer"));
}

Json report_to_json(const BenchmarkReport& report) {
    Json j;
    j["format_version"] = 1;
    Json rows = Json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"spec", r.spec},
                        {"split_id", r.split_id},
                        {"resample", r.resample},
                        {"seed", r.seed},
                        {"test_balanced_accuracy", r.test_bacc},
                        {"val_balanced_accuracy", r.val_bacc},
                        {"best_val_loss", r.best_val_loss},
                        {"steps", r.steps}});
    j["runs"] = std::move(rows);
    Json aggs = Json::array();
    for (const auto& a : report.aggregates)
        aggs.push_back({{"spec", a.spec},
                        {"mean", a.mean},
                        {"std", a.stddev},
                        {"runs", a.runs},
                        {"rank", a.rank}});
    j["aggregates"] = std::move(aggs);
    return j;
}

void write_report_csv(const BenchmarkReport& report, const std::string& path) {
    std::ofstream out(path);
    out.precision(10);
    out << "spec,split_id,resample,seed,test_balanced_accuracy,val_balanced_accuracy,best_val_loss,steps\n";
    for (const auto& r : report.rows)
        out << r.spec << ',' << r.split_id << ',' << r.resample << ',' << r.seed << ','
            << r.test_bacc << ',' << r.val_bacc << ',' << r.best_val_loss << ',' << r.steps << '\n';
}

void write_json_file(const Json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return Json::parse(in);
}

}  // namespace gcondnet
