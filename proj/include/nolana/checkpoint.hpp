#pragma once

#include "nolana/learner.hpp"

#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace nolana {

// Versioned key-value snapshot of a warmed-up learner: weights,
// hyperparameters, loss kind, and the full landmark state. Doubles are
// serialized losslessly, so a resumed learner continues bit-for-bit.
inline nlohmann::json checkpoint_to_json(const NolanaLearner& learner) {
    if (!learner.warmed_up())
        throw InsufficientWarmupError("cannot checkpoint before warm-up");
    const LandmarkState& state = learner.state();
    const OnlineModel& model = learner.model();

    auto matrix_rows = [](const Matrix& mat) {
        std::vector<std::vector<double>> rows(static_cast<std::size_t>(mat.rows()));
        for (Index i = 0; i < mat.rows(); ++i) {
            rows[static_cast<std::size_t>(i)].assign(mat.row(i).begin(),
                                                     mat.row(i).end());
        }
        return rows;
    };

    nlohmann::json doc;
    doc["version"] = 1;
    doc["model"] = {
        {"w", std::vector<double>(model.w.begin(), model.w.end())},
        {"eta", model.eta},
        {"lambda", model.lambda},
        {"theta", model.theta},
        {"loss", to_string(model.loss)},
    };
    doc["state"] = {
        {"landmarks", matrix_rows(state.landmarks())},
        {"counts", state.counts()},
        {"eigenvectors", matrix_rows(state.eig().vectors)},
        {"eigenvalues",
         std::vector<double>(state.eig().values.begin(), state.eig().values.end())},
        {"epsilon", state.epsilon()},
        {"gamma", state.kernel().gamma},
        {"power_iters", state.power_iters()},
        {"m", state.m()},
        {"r", state.r()},
        {"dim", state.dim()},
    };
    doc["step_count"] = learner.step_count();
    return doc;
}

namespace detail {

inline Matrix matrix_from_rows(const nlohmann::json& rows) {
    const Index m = static_cast<Index>(rows.size());
    if (m == 0) throw IngestionError("checkpoint: empty matrix");
    const Index cols = static_cast<Index>(rows.at(0).size());
    Matrix out(m, cols);
    for (Index i = 0; i < m; ++i) {
        const auto& row = rows.at(static_cast<std::size_t>(i));
        if (static_cast<Index>(row.size()) != cols)
            throw IngestionError("checkpoint: ragged matrix");
        for (Index j = 0; j < cols; ++j)
            out(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
    }
    return out;
}

}  // namespace detail

// Rebuilds a learner mid-stream. The landmark factorization is restored
// exactly as stored (not recomputed), so the resumed trajectory matches
// an uninterrupted run.
inline NolanaLearner checkpoint_from_json(const nlohmann::json& doc) {
    if (doc.at("version").get<int>() != 1)
        throw IngestionError("checkpoint: unsupported version");
    const auto& jstate = doc.at("state");
    const auto& jmodel = doc.at("model");

    NolanaConfig cfg;
    cfg.m = jstate.at("m").get<Index>();
    cfg.r = jstate.at("r").get<Index>();
    cfg.epsilon = jstate.at("epsilon").get<double>();
    cfg.kernel.gamma = jstate.at("gamma").get<double>();
    cfg.power_iters = jstate.at("power_iters").get<int>();
    cfg.eta = jmodel.at("eta").get<double>();
    cfg.lambda = jmodel.at("lambda").get<double>();
    cfg.theta = jmodel.at("theta").get<double>();
    cfg.loss = loss_from_string(jmodel.at("loss").get<std::string>());

    Matrix landmarks = detail::matrix_from_rows(jstate.at("landmarks"));
    EigPair eig;
    eig.vectors = detail::matrix_from_rows(jstate.at("eigenvectors"));
    const auto values = jstate.at("eigenvalues").get<std::vector<double>>();
    eig.values =
        Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
    std::vector<long> counts = jstate.at("counts").get<std::vector<long>>();
    LandmarkState state = LandmarkState::restore(
        std::move(landmarks), std::move(counts), std::move(eig), cfg.epsilon,
        cfg.kernel, cfg.power_iters);

    OnlineModel model;
    const auto w = jmodel.at("w").get<std::vector<double>>();
    model.w = Eigen::Map<const Vector>(w.data(), static_cast<Index>(w.size()));
    model.eta = cfg.eta;
    model.lambda = cfg.lambda;
    model.theta = cfg.theta;
    model.loss = cfg.loss;

    NolanaLearner learner(cfg, std::move(state), std::move(model));
    learner.set_step_count(doc.at("step_count").get<long>());
    return learner;
}

inline void save_checkpoint(const std::string& path, const NolanaLearner& learner) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError("cannot write checkpoint '" + path + "'");
    out << checkpoint_to_json(learner).dump(2) << '\n';
}

inline NolanaLearner load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot read checkpoint '" + path + "'");
    nlohmann::json doc;
    in >> doc;
    return checkpoint_from_json(doc);
}

}  // namespace nolana
