#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dica/common.hpp"
#include "dica/dataset.hpp"
#include "dica/transform.hpp"

namespace dica {

namespace detail {

/// 17 significant digits: enough to round-trip any IEEE double.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, long row) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError("cannot parse number '" + s + "'", row);
    }
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return {};
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(i, c) = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(c)).get<double>();
    return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dataset CSV: header `domain_id[,y],x1..xd`; rows may arrive in any order
// and are regrouped by ascending domain id.
// ---------------------------------------------------------------------------

inline void save_dataset_csv(const std::string& path, const DomainDataset& data) {
    data.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const bool with_y = data.has_outputs();
    out << "domain_id";
    if (with_y) out << ",y";
    for (Eigen::Index j = 0; j < data.dim(); ++j) out << ",x" << (j + 1);
    out << "\n";
    for (std::size_t i = 0; i < data.domains.size(); ++i) {
        const auto& dom = data.domains[i];
        for (Eigen::Index k = 0; k < dom.inputs.rows(); ++k) {
            out << i;
            if (with_y) out << ',' << detail::fmt_double((*dom.outputs)(k));
            for (Eigen::Index j = 0; j < dom.inputs.cols(); ++j)
                out << ',' << detail::fmt_double(dom.inputs(k, j));
            out << "\n";
        }
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline DomainDataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file " + path, 1);
    auto header = detail::split_csv_line(line);
    if (header.empty() || header[0] != "domain_id")
        throw ParseError("expected 'domain_id' as the first column in " + path, 1);
    const bool with_y = header.size() > 1 && header[1] == "y";
    const auto d = static_cast<Eigen::Index>(header.size()) - 1 - (with_y ? 1 : 0);
    if (d < 1) throw ParseError("no feature columns in " + path, 1);

    std::vector<int> ids;
    std::vector<double> ys;
    std::vector<Eigen::VectorXd> xs;
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (static_cast<Eigen::Index>(cells.size()) != d + 1 + (with_y ? 1 : 0))
            throw ParseError("wrong number of columns", row);
        ids.push_back(static_cast<int>(detail::parse_double(cells[0], row)));
        std::size_t c = 1;
        if (with_y) ys.push_back(detail::parse_double(cells[c++], row));
        Eigen::VectorXd x(d);
        for (Eigen::Index j = 0; j < d; ++j) x(j) = detail::parse_double(cells[c++], row);
        xs.push_back(std::move(x));
    }
    if (xs.empty()) throw ParseError("no data rows in " + path, row);

    // Regroup by ascending domain id.
    std::vector<int> unique_ids = ids;
    std::sort(unique_ids.begin(), unique_ids.end());
    unique_ids.erase(std::unique(unique_ids.begin(), unique_ids.end()), unique_ids.end());
    std::vector<int> compact(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
        compact[i] = static_cast<int>(
            std::lower_bound(unique_ids.begin(), unique_ids.end(), ids[i]) - unique_ids.begin());
    Eigen::MatrixXd inputs(static_cast<Eigen::Index>(xs.size()), d);
    for (std::size_t i = 0; i < xs.size(); ++i) inputs.row(static_cast<Eigen::Index>(i)) = xs[i];
    std::optional<Eigen::VectorXd> outputs;
    if (with_y) {
        outputs = Eigen::VectorXd(static_cast<Eigen::Index>(ys.size()));
        for (std::size_t i = 0; i < ys.size(); ++i) (*outputs)(static_cast<Eigen::Index>(i)) = ys[i];
    }
    return regroup(inputs, outputs, compact);
}

// ---------------------------------------------------------------------------
// Telemonitoring layout: subject id, motor and total targets, then feature
// columns. Both the original UCI header (subject#,age,sex,test_time,
// motor_UPDRS,total_UPDRS,16 voice measures) and the plain layout
// (subject_id,motor_UPDRS,total_UPDRS,x1..xd) are accepted; the UCI
// age/sex/test_time columns are not used as features.
// ---------------------------------------------------------------------------

inline TwoTargetDataset load_telemonitoring_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file " + path, 1);
    auto header = detail::split_csv_line(line);
    if (header.empty()) throw ParseError("empty header in " + path, 1);

    std::size_t id_col = 0, motor_col = 1, total_col = 2, feat_begin = 3;
    if (header[0] == "subject#") {
        if (header.size() < 7) throw ParseError("unexpected UCI header width", 1);
        motor_col = 4;
        total_col = 5;
        feat_begin = 6;
    } else if (header.size() < 4) {
        throw ParseError("expected subject id, two targets and features", 1);
    }
    const auto d = static_cast<Eigen::Index>(header.size() - feat_begin);

    std::vector<int> ids;
    std::vector<double> motor, total;
    std::vector<Eigen::VectorXd> xs;
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError("wrong number of columns", row);
        ids.push_back(static_cast<int>(detail::parse_double(cells[id_col], row)));
        motor.push_back(detail::parse_double(cells[motor_col], row));
        total.push_back(detail::parse_double(cells[total_col], row));
        Eigen::VectorXd x(d);
        for (Eigen::Index j = 0; j < d; ++j)
            x(j) = detail::parse_double(cells[feat_begin + static_cast<std::size_t>(j)], row);
        xs.push_back(std::move(x));
    }
    if (xs.empty()) throw ParseError("no data rows in " + path, row);

    std::vector<int> unique_ids = ids;
    std::sort(unique_ids.begin(), unique_ids.end());
    unique_ids.erase(std::unique(unique_ids.begin(), unique_ids.end()), unique_ids.end());
    std::vector<int> compact(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
        compact[i] = static_cast<int>(
            std::lower_bound(unique_ids.begin(), unique_ids.end(), ids[i]) - unique_ids.begin());

    Eigen::MatrixXd inputs(static_cast<Eigen::Index>(xs.size()), d);
    Eigen::VectorXd m_vec(static_cast<Eigen::Index>(xs.size()));
    Eigen::VectorXd t_vec(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        inputs.row(static_cast<Eigen::Index>(i)) = xs[i];
        m_vec(static_cast<Eigen::Index>(i)) = motor[i];
        t_vec(static_cast<Eigen::Index>(i)) = total[i];
    }
    TwoTargetDataset out;
    out.motor = regroup(inputs, m_vec, compact);
    out.total = regroup(inputs, t_vec, compact);
    return out;
}

inline void save_telemonitoring_csv(const std::string& path, const TwoTargetDataset& data) {
    data.motor.validate();
    data.total.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "subject_id,motor_UPDRS,total_UPDRS";
    for (Eigen::Index j = 0; j < data.motor.dim(); ++j) out << ",x" << (j + 1);
    out << "\n";
    for (std::size_t i = 0; i < data.motor.domains.size(); ++i) {
        const auto& md = data.motor.domains[i];
        const auto& td = data.total.domains[i];
        for (Eigen::Index k = 0; k < md.inputs.rows(); ++k) {
            out << i << ',' << detail::fmt_double((*md.outputs)(k)) << ','
                << detail::fmt_double((*td.outputs)(k));
            for (Eigen::Index j = 0; j < md.inputs.cols(); ++j)
                out << ',' << detail::fmt_double(md.inputs(k, j));
            out << "\n";
        }
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Transform serialization: a single self-describing JSON document. Loading
// recomputes the training Gram from the stored inputs, so projections of new
// points reproduce the original transform exactly.
// ---------------------------------------------------------------------------

inline nlohmann::json kernel_spec_to_json(const KernelSpec& k) {
    return {{"family", to_string(k.family)}, {"bandwidth", k.bandwidth}};
}

inline KernelSpec kernel_spec_from_json(const nlohmann::json& j) {
    KernelSpec k;
    k.family = kernel_family_from_string(j.at("family").get<std::string>());
    k.bandwidth = j.at("bandwidth").get<double>();
    return k;
}

inline nlohmann::json transform_to_json(const Transform& t) {
    nlohmann::json j;
    j["format"] = "dica-transform";
    j["version"] = 1;
    j["mode"] = to_string(t.config.mode);
    j["m"] = t.config.m;
    j["epsilon"] = t.config.epsilon;
    j["lambda"] = t.config.lambda;
    j["imag_tol"] = t.config.imag_tol;
    j["domain_sizes"] = t.domain_sizes;
    j["kx"] = kernel_spec_to_json(t.kx);
    j["ky"] = kernel_spec_to_json(t.ky);
    j["gamma"] = std::vector<double>(t.gamma.data(), t.gamma.data() + t.gamma.size());
    j["max_imag"] = t.max_imag;
    j["effective_rank"] = t.effective_rank;
    j["b"] = detail::matrix_to_json(t.b);
    j["train_inputs"] = detail::matrix_to_json(t.train_inputs);
    return j;
}

inline Transform transform_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "dica-transform")
        throw ParseError("not a dica-transform document", 1);
    Transform t;
    t.config.mode = fit_mode_from_string(j.at("mode").get<std::string>());
    t.config.m = j.at("m").get<Eigen::Index>();
    t.config.epsilon = j.at("epsilon").get<double>();
    t.config.lambda = j.at("lambda").get<double>();
    t.config.imag_tol = j.at("imag_tol").get<double>();
    t.domain_sizes = j.at("domain_sizes").get<std::vector<Eigen::Index>>();
    t.kx = kernel_spec_from_json(j.at("kx"));
    t.ky = kernel_spec_from_json(j.at("ky"));
    const auto gamma = j.at("gamma").get<std::vector<double>>();
    t.gamma = Eigen::Map<const Eigen::VectorXd>(gamma.data(),
                                                static_cast<Eigen::Index>(gamma.size()));
    t.max_imag = j.at("max_imag").get<double>();
    t.effective_rank = j.at("effective_rank").get<Eigen::Index>();
    t.b = detail::matrix_from_json(j.at("b"));
    t.train_inputs = detail::matrix_from_json(j.at("train_inputs"));

    // Rebuild the cached training-side Gram state from the stored inputs.
    DomainDataset data;
    Eigen::Index off = 0;
    for (const auto ni : t.domain_sizes) {
        Domain dom;
        dom.inputs = t.train_inputs.middleRows(off, ni);
        data.domains.push_back(std::move(dom));
        off += ni;
    }
    const GramMatrix k_raw = pooled_gram(t.kx, data, false);
    t.train_col_mean = k_raw.values.colwise().mean().transpose();
    t.train_total_mean = t.train_col_mean.mean();
    t.train_gram = center_gram(k_raw);
    return t;
}

inline void save_transform(const std::string& path, const Transform& t) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << transform_to_json(t).dump(1);
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline Transform load_transform(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), 1);
    }
    return transform_from_json(j);
}

}  // namespace dica
