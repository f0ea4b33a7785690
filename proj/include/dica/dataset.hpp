#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "dica/common.hpp"

namespace dica {

/// One sample block: points observed from a single domain, with optional
/// per-point outputs (real targets or integer-coded class labels).
struct Domain {
    Eigen::MatrixXd inputs;                  // n_i x d
    std::optional<Eigen::VectorXd> outputs;  // length n_i
};

/// A multi-domain sample: N blocks in a fixed, domain-major order.
/// Flattening and all Gram construction preserve this order.
struct DomainDataset {
    std::vector<Domain> domains;

    [[nodiscard]] Eigen::Index num_domains() const {
        return static_cast<Eigen::Index>(domains.size());
    }

    [[nodiscard]] Eigen::Index total_size() const {
        Eigen::Index n = 0;
        for (const auto& d : domains) n += d.inputs.rows();
        return n;
    }

    [[nodiscard]] Eigen::Index dim() const {
        return domains.empty() ? 0 : domains.front().inputs.cols();
    }

    [[nodiscard]] std::vector<Eigen::Index> sizes() const {
        std::vector<Eigen::Index> s;
        s.reserve(domains.size());
        for (const auto& d : domains) s.push_back(d.inputs.rows());
        return s;
    }

    [[nodiscard]] bool has_outputs() const {
        return !domains.empty() && domains.front().outputs.has_value();
    }

    /// Checks the structural invariants: N >= 1, every block nonempty with a
    /// shared input dimension, outputs present for all blocks or for none.
    void validate() const {
        if (domains.empty()) throw InputError("dataset has no domains");
        const Eigen::Index d = domains.front().inputs.cols();
        const bool with_y = domains.front().outputs.has_value();
        for (std::size_t i = 0; i < domains.size(); ++i) {
            const auto& blk = domains[i];
            if (blk.inputs.rows() < 1)
                throw InputError("domain " + std::to_string(i) + " is empty");
            if (blk.inputs.cols() != d)
                throw InputError("domain " + std::to_string(i) +
                                 " input dimension mismatch");
            if (blk.outputs.has_value() != with_y)
                throw InputError("outputs must be present for all domains or none");
            if (with_y && blk.outputs->size() != blk.inputs.rows())
                throw InputError("domain " + std::to_string(i) +
                                 " output length mismatch");
        }
    }
};

/// A dataset flattened to pooled matrices, keeping domain-major order.
/// domain_ids[a] is the block index of row a.
struct Flattened {
    Eigen::MatrixXd inputs;
    std::optional<Eigen::VectorXd> outputs;
    std::vector<int> domain_ids;
};

inline Flattened flatten(const DomainDataset& data) {
    data.validate();
    const Eigen::Index n = data.total_size();
    Flattened out;
    out.inputs.resize(n, data.dim());
    out.domain_ids.resize(static_cast<std::size_t>(n));
    if (data.has_outputs()) out.outputs = Eigen::VectorXd(n);
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < data.domains.size(); ++i) {
        const auto& blk = data.domains[i];
        const Eigen::Index ni = blk.inputs.rows();
        out.inputs.middleRows(row, ni) = blk.inputs;
        if (out.outputs) out.outputs->segment(row, ni) = *blk.outputs;
        std::fill(out.domain_ids.begin() + row, out.domain_ids.begin() + row + ni,
                  static_cast<int>(i));
        row += ni;
    }
    return out;
}

/// Two datasets sharing the same inputs, one per regression target
/// (telemonitoring-style motor / total scores).
struct TwoTargetDataset {
    DomainDataset motor;
    DomainDataset total;
};

/// Inverse of flatten: regroups pooled rows into blocks by domain id.
inline DomainDataset regroup(const Eigen::MatrixXd& inputs,
                             const std::optional<Eigen::VectorXd>& outputs,
                             const std::vector<int>& domain_ids) {
    if (inputs.rows() != static_cast<Eigen::Index>(domain_ids.size()))
        throw InputError("domain_ids length does not match row count");
    int max_id = -1;
    for (int id : domain_ids) {
        if (id < 0) throw InputError("negative domain id");
        max_id = std::max(max_id, id);
    }
    DomainDataset data;
    data.domains.resize(static_cast<std::size_t>(max_id) + 1);
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(max_id) + 1, 0);
    for (int id : domain_ids) ++counts[static_cast<std::size_t>(id)];
    for (std::size_t i = 0; i < data.domains.size(); ++i) {
        data.domains[i].inputs.resize(counts[i], inputs.cols());
        if (outputs) data.domains[i].outputs = Eigen::VectorXd(counts[i]);
    }
    std::vector<Eigen::Index> fill(static_cast<std::size_t>(max_id) + 1, 0);
    for (Eigen::Index a = 0; a < inputs.rows(); ++a) {
        const auto id = static_cast<std::size_t>(domain_ids[static_cast<std::size_t>(a)]);
        data.domains[id].inputs.row(fill[id]) = inputs.row(a);
        if (outputs) (*data.domains[id].outputs)(fill[id]) = (*outputs)(a);
        ++fill[id];
    }
    data.validate();
    return data;
}

}  // namespace dica
