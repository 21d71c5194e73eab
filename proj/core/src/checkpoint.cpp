// SPDX-License-Identifier: Apache-2.0
#include "flowpinn/checkpoint.hpp"

#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/vector.hpp>
#include <fstream>
#include <sstream>

#include "flowpinn/errors.hpp"

namespace flowpinn {

namespace {

constexpr std::uint32_t kMagic = 0x46504e43;  // "FPNC"
constexpr std::uint32_t kVersion = 1;

std::vector<double> to_vector(const Eigen::Ref<const Eigen::VectorXd>& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
    std::ostringstream out(std::ios::binary);
    {
        cereal::PortableBinaryOutputArchive ar(out);
        ar(kMagic, kVersion, c.seed, c.epoch, c.problem);
        ar(c.scales.length, c.scales.velocity, c.scales.pressure);
        const LayerSizes sizes = c.params.layer_sizes();
        ar(sizes);
        ar(to_vector(c.params.flatten().head(static_cast<Eigen::Index>(c.params.network_size()))));
        const auto& unknowns = c.params.unknowns();
        ar(static_cast<std::uint64_t>(unknowns.size()));
        for (const auto& u : unknowns) ar(u.name, u.raw, u.positive);
        ar(c.optimizer.has_value());
        if (c.optimizer) {
            const auto& a = *c.optimizer;
            ar(a.config.beta1, a.config.beta2, a.config.epsilon, a.step);
            ar(to_vector(a.first_moment), to_vector(a.second_moment));
        }
    }
    return out.str();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
    std::istringstream in(bytes, std::ios::binary);
    Checkpoint c;
    try {
        cereal::PortableBinaryInputArchive ar(in);
        std::uint32_t magic = 0, version = 0;
        ar(magic, version);
        if (magic != kMagic) throw DataError("not a checkpoint file");
        if (version != kVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
        ar(c.seed, c.epoch, c.problem);
        ar(c.scales.length, c.scales.velocity, c.scales.pressure);
        LayerSizes sizes;
        std::vector<double> network;
        ar(sizes, network);
        if (sizes.size() < 2) throw DataError("checkpoint has no layers");
        std::vector<DenseLayer> layers;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            if (sizes[l] <= 0 || sizes[l + 1] <= 0) throw DataError("checkpoint has a non-positive layer size");
            layers.push_back({Eigen::MatrixXd::Zero(sizes[l + 1], sizes[l]), Eigen::VectorXd::Zero(sizes[l + 1])});
        }
        std::uint64_t n_unknowns = 0;
        ar(n_unknowns);
        std::vector<Unknown> unknowns(n_unknowns);
        for (auto& u : unknowns) ar(u.name, u.raw, u.positive);
        ParamVector params(std::move(layers), std::move(unknowns));
        if (network.size() != params.network_size()) throw DataError("checkpoint parameter count mismatch");
        Eigen::VectorXd flat = params.flatten();
        flat.head(static_cast<Eigen::Index>(network.size())) = to_eigen(network);
        params.assign(flat);
        c.params = std::move(params);

        bool has_optimizer = false;
        ar(has_optimizer);
        if (has_optimizer) {
            AdamState a;
            std::vector<double> m, v;
            ar(a.config.beta1, a.config.beta2, a.config.epsilon, a.step, m, v);
            if (m.size() != c.params.size() || v.size() != c.params.size()) {
                throw DataError("checkpoint optimizer state does not match the parameters");
            }
            a.first_moment = to_eigen(m);
            a.second_moment = to_eigen(v);
            c.optimizer = std::move(a);
        }
    } catch (const cereal::Exception& e) {
        throw DataError(std::string("truncated or corrupt checkpoint: ") + e.what());
    }
    return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    const std::string bytes = serialize_checkpoint(checkpoint);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint to " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing checkpoint to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return deserialize_checkpoint(buffer.str());
}

}  // namespace flowpinn
