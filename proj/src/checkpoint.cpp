#include "seqforge/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

namespace seqforge {
namespace nn {

namespace {

constexpr char kMagic[8] = {'S', 'F', 'C', 'K', 'P', 'T', '0', '1'};

struct NamedTensor {
    std::string name;
    Tensor* tensor;
};

// Deterministic enumeration: parameters, buffers, then Adam moments in
// optimizer order. Checkpoint bytes are a pure function of this order.
std::vector<NamedTensor> enumerate(CascadeState& state, CascadeOptimizers* opts) {
    std::vector<NamedTensor> out;
    std::vector<ParamRef> params;
    state.collect(params);
    for (auto& p : params) out.push_back({p.name, p.value});
    std::vector<BufferRef> buffers;
    state.collect_buffers(buffers);
    for (auto& b : buffers) out.push_back({b.name, b.value});
    if (opts) {
        auto add_opt = [&](const char* tag, Adam& adam, Generator* g, PatchDiscriminator* d) {
            std::vector<ParamRef> net_params;
            if (g) g->collect(tag, net_params);
            if (d) d->collect(tag, net_params);
            auto& m = adam.first_moments();
            auto& v = adam.second_moments();
            for (size_t i = 0; i < net_params.size(); ++i) {
                out.push_back({"adam." + net_params[i].name + ".m", &m[i]});
                out.push_back({"adam." + net_params[i].name + ".v", &v[i]});
            }
        };
        add_opt("d1", opts->d1, nullptr, &state.d1);
        add_opt("g1", opts->g1, &state.g1, nullptr);
        add_opt("d2", opts->d2, nullptr, &state.d2);
        add_opt("g2", opts->g2, &state.g2, nullptr);
    }
    return out;
}

}  // namespace

CascadeOptimizers CascadeOptimizers::create(const AdamConfig& config, CascadeState& state) {
    auto params_of = [&](auto& net) {
        std::vector<ParamRef> p;
        net.collect("net", p);
        return p;
    };
    return CascadeOptimizers{Adam(config, params_of(state.d1)), Adam(config, params_of(state.g1)),
                             Adam(config, params_of(state.d2)), Adam(config, params_of(state.g2))};
}

void save_checkpoint(const std::string& path, CascadeState& state, CascadeOptimizers* opts,
                     const CheckpointMeta& meta) {
    auto tensors = enumerate(state, opts);

    nlohmann::json header;
    header["format"] = "seqforge-checkpoint";
    header["version"] = 1;
    header["step"] = meta.step;
    header["epoch"] = meta.epoch;
    header["rng_state"] = meta.rng_state;
    header["plan"] = state.plan.to_json();
    header["has_optimizer"] = opts != nullptr;
    if (opts)
        header["adam_t"] = {{"d1", opts->d1.t()},
                            {"g1", opts->g1.t()},
                            {"d2", opts->d2.t()},
                            {"g2", opts->g2.t()}};
    nlohmann::json dir = nlohmann::json::array();
    uint64_t offset = 0;  // in floats, relative to payload start
    for (auto& t : tensors) {
        dir.push_back({{"name", t.name},
                       {"shape", {t.tensor->n(), t.tensor->c(), t.tensor->h(), t.tensor->w()}},
                       {"offset", offset}});
        offset += t.tensor->numel();
    }
    header["tensors"] = dir;

    std::string header_text = header.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure("checkpoint: cannot write " + path);
    out.write(kMagic, sizeof(kMagic));
    uint32_t len = uint32_t(header_text.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(header_text.data(), std::streamsize(header_text.size()));
    for (auto& t : tensors)
        out.write(reinterpret_cast<const char*>(t.tensor->data()),
                  std::streamsize(t.tensor->numel() * sizeof(float)));
    if (!out) throw RuntimeFailure("checkpoint: write failed for " + path);
}

CheckpointMeta load_checkpoint(const std::string& path, std::unique_ptr<CascadeState>& state,
                               CascadeOptimizers* opts, const AdamConfig& adam_config) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeFailure("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw RuntimeFailure("checkpoint: bad magic in " + path);
    uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string header_text(len, '\0');
    in.read(header_text.data(), len);
    if (!in) throw RuntimeFailure("checkpoint: truncated header in " + path);

    nlohmann::json header = nlohmann::json::parse(header_text, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "seqforge-checkpoint")
        throw RuntimeFailure("checkpoint: unrecognized header in " + path);

    CheckpointMeta meta;
    meta.step = header.at("step").get<int64_t>();
    meta.epoch = header.value("epoch", 0);
    meta.rng_state = header.at("rng_state").get<uint64_t>();
    meta.plan = CascadePlan::from_json(header.at("plan"));

    state = std::make_unique<CascadeState>(meta.plan);
    state->step = meta.step;
    bool has_opt = header.value("has_optimizer", false);
    if (opts) {
        *opts = CascadeOptimizers::create(adam_config, *state);
        if (!has_opt && header.contains("tensors")) {
            // Checkpoint without optimizer state: moments stay zero.
        }
        if (has_opt) {
            auto t = header.at("adam_t");
            opts->d1.set_t(t.at("d1").get<int64_t>());
            opts->g1.set_t(t.at("g1").get<int64_t>());
            opts->d2.set_t(t.at("d2").get<int64_t>());
            opts->g2.set_t(t.at("g2").get<int64_t>());
        }
    }

    auto tensors = enumerate(*state, (opts && has_opt) ? opts : nullptr);
    std::map<std::string, Tensor*> by_name;
    for (auto& t : tensors) by_name[t.name] = t.tensor;

    const std::streampos payload = in.tellg();
    for (const auto& entry : header.at("tensors")) {
        std::string name = entry.at("name").get<std::string>();
        auto it = by_name.find(name);
        if (it == by_name.end()) {
            if (name.rfind("adam.", 0) == 0) continue;  // optimizer state not requested
            throw RuntimeFailure("checkpoint: unknown tensor '" + name + "' in " + path);
        }
        auto shape = entry.at("shape").get<std::vector<int>>();
        Tensor* dst = it->second;
        if (shape.size() != 4 || shape[0] != dst->n() || shape[1] != dst->c() ||
            shape[2] != dst->h() || shape[3] != dst->w())
            throw RuntimeFailure("checkpoint: shape mismatch for '" + name + "' in " + path);
        uint64_t offset = entry.at("offset").get<uint64_t>();
        in.seekg(payload + std::streampos(offset * sizeof(float)));
        in.read(reinterpret_cast<char*>(dst->data()),
                std::streamsize(dst->numel() * sizeof(float)));
        if (!in) throw RuntimeFailure("checkpoint: truncated payload for '" + name + "'");
        by_name.erase(it);
    }
    if (!by_name.empty())
        throw RuntimeFailure("checkpoint: missing tensor '" + by_name.begin()->first + "' in " +
                             path);
    return meta;
}

}  // namespace nn
}  // namespace seqforge
