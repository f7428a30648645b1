// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/cli/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "molre/core/errors.hpp"

namespace molre {

namespace {

constexpr char kMagic[4] = {'M', 'L', 'C', 'K'};

class Writer {
public:
    template <typename T>
    void put(T value) {
        std::uint64_t bits = 0;
        if constexpr (std::is_floating_point_v<T>) {
            bits = std::bit_cast<std::uint64_t>(static_cast<double>(value));
        } else {
            bits = static_cast<std::uint64_t>(value);
        }
        for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>(bits >> (8 * i)));
    }
    void bytes(std::string_view s) { buf_.append(s); }
    void str(std::string_view s) {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        bytes(s);
    }
    void tensor(std::string_view name, const Tensor& t) {
        str(name);
        put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
        for (auto d : t.shape()) put<std::uint64_t>(d);
        for (double v : t.data()) put<double>(v);
    }
    const std::string& data() const noexcept { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    Reader(std::string_view data, std::string where) : data_(data), where_(std::move(where)) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        std::uint64_t bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        if constexpr (std::is_floating_point_v<T>) {
            return std::bit_cast<double>(bits);
        } else {
            return static_cast<T>(bits);
        }
    }
    std::string_view bytes(std::size_t n) {
        need(n);
        auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    std::string str() { return std::string(bytes(get<std::uint32_t>())); }
    std::pair<std::string, Tensor> tensor() {
        std::string name = str();
        const auto rank = get<std::uint32_t>();
        if (rank > 8) throw DataError(where_ + ": tensor '" + name + "' has implausible rank");
        Shape shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(get<std::uint64_t>());
        const std::size_t n = shape_numel(shape);
        if (n > (data_.size() - pos_) / 8) throw DataError(where_ + ": tensor '" + name + "' is truncated");
        std::vector<double> values(n);
        for (double& v : values) v = get<double>();
        return {std::move(name), Tensor(std::move(shape), std::move(values))};
    }
    bool at_end() const noexcept { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw DataError(where_ + ": truncated checkpoint");
    }
    std::string_view data_;
    std::size_t pos_ = 0;
    std::string where_;
};

void section(Writer& out, const char (&tag)[5], const Writer& payload) {
    out.bytes(std::string_view(tag, 4));
    out.put<std::uint64_t>(payload.data().size());
    out.bytes(payload.data());
}

}  // namespace

Checkpoint make_checkpoint(std::string config_text, const Model& model, const TrainState& state, std::uint64_t seed) {
    Checkpoint c;
    c.config_text = std::move(config_text);
    c.params = snapshot_params(model);
    c.buffers = model.buffers();
    c.optimizer = state.optimizer;
    c.epoch = state.epoch;
    c.early_stop = state.early_stop;
    c.stopped = state.stopped;
    c.seed = seed;
    return c;
}

void restore_checkpoint(const Checkpoint& checkpoint, Model& model, TrainState& state) {
    restore_params(model, checkpoint.params);
    model.set_buffers(checkpoint.buffers);
    state.optimizer = checkpoint.optimizer;
    state.epoch = checkpoint.epoch;
    state.early_stop = checkpoint.early_stop;
    state.stopped = checkpoint.stopped;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
    Writer conf;
    conf.bytes(c.config_text);

    Writer parm;
    parm.put<std::uint32_t>(static_cast<std::uint32_t>(c.params.size()));
    for (const auto& [name, t] : c.params) parm.tensor(name, t);

    Writer bufs;
    bufs.put<std::uint32_t>(static_cast<std::uint32_t>(c.buffers.size()));
    for (const auto& [name, t] : c.buffers) bufs.tensor(name, t);

    Writer optm;
    const auto& o = c.optimizer;
    for (double v : {o.config.beta1, o.config.beta2, o.config.eps, o.config.weight_decay, o.lr[0], o.lr[1]})
        optm.put<double>(v);
    optm.put<std::uint64_t>(o.step);
    optm.put<std::uint32_t>(static_cast<std::uint32_t>(o.moments.size()));
    for (const auto& [name, mom] : o.moments) {
        optm.tensor(name, mom.m);
        optm.tensor(name, mom.v);
    }

    Writer stat;
    stat.put<std::int64_t>(c.epoch);
    stat.put<std::uint8_t>(c.stopped ? 1 : 0);
    stat.put<double>(c.early_stop.best_auc);
    stat.put<std::int64_t>(c.early_stop.best_epoch);
    stat.put<std::int64_t>(c.early_stop.epochs_since_improvement);
    stat.put<std::int64_t>(c.early_stop.min_epochs);
    stat.put<std::int64_t>(c.early_stop.patience);
    stat.put<std::uint64_t>(c.seed);

    Writer file;
    file.bytes(std::string_view(kMagic, 4));
    file.put<std::uint32_t>(c.version);
    file.put<std::uint32_t>(5);
    section(file, "CONF", conf);
    section(file, "PARM", parm);
    section(file, "BUFS", bufs);
    section(file, "OPTM", optm);
    section(file, "STAT", stat);

    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("cannot open '" + tmp.string() + "' for writing");
        os.write(file.data().data(), static_cast<std::streamsize>(file.data().size()));
        if (!os) throw DataError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open checkpoint '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    const std::string blob = ss.str();
    const std::string where = path.string();

    Reader r(blob, where);
    if (r.bytes(4) != std::string_view(kMagic, 4)) throw DataError(where + ": not a checkpoint file");
    Checkpoint c;
    c.version = r.get<std::uint32_t>();
    if (c.version != kCheckpointVersion) {
        throw DataError(where + ": checkpoint version " + std::to_string(c.version) + ", this build reads version " +
                        std::to_string(kCheckpointVersion));
    }
    const auto sections = r.get<std::uint32_t>();
    bool have_params = false, have_state = false;
    for (std::uint32_t s = 0; s < sections; ++s) {
        const std::string tag(r.bytes(4));
        const auto len = r.get<std::uint64_t>();
        Reader p(r.bytes(static_cast<std::size_t>(len)), where + " [" + tag + "]");
        if (tag == "CONF") {
            c.config_text = std::string(p.bytes(static_cast<std::size_t>(len)));
        } else if (tag == "PARM") {
            const auto n = p.get<std::uint32_t>();
            for (std::uint32_t i = 0; i < n; ++i) c.params.push_back(p.tensor());
            have_params = true;
        } else if (tag == "BUFS") {
            const auto n = p.get<std::uint32_t>();
            for (std::uint32_t i = 0; i < n; ++i) c.buffers.push_back(p.tensor());
        } else if (tag == "OPTM") {
            auto& o = c.optimizer;
            o.config.beta1 = p.get<double>();
            o.config.beta2 = p.get<double>();
            o.config.eps = p.get<double>();
            o.config.weight_decay = p.get<double>();
            o.lr[0] = p.get<double>();
            o.lr[1] = p.get<double>();
            o.step = p.get<std::uint64_t>();
            const auto n = p.get<std::uint32_t>();
            for (std::uint32_t i = 0; i < n; ++i) {
                auto [name, m] = p.tensor();
                auto [name_v, v] = p.tensor();
                if (name != name_v) throw DataError(where + ": optimizer moments out of order for '" + name + "'");
                o.moments[name] = Moments{std::move(m), std::move(v)};
            }
        } else if (tag == "STAT") {
            c.epoch = static_cast<int>(p.get<std::int64_t>());
            c.stopped = p.get<std::uint8_t>() != 0;
            c.early_stop.best_auc = p.get<double>();
            c.early_stop.best_epoch = static_cast<int>(p.get<std::int64_t>());
            c.early_stop.epochs_since_improvement = static_cast<int>(p.get<std::int64_t>());
            c.early_stop.min_epochs = static_cast<int>(p.get<std::int64_t>());
            c.early_stop.patience = static_cast<int>(p.get<std::int64_t>());
            c.seed = p.get<std::uint64_t>();
            have_state = true;
        } else {
            continue;
        }
        if (!p.at_end()) throw DataError(where + ": section " + tag + " has trailing bytes");
    }
    if (!r.at_end()) throw DataError(where + ": trailing bytes after the last section");
    if (!have_params || !have_state) throw DataError(where + ": missing PARM or STAT section");
    return c;
}

}  // namespace molre
