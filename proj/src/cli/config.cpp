// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "molre/core/errors.hpp"

namespace molre {

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        out.push_back(trim(s.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "' as " +
                      std::string(expected));
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
    v = trim(v);
    std::uint64_t out = 0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || end != v.data() + v.size() || v.empty()) bad_value(key, v, "a nonnegative integer");
    return out;
}

double parse_f64(std::string_view key, std::string_view v) {
    v = trim(v);
    double out = 0.0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || end != v.data() + v.size() || v.empty()) bad_value(key, v, "a number");
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    v = trim(v);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, v, "true or false");
}

std::string fmt(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string fmt(std::uint64_t v) { return std::to_string(v); }

template <typename T>
std::string join(const std::vector<T>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        if constexpr (std::is_integral_v<T>) {
            out += fmt(static_cast<std::uint64_t>(values[i]));
        } else {
            out += fmt(static_cast<double>(values[i]));
        }
    }
    return out;
}

Range parse_range(std::string_view key, std::string_view v) {
    const auto parts = split_list(v);
    if (parts.size() == 1) {
        const double x = parse_f64(key, parts[0]);
        return {x, x};
    }
    if (parts.size() != 2) bad_value(key, v, "'lo,hi'");
    return {parse_f64(key, parts[0]), parse_f64(key, parts[1])};
}

std::string fmt_range(const Range& r) { return fmt(r.lo) + "," + fmt(r.hi); }

struct Field {
    ConfigKey key;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

// `ref` is a generic accessor usable on both const and mutable configs.
template <typename Ref>
Field size_field(std::string name, std::string help, Ref ref) {
    auto key = name;
    return {{std::move(name), std::move(help)},
            [ref, key](RunConfig& c, std::string_view v) { ref(c) = static_cast<std::size_t>(parse_u64(key, v)); },
            [ref](const RunConfig& c) { return fmt(static_cast<std::uint64_t>(ref(c))); }};
}

template <typename Ref>
Field int_field(std::string name, std::string help, Ref ref) {
    auto key = name;
    return {{std::move(name), std::move(help)},
            [ref, key](RunConfig& c, std::string_view v) {
                const auto x = parse_u64(key, v);
                if (x > 1000000) bad_value(key, v, "an integer <= 1000000");
                ref(c) = static_cast<int>(x);
            },
            [ref](const RunConfig& c) { return std::to_string(ref(c)); }};
}

template <typename Ref>
Field double_field(std::string name, std::string help, Ref ref) {
    auto key = name;
    return {{std::move(name), std::move(help)},
            [ref, key](RunConfig& c, std::string_view v) { ref(c) = parse_f64(key, v); },
            [ref](const RunConfig& c) { return fmt(ref(c)); }};
}

template <typename Ref>
Field bool_field(std::string name, std::string help, Ref ref) {
    auto key = name;
    return {{std::move(name), std::move(help)},
            [ref, key](RunConfig& c, std::string_view v) { ref(c) = parse_bool(key, v); },
            [ref](const RunConfig& c) { return ref(c) ? std::string("true") : std::string("false"); }};
}

template <typename Ref>
Field range_field(std::string name, std::string help, Ref ref) {
    auto key = name;
    return {{std::move(name), std::move(help)},
            [ref, key](RunConfig& c, std::string_view v) { ref(c) = parse_range(key, v); },
            [ref](const RunConfig& c) { return fmt_range(ref(c)); }};
}

std::vector<Field> build_fields() {
    std::vector<Field> f;
    f.push_back({{"mode", "baseline-frozen | lora | molre | molre3d"},
                 [](RunConfig& c, std::string_view v) { c.model.mode = parse_mode(trim(v)); },
                 [](const RunConfig& c) { return std::string(mode_name(c.model.mode)); }});
    f.push_back({{"seed", "run seed: data, initialization, sampling, augmentation"},
                 [](RunConfig& c, std::string_view v) { c.seed = parse_u64("seed", v); },
                 [](const RunConfig& c) { return fmt(c.seed); }});
    f.push_back({{"data_dir", "dataset directory (manifest.json + volumes)"},
                 [](RunConfig& c, std::string_view v) { c.data_dir = std::string(trim(v)); },
                 [](const RunConfig& c) { return c.data_dir.string(); }});
    f.push_back({{"run_dir", "training run directory"},
                 [](RunConfig& c, std::string_view v) { c.run_dir = std::string(trim(v)); },
                 [](const RunConfig& c) { return c.run_dir.string(); }});

    f.push_back(size_field("samples", "number of synthetic volumes", [](auto& c) -> auto& { return c.samples; }));
    f.push_back(size_field("classes", "number of classes C", [](auto& c) -> auto& { return c.model.classes; }));
    f.push_back(size_field("volume.slices", "S", [](auto& c) -> auto& { return c.synth.slices; }));
    f.push_back(size_field("volume.height", "H", [](auto& c) -> auto& { return c.synth.height; }));
    f.push_back(size_field("volume.width", "W", [](auto& c) -> auto& { return c.synth.width; }));
    f.push_back({{"synth.prevalence", "per-class prevalence list; empty for the geometric profile"},
                 [](RunConfig& c, std::string_view v) {
                     c.synth.prevalence.clear();
                     for (auto p : split_list(v)) c.synth.prevalence.push_back(parse_f64("synth.prevalence", p));
                 },
                 [](const RunConfig& c) { return join(c.synth.prevalence); }});
    f.push_back(double_field("synth.prevalence_max", "geometric profile, class 0",
                             [](auto& c) -> auto& { return c.synth.prevalence_max; }));
    f.push_back(double_field("synth.prevalence_min", "geometric profile, class C-1",
                             [](auto& c) -> auto& { return c.synth.prevalence_min; }));
    f.push_back(double_field("synth.noise_hu", "scanner noise sd, HU", [](auto& c) -> auto& { return c.synth.noise_hu; }));
    f.push_back(double_field("split.train", "train fraction", [](auto& c) -> auto& { return c.split.train; }));
    f.push_back(double_field("split.val", "validation fraction", [](auto& c) -> auto& { return c.split.val; }));
    f.push_back(double_field("split.test", "test fraction", [](auto& c) -> auto& { return c.split.test; }));

    f.push_back(size_field("model.in_channels", "M, one per HU window",
                           [](auto& c) -> auto& { return c.model.stub.in_channels; }));
    f.push_back({{"model.stub_channels", "frozen stub conv widths"},
                 [](RunConfig& c, std::string_view v) {
                     c.model.stub.channels.clear();
                     for (auto p : split_list(v)) c.model.stub.channels.push_back(parse_u64("model.stub_channels", p));
                 },
                 [](const RunConfig& c) { return join(c.model.stub.channels); }});
    f.push_back(size_field("model.d", "feature width d", [](auto& c) -> auto& { return c.model.stub.feature_dim; }));
    f.push_back(size_field("model.lora_rank", "LoRA rank", [](auto& c) -> auto& { return c.model.lora_rank; }));
    f.push_back(double_field("model.lora_alpha", "LoRA alpha", [](auto& c) -> auto& { return c.model.lora_alpha; }));
    f.push_back(size_field("model.experts", "K", [](auto& c) -> auto& { return c.model.experts; }));
    f.push_back(size_field("model.expert_rank", "r", [](auto& c) -> auto& { return c.model.expert_rank; }));
    f.push_back(double_field("model.expert_alpha", "expert alpha; s = alpha / r",
                             [](auto& c) -> auto& { return c.model.expert_alpha; }));
    f.push_back(size_field("model.router_hidden", "d_h", [](auto& c) -> auto& { return c.model.router_hidden; }));
    f.push_back(bool_field("model.classifier_bias", "bias in the classifier head",
                           [](auto& c) -> auto& { return c.model.classifier_bias; }));
    f.push_back(double_field("model.balance_weight", "gate balance penalty weight; 0 disables",
                             [](auto& c) -> auto& { return c.model.balance_weight; }));

    f.push_back(double_field("loss.gamma", "focal gamma", [](auto& c) -> auto& { return c.train.gamma; }));
    f.push_back(double_field("loss.alpha_min", "prevalence weight lower clamp",
                             [](auto& c) -> auto& { return c.train.alpha_min; }));
    f.push_back(double_field("loss.alpha_max", "prevalence weight upper clamp",
                             [](auto& c) -> auto& { return c.train.alpha_max; }));
    f.push_back(double_field("optim.lr_head", "learning rate, pooler and classifier",
                             [](auto& c) -> auto& { return c.train.lr_head; }));
    f.push_back(double_field("optim.lr_adapter", "learning rate, LoRA, experts and router",
                             [](auto& c) -> auto& { return c.train.lr_adapter; }));
    f.push_back(double_field("optim.weight_decay", "decoupled weight decay",
                             [](auto& c) -> auto& { return c.train.adam.weight_decay; }));
    f.push_back(double_field("optim.beta1", "", [](auto& c) -> auto& { return c.train.adam.beta1; }));
    f.push_back(double_field("optim.beta2", "", [](auto& c) -> auto& { return c.train.adam.beta2; }));
    f.push_back(double_field("optim.eps", "", [](auto& c) -> auto& { return c.train.adam.eps; }));
    f.push_back(double_field("optim.clip_norm", "global gradient norm limit; 0 disables",
                             [](auto& c) -> auto& { return c.train.clip_norm; }));
    f.push_back(double_field("sampler.threshold", "repeat factor threshold t",
                             [](auto& c) -> auto& { return c.train.rfs_threshold; }));
    f.push_back(size_field("train.batch_size", "", [](auto& c) -> auto& { return c.train.batch_size; }));
    f.push_back(int_field("train.min_epochs", "", [](auto& c) -> auto& { return c.train.min_epochs; }));
    f.push_back(int_field("train.patience", "", [](auto& c) -> auto& { return c.train.patience; }));
    f.push_back(int_field("train.max_epochs", "", [](auto& c) -> auto& { return c.train.max_epochs; }));

    f.push_back(bool_field("augment.enabled", "augment training volumes each epoch",
                           [](auto& c) -> auto& { return c.augment_enabled; }));
    f.push_back(range_field("augment.elastic_alpha", "", [](auto& c) -> auto& { return c.augment.elastic_alpha; }));
    f.push_back(range_field("augment.elastic_sigma", "", [](auto& c) -> auto& { return c.augment.elastic_sigma; }));
    f.push_back(range_field("augment.rotation", "radians", [](auto& c) -> auto& { return c.augment.rotation; }));
    f.push_back(range_field("augment.scale", "", [](auto& c) -> auto& { return c.augment.scale; }));
    f.push_back(range_field("augment.brightness", "", [](auto& c) -> auto& { return c.augment.brightness; }));
    f.push_back(range_field("augment.noise_variance", "",
                            [](auto& c) -> auto& { return c.augment.noise_variance; }));
    f.push_back({{"augment.mirror_p", "mirror probability; one value or x,y,z"},
                 [](RunConfig& c, std::string_view v) {
                     const auto parts = split_list(v);
                     if (parts.size() == 1) {
                         c.augment.mirror_probability.fill(parse_f64("augment.mirror_p", parts[0]));
                     } else if (parts.size() == 3) {
                         for (std::size_t a = 0; a < 3; ++a)
                             c.augment.mirror_probability[a] = parse_f64("augment.mirror_p", parts[a]);
                     } else {
                         bad_value("augment.mirror_p", v, "one or three probabilities");
                     }
                 },
                 [](const RunConfig& c) {
                     const auto& p = c.augment.mirror_probability;
                     return fmt(p[0]) + "," + fmt(p[1]) + "," + fmt(p[2]);
                 }});
    return f;
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = build_fields();
    return table;
}

const Field& find_field(std::string_view key) {
    for (const auto& f : fields())
        if (f.key.name == key) return f;
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

ModelConfig RunConfig::model_config() const {
    ModelConfig m = model;
    m.init_seed = seed;
    m.stub.seed = seed;
    return m;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig t = train;
    t.seed = seed;
    return t;
}

void RunConfig::validate() const {
    const auto require = [](bool ok, const char* key, const char* what) {
        if (!ok) throw ConfigError(std::string("config key '") + key + "': " + what);
    };
    require(samples > 0, "samples", "must be positive");
    require(model.classes > 0, "classes", "must be positive");
    require(model.stub.in_channels == kDefaultWindows.size(), "model.in_channels",
            "must equal the number of HU windows (3)");
    require(!model.stub.channels.empty(), "model.stub_channels", "needs at least one layer");
    for (auto ch : model.stub.channels) require(ch > 0, "model.stub_channels", "widths must be positive");
    require(model.stub.feature_dim > 0, "model.d", "must be positive");

    const Mode mode = model.mode;
    const std::size_t d = model.stub.feature_dim;
    if (mode == Mode::Lora || mode == Mode::Molre) {
        require(model.lora_rank >= 1, "model.lora_rank", "must be >= 1 for lora and molre");
        require(model.lora_rank <= std::min(d, 2 * model.stub.channels.back()), "model.lora_rank",
                "must not exceed the projection dimensions");
        require(model.lora_alpha > 0.0, "model.lora_alpha", "must be positive");
    }
    if (mode == Mode::Molre || mode == Mode::Molre3d) {
        require(model.experts >= 1, "model.experts", "K must be >= 1 for molre");
        require(model.expert_rank >= 1 && model.expert_rank <= d, "model.expert_rank", "r must lie in [1, d]");
        require(model.router_hidden >= 1, "model.router_hidden", "d_h must be >= 1");
        require(model.expert_alpha > 0.0, "model.expert_alpha", "must be positive");
    }
    require(model.balance_weight >= 0.0, "model.balance_weight", "must be >= 0");

    require(train.gamma >= 0.0, "loss.gamma", "must be >= 0");
    require(train.alpha_min >= 0.0 && train.alpha_min <= train.alpha_max && train.alpha_max <= 1.0, "loss.alpha_min",
            "clamps must satisfy 0 <= alpha_min <= alpha_max <= 1");
    require(train.lr_head > 0.0, "optim.lr_head", "must be positive");
    require(train.lr_adapter > 0.0, "optim.lr_adapter", "must be positive");
    require(train.adam.weight_decay >= 0.0, "optim.weight_decay", "must be >= 0");
    require(train.adam.beta1 >= 0.0 && train.adam.beta1 < 1.0, "optim.beta1", "must lie in [0, 1)");
    require(train.adam.beta2 >= 0.0 && train.adam.beta2 < 1.0, "optim.beta2", "must lie in [0, 1)");
    require(train.adam.eps > 0.0, "optim.eps", "must be positive");
    require(train.clip_norm >= 0.0, "optim.clip_norm", "must be >= 0");
    require(train.rfs_threshold > 0.0 && train.rfs_threshold <= 1.0, "sampler.threshold", "must lie in (0, 1]");
    require(train.batch_size > 0, "train.batch_size", "must be positive");
    require(train.min_epochs >= 1, "train.min_epochs", "must be >= 1");
    require(train.patience >= 1, "train.patience", "must be >= 1");
    require(train.max_epochs >= train.min_epochs, "train.max_epochs", "must be >= train.min_epochs");

    SynthConfig s = synth;
    s.classes = model.classes;
    s.validate();
    split.validate();
    augment.validate();
}

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> out;
        for (const auto& f : fields()) out.push_back(f.key);
        return out;
    }();
    return keys;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
    find_field(trim(key)).set(config, value);
    config.synth.classes = config.model.classes;
}

std::string get_config_value(const RunConfig& config, std::string_view key) { return find_field(key).get(config); }

void apply_override(RunConfig& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
    }
    set_config_value(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

RunConfig parse_config(std::string_view text, std::string_view origin) {
    RunConfig config;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        if (!seen.insert(std::string(key)).second) throw ConfigError(where + "key '" + std::string(key) + "' repeated");
        try {
            set_config_value(config, key, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string to_text(const RunConfig& config) {
    std::string out;
    for (const auto& f : fields()) out += f.key.name + " = " + f.get(config) + "\n";
    return out;
}

}  // namespace molre
