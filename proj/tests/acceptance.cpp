// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "molre/adapters/adapters.hpp"
#include "molre/cli/checkpoint.hpp"
#include "molre/cli/commands.hpp"
#include "molre/core/ops.hpp"
#include "molre/data/augment.hpp"
#include "molre/data/synth.hpp"
#include "molre/data/volume.hpp"
#include "molre/metrics/metrics.hpp"
#include "molre/pipeline/heads.hpp"
#include "molre/train/objective.hpp"
#include "molre/train/sampling.hpp"
#include "oracles.hpp"

using namespace molre;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Outcome param_counts() {
    const auto t0 = Clock::now();
    Outcome o;
    const std::int64_t expect[3] = {272134, 362246, 407302};
    const double table[3] = {0.28, 0.37, 0.41};
    const std::size_t dims[3] = {768, 1024, 1152};
    for (int i = 0; i < 3; ++i) {
        RunConfig c;
        c.model.stub.feature_dim = dims[i];
        std::ostringstream sink;
        const ParamTable t = cmd_count_params(c, sink);
        // Millions are rounded up to two decimals (272134 -> 0.28).
        const double millions = std::ceil(static_cast<double>(t.molre_total) / 1e4) / 100.0;
        o.pass = o.pass && t.molre_total == expect[i] && std::abs(millions - table[i]) < 1e-12;
        o.detail += std::to_string(t.molre_total) + " ";
    }
    const double s = seconds_since(t0);
    o.pass = o.pass && s < 1.0;
    o.detail += fmt("in %.3fs", s);
    return o;
}

Outcome budget() {
    RunConfig c;
    std::ostringstream sink;
    const double ratio = static_cast<double>(cmd_count_params(c, sink).molre_total) / 86.6e6;
    return {ratio < 0.005, fmt("ratio %.6f", ratio)};
}

Outcome gradients() {
    const auto t0 = Clock::now();
    RngStream rng(31, 0);
    double worst = 0.0;
    int configs = 0;
    for (; configs < 25; ++configs) {
        ModelConfig cfg;
        cfg.mode = Mode::Molre;
        cfg.stub.channels = {2 + rng.below(4)};
        cfg.stub.feature_dim = 4 + rng.below(13);
        cfg.stub.seed = static_cast<std::uint64_t>(configs);
        cfg.classes = 1 + rng.below(5);
        cfg.lora_rank = 1 + rng.below(2);
        cfg.experts = 1 + rng.below(6);
        cfg.expert_rank = 1 + rng.below(3);
        cfg.router_hidden = 1 + rng.below(8);
        cfg.init_seed = static_cast<std::uint64_t>(configs);
        Model model(cfg);
        for (auto& p : model.trainable_params())
            for (double& v : p.tensor->data()) v = 0.5 * rng.normal();
        model.fit_input_normalization(oracle::random_tensor({5, model.embedding_dim()}, rng));

        const std::size_t S = 1 + rng.below(4), B = 1 + rng.below(3);
        const Tensor Z = oracle::random_tensor({B * S, model.embedding_dim()}, rng);
        const Tensor w = oracle::random_tensor({B, cfg.classes}, rng);
        const auto loss = [&] {
            const Tensor p = model.forward(Z, S);
            double s = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) s += w[i] * p[i];
            return s;
        };
        ForwardCache cache;
        const Tensor probs = model.forward(Z, S, cache);
        Tensor dlogits(probs.shape());
        for (std::size_t i = 0; i < probs.size(); ++i) dlogits[i] = w[i] * probs[i] * (1.0 - probs[i]);
        model.zero_grad();
        model.backward(cache, dlogits);
        for (auto& p : model.trainable_params()) {
            const std::vector<double> analytic(p.tensor->grad().begin(), p.tensor->grad().end());
            const auto numeric = oracle::numeric_grad(*p.tensor, loss);
            for (std::size_t i = 0; i < analytic.size(); ++i)
                worst = std::max(worst, oracle::grad_rel_error(analytic[i], numeric[i]));
        }
    }
    const double s = seconds_since(t0);
    return {worst < 1e-4 && s < 60.0,
            std::to_string(configs) + " configs, max rel err " + fmt("%.2e", worst) + fmt(" in %.1fs", s)};
}

Outcome lora_equivalence() {
    RngStream rng(32, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 2 + rng.below(12), d_out = 2 + rng.below(12);
        const std::size_t r = 1 + rng.below(std::min(d, d_out)), dh = 1 + rng.below(8);
        const double alpha = rng.uniform(0.5, 32.0);
        LoraAdapter lora = LoraAdapter::create(d, d_out, r, alpha);
        MolreLayer layer = MolreLayer::create(d, d_out, 1, r, dh, lora.scaling());
        layer.W0 = oracle::random_tensor({d_out, d}, rng);
        layer.bank.experts[0].A = lora.A = oracle::random_tensor({r, d}, rng);
        layer.bank.experts[0].B = lora.B = oracle::random_tensor({d_out, r}, rng);
        layer.router.W1 = oracle::random_tensor({dh, d}, rng);
        layer.router.W2 = oracle::random_tensor({1, dh}, rng);
        const Tensor x = oracle::random_tensor({4, d}, rng);
        worst = std::max(worst, max_abs_diff(molre_forward(layer, x), lora_forward(lora, layer.W0, x)));
    }
    return {worst < 1e-12, "100 instances, max diff " + fmt("%.2e", worst)};
}

Outcome transparency() {
    RngStream rng(33, 0);
    StubConfig sc;
    sc.channels = {4, 8};
    sc.feature_dim = 16;
    const FrozenBackboneStub stub(sc);
    bool all = true;
    for (int trial = 0; trial < 20; ++trial) {
        MolreLayer layer = MolreLayer::create(16, 16, 6, 8, 256, 2.0);
        init_adapter_params(layer.bank, layer.router, rng);
        const AttentionPooler pooler{oracle::random_tensor({16}, rng)};
        ClassifierHead head = ClassifierHead::create(16, 12);
        head.W = oracle::random_tensor({12, 16}, rng);
        Tensor X({2, 3, 4, 16, 16});
        for (double& v : X.data()) v = rng.uniform();
        all = all && bitwise_equal(forward_2d(stub, &layer, pooler, head, X), forward_2d(stub, nullptr, pooler, head, X));
    }
    return {all, "20 batches, difference exactly 0"};
}

Outcome gate_simplex() {
    RngStream rng(34, 0);
    double worst = 0.0, lowest = 1.0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t d = 1 + rng.below(16), dh = 1 + rng.below(32), K = 1 + rng.below(8);
        Router r = Router::create(d, dh, K);
        r.W1 = oracle::random_tensor({dh, d}, rng, 3.0);
        r.b1 = oracle::random_tensor({dh}, rng, 3.0);
        r.W2 = oracle::random_tensor({K, dh}, rng, 3.0);
        r.b2 = oracle::random_tensor({K}, rng, 3.0);
        const Tensor g = router_forward(r, oracle::random_tensor({1, d}, rng, 5.0));
        double s = 0.0;
        for (double v : g.data()) {
            lowest = std::min(lowest, v);
            s += v;
        }
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return {lowest >= 0.0 && worst < 1e-9, "max |sum - 1| " + fmt("%.2e", worst)};
}

Outcome auc_oracle() {
    RngStream rng(35, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.below(199);
        std::vector<double> s(n), y(n);
        const bool coarse = trial % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = coarse ? static_cast<double>(rng.below(6)) : rng.uniform();
            y[i] = rng.bernoulli(0.35) ? 1.0 : 0.0;
        }
        y[0] = 1.0;
        y[n - 1] = 0.0;
        worst = std::max(worst, std::abs(*auc(s, y) - oracle::brute_auc(s, y)));
    }
    return {worst < 1e-12, "1000 instances, max diff " + fmt("%.2e", worst)};
}

Outcome focal_reductions() {
    RngStream rng(36, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(8), c = 1 + rng.below(12);
        Tensor p({n, c}), y({n, c});
        for (double& v : p.data()) v = rng.uniform(0.001, 0.999);
        for (double& v : y.data()) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
        FocalLossConfig cfg;
        cfg.gamma = 0.0;
        cfg.alpha = Tensor({c}, 0.5);
        double bce = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) bce += oracle::bce(p[i], y[i]);
        bce /= static_cast<double>(p.size());
        worst = std::max(worst, std::abs(focal_loss(p, y, cfg) - 0.5 * bce));
    }
    FocalLossConfig scalar;
    scalar.gamma = 2.0;
    scalar.alpha = Tensor({1}, 1.0);
    const double e = std::abs(focal_loss(Tensor::matrix({{0.5}}), Tensor::matrix({{1.0}}), scalar) - 0.25 * std::log(2.0));
    return {worst < 1e-12 && e < 1e-12, "bce diff " + fmt("%.2e", worst) + ", scalar diff " + fmt("%.2e", e)};
}

Outcome rfs() {
    RngStream rng(37, 0);
    bool rules = true;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 50 + rng.below(300), c = 1 + rng.below(12);
        const double t = rng.uniform(0.005, 0.3);
        Tensor y({n, c});
        for (std::size_t j = 0; j < c; ++j) {
            const double p = rng.uniform(0.0, 0.5);
            for (std::size_t i = 0; i < n; ++i) y.at(i, j) = rng.bernoulli(p) ? 1.0 : 0.0;
        }
        std::vector<double> f(c, 0.0);
        for (std::size_t j = 0; j < c; ++j) {
            for (std::size_t i = 0; i < n; ++i) f[j] += y.at(i, j);
            f[j] /= static_cast<double>(n);
        }
        const auto r = repeat_factors(y, t);
        for (std::size_t i = 0; i < n; ++i) {
            double expect = 1.0;
            for (std::size_t j = 0; j < c; ++j)
                if (y.at(i, j) == 1.0) expect = std::max(expect, f[j] >= t ? 1.0 : std::sqrt(t / f[j]));
            rules = rules && std::abs(r[i] - expect) < 1e-12;
        }
    }
    double worst = 0.0;
    for (double r : {1.0, 1.3, 1.5, 2.0, 2.7, 4.1}) {
        double total = 0.0;
        for (int i = 0; i < 10000; ++i) total += static_cast<double>(sample_repeat_count(r, rng));
        worst = std::max(worst, std::abs(total / 10000.0 - r));
    }
    return {rules && worst <= 0.05, std::string(rules ? "rules hold" : "rule mismatch") + ", max mean dev " + fmt("%.4f", worst)};
}

// Embeddings whose first columns carry the labels.
struct ToyProblem {
    Tensor train_labels, val_labels;
    std::vector<Tensor> z;
    std::size_t n_train = 0;

    TrainData data(std::size_t slices) const {
        TrainData d;
        d.slices = slices;
        d.train_labels = train_labels;
        d.val_labels = val_labels;
        d.train = [this](std::size_t i, int) { return z[i]; };
        d.val = [this](std::size_t i) { return z[n_train + i]; };
        return d;
    }
};

ToyProblem toy_problem(std::size_t n_train, std::size_t n_val, std::size_t S, std::size_t d, RngStream& rng) {
    ToyProblem t;
    t.n_train = n_train;
    t.train_labels = Tensor({n_train, 3});
    t.val_labels = Tensor({n_val, 3});
    for (std::size_t i = 0; i < n_train + n_val; ++i) {
        Tensor& labels = i < n_train ? t.train_labels : t.val_labels;
        const std::size_t row = i < n_train ? i : i - n_train;
        Tensor z = oracle::random_tensor({S, d}, rng);
        for (std::size_t c = 0; c < 3; ++c) {
            labels.at(row, c) = rng.bernoulli(0.4) ? 1.0 : 0.0;
            for (std::size_t s = 0; s < S; ++s) z.at(s, c) += 2.0 * labels.at(row, c);
        }
        t.z.push_back(std::move(z));
    }
    return t;
}

ModelConfig tiny_model() {
    ModelConfig m;
    m.stub.channels = {4};
    m.stub.feature_dim = 8;
    m.classes = 3;
    m.lora_rank = 2;
    m.experts = 3;
    m.expert_rank = 2;
    m.router_hidden = 8;
    return m;
}

Outcome protocol() {
    std::string detail;
    RngStream rng(38, 0);

    // Constant validation AUC.
    ToyProblem flat = toy_problem(24, 12, 3, 8, rng);
    for (std::size_t i = 24; i < 36; ++i) flat.z[i].fill(0.3);
    Model model(tiny_model());
    TrainConfig tc;
    tc.seed = 1;
    NamedTensors at_best;
    TrainCallbacks cb;
    cb.on_best = [&](const EpochRecord&, const Trainer&) { at_best = snapshot_params(model); };
    const TrainResult r = train(model, flat.data(3), tc, cb);
    bool restored = true;
    const NamedTensors now = snapshot_params(model);
    for (std::size_t i = 0; i < now.size(); ++i) restored = restored && bitwise_equal(now[i].second, at_best[i].second);
    const bool early = r.stop_epoch == tc.min_epochs + tc.patience && r.best_epoch == 1 && restored;
    detail += "stop " + std::to_string(r.stop_epoch) + " best " + std::to_string(r.best_epoch);

    // Bitwise resume.
    const ToyProblem toy = toy_problem(40, 20, 2, 8, rng);
    const fs::path dir = fs::temp_directory_path() / "molre_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    TrainConfig rc;
    rc.seed = 2;
    Model straight(tiny_model());
    Trainer a(straight, toy.data(2), rc);
    a.run_epoch();
    a.run_epoch();
    save_checkpoint(dir / "e2.ckpt", make_checkpoint("", straight, a.state(), 2));
    a.run_epoch();
    a.run_epoch();
    Model resumed(tiny_model());
    Trainer b(resumed, toy.data(2), rc);
    restore_checkpoint(load_checkpoint(dir / "e2.ckpt"), resumed, b.state());
    b.run_epoch();
    b.run_epoch();
    bool bitwise = a.state().optimizer.step == b.state().optimizer.step;
    const NamedTensors pa = snapshot_params(straight), pb = snapshot_params(resumed);
    for (std::size_t i = 0; i < pa.size(); ++i) bitwise = bitwise && bitwise_equal(pa[i].second, pb[i].second);
    detail += std::string(", resume ") + (bitwise ? "bitwise" : "diverged");

    // The best checkpoint reproduces the reported validation AUC.
    RunConfig run;
    run.seed = 3;
    run.data_dir = dir / "data";
    run.run_dir = dir / "run";
    run.samples = 60;
    run.synth.slices = 6;
    run.synth.height = 32;
    run.synth.width = 32;
    run.synth.classes = run.model.classes = 4;
    run.synth.prevalence = {0.5, 0.4, 0.3, 0.3};
    run.split = {0.6, 0.2, 0.2};
    run.model.stub.channels = {4, 8};
    run.model.stub.feature_dim = 16;
    run.model.router_hidden = 16;
    run.train.min_epochs = 3;
    run.train.patience = 2;
    run.train.max_epochs = 8;
    run.train.lr_adapter = 1e-3;
    cmd_synth(run);
    const TrainSummary s = cmd_train(run);
    const Checkpoint best = load_checkpoint(run.run_dir / kBestCheckpoint);
    const MetricsReport val = cmd_eval(run.run_dir / kBestCheckpoint, Split::Val, dir / "eval");
    const bool reported = best.epoch == s.best_epoch && std::abs(val.summary.mean - s.best_auc) < 1e-12;
    detail += ", best ckpt epoch " + std::to_string(best.epoch) + fmt(" auc diff %.1e", std::abs(val.summary.mean - s.best_auc));
    fs::remove_all(dir);
    return {early && bitwise && reported, detail};
}

Outcome directional() {
    const auto t0 = Clock::now();
    const std::size_t n_train = 2000, n_val = 400, n_test = 400, n = n_train + n_val + n_test;
    const SynthConfig sc;
    std::vector<VolumeSample> volumes;
    volumes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) volumes.push_back(synth_sample(sc, 7, i));
    const std::size_t C = sc.classes;

    // The backbone stub is shared by all modes, so embeddings are computed once.
    const ModelConfig base;
    const Model embedder(base);
    std::vector<Tensor> z;
    z.reserve(n);
    for (const auto& v : volumes) z.push_back(embed_sample(embedder, v));
    const std::size_t S = z.front().rows(), p = z.front().cols();
    std::cerr << fmt("  data ready in %.0fs\n", seconds_since(t0));

    const auto labels = [&](std::size_t begin, std::size_t end) {
        Tensor L({end - begin, C});
        for (std::size_t i = begin; i < end; ++i)
            for (std::size_t c = 0; c < C; ++c) L.at(i - begin, c) = volumes[i].labels[c];
        return L;
    };
    Tensor train_rows({n_train * S, p});
    for (std::size_t i = 0; i < n_train; ++i)
        std::copy(z[i].data().begin(), z[i].data().end(), train_rows.data().begin() + static_cast<std::ptrdiff_t>(i * S * p));
    const Tensor test_labels = labels(n_train + n_val, n);

    double mean[3] = {0.0, 0.0, 0.0};
    const Mode modes[3] = {Mode::BaselineFrozen, Mode::Lora, Mode::Molre};
    for (int m = 0; m < 3; ++m) {
        for (int seed = 0; seed < 5; ++seed) {
            ModelConfig mc = base;
            mc.mode = modes[m];
            mc.init_seed = 100 + static_cast<std::uint64_t>(seed);
            Model model(mc);
            model.fit_input_normalization(train_rows);
            TrainData d;
            d.slices = S;
            d.train_labels = labels(0, n_train);
            d.val_labels = labels(n_train, n_train + n_val);
            d.train = [&](std::size_t i, int) { return z[i]; };
            d.val = [&](std::size_t i) { return z[n_train + i]; };
            TrainConfig tc;
            tc.seed = 100 + static_cast<std::uint64_t>(seed);
            const TrainResult r = train(model, d, tc);
            const Tensor probs = predict(model, [&](std::size_t i) { return z[n_train + n_val + i]; }, n_test, S);
            const double test = *mean_auc(probs, test_labels);
            mean[m] += test / 5.0;
            std::cerr << "  " << mode_name(modes[m]) << " seed " << seed << " stop " << r.stop_epoch
                      << fmt(" test auc %.4f", test) << fmt(" (%.0fs)\n", seconds_since(t0));
        }
    }
    const double s = seconds_since(t0);
    const bool ordered = mean[2] >= mean[1] && mean[1] >= mean[0] && mean[2] >= mean[0];
    return {ordered, fmt("baseline-frozen %.4f", mean[0]) + fmt(" lora %.4f", mean[1]) + fmt(" molre %.4f", mean[2]) +
                         fmt(" in %.0fs", s)};
}

Outcome preprocessing() {
    bool ok = true;
    const WindowSpec w{-20.0, 180.0};
    ok = ok && window_value(-20.0, w) == 0.0 && window_value(180.0, w) == 1.0 && window_value(80.0, w) == 0.5 &&
         window_value(-500.0, w) == 0.0 && window_value(900.0, w) == 1.0;

    RngStream rng(39, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        const Spacing src{rng.uniform(0.4, 2.0), rng.uniform(0.4, 2.0), rng.uniform(1.0, 6.0)};
        const Spacing dst{rng.uniform(0.4, 2.0), rng.uniform(0.4, 2.0), rng.uniform(1.0, 6.0)};
        const double a = rng.normal(), bx = rng.normal(), by = rng.normal(), bz = rng.normal();
        const std::size_t S = 2 + rng.below(6), H = 2 + rng.below(12), W = 2 + rng.below(12);
        VolumeSample v;
        v.voxels = Tensor({S, H, W});
        v.spacing = src;
        for (std::size_t k = 0; k < S; ++k)
            for (std::size_t j = 0; j < H; ++j)
                for (std::size_t i = 0; i < W; ++i)
                    v.voxels[(k * H + j) * W + i] = a + bx * i * src[0] + by * j * src[1] + bz * k * src[2];
        const VolumeSample r = resample(v, dst);
        const auto& sh = r.voxels.shape();
        for (std::size_t k = 0; k < sh[0]; ++k)
            for (std::size_t j = 0; j < sh[1]; ++j)
                for (std::size_t i = 0; i < sh[2]; ++i) {
                    const double expect = a + bx * i * dst[0] + by * j * dst[1] + bz * k * dst[2];
                    worst = std::max(worst, std::abs(r.voxels[(k * sh[1] + j) * sh[2] + i] - expect));
                }
    }
    ok = ok && worst < 1e-9;

    VolumeSample v;
    v.voxels = oracle::random_tensor({6, 10, 12}, rng, 500.0);
    v.spacing = {0.8, 0.9, 5.0};
    RngStream aug(1, 1);
    ok = ok && bitwise_equal(augment(v, AugmentConfig::identity(), aug).voxels, v.voxels);
    for (int axis = 0; axis < 3; ++axis) {
        Tensor t = v.voxels;
        mirror_axis(t, axis);
        mirror_axis(t, axis);
        ok = ok && bitwise_equal(t, v.voxels);
    }
    return {ok, "affine max err " + fmt("%.2e", worst)};
}

}  // namespace

// Arguments, if any, select criteria by number.
int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"parameter counts", param_counts},
        {"parameter budget", budget},
        {"gradient suite", gradients},
        {"single-expert equivalence", lora_equivalence},
        {"zero-init transparency", transparency},
        {"gate simplex", gate_simplex},
        {"auc oracle", auc_oracle},
        {"focal-loss reductions", focal_reductions},
        {"repeat factor sampling", rfs},
        {"training protocol", protocol},
        {"mode ordering on synthetic data", directional},
        {"preprocessing exactness", preprocessing},
    };
    int failed = 0, index = 0;
    for (const auto& [name, run] : criteria) {
        ++index;
        if (!only.empty() && only.count(index) == 0) continue;
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << "criterion " << index << ": " << (o.pass ? "PASS" : "FAIL") << "  " << name << "  (" << o.detail
                  << ")" << std::endl;
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
    return failed ? 1 : 0;
}
