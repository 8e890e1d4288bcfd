//*****************************************************************************
// Copyright 2026 The HyperSeg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//*****************************************************************************

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hyperseg/errors.hpp"
#include "hyperseg/image_io.hpp"
#include "hyperseg/service.hpp"
#include "hyperseg/tensor_io.hpp"
#include "hyperseg/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hyperseg;

namespace {

// Thrown for problems the user can fix by changing the invocation.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BackboneFlags {
    std::string manifest;
    std::vector<std::size_t> tile{32, 32};
    std::string ranks = "halving";
};

void add_backbone_flags(CLI::App* cmd, BackboneFlags& f) {
    cmd->add_option("--backbone", f.manifest, "Backbone manifest (default: built-in toy VGG)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--tile", f.tile, "Toy backbone input size W H")->expected(2)->default_str("32 32");
    cmd->add_option("--ranks", f.ranks, "halving, full, or comma-separated ranks per tap")->default_str("halving");
}

Backbone make_backbone(const BackboneFlags& f) {
    if (!f.manifest.empty()) return Backbone::load(f.manifest);
    ToyVggConfig c;
    c.input_width = f.tile.at(0);
    c.input_height = f.tile.at(1);
    if (c.input_width < 4 || c.input_height < 4) throw UsageError("--tile must be at least 4 x 4");
    return Backbone::toy_vgg(c);
}

CompressionPlan make_plan(const std::string& spec, const std::vector<std::size_t>& depths,
                          const std::vector<std::string>& names) {
    if (spec == "halving") return CompressionPlan::halving(depths, names);
    if (spec == "full") return CompressionPlan::identity(depths, names);
    std::vector<LayerRank> ranks;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        std::size_t r = 0;
        try {
            r = std::stoul(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || item.empty()) throw UsageError("--ranks: \"" + item + "\" is not a rank");
        ranks.push_back({ranks.size() < names.size() ? names[ranks.size()] : "layer" + std::to_string(ranks.size()), r});
    }
    if (ranks.size() != depths.size()) {
        throw UsageError("--ranks lists " + std::to_string(ranks.size()) + " ranks for " +
                         std::to_string(depths.size()) + " layers");
    }
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        if (ranks[i].rank < 1 || ranks[i].rank > depths[i]) {
            throw UsageError("--ranks: rank " + std::to_string(ranks[i].rank) + " for " + ranks[i].layer +
                             " outside [1, " + std::to_string(depths[i]) + "]");
        }
    }
    return CompressionPlan(std::move(ranks));
}

// TOML via CLI11's config reader: flat `key = value` lines, optionally under
// a [train] table, become a JSON object for TrainConfig::from_json.
json toml_to_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    json out = json::object();
    for (const auto& item : CLI::ConfigTOML().from_config(in)) {
        if (item.name == "++" || item.name == "--") continue;
        if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == "train")) {
            throw UsageError(path.string() + ": unexpected table " + item.fullname());
        }
        if (item.inputs.size() != 1) throw UsageError(path.string() + ": " + item.name + " needs one value");
        const std::string& v = item.inputs[0];
        json value = v;
        if (v == "true" || v == "false") {
            value = v == "true";
        } else if (!v.empty()) {
            try {
                std::size_t used = 0;
                if (v.find_first_of(".eE") == std::string::npos && v[0] != '-') {
                    const auto n = std::stoull(v, &used);
                    if (used == v.size()) value = n;
                } else {
                    const double d = std::stod(v, &used);
                    if (used == v.size()) value = d;
                }
            } catch (const std::exception&) {
            }
        }
        out[item.name] = value;
    }
    return out;
}

TrainConfig read_train_config(const std::string& path) {
    if (path.empty()) return {};
    try {
        if (fs::path(path).extension() == ".json") return TrainConfig::from_json(read_file(path));
        return TrainConfig::from_json(toml_to_json(path).dump());
    } catch (const FormatError& e) {
        throw UsageError(e.what());
    } catch (const ArgumentError& e) {
        throw UsageError(e.what());
    } catch (const CLI::Error& e) {
        throw UsageError(path + ": " + e.what());
    }
}

int run_extract(const std::string& image_path, const BackboneFlags& bf, const std::string& out, bool dry_run,
                std::size_t threads) {
    const Tensor image = load_png_rgb(image_path);
    const Backbone backbone = make_backbone(bf);
    const auto grid = tile_grid(image.extent(1), image.extent(2), backbone.input_width(), backbone.input_height());
    spdlog::info("{}x{} image, {}x{} backbone input: grid {}x{}, padded {}x{}, {} {}", image.extent(1),
                 image.extent(2), backbone.input_width(), backbone.input_height(), grid.cols, grid.rows,
                 grid.padded_w, grid.padded_h, grid.tile_count, grid.tile_count == 1 ? "tile" : "tiles");
    if (dry_run) return 0;
    if (out.empty()) throw UsageError("--out is required unless --dry-run is given");
    const auto plan = make_plan(bf.ranks, backbone.tap_depths(), backbone.tap_names());
    ExtractOptions opt;
    opt.threads = threads;
    const auto stack = tessellate_extract(image, backbone, plan, opt);
    save_tensor(stack.features, out);
    const json manifest{{"features", fs::path(out).filename().string()},
                        {"depth", stack.depth},
                        {"width", image.extent(1)},
                        {"height", image.extent(2)},
                        {"tile_count", stack.tile_count},
                        {"backbone_id", stack.backbone_id},
                        {"plan_id", stack.plan_id}};
    write_file(fs::path(out).replace_extension(".json"), manifest.dump(2));
    spdlog::info("wrote {} ({} x {} x {})", out, stack.depth, image.extent(1), image.extent(2));
    return 0;
}

int run_compress_report(const std::string& image_path, const std::string& features_path, const BackboneFlags& bf,
                        std::size_t threads) {
    std::vector<Tensor> layers;
    std::vector<std::string> names;
    if (!features_path.empty()) {
        layers.push_back(load_tensor(features_path));
        if (layers[0].rank() != 3) throw FormatError(features_path + " is not a depth x w x h tensor");
        names.push_back("features");
    } else {
        const Backbone backbone = make_backbone(bf);
        layers = tessellate_layers(load_png_rgb(image_path), backbone, threads);
        names = backbone.tap_names();
    }
    std::vector<std::size_t> depths;
    for (const auto& l : layers) depths.push_back(l.extent(0));
    const auto plan = make_plan(bf.ranks, depths, names);

    json report = json::array();
    std::size_t compressed = 0, total = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::size_t rank = plan.per_layer_ranks()[i].rank;
        const auto t = depth_tucker(layers[i], rank, names[i]);
        const Tensor back = reconstruct_from_core(t.core, t.factor);
        double err = 0.0, norm = 0.0, discarded = 0.0;
        for (std::size_t k = 0; k < back.size(); ++k) {
            err += (back[k] - layers[i][k]) * (back[k] - layers[i][k]);
            norm += layers[i][k] * layers[i][k];
        }
        for (std::size_t k = rank; k < t.singular_values.size(); ++k) discarded += t.singular_values[k] * t.singular_values[k];
        report.push_back({{"layer", names[i]},
                          {"depth", depths[i]},
                          {"rank", rank},
                          {"error_sq", err},
                          {"relative_error", norm > 0.0 ? std::sqrt(err / norm) : 0.0},
                          {"discarded_energy", discarded},
                          {"energy_retained", t.factor.energy_retained}});
        compressed += rank;
        total += depths[i];
    }
    std::cout << json{{"layers", report}, {"total_depth", total}, {"compressed_depth", compressed}}.dump(2) << "\n";
    return 0;
}

int run_train(const std::string& config_path, const std::string& out, const std::map<std::string, json>& overrides) {
    json doc = json::parse(read_train_config(config_path).to_json());
    for (const auto& [k, v] : overrides) doc[k] = v;
    TrainConfig config;
    try {
        config = TrainConfig::from_json(doc.dump());
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    spdlog::info("training {} steps, {} scenes, {} lr {}, seed {}", config.steps, config.num_scenes,
                 optimizer_name(config.optimizer), config.learning_rate, config.seed);
    const auto result = train(config, [](const LossPoint& p) {
        spdlog::info("step {:>5}  loss {:.6f}  head-1 mIOU {:.4f}", p.step, p.loss, p.miou);
    });
    save_training(result, config, out);
    std::string counts;
    for (auto n : result.min_head_counts) counts += std::to_string(n) + " ";
    spdlog::info("min-head counts: {}", counts);
    spdlog::info("checkpoint written to {}", out);
    return 0;
}

int run_eval(const std::string& checkpoint, const std::string& data, std::size_t head, std::uint64_t seed,
             const std::string& out, std::size_t threads) {
    const Model model = Model::load(checkpoint);
    if (head < 1 || head > model.network.config.num_heads) {
        throw UsageError("--head " + std::to_string(head) + " outside [1, " +
                         std::to_string(model.network.config.num_heads) + "]");
    }
    EvalOptions opt;
    opt.seed = seed;
    const auto report = evaluate(data, model_predictor(model, head, threads), opt);
    std::size_t errors = 0;
    for (const auto& s : report.per_image) errors += s.error ? 1 : 0;
    spdlog::info("{} images scored, {} errors: mIOU {:.4f}, mBIOU {:.4f}", report.n_images, errors, report.miou,
                 report.mbiou);
    if (!out.empty()) write_file(out, report.to_json());
    std::cout << report.to_json() << "\n";
    return 0;
}

int run_simulate(const std::string& mask_path, std::uint64_t seed, std::size_t n_pos, std::size_t n_neg) {
    const Tensor m = load_png_mask(mask_path);
    const auto clicks = simulate_clicks(m.reshaped({m.extent(1), m.extent(2)}), seed, n_pos, n_neg);
    std::cout << clicks.to_json() << "\n";
    return 0;
}

int run_serve(const std::vector<std::string>& checkpoints, const std::string& host, int port,
              const std::string& store, std::size_t budget_mb, bool rerank, std::size_t threads) {
    auto registry = std::make_shared<CheckpointRegistry>();
    for (const auto& dir : checkpoints) spdlog::info("loaded checkpoint {}", registry->load(dir));
    SessionService service(ServiceOptions{store, budget_mb << 20, threads, rerank}, registry);
    HttpServer http(service);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);
    const int bound = http.bind(host, port);
    spdlog::info("listening on {}:{}, store {}", host, bound, store);
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        spdlog::info("signal {}, shutting down", sig);
        http.stop();
    });
    http.listen();
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("hyperseg"));
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");

    CLI::App app{"Interactive segmentation with compressed hypercolumn features"};
    app.require_subcommand(1);
    std::size_t threads = 0;
    bool quiet = false;
    app.add_option("--threads", threads, "Worker threads for feature extraction (0: all cores)");
    app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

    BackboneFlags extract_bf;
    std::string extract_image, extract_out;
    bool dry_run = false;
    auto* extract = app.add_subcommand("extract", "Tessellated, compressed feature extraction for one image");
    extract->add_option("--image", extract_image, "RGB PNG")->required()->check(CLI::ExistingFile);
    extract->add_option("--out", extract_out, "Feature container to write; a .json manifest goes next to it");
    extract->add_flag("--dry-run", dry_run, "Only report the tile grid");
    add_backbone_flags(extract, extract_bf);

    BackboneFlags report_bf;
    std::string report_image, report_features;
    auto* report = app.add_subcommand("compress-report", "Per-layer reconstruction error of a depth compression");
    auto* report_img_opt = report->add_option("--image", report_image, "RGB PNG")->check(CLI::ExistingFile);
    auto* report_feat_opt =
        report->add_option("--features", report_features, "Depth x W x H feature container")->check(CLI::ExistingFile);
    report_img_opt->excludes(report_feat_opt);
    add_backbone_flags(report, report_bf);

    std::string train_config, train_out;
    std::optional<std::size_t> t_steps, t_batch, t_heads, t_scenes, t_eval_every;
    std::optional<double> t_lr, t_delta;
    std::optional<std::string> t_optimizer;
    std::optional<std::uint64_t> t_seed, t_scene_seed;
    auto* train_cmd = app.add_subcommand("train", "Train on seeded synthetic scenes");
    train_cmd->add_option("--config", train_config, "TOML or JSON config; flags override it")->check(CLI::ExistingFile);
    train_cmd->add_option("--out", train_out, "Checkpoint directory")->required();
    train_cmd->add_option("--steps", t_steps);
    train_cmd->add_option("--lr", t_lr);
    train_cmd->add_option("--optimizer", t_optimizer)->check(CLI::IsMember({"sgd", "adam"}));
    train_cmd->add_option("--batch-size", t_batch);
    train_cmd->add_option("--delta", t_delta);
    train_cmd->add_option("--heads", t_heads);
    train_cmd->add_option("--scenes", t_scenes);
    train_cmd->add_option("--eval-every", t_eval_every);
    train_cmd->add_option("--seed", t_seed);
    train_cmd->add_option("--scene-seed", t_scene_seed);

    std::string eval_ckpt, eval_data, eval_out;
    std::size_t eval_head = 1;
    std::uint64_t eval_seed = 0;
    auto* eval_cmd = app.add_subcommand("eval", "mIOU / mBIOU of one head with 5 + 5 simulated clicks");
    eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--data", eval_data, "Dataset root")->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--head", eval_head, "Head to score")->default_str("1");
    eval_cmd->add_option("--seed", eval_seed, "Click simulation seed")->default_str("0");
    eval_cmd->add_option("--out", eval_out, "Also write the report here");

    std::string sim_mask;
    std::uint64_t sim_seed = 0;
    std::size_t sim_pos = 5, sim_neg = 5;
    auto* sim = app.add_subcommand("simulate-clicks", "Sample clicks for a ground-truth mask");
    sim->add_option("--mask", sim_mask, "Mask PNG")->required()->check(CLI::ExistingFile);
    sim->add_option("--seed", sim_seed)->default_str("0");
    sim->add_option("--pos", sim_pos)->default_str("5")->check(CLI::Range(1, 15));
    sim->add_option("--neg", sim_neg)->default_str("5")->check(CLI::Range(1, 15));

    std::vector<std::string> serve_ckpts;
    std::string serve_host = "127.0.0.1", serve_store;
    int serve_port = 8080;
    std::size_t serve_budget = 256;
    bool serve_rerank = false;
    auto* serve = app.add_subcommand("serve", "HTTP session service");
    serve->add_option("--checkpoint", serve_ckpts, "Checkpoint directory (repeatable)")
        ->required()
        ->check(CLI::ExistingDirectory);
    serve->add_option("--host", serve_host)->default_str("127.0.0.1");
    serve->add_option("--port", serve_port, "0 picks a free port")->default_str("8080")->check(CLI::Range(0, 65535));
    serve->add_option("--store", serve_store, "Session store directory")->required();
    serve->add_option("--budget-mb", serve_budget, "Resident session memory budget")->default_str("256");
    serve->add_flag("--rerank", serve_rerank, "Default head by interactive-context loss");

    std::string gen_out;
    std::size_t gen_clips = 8, gen_frames = 1;
    std::uint64_t gen_seed = 1000;
    auto* gen = app.add_subcommand("gen-data", "Write a synthetic clip dataset");
    gen->add_option("--out", gen_out, "Dataset root")->required();
    gen->add_option("--clips", gen_clips)->default_str("8")->check(CLI::PositiveNumber);
    gen->add_option("--frames", gen_frames, "Frames per clip")->default_str("1")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed)->default_str("1000");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (quiet) spdlog::set_level(spdlog::level::warn);

    try {
        if (*extract) return run_extract(extract_image, extract_bf, extract_out, dry_run, threads);
        if (*report) {
            if (report_image.empty() && report_features.empty()) throw UsageError("give --image or --features");
            return run_compress_report(report_image, report_features, report_bf, threads);
        }
        if (*train_cmd) {
            std::map<std::string, json> o;
            if (t_steps) o["steps"] = *t_steps;
            if (t_lr) o["learning_rate"] = *t_lr;
            if (t_optimizer) o["optimizer"] = *t_optimizer;
            if (t_batch) o["batch_size"] = *t_batch;
            if (t_delta) o["delta"] = *t_delta;
            if (t_heads) o["num_heads"] = *t_heads;
            if (t_scenes) o["num_scenes"] = *t_scenes;
            if (t_eval_every) o["eval_every"] = *t_eval_every;
            if (t_seed) o["seed"] = *t_seed;
            if (t_scene_seed) o["scene_seed"] = *t_scene_seed;
            o["threads"] = threads;
            return run_train(train_config, train_out, o);
        }
        if (*eval_cmd) return run_eval(eval_ckpt, eval_data, eval_head, eval_seed, eval_out, threads);
        if (*sim) return run_simulate(sim_mask, sim_seed, sim_pos, sim_neg);
        if (*serve) {
            return run_serve(serve_ckpts, serve_host, serve_port, serve_store, serve_budget, serve_rerank, threads);
        }
        if (*gen) {
            write_synthetic_dataset(gen_out, gen_clips, gen_frames, gen_seed);
            spdlog::info("wrote {} clips x {} frames to {}", gen_clips, gen_frames, gen_out);
            return 0;
        }
    } catch (const UsageError& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 2;
}
