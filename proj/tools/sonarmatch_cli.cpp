// Command-line front end: transfer, match, train, evaluate, synth, pipeline, compare.
// Exit codes: 0 success, 2 config error, 3 stage failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "sonarmatch/pipeline.hpp"
#include "sonarmatch/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sonarmatch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

void write_json_file(const std::string& path, const json& j) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(path);
    os << j.dump(2) << "\n";
}

int cmd_transfer(const std::string& content_path, const std::string& style_path,
                 const std::string& out_path, const pipeline::ExtractorConfig& ecfg,
                 transfer::TransferConfig tcfg) {
    const Image content = load_png(content_path);
    const Image style = load_png(style_path);
    auto extractor = pipeline::make_extractor(ecfg);
    const auto result = transfer::run_transfer(content, style, *extractor, tcfg);

    Image out = result.image;
    if (out.colorspace == Colorspace::YIQ) out = yiq_to_rgb(out);
    save_png(out, out_path);

    json trace = json::array();
    for (const auto& p : result.trace)
        trace.push_back({{"iteration", p.iteration},
                         {"content", p.content},
                         {"style", p.style},
                         {"total", p.total}});
    const std::string trace_path = fs::path(out_path).replace_extension(".trace.json").string();
    write_json_file(trace_path, trace);
    std::cout << "wrote " << out_path << " and " << trace_path << "\n";
    return kExitOk;
}

int cmd_match(const std::string& path_a, const std::string& path_b, const std::string& detector,
              const std::string& descriptor_name, const std::string& weights,
              const std::string& out_dir, match::MatchConfig mcfg, int repeats,
              uint64_t descriptor_seed) {
    const Image a = load_png(path_a);
    const Image b = load_png(path_b);
    const auto det = detector == "corner" ? match::DetectorKind::Corner : match::DetectorKind::Dog;

    match::DescribeFn describe;
    descriptor::DescriptorNet net;
    if (descriptor_name == "tfeat") {
        net = weights.empty() ? descriptor::DescriptorNet(descriptor::NetShape{}, descriptor_seed)
                              : descriptor::load_weights(weights);
        describe = [&net](const Patch& patch) {
            const auto v = net.describe(patch);
            Eigen::VectorXd out(v.size());
            for (long i = 0; i < v.size(); ++i) out(i) = static_cast<double>(v(i));
            return out;
        };
    } else {
        describe = match::normalized_patch_descriptor;
    }

    const auto report = match::match_images(a, b, det, describe, mcfg, repeats);

    pipeline::ConditionRow row;
    row.condition = detector + "+" + descriptor_name;
    row.detector = detector;
    row.descriptor = descriptor_name;
    row.preprocessing = "raw";
    row.seed = mcfg.seed;
    row.report = report;

    fs::create_directories(out_dir);
    write_json_file((fs::path(out_dir) / "match_report.json").string(),
                    pipeline::match_report_to_json(row, path_a + "|" + path_b));
    const Image overlay = match::render_match_overlay(a, b, report.keypoints_a,
                                                      report.keypoints_b, report.correspondences);
    save_png(overlay, (fs::path(out_dir) / "match_overlay.png").string());
    std::cout << "n_inliers=" << report.n_inliers << " n_matches=" << report.n_matches
              << " pocm=" << report.pocm << " rt=" << report.runtime_seconds_mean << "s\n";
    return kExitOk;
}

int cmd_train(int n_triplets, int epochs, const std::string& loss_name, double lr, int batch,
              double mu, uint64_t seed, const std::string& out_path) {
    // Synthetic training data: three degraded scenario pairs.
    std::vector<synth::GroundTruthPair> pairs;
    for (int i = 0; i < 3; ++i) {
        synth::ScenarioParams p;
        p.seed = seed + static_cast<uint64_t>(i);
        p.height = 256;
        p.width = 256;
        p.speckle_strength = 0.25;
        p.shadow_count = 3;
        p.brightness_shift = (i - 1) * 0.08;
        p.blur_sigma = 0.6;
        p.homography = synth::preset_homography(i == 2 ? "rotate_scale" : "translate", p.width,
                                                p.height);
        pairs.push_back(synth::gen_sonar_pair(p));
    }
    synth::TripletGenParams tg;
    tg.seed = seed + 1000;
    const auto triplets = synth::gen_patch_triplets(pairs, n_triplets, tg);

    descriptor::DescriptorNet net(descriptor::NetShape{}, seed);
    descriptor::TrainConfig tc;
    tc.loss = loss_name == "ratio" ? descriptor::LossKind::Ratio : descriptor::LossKind::Margin;
    tc.mu = mu;
    tc.learning_rate = lr;
    tc.batch_size = batch;
    tc.epochs = epochs;
    tc.seed = seed;
    const auto history = descriptor::train(net, triplets, tc);

    descriptor::save_weights(net, out_path);
    json j;
    j["epoch_mean_loss"] = history.epoch_mean_loss;
    j["triplets"] = n_triplets;
    j["loss"] = loss_name;
    write_json_file(fs::path(out_path).replace_extension(".history.json").string(), j);
    std::cout << "wrote " << out_path << "; final epoch loss "
              << history.epoch_mean_loss.back() << "\n";
    return kExitOk;
}

int cmd_evaluate(const std::string& reference_path, const std::vector<std::string>& test_paths,
                 const std::string& out_path) {
    const Image ref = to_gray(load_png(reference_path));
    std::vector<quality::QualityIndexes> indexes;
    for (const auto& p : test_paths) indexes.push_back(quality::evaluate(ref, to_gray(load_png(p))));

    json rows = json::array();
    std::vector<quality::StyleScore> scores;
    if (indexes.size() >= 2) scores = quality::score_styles(indexes);
    auto sig6 = [](double v) {
        if (v == 0.0 || !std::isfinite(v)) return v;
        const double mag = std::pow(10.0, 5 - std::floor(std::log10(std::abs(v))));
        return std::round(v * mag) / mag;
    };
    for (size_t i = 0; i < indexes.size(); ++i) {
        json row = {{"style", test_paths[i]},
                    {"psnr", sig6(indexes[i].psnr)},
                    {"ssim", sig6(indexes[i].ssim)},
                    {"cosin", sig6(indexes[i].cosin)},
                    {"entropy", sig6(indexes[i].entropy)}};
        if (!scores.empty()) {
            row["total_score"] = scores[i].total;
            row["tie"] = scores[i].tie;
        }
        rows.push_back(row);
    }
    if (out_path.empty())
        std::cout << rows.dump(2) << "\n";
    else
        write_json_file(out_path, rows);
    return kExitOk;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir, int n_triplets) {
    const json j = read_json_file(config_path);
    const auto params = pipeline::scenario_from_json(
        j.contains("scenario") ? j.at("scenario") : j);
    const auto pair = synth::gen_sonar_pair(params);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    save_png(pair.image_a, (dir / "pair_a.png").string());
    save_png(pair.image_b, (dir / "pair_b.png").string());

    json gt;
    std::vector<double> h(9);
    for (int i = 0; i < 9; ++i) h[i] = pair.h_true(i / 3, i % 3);
    gt["h_true"] = h;
    gt["params"] = pipeline::scenario_to_json(params);
    write_json_file((dir / "ground_truth.json").string(), gt);

    if (n_triplets > 0) {
        synth::TripletGenParams tg;
        tg.seed = params.seed + 1;
        const auto triplets = synth::gen_patch_triplets({pair}, n_triplets, tg);
        const fs::path tdir = dir / "triplets";
        fs::create_directories(tdir);
        json index = json::array();
        auto save_patch = [&](const Patch& p, const std::string& name) {
            Image img(p.side, p.side, 1, Colorspace::GRAY);
            img.pixels = p.pixels;
            save_png(img, (tdir / name).string());
        };
        for (size_t i = 0; i < triplets.size(); ++i) {
            const std::string base = std::to_string(i);
            save_patch(triplets[i].a, base + "_a.png");
            save_patch(triplets[i].p, base + "_p.png");
            save_patch(triplets[i].n, base + "_n.png");
            index.push_back({{"anchor", base + "_a.png"},
                             {"positive", base + "_p.png"},
                             {"negative", base + "_n.png"}});
        }
        write_json_file((tdir / "index.json").string(), index);
    }
    std::cout << "wrote scenario artifacts to " << out_dir << "\n";
    return kExitOk;
}

int cmd_pipeline(const std::string& config_path, const std::string& out_dir, int repeats_override,
                 uint64_t seed_override, bool has_seed, bool compare) {
    auto cfg = pipeline::config_from_json(read_json_file(config_path));
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (repeats_override > 0) cfg.repeats = repeats_override;
    if (has_seed) {
        cfg.match_cfg.seed = seed_override;
        cfg.transfer_cfg.seed = seed_override;
    }
    const auto report = compare ? pipeline::compare_methods(cfg) : pipeline::usme(cfg);
    if (cfg.output_dir.empty())
        std::cout << pipeline::experiment_report_to_json(report).dump(2) << "\n";
    else
        std::cout << "wrote report to " << cfg.output_dir << "\n";
    for (const auto& row : report.rows)
        std::cout << row.condition << ": n_inliers=" << row.report.n_inliers
                  << " n_matches=" << row.report.n_matches << " pocm=" << row.report.pocm
                  << " rt=" << row.report.runtime_seconds_mean << "s\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sonar image matching with style-transfer preprocessing and a learned descriptor"};
    app.require_subcommand(1);

    // transfer
    auto* t = app.add_subcommand("transfer", "Style-transfer a content image");
    std::string t_content, t_style, t_out = "generated.png", t_mode = "full";
    pipeline::ExtractorConfig t_ecfg;
    transfer::TransferConfig t_tcfg;
    t->add_option("--content", t_content, "Content PNG")->required();
    t->add_option("--style", t_style, "Style PNG")->required();
    t->add_option("--out", t_out, "Output PNG path");
    t->add_option("--mode", t_mode, "full | luminance_only");
    t->add_option("--alpha", t_tcfg.alpha, "Content weight");
    t->add_option("--beta", t_tcfg.beta, "Style weight");
    t->add_option("--iterations", t_tcfg.num_iterations, "Iteration count");
    t->add_option("--step-size", t_tcfg.step_size, "Gradient step size");
    t->add_option("--seed", t_tcfg.seed, "Seed");
    t->add_flag("--color-prematch", t_tcfg.color_prematch, "Color-match style first");
    t->add_option("--extractor", t_ecfg.type, "tiny | vgg19");
    t->add_option("--extractor-channels", t_ecfg.channels, "Extractor input channels");
    t->add_option("--extractor-seed", t_ecfg.seed, "Extractor seed");
    t->add_option("--extractor-weights", t_ecfg.weights_path, "Extractor weight file");

    // match
    auto* m = app.add_subcommand("match", "Detect + describe + cross-check + RANSAC");
    std::string m_a, m_b, m_detector = "dog", m_descriptor = "tfeat", m_weights, m_out = "match_out";
    match::MatchConfig m_cfg;
    int m_repeats = 1;
    uint64_t m_desc_seed = 11;
    m->add_option("--image-a", m_a)->required();
    m->add_option("--image-b", m_b)->required();
    m->add_option("--detector", m_detector, "dog | corner");
    m->add_option("--descriptor", m_descriptor, "tfeat | patch");
    m->add_option("--weights", m_weights, "TFW1 descriptor weights");
    m->add_option("--out", m_out, "Output directory");
    m->add_option("--repeats", m_repeats, "Timing repeats");
    m->add_option("--seed", m_cfg.seed, "RANSAC seed");
    m->add_option("--ransac-threshold", m_cfg.ransac_threshold);
    m->add_option("--max-keypoints", m_cfg.max_keypoints);
    m->add_option("--descriptor-seed", m_desc_seed, "Seed for an untrained net");

    // train
    auto* tr = app.add_subcommand("train", "Train the descriptor on synthetic triplets");
    int tr_n = 2000, tr_epochs = 5, tr_batch = 32;
    double tr_lr = 0.05, tr_mu = 1.0;
    std::string tr_loss = "margin", tr_out = "tfeat.tfw";
    uint64_t tr_seed = 0;
    tr->add_option("--triplets", tr_n, "Triplet count");
    tr->add_option("--epochs", tr_epochs);
    tr->add_option("--loss", tr_loss, "margin | ratio");
    tr->add_option("--lr", tr_lr, "Learning rate");
    tr->add_option("--batch", tr_batch, "Batch size");
    tr->add_option("--mu", tr_mu, "Margin parameter");
    tr->add_option("--seed", tr_seed);
    tr->add_option("--out", tr_out, "Output weight file");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Quality indexes and 10-point style scoring");
    std::string ev_ref, ev_out;
    std::vector<std::string> ev_tests;
    ev->add_option("--reference", ev_ref, "Reference (raw sonar) PNG")->required();
    ev->add_option("--test", ev_tests, "Generated PNG (repeatable)")->required();
    ev->add_option("--out", ev_out, "Output JSON (stdout when omitted)");

    // synth
    auto* sy = app.add_subcommand("synth", "Generate a ground-truth scenario pair");
    std::string sy_config, sy_out = "synth_out";
    int sy_triplets = 0;
    sy->add_option("--config", sy_config, "Scenario JSON")->required();
    sy->add_option("--out", sy_out, "Output directory");
    sy->add_option("--triplets", sy_triplets, "Also emit a triplet dataset of this size");

    // pipeline / compare
    auto* pl = app.add_subcommand("pipeline", "Run the full matching-enhancement pipeline");
    auto* cp = app.add_subcommand("compare", "Run the six-condition method comparison");
    std::string pl_config, pl_out, cp_config, cp_out;
    int pl_repeats = 0, cp_repeats = 0;
    uint64_t pl_seed = 0, cp_seed = 0;
    pl->add_option("--config", pl_config)->required();
    pl->add_option("--out", pl_out, "Output directory (overrides config)");
    pl->add_option("--repeats", pl_repeats, "Timing repeats (overrides config)");
    auto* pl_seed_opt = pl->add_option("--seed", pl_seed, "Seed override");
    cp->add_option("--config", cp_config)->required();
    cp->add_option("--out", cp_out, "Output directory (overrides config)");
    cp->add_option("--repeats", cp_repeats, "Timing repeats (overrides config)");
    auto* cp_seed_opt = cp->add_option("--seed", cp_seed, "Seed override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (t->parsed()) {
            if (t_mode == "luminance_only")
                t_tcfg.mode = transfer::Mode::LuminanceOnly;
            else if (t_mode != "full")
                throw ConfigError("mode must be 'full' or 'luminance_only'");
            return cmd_transfer(t_content, t_style, t_out, t_ecfg, t_tcfg);
        }
        if (m->parsed())
            return cmd_match(m_a, m_b, m_detector, m_descriptor, m_weights, m_out, m_cfg,
                             m_repeats, m_desc_seed);
        if (tr->parsed())
            return cmd_train(tr_n, tr_epochs, tr_loss, tr_lr, tr_batch, tr_mu, tr_seed, tr_out);
        if (ev->parsed()) return cmd_evaluate(ev_ref, ev_tests, ev_out);
        if (sy->parsed()) return cmd_synth(sy_config, sy_out, sy_triplets);
        if (pl->parsed())
            return cmd_pipeline(pl_config, pl_out, pl_repeats, pl_seed, !pl_seed_opt->empty(),
                                false);
        if (cp->parsed())
            return cmd_pipeline(cp_config, cp_out, cp_repeats, cp_seed, !cp_seed_opt->empty(),
                                true);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const StageError& e) {
        std::cerr << "stage failure: " << e.what() << "\n";
        return kExitStage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    }
    return kExitOk;
}
