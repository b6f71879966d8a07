#include "sonarmatch/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sonarmatch/png_io.hpp"
#include "sonarmatch/rng.hpp"

namespace sonarmatch::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<match::Correspondence> map_correspondences(
    const std::vector<match::Correspondence>& corrs, std::pair<int, int> generated_dims,
    std::pair<int, int> raw_dims) {
    if (generated_dims != raw_dims)
        throw DimensionMismatchError(
            "map_correspondences: generated " + std::to_string(generated_dims.first) + "x" +
            std::to_string(generated_dims.second) + " vs raw " + std::to_string(raw_dims.first) +
            "x" + std::to_string(raw_dims.second));
    return corrs;
}

std::unique_ptr<features::FeatureExtractor> make_extractor(const ExtractorConfig& cfg) {
    if (cfg.type == "tiny") {
        auto e = std::make_unique<features::ConvNetExtractor>(
            features::ConvNetExtractor::tiny(cfg.channels, cfg.seed));
        if (!cfg.weights_path.empty()) e->load_weights(cfg.weights_path);
        return e;
    }
    if (cfg.type == "vgg19") {
        auto e = std::make_unique<features::ConvNetExtractor>(
            cfg.channels, features::ConvNetExtractor::vgg19_specs(), cfg.seed);
        if (!cfg.weights_path.empty()) e->load_weights(cfg.weights_path);
        return e;
    }
    throw ConfigError("make_extractor: unknown extractor type '" + cfg.type + "'");
}

namespace {

/// Colorful value-noise stand-in for an optical style image.
Image synth_style_image(int height, int width, uint64_t seed) {
    Image out(height, width, 3, Colorspace::RGB);
    for (int c = 0; c < 3; ++c) {
        Image ch = synth::value_noise_terrain(height, width, seed + static_cast<uint64_t>(c) * 131);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) out.at(y, x, c) = 0.25 + 0.7 * ch.at(y, x, 0);
    }
    return out;
}

Image as_gray(const Image& img) {
    if (img.colorspace == Colorspace::GRAY) return img;
    if (img.colorspace == Colorspace::YIQ) return to_gray(yiq_to_rgb(img));
    return to_gray(img);
}

Image as_savable(const Image& img) {
    if (img.colorspace == Colorspace::YIQ) return yiq_to_rgb(img);
    return img;
}

} // namespace

ResolvedInputs resolve_inputs(const PipelineConfig& cfg) {
    ResolvedInputs in;
    if (cfg.scenario) {
        const auto pair = synth::gen_sonar_pair(*cfg.scenario);
        in.sonar_a = pair.image_a;
        in.sonar_b = pair.image_b;
    } else {
        if (cfg.sonar_a.empty() || cfg.sonar_b.empty())
            throw ConfigError("pipeline: sonar_a/sonar_b paths or a scenario are required");
        in.sonar_a = load_png(cfg.sonar_a);
        in.sonar_b = load_png(cfg.sonar_b);
    }
    if (cfg.styles.empty()) {
        in.styles.push_back(
            synth_style_image(in.sonar_a.height, in.sonar_a.width, cfg.style_synth_seed));
        in.style_labels.push_back("synthetic");
    } else {
        for (const auto& path : cfg.styles) {
            in.styles.push_back(load_png(path));
            in.style_labels.push_back(path);
        }
    }
    return in;
}

namespace {

struct TransferOutputs {
    Image a_prime, b_prime;
    std::vector<transfer::LossTracePoint> trace_a, trace_b;
    size_t style_index = 0;
    std::vector<QualityRow> quality_table;
};

/// Transfer A and B toward the chosen style; with several candidate styles,
/// select the one winning the 10-point quality scoring on image A.
TransferOutputs run_transfer_stage(const ResolvedInputs& in, const PipelineConfig& cfg,
                                   const features::FeatureExtractor& extractor) {
    TransferOutputs out;

    std::vector<Image> a_candidates;
    std::vector<std::vector<transfer::LossTracePoint>> a_traces;
    for (const auto& style : in.styles) {
        auto r = transfer::run_transfer(in.sonar_a, style, extractor, cfg.transfer_cfg);
        a_candidates.push_back(std::move(r.image));
        a_traces.push_back(std::move(r.trace));
    }

    std::vector<quality::QualityIndexes> indexes;
    const Image ref = as_savable(in.sonar_a);
    for (const auto& cand : a_candidates)
        indexes.push_back(quality::evaluate(as_gray(ref), as_gray(cand)));

    std::vector<quality::StyleScore> scores;
    if (indexes.size() >= 2) {
        scores = quality::score_styles(indexes);
        size_t best = 0;
        for (size_t i = 1; i < scores.size(); ++i)
            if (scores[i].total > scores[best].total) best = i;
        out.style_index = best;
        std::cerr << "pipeline: auto-selected style '" << in.style_labels[best]
                  << "' by total score " << scores[best].total << "\n";
    }

    for (size_t i = 0; i < indexes.size(); ++i) {
        QualityRow row;
        row.label = in.style_labels[i];
        row.indexes = indexes[i];
        if (!scores.empty()) {
            row.total_score = scores[i].total;
            row.tie = scores[i].tie;
        }
        out.quality_table.push_back(std::move(row));
    }

    out.a_prime = std::move(a_candidates[out.style_index]);
    out.trace_a = std::move(a_traces[out.style_index]);

    auto rb = transfer::run_transfer(in.sonar_b, in.styles[out.style_index], extractor,
                                     cfg.transfer_cfg);
    out.b_prime = std::move(rb.image);
    out.trace_b = std::move(rb.trace);
    return out;
}

match::DescribeFn tfeat_describe(const descriptor::DescriptorNet& net) {
    return [&net](const Patch& patch) {
        const auto v = net.describe(patch);
        Eigen::VectorXd out(v.size());
        for (long i = 0; i < v.size(); ++i) out(i) = static_cast<double>(v(i));
        return out;
    };
}

void write_artifacts(const PipelineConfig& cfg, const ResolvedInputs& in,
                     const TransferOutputs& tr, const ExperimentReport& report) {
    if (cfg.output_dir.empty()) return;
    fs::create_directories(cfg.output_dir);
    const fs::path dir(cfg.output_dir);
    save_png(as_savable(in.sonar_a), (dir / "sonar_a.png").string());
    save_png(as_savable(in.sonar_b), (dir / "sonar_b.png").string());
    save_png(as_savable(in.styles[tr.style_index]), (dir / "style.png").string());
    save_png(as_savable(tr.a_prime), (dir / "a_prime.png").string());
    save_png(as_savable(tr.b_prime), (dir / "b_prime.png").string());
    std::ofstream(dir / "report.json") << experiment_report_to_json(report).dump(2) << "\n";
    std::ofstream(dir / "config.json") << report.config_echo.dump(2) << "\n";

    // Match overlay for the first TFeat row, when available.
    for (const auto& row : report.rows) {
        if (row.descriptor != "tfeat" || row.report.correspondences.empty()) continue;
        const Image overlay =
            match::render_match_overlay(as_savable(tr.a_prime), as_savable(tr.b_prime),
                                        row.report.keypoints_a, row.report.keypoints_b,
                                        row.report.correspondences);
        save_png(overlay, (dir / "match_overlay.png").string());
        break;
    }
}

json transfer_config_echo(const PipelineConfig& cfg) {
    json j;
    j["alpha"] = cfg.transfer_cfg.alpha;
    j["beta"] = cfg.transfer_cfg.beta;
    j["num_iterations"] = cfg.transfer_cfg.num_iterations;
    j["step_size"] = cfg.transfer_cfg.step_size;
    j["mode"] = cfg.transfer_cfg.mode == transfer::Mode::LuminanceOnly ? "luminance_only" : "full";
    j["color_prematch"] = cfg.transfer_cfg.color_prematch;
    j["seed"] = cfg.transfer_cfg.seed;
    j["content_layers"] = cfg.transfer_cfg.content_layers;
    j["style_layers"] = cfg.transfer_cfg.style_layers;
    return j;
}

json config_echo(const PipelineConfig& cfg) {
    json j;
    j["sonar_a"] = cfg.sonar_a;
    j["sonar_b"] = cfg.sonar_b;
    j["styles"] = cfg.styles;
    if (cfg.scenario) j["scenario"] = scenario_to_json(*cfg.scenario);
    j["extractor"] = {{"type", cfg.extractor.type},
                      {"channels", cfg.extractor.channels},
                      {"seed", cfg.extractor.seed},
                      {"weights_path", cfg.extractor.weights_path}};
    j["transfer"] = transfer_config_echo(cfg);
    j["match"] = {{"cross_check", cfg.match_cfg.cross_check},
                  {"ransac_threshold", cfg.match_cfg.ransac_threshold},
                  {"ransac_max_iters", cfg.match_cfg.ransac_max_iters},
                  {"ransac_confidence", cfg.match_cfg.ransac_confidence},
                  {"seed", cfg.match_cfg.seed},
                  {"max_keypoints", cfg.match_cfg.max_keypoints},
                  {"patch_side", cfg.match_cfg.patch_side}};
    if (cfg.match_cfg.ratio_test) j["match"]["ratio_test"] = *cfg.match_cfg.ratio_test;
    j["detector"] = cfg.detector == match::DetectorKind::Dog ? "dog" : "corner";
    j["descriptor_weights"] = cfg.descriptor_weights;
    j["descriptor_seed"] = cfg.descriptor_seed;
    j["repeats"] = cfg.repeats;
    j["output_dir"] = cfg.output_dir;
    j["version"] = kVersion;
    return j;
}

descriptor::DescriptorNet load_or_seed_net(const PipelineConfig& cfg) {
    if (!cfg.descriptor_weights.empty()) return descriptor::load_weights(cfg.descriptor_weights);
    return descriptor::DescriptorNet(descriptor::NetShape{}, cfg.descriptor_seed);
}

ConditionRow run_condition(const Image& a, const Image& b, const std::string& condition,
                           match::DetectorKind det, const std::string& descriptor_name,
                           const match::DescribeFn& describe, const match::MatchConfig& mcfg,
                           int repeats, const std::string& preprocessing) {
    ConditionRow row;
    row.condition = condition;
    row.detector = det == match::DetectorKind::Dog ? "dog" : "corner";
    row.descriptor = descriptor_name;
    row.preprocessing = preprocessing;
    row.seed = mcfg.seed;
    row.report = match::match_images(a, b, det, describe, mcfg, repeats);
    return row;
}

} // namespace

ExperimentReport usme(const PipelineConfig& cfg) {
    ExperimentReport report;
    report.config_echo = config_echo(cfg);

    ResolvedInputs in;
    try {
        in = resolve_inputs(cfg);
    } catch (const Error& e) {
        throw StageError("inputs", e.what());
    }

    std::unique_ptr<features::FeatureExtractor> extractor;
    descriptor::DescriptorNet net;
    try {
        extractor = make_extractor(cfg.extractor);
        net = load_or_seed_net(cfg);
    } catch (const Error& e) {
        throw StageError("setup", e.what());
    }

    TransferOutputs tr;
    try {
        tr = run_transfer_stage(in, cfg, *extractor);
    } catch (const Error& e) {
        throw StageError("transfer", e.what());
    }
    report.quality_table = tr.quality_table;
    report.selected_style = in.style_labels[tr.style_index];
    report.trace_a = tr.trace_a;
    report.trace_b = tr.trace_b;

    try {
        auto row = run_condition(as_gray(tr.a_prime), as_gray(tr.b_prime), "ours", cfg.detector,
                                 "tfeat", tfeat_describe(net), cfg.match_cfg, cfg.repeats,
                                 "transferred");
        // Algorithm step: map correspondences back onto the raw images.
        row.report.correspondences = map_correspondences(
            row.report.correspondences, {tr.a_prime.height, tr.a_prime.width},
            {in.sonar_a.height, in.sonar_a.width});
        report.rows.push_back(std::move(row));
    } catch (const Error& e) {
        try {
            write_artifacts(cfg, in, tr, report); // partial artifacts for debugging
        } catch (...) {
        }
        throw StageError("matching", e.what());
    }

    try {
        write_artifacts(cfg, in, tr, report);
    } catch (const Error& e) {
        throw StageError("artifacts", e.what());
    }
    return report;
}

ExperimentReport compare_methods(const PipelineConfig& cfg) {
    ExperimentReport report;
    report.config_echo = config_echo(cfg);

    ResolvedInputs in;
    try {
        in = resolve_inputs(cfg);
    } catch (const Error& e) {
        throw StageError("inputs", e.what());
    }

    std::unique_ptr<features::FeatureExtractor> extractor;
    descriptor::DescriptorNet net;
    try {
        extractor = make_extractor(cfg.extractor);
        net = load_or_seed_net(cfg);
    } catch (const Error& e) {
        throw StageError("setup", e.what());
    }

    TransferOutputs tr;
    try {
        tr = run_transfer_stage(in, cfg, *extractor);
    } catch (const Error& e) {
        throw StageError("transfer", e.what());
    }
    report.quality_table = tr.quality_table;
    report.selected_style = in.style_labels[tr.style_index];
    report.trace_a = tr.trace_a;
    report.trace_b = tr.trace_b;

    const Image raw_a = as_gray(in.sonar_a);
    const Image raw_b = as_gray(in.sonar_b);
    const Image tran_a = as_gray(tr.a_prime);
    const Image tran_b = as_gray(tr.b_prime);

    const match::DescribeFn patch_desc = match::normalized_patch_descriptor;
    const match::DescribeFn tfeat_desc = tfeat_describe(net);

    try {
        using match::DetectorKind;
        report.rows.push_back(run_condition(raw_a, raw_b, "raw+dog", DetectorKind::Dog, "patch",
                                            patch_desc, cfg.match_cfg, cfg.repeats, "raw"));
        report.rows.push_back(run_condition(raw_a, raw_b, "raw+corner", DetectorKind::Corner,
                                            "patch", patch_desc, cfg.match_cfg, cfg.repeats,
                                            "raw"));
        report.rows.push_back(run_condition(tran_a, tran_b, "tran+dog", DetectorKind::Dog, "patch",
                                            patch_desc, cfg.match_cfg, cfg.repeats,
                                            "transferred"));
        report.rows.push_back(run_condition(tran_a, tran_b, "tran+corner", DetectorKind::Corner,
                                            "patch", patch_desc, cfg.match_cfg, cfg.repeats,
                                            "transferred"));
        report.rows.push_back(run_condition(tran_a, tran_b, "ours1", DetectorKind::Dog, "tfeat",
                                            tfeat_desc, cfg.match_cfg, cfg.repeats,
                                            "transferred"));
        report.rows.push_back(run_condition(tran_a, tran_b, "ours2", DetectorKind::Corner, "tfeat",
                                            tfeat_desc, cfg.match_cfg, cfg.repeats,
                                            "transferred"));
        for (auto& row : report.rows)
            row.report.correspondences = map_correspondences(
                row.report.correspondences, {tran_a.height, tran_a.width},
                {raw_a.height, raw_a.width});
    } catch (const Error& e) {
        throw StageError("matching", e.what());
    }

    try {
        write_artifacts(cfg, in, tr, report);
    } catch (const Error& e) {
        throw StageError("artifacts", e.what());
    }
    return report;
}

// ---------------------------------------------------------------------------
// JSON plumbing

synth::ScenarioParams scenario_from_json(const json& j) {
    synth::ScenarioParams p;
    p.seed = j.value("seed", 0ull);
    p.height = j.value("height", 256);
    p.width = j.value("width", 256);
    p.speckle_strength = j.value("speckle_strength", 0.0);
    p.shadow_count = j.value("shadow_count", 0);
    p.brightness_shift = j.value("brightness_shift", 0.0);
    p.blur_sigma = j.value("blur_sigma", 0.0);
    if (j.contains("homography")) {
        const auto& h = j.at("homography");
        if (h.is_string()) {
            p.homography = synth::preset_homography(h.get<std::string>(), p.width, p.height);
        } else if (h.is_array() && h.size() == 9) {
            for (int i = 0; i < 9; ++i) p.homography(i / 3, i % 3) = h[i].get<double>();
        } else {
            throw ConfigError("scenario: homography must be a preset name or 9 numbers");
        }
    }
    return p;
}

json scenario_to_json(const synth::ScenarioParams& p) {
    json j;
    j["seed"] = p.seed;
    j["height"] = p.height;
    j["width"] = p.width;
    j["speckle_strength"] = p.speckle_strength;
    j["shadow_count"] = p.shadow_count;
    j["brightness_shift"] = p.brightness_shift;
    j["blur_sigma"] = p.blur_sigma;
    std::vector<double> h(9);
    for (int i = 0; i < 9; ++i) h[i] = p.homography(i / 3, i % 3);
    j["homography"] = h;
    return j;
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig cfg;
    try {
        cfg.sonar_a = j.value("sonar_a", "");
        cfg.sonar_b = j.value("sonar_b", "");
        if (j.contains("styles")) cfg.styles = j.at("styles").get<std::vector<std::string>>();
        if (j.contains("style_c")) cfg.styles.push_back(j.at("style_c").get<std::string>());
        if (j.contains("scenario")) cfg.scenario = scenario_from_json(j.at("scenario"));
        cfg.style_synth_seed = j.value("style_synth_seed", 99ull);

        if (j.contains("extractor")) {
            const auto& e = j.at("extractor");
            cfg.extractor.type = e.value("type", "tiny");
            cfg.extractor.channels = e.value("channels", 1);
            cfg.extractor.seed = e.value("seed", 7ull);
            cfg.extractor.weights_path = e.value("weights_path", "");
        }
        if (j.contains("transfer")) {
            const auto& t = j.at("transfer");
            cfg.transfer_cfg.alpha = t.value("alpha", 1.0);
            cfg.transfer_cfg.beta = t.value("beta", 1e3);
            cfg.transfer_cfg.num_iterations = t.value("num_iterations", 300);
            cfg.transfer_cfg.step_size = t.value("step_size", 1.0);
            const std::string mode = t.value("mode", "full");
            if (mode == "full")
                cfg.transfer_cfg.mode = transfer::Mode::Full;
            else if (mode == "luminance_only")
                cfg.transfer_cfg.mode = transfer::Mode::LuminanceOnly;
            else
                throw ConfigError("transfer.mode must be 'full' or 'luminance_only'");
            cfg.transfer_cfg.color_prematch = t.value("color_prematch", false);
            cfg.transfer_cfg.seed = t.value("seed", 0ull);
            if (t.contains("content_layers"))
                cfg.transfer_cfg.content_layers =
                    t.at("content_layers").get<std::vector<std::string>>();
            if (t.contains("style_layers"))
                cfg.transfer_cfg.style_layers =
                    t.at("style_layers").get<std::vector<std::string>>();
        }
        if (j.contains("match")) {
            const auto& m = j.at("match");
            cfg.match_cfg.cross_check = m.value("cross_check", true);
            if (m.contains("ratio_test")) cfg.match_cfg.ratio_test = m.at("ratio_test").get<double>();
            cfg.match_cfg.ransac_threshold = m.value("ransac_threshold", 3.0);
            cfg.match_cfg.ransac_max_iters = m.value("ransac_max_iters", 2000);
            cfg.match_cfg.ransac_confidence = m.value("ransac_confidence", 0.995);
            cfg.match_cfg.seed = m.value("seed", 0ull);
            cfg.match_cfg.max_keypoints = m.value("max_keypoints", 500);
            cfg.match_cfg.patch_side = m.value("patch_side", 32);
        }
        const std::string det = j.value("detector", "dog");
        if (det == "dog")
            cfg.detector = match::DetectorKind::Dog;
        else if (det == "corner")
            cfg.detector = match::DetectorKind::Corner;
        else
            throw ConfigError("detector must be 'dog' or 'corner'");
        cfg.descriptor_weights = j.value("descriptor_weights", "");
        cfg.descriptor_seed = j.value("descriptor_seed", 11ull);
        cfg.repeats = j.value("repeats", 10);
        if (cfg.repeats < 1) throw ConfigError("repeats must be >= 1");
        cfg.output_dir = j.value("output_dir", "");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

json match_report_to_json(const ConditionRow& row, const std::string& pair_id) {
    json j;
    j["pair_id"] = pair_id;
    j["detector"] = row.detector;
    j["descriptor"] = row.descriptor;
    j["preprocessing"] = row.preprocessing;
    j["condition"] = row.condition;
    j["seed"] = row.seed;
    j["n_inliers"] = row.report.n_inliers;
    j["n_matches"] = row.report.n_matches;
    j["pocm"] = row.report.pocm;
    j["runtime_seconds_mean"] = row.report.runtime_seconds_mean;
    j["runtime_seconds_runs"] = row.report.runtime_seconds_runs;
    if (row.report.homography) {
        std::vector<double> h(9);
        for (int i = 0; i < 9; ++i) h[i] = (*row.report.homography)(i / 3, i % 3);
        j["homography"] = h;
    } else {
        j["homography"] = nullptr;
    }
    if (!row.report.reason.empty()) j["reason"] = row.report.reason;
    json corrs = json::array();
    for (const auto& c : row.report.correspondences)
        corrs.push_back({{"index_a", c.index_a},
                         {"index_b", c.index_b},
                         {"distance", c.distance},
                         {"inlier", c.inlier}});
    j["correspondences"] = corrs;
    return j;
}

namespace {

// Six significant digits, matching the published table format.
double sig6(double v) {
    if (v == 0.0 || !std::isfinite(v)) return v;
    const double mag = std::pow(10.0, 5 - std::floor(std::log10(std::abs(v))));
    return std::round(v * mag) / mag;
}

} // namespace

json experiment_report_to_json(const ExperimentReport& report) {
    json j;
    j["version"] = report.version;
    j["config"] = report.config_echo;
    j["selected_style"] = report.selected_style;

    json rows = json::array();
    for (const auto& row : report.rows) rows.push_back(match_report_to_json(row, "pair"));
    j["rows"] = rows;

    json qt = json::array();
    for (const auto& q : report.quality_table) {
        qt.push_back({{"style", q.label},
                      {"psnr", sig6(q.indexes.psnr)},
                      {"ssim", sig6(q.indexes.ssim)},
                      {"cosin", sig6(q.indexes.cosin)},
                      {"entropy", sig6(q.indexes.entropy)},
                      {"total_score", q.total_score},
                      {"tie", q.tie}});
    }
    j["quality_table"] = qt;

    auto trace_json = [](const std::vector<transfer::LossTracePoint>& trace) {
        json t = json::array();
        for (const auto& p : trace)
            t.push_back({{"iteration", p.iteration},
                         {"content", p.content},
                         {"style", p.style},
                         {"total", p.total}});
        return t;
    };
    j["loss_trace_a"] = trace_json(report.trace_a);
    j["loss_trace_b"] = trace_json(report.trace_b);
    return j;
}

} // namespace sonarmatch::pipeline
