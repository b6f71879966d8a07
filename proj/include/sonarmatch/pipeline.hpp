#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sonarmatch/descriptor.hpp"
#include "sonarmatch/detect_match.hpp"
#include "sonarmatch/features.hpp"
#include "sonarmatch/quality.hpp"
#include "sonarmatch/synthdata.hpp"
#include "sonarmatch/transfer.hpp"

namespace sonarmatch::pipeline {

inline constexpr const char* kVersion = "0.1.0";

struct ExtractorConfig {
    std::string type = "tiny"; // "tiny" | "vgg19"
    int channels = 1;
    uint64_t seed = 7;
    std::string weights_path; // optional local weight file
};

struct PipelineConfig {
    // Input images: either explicit paths or a synthetic scenario.
    std::string sonar_a, sonar_b;
    std::vector<std::string> styles;              // one or more candidate style paths
    std::optional<synth::ScenarioParams> scenario; // generates sonar_a/sonar_b when set
    uint64_t style_synth_seed = 99;                // used when styles is empty

    ExtractorConfig extractor;
    transfer::TransferConfig transfer_cfg;
    match::MatchConfig match_cfg;
    match::DetectorKind detector = match::DetectorKind::Dog;
    std::string descriptor_weights; // empty -> seeded untrained net
    uint64_t descriptor_seed = 11;
    int repeats = 10;
    std::string output_dir;
};

struct ConditionRow {
    std::string condition;     // e.g. "raw+dog", "tran+corner", "ours1"
    std::string detector;      // "dog" | "corner"
    std::string descriptor;    // "patch" | "tfeat"
    std::string preprocessing; // "raw" | "transferred"
    uint64_t seed = 0;
    match::MatchReport report;
};

struct QualityRow {
    std::string label;
    quality::QualityIndexes indexes;
    int total_score = 0;
    bool tie = false;
};

struct ExperimentReport {
    std::vector<ConditionRow> rows;
    std::vector<QualityRow> quality_table;
    std::string selected_style; // path or "synthetic"; how it was chosen is logged
    std::vector<transfer::LossTracePoint> trace_a, trace_b;
    nlohmann::json config_echo;
    std::string version = kVersion;
};

/// Identity coordinate mapping back to the raw images; transfer preserves
/// dimensions, so this only validates the contract.
std::vector<match::Correspondence> map_correspondences(
    const std::vector<match::Correspondence>& corrs, std::pair<int, int> generated_dims,
    std::pair<int, int> raw_dims);

std::unique_ptr<features::FeatureExtractor> make_extractor(const ExtractorConfig& cfg);

/// Full Algorithm-1 run: transfer A and B toward the selected style, match
/// the generated pair with the learned descriptor, map correspondences back.
ExperimentReport usme(const PipelineConfig& cfg);

/// Six-condition comparison grid: {raw, transferred} x {dog, corner} with the
/// normalized-patch baseline descriptor, plus ours1/ours2 (transferred + TFeat).
ExperimentReport compare_methods(const PipelineConfig& cfg);

// JSON (de)serialization of configs and reports.
PipelineConfig config_from_json(const nlohmann::json& j);
synth::ScenarioParams scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const synth::ScenarioParams& p);
nlohmann::json match_report_to_json(const ConditionRow& row, const std::string& pair_id);
nlohmann::json experiment_report_to_json(const ExperimentReport& report);

/// Resolve the pipeline inputs (load or synthesize images).
struct ResolvedInputs {
    Image sonar_a, sonar_b;
    std::vector<Image> styles;
    std::vector<std::string> style_labels;
};
ResolvedInputs resolve_inputs(const PipelineConfig& cfg);

} // namespace sonarmatch::pipeline
