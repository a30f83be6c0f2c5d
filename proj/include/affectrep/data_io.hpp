#pragma once

#include "affectrep/model.hpp"
#include "affectrep/representations.hpp"
#include "affectrep/trace_core.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace affectrep {

// --- trace and feature tables ------------------------------------------------

/// Reads `time_s,<annotator>...` columns. The sample period is inferred from
/// the time column, which must be uniform to 1e-9 relative.
std::vector<AnnotationTrace> load_trace_table(const std::filesystem::path& path);
void write_trace_table(const std::filesystem::path& path, const std::vector<AnnotationTrace>& traces);

/// Precomputed per-window stimulus features (N windows x D dims).
struct FeatureTable {
    std::string item_id;
    std::string feature_name;
    FeatureMatrix matrix;
};

FeatureTable load_feature_table(const std::filesystem::path& path);
void write_feature_table(const std::filesystem::path& path, const FeatureTable& table);

// --- splits --------------------------------------------------------------------

enum class SplitMode { fixed_train_dev, k_fold_grouped };

struct SplitSpec {
    SplitMode mode = SplitMode::k_fold_grouped;
    std::size_t k = 10;
    std::uint64_t seed = 0;
};

struct GroupedItem {
    std::string id;
    std::string group;
};

struct Fold {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> validation_groups;
};

/// fixed_train_dev: items in group "dev" validate, every other item trains.
/// k_fold_grouped: groups are shuffled with the seed and dealt round-robin
/// into k validation folds, so a group never straddles train and validation.
std::vector<Fold> make_splits(const std::vector<GroupedItem>& items, const SplitSpec& spec);

std::string render_folds(const std::vector<Fold>& folds);

// --- preprocessing profile -----------------------------------------------------

struct PreprocessConfig {
    double native_period = 0.25;
    double window_length = 3.0;
    double delay_offset = 0.0;
    std::optional<std::size_t> keep_first;
    std::optional<Bounds> bounds;

    std::size_t samples_per_window() const;
    std::size_t delay_samples() const;
    void validate() const;
};

/// 40 ms ratings in [-1, 1], 3 s windows, 4 s annotation delay.
PreprocessConfig recola_profile();
/// 250 ms unbounded ratings, 3 s windows, first 19 windows kept.
PreprocessConfig gamevibe_profile();

/// Delay shift, window means and alignment of raw native-rate traces.
TraceSet preprocess(const std::vector<AnnotationTrace>& raw, const PreprocessConfig& cfg);

// --- synthetic annotators ------------------------------------------------------

enum class Scenario { consistent_trend, inconsistent_trend };

struct SynthConfig {
    std::size_t items = 30;
    std::size_t groups = 10;
    std::size_t annotators = 5;
    std::size_t windows = 19;
    double native_period = 0.25;
    double window_length = 3.0;
    std::size_t feature_dim = 16;
    std::size_t trend_components = 3;
    double trend_amplitude = 0.5;
    double offset_std = 0.3;
    double gain_std = 0.1;
    double noise_std = 0.05;
    double feature_noise_std = 0.05;
    std::size_t lag_windows = 0;
    Scenario scenario = Scenario::consistent_trend;
    std::optional<Bounds> bounds;
    std::uint64_t seed = 0;

    /// Throws a config Error naming the offending field.
    void validate() const;
};

struct SynthItem {
    std::string id;
    std::string group;
    std::vector<AnnotationTrace> raw;  // native sample period
    TraceSet windows;                  // window means
    FeatureTable features;
    std::vector<double> latent;         // window-level shared trend (oracle)
};

std::vector<SynthItem> synth_generate(const SynthConfig& cfg);

// --- manifests -----------------------------------------------------------------

struct RepresentationConfig {
    Family family = Family::gaussian;
    std::size_t radius = 1;
};

struct ManifestItem {
    std::string id;
    std::string group;
    std::filesystem::path traces;
    std::filesystem::path features;
};

struct LoadedItem {
    std::string id;
    std::string group;
    TraceSet traces;
    FeatureTable features;
};

struct ExperimentManifest {
    std::filesystem::path source;
    std::string name;
    std::uint64_t seed = 0;
    PreprocessConfig preprocess;
    RepresentationConfig representation;
    ModelConfig model;
    TrainConfig train;
    SplitSpec split;
    std::vector<ManifestItem> items;
    std::vector<LoadedItem> data;
    std::string dataset_hash;

    const LoadedItem& item(const std::string& id) const;
};

/// Parses, resolves paths relative to the manifest, loads and preprocesses
/// every item and checks that feature rows match the aligned window count.
ExperimentManifest load_manifest(const std::filesystem::path& path);

/// The manifest document (without loaded data) as JSON text.
std::string manifest_json(const ExperimentManifest& manifest);

SynthConfig synth_config_from_json(const std::string& text);

/// Writes traces, features, latents, the fold listing and manifest.json under
/// `out_dir`; returns the manifest path. Manifest settings come from the
/// optional "experiment" block of the synth config document.
std::filesystem::path write_synth_dataset(const std::string& config_text, const std::filesystem::path& out_dir);

}  // namespace affectrep
