#include "affectrep/data_io.hpp"

#include "affectrep/error.hpp"
#include "affectrep/text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

namespace affectrep {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// --- tables ---------------------------------------------------------------------

std::vector<AnnotationTrace> load_trace_table(const fs::path& path) {
    const TextTable t = parse_table(read_file(path), path.string());
    if (t.columns.size() < 2 || t.columns.front() != "time_s") {
        fail(ErrorKind::io, path.string() + ": expected header 'time_s,<annotator>...'");
    }
    if (t.rows.size() < 2) {
        fail(ErrorKind::io, path.string() + ": need at least two rows to infer the sample period");
    }
    const double period = t.rows[1][0] - t.rows[0][0];
    if (!(period > 0.0)) {
        fail(ErrorKind::io, path.string() + ": time column must increase");
    }
    for (std::size_t r = 1; r < t.rows.size(); ++r) {
        const double step = t.rows[r][0] - t.rows[r - 1][0];
        if (std::abs(step - period) > 1e-9 * period) {
            fail(ErrorKind::io, path.string() + ": non-uniform timestamp at data row " + std::to_string(r + 1) +
                                    " (time " + format_real(t.rows[r][0]) + ")");
        }
    }
    std::vector<AnnotationTrace> traces;
    for (std::size_t c = 1; c < t.columns.size(); ++c) {
        AnnotationTrace trace{t.columns[c], {}, period};
        trace.values.reserve(t.rows.size());
        for (const auto& row : t.rows) {
            trace.values.push_back(row[c]);
        }
        trace.validate();
        traces.push_back(std::move(trace));
    }
    return traces;
}

void write_trace_table(const fs::path& path, const std::vector<AnnotationTrace>& traces) {
    require(!traces.empty(), "write_trace_table: no traces");
    TextTable t;
    t.meta["format_version"] = std::to_string(kFormatVersion);
    t.columns.push_back("time_s");
    const std::size_t n = traces.front().values.size();
    for (const auto& tr : traces) {
        require(tr.values.size() == n, "write_trace_table: ragged traces");
        t.columns.push_back(tr.annotator_id);
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row{static_cast<double>(i) * traces.front().sample_period};
        for (const auto& tr : traces) {
            row.push_back(tr.values[i]);
        }
        t.rows.push_back(std::move(row));
    }
    write_file_atomic(path, render_table(t));
}

FeatureTable load_feature_table(const fs::path& path) {
    const TextTable t = parse_table(read_file(path), path.string());
    if (t.columns.size() < 2 || t.columns.front() != "window_index") {
        fail(ErrorKind::io, path.string() + ": expected header 'window_index,<feature>...'");
    }
    FeatureTable f;
    f.item_id = t.meta.count("item_id") ? t.meta.at("item_id") : path.stem().string();
    f.feature_name = t.meta.count("feature_name") ? t.meta.at("feature_name") : "";
    f.matrix.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.columns.size() - 1));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (std::size_t c = 1; c < t.columns.size(); ++c) {
            const double v = t.rows[r][c];
            if (!std::isfinite(v)) {
                fail(ErrorKind::io, path.string() + ": non-finite feature at row " + std::to_string(r + 1));
            }
            f.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1)) = v;
        }
    }
    return f;
}

void write_feature_table(const fs::path& path, const FeatureTable& table) {
    TextTable t;
    t.meta["format_version"] = std::to_string(kFormatVersion);
    t.meta["item_id"] = table.item_id;
    t.meta["feature_name"] = table.feature_name;
    t.columns.push_back("window_index");
    for (Eigen::Index c = 0; c < table.matrix.cols(); ++c) {
        t.columns.push_back("f" + std::to_string(c));
    }
    for (Eigen::Index r = 0; r < table.matrix.rows(); ++r) {
        std::vector<double> row{static_cast<double>(r)};
        for (Eigen::Index c = 0; c < table.matrix.cols(); ++c) {
            row.push_back(table.matrix(r, c));
        }
        t.rows.push_back(std::move(row));
    }
    write_file_atomic(path, render_table(t));
}

// --- splits ---------------------------------------------------------------------

std::vector<Fold> make_splits(const std::vector<GroupedItem>& items, const SplitSpec& spec) {
    require(!items.empty(), "make_splits: no items");
    if (spec.mode == SplitMode::fixed_train_dev) {
        Fold f;
        for (const auto& it : items) {
            (it.group == "dev" ? f.validation : f.train).push_back(it.id);
        }
        f.validation_groups = {"dev"};
        if (f.train.empty() || f.validation.empty()) {
            fail(ErrorKind::config, "fixed_train_dev split needs items in group 'dev' and in other groups");
        }
        return {f};
    }

    std::vector<std::string> groups;
    for (const auto& it : items) {
        if (std::find(groups.begin(), groups.end(), it.group) == groups.end()) {
            groups.push_back(it.group);
        }
    }
    if (spec.k < 2) {
        fail(ErrorKind::config, "grouped k-fold needs k >= 2");
    }
    if (spec.k > groups.size()) {
        fail(ErrorKind::config, "k = " + std::to_string(spec.k) + " exceeds the group count " +
                                    std::to_string(groups.size()));
    }
    std::sort(groups.begin(), groups.end());
    std::mt19937_64 rng(spec.seed);
    std::shuffle(groups.begin(), groups.end(), rng);

    std::vector<Fold> folds(spec.k);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        folds[g % spec.k].validation_groups.push_back(groups[g]);
    }
    for (auto& f : folds) {
        std::sort(f.validation_groups.begin(), f.validation_groups.end());
        for (const auto& it : items) {
            const bool held = std::binary_search(f.validation_groups.begin(), f.validation_groups.end(), it.group);
            (held ? f.validation : f.train).push_back(it.id);
        }
    }
    return folds;
}

std::string render_folds(const std::vector<Fold>& folds) {
    ojson doc;
    doc["format_version"] = kFormatVersion;
    doc["folds"] = ojson::array();
    for (const auto& f : folds) {
        doc["folds"].push_back(
            {{"validation_groups", f.validation_groups}, {"train", f.train}, {"validation", f.validation}});
    }
    return doc.dump(2) + "\n";
}

// --- preprocessing --------------------------------------------------------------

std::size_t PreprocessConfig::samples_per_window() const {
    return samples_per_span(window_length, native_period);
}

std::size_t PreprocessConfig::delay_samples() const { return samples_per_span(delay_offset, native_period); }

void PreprocessConfig::validate() const {
    if (!(std::isfinite(native_period) && native_period > 0.0)) {
        fail(ErrorKind::config, "preprocess.native_period must be positive");
    }
    if (!(std::isfinite(window_length) && window_length >= native_period)) {
        fail(ErrorKind::config, "preprocess.window_length must be at least one native period");
    }
    if (!(std::isfinite(delay_offset) && delay_offset >= 0.0)) {
        fail(ErrorKind::config, "preprocess.delay_offset must be non-negative");
    }
    if (keep_first && *keep_first == 0) {
        fail(ErrorKind::config, "preprocess.keep_first must be positive");
    }
    if (bounds && !(bounds->hi > bounds->lo)) {
        fail(ErrorKind::config, "preprocess.bounds must satisfy hi > lo");
    }
}

PreprocessConfig recola_profile() {
    PreprocessConfig p;
    p.native_period = 0.04;
    p.window_length = 3.0;
    p.delay_offset = 4.0;
    p.bounds = Bounds{-1.0, 1.0};
    return p;
}

PreprocessConfig gamevibe_profile() {
    PreprocessConfig p;
    p.native_period = 0.25;
    p.window_length = 3.0;
    p.delay_offset = 0.0;
    p.keep_first = 19;
    return p;
}

TraceSet preprocess(const std::vector<AnnotationTrace>& raw, const PreprocessConfig& cfg) {
    cfg.validate();
    std::vector<AnnotationTrace> windowed;
    windowed.reserve(raw.size());
    for (const auto& t : raw) {
        if (std::abs(t.sample_period - cfg.native_period) > 1e-9 * cfg.native_period) {
            fail(ErrorKind::config, "trace '" + t.annotator_id + "' period " + format_real(t.sample_period) +
                                        " differs from the configured native period");
        }
        const auto shifted = shift_delay(t.values, cfg.native_period, cfg.delay_offset);
        windowed.push_back({t.annotator_id, window_aggregate(shifted, cfg.native_period, cfg.window_length),
                            cfg.window_length});
    }
    return align(std::move(windowed), cfg.keep_first, cfg.bounds);
}

// --- synthetic generator ----------------------------------------------------------

void SynthConfig::validate() const {
    auto bad = [](const std::string& field, const std::string& why) {
        fail(ErrorKind::config, "synth config field '" + field + "': " + why);
    };
    if (items == 0) bad("items", "must be positive");
    if (groups == 0 || groups > items) bad("groups", "must lie in [1, items]");
    if (annotators < 2) bad("annotators", "need at least 2");
    if (windows < 2) bad("windows", "need at least 2");
    if (!(native_period > 0.0)) bad("native_period", "must be positive");
    if (!(window_length >= native_period)) bad("window_length", "must be at least native_period");
    if (feature_dim == 0) bad("feature_dim", "must be positive");
    if (trend_components == 0) bad("trend_components", "must be positive");
    if (!(trend_amplitude >= 0.0)) bad("trend_amplitude", "must be >= 0");
    if (!(offset_std >= 0.0)) bad("offset_std", "must be >= 0");
    if (!(gain_std >= 0.0)) bad("gain_std", "must be >= 0");
    if (!(noise_std >= 0.0)) bad("noise_std", "must be >= 0");
    if (!(feature_noise_std >= 0.0)) bad("feature_noise_std", "must be >= 0");
    if (lag_windows >= windows) bad("lag_windows", "must be smaller than windows");
    if (bounds && !(bounds->hi > bounds->lo)) bad("bounds", "must satisfy hi > lo");
}

std::vector<SynthItem> synth_generate(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    const std::size_t spw = samples_per_span(cfg.window_length, cfg.native_period);
    const std::size_t samples = cfg.windows * spw;
    const std::size_t lag = cfg.lag_windows * spw;
    const double duration = static_cast<double>(samples) * cfg.native_period;

    // Feature map shared by all items so that a model can generalize across them.
    Eigen::VectorXd load(static_cast<Eigen::Index>(cfg.feature_dim));
    Eigen::VectorXd bias(static_cast<Eigen::Index>(cfg.feature_dim));
    for (Eigen::Index d = 0; d < load.size(); ++d) {
        load(d) = normal(rng);
        bias(d) = 0.1 * normal(rng);
    }

    PreprocessConfig pre;
    pre.native_period = cfg.native_period;
    pre.window_length = cfg.window_length;
    pre.bounds = cfg.bounds;

    const std::size_t per_group = (cfg.items + cfg.groups - 1) / cfg.groups;
    std::vector<SynthItem> out;
    out.reserve(cfg.items);
    for (std::size_t item = 0; item < cfg.items; ++item) {
        // Latent trend: a seeded sum of slow sinusoids, sampled over the lag as well.
        std::vector<double> amp(cfg.trend_components);
        std::vector<double> freq(cfg.trend_components);
        std::vector<double> phase(cfg.trend_components);
        double amp_total = 0.0;
        for (std::size_t c = 0; c < cfg.trend_components; ++c) {
            amp[c] = 0.5 + 0.5 * uniform(rng);
            freq[c] = 0.5 + 2.5 * uniform(rng);  // cycles per item
            phase[c] = 2.0 * std::numbers::pi * uniform(rng);
            amp_total += amp[c];
        }
        std::vector<double> latent(samples + lag);
        for (std::size_t s = 0; s < latent.size(); ++s) {
            const double t = (static_cast<double>(s) - static_cast<double>(lag)) * cfg.native_period;
            double v = 0.0;
            for (std::size_t c = 0; c < cfg.trend_components; ++c) {
                v += amp[c] * std::sin(2.0 * std::numbers::pi * freq[c] * t / duration + phase[c]);
            }
            latent[s] = cfg.trend_amplitude * v / amp_total;
        }

        std::vector<double> sign(cfg.annotators, 1.0);
        if (cfg.scenario == Scenario::inconsistent_trend) {
            std::vector<std::size_t> idx(cfg.annotators);
            std::iota(idx.begin(), idx.end(), 0);
            std::shuffle(idx.begin(), idx.end(), rng);
            for (std::size_t k = 0; k < cfg.annotators / 2; ++k) {
                sign[idx[k]] = -1.0;
            }
        }
        const double shared_offset = cfg.offset_std * normal(rng);

        SynthItem it;
        it.id = "item_" + std::string(item < 10 ? "0" : "") + std::to_string(item);
        it.group = "group_" + std::string(item / per_group < 10 ? "0" : "") + std::to_string(item / per_group);
        for (std::size_t m = 0; m < cfg.annotators; ++m) {
            const double gain = 1.0 + cfg.gain_std * normal(rng);
            const double offset =
                cfg.scenario == Scenario::consistent_trend ? cfg.offset_std * normal(rng) : shared_offset;
            AnnotationTrace tr{"a" + std::to_string(m + 1), std::vector<double>(samples), cfg.native_period};
            for (std::size_t s = 0; s < samples; ++s) {
                // Annotators respond `lag` samples after the stimulus.
                double v = sign[m] * gain * latent[s] + offset + cfg.noise_std * normal(rng);
                if (cfg.bounds) {
                    v = std::clamp(v, cfg.bounds->lo, cfg.bounds->hi);
                }
                tr.values[s] = v;
            }
            it.raw.push_back(std::move(tr));
        }
        it.windows = preprocess(it.raw, pre);

        // Stimulus-side latent (no annotation lag), window means.
        const std::span<const double> stimulus(latent.data() + lag, samples);
        it.latent = window_aggregate(stimulus, cfg.native_period, cfg.window_length);

        it.features.item_id = it.id;
        it.features.feature_name = "synthetic_affine";
        it.features.matrix.resize(static_cast<Eigen::Index>(cfg.windows), static_cast<Eigen::Index>(cfg.feature_dim));
        for (std::size_t n = 0; n < cfg.windows; ++n) {
            for (Eigen::Index d = 0; d < load.size(); ++d) {
                it.features.matrix(static_cast<Eigen::Index>(n), d) =
                    load(d) * it.latent[n] + bias(d) + cfg.feature_noise_std * normal(rng);
            }
        }
        out.push_back(std::move(it));
    }
    return out;
}

// --- manifests --------------------------------------------------------------------

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

std::optional<Bounds> parse_bounds(const json& j) {
    if (!j.contains("bounds") || j.at("bounds").is_null()) {
        return std::nullopt;
    }
    const auto& b = j.at("bounds");
    if (!b.is_array() || b.size() != 2) {
        fail(ErrorKind::config, "bounds must be null or [lo, hi]");
    }
    return Bounds{b[0].get<double>(), b[1].get<double>()};
}

ojson bounds_json(const std::optional<Bounds>& b) {
    return b ? ojson::array({b->lo, b->hi}) : ojson(nullptr);
}

SplitMode parse_split_mode(const std::string& s) {
    if (s == "fixed_train_dev") return SplitMode::fixed_train_dev;
    if (s == "k_fold_grouped") return SplitMode::k_fold_grouped;
    fail(ErrorKind::config, "unknown split mode '" + s + "'");
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) {
            fail(ErrorKind::config, where + ": unknown field '" + key + "'");
        }
    }
}

}  // namespace

const LoadedItem& ExperimentManifest::item(const std::string& id) const {
    for (const auto& d : data) {
        if (d.id == id) {
            return d;
        }
    }
    fail(ErrorKind::config, "manifest has no item '" + id + "'");
}

ExperimentManifest load_manifest(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::config, path.string() + ": " + e.what());
    }

    ExperimentManifest m;
    try {
        check_keys(doc,
                   {"format_version", "name", "seed", "preprocess", "representation", "model", "train", "split",
                    "items"},
                   "manifest");
        if (doc.value("format_version", 0) != kFormatVersion) {
            fail(ErrorKind::config, "manifest: unsupported format_version");
        }
        m.source = path;
        m.name = doc.value("name", path.stem().string());
        m.seed = doc.at("seed").get<std::uint64_t>();

        const auto& pre = doc.at("preprocess");
        check_keys(pre, {"profile", "native_period", "window_length", "delay_offset", "keep_first", "bounds"},
                   "manifest.preprocess");
        // A named profile supplies defaults; explicit keys override it.
        const std::string profile = get_or<std::string>(pre, "profile", "");
        if (profile == "recola") {
            m.preprocess = recola_profile();
        } else if (profile == "gamevibe") {
            m.preprocess = gamevibe_profile();
        } else if (!profile.empty()) {
            fail(ErrorKind::config, "manifest.preprocess.profile: unknown profile '" + profile + "'");
        } else if (!pre.contains("native_period") || !pre.contains("window_length")) {
            fail(ErrorKind::config, "manifest.preprocess needs native_period and window_length (or a profile)");
        }
        m.preprocess.native_period = get_or(pre, "native_period", m.preprocess.native_period);
        m.preprocess.window_length = get_or(pre, "window_length", m.preprocess.window_length);
        m.preprocess.delay_offset = get_or(pre, "delay_offset", m.preprocess.delay_offset);
        if (pre.contains("keep_first")) {
            m.preprocess.keep_first.reset();
            if (!pre.at("keep_first").is_null()) {
                m.preprocess.keep_first = pre.at("keep_first").get<std::size_t>();
            }
        }
        if (pre.contains("bounds")) {
            m.preprocess.bounds = parse_bounds(pre);
        }
        m.preprocess.validate();

        const auto& rep = doc.at("representation");
        check_keys(rep, {"family", "F"}, "manifest.representation");
        m.representation.family = parse_family(rep.at("family").get<std::string>());
        m.representation.radius = get_or<std::size_t>(rep, "F", 1);
        if (m.representation.family == Family::beta_mapped && !m.preprocess.bounds) {
            fail(ErrorKind::config, "manifest: beta family requires preprocess.bounds");
        }

        const json model = doc.value("model", json::object());
        check_keys(model, {"hidden_dim", "layers"}, "manifest.model");
        m.model.hidden_dim = get_or<std::size_t>(model, "hidden_dim", 64);
        m.model.layers = get_or<std::size_t>(model, "layers", 2);
        m.model.seed = m.seed;

        const json tr = doc.value("train", json::object());
        check_keys(tr,
                   {"learning_rate", "weight_decay", "max_epochs", "segment_length", "batch_size", "scale_targets",
                    "target_limit"},
                   "manifest.train");
        m.train.learning_rate = get_or(tr, "learning_rate", 1e-3);
        m.train.weight_decay = get_or(tr, "weight_decay", 1e-4);
        m.train.max_epochs = get_or<std::size_t>(tr, "max_epochs", 100);
        m.train.segment_length = get_or<std::size_t>(tr, "segment_length", 19);
        m.train.batch_size = get_or<std::size_t>(tr, "batch_size", 8);
        m.train.scale_targets = get_or(tr, "scale_targets", true);
        m.train.target_limit = get_or(tr, "target_limit", 0.9);
        m.train.validate();

        const auto& sp = doc.at("split");
        check_keys(sp, {"mode", "k"}, "manifest.split");
        m.split.mode = parse_split_mode(sp.at("mode").get<std::string>());
        m.split.k = get_or<std::size_t>(sp, "k", m.split.mode == SplitMode::fixed_train_dev ? 1 : 10);
        m.split.seed = m.seed;

        for (const auto& it : doc.at("items")) {
            check_keys(it, {"id", "group", "traces", "features"}, "manifest.items[]");
            ManifestItem item;
            item.id = it.at("id");
            item.group = it.at("group");
            item.traces = path.parent_path() / it.at("traces").get<std::string>();
            item.features = path.parent_path() / it.at("features").get<std::string>();
            m.items.push_back(std::move(item));
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::config, path.string() + ": " + e.what());
    }
    if (m.items.empty()) {
        fail(ErrorKind::config, "manifest lists no items");
    }

    std::string hash_input;
    std::optional<Eigen::Index> dim;
    for (const auto& it : m.items) {
        if (!fs::exists(it.traces)) {
            fail(ErrorKind::config, "item '" + it.id + "': missing trace file " + it.traces.string());
        }
        if (!fs::exists(it.features)) {
            fail(ErrorKind::config, "item '" + it.id + "': missing feature file " + it.features.string());
        }
        LoadedItem d{it.id, it.group, {}, {}};
        try {
            d.traces = preprocess(load_trace_table(it.traces), m.preprocess);
            d.features = load_feature_table(it.features);
        } catch (const Error& e) {
            fail(ErrorKind::config, "item '" + it.id + "': " + e.what());
        }
        const auto n = static_cast<Eigen::Index>(d.traces.window_count);
        const bool may_trim = m.preprocess.keep_first.has_value() || m.preprocess.delay_offset > 0.0;
        if (d.features.matrix.rows() < n || (!may_trim && d.features.matrix.rows() != n)) {
            fail(ErrorKind::config, "item '" + it.id + "': features have " +
                                        std::to_string(d.features.matrix.rows()) + " rows but traces have " +
                                        std::to_string(n) + " windows after alignment");
        }
        d.features.matrix.conservativeResize(n, Eigen::NoChange);
        if (dim && *dim != d.features.matrix.cols()) {
            fail(ErrorKind::config, "item '" + it.id + "': feature dimension differs from other items");
        }
        dim = d.features.matrix.cols();
        hash_input += it.id + "\n" + it.group + "\n" + sha256_hex(read_file(it.traces)) + "\n" +
                      sha256_hex(read_file(it.features)) + "\n";
        m.data.push_back(std::move(d));
    }
    m.model.input_dim = static_cast<std::size_t>(*dim);
    m.model.validate();
    m.dataset_hash = sha256_hex(hash_input);
    return m;
}

std::string manifest_json(const ExperimentManifest& m) {
    ojson doc;
    doc["format_version"] = kFormatVersion;
    doc["name"] = m.name;
    doc["seed"] = m.seed;
    ojson pre;
    pre["native_period"] = m.preprocess.native_period;
    pre["window_length"] = m.preprocess.window_length;
    pre["delay_offset"] = m.preprocess.delay_offset;
    pre["keep_first"] = m.preprocess.keep_first ? ojson(*m.preprocess.keep_first) : ojson(nullptr);
    pre["bounds"] = bounds_json(m.preprocess.bounds);
    doc["preprocess"] = pre;
    doc["representation"] = {{"family", std::string(to_string(m.representation.family))},
                             {"F", m.representation.radius}};
    doc["model"] = {{"hidden_dim", m.model.hidden_dim}, {"layers", m.model.layers}};
    doc["train"] = {{"learning_rate", m.train.learning_rate}, {"weight_decay", m.train.weight_decay},
                    {"max_epochs", m.train.max_epochs},       {"segment_length", m.train.segment_length},
                    {"batch_size", m.train.batch_size},       {"scale_targets", m.train.scale_targets},
                    {"target_limit", m.train.target_limit}};
    doc["split"] = {{"mode", m.split.mode == SplitMode::fixed_train_dev ? "fixed_train_dev" : "k_fold_grouped"},
                    {"k", m.split.k}};
    doc["items"] = ojson::array();
    const fs::path base = m.source.parent_path();
    for (const auto& it : m.items) {
        doc["items"].push_back({{"id", it.id},
                                {"group", it.group},
                                {"traces", it.traces.lexically_relative(base).generic_string()},
                                {"features", it.features.lexically_relative(base).generic_string()}});
    }
    return doc.dump(2) + "\n";
}

SynthConfig synth_config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::config, std::string("synth config: ") + e.what());
    }
    check_keys(doc,
               {"format_version", "items", "groups", "annotators", "windows", "native_period", "window_length",
                "feature_dim", "trend_components", "trend_amplitude", "offset_std", "gain_std", "noise_std",
                "feature_noise_std", "lag_windows", "scenario", "bounds", "seed", "experiment"},
               "synth config");
    SynthConfig c;
    auto field = [&](const char* key, auto& target) {
        if (!doc.contains(key)) {
            return;
        }
        try {
            target = doc.at(key).get<std::remove_reference_t<decltype(target)>>();
        } catch (const json::exception&) {
            fail(ErrorKind::config, std::string("synth config field '") + key + "': wrong type");
        }
    };
    field("items", c.items);
    field("groups", c.groups);
    field("annotators", c.annotators);
    field("windows", c.windows);
    field("native_period", c.native_period);
    field("window_length", c.window_length);
    field("feature_dim", c.feature_dim);
    field("trend_components", c.trend_components);
    field("trend_amplitude", c.trend_amplitude);
    field("offset_std", c.offset_std);
    field("gain_std", c.gain_std);
    field("noise_std", c.noise_std);
    field("feature_noise_std", c.feature_noise_std);
    field("lag_windows", c.lag_windows);
    field("seed", c.seed);
    if (doc.contains("scenario")) {
        const auto s = doc.at("scenario").get<std::string>();
        if (s == "consistent_trend") {
            c.scenario = Scenario::consistent_trend;
        } else if (s == "inconsistent_trend") {
            c.scenario = Scenario::inconsistent_trend;
        } else {
            fail(ErrorKind::config, "synth config field 'scenario': unknown value '" + s + "'");
        }
    }
    c.bounds = parse_bounds(doc);
    c.validate();
    return c;
}

fs::path write_synth_dataset(const std::string& config_text, const fs::path& out_dir) {
    const SynthConfig cfg = synth_config_from_json(config_text);
    const ojson doc = ojson::parse(config_text);
    const ojson exp = doc.value("experiment", ojson::object());
    const auto items = synth_generate(cfg);

    ojson manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["name"] = exp.value("name", std::string("synthetic"));
    manifest["seed"] = cfg.seed;
    manifest["preprocess"] = {{"native_period", cfg.native_period},
                              {"window_length", cfg.window_length},
                              {"delay_offset", 0.0},
                              {"keep_first", nullptr},
                              {"bounds", bounds_json(cfg.bounds)}};
    manifest["representation"] =
        exp.value("representation", ojson{{"family", cfg.bounds ? "beta" : "gaussian"}, {"F", 1}});
    manifest["model"] = exp.value("model", ojson{{"hidden_dim", 64}, {"layers", 2}});
    manifest["train"] = exp.value("train", ojson::object());
    manifest["split"] = exp.value("split", ojson{{"mode", "k_fold_grouped"}, {"k", std::min<std::size_t>(10, cfg.groups)}});
    manifest["items"] = ojson::array();

    std::vector<GroupedItem> grouped;
    for (const auto& it : items) {
        const std::string traces = "traces/" + it.id + ".csv";
        const std::string features = "features/" + it.id + ".csv";
        write_trace_table(out_dir / traces, it.raw);
        write_feature_table(out_dir / features, it.features);
        TextTable latent;
        latent.meta["format_version"] = std::to_string(kFormatVersion);
        latent.meta["item_id"] = it.id;
        latent.columns = {"window_index", "latent"};
        for (std::size_t n = 0; n < it.latent.size(); ++n) {
            latent.rows.push_back({static_cast<double>(n), it.latent[n]});
        }
        write_file_atomic(out_dir / "latent" / (it.id + ".csv"), render_table(latent));
        manifest["items"].push_back({{"id", it.id}, {"group", it.group}, {"traces", traces}, {"features", features}});
        grouped.push_back({it.id, it.group});
    }

    const fs::path manifest_path = out_dir / "manifest.json";
    write_file_atomic(manifest_path, manifest.dump(2) + "\n");
    write_file_atomic(out_dir / "synth_config.json", config_text);

    // Validates the whole dataset through the same path every command uses.
    const auto loaded = load_manifest(manifest_path);
    std::vector<Fold> folds = make_splits(grouped, loaded.split);
    write_file_atomic(out_dir / "folds.json", render_folds(folds));
    return manifest_path;
}

}  // namespace affectrep
