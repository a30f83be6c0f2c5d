#include "affectrep/cli.hpp"

#include "affectrep/data_io.hpp"
#include "affectrep/error.hpp"
#include "affectrep/metrics.hpp"
#include "affectrep/model.hpp"
#include "affectrep/representations.hpp"
#include "affectrep/text_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace affectrep::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::representation: return kExitRepresentation;
        case ErrorKind::training: return kExitTraining;
        case ErrorKind::reporting: return kExitReporting;
        case ErrorKind::config:
        case ErrorKind::io:
        case ErrorKind::invalid_input: return kExitConfig;
    }
    return kExitUsage;
}

int report_error(const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
}

ExperimentManifest load(const fs::path& path, const CommonOptions& opts) {
    ExperimentManifest m = load_manifest(path);
    if (opts.seed) {
        m.seed = *opts.seed;
        m.model.seed = m.seed;
        m.split.seed = m.seed;
    }
    return m;
}

std::map<std::string, RepresentationSeries> compute_all(const ExperimentManifest& m, RepresentationTag tag) {
    std::map<std::string, RepresentationSeries> out;
    for (const auto& item : m.data) {
        try {
            out.emplace(item.id, compute_representation(item.traces, tag, m.representation.family,
                                                        m.representation.radius));
        } catch (const Error& e) {
            fail(ErrorKind::representation, "item '" + item.id + "', " + e.what());
        }
    }
    return out;
}

TextTable representation_table(const RepresentationSeries& s, const std::string& item_id,
                               const std::string& source_hash) {
    TextTable t;
    t.meta["format_version"] = std::to_string(kFormatVersion);
    t.meta["representation"] = std::string(to_string(s.tag));
    t.meta["family"] = s.tag == RepresentationTag::individual_ordinal ? "gaussian" : std::string(to_string(s.family));
    t.meta["F"] = std::to_string(s.radius);
    t.meta["source_hash"] = source_hash;
    t.meta["item_id"] = item_id;
    t.columns = {"window_index", s.mu_column(), s.sigma_column()};
    const bool shapes = !s.shapes.empty();
    if (shapes) {
        t.columns.push_back("alpha");
        t.columns.push_back("beta");
    }
    for (std::size_t n = 0; n < s.size(); ++n) {
        std::vector<double> row{static_cast<double>(n), s.mu[n], s.sigma[n]};
        if (shapes) {
            row.push_back(s.shapes[n].alpha);
            row.push_back(s.shapes[n].beta);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// --- results and tables ------------------------------------------------------------

constexpr std::array<const char*, 4> kColumns = {"ccc_mu", "ccc_sigma", "sda_mu", "sda_sigma"};
constexpr std::array<const char*, 4> kColumnTitles = {"CCC mu", "CCC sigma", "SDA mu", "SDA sigma"};

struct Row {
    std::string tag;
    std::size_t folds = 0;
    std::array<std::optional<MeanStd>, 4> cells;
};

std::string format_cell(const std::optional<MeanStd>& cell, std::size_t folds, bool bold) {
    if (!cell) {
        return "-";
    }
    char buf[64];
    if (folds > 1) {
        std::snprintf(buf, sizeof buf, "%.3f±%.3f", cell->mean, cell->std);
    } else {
        std::snprintf(buf, sizeof buf, "%.3f", cell->mean);
    }
    return bold ? "**" + std::string(buf) + "**" : std::string(buf);
}

int tag_order(const std::string& tag) {
    if (tag == "I") return 0;
    if (tag == "O_I") return 1;
    if (tag == "O_G") return 2;
    return 3;
}

// Rows I, O_I, O_G by columns CCC mu, CCC sigma, SDA mu, SDA sigma; column maxima in **bold**.
std::string render_rows(std::vector<Row> rows) {
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return tag_order(a.tag) < tag_order(b.tag); });
    std::array<double, 4> best;
    best.fill(-std::numeric_limits<double>::infinity());
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < 4; ++c) {
            if (r.cells[c]) {
                best[c] = std::max(best[c], r.cells[c]->mean);
            }
        }
    }
    std::vector<std::array<std::string, 5>> text;
    text.push_back({"Representation", kColumnTitles[0], kColumnTitles[1], kColumnTitles[2], kColumnTitles[3]});
    for (const auto& r : rows) {
        std::array<std::string, 5> line;
        line[0] = r.tag;
        for (std::size_t c = 0; c < 4; ++c) {
            const bool bold = rows.size() > 1 && r.cells[c] && r.cells[c]->mean == best[c];
            line[c + 1] = format_cell(r.cells[c], r.folds, bold);
        }
        text.push_back(line);
    }
    // "±" is two bytes but one column wide.
    auto width = [](const std::string& s) {
        std::size_t w = 0;
        for (unsigned char ch : s) {
            w += (ch & 0xC0) != 0x80;
        }
        return w;
    };
    std::array<std::size_t, 5> widths{};
    for (const auto& line : text) {
        for (std::size_t c = 0; c < 5; ++c) {
            widths[c] = std::max(widths[c], width(line[c]));
        }
    }
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        for (std::size_t c = 0; c < 5; ++c) {
            out += (c ? " | " : "") + text[i][c] + std::string(widths[c] - width(text[i][c]), ' ');
        }
        while (!out.empty() && out.back() == ' ') {
            out.pop_back();
        }
        out += "\n";
        if (i == 0) {
            for (std::size_t c = 0; c < 5; ++c) {
                out += (c ? "-|-" : "") + std::string(widths[c], '-');
            }
            out += "\n";
        }
    }
    return out;
}

Row row_from_result(const ojson& result) {
    Row r;
    r.tag = result.at("tag").get<std::string>();
    r.folds = result.at("folds").size();
    const auto& summary = result.at("summary");
    for (std::size_t c = 0; c < 4; ++c) {
        if (summary.contains(kColumns[c])) {
            r.cells[c] = MeanStd{summary.at(kColumns[c]).at("mean").get<double>(),
                                 summary.at(kColumns[c]).at("std").get<double>()};
        }
    }
    return r;
}

struct ChannelOutcome {
    ChannelScore score;
    std::size_t best_epoch = 0;
    std::size_t skipped = 0;
};

struct FoldOutcome {
    bool ok = false;
    std::string error;
    std::map<std::string, ChannelOutcome> channels;
};

Sequence make_sequence(const LoadedItem& item, const RepresentationSeries& rep, const std::string& channel) {
    return {item.features.matrix, channel == "mu" ? rep.mu : rep.sigma};
}

}  // namespace

int cmd_synth(const fs::path& config, const fs::path& out, const CommonOptions& opts) {
    try {
        std::string text = read_file(config);
        if (opts.seed) {
            auto doc = ojson::parse(text);
            doc["seed"] = *opts.seed;
            text = doc.dump(2) + "\n";
        }
        const auto manifest = write_synth_dataset(text, out);
        std::cout << "wrote " << manifest.string() << "\n";
        return kExitOk;
    } catch (const Error& e) {
        return report_error(e);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: synth config: " << e.what() << "\n";
        return kExitConfig;
    }
}

int cmd_represent(const fs::path& manifest_path, const std::string& tag_text, const fs::path& out,
                  const CommonOptions& opts) {
    try {
        const RepresentationTag tag = parse_tag(tag_text);
        const ExperimentManifest m = load(manifest_path, opts);
        const auto reps = compute_all(m, tag);

        std::string summary = "# format_version: " + std::to_string(kFormatVersion) +
                              "\n# representation: " + std::string(to_string(tag)) +
                              "\n# source_hash: " + m.dataset_hash + "\nitem_id,mean_" + reps.begin()->second.mu_column() +
                              ",mean_" + reps.begin()->second.sigma_column() + "\n";
        for (const auto& item : m.data) {
            const auto& s = reps.at(item.id);
            write_file_atomic(out / (item.id + ".csv"), render_table(representation_table(s, item.id, m.dataset_hash)));
            summary += item.id + "," + format_real(mean_of(s.mu)) + "," + format_real(mean_of(s.sigma)) + "\n";
        }
        write_file_atomic(out / "summary.csv", summary);
        std::cout << "wrote " << reps.size() << " " << to_string(tag) << " tables to " << out.string() << "\n";
        return kExitOk;
    } catch (const Error& e) {
        return report_error(e);
    }
}

int cmd_train_eval(const fs::path& manifest_path, const std::string& tag_text, const std::string& target,
                   const fs::path& out, const CommonOptions& opts) {
    std::vector<std::string> channels;
    if (target == "mu" || target == "sigma") {
        channels = {target};
    } else if (target == "both") {
        channels = {"mu", "sigma"};
    } else {
        std::cerr << "error: --target must be mu, sigma or both\n";
        return kExitConfig;
    }

    RepresentationTag tag;
    ExperimentManifest m;
    std::map<std::string, RepresentationSeries> reps;
    std::vector<Fold> folds;
    try {
        tag = parse_tag(tag_text);
        m = load(manifest_path, opts);
        reps = compute_all(m, tag);
        std::vector<GroupedItem> grouped;
        for (const auto& it : m.data) {
            grouped.push_back({it.id, it.group});
        }
        folds = make_splits(grouped, m.split);
    } catch (const Error& e) {
        return report_error(e);
    }
    write_file_atomic(out / "folds.json", render_folds(folds));

    std::vector<FoldOutcome> outcomes(folds.size());
    auto run_fold = [&](std::size_t f) {
        FoldOutcome& result = outcomes[f];
        const Fold& fold = folds[f];
        const fs::path dir = out / ("fold_" + std::string(f < 10 ? "0" : "") + std::to_string(f));
        try {
            std::map<std::string, std::vector<std::vector<double>>> predictions;
            for (std::size_t c = 0; c < channels.size(); ++c) {
                const std::string& ch = channels[c];
                std::vector<Sequence> train_set;
                std::vector<Sequence> val_set;
                for (const auto& id : fold.train) {
                    train_set.push_back(make_sequence(m.item(id), reps.at(id), ch));
                }
                for (const auto& id : fold.validation) {
                    val_set.push_back(make_sequence(m.item(id), reps.at(id), ch));
                }
                ModelConfig mc = m.model;
                mc.seed = m.seed * 1000003ULL + f * 2ULL + c;
                const TrainedModel model = train(train_set, val_set, mc, m.train);
                save_checkpoint(model, dir / ("model_" + ch + ".ckpt"));

                std::vector<std::vector<double>> truth;
                for (const auto& s : val_set) {
                    predictions[ch].push_back(predict(model, s.features));
                    truth.push_back(s.targets);
                }
                result.channels[ch] = {score_sequences(predictions[ch], truth), model.best_epoch,
                                       model.skipped_segments};
            }

            for (std::size_t v = 0; v < fold.validation.size(); ++v) {
                const auto& id = fold.validation[v];
                const auto& rep = reps.at(id);
                TextTable t;
                t.meta["format_version"] = std::to_string(kFormatVersion);
                t.meta["representation"] = std::string(to_string(tag));
                t.meta["item_id"] = id;
                t.columns = {"window_index"};
                for (const auto& ch : channels) {
                    t.columns.push_back("true_" + (ch == "mu" ? rep.mu_column() : rep.sigma_column()));
                    t.columns.push_back("pred_" + (ch == "mu" ? rep.mu_column() : rep.sigma_column()));
                }
                for (std::size_t n = 0; n < rep.size(); ++n) {
                    std::vector<double> row{static_cast<double>(n)};
                    for (const auto& ch : channels) {
                        row.push_back(ch == "mu" ? rep.mu[n] : rep.sigma[n]);
                        row.push_back(predictions[ch][v][n]);
                    }
                    t.rows.push_back(std::move(row));
                }
                write_file_atomic(dir / "predictions" / (id + ".csv"), render_table(t));
            }

            std::string kv;
            for (const auto& [ch, o] : result.channels) {
                kv += "ccc_" + ch + "=" + format_real(o.score.ccc) + "\n";
                kv += "sda_" + ch + "=" + format_real(o.score.sda) + "\n";
            }
            write_file_atomic(dir / "metrics.txt", kv);
            result.ok = true;
        } catch (const Error& e) {
            result.error = e.what();
        }
    };

    const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(folds.size())));
    if (jobs == 1) {
        for (std::size_t f = 0; f < folds.size(); ++f) {
            run_fold(f);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (unsigned j = 0; j < jobs; ++j) {
            workers.emplace_back([&] {
                for (std::size_t f = next++; f < folds.size(); f = next++) {
                    run_fold(f);
                }
            });
        }
        for (auto& w : workers) {
            w.join();
        }
    }

    ojson result;
    result["format_version"] = kFormatVersion;
    result["tag"] = std::string(to_string(tag));
    result["targets"] = channels;
    result["dataset_hash"] = m.dataset_hash;
    result["manifest_name"] = m.name;
    result["seed"] = m.seed;
    result["family"] = std::string(to_string(m.representation.family));
    result["F"] = m.representation.radius;
    result["hidden_dim"] = m.model.hidden_dim;
    result["max_epochs"] = m.train.max_epochs;
    result["segment_length"] = m.train.segment_length;
    result["batch_size"] = m.train.batch_size;
    result["ccc_aggregation"] = "concatenated_validation_sequences";
    result["sda_aggregation"] = "per_sequence_mean";
    result["folds"] = ojson::array();
    std::map<std::string, std::vector<double>> columns;
    bool failed = false;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto& o = outcomes[f];
        ojson fj;
        fj["fold"] = f;
        fj["validation_groups"] = folds[f].validation_groups;
        if (!o.ok) {
            failed = true;
            fj["error"] = o.error;
            std::cerr << "error: fold " << f << ": " << o.error << "\n";
        }
        for (const auto& [ch, c] : o.channels) {
            fj[ch] = {{"ccc", c.score.ccc}, {"sda", c.score.sda}, {"best_epoch", c.best_epoch},
                      {"skipped_segments", c.skipped}};
            if (o.ok) {
                columns["ccc_" + ch].push_back(c.score.ccc);
                columns["sda_" + ch].push_back(c.score.sda);
            }
        }
        result["folds"].push_back(fj);
    }
    ojson summary = ojson::object();
    for (const char* key : kColumns) {
        if (columns.count(key) && !columns.at(key).empty()) {
            const MeanStd ms = mean_std(columns.at(key));
            summary[key] = {{"mean", ms.mean}, {"std", ms.std}};
        }
    }
    result["summary"] = summary;
    result["complete"] = !failed;
    write_file_atomic(out / "result.json", result.dump(2) + "\n");
    if (failed) {
        return kExitTraining;
    }
    const std::string table = render_rows({row_from_result(result)});
    write_file_atomic(out / "report.txt", table);
    std::cout << table;
    return kExitOk;
}

int cmd_report(const std::vector<fs::path>& result_dirs, const fs::path& out) {
    try {
        if (result_dirs.empty()) {
            fail(ErrorKind::reporting, "no result directories given");
        }
        std::map<std::string, Row> rows;
        std::optional<std::string> hash;
        ojson record;
        record["format_version"] = kFormatVersion;
        record["runs"] = ojson::array();
        for (const auto& dir : result_dirs) {
            ojson result;
            try {
                result = ojson::parse(read_file(dir / "result.json"));
            } catch (const nlohmann::json::exception& e) {
                fail(ErrorKind::reporting, (dir / "result.json").string() + ": " + e.what());
            } catch (const Error& e) {
                fail(ErrorKind::reporting, e.what());
            }
            const std::string h = result.at("dataset_hash");
            if (hash && *hash != h) {
                fail(ErrorKind::reporting, "dataset hash of " + dir.string() + " differs from earlier runs");
            }
            hash = h;
            if (!result.value("complete", false)) {
                fail(ErrorKind::reporting, dir.string() + " holds an incomplete run");
            }
            const Row incoming = row_from_result(result);
            auto [it, fresh] = rows.emplace(incoming.tag, incoming);
            if (!fresh) {
                Row& merged = it->second;
                if (merged.folds != incoming.folds) {
                    fail(ErrorKind::reporting, "runs for " + incoming.tag + " disagree on the fold count");
                }
                for (std::size_t c = 0; c < 4; ++c) {
                    if (incoming.cells[c]) {
                        if (merged.cells[c]) {
                            fail(ErrorKind::reporting, "two runs report " + std::string(kColumns[c]) + " for " +
                                                           incoming.tag);
                        }
                        merged.cells[c] = incoming.cells[c];
                    }
                }
            }
            record["runs"].push_back({{"tag", incoming.tag}, {"targets", result.at("targets")}, {"dir", dir.filename().string()}});
        }

        std::vector<Row> ordered;
        for (auto& [_, r] : rows) {
            ordered.push_back(r);
        }
        const std::string table = render_rows(ordered);
        record["dataset_hash"] = *hash;
        record["rows"] = ojson::array();
        std::sort(ordered.begin(), ordered.end(),
                  [](const Row& a, const Row& b) { return tag_order(a.tag) < tag_order(b.tag); });
        for (const auto& r : ordered) {
            ojson rj{{"representation", r.tag}, {"folds", r.folds}};
            for (std::size_t c = 0; c < 4; ++c) {
                rj[kColumns[c]] = r.cells[c] ? ojson{{"mean", r.cells[c]->mean}, {"std", r.cells[c]->std}}
                                             : ojson(nullptr);
            }
            record["rows"].push_back(rj);
        }
        if (!out.empty()) {
            write_file_atomic(out / "report.txt", table);
            write_file_atomic(out / "report.json", record.dump(2) + "\n");
        }
        std::cout << table;
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitReporting;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed result record: " << e.what() << "\n";
        return kExitReporting;
    }
}

int run(int argc, char** argv) {
    CLI::App app{"Ambiguity-aware interval and ordinal emotion representations"};
    app.require_subcommand(1);

    CommonOptions opts;
    std::optional<unsigned long long> seed;
    fs::path config, manifest, out;
    std::string tag, target = "both";
    std::vector<fs::path> results;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-annotator dataset and manifest");
    synth->add_option("--config", config, "Synthetic dataset config (JSON)")->required();
    synth->add_option("--out", out, "Output directory")->required();
    synth->add_option("--seed", seed, "Override the config seed");

    auto* represent = app.add_subcommand("represent", "Write one representation table per item");
    represent->add_option("--manifest", manifest, "Experiment manifest")->required();
    represent->add_option("--tag", tag, "I, O_I or O_G")->required();
    represent->add_option("--out", out, "Output directory")->required();
    represent->add_option("--seed", seed, "Override the manifest seed");

    auto* train_eval = app.add_subcommand("train-eval", "Cross-validated training and evaluation");
    train_eval->add_option("--manifest", manifest, "Experiment manifest")->required();
    train_eval->add_option("--tag", tag, "I, O_I or O_G")->required();
    train_eval->add_option("--target", target, "mu, sigma or both")->default_val("both");
    train_eval->add_option("--out", out, "Output directory")->required();
    train_eval->add_option("--seed", seed, "Override the manifest seed");
    train_eval->add_option("--jobs", opts.jobs, "Folds trained concurrently")->default_val(1);

    auto* report = app.add_subcommand("report", "Merge train-eval results into one table");
    report->add_option("results", results, "train-eval output directories")->required();
    report->add_option("--out", out, "Output directory for report.txt/report.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    opts.seed = seed;

    if (synth->parsed()) return cmd_synth(config, out, opts);
    if (represent->parsed()) return cmd_represent(manifest, tag, out, opts);
    if (train_eval->parsed()) return cmd_train_eval(manifest, tag, target, out, opts);
    if (report->parsed()) return cmd_report(results, out);
    return kExitUsage;
}

}  // namespace affectrep::cli
