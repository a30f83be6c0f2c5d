#include "affectrep/cli.hpp"
#include "affectrep/text_io.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

using namespace affectrep;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch() {
    static const fs::path root = [] {
        fs::path p = fs::temp_directory_path() / "affectrep_cli_test";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

int invoke(const std::string& args) {
    const std::string cmd = std::string(AFFECTREP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Small enough that a full train-eval takes a second or two.
const char* kSmallConfig = R"({
  "items": 8, "groups": 4, "annotators": 3, "windows": 10, "feature_dim": 4, "seed": 3,
  "experiment": {
    "model": {"hidden_dim": 8, "layers": 2},
    "train": {"max_epochs": 5, "segment_length": 5, "batch_size": 4},
    "split": {"mode": "k_fold_grouped", "k": 2}
  }
})";

fs::path small_dataset() {
    static const fs::path manifest = [] {
        const fs::path cfg = scratch() / "small.json";
        write_file_atomic(cfg, kSmallConfig);
        REQUIRE(invoke("synth --config " + cfg.string() + " --out " + (scratch() / "small").string()) == 0);
        return scratch() / "small" / "manifest.json";
    }();
    return manifest;
}

}  // namespace

TEST_CASE("synth is reproducible and validates its config") {
    const fs::path cfg = scratch() / "synth.json";
    write_file_atomic(cfg, R"({"items": 4, "groups": 2, "windows": 6, "feature_dim": 2})");
    REQUIRE(invoke("synth --config " + cfg.string() + " --seed 11 --out " + (scratch() / "s1").string()) == 0);
    REQUIRE(invoke("synth --config " + cfg.string() + " --seed 11 --out " + (scratch() / "s2").string()) == 0);
    for (const auto& entry : fs::recursive_directory_iterator(scratch() / "s1")) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), scratch() / "s1");
        CHECK_MESSAGE(read_file(entry.path()) == read_file(scratch() / "s2" / rel), rel.string());
    }
    CHECK(json::parse(read_file(scratch() / "s1" / "manifest.json"))["seed"] == 11);

    write_file_atomic(cfg, R"({"items": 4, "noise_std": -1})");
    CHECK(invoke("synth --config " + cfg.string() + " --out " + (scratch() / "s3").string()) == cli::kExitConfig);
    write_file_atomic(cfg, R"({"itemz": 4})");
    CHECK(invoke("synth --config " + cfg.string() + " --out " + (scratch() / "s3").string()) == cli::kExitConfig);
    CHECK(invoke("synth --out x") == cli::kExitUsage);
    CHECK(invoke("bogus") == cli::kExitUsage);
}

TEST_CASE("represent writes one table per item") {
    const fs::path cfg = scratch() / "flat.json";
    write_file_atomic(cfg, R"({"items": 2, "groups": 2, "windows": 5, "feature_dim": 2,
        "trend_amplitude": 0, "offset_std": 0, "gain_std": 0, "noise_std": 0})");
    REQUIRE(invoke("synth --config " + cfg.string() + " --out " + (scratch() / "flat").string()) == 0);
    const fs::path manifest = scratch() / "flat" / "manifest.json";

    REQUIRE(invoke("represent --manifest " + manifest.string() + " --tag I --out " +
                      (scratch() / "rep_I").string()) == 0);
    const auto table = parse_table(read_file(scratch() / "rep_I" / "item_00.csv"), "item_00.csv");
    CHECK(table.meta.at("representation") == "I");
    CHECK(table.rows.size() == 5);
    for (double s : table.column("sigma")) CHECK(s == 0.0);
    CHECK(fs::exists(scratch() / "rep_I" / "summary.csv"));

    REQUIRE(invoke("represent --manifest " + manifest.string() + " --tag O_G --out " +
                      (scratch() / "rep_OG").string()) == 0);
    const auto og = parse_table(read_file(scratch() / "rep_OG" / "item_01.csv"), "item_01.csv");
    CHECK(og.column_index("dmu") == 1);
    CHECK(og.column_index("dsigma") == 2);

    CHECK(invoke("represent --manifest " + manifest.string() + " --tag X --out " +
                    (scratch() / "rep_X").string()) == cli::kExitConfig);
    CHECK(invoke("represent --manifest " + (scratch() / "nope.json").string() + " --tag I --out " +
                    (scratch() / "rep_X").string()) == cli::kExitConfig);
}

TEST_CASE("train-eval and report") {
    const fs::path manifest = small_dataset();
    for (const char* tag : {"I", "O_I", "O_G"}) {
        REQUIRE(invoke(std::string("train-eval --manifest ") + manifest.string() + " --tag " + tag + " --out " +
                          (scratch() / (std::string("run_") + tag)).string()) == 0);
    }
    const auto result = json::parse(read_file(scratch() / "run_I" / "result.json"));
    CHECK(result["complete"] == true);
    CHECK(result["folds"].size() == 2);
    CHECK(result["summary"].contains("ccc_mu"));
    CHECK(result["summary"].contains("sda_sigma"));
    CHECK(fs::exists(scratch() / "run_I" / "fold_00" / "model_mu.ckpt"));
    CHECK(fs::exists(scratch() / "run_I" / "fold_01" / "predictions"));

    const fs::path rep = scratch() / "report";
    REQUIRE(invoke("report " + (scratch() / "run_I").string() + " " + (scratch() / "run_O_I").string() + " " +
                      (scratch() / "run_O_G").string() + " --out " + rep.string()) == 0);
    const std::string text = read_file(rep / "report.txt");
    CHECK(text.find("O_I") != std::string::npos);
    CHECK(text.find("±") != std::string::npos);
    CHECK(text.find("**") != std::string::npos);
    CHECK(json::parse(read_file(rep / "report.json"))["rows"].size() == 3);

    SUBCASE("same seed, same bytes") {
        REQUIRE(invoke("train-eval --manifest " + manifest.string() + " --tag I --jobs 2 --out " +
                          (scratch() / "run_I_again").string()) == 0);
        CHECK(read_file(scratch() / "run_I" / "result.json") == read_file(scratch() / "run_I_again" / "result.json"));
    }
    SUBCASE("dataset hash mismatch") {
        const fs::path other = scratch() / "run_other";
        fs::create_directories(other);
        auto doc = json::parse(read_file(scratch() / "run_O_I" / "result.json"));
        doc["dataset_hash"] = std::string(64, '0');
        write_file_atomic(other / "result.json", doc.dump());
        CHECK(invoke("report " + (scratch() / "run_I").string() + " " + other.string()) == cli::kExitReporting);
    }
    SUBCASE("incomplete run") {
        const fs::path other = scratch() / "run_partial";
        fs::create_directories(other);
        auto doc = json::parse(read_file(scratch() / "run_O_G" / "result.json"));
        doc["complete"] = false;
        write_file_atomic(other / "result.json", doc.dump());
        CHECK(invoke("report " + other.string()) == cli::kExitReporting);
    }
    SUBCASE("duplicate column") {
        CHECK(invoke("report " + (scratch() / "run_I").string() + " " + (scratch() / "run_I").string()) ==
              cli::kExitReporting);
    }
}

TEST_CASE("separate mu and sigma runs merge into one row") {
    const fs::path manifest = small_dataset();
    REQUIRE(invoke("train-eval --manifest " + manifest.string() + " --tag O_G --target mu --out " +
                      (scratch() / "og_mu").string()) == 0);
    REQUIRE(invoke("train-eval --manifest " + manifest.string() + " --tag O_G --target sigma --out " +
                      (scratch() / "og_sigma").string()) == 0);
    const fs::path rep = scratch() / "og_report";
    REQUIRE(invoke("report " + (scratch() / "og_mu").string() + " " + (scratch() / "og_sigma").string() +
                      " --out " + rep.string()) == 0);
    const auto rows = json::parse(read_file(rep / "report.json"))["rows"];
    REQUIRE(rows.size() == 1);
    CHECK(!rows[0]["ccc_mu"].is_null());
    CHECK(!rows[0]["ccc_sigma"].is_null());
}

TEST_CASE("fixed train/dev split reports a single fold") {
    const fs::path manifest = small_dataset();
    auto doc = json::parse(read_file(manifest));
    doc["split"] = {{"mode", "fixed_train_dev"}};
    for (std::size_t i = 0; i < doc["items"].size(); ++i) doc["items"][i]["group"] = i < 6 ? "train" : "dev";
    const fs::path fixed = manifest.parent_path() / "fixed.json";
    write_file_atomic(fixed, doc.dump(2));
    REQUIRE(invoke("train-eval --manifest " + fixed.string() + " --tag I --target mu --out " +
                      (scratch() / "fixed").string()) == 0);
    const std::string text = read_file(scratch() / "fixed" / "report.txt");
    CHECK(text.find("±") == std::string::npos);
    CHECK(json::parse(read_file(scratch() / "fixed" / "result.json"))["folds"].size() == 1);
}

TEST_CASE("run() reports usage errors") {
    std::string prog = "affectrep";
    char* argv[] = {prog.data()};
    CHECK(cli::run(1, argv) == cli::kExitUsage);
}
