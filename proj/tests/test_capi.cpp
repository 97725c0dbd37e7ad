// Exercises the shared-library C surface and the installed CLI binary
// (path provided via the FAIRFPR_CLI environment variable by ctest).
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "fairfpr.h"
#include "fairfpr/textio.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("fairfpr-" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string path(const std::string& rel) const { return (dir / rel).string(); }
};

const char* kSpec = R"({
  "seed": 21, "raw_dim": 16,
  "groups": [
    {"group": "a", "identities": 4, "samples_per_identity": 4,
     "intra_spread": 0.35, "center_concentration": 0.3},
    {"group": "b", "identities": 4, "samples_per_identity": 4,
     "intra_spread": 0.35, "center_concentration": 0.9}
  ]
})";

const char* kTrain = R"({
  "loss": {"kind": "fpr-penalty-cosface", "gamma_u": 5e-2},
  "epochs": 3, "batch_size": 8, "learning_rate": 0.1, "lr_schedule": [],
  "seed": 3, "encoder": {"hidden_dims": [16], "embed_dim": 8}
})";

int run_cli(const std::string& args) {
  const char* cli = std::getenv("FAIRFPR_CLI");
  REQUIRE_MESSAGE(cli != nullptr, "FAIRFPR_CLI must point at the CLI binary");
  const std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("C API: dataset lifecycle through opaque handles") {
  ff_dataset* d = nullptr;
  REQUIRE(ff_dataset_generate(kSpec, &d) == FF_OK);
  CHECK(ff_dataset_rows(d) == 32);
  CHECK(ff_dataset_classes(d) == 8);

  Scratch s("capi-data");
  CHECK(ff_dataset_save(d, s.path("ds").c_str()) == FF_OK);
  ff_dataset* reloaded = nullptr;
  REQUIRE(ff_dataset_load(s.path("ds").c_str(), &reloaded) == FF_OK);
  CHECK(ff_dataset_rows(reloaded) == 32);

  ff_dataset* train_part = nullptr;
  ff_dataset* eval_part = nullptr;
  REQUIRE(ff_dataset_split(d, 1, 5, &train_part, &eval_part) == FF_OK);
  CHECK(ff_dataset_rows(train_part) == 24);
  CHECK(ff_dataset_rows(eval_part) == 8);
  CHECK(ff_dataset_classes(train_part) == 6);

  ff_dataset_free(d);
  ff_dataset_free(reloaded);
  ff_dataset_free(train_part);
  ff_dataset_free(eval_part);
}

TEST_CASE("C API: error codes and last-error messages") {
  ff_dataset* d = nullptr;
  CHECK(ff_dataset_generate(nullptr, &d) == FF_ERR_CONFIG);
  CHECK(ff_dataset_load("/nonexistent/base", &d) == FF_ERR_CONFIG);
  CHECK(std::string(ff_last_error()).size() > 0);
  CHECK(ff_dataset_generate("{ not json", &d) == FF_ERR_CONFIG);

  REQUIRE(ff_dataset_generate(kSpec, &d) == FF_OK);
  CHECK(std::string(ff_last_error()).empty());  // success clears the message
  ff_dataset* t = nullptr;
  ff_dataset* e = nullptr;
  CHECK(ff_dataset_split(d, 4, 5, &t, &e) == FF_ERR_CONFIG);  // holdout too large

  ff_model* m = nullptr;
  CHECK(ff_train(d, R"({"loss": {"kind": "unheard-of"}})", &m) == FF_ERR_CONFIG);
  ff_dataset_free(d);
}

TEST_CASE("C API: train + evaluate in memory") {
  ff_dataset* d = nullptr;
  REQUIRE(ff_dataset_generate(kSpec, &d) == FF_OK);
  ff_model* m = nullptr;
  REQUIRE(ff_train(d, kTrain, &m) == FF_OK);
  CHECK(ff_model_embed_dim(m) == 8);

  char* report_text = nullptr;
  const double gammas[] = {0.1, 0.2};
  REQUIRE(ff_evaluate_json(m, d, gammas, 2, &report_text) == FF_OK);
  const json report = json::parse(report_text);
  CHECK(report.at("levels").size() == 2);
  CHECK(report.at("groups").size() == 2);
  ff_string_free(report_text);

  Scratch s("capi-model");
  REQUIRE(ff_model_save(m, s.path("ckpt").c_str()) == FF_OK);
  ff_model* loaded = nullptr;
  REQUIRE(ff_model_load(s.path("ckpt").c_str(), &loaded) == FF_OK);
  CHECK(ff_model_embed_dim(loaded) == 8);
  ff_model_free(loaded);
  ff_model_free(m);
  ff_dataset_free(d);
}

TEST_CASE("CLI: happy path and exit codes") {
  Scratch s("cli");
  fairfpr::write_text_file(s.path("spec.json"), kSpec);
  json spec = json::parse(std::string(kSpec));
  spec["holdout_identities_per_group"] = 2;
  fairfpr::write_text_file(s.path("spec-holdout.json"), spec.dump());
  fairfpr::write_text_file(s.path("train.json"), kTrain);

  CHECK(run_cli("generate --config " + s.path("spec-holdout.json") + " --out " + s.path("data")) ==
        0);
  CHECK(run_cli("train --config " + s.path("train.json") + " --dataset " + s.path("data") +
                "/train --out " + s.path("run")) == 0);
  CHECK(run_cli("evaluate --checkpoint " + s.path("run") + "/checkpoint --dataset " +
                s.path("data") + "/eval --gammas 1e-1,2e-1 --out " + s.path("eval")) == 0);
  CHECK(fs::exists(s.path("eval") + "/report.json"));

  // config error -> 2
  fairfpr::write_text_file(s.path("bad.json"), "{ nope");
  CHECK(run_cli("generate --config " + s.path("bad.json") + " --out " + s.path("x")) == 2);

  // sweep with one failing child -> 5
  json sweep = json::parse(std::string(kTrain));
  sweep["eval_dataset"] = s.path("data") + "/eval";
  sweep["eval_gammas"] = {0.1};
  sweep["eval_max_pairs_per_group"] = 200;
  fairfpr::write_text_file(s.path("sweep.json"), sweep.dump());
  CHECK(run_cli("sweep --config " + s.path("sweep.json") + " --dataset " + s.path("data") +
                "/train --axis p --values 1,0.25 --out " + s.path("sw")) == 5);
  CHECK(fs::exists(s.path("sw") + "/summary.csv"));

  // divergence -> 3
  json blowup = json::parse(std::string(kTrain));
  blowup["learning_rate"] = 1e200;
  blowup["epochs"] = 3;
  fairfpr::write_text_file(s.path("blowup.json"), blowup.dump());
  CHECK(run_cli("train --config " + s.path("blowup.json") + " --dataset " + s.path("data") +
                "/train --out " + s.path("divrun")) == 3);

  // incompatible checkpoint/dataset dims -> 4
  json small = json::parse(std::string(kSpec));
  small["raw_dim"] = 8;
  fairfpr::write_text_file(s.path("small.json"), small.dump());
  CHECK(run_cli("generate --config " + s.path("small.json") + " --out " + s.path("small")) == 0);
  CHECK(run_cli("evaluate --checkpoint " + s.path("run") + "/checkpoint --dataset " +
                s.path("small") + "/dataset --gammas 1e-1 --out " + s.path("eval2")) == 4);
}
