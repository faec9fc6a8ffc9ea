// Copyright 2026 The conrec Authors.
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

#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>

#include "test_support.hpp"

namespace conrec {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::fixture;
using testing::read_file;
using testing::run_command;
using testing::shell_quote;
using testing::TempDir;

std::string cli(const std::string& args) { return shell_quote(CONREC_CLI) + " " + args; }

std::string e2e(const TempDir& out) {
  return "-c " + shell_quote(fixture("e2e/config.json").string()) + " --output-dir " +
         shell_quote(out.path().string());
}

TEST(CliTest, ValidateShippedConfigs) {
  for (const char* name : {"configs/example.json", "configs/offline.json"}) {
    const auto r = run_command(cli("validate-config -c " +
                                   shell_quote(testing::source_path(name).string())));
    EXPECT_EQ(r.exit_code, 0) << name;
    EXPECT_NE(r.out.find("config ok"), std::string::npos);
  }
}

TEST(CliTest, InvalidConfigExitsWithJsonError) {
  TempDir out;
  const auto r = run_command(cli("--error-json validate-config " + e2e(out) +
                                 " --tau1 0.5 --tau2 0.7 --set retrieval.extra=1"));
  EXPECT_EQ(r.exit_code, 2);
  const json j = json::parse(r.out);
  EXPECT_EQ(j["error"]["kind"], "config");
  ASSERT_EQ(j["error"]["problems"].size(), 2u);
  EXPECT_NE(j["error"]["message"].get<std::string>().find("retrieval.extra"), std::string::npos);
}

TEST(CliTest, RuntimeErrorExitsNonzero) {
  TempDir out;
  testing::write_file(out / "broken.obo", "[Term]\nname: no id\n");
  const auto r = run_command(cli("--error-json build-index " + e2e(out) + " --ontology " +
                                 shell_quote((out / "broken.obo").string()) +
                                 " --set ontology.root_id=null"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(json::parse(r.out)["error"]["kind"], "parse");
}

TEST(CliTest, BuildIndexTwiceDetectsSameContent) {
  TempDir out;
  const auto first = run_command(cli("build-index " + e2e(out)));
  ASSERT_EQ(first.exit_code, 0);
  const json a = json::parse(first.out);
  EXPECT_FALSE(a["unchanged"].get<bool>());
  EXPECT_EQ(a["entries"], 11);  // 5 names + 6 synonyms
  EXPECT_GE(a["duration_seconds"].get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(a["index_path"].get<std::string>()));

  const auto second = run_command(cli("build-index " + e2e(out)));
  ASSERT_EQ(second.exit_code, 0);
  const json b = json::parse(second.out);
  EXPECT_TRUE(b["unchanged"].get<bool>());
  EXPECT_EQ(a["content_hash"], b["content_hash"]);
  EXPECT_EQ(json::parse(read_file(out / "build_index_manifest.json")), b);
}

TEST(CliTest, AnnotateThenEvaluateAgree) {
  TempDir out;
  const std::string gold = shell_quote(fixture("e2e/gold.tsv").string());
  const auto ann = run_command(cli("annotate " + e2e(out) + " --gold " + gold));
  ASSERT_EQ(ann.exit_code, 0);
  EXPECT_EQ(read_file(out / "annotations.tsv"),
            read_file(fixture("e2e/expected_annotations.tsv")));
  const json from_run = json::parse(read_file(out / "evaluation.json"));

  const auto ev = run_command(cli("evaluate " + e2e(out) + " --json --per-document -a " +
                                  shell_quote((out / "annotations.tsv").string()) +
                                  " --gold-file " + gold));
  ASSERT_EQ(ev.exit_code, 0);
  const json from_eval = json::parse(ev.out);
  EXPECT_EQ(from_eval["mention"], from_run["mention"]);
  EXPECT_EQ(from_eval["document"], from_run["document"]);
  EXPECT_EQ(from_eval["mention"]["tp"], 4);
}

TEST(CliTest, EvaluateWithoutGoldIsConfigError) {
  TempDir out;
  testing::write_file(out / "a.tsv", "# doc_id\tstart\tend\tconcept_id\tprovenance\tscore\n");
  const auto r = run_command(cli("evaluate " + e2e(out) + " -a " +
                                 shell_quote((out / "a.tsv").string())));
  EXPECT_EQ(r.exit_code, 2);
}

TEST(CliTest, UsageErrors) {
  EXPECT_NE(run_command(cli("")).exit_code, 0);
  EXPECT_NE(run_command(cli("annotate")).exit_code, 0);
  EXPECT_NE(run_command(cli("frobnicate")).exit_code, 0);
}

}  // namespace
}  // namespace conrec
