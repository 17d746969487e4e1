#include "appforge/devagent/actions.hpp"
#include "appforge/devagent/agent.hpp"
#include "appforge/devagent/selection.hpp"
#include "appforge/util/fs.hpp"

#include "../support/fake_model.hpp"
#include "../support/fixtures.hpp"

#include <doctest.h>

using namespace appforge;
using namespace appforge::devagent;
using appforge::testing::FakeModel;
using appforge::testing::Stage;
using appforge::testing::TempDir;
using workspace::ActionKind;
using workspace::ApplyStatus;

namespace {

workspace::Workspace basic_ws(const TempDir& dir) {
  const workspace::TemplateStore store(appforge::testing::store_dir("basic"));
  return workspace::Workspace::init_from_template(store.get("static-site"), dir / "ws");
}

DevTask task(const std::string& text, int round = 0) { return {text, round, std::nullopt}; }

}  // namespace

TEST_SUITE("devagent") {

TEST_CASE("full-replace actions are cleaned") {
  const auto p = parse_actions(
      "Sure!\n<Action type=\"file\" filePath=\"index.html\">\n```html\n&lt;p&gt;hi&lt;/p&gt;\n```\n</Action>\nDone.");
  REQUIRE(p.actions.size() == 1);
  CHECK(p.actions[0].kind == ActionKind::full_replace);
  CHECK(p.actions[0].path == "index.html");
  CHECK(p.actions[0].content == "<p>hi</p>\n");
  CHECK(p.diagnostics.empty());
}

TEST_CASE("diff and create actions") {
  const auto p = parse_actions(
      "<Action type=\"file\" filePath=\"a.js\" diff=\"true\">\n@@ -1 +1 @@\n-a\n+b\n</Action>"
      "<Action type=\"create\" filePath=\"b.js\">x</Action>");
  REQUIRE(p.actions.size() == 2);
  CHECK(p.actions[0].kind == ActionKind::diff);
  CHECK(p.actions[0].hunks.size() == 1);
  CHECK(p.actions[1].kind == ActionKind::create);
  CHECK(p.actions[1].content == "x\n");
}

TEST_CASE("bad actions become diagnostics and siblings survive") {
  const auto p = parse_actions(
      "<Action type=\"shell\" filePath=\"x\">rm -rf /</Action>"
      "<Action type=\"file\">no path</Action>"
      "<Action type=\"file\" filePath=\"self.js\"/>"
      "<Action type=\"file\" filePath=\"d.js\" diff=\"true\">not a diff</Action>"
      "<Action type=\"file\" filePath=\"good.js\">ok</Action>");
  REQUIRE(p.actions.size() == 1);
  CHECK(p.actions[0].path == "good.js");
  CHECK(p.diagnostics.size() == 4);
  CHECK(parse_actions("no tags at all").actions.empty());
}

TEST_CASE("empty content stays empty") {
  const auto p = parse_actions("<Action type=\"file\" filePath=\"empty.txt\">\n</Action>");
  REQUIRE(p.actions.size() == 1);
  CHECK(p.actions[0].content.empty());
}

TEST_CASE("selection parsing") {
  const std::vector<std::string> files{"a.js", "b.js", "src/c.js"};
  auto s = parse_selection(
      "<contextSelection><includeFile path=\"a.js\"/><includeFile path=\"./src/c.js\"/><includeFile "
      "path=\"ghost.js\"/><excludeFile path=\"b.js\"/><includeFile path=\"a.js\"/></contextSelection>",
      files);
  CHECK(s.selection.included == std::vector<std::string>{"a.js", "src/c.js"});
  CHECK(s.selection.excluded == std::vector<std::string>{"b.js"});
  REQUIRE(s.warnings.size() >= 1);
  CHECK(std::any_of(s.warnings.begin(), s.warnings.end(),
                    [](const std::string& w) { return w == "unknown path in selection: 'ghost.js' (dropped)"; }));

  s = parse_selection("<includeFile>b.js</includeFile><includeFile filePath=\"a.js\"/><excludeFile path=\"b.js\"/>", files);
  CHECK(s.selection.included == std::vector<std::string>{"a.js"});
  CHECK(s.selection.excluded == std::vector<std::string>{"b.js"});
  CHECK(parse_selection("nothing here", files).selection.included.empty());
}

TEST_CASE("template id matching") {
  const std::vector<std::string> ids{"static-site", "node-basic", "node-basic-auth"};
  CHECK(match_template_id("node-basic", ids) == "node-basic");
  CHECK(match_template_id("  NODE-BASIC \nbecause", ids) == "node-basic");
  CHECK(match_template_id("I pick node-basic-auth for this", ids) == "node-basic-auth");
  CHECK_FALSE(match_template_id("vue", ids));
}

TEST_CASE("digest trimming keeps the newest paragraphs within budget") {
  std::string s;
  for (int i = 0; i < 10; ++i) s = append_digest(s, "paragraph " + std::to_string(i), 40);
  CHECK(s.size() <= 40);
  CHECK(s.find("paragraph 9") != std::string::npos);
  CHECK(s.find("paragraph 0") == std::string::npos);
  const auto big = append_digest("", std::string(100, 'x'), 30);
  CHECK(big.size() <= 30);
}

TEST_CASE("template selection") {
  SUBCASE("single template needs no model call") {
    auto model = std::make_shared<FakeModel>();
    auto gw = appforge::testing::scripted_gateway(appforge::testing::handler_for(model));
    DevAgent dev(*gw, appforge::testing::test_provider_config());
    const workspace::TemplateStore store(appforge::testing::store_dir("basic"));
    const auto c = dev.select_template({"anything", std::nullopt}, store);
    CHECK(c.descriptor->id == "static-site");
    CHECK_FALSE(c.model_called);
    CHECK(model->calls(Stage::template_select) == 0);
  }
  SUBCASE("model choice, then fallback") {
    const workspace::TemplateStore store(appforge::testing::store_dir("multi"));
    auto gw = appforge::testing::sequence_gateway({"api-server"});
    DevAgent dev(*gw, appforge::testing::test_provider_config(), {}, {"six-file", 4000});
    CHECK(dev.select_template({"an api", std::nullopt}, store).descriptor->id == "api-server");
    auto gw2 = appforge::testing::sequence_gateway({"django please"});
    DevAgent dev2(*gw2, appforge::testing::test_provider_config(), {}, {"six-file", 4000});
    const auto c = dev2.select_template({"an api", std::nullopt}, store);
    CHECK(c.descriptor->id == "six-file");
    CHECK(c.warnings.size() == 1);
    DevAgent dev3(*gw2, appforge::testing::test_provider_config(), {}, {"missing", 4000});
    CHECK(dev3.select_template({"an api", std::nullopt}, store).descriptor->id == store.all().front().id);
  }
}

TEST_CASE("development prompt lists locked files and the buffer") {
  TempDir dir;
  const workspace::TemplateStore store(appforge::testing::store_dir("multi"));
  auto ws = workspace::Workspace::init_from_template(store.get("six-file"), dir / "ws");
  auto gw = appforge::testing::sequence_gateway({""});
  DevAgent dev(*gw, appforge::testing::test_provider_config());
  CHECK_THROWS_AS(dev.build_dev_prompt(ws, task("x")), workspace::EmptyBuffer);
  ws.load_file("server.js");
  auto t = task("Add a route");
  t.design_image = gateway::ImageAttachment{"png", {1}};
  const auto b = dev.build_dev_prompt(ws, t);
  CHECK(b.system.find("package-lock.json") != std::string::npos);
  CHECK(b.grammar == gateway::Grammar::xml_actions);
  const auto user = b.user_text();
  CHECK(user.find("<file filePath=\"server.js\">") != std::string::npos);
  CHECK(user.find(kNoHistory) != std::string::npos);
  CHECK(user.find("Add a route") != std::string::npos);
  CHECK(b.turns.size() == 2);
}

TEST_CASE("develop step applies the model's files") {
  TempDir dir;
  auto ws = basic_ws(dir);
  auto model = std::make_shared<FakeModel>();
  auto gw = appforge::testing::scripted_gateway(appforge::testing::handler_for(model));
  DevAgent dev(*gw, appforge::testing::test_provider_config());
  const auto before = ws.tree_hash();
  const auto s = dev.develop_step(ws, task("Requirements to implement:\n- [R1] x\n"));
  CHECK(s.productive);
  CHECK(s.applied_count() == 1);
  CHECK(ws.tree_hash() != before);
  CHECK(util::read_file(dir / "ws/index.html").find("done:R1") != std::string::npos);
  CHECK(ws.state().chat_summary != "");
  CHECK(model->calls(Stage::context_select) == 1);
  CHECK(model->calls(Stage::develop) == 1);
  // The digest is carried into the next step.
  const auto s2 = dev.develop_step(ws, task("- T-R2 (NO): missing", 1));
  CHECK(s2.productive);
  CHECK(util::read_file(dir / "ws/index.html").find("done:R2") != std::string::npos);
}

TEST_CASE("develop step survives malformed replies") {
  TempDir dir;
  auto ws = basic_ws(dir);
  auto cfg = appforge::testing::test_provider_config();
  cfg.max_reasks = 1;
  auto gw = appforge::testing::sequence_gateway({"I cannot decide"});
  DevAgent dev(*gw, cfg);
  const auto before = ws.tree_hash();
  const auto s = dev.develop_step(ws, task("do it"));
  CHECK_FALSE(s.productive);
  CHECK(!s.warnings.empty());
  CHECK(!s.diagnostics.empty());
  CHECK(ws.tree_hash() == before);
  // Empty selection falls back to loading the filtered files.
  CHECK(ws.is_buffered("index.html"));
}

TEST_CASE("locked targets are skipped, others applied") {
  TempDir dir;
  const workspace::TemplateStore store(appforge::testing::store_dir("multi"));
  auto ws = workspace::Workspace::init_from_template(store.get("six-file"), dir / "ws");
  const auto lock = util::read_file(dir / "ws/package-lock.json");
  auto gw = appforge::testing::sequence_gateway(
      {"<contextSelection><includeFile path=\"server.js\"/></contextSelection>",
       "<Action type=\"file\" filePath=\"package-lock.json\">{}</Action>\n"
       "<Action type=\"file\" filePath=\"server.js\">console.log(1)</Action>"});
  DevAgent dev(*gw, appforge::testing::test_provider_config());
  const auto s = dev.develop_step(ws, task("go"));
  CHECK(s.applied_count() == 1);
  CHECK(s.skipped_count() == 1);
  CHECK(util::read_file(dir / "ws/package-lock.json") == lock);
  CHECK(util::read_file(dir / "ws/server.js") == "console.log(1)\n");
  CHECK(s.to_json()["actions"].size() == 2);
}

}
