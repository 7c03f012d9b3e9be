#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "mecake/harness.hpp"

using namespace mecake;
using harness::RunReport;
using harness::Scenario;
using harness::ScenarioConfig;
using harness::World;
using protocol::MessageM1;
using protocol::MessageM2;
using protocol::MessageM3;
using protocol::MessageM4;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("scenario names parse back to themselves") {
  for (const Scenario s :
       {Scenario::honest, Scenario::key_computation, Scenario::impersonation,
        Scenario::traceability, Scenario::curious_rc, Scenario::replay_control,
        Scenario::tamper_control}) {
    CHECK(harness::parse_scenario(harness::scenario_name(s)) == s);
  }
  CHECK_FALSE(harness::parse_scenario("bogus").has_value());
  CHECK_FALSE(harness::parse_scenario("").has_value());
  CHECK_FALSE(harness::parse_scenario("Honest").has_value());
}

TEST_CASE("sim clock hops and clamps") {
  harness::SimClock clock;
  const auto start = clock.now;
  clock.hop();
  CHECK(clock.now.millis == start.millis + 10);
  clock.hop(90);
  CHECK(clock.now.millis == start.millis + 110);
  clock.hop(-40);
  CHECK(clock.now.millis == start.millis + 80);
  clock.advance(1000);
  CHECK(clock.now.millis == start.millis + 1080);

  harness::SimClock small;
  small.now.millis = 3;
  small.hop(-1'000'000);
  CHECK(small.now.millis == 0);  // clamped, not wrapped
}

TEST_CASE("make_world registers every party") {
  World world = harness::make_world(1, 3, 2);
  CHECK(world.users.size() == 3);
  CHECK(world.servers.size() == 2);
  CHECK(world.rc.user_table.size() == 3);
  CHECK(world.rc.server_table.size() == 2);
  CHECK(world.transcript.empty());  // registration is off the tap

  // distinct cards and servers
  CHECK(world.users[0].card.b_i != world.users[1].card.b_i);
  CHECK(world.servers[0].sid != world.servers[1].sid);

  CHECK_THROWS_AS(harness::make_world(1, 0, 1), std::invalid_argument);
}

TEST_CASE("run_honest_session completes, taps four legs, records truth") {
  World world = harness::make_world(2, 1, 1);
  const auto outcome = harness::run_honest_session(world, 0, 0);
  REQUIRE(outcome.completed);
  REQUIRE(outcome.truth_index.has_value());

  REQUIRE(world.transcript.size() == 4);
  CHECK(std::holds_alternative<MessageM1>(world.transcript[0].tapped.msg));
  CHECK(std::holds_alternative<MessageM2>(world.transcript[1].tapped.msg));
  CHECK(std::holds_alternative<MessageM3>(world.transcript[2].tapped.msg));
  CHECK(std::holds_alternative<MessageM4>(world.transcript[3].tapped.msg));
  for (const auto& entry : world.transcript) CHECK(entry.session == 0);

  const auto& truth = world.ground_truth.at(*outcome.truth_index);
  CHECK(truth.sk_user == truth.sk_server);
  CHECK(truth.b_i == world.users[0].card.b_i);
  CHECK(truth.sid == world.servers[0].sid.bytes);
  CHECK(truth.hpr == crypto::h({crypto::ByteView(truth.psid.data(), 32),
                                crypto::ByteView(truth.rn2.data(), 32)}));
}

TEST_CASE("transcript timestamps are non-decreasing without skew") {
  World world = harness::make_world(3, 2, 2);
  for (int i = 0; i < 6; ++i)
    REQUIRE(harness::run_honest_session(world, i % 2, i % 2).completed);

  std::uint64_t last = 0;
  for (const auto& entry : world.transcript) {
    const std::uint64_t ts = std::visit(
        [](const auto& m) -> std::uint64_t {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, MessageM1>) return m.ts_u.millis;
          else if constexpr (std::is_same_v<T, MessageM2>) return m.ts_rc.millis;
          else if constexpr (std::is_same_v<T, MessageM3>) return m.ts_ms.millis;
          else return m.t4.millis;
        },
        entry.tapped.msg);
    CHECK(ts >= last);
    last = ts;
  }
}

TEST_CASE("delivery skew beyond the window aborts with a freshness reject") {
  World world = harness::make_world(4, 1, 1, 2000, 2001);
  const auto outcome = harness::run_honest_session(world, 0, 0);
  CHECK_FALSE(outcome.completed);
  CHECK(outcome.reject_reason == protocol::RejectReason::freshness);
  // skew within the window is harmless
  World fine = harness::make_world(4, 1, 1, 2000, 500);
  CHECK(harness::run_honest_session(fine, 0, 0).completed);
}

TEST_CASE("eavesdrop strips session labels, keeps order") {
  World world = harness::make_world(5, 2, 1);
  harness::run_honest_session(world, 0, 0);
  harness::run_honest_session(world, 1, 0);
  const auto view = harness::eavesdrop(world);
  REQUIRE(view.messages.size() == world.transcript.size());
  for (std::size_t i = 0; i < view.messages.size(); ++i) {
    CHECK(view.messages[i].dir == world.transcript[i].tapped.dir);
    CHECK(view.messages[i].msg == world.transcript[i].tapped.msg);
  }
}

TEST_CASE("honest scenario: all keys agree, records retired") {
  ScenarioConfig config;
  config.scenario = Scenario::honest;
  config.seed = 11;
  config.n_sessions = 8;
  const RunReport report = harness::run_scenario(config);
  CHECK(report.verdict);
  CHECK(report.sessions_completed == 8);
  CHECK(report.sessions_rejected == 0);
  CHECK(report.checks.at("all_sessions_completed"));
  CHECK(report.checks.at("session_keys_agree"));
  CHECK(report.checks.at("four_messages_per_session"));
  CHECK(report.checks.at("rc_session_records_retired"));
  CHECK(report.transcript.size() == 32);
  CHECK(report.attack_reports.empty());
}

TEST_CASE("honest scenario under an impossible window fails its verdict") {
  ScenarioConfig config;
  config.scenario = Scenario::honest;
  config.delta_t_ms = 1;  // every 10 ms hop is already stale
  const RunReport report = harness::run_scenario(config);
  CHECK_FALSE(report.verdict);
  CHECK(report.sessions_completed == 0);
  CHECK(report.sessions_rejected == 10);
}

TEST_CASE("key-computation scenario succeeds and honors k_gap") {
  ScenarioConfig config;
  config.scenario = Scenario::key_computation;
  config.seed = 21;
  config.k_gap = 3;
  const RunReport report = harness::run_scenario(config);
  CHECK(report.verdict);
  CHECK(report.sessions_completed == 2 + 3);  // contact + fillers + attacked
  CHECK(report.checks.at("pseudonym_matches_ground_truth"));
  CHECK(report.checks.at("attack_succeeded"));
  CHECK(report.checks.at("observer_recovered_attacked_session"));
  REQUIRE(report.attack_reports.size() == 1);
  CHECK(report.attack_reports[0].success);
  CHECK(report.attack_reports[0].recovered.size() == 5);
}

TEST_CASE("key-computation negative control fails to recover anything") {
  ScenarioConfig config;
  config.scenario = Scenario::key_computation;
  config.seed = 21;
  config.negative_control = true;
  const RunReport report = harness::run_scenario(config);
  CHECK(report.verdict);  // the control met its expectation
  CHECK(report.checks.at("attack_failed"));
  CHECK(report.checks.at("observer_recovered_nothing"));
  REQUIRE(report.attack_reports.size() == 1);
  CHECK_FALSE(report.attack_reports[0].success);
}

TEST_CASE("impersonation scenario: forged login runs to a shared key") {
  ScenarioConfig config;
  config.scenario = Scenario::impersonation;
  config.seed = 31;
  const RunReport report = harness::run_scenario(config);
  CHECK(report.verdict);
  CHECK(report.checks.at("rc_accepted_forged_login"));
  CHECK(report.checks.at("duped_server_accepted"));
  CHECK(report.checks.at("rc_issued_final_message"));
  CHECK(report.checks.at("forged_handshake_verified"));
  CHECK(report.checks.at("attacker_key_matches_duped_server"));
  REQUIRE(report.attack_reports.size() == 1);
  CHECK(report.attack_reports[0].success);
  // the forged session's four legs joined the honest contact session's four
  CHECK(report.transcript.size() == 8);
}

TEST_CASE("impersonation negative control is rejected at the rc") {
  ScenarioConfig config;
  config.scenario = Scenario::impersonation;
  config.seed = 31;
  config.negative_control = true;
  const RunReport report = harness::run_scenario(config);
  CHECK(report.verdict);
  CHECK(report.checks.at("rc_rejected_forged_login"));
  REQUIRE(report.attack_reports.size() == 1);
  CHECK_FALSE(report.attack_reports[0].success);
}

TEST_CASE("traceability scenario: perfect linkage across users") {
  ScenarioConfig config;
  config.scenario = Scenario::traceability;
  config.seed = 41;
  config.n_sessions = 6;
  config.n_users = 3;
  const RunReport report = harness::run_scenario(config);
  CHECK(report.verdict);
  CHECK(report.sessions_completed == 18);
  CHECK(report.checks.at("one_group_per_user"));
  CHECK(report.checks.at("precision_is_one"));
  CHECK(report.checks.at("recall_is_one"));
  CHECK(report.checks.at("non_linking_fields_all_fresh"));
  CHECK(report.checks.at("groups_match_cards"));
  REQUIRE(report.detail_lines.size() == 1);
  CHECK(report.detail_lines[0].find("precision=1.000") != std::string::npos);
  CHECK(report.detail_lines[0].find("recall=1.000") != std::string::npos);
}

TEST_CASE("curious-rc scenario recovers one key per session") {
  ScenarioConfig config;
  config.scenario = Scenario::curious_rc;
  config.seed = 51;
  config.n_sessions = 5;
  const RunReport report = harness::run_scenario(config);
  CHECK(report.verdict);
  CHECK(report.checks.at("every_key_recovered"));
  REQUIRE(report.attack_reports.size() == 5);
  for (const auto& attack : report.attack_reports) CHECK(attack.success);

  config.negative_control = true;
  const RunReport negative = harness::run_scenario(config);
  CHECK(negative.verdict);
  CHECK(negative.checks.at("no_key_recovered"));
  for (const auto& attack : negative.attack_reports) CHECK_FALSE(attack.success);
}

TEST_CASE("replay control: every stale replay is refused") {
  ScenarioConfig config;
  config.scenario = Scenario::replay_control;
  config.seed = 61;
  config.n_sessions = 4;
  const RunReport report = harness::run_scenario(config);
  CHECK(report.verdict);
  CHECK(report.checks.at("stale_replays_rejected"));
  CHECK(report.sessions_completed == 4);
}

TEST_CASE("tamper control: every corrupted digest is caught at its verifier") {
  ScenarioConfig config;
  config.scenario = Scenario::tamper_control;
  config.seed = 71;
  const RunReport report = harness::run_scenario(config);
  CHECK(report.verdict);
  CHECK(report.checks.at("d2_rejected_at_rc"));
  CHECK(report.checks.at("d4_rejected_at_server"));
  CHECK(report.checks.at("d5_rejected_at_rc"));
  CHECK(report.checks.at("d8_rejected_at_user"));
  CHECK(report.checks.at("d6_rejected_at_user"));
}

TEST_CASE("invalid configs are refused up front") {
  ScenarioConfig config;
  config.n_sessions = 0;
  CHECK_THROWS_AS(harness::run_scenario(config), std::invalid_argument);
  config.n_sessions = 1;
  config.k_gap = 0;
  CHECK_THROWS_AS(harness::run_scenario(config), std::invalid_argument);
  config.k_gap = 1;
  config.n_users = 0;
  CHECK_THROWS_AS(harness::run_scenario(config), std::invalid_argument);
}

TEST_CASE("reports are byte-identical across repeated runs") {
  for (const Scenario s :
       {Scenario::honest, Scenario::key_computation, Scenario::impersonation,
        Scenario::traceability, Scenario::curious_rc, Scenario::replay_control,
        Scenario::tamper_control}) {
    ScenarioConfig config;
    config.scenario = s;
    config.seed = 9;
    config.n_sessions = 3;
    const std::string a =
        harness::report_to_jsonl(harness::run_scenario(config), true);
    const std::string b =
        harness::report_to_jsonl(harness::run_scenario(config), true);
    CHECK(a == b);
  }

  ScenarioConfig config;
  config.scenario = Scenario::honest;
  config.seed = 9;
  const std::string a =
      harness::report_to_jsonl(harness::run_scenario(config), true);
  config.seed = 10;
  const std::string b =
      harness::report_to_jsonl(harness::run_scenario(config), true);
  CHECK(a != b);
}

TEST_CASE("jsonl layout: run line, attack lines, verbose message lines") {
  ScenarioConfig config;
  config.scenario = Scenario::key_computation;
  config.seed = 13;
  const RunReport report = harness::run_scenario(config);

  const auto terse = lines_of(harness::report_to_jsonl(report, false));
  REQUIRE(terse.size() == 2);  // run + one attack report
  const auto run = nlohmann::json::parse(terse[0]);
  CHECK(run.at("type") == "run");
  CHECK(run.at("scenario") == "key-computation");
  CHECK(run.at("seed") == 13);
  CHECK(run.at("verdict") == true);
  CHECK(run.at("checks").is_object());
  CHECK(run.at("config").at("k_gap") == 1);
  CHECK(nlohmann::json::parse(terse[1]).at("type") == "attack_report");

  const auto verbose = lines_of(harness::report_to_jsonl(report, true));
  REQUIRE(verbose.size() == 2 + report.transcript.size());
  const auto msg = nlohmann::json::parse(verbose[2]);
  CHECK(msg.at("type") == "message");
  CHECK(msg.at("dir") == "user->rc");
  CHECK(msg.at("msg").at("type") == "m1");
  CHECK(msg.at("session") == 0);
}

TEST_CASE("text rendering names the verdict and checks") {
  ScenarioConfig config;
  config.scenario = Scenario::honest;
  config.seed = 15;
  config.n_sessions = 2;
  const RunReport report = harness::run_scenario(config);
  const std::string text = harness::report_to_text(report, false);
  CHECK(text.find("scenario: honest (seed 15)") != std::string::npos);
  CHECK(text.find("verdict: PASS") != std::string::npos);
  CHECK(text.find("check session_keys_agree: ok") != std::string::npos);
  CHECK(text.find("m1") == std::string::npos);  // no transcript unless verbose

  const std::string verbose = harness::report_to_text(report, true);
  CHECK(verbose.find("[session 0] user->rc") != std::string::npos);
}
