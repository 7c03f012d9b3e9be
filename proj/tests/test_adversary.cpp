#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mecake/adversary.hpp"
#include "mecake/harness.hpp"

using namespace mecake;
using adversary::AttackReport;
using adversary::Direction;
using adversary::EavesdropView;
using adversary::MaliciousServerMemory;
using crypto::Block;
using crypto::ByteView;
using crypto::Digest;
using harness::World;
using protocol::MessageM1;
using protocol::MessageM2;
using protocol::MessageM3;
using protocol::MessageM4;

namespace {

std::string hex(const Block& b) {
  return crypto::to_hex(ByteView(b.data(), b.size()));
}

// one session's tapped leg, by harness label
template <typename M>
const M& leg(const World& world, int session, Direction dir) {
  for (const auto& entry : world.transcript) {
    if (entry.session != session || entry.tapped.dir != dir) continue;
    if (const auto* m = std::get_if<M>(&entry.tapped.msg)) return *m;
  }
  FAIL("missing transcript leg");
  static M dummy{};
  return dummy;
}

}  // namespace

TEST_CASE("any serving server unmasks the long-term pseudonym from m2") {
  World world = harness::make_world(77, 1, 1);
  const auto outcome = harness::run_honest_session(world, 0, 0);
  REQUIRE(outcome.completed);
  const auto& truth = world.ground_truth.at(*outcome.truth_index);

  MaliciousServerMemory mem{world.servers[0], std::nullopt, std::nullopt};
  const Digest tmid = adversary::recover_tmid_from_m2(
      mem, leg<MessageM2>(world, truth.session_id, Direction::rc_to_server));
  CHECK(tmid == truth.tmid);
  CHECK(mem.retained_tmid == truth.tmid);
}

TEST_CASE("kc_derive recovers every intermediate of a later session") {
  // server 0 serves the victim once; the attacked session runs against
  // server 1, which the attacker never controls
  World world = harness::make_world(101, 1, 2);
  const auto contact = harness::run_honest_session(world, 0, 0);
  REQUIRE(contact.completed);
  MaliciousServerMemory mem{world.servers[0], std::nullopt, std::nullopt};
  adversary::recover_tmid_from_m2(
      mem, leg<MessageM2>(world,
                          world.ground_truth.at(*contact.truth_index).session_id,
                          Direction::rc_to_server));

  const auto attacked = harness::run_honest_session(world, 0, 1);
  REQUIRE(attacked.completed);
  const auto& truth = world.ground_truth.at(*attacked.truth_index);
  const auto& m1 = leg<MessageM1>(world, truth.session_id, Direction::user_to_rc);
  const auto& m4 = leg<MessageM4>(world, truth.session_id, Direction::rc_to_user);

  const auto rec = adversary::kc_derive(*mem.retained_tmid, m1, m4);
  CHECK(rec.sid_star == truth.sid);
  CHECK(rec.rn1_star == truth.rn1);
  CHECK(rec.hpr_star == truth.hpr);
  CHECK(rec.rn3_star == truth.rn3);
  CHECK(rec.sk_star == truth.sk_user);
  CHECK(rec.sk_star == truth.sk_server);

  SUBCASE("the report form carries all five values and verifies") {
    AttackReport report = adversary::kc_attack(mem, m1, m4);
    adversary::finalize_report(report,
                               {{"sid_j_star", hex(truth.sid)},
                                {"rn1_star", hex(truth.rn1)},
                                {"h_psid_rn2_star", hex(truth.hpr)},
                                {"rn3_star", hex(truth.rn3)},
                                {"sk_star", hex(truth.sk_server)}});
    CHECK(report.success);
    CHECK(report.recovered.size() == 5);
    for (const auto& [key, ok] : report.ground_truth_comparison) CHECK(ok);
  }

  SUBCASE("a random pseudonym recovers nothing") {
    mem.retained_tmid = world.rng.next_block();
    AttackReport report = adversary::kc_attack(mem, m1, m4);
    adversary::finalize_report(report, {{"sid_j_star", hex(truth.sid)},
                                        {"rn1_star", hex(truth.rn1)},
                                        {"h_psid_rn2_star", hex(truth.hpr)},
                                        {"rn3_star", hex(truth.rn3)},
                                        {"sk_star", hex(truth.sk_server)}});
    CHECK_FALSE(report.success);
    for (const auto& [key, ok] : report.ground_truth_comparison)
      CHECK_FALSE(ok);  // hash avalanche: every derived value is off
  }
}

TEST_CASE("kc_attack without a retained pseudonym throws") {
  World world = harness::make_world(5, 1, 1);
  MaliciousServerMemory mem{world.servers[0], std::nullopt, std::nullopt};
  CHECK_THROWS_AS(adversary::kc_attack(mem, MessageM1{}, MessageM4{}),
                  std::logic_error);
}

TEST_CASE("KcObserver pairs the victim's legs out of interleaved traffic") {
  World world = harness::make_world(303, 2, 3);
  // victim visits the malicious server, then foreign and victim sessions mix
  const auto contact = harness::run_honest_session(world, 0, 0);
  REQUIRE(contact.completed);
  MaliciousServerMemory mem{world.servers[0], std::nullopt, std::nullopt};
  // copied: the vector grows with every later session
  const auto contact_truth = world.ground_truth.at(*contact.truth_index);
  adversary::recover_tmid_from_m2(
      mem,
      leg<MessageM2>(world, contact_truth.session_id, Direction::rc_to_server));

  harness::run_honest_session(world, 1, 2);  // foreign
  const auto v1 = harness::run_honest_session(world, 0, 1);
  harness::run_honest_session(world, 1, 1);  // foreign
  const auto v2 = harness::run_honest_session(world, 0, 2);
  REQUIRE(v1.completed);
  REQUIRE(v2.completed);

  const Block victim_b_i =
      leg<MessageM1>(world, contact_truth.session_id, Direction::user_to_rc).b_i;
  adversary::KcObserver observer(*mem.retained_tmid, victim_b_i);
  observer.observe_all(harness::eavesdrop(world));

  // three victim sessions on the tap: contact + two later ones
  REQUIRE(observer.recovered().size() == 3);
  CHECK(observer.recovered()[0].sk_star == contact_truth.sk_user);
  CHECK(observer.recovered()[1].sk_star ==
        world.ground_truth.at(*v1.truth_index).sk_user);
  CHECK(observer.recovered()[2].sk_star ==
        world.ground_truth.at(*v2.truth_index).sk_user);
}

TEST_CASE("KcObserver with a wrong pseudonym pairs nothing") {
  World world = harness::make_world(303, 2, 3);
  harness::run_honest_session(world, 0, 0);
  harness::run_honest_session(world, 0, 1);
  const Block victim_b_i = world.users[0].card.b_i;
  adversary::KcObserver observer(world.rng.next_block(), victim_b_i);
  observer.observe_all(harness::eavesdrop(world));
  CHECK(observer.recovered().empty());
}

TEST_CASE("forged login: accepted with the genuine pseudonym, else refused") {
  World world = harness::make_world(404, 1, 2);
  const auto contact = harness::run_honest_session(world, 0, 0);
  REQUIRE(contact.completed);
  const auto& contact_truth = world.ground_truth.at(*contact.truth_index);
  MaliciousServerMemory mem{world.servers[0], std::nullopt, std::nullopt};
  adversary::recover_tmid_from_m2(
      mem,
      leg<MessageM2>(world, contact_truth.session_id, Direction::rc_to_server));
  const Block victim_b_i =
      leg<MessageM1>(world, contact_truth.session_id, Direction::user_to_rc).b_i;

  SUBCASE("accepted, and the attacker ends up sharing the duped server's key") {
    const MessageM1 forged = adversary::impersonate_user(
        mem, victim_b_i, world.servers[1].sid, world.clock.now, world.rng);
    world.clock.hop();
    const auto r2 = protocol::rc_handle_m1(world.rc, forged, world.clock.now,
                                           world.rng, world.delta_t_ms);
    REQUIRE(r2.ok());
    world.clock.hop();
    const auto r3 = protocol::server_handle_m2(world.servers[1], r2.value().m2,
                                               world.clock.now, world.rng,
                                               world.delta_t_ms);
    REQUIRE(r3.ok());
    world.clock.hop();
    const auto r4 =
        protocol::rc_handle_m3(world.rc, r2.value().handle, r3.value().m3,
                               world.clock.now, world.delta_t_ms);
    REQUIRE(r4.ok());
    const auto outcome = adversary::complete_forged_session(mem, r4.value());
    CHECK(outcome.d8_valid);
    CHECK(outcome.d6_valid);
    CHECK(outcome.sk == r3.value().sk);
    CHECK_FALSE(mem.forged.has_value());  // consumed
  }

  SUBCASE("a wrong pseudonym dies at the d2 verifier") {
    mem.retained_tmid = world.rng.next_block();
    const MessageM1 forged = adversary::impersonate_user(
        mem, victim_b_i, world.servers[1].sid, world.clock.now, world.rng);
    const auto r2 = protocol::rc_handle_m1(world.rc, forged, world.clock.now,
                                           world.rng, world.delta_t_ms);
    REQUIRE_FALSE(r2.ok());
    CHECK(r2.reject().reason == protocol::RejectReason::auth);
  }
}

TEST_CASE("impersonation preconditions") {
  World world = harness::make_world(6, 1, 1);
  MaliciousServerMemory mem{world.servers[0], std::nullopt, std::nullopt};
  CHECK_THROWS_AS(
      adversary::impersonate_user(mem, Block{}, world.servers[0].sid,
                                  world.clock.now, world.rng),
      std::logic_error);
  mem.retained_tmid = world.rng.next_block();
  CHECK_THROWS_AS(adversary::complete_forged_session(mem, MessageM4{}),
                  std::logic_error);
}

TEST_CASE("link_sessions clusters logins by card") {
  World world = harness::make_world(505, 3, 2);
  // user 0 logs in 3 times, user 1 twice, user 2 once, interleaved
  const int order[] = {0, 1, 2, 0, 1, 0};
  for (const int u : order) {
    REQUIRE(harness::run_honest_session(world, u, u % 2).completed);
  }
  const EavesdropView view = harness::eavesdrop(world);
  const auto groups = adversary::link_sessions(view);

  REQUIRE(groups.size() == 3);  // first-sighting order: user 0, 1, 2
  CHECK(groups[0].b_i == world.users[0].card.b_i);
  CHECK(groups[1].b_i == world.users[1].card.b_i);
  CHECK(groups[2].b_i == world.users[2].card.b_i);
  CHECK(groups[0].message_indices.size() == 3);
  CHECK(groups[1].message_indices.size() == 2);
  CHECK(groups[2].message_indices.size() == 1);
  for (const auto& g : groups) {
    for (const auto idx : g.message_indices) {
      const auto& m1 = std::get<MessageM1>(view.messages[idx].msg);
      CHECK(m1.b_i == g.b_i);
    }
  }
}

TEST_CASE("link_sessions degenerate inputs") {
  CHECK(adversary::link_sessions(EavesdropView{}).empty());

  World world = harness::make_world(7, 1, 1);
  REQUIRE(harness::run_honest_session(world, 0, 0).completed);
  const auto groups = adversary::link_sessions(harness::eavesdrop(world));
  REQUIRE(groups.size() == 1);
  CHECK(groups[0].message_indices.size() == 1);
}

TEST_CASE("curious rc: its own record plus the rn3 mask yields the key") {
  World world = harness::make_world(606, 1, 1);
  const auto outcome = harness::run_honest_session(world, 0, 0);
  REQUIRE(outcome.completed);
  const auto& truth = world.ground_truth.at(*outcome.truth_index);
  const auto& record = world.rc.sessions.at(truth.rc_handle);
  const auto& m3 = leg<MessageM3>(world, truth.session_id,
                                  Direction::server_to_rc);

  const Block rn3 = adversary::rc_recover_rn3(record, m3.rn3_masked);
  CHECK(rn3 == truth.rn3);
  const Digest sk = adversary::curious_rc_compute_sk(record, rn3);
  CHECK(sk == truth.sk_user);
  CHECK(sk == truth.sk_server);
  // recomputation is pure
  CHECK(adversary::curious_rc_compute_sk(record, rn3) == sk);

  SUBCASE("a spoiled record no longer works") {
    auto bad = record;
    bad.rn2 = world.rng.next_block();
    CHECK(adversary::curious_rc_compute_sk(bad, rn3) != truth.sk_user);
  }
}

TEST_CASE("finalize_report judges strictly") {
  SUBCASE("empty recovery never succeeds") {
    AttackReport r;
    adversary::finalize_report(r, {{"x", "00"}});
    CHECK_FALSE(r.success);
  }
  SUBCASE("all values matching succeeds") {
    AttackReport r;
    r.recovered = {{"a", "11"}, {"b", "22"}};
    adversary::finalize_report(r, {{"a", "11"}, {"b", "22"}, {"c", "33"}});
    CHECK(r.success);
    CHECK(r.ground_truth_comparison.at("a"));
    CHECK(r.ground_truth_comparison.at("b"));
  }
  SUBCASE("one mismatch fails the whole claim") {
    AttackReport r;
    r.recovered = {{"a", "11"}, {"b", "99"}};
    adversary::finalize_report(r, {{"a", "11"}, {"b", "22"}});
    CHECK_FALSE(r.success);
    CHECK(r.ground_truth_comparison.at("a"));
    CHECK_FALSE(r.ground_truth_comparison.at("b"));
  }
  SUBCASE("claiming a value absent from ground truth fails") {
    AttackReport r;
    r.recovered = {{"ghost", "11"}};
    adversary::finalize_report(r, {});
    CHECK_FALSE(r.success);
  }
}

TEST_CASE("attack report json shape") {
  AttackReport r;
  r.attack_name = "demo";
  r.recovered = {{"v", "aa"}};
  r.ground_truth_comparison = {{"v", true}};
  r.success = true;
  r.notes = {"note-1"};
  const auto j = adversary::to_json(r);
  CHECK(j.at("type") == "attack_report");
  CHECK(j.at("attack") == "demo");
  CHECK(j.at("success") == true);
  CHECK(j.at("recovered").at("v") == "aa");
  CHECK(j.at("ground_truth_comparison").at("v") == true);
  CHECK(j.at("notes")[0] == "note-1");
  CHECK(adversary::to_json(r).dump() == j.dump());
}

TEST_CASE("direction names") {
  CHECK(adversary::direction_name(Direction::user_to_rc) == "user->rc");
  CHECK(adversary::direction_name(Direction::rc_to_server) == "rc->server");
  CHECK(adversary::direction_name(Direction::server_to_rc) == "server->rc");
  CHECK(adversary::direction_name(Direction::rc_to_user) == "rc->user");
}
