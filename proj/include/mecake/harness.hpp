#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mecake/adversary.hpp"
#include "mecake/protocol.hpp"

// Scenario harness: builds worlds (one registration center, a few users and
// edge servers), drives sessions over a simulated public channel with an
// eavesdropper tap and a controllable clock, and packages the outcome of
// each canned scenario as a RunReport with named boolean checks.
//
// Everything is deterministic in (scenario, seed, knobs): one SeededRng per
// world, a fixed clock epoch, and a fixed per-hop advance.
namespace mecake::harness {

using crypto::Block;
using crypto::Digest;
using crypto::Timestamp;

enum class Scenario {
  honest,
  key_computation,
  impersonation,
  traceability,
  curious_rc,
  replay_control,
  tamper_control,
};

std::string_view scenario_name(Scenario scenario);
std::optional<Scenario> parse_scenario(std::string_view name);

struct ScenarioConfig {
  Scenario scenario = Scenario::honest;
  std::uint64_t seed = 0;
  int n_sessions = 10;
  int k_gap = 1;  // filler sessions between insider contact and the attack
  std::uint64_t delta_t_ms = protocol::kDefaultFreshnessWindowMs;
  std::int64_t clock_skew_ms = 0;  // extra millis injected per delivery
  int n_users = 2;                 // population size where it matters
  bool negative_control = false;   // sabotage the attacker, expect failure
};

/// Simulated wall clock. Every message delivery costs one hop; idle time
/// between events is explicit.
struct SimClock {
  Timestamp now{1'000'000'000'000};
  std::uint64_t hop_ms = 10;

  /// One delivery: hop_ms plus injected skew (clamped at zero).
  Timestamp hop(std::int64_t skew_ms = 0);
  void advance(std::uint64_t ms) { now.millis += ms; }
};

/// What actually happened in one completed session, harvested from the
/// honest parties' own state. Adversary code never writes here; attack
/// success is judged against these values.
struct SessionTruth {
  int session_id = 0;
  int user_idx = 0;
  int server_idx = 0;
  protocol::SessionHandle rc_handle = 0;
  Digest sk_user{};
  Digest sk_server{};
  Block rn1{};
  Block rn2{};
  Block rn3{};
  Digest tmid{};
  Digest psid{};
  Digest hpr{};  // h(PSID_j || rn2)
  Block b_i{};
  Block sid{};
};

/// One tapped message plus the harness's private session label. The label
/// is ground truth for traceability scoring; eavesdrop() strips it.
struct TranscriptEntry {
  int session;
  adversary::TappedMessage tapped;
};

struct World {
  explicit World(std::uint64_t seed) : rng(seed) {}

  protocol::RegistrationCenterState rc;
  std::vector<protocol::MobileUserState> users;
  std::vector<protocol::EdgeServerState> servers;
  SimClock clock;
  crypto::SeededRng rng;
  std::vector<TranscriptEntry> transcript;
  std::vector<SessionTruth> ground_truth;
  std::uint64_t delta_t_ms = protocol::kDefaultFreshnessWindowMs;
  std::int64_t clock_skew_ms = 0;
  int session_counter = 0;
};

/// Registers n_users users and n_servers servers against a fresh RC.
/// Registration runs over the secure channel: nothing lands on the tap.
World make_world(std::uint64_t seed, int n_users, int n_servers,
                 std::uint64_t delta_t_ms = protocol::kDefaultFreshnessWindowMs,
                 std::int64_t clock_skew_ms = 0);

struct SessionOutcome {
  bool completed = false;
  std::optional<protocol::RejectReason> reject_reason;
  std::string reject_detail;
  std::optional<std::size_t> truth_index;  // into world.ground_truth
};

/// Drives one full session user->RC->server->RC->user, advancing the clock
/// one hop per delivery and logging all four messages on the tap. On
/// success appends a SessionTruth entry.
SessionOutcome run_honest_session(World& world, int user_idx, int server_idx);

/// The passive adversary's copy of the channel: messages in wire order,
/// session labels stripped.
adversary::EavesdropView eavesdrop(const World& world);

struct RunReport {
  ScenarioConfig config;
  bool verdict = false;       // all checks passed
  std::string expectation;    // what "verdict = true" demonstrates
  int sessions_completed = 0;
  int sessions_rejected = 0;
  std::map<std::string, bool> checks;
  std::vector<adversary::AttackReport> attack_reports;
  std::vector<std::string> detail_lines;
  std::vector<TranscriptEntry> transcript;
};

/// Runs one canned scenario. Throws std::invalid_argument on config
/// violations (n_sessions < 1, k_gap < 1, too few users).
RunReport run_scenario(const ScenarioConfig& config);

/// JSON-lines: one "run" object, then one line per attack report, then —
/// verbose only — one line per tapped message. Byte-identical for equal
/// configs.
std::string report_to_jsonl(const RunReport& report, bool verbose);

/// Human-readable rendering of the same content.
std::string report_to_text(const RunReport& report, bool verbose);

}  // namespace mecake::harness
