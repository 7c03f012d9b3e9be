#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mecake/protocol.hpp"

// Adversary toolkit. Everything here works from what a real attacker in the
// threat model holds: messages copied off the public channel, plus — for the
// insider attacks — one party's own legitimate state. Nothing reaches into
// another party's private fields; ground truth for judging success is
// supplied from outside via finalize_report().
namespace mecake::adversary {

using crypto::Block;
using crypto::Digest;
using crypto::Timestamp;
using protocol::MessageM1;
using protocol::MessageM2;
using protocol::MessageM4;
using protocol::ServerIdentity;
using protocol::WireMessage;

// ---------------------------------------------------------------------------
// Passive channel tap
// ---------------------------------------------------------------------------

enum class Direction { user_to_rc, rc_to_server, server_to_rc, rc_to_user };

std::string_view direction_name(Direction dir);

struct TappedMessage {
  Direction dir;
  WireMessage msg;
};

/// Every message that crossed the public channel, in wire order, with hop
/// direction but no party names — exactly a passive eavesdropper's haul.
struct EavesdropView {
  std::vector<TappedMessage> messages;
};

// ---------------------------------------------------------------------------
// Attack reports
// ---------------------------------------------------------------------------

/// Outcome of one attack run. `recovered` maps value names to hex strings
/// the adversary derived on its own; `ground_truth_comparison` is filled in
/// afterwards by comparing against the honest parties' actual values.
struct AttackReport {
  std::string attack_name;
  bool success = false;
  std::map<std::string, std::string> recovered;
  std::map<std::string, bool> ground_truth_comparison;
  std::vector<std::string> notes;
};

/// Judges a report: every recovered value must equal the corresponding
/// ground-truth entry, and there must be at least one. Truth keys with no
/// recovered counterpart are ignored; recovered keys missing from `truth`
/// count as failures.
void finalize_report(AttackReport& report,
                     const std::map<std::string, std::string>& truth);

nlohmann::json to_json(const AttackReport& report);

// ---------------------------------------------------------------------------
// Malicious-but-registered edge server
// ---------------------------------------------------------------------------

struct ForgedSession {
  Block rn1{};
  ServerIdentity target;
};

/// A legitimately registered server gone rogue: its own credentials plus
/// whatever it has squirreled away from sessions it served.
struct MaliciousServerMemory {
  protocol::EdgeServerState self;
  std::optional<Digest> retained_tmid;
  std::optional<ForgedSession> forged;
};

/// The insider step: any server that handles M2 can unmask the user's
/// long-term pseudonym with nothing but its own registration values.
/// Records the result in `mem.retained_tmid` and returns it.
Digest recover_tmid_from_m2(MaliciousServerMemory& mem, const MessageM2& m2);

/// One fully recovered later session of the victim, computed from a single
/// (M1, M4) pair plus the retained pseudonym.
struct KcRecovery {
  Block sid_star{};
  Block rn1_star{};
  Digest hpr_star{};  // h(PSID_j || rn2) of the later session
  Block rn3_star{};
  Digest sk_star{};
};

/// Session-key computation from eavesdropped M1*/M4* of a session the
/// attacker did not serve. Pure derivation; no trial-and-error.
KcRecovery kc_derive(const Digest& tmid, const MessageM1& m1,
                     const MessageM4& m4);

/// kc_derive wrapped into a report with the standard value names
/// (sid_j_star, rn1_star, h_psid_rn2_star, rn3_star, sk_star).
AttackReport kc_attack(const MaliciousServerMemory& mem, const MessageM1& m1,
                       const MessageM4& m4);

/// Streaming version: feed the tap in wire order. M1s carrying the victim's
/// B_i are partially solved immediately; each M4 is tested against pending
/// partials via its own D8 check, so interleaved foreign sessions do not
/// confuse the pairing.
class KcObserver {
 public:
  KcObserver(Digest tmid, Block victim_b_i);

  void observe(const TappedMessage& tapped);
  void observe_all(const EavesdropView& view);

  const std::vector<KcRecovery>& recovered() const { return recovered_; }

 private:
  struct Partial {
    MessageM1 m1;
    Block sid{};
    Block rn1{};
  };

  Digest tmid_;
  Block victim_b_i_;
  std::vector<Partial> pending_;
  std::vector<KcRecovery> recovered_;
};

// ---------------------------------------------------------------------------
// User impersonation
// ---------------------------------------------------------------------------

/// Forges a syntactically and cryptographically valid M1 for the victim's
/// card (public B_i + retained pseudonym), aimed at `target`. Remembers the
/// forged session so the handshake can be completed later. Throws
/// std::logic_error if no pseudonym has been retained yet.
MessageM1 impersonate_user(MaliciousServerMemory& mem, const Block& victim_b_i,
                           const ServerIdentity& target, Timestamp now,
                           crypto::SeededRng& rng);

struct ForgedOutcome {
  Digest sk{};
  bool d8_valid = false;
  bool d6_valid = false;
};

/// Finishes the forged handshake from the M4 the registration center sent
/// back, deriving the session key the duped server now shares with the
/// attacker. Throws std::logic_error without a pending forged session.
ForgedOutcome complete_forged_session(MaliciousServerMemory& mem,
                                      const MessageM4& m4);

// ---------------------------------------------------------------------------
// Traceability
// ---------------------------------------------------------------------------

struct LinkageGroup {
  Block b_i{};
  std::vector<std::size_t> message_indices;  // positions of M1s in the view
};

/// Clusters the tap's M1 messages by their B_i field. Because B_i never
/// changes between sessions, the clusters recover which sessions belong to
/// the same card — from public data alone. Groups appear in order of first
/// sighting.
std::vector<LinkageGroup> link_sessions(const EavesdropView& view);

// ---------------------------------------------------------------------------
// Honest-but-curious registration center
// ---------------------------------------------------------------------------

/// The RC's own session record plus the rn3 mask from M3/M4 is enough to
/// unmask rn3...
Block rc_recover_rn3(const protocol::RcSessionRecord& record,
                     const Block& rn3_masked);

/// ...and with rn3 the RC holds every input to the session key.
Digest curious_rc_compute_sk(const protocol::RcSessionRecord& record,
                             const Block& rn3);

}  // namespace mecake::adversary
