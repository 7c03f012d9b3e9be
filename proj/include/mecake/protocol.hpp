#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "mecake/crypto.hpp"

// Three-party authentication and key establishment: a mobile user logs in
// against a smart card, a registration center (RC) mediates, and an edge
// server ends up sharing a session key with the user. Four messages cross
// the public channel per session:
//
//   user --M1--> RC --M2--> server --M3--> RC --M4--> user
//
// All masking is XOR against single-use hash digests; all authentication is
// digest comparison. The RC holds the only long-term master secret.
namespace mecake::protocol {

using crypto::Block;
using crypto::ByteView;
using crypto::Digest;
using crypto::Nonce;
using crypto::Timestamp;

inline constexpr std::uint64_t kDefaultFreshnessWindowMs = 2000;

// ---------------------------------------------------------------------------
// Identities
// ---------------------------------------------------------------------------

struct UserIdentity {
  Block bytes{};
  auto operator<=>(const UserIdentity&) const = default;
};

struct ServerIdentity {
  Block bytes{};
  auto operator<=>(const ServerIdentity&) const = default;
};

UserIdentity make_user_identity(std::string_view name);
ServerIdentity make_server_identity(std::string_view name);

// ---------------------------------------------------------------------------
// Party state
// ---------------------------------------------------------------------------

/// What the RC keeps per registered user, keyed by the public pseudonym
/// mask B_i (the only value available when M1 arrives).
struct UserRecord {
  Block b_i{};
  Nonce x_i{};
};

/// What the RC keeps per registered server, keyed by the server identity.
struct ServerRecord {
  Block f_j{};
  Digest psid_j{};
  Nonce x_j{};
};

/// Per-session state the RC must carry from M1 to M3 of one session.
struct RcSessionRecord {
  Digest tmid_i{};
  ServerIdentity sid_j;
  Block rn1{};
  Nonce rn2{};
  Digest psid_j{};
  Timestamp ts_u;
  bool completed = false;
};

using SessionHandle = std::uint64_t;

struct RegistrationCenterState {
  Nonce master_secret{};  // never crosses the wire in the clear
  std::map<Block, UserRecord> user_table;
  std::map<Block, ServerRecord> server_table;
  std::map<SessionHandle, RcSessionRecord> sessions;
  SessionHandle next_handle = 1;
};

RegistrationCenterState make_registration_center(crypto::SeededRng& rng);

/// Highest live session handle, for the single-outstanding-session mode
/// where the caller does not track handles itself.
std::optional<SessionHandle> latest_session_handle(
    const RegistrationCenterState& rc);

/// Drops a session record once nobody needs it anymore.
void retire_session(RegistrationCenterState& rc, SessionHandle handle);

/// Issued at registration, before the user personalizes the card.
struct CardStub {
  Digest tmid{};
  Block b_i{};
};

/// The personalized token: everything a cardholder needs for local login
/// plus the public values that ride in M1.
struct SmartCard {
  Block tmid_star{};
  Block b_i{};
  Block c_i{};
  Digest auth_i{};
  Block tau_i{};
};

struct ServerSession {
  Block rn3{};
  Digest sk{};
};

struct EdgeServerState {
  ServerIdentity sid;
  Digest k_s{};  // h(SID_j || R_S), shared with the RC at registration
  Nonce r_j{};
  std::optional<ServerSession> session;
};

struct UserSession {
  Block rn1{};
  Digest tmid{};
  ServerIdentity target;
};

struct MobileUserState {
  UserIdentity mid;
  crypto::Bytes pw;
  crypto::Bytes bio;
  SmartCard card;
  std::optional<UserSession> session;
};

// ---------------------------------------------------------------------------
// Wire messages
// ---------------------------------------------------------------------------

struct MessageM1 {
  Block rn1_masked{};
  Block b_i{};
  Block d1{};
  Digest d2{};
  Timestamp ts_u;
  auto operator<=>(const MessageM1&) const = default;
};

struct MessageM2 {
  Block rn1_masked{};
  Timestamp ts_rc;
  Block tmid_masked{};
  Block d3{};
  Digest d4{};
  auto operator<=>(const MessageM2&) const = default;
};

struct MessageM3 {
  Timestamp ts_ms;
  Block rn3_masked{};
  Digest d5{};
  Digest d6{};
  auto operator<=>(const MessageM3&) const = default;
};

struct MessageM4 {
  Timestamp t4;
  Block rn3_masked{};
  Digest d6{};
  Block d7{};
  Digest d8{};
  auto operator<=>(const MessageM4&) const = default;
};

using WireMessage = std::variant<MessageM1, MessageM2, MessageM3, MessageM4>;

// ---------------------------------------------------------------------------
// Step outcomes
// ---------------------------------------------------------------------------

enum class RejectReason { freshness, auth, unknown_user, unknown_server };

std::string_view reject_reason_name(RejectReason reason);

struct Reject {
  RejectReason reason;
  std::string detail;
};

/// Either the step's product or a typed rejection. Precondition violations
/// (unknown handles, empty inputs) throw instead; rejections are protocol
/// outcomes.
template <typename T>
class StepResult {
 public:
  StepResult(T value) : state_(std::move(value)) {}
  StepResult(Reject reject) : state_(std::move(reject)) {}

  bool ok() const { return std::holds_alternative<T>(state_); }
  explicit operator bool() const { return ok(); }

  const T& value() const {
    if (!ok())
      throw std::logic_error("StepResult::value on rejected step: " +
                             std::get<Reject>(state_).detail);
    return std::get<T>(state_);
  }

  const Reject& reject() const {
    if (ok()) throw std::logic_error("StepResult::reject on accepted step");
    return std::get<Reject>(state_);
  }

 private:
  std::variant<T, Reject> state_;
};

// ---------------------------------------------------------------------------
// Registration (secure channel; never on the eavesdropper's tap)
// ---------------------------------------------------------------------------

/// RC side of user registration: issues the pseudonym TMID_i = h(MID_i||r_i)
/// masked as B_i = TMID_i ^ h(R_S||x_i), and remembers {B_i, x_i}.
CardStub register_user(RegistrationCenterState& rc, const UserIdentity& mid,
                       crypto::SeededRng& rng);

/// User side of registration: binds password and biometric into the card.
/// Stores {TMID_i*, B_i, C_i, Auth_i, tau_i}; the bare TMID_i is replaced by
/// its masked form TMID_i* = TMID_i ^ h(n_i||PW||sigma).
SmartCard personalize_card(const CardStub& stub, const UserIdentity& mid,
                           ByteView pw, ByteView bio, crypto::SeededRng& rng);

/// Registers an edge server: RC keeps {F_j, PSID_j, x_j}, the server takes
/// away {K_s, r_j}.
EdgeServerState register_server(RegistrationCenterState& rc,
                                const ServerIdentity& sid,
                                crypto::SeededRng& rng);

// ---------------------------------------------------------------------------
// Login and key establishment (public channel)
// ---------------------------------------------------------------------------

/// Card login plus M1 construction. Wrong password or biometric fails the
/// Auth_i check and no message is emitted.
StepResult<MessageM1> user_begin_session(MobileUserState& user,
                                         ByteView pw_input, ByteView bio_input,
                                         const ServerIdentity& target,
                                         Timestamp now, crypto::SeededRng& rng);

struct RcChallenge {
  MessageM2 m2;
  SessionHandle handle;
};

/// RC processing of M1: freshness, user lookup by B_i, D2 verification,
/// then M2 toward the recovered target server.
StepResult<RcChallenge> rc_handle_m1(RegistrationCenterState& rc,
                                     const MessageM1& m1, Timestamp now,
                                     crypto::SeededRng& rng,
                                     std::uint64_t delta_t_ms);

struct ServerAccept {
  MessageM3 m3;
  Digest sk{};
};

/// Server processing of M2: D4 verification, session key derivation, M3.
/// Note the server learns the user's long-term pseudonym TMID_i here; the
/// protocol gives it no shorter-lived substitute.
StepResult<ServerAccept> server_handle_m2(EdgeServerState& server,
                                          const MessageM2& m2, Timestamp now,
                                          crypto::SeededRng& rng,
                                          std::uint64_t delta_t_ms);

/// RC processing of M3: D5 verification, then M4 toward the user. The
/// session record stays around (flagged completed) until retired.
StepResult<MessageM4> rc_handle_m3(RegistrationCenterState& rc,
                                   SessionHandle handle, const MessageM3& m3,
                                   Timestamp now, std::uint64_t delta_t_ms);

/// User processing of M4: D8 verification, key derivation, D6 confirmation.
/// On success returns SK and clears the ephemeral session state.
StepResult<Digest> user_handle_m4(MobileUserState& user, const MessageM4& m4,
                                  Timestamp now, std::uint64_t delta_t_ms);

}  // namespace mecake::protocol
