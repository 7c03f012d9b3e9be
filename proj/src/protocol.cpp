#include "mecake/protocol.hpp"

#include <utility>

namespace mecake::protocol {

using crypto::encode;
using crypto::fresh_nonce;
using crypto::fuzzy_gen;
using crypto::fuzzy_rep;
using crypto::h;
using crypto::pad_to_block;
using crypto::xor_mask;

namespace {

ByteView view(const Block& b) { return ByteView(b.data(), b.size()); }

}  // namespace

UserIdentity make_user_identity(std::string_view name) {
  return UserIdentity{pad_to_block(crypto::as_bytes(name))};
}

ServerIdentity make_server_identity(std::string_view name) {
  return ServerIdentity{pad_to_block(crypto::as_bytes(name))};
}

std::string_view reject_reason_name(RejectReason reason) {
  switch (reason) {
    case RejectReason::freshness:
      return "freshness";
    case RejectReason::auth:
      return "auth";
    case RejectReason::unknown_user:
      return "unknown_user";
    case RejectReason::unknown_server:
      return "unknown_server";
  }
  throw std::logic_error("unreachable reject reason");
}

RegistrationCenterState make_registration_center(crypto::SeededRng& rng) {
  RegistrationCenterState rc;
  rc.master_secret = fresh_nonce(rng);
  return rc;
}

std::optional<SessionHandle> latest_session_handle(
    const RegistrationCenterState& rc) {
  if (rc.sessions.empty()) return std::nullopt;
  return rc.sessions.rbegin()->first;
}

void retire_session(RegistrationCenterState& rc, SessionHandle handle) {
  if (rc.sessions.erase(handle) == 0)
    throw std::invalid_argument("retire_session: unknown handle");
}

CardStub register_user(RegistrationCenterState& rc, const UserIdentity& mid,
                       crypto::SeededRng& rng) {
  const Nonce r_i = fresh_nonce(rng);
  const Nonce x_i = fresh_nonce(rng);
  const Digest tmid = h({view(mid.bytes), view(r_i)});
  const Block b_i = xor_mask(tmid, h({view(rc.master_secret), view(x_i)}));
  rc.user_table[b_i] = UserRecord{b_i, x_i};
  return CardStub{tmid, b_i};
}

SmartCard personalize_card(const CardStub& stub, const UserIdentity& mid,
                           ByteView pw, ByteView bio, crypto::SeededRng& rng) {
  if (pw.empty()) throw std::invalid_argument("personalize_card: empty pw");
  const Nonce n_i = fresh_nonce(rng);
  const auto [sigma, tau] = fuzzy_gen(bio, rng);
  SmartCard card;
  card.c_i = xor_mask(n_i, h({view(mid.bytes), pw, view(sigma)}));
  card.auth_i = h({view(mid.bytes), pw, view(sigma), view(n_i)});
  card.tmid_star = xor_mask(stub.tmid, h({view(n_i), pw, view(sigma)}));
  card.b_i = stub.b_i;
  card.tau_i = tau;
  return card;
}

EdgeServerState register_server(RegistrationCenterState& rc,
                                const ServerIdentity& sid,
                                crypto::SeededRng& rng) {
  const Nonce r_j = fresh_nonce(rng);
  const Nonce x_j = fresh_nonce(rng);
  const Digest psid_j = h({view(sid.bytes), view(r_j)});
  const Digest q_j = h({view(sid.bytes), view(x_j)});
  const Block f_j = xor_mask(r_j, q_j);
  rc.server_table[sid.bytes] = ServerRecord{f_j, psid_j, x_j};
  EdgeServerState server;
  server.sid = sid;
  server.k_s = h({view(sid.bytes), view(rc.master_secret)});
  server.r_j = r_j;
  return server;
}

StepResult<MessageM1> user_begin_session(MobileUserState& user,
                                         ByteView pw_input, ByteView bio_input,
                                         const ServerIdentity& target,
                                         Timestamp now,
                                         crypto::SeededRng& rng) {
  // Local login: rebuild sigma from the noisy biometric, unmask n_i, check
  // Auth_i before anything touches the network.
  const Digest sigma = fuzzy_rep(bio_input, user.card.tau_i);
  const Block n_i =
      xor_mask(user.card.c_i, h({view(user.mid.bytes), pw_input, view(sigma)}));
  const Digest auth_check =
      h({view(user.mid.bytes), pw_input, view(sigma), view(n_i)});
  if (auth_check != user.card.auth_i)
    return Reject{RejectReason::auth, "card login failed"};

  const Digest tmid =
      xor_mask(user.card.tmid_star, h({view(n_i), pw_input, view(sigma)}));

  const Block rn1 = fresh_nonce(rng);
  const auto ts = encode(now);

  MessageM1 m1;
  m1.rn1_masked = xor_mask(rn1, h({view(target.bytes), view(tmid)}));
  m1.b_i = user.card.b_i;
  m1.d1 = xor_mask(target.bytes, h({view(tmid), ByteView(ts)}));
  m1.d2 = h({view(target.bytes), view(tmid), view(rn1), ByteView(ts)});
  m1.ts_u = now;

  user.session = UserSession{rn1, tmid, target};
  return m1;
}

StepResult<RcChallenge> rc_handle_m1(RegistrationCenterState& rc,
                                     const MessageM1& m1, Timestamp now,
                                     crypto::SeededRng& rng,
                                     std::uint64_t delta_t_ms) {
  if (!crypto::check_freshness(m1.ts_u, now, delta_t_ms))
    return Reject{RejectReason::freshness, "m1 timestamp outside window"};

  const auto user_it = rc.user_table.find(m1.b_i);
  if (user_it == rc.user_table.end())
    return Reject{RejectReason::unknown_user, "b_i not registered"};
  const UserRecord& user = user_it->second;

  const Digest tmid =
      xor_mask(m1.b_i, h({view(rc.master_secret), view(user.x_i)}));
  const auto ts_u = encode(m1.ts_u);
  const Block sid = xor_mask(m1.d1, h({view(tmid), ByteView(ts_u)}));
  const Block rn1 = xor_mask(m1.rn1_masked, h({view(sid), view(tmid)}));

  const Digest d2_check =
      h({view(sid), view(tmid), view(rn1), ByteView(ts_u)});
  if (d2_check != m1.d2) return Reject{RejectReason::auth, "m1 d2 mismatch"};

  const auto server_it = rc.server_table.find(sid);
  if (server_it == rc.server_table.end())
    return Reject{RejectReason::unknown_server, "recovered sid not registered"};
  const ServerRecord& server = server_it->second;

  const Nonce rn2 = fresh_nonce(rng);
  const Digest hpr = h({view(server.psid_j), view(rn2)});
  const Digest k_s = h({view(sid), view(rc.master_secret)});
  const Block r_j = xor_mask(server.f_j, h({view(sid), view(server.x_j)}));
  const auto ts_rc = encode(now);

  MessageM2 m2;
  m2.rn1_masked = m1.rn1_masked;
  m2.ts_rc = now;
  m2.tmid_masked = xor_mask(h({view(server.psid_j), view(r_j)}), tmid);
  m2.d3 = xor_mask(hpr, h({view(k_s)}));
  m2.d4 = h({view(hpr), view(sid), ByteView(ts_rc)});

  const SessionHandle handle = rc.next_handle++;
  rc.sessions[handle] = RcSessionRecord{
      tmid, ServerIdentity{sid}, rn1, rn2, server.psid_j, m1.ts_u, false};
  return RcChallenge{m2, handle};
}

StepResult<ServerAccept> server_handle_m2(EdgeServerState& server,
                                          const MessageM2& m2, Timestamp now,
                                          crypto::SeededRng& rng,
                                          std::uint64_t delta_t_ms) {
  if (!crypto::check_freshness(m2.ts_rc, now, delta_t_ms))
    return Reject{RejectReason::freshness, "m2 timestamp outside window"};

  const Digest hpr = xor_mask(m2.d3, h({view(server.k_s)}));
  const auto ts_rc = encode(m2.ts_rc);
  const Digest d4_check = h({view(hpr), view(server.sid.bytes), ByteView(ts_rc)});
  if (d4_check != m2.d4) return Reject{RejectReason::auth, "m2 d4 mismatch"};

  const Digest psid = h({view(server.sid.bytes), view(server.r_j)});
  const Digest tmid = xor_mask(m2.tmid_masked, h({view(psid), view(server.r_j)}));
  const Block rn1 =
      xor_mask(m2.rn1_masked, h({view(server.sid.bytes), view(tmid)}));

  const Block rn3 = fresh_nonce(rng);
  const Digest sk = h({view(hpr), view(rn1), view(rn3), view(tmid)});
  const auto ts_ms = encode(now);

  MessageM3 m3;
  m3.ts_ms = now;
  m3.rn3_masked = xor_mask(rn3, h({view(rn1), view(server.sid.bytes)}));
  m3.d5 = h({view(rn1), view(rn3), ByteView(ts_ms)});
  m3.d6 = h({view(sk), view(hpr), view(rn1)});

  server.session = ServerSession{rn3, sk};
  return ServerAccept{m3, sk};
}

StepResult<MessageM4> rc_handle_m3(RegistrationCenterState& rc,
                                   SessionHandle handle, const MessageM3& m3,
                                   Timestamp now, std::uint64_t delta_t_ms) {
  const auto it = rc.sessions.find(handle);
  if (it == rc.sessions.end())
    throw std::invalid_argument("rc_handle_m3: unknown session handle");
  RcSessionRecord& session = it->second;

  if (!crypto::check_freshness(m3.ts_ms, now, delta_t_ms))
    return Reject{RejectReason::freshness, "m3 timestamp outside window"};

  const Block rn3 = xor_mask(
      m3.rn3_masked, h({view(session.rn1), view(session.sid_j.bytes)}));
  const auto ts_ms = encode(m3.ts_ms);
  const Digest d5_check = h({view(session.rn1), view(rn3), ByteView(ts_ms)});
  if (d5_check != m3.d5) return Reject{RejectReason::auth, "m3 d5 mismatch"};

  const Digest hpr = h({view(session.psid_j), view(session.rn2)});
  const auto t4 = encode(now);

  MessageM4 m4;
  m4.t4 = now;
  m4.rn3_masked = m3.rn3_masked;
  m4.d6 = m3.d6;
  m4.d7 = xor_mask(hpr, h({view(session.rn1), view(session.tmid_i)}));
  m4.d8 = h({view(hpr), view(rn3), ByteView(t4)});

  session.completed = true;  // record kept until retire_session
  return m4;
}

StepResult<Digest> user_handle_m4(MobileUserState& user, const MessageM4& m4,
                                  Timestamp now, std::uint64_t delta_t_ms) {
  if (!user.session)
    throw std::logic_error("user_handle_m4: no session in progress");
  const UserSession& session = *user.session;

  if (!crypto::check_freshness(m4.t4, now, delta_t_ms))
    return Reject{RejectReason::freshness, "m4 timestamp outside window"};

  const Block rn3 = xor_mask(
      m4.rn3_masked, h({view(session.rn1), view(session.target.bytes)}));
  const Digest hpr =
      xor_mask(m4.d7, h({view(session.rn1), view(session.tmid)}));
  const auto t4 = encode(m4.t4);
  const Digest d8_check = h({view(hpr), view(rn3), ByteView(t4)});
  if (d8_check != m4.d8) return Reject{RejectReason::auth, "m4 d8 mismatch"};

  const Digest sk =
      h({view(hpr), view(session.rn1), view(rn3), view(session.tmid)});
  const Digest d6_check = h({view(sk), view(hpr), view(session.rn1)});
  if (d6_check != m4.d6)
    return Reject{RejectReason::auth, "m4 d6 key confirmation failed"};

  user.session.reset();
  return sk;
}

}  // namespace mecake::protocol
