#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qpop/bytes.hpp"
#include "qpop/hash.hpp"

namespace qpop {

// Simulated-payments transaction: spends one input, identified by id.
struct Tx {
  uint64_t id = 0;
  uint64_t input = 0;
  bool operator==(const Tx&) const = default;
};
using Batch = std::vector<Tx>;

Bytes batch_encode(const Batch& b);
Digest batch_digest(const Batch& b);

enum class MsgKind : uint8_t {
  Propose,
  Prepare,
  Commit,
  Notify,
  ViewChange,
  ViewChangeBundle,
  NewView,
  Status,
  Repropose,
};

const char* msg_kind_name(MsgKind k);

// A canonical header plus the signer's key and signature over the header.
struct SignedHeader {
  Bytes header;
  Bytes pk;
  Bytes sig;
};

using Cert = std::vector<SignedHeader>;

// Steady-state and view-change headers share the (kind, c, v, s, h) layout;
// view-change fixes s = 0 and h = zero digest.
struct PbftHeader {
  MsgKind kind = MsgKind::Propose;
  uint64_t c = 0;
  uint64_t v = 0;
  uint64_t s = 0;
  Digest h{};
};

Bytes encode_pbft_header(const PbftHeader& hd);
std::optional<PbftHeader> parse_pbft_header(const Bytes& b);

// Status header. rank is the view number of the accept certificate;
// RANK_NONE when no value was accepted for next_slot.
inline constexpr uint64_t RANK_NONE = UINT64_MAX;

struct StatusHeader {
  uint64_t c = 0;
  uint64_t v = 0;
  uint64_t last_committed = 0;
  Digest h_committed{};  // zero digest when last_committed == 0
  uint64_t next_slot = 0;
  bool has_accept = false;
  Digest h_accepted{};
  uint64_t rank = RANK_NONE;
};

Bytes encode_status_header(const StatusHeader& sh);
std::optional<StatusHeader> parse_status_header(const Bytes& b);

// In-memory protocol message. The canonical encoding (msg_encode) is what
// event-log digests are computed over; signatures cover header bytes only.
struct Msg {
  MsgKind kind = MsgKind::Propose;
  SignedHeader sh;
  Batch batch;  // Propose and fresh-value Repropose carry the batch
  Cert cert;    // Notify: Q; NewView: V; Bundle: view-changes; Status: Q; Repropose: S
  Cert cert2;   // Repropose: Q*
  Cert cert3;   // Status: A; Repropose: A*
};

Bytes msg_encode(const Msg& m);
inline Digest msg_digest(const Msg& m) { return sha256(msg_encode(m)); }

using VerifyFn =
    std::function<bool(const Bytes& pk, const Bytes& msg, const Bytes& sig)>;

// All entries signed over exactly `expected` bytes by >= need distinct
// committee members.
bool validate_matching_cert(const Cert& cert, const Bytes& expected,
                            const std::vector<Bytes>& committee, size_t need,
                            const VerifyFn& verify);

// Validates a quorum certificate whose view is not known in advance: all
// entries carry one identical header of the given kind for (c, slot), with
// >= need distinct committee signers. Returns the parsed header.
std::optional<PbftHeader> validate_quorum_cert(const Cert& cert, MsgKind kind,
                                               uint64_t c, uint64_t slot,
                                               const std::vector<Bytes>& committee,
                                               size_t need,
                                               const VerifyFn& verify);

// Registration gossip payload.
struct RegistrationMsg {
  Bytes pk;
  uint64_t pos = 0;
  bool has_solution = false;
  uint64_t x = 0;
};

Bytes encode_registration(const RegistrationMsg& m);
std::optional<RegistrationMsg> parse_registration(const Bytes& b);

// Byzantine-agreement vote and the final publish bit for a CVPV candidate.
Bytes encode_ba_vote(const Digest& ctx, uint64_t phase, uint64_t round,
                     uint64_t bit);
struct BaVote {
  Digest ctx{};
  uint64_t phase = 0;
  uint64_t round = 0;
  uint64_t bit = 0;
};
std::optional<BaVote> parse_ba_vote(const Bytes& b);

Bytes encode_publish(const Digest& ctx, uint64_t bit);
struct PublishMsg {
  Digest ctx{};
  uint64_t bit = 0;
};
std::optional<PublishMsg> parse_publish(const Bytes& b);

}  // namespace qpop
