#include "qpop/wire.hpp"

#include <cstring>
#include <set>
#include <unordered_set>

namespace qpop {

namespace {

struct Dec {
  const Bytes& in;
  size_t off = 0;

  std::optional<Bytes> field() {
    if (off + 4 > in.size()) return std::nullopt;
    uint32_t len = (uint32_t(in[off]) << 24) | (uint32_t(in[off + 1]) << 16) |
                   (uint32_t(in[off + 2]) << 8) | uint32_t(in[off + 3]);
    off += 4;
    if (off + len > in.size()) return std::nullopt;
    Bytes out(in.begin() + off, in.begin() + off + len);
    off += len;
    return out;
  }

  std::optional<uint64_t> u64() {
    auto f = field();
    if (!f || f->size() != 8) return std::nullopt;
    return get_u64be(f->data());
  }

  std::optional<Digest> digest() {
    auto f = field();
    if (!f || f->size() != 32) return std::nullopt;
    Digest d;
    std::memcpy(d.data(), f->data(), 32);
    return d;
  }

  bool done() const { return off == in.size(); }
};

}  // namespace

Bytes batch_encode(const Batch& b) {
  Enc e;
  e.str("batch").u64(b.size());
  for (const Tx& tx : b) e.u64(tx.id).u64(tx.input);
  return e.out;
}

Digest batch_digest(const Batch& b) { return sha256(batch_encode(b)); }

const char* msg_kind_name(MsgKind k) {
  switch (k) {
    case MsgKind::Propose: return "propose";
    case MsgKind::Prepare: return "prepare";
    case MsgKind::Commit: return "commit";
    case MsgKind::Notify: return "notify";
    case MsgKind::ViewChange: return "view-change";
    case MsgKind::ViewChangeBundle: return "view-change-bundle";
    case MsgKind::NewView: return "new-view";
    case MsgKind::Status: return "status";
    case MsgKind::Repropose: return "repropose";
  }
  return "unknown";
}

Bytes encode_pbft_header(const PbftHeader& hd) {
  Enc e;
  e.str(msg_kind_name(hd.kind)).u64(hd.c).u64(hd.v).u64(hd.s).bytes(hd.h);
  return e.out;
}

std::optional<PbftHeader> parse_pbft_header(const Bytes& b) {
  Dec d{b};
  auto kind = d.field();
  auto c = d.u64();
  auto v = d.u64();
  auto s = d.u64();
  auto h = d.digest();
  if (!kind || !c || !v || !s || !h || !d.done()) return std::nullopt;
  std::string k(kind->begin(), kind->end());
  PbftHeader out;
  if (k == "propose") out.kind = MsgKind::Propose;
  else if (k == "prepare") out.kind = MsgKind::Prepare;
  else if (k == "commit") out.kind = MsgKind::Commit;
  else if (k == "notify") out.kind = MsgKind::Notify;
  else if (k == "view-change") out.kind = MsgKind::ViewChange;
  else if (k == "new-view") out.kind = MsgKind::NewView;
  else if (k == "repropose") out.kind = MsgKind::Repropose;
  else return std::nullopt;
  out.c = *c;
  out.v = *v;
  out.s = *s;
  out.h = *h;
  return out;
}

Bytes encode_status_header(const StatusHeader& sh) {
  Enc e;
  e.str("status")
      .u64(sh.c)
      .u64(sh.v)
      .u64(sh.last_committed)
      .bytes(sh.h_committed)
      .u64(sh.next_slot)
      .u64(sh.has_accept ? 1 : 0)
      .bytes(sh.h_accepted)
      .u64(sh.rank);
  return e.out;
}

std::optional<StatusHeader> parse_status_header(const Bytes& b) {
  Dec d{b};
  auto kind = d.field();
  auto c = d.u64();
  auto v = d.u64();
  auto lc = d.u64();
  auto hc = d.digest();
  auto ns = d.u64();
  auto ha = d.u64();
  auto hacc = d.digest();
  auto rank = d.u64();
  if (!kind || !c || !v || !lc || !hc || !ns || !ha || !hacc || !rank ||
      !d.done()) {
    return std::nullopt;
  }
  if (std::string(kind->begin(), kind->end()) != "status") return std::nullopt;
  if (*ha > 1) return std::nullopt;
  StatusHeader out;
  out.c = *c;
  out.v = *v;
  out.last_committed = *lc;
  out.h_committed = *hc;
  out.next_slot = *ns;
  out.has_accept = *ha == 1;
  out.h_accepted = *hacc;
  out.rank = *rank;
  return out;
}

static void encode_cert(Enc& e, const Cert& cert) {
  e.u64(cert.size());
  for (const auto& sh : cert) e.bytes(sh.header).bytes(sh.pk).bytes(sh.sig);
}

Bytes msg_encode(const Msg& m) {
  Enc e;
  e.str("msg").str(msg_kind_name(m.kind));
  e.bytes(m.sh.header).bytes(m.sh.pk).bytes(m.sh.sig);
  e.bytes(batch_encode(m.batch));
  encode_cert(e, m.cert);
  encode_cert(e, m.cert2);
  encode_cert(e, m.cert3);
  return e.out;
}

bool validate_matching_cert(const Cert& cert, const Bytes& expected,
                            const std::vector<Bytes>& committee, size_t need,
                            const VerifyFn& verify) {
  if (cert.size() < need) return false;
  std::set<Bytes> signers;
  for (const auto& sh : cert) {
    if (sh.header != expected) return false;
    bool member = false;
    for (const auto& pk : committee) {
      if (pk == sh.pk) {
        member = true;
        break;
      }
    }
    if (!member) return false;
    if (!signers.insert(sh.pk).second) return false;
    if (!verify(sh.pk, sh.header, sh.sig)) return false;
  }
  return signers.size() >= need;
}

std::optional<PbftHeader> validate_quorum_cert(
    const Cert& cert, MsgKind kind, uint64_t c, uint64_t slot,
    const std::vector<Bytes>& committee, size_t need, const VerifyFn& verify) {
  if (cert.empty()) return std::nullopt;
  auto hd = parse_pbft_header(cert[0].header);
  if (!hd || hd->kind != kind || hd->c != c || hd->s != slot) {
    return std::nullopt;
  }
  if (!validate_matching_cert(cert, cert[0].header, committee, need, verify)) {
    return std::nullopt;
  }
  return hd;
}

Bytes encode_registration(const RegistrationMsg& m) {
  Enc e;
  e.str("register").bytes(m.pk).u64(m.pos).u64(m.has_solution ? 1 : 0).u64(m.x);
  return e.out;
}

std::optional<RegistrationMsg> parse_registration(const Bytes& b) {
  Dec d{b};
  auto kind = d.field();
  auto pk = d.field();
  auto pos = d.u64();
  auto has = d.u64();
  auto x = d.u64();
  if (!kind || !pk || !pos || !has || !x || !d.done()) return std::nullopt;
  if (std::string(kind->begin(), kind->end()) != "register") return std::nullopt;
  if (*has > 1) return std::nullopt;
  RegistrationMsg out;
  out.pk = *pk;
  out.pos = *pos;
  out.has_solution = *has == 1;
  out.x = *x;
  return out;
}

Bytes encode_ba_vote(const Digest& ctx, uint64_t phase, uint64_t round,
                     uint64_t bit) {
  Enc e;
  e.str("ba-vote").bytes(ctx).u64(phase).u64(round).u64(bit);
  return e.out;
}

std::optional<BaVote> parse_ba_vote(const Bytes& b) {
  Dec d{b};
  auto kind = d.field();
  auto ctx = d.digest();
  auto phase = d.u64();
  auto round = d.u64();
  auto bit = d.u64();
  if (!kind || !ctx || !phase || !round || !bit || !d.done()) {
    return std::nullopt;
  }
  if (std::string(kind->begin(), kind->end()) != "ba-vote") return std::nullopt;
  return BaVote{*ctx, *phase, *round, *bit};
}

Bytes encode_publish(const Digest& ctx, uint64_t bit) {
  Enc e;
  e.str("publish").bytes(ctx).u64(bit);
  return e.out;
}

std::optional<PublishMsg> parse_publish(const Bytes& b) {
  Dec d{b};
  auto kind = d.field();
  auto ctx = d.digest();
  auto bit = d.u64();
  if (!kind || !ctx || !bit || !d.done()) return std::nullopt;
  if (std::string(kind->begin(), kind->end()) != "publish") return std::nullopt;
  return PublishMsg{*ctx, *bit};
}

}  // namespace qpop
