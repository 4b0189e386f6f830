#include "bnat/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "bnat/crc32.hpp"
#include "bytes.hpp"
#include "round_buffer.hpp"

namespace bnat {

namespace {

constexpr std::uint8_t kMagic[4] = {'B', 'N', 'C', 'D'};
constexpr std::uint8_t kVersion = 0x01;
constexpr std::uint8_t kMsgGradient = 0x01;
constexpr std::size_t kHeaderSize = 16; // magic..count
constexpr std::size_t kMinFrame = kHeaderSize + 4;

std::string list_ids(const std::vector<std::uint16_t>& ids) {
    std::ostringstream out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out << ", ";
        out << ids[i];
    }
    return out.str();
}

} // namespace

namespace detail {

void validate_wire_gradient(const std::vector<double>& gradient) {
    if (gradient.size() > std::numeric_limits<std::uint32_t>::max())
        throw ProtocolError("gradient too long for a frame");
    for (double g : gradient)
        if (!std::isfinite(g))
            throw NumericError("non-finite gradient entry refused at the wire");
}

RoundBuffer::RoundBuffer(std::vector<std::uint16_t> peer_ids) : peers_(std::move(peer_ids)) {
    std::sort(peers_.begin(), peers_.end());
}

void RoundBuffer::deliver(RoundMessage msg) {
    std::unique_lock lock(mu_);
    if (!std::binary_search(peers_.begin(), peers_.end(), msg.node_id))
        throw ProtocolError("message from unknown node " + std::to_string(msg.node_id));
    auto& round_box = pending_[msg.round];
    if (round_box.contains(msg.node_id))
        throw ProtocolError("duplicate message from node " + std::to_string(msg.node_id) +
                            " for round " + std::to_string(msg.round));
    round_box.emplace(msg.node_id, std::move(msg));
    cv_.notify_all();
}

void RoundBuffer::close_peer(std::uint16_t peer, std::exception_ptr reason) {
    {
        std::lock_guard lock(mu_);
        closed_.try_emplace(peer, std::move(reason));
    }
    cv_.notify_all();
}

std::vector<RoundMessage> RoundBuffer::gather(std::uint32_t round,
                                              std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    const auto complete = [&] { return pending_[round].size() == peers_.size(); };
    // the round is doomed once a message it still lacks belongs to a closed
    // peer; closures of peers that already delivered theirs don't matter
    const auto doomed_by = [&]() -> const std::exception_ptr* {
        const auto& round_box = pending_[round];
        for (const auto& [id, reason] : closed_)
            if (!round_box.contains(id)) return &reason;
        return nullptr;
    };
    if (!cv_.wait_for(lock, timeout, [&] { return complete() || doomed_by(); })) {
        std::vector<std::uint16_t> missing;
        const auto& round_box = pending_[round];
        for (std::uint16_t id : peers_)
            if (!round_box.contains(id)) missing.push_back(id);
        throw TimeoutError("round " + std::to_string(round) +
                           ": timed out waiting for node " + list_ids(missing));
    }
    if (!complete()) std::rethrow_exception(*doomed_by());
    auto node = pending_.extract(round);
    std::vector<RoundMessage> out;
    out.reserve(peers_.size());
    for (auto& [id, msg] : node.mapped()) out.push_back(std::move(msg));
    return out; // std::map iteration is node_id-ascending
}

} // namespace detail

std::vector<std::uint8_t> encode_message(const RoundMessage& msg) {
    detail::validate_wire_gradient(msg.gradient);
    std::vector<std::uint8_t> out;
    out.reserve(kMinFrame + 8 * msg.gradient.size());
    for (std::uint8_t b : kMagic) out.push_back(b);
    out.push_back(kVersion);
    out.push_back(kMsgGradient);
    detail::put_u32(out, msg.round);
    detail::put_u16(out, msg.node_id);
    detail::put_u32(out, static_cast<std::uint32_t>(msg.gradient.size()));
    for (double g : msg.gradient) detail::put_f64(out, g);
    detail::put_u32(out, crc32(out));
    return out;
}

RoundMessage decode_message(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw ProtocolError("incomplete frame: " +
                                              std::to_string(bytes.size()) + " bytes");
    for (std::size_t i = 0; i < 4; ++i)
        if (bytes[i] != kMagic[i]) throw ProtocolError("foreign protocol: bad magic");
    if (bytes.size() < kMinFrame)
        throw ProtocolError("incomplete frame: " + std::to_string(bytes.size()) + " bytes");
    if (bytes[4] != kVersion)
        throw ProtocolError("unsupported version " + std::to_string(bytes[4]));
    if (bytes[5] != kMsgGradient)
        throw ProtocolError("unknown message type " + std::to_string(bytes[5]));

    const std::uint32_t count = detail::get_u32(bytes, 12);
    const std::size_t expected = kMinFrame + std::size_t{8} * count;
    if (bytes.size() < expected)
        throw ProtocolError("incomplete frame: " + std::to_string(bytes.size()) +
                            " of " + std::to_string(expected) + " bytes");
    if (bytes.size() > expected)
        throw ProtocolError("corrupt frame: " + std::to_string(bytes.size() - expected) +
                            " trailing bytes");

    const std::uint32_t stored = detail::get_u32(bytes, expected - 4);
    if (stored != crc32(bytes.first(expected - 4)))
        throw ProtocolError("corrupt frame: CRC mismatch");

    RoundMessage msg;
    msg.round = detail::get_u32(bytes, 6);
    msg.node_id = detail::get_u16(bytes, 10);
    msg.gradient.resize(count);
    for (std::uint32_t i = 0; i < count; ++i)
        msg.gradient[i] = detail::get_f64(bytes, kHeaderSize + std::size_t{8} * i);
    return msg;
}

namespace {

struct BusCore {
    std::vector<std::uint16_t> ids;
    std::map<std::uint16_t, std::unique_ptr<detail::RoundBuffer>> inboxes;
};

class InProcEndpoint final : public Transport {
  public:
    InProcEndpoint(std::shared_ptr<BusCore> core, std::uint16_t id)
        : core_(std::move(core)), id_(id) {}

    void broadcast(const RoundMessage& msg) override {
        if (msg.node_id != id_)
            throw ProtocolError("broadcast from node " + std::to_string(id_) +
                                " carries node_id " + std::to_string(msg.node_id));
        detail::validate_wire_gradient(msg.gradient);
        for (auto& [dest, inbox] : core_->inboxes)
            if (dest != id_) inbox->deliver(msg);
    }

    std::vector<RoundMessage> gather(std::uint32_t round,
                                     std::chrono::milliseconds timeout) override {
        return core_->inboxes.at(id_)->gather(round, timeout);
    }

    std::uint16_t node_id() const override { return id_; }
    std::size_t peer_count() const override { return core_->ids.size() - 1; }

  private:
    std::shared_ptr<BusCore> core_;
    std::uint16_t id_;
};

} // namespace

std::vector<std::unique_ptr<Transport>> make_inproc_mesh(
    const std::vector<std::uint16_t>& node_ids) {
    if (node_ids.empty()) throw ConfigError("mesh: need at least one node");
    auto core = std::make_shared<BusCore>();
    core->ids = node_ids;
    for (std::uint16_t id : node_ids) {
        std::vector<std::uint16_t> peers;
        for (std::uint16_t other : node_ids)
            if (other != id) peers.push_back(other);
        auto [it, fresh] =
            core->inboxes.emplace(id, std::make_unique<detail::RoundBuffer>(std::move(peers)));
        if (!fresh) throw ConfigError("mesh: duplicate node id " + std::to_string(id));
    }
    std::vector<std::unique_ptr<Transport>> endpoints;
    endpoints.reserve(node_ids.size());
    for (std::uint16_t id : node_ids)
        endpoints.push_back(std::make_unique<InProcEndpoint>(core, id));
    return endpoints;
}

} // namespace bnat
