#pragma once

#include <condition_variable>
#include <exception>
#include <map>
#include <mutex>
#include <vector>

#include "bnat/transport.hpp"

namespace bnat::detail {

/// One node's inbox: messages keyed by (round, sender). deliver runs on
/// sender or reader threads, gather on the owning node's thread. Closing a
/// peer dooms only the rounds still missing that peer's message: streams
/// deliver in order, so everything a peer sent before closing has already
/// arrived, and frames in flight from the others may still complete a round
/// after the closure is posted.
class RoundBuffer {
  public:
    explicit RoundBuffer(std::vector<std::uint16_t> peer_ids);

    /// Throws ProtocolError for unknown senders and duplicate
    /// (round, sender) pairs.
    void deliver(RoundMessage msg);

    /// Marks `peer` as unable to deliver anything further; `reason` is
    /// rethrown by every gather left waiting on that peer.
    void close_peer(std::uint16_t peer, std::exception_ptr reason);

    /// Blocks until every peer's message for `round` is present, then
    /// removes and returns them sorted by node_id.
    std::vector<RoundMessage> gather(std::uint32_t round, std::chrono::milliseconds timeout);

  private:
    std::vector<std::uint16_t> peers_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::map<std::uint32_t, std::map<std::uint16_t, RoundMessage>> pending_;
    std::map<std::uint16_t, std::exception_ptr> closed_;
};

/// Shared validation for every delivery mechanism: finite entries, length
/// encodable in the frame's u32 count.
void validate_wire_gradient(const std::vector<double>& gradient);

} // namespace bnat::detail
