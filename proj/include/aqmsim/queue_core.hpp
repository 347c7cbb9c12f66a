#pragma once

#include <atomic>
#include <cassert>
#include <cstdint>
#include <memory>
#include <optional>

#include "aqmsim/types.hpp"

namespace aqmsim {

// One queued packet. backlog_enq is measured after the packet is appended,
// so it includes the packet itself; a packet alone in the queue sees its own
// size. The mark fields carry a decision made at enqueue time (if any) so it
// can be observed when the packet finally departs.
struct Packet {
    std::uint64_t id = 0;
    std::uint32_t size = 0;
    TimeNs ts_enq = 0;
    Bytes backlog_enq = 0;
    MarkAction enq_action = MarkAction::Pass;
    double enq_p = 0.0;
};

struct DequeueResult {
    Packet packet;
    // Backlog read before removal: includes the departing packet, mirroring
    // backlog_enq. Both are therefore strictly positive.
    Bytes backlog_deq = 0;
};

// Byte-counted FIFO built around two monotonically increasing byte counters:
// count_enq, written only by the enqueue side, and count_deq, written only
// by the dequeue side. backlog is their difference; neither side ever writes
// the other's counter, so the two sides may run on different threads without
// locks. Counter reads are word-granularity atomics; a reader may see a
// value at most one in-flight packet stale, never torn.
//
// The slot ring itself follows the same single-writer discipline (enqueue
// owns the tail, dequeue owns the head), which is what the stress test
// exercises. Slot capacity is fixed at construction; byte capacity is an
// optional tail-drop limit.
class QueueCore {
  public:
    explicit QueueCore(std::optional<Bytes> byte_capacity = std::nullopt,
                       std::size_t slot_capacity = 1u << 16);

    // Appends a packet of `size` bytes at time `now`. Returns the stored
    // packet (with backlog_enq filled in), or nullopt if the byte capacity
    // or the slot ring would be exceeded; a rejected enqueue mutates
    // nothing.
    std::optional<Packet> enqueue(std::uint32_t size, TimeNs now);

    // Variant that lets the caller preset the mark fields of the stored
    // packet (decision made at enqueue time).
    std::optional<Packet> enqueue(std::uint32_t size, TimeNs now,
                                  MarkAction enq_action, double enq_p);

    // Removes the head packet. backlog_deq is read before removal and
    // includes the departing packet. Returns nullopt when empty.
    std::optional<DequeueResult> dequeue();

    Bytes count_enq() const { return enq_bytes_.load(std::memory_order_acquire); }
    Bytes count_deq() const { return deq_bytes_.load(std::memory_order_acquire); }

    // count_enq - count_deq. Reads the dequeue counter first, so a
    // concurrent dequeue can only make the result conservative (never
    // negative).
    Bytes backlog() const {
        const Bytes d = deq_bytes_.load(std::memory_order_acquire);
        const Bytes e = enq_bytes_.load(std::memory_order_acquire);
        return e - d;
    }

    std::size_t packets() const {
        const std::uint64_t h = head_.load(std::memory_order_acquire);
        const std::uint64_t t = tail_.load(std::memory_order_acquire);
        return static_cast<std::size_t>(t - h);
    }

    bool empty() const { return packets() == 0; }

    // Size of the head packet without removing it. Single-consumer use only.
    std::optional<std::uint32_t> head_size() const;

    // Peek at the head packet. The pointer is valid until the next dequeue.
    // Single-consumer use only; nullptr when empty.
    const Packet* head() const;

  private:
    std::unique_ptr<Packet[]> slots_;
    std::size_t mask_;
    std::optional<Bytes> byte_capacity_;

    // Enqueue side owns tail_ and enq_bytes_; dequeue side owns head_ and
    // deq_bytes_.
    std::atomic<std::uint64_t> head_{0};
    std::atomic<std::uint64_t> tail_{0};
    std::atomic<Bytes> enq_bytes_{0};
    std::atomic<Bytes> deq_bytes_{0};
    std::uint64_t next_id_ = 0;
};

} // namespace aqmsim
