#include "aqmsim/queue_core.hpp"

#include <bit>

namespace aqmsim {

QueueCore::QueueCore(std::optional<Bytes> byte_capacity, std::size_t slot_capacity)
    : byte_capacity_(byte_capacity) {
    std::size_t cap = std::bit_ceil(slot_capacity < 2 ? std::size_t{2} : slot_capacity);
    slots_ = std::make_unique<Packet[]>(cap);
    mask_ = cap - 1;
}

std::optional<Packet> QueueCore::enqueue(std::uint32_t size, TimeNs now) {
    return enqueue(size, now, MarkAction::Pass, 0.0);
}

std::optional<Packet> QueueCore::enqueue(std::uint32_t size, TimeNs now,
                                         MarkAction enq_action, double enq_p) {
    assert(size >= 1);
    const std::uint64_t head = head_.load(std::memory_order_acquire);
    const std::uint64_t tail = tail_.load(std::memory_order_relaxed);
    if (tail - head > mask_)
        return std::nullopt; // ring full

    // Read the foreign counter before our own update so the computed backlog
    // can only overestimate, and the packet's own bytes are always included.
    const Bytes deq = deq_bytes_.load(std::memory_order_acquire);
    const Bytes enq = enq_bytes_.load(std::memory_order_relaxed);
    const Bytes would_be = enq - deq + size;
    if (byte_capacity_ && would_be > *byte_capacity_)
        return std::nullopt; // tail drop, nothing mutated

    Packet& slot = slots_[tail & mask_];
    slot.id = next_id_++;
    slot.size = size;
    slot.ts_enq = now;
    slot.backlog_enq = would_be;
    slot.enq_action = enq_action;
    slot.enq_p = enq_p;

    tail_.store(tail + 1, std::memory_order_release);
    enq_bytes_.store(enq + size, std::memory_order_release);
    return slot;
}

std::optional<DequeueResult> QueueCore::dequeue() {
    const std::uint64_t head = head_.load(std::memory_order_relaxed);
    const std::uint64_t tail = tail_.load(std::memory_order_acquire);
    if (head == tail)
        return std::nullopt;

    // Backlog before removal: includes the packet about to depart.
    const Bytes enq = enq_bytes_.load(std::memory_order_acquire);
    const Bytes deq = deq_bytes_.load(std::memory_order_relaxed);

    DequeueResult r;
    r.packet = slots_[head & mask_];
    r.backlog_deq = enq - deq;

    head_.store(head + 1, std::memory_order_release);
    deq_bytes_.store(deq + r.packet.size, std::memory_order_release);
    return r;
}

std::optional<std::uint32_t> QueueCore::head_size() const {
    const Packet* p = head();
    if (!p)
        return std::nullopt;
    return p->size;
}

const Packet* QueueCore::head() const {
    const std::uint64_t head = head_.load(std::memory_order_relaxed);
    const std::uint64_t tail = tail_.load(std::memory_order_acquire);
    if (head == tail)
        return nullptr;
    return &slots_[head & mask_];
}

} // namespace aqmsim
