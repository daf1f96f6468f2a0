#pragma once

#include <dmsf/core.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

namespace dmsf {

/** Addressable min-queue over (element, key) pairs. Elements are their own handles. */
class MinQueue {
public:
    using Element = std::uint32_t;
    struct Entry {
        Element elem;
        WeightKey key;
    };

    virtual ~MinQueue() = default;

    virtual void insert(Element elem, WeightKey key) = 0;
    virtual void erase(Element elem) = 0;
    /** Changes the key of an existing element in either direction. */
    virtual void update(Element elem, WeightKey key) = 0;
    virtual std::optional<WeightKey> find(Element elem) const = 0;
    virtual std::optional<Entry> peek_min() const = 0;
    /** Up to two entries sharing the minimal key (an edge seen from both endpoints). */
    virtual std::vector<Entry> min_entries() const = 0;
    virtual std::size_t size() const = 0;
    virtual std::vector<Entry> entries() const = 0;

    bool empty() const { return size() == 0; }
};

enum class QueueKind { BINARY_HEAP, BUCKET };

std::unique_ptr<MinQueue> make_queue(QueueKind kind);

/** Binary heap with an element -> slot index. */
class BinaryHeapQueue final : public MinQueue {
public:
    void insert(Element elem, WeightKey key) override;
    void erase(Element elem) override;
    void update(Element elem, WeightKey key) override;
    std::optional<WeightKey> find(Element elem) const override;
    std::optional<Entry> peek_min() const override;
    std::vector<Entry> min_entries() const override;
    std::size_t size() const override { return m_heap.size(); }
    std::vector<Entry> entries() const override { return m_heap; }

private:
    void sift_up(std::size_t i);
    void sift_down(std::size_t i);
    void place(std::size_t i, Entry e);

    std::vector<Entry> m_heap;
    std::unordered_map<Element, std::size_t> m_pos;
};

/** Buckets indexed by (class, rank); each bucket holds the few entries sharing that rank. */
class BucketQueue final : public MinQueue {
public:
    void insert(Element elem, WeightKey key) override;
    void erase(Element elem) override;
    void update(Element elem, WeightKey key) override;
    std::optional<WeightKey> find(Element elem) const override;
    std::optional<Entry> peek_min() const override;
    std::vector<Entry> min_entries() const override;
    std::size_t size() const override { return m_keys.size(); }
    std::vector<Entry> entries() const override;

private:
    using BucketId = std::pair<EdgeClass, std::uint64_t>;
    std::map<BucketId, std::vector<Entry>> m_buckets;
    std::unordered_map<Element, WeightKey> m_keys;
};

} // namespace dmsf
