#include <dmsf/min_queue.hpp>

#include <algorithm>
#include <string>

namespace dmsf {

std::unique_ptr<MinQueue> make_queue(QueueKind kind)
{
    if (kind == QueueKind::BUCKET) return std::make_unique<BucketQueue>();
    return std::make_unique<BinaryHeapQueue>();
}

// --- BinaryHeapQueue --------------------------------------------------------------------

void BinaryHeapQueue::place(std::size_t i, Entry e)
{
    m_heap[i] = e;
    m_pos[e.elem] = i;
}

void BinaryHeapQueue::sift_up(std::size_t i)
{
    Entry e = m_heap[i];
    while (i > 0) {
        const std::size_t p = (i - 1) / 2;
        if (!(e.key < m_heap[p].key)) break;
        place(i, m_heap[p]);
        i = p;
    }
    place(i, e);
}

void BinaryHeapQueue::sift_down(std::size_t i)
{
    Entry e = m_heap[i];
    const std::size_t n = m_heap.size();
    while (true) {
        std::size_t c = 2 * i + 1;
        if (c >= n) break;
        if (c + 1 < n && m_heap[c + 1].key < m_heap[c].key) ++c;
        if (!(m_heap[c].key < e.key)) break;
        place(i, m_heap[c]);
        i = c;
    }
    place(i, e);
}

void BinaryHeapQueue::insert(Element elem, WeightKey key)
{
    if (m_pos.contains(elem)) throw AuditError("queue element inserted twice");
    m_heap.push_back(Entry{elem, key});
    m_pos[elem] = m_heap.size() - 1;
    sift_up(m_heap.size() - 1);
}

void BinaryHeapQueue::erase(Element elem)
{
    auto it = m_pos.find(elem);
    if (it == m_pos.end()) throw AuditError("queue element missing");
    const std::size_t i = it->second;
    m_pos.erase(it);
    const Entry last = m_heap.back();
    m_heap.pop_back();
    if (i == m_heap.size()) return;
    place(i, last);
    sift_up(i);
    sift_down(m_pos[last.elem]);
}

void BinaryHeapQueue::update(Element elem, WeightKey key)
{
    auto it = m_pos.find(elem);
    if (it == m_pos.end()) throw AuditError("queue element missing");
    const std::size_t i = it->second;
    const WeightKey old = m_heap[i].key;
    m_heap[i].key = key;
    if (key < old) sift_up(i);
    else sift_down(i);
}

std::optional<WeightKey> BinaryHeapQueue::find(Element elem) const
{
    auto it = m_pos.find(elem);
    if (it == m_pos.end()) return std::nullopt;
    return m_heap[it->second].key;
}

std::optional<MinQueue::Entry> BinaryHeapQueue::peek_min() const
{
    if (m_heap.empty()) return std::nullopt;
    return m_heap.front();
}

std::vector<MinQueue::Entry> BinaryHeapQueue::min_entries() const
{
    std::vector<Entry> out;
    if (m_heap.empty()) return out;
    out.push_back(m_heap[0]);
    // any other entry with the minimal key is a child of the root
    for (std::size_t c = 1; c <= 2 && c < m_heap.size(); ++c) {
        if (m_heap[c].key == m_heap[0].key) {
            out.push_back(m_heap[c]);
            break;
        }
    }
    return out;
}

// --- BucketQueue ------------------------------------------------------------------------

void BucketQueue::insert(Element elem, WeightKey key)
{
    if (!m_keys.emplace(elem, key).second) throw AuditError("queue element inserted twice");
    m_buckets[{key.cls, key.rank}].push_back(Entry{elem, key});
}

void BucketQueue::erase(Element elem)
{
    auto it = m_keys.find(elem);
    if (it == m_keys.end()) throw AuditError("queue element missing");
    auto bucket = m_buckets.find({it->second.cls, it->second.rank});
    auto& items = bucket->second;
    items.erase(std::find_if(items.begin(), items.end(), [&](const Entry& e) { return e.elem == elem; }));
    if (items.empty()) m_buckets.erase(bucket);
    m_keys.erase(it);
}

void BucketQueue::update(Element elem, WeightKey key)
{
    erase(elem);
    insert(elem, key);
}

std::optional<WeightKey> BucketQueue::find(Element elem) const
{
    auto it = m_keys.find(elem);
    if (it == m_keys.end()) return std::nullopt;
    return it->second;
}

std::optional<MinQueue::Entry> BucketQueue::peek_min() const
{
    auto all = min_entries();
    if (all.empty()) return std::nullopt;
    return all.front();
}

std::vector<MinQueue::Entry> BucketQueue::min_entries() const
{
    std::vector<Entry> out;
    if (m_buckets.empty()) return out;
    const auto& items = m_buckets.begin()->second;
    WeightKey best = items.front().key;
    for (const auto& e : items) best = std::min(best, e.key);
    for (const auto& e : items) {
        if (e.key == best && out.size() < 2) out.push_back(e);
    }
    return out;
}

std::vector<MinQueue::Entry> BucketQueue::entries() const
{
    std::vector<Entry> out;
    for (const auto& [id, items] : m_buckets) out.insert(out.end(), items.begin(), items.end());
    return out;
}

} // namespace dmsf
