#include <algorithm>
#include <stdexcept>
#include <string>

#include "mpdccp/sim_core.hpp"

namespace mpdccp {

EventId EventQueue::schedule(SimTime at, Callback callback) {
  if (at < now_) {
    throw std::invalid_argument("event scheduled at " + std::to_string(at) +
                                " us, before the current clock " +
                                std::to_string(now_) + " us");
  }
  const EventId id = next_id_++;
  heap_.push_back(Entry{at, id, std::move(callback)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
  live_.insert(id);
  return id;
}

bool EventQueue::cancel(EventId id) { return live_.erase(id) > 0; }

void EventQueue::drop_cancelled_top() {
  while (!heap_.empty() && !live_.contains(heap_.front().id)) {
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    heap_.pop_back();
  }
}

std::optional<SimTime> EventQueue::next_time() {
  drop_cancelled_top();
  if (heap_.empty()) return std::nullopt;
  return heap_.front().at;
}

bool EventQueue::empty() {
  drop_cancelled_top();
  return heap_.empty();
}

bool EventQueue::step() {
  drop_cancelled_top();
  if (heap_.empty()) return false;
  std::pop_heap(heap_.begin(), heap_.end(), Later{});
  Entry entry = std::move(heap_.back());
  heap_.pop_back();
  live_.erase(entry.id);
  now_ = entry.at;
  ++executed_;
  entry.callback();
  return true;
}

void EventQueue::run_until(SimTime limit) {
  while (true) {
    const auto next = next_time();
    if (!next || *next > limit) return;
    step();
  }
}

void EventQueue::run() {
  while (step()) {
  }
}

}  // namespace mpdccp
