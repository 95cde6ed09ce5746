#pragma once

#include <cstdint>
#include <random>
#include <unordered_map>
#include <vector>

#include "gcrl/types.hpp"

namespace gcrl {

struct Transition {
  State s;
  Action a;
  double r = -1.0;
  State s_next;
  Goal g;     // original target goal of the episode
  Path path;  // planned path from goal_map(s) to g at collection time
  bool done = false;
  std::int64_t episode_id = 0;
  int t = 0;
};

// Ring buffer of transitions. Episodes must be pushed contiguously with t
// counting up from 0 so that hindsight goals can be looked up by offset.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition tr);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }
  std::int64_t total_pushed() const { return pushed_; }

  // i-th stored transition, oldest first.
  const Transition& at(std::size_t i) const;

  // Number of transitions of the episode of at(i) stored at or after it.
  std::size_t remaining_in_episode(std::size_t i) const;

 private:
  std::size_t slot(std::size_t i) const { return (head_ + i) % capacity_; }

  std::size_t capacity_;
  std::vector<Transition> data_;
  std::size_t head_ = 0;  // slot of the oldest transition
  std::size_t size_ = 0;
  std::int64_t pushed_ = 0;
  std::unordered_map<std::int64_t, int> episode_length_;
};

struct RelabeledSample {
  State s;
  Action a;
  double r = -1.0;
  State s_next;
  Goal g_used;
  bool success = false;  // goal_map(s_next) within delta of g_used
  bool relabeled = false;
  const Transition* source = nullptr;  // valid until the buffer is next modified
};

using RelabeledBatch = std::vector<RelabeledSample>;

// Draws batch_size transitions uniformly with replacement. Each is relabelled
// with probability `ratio` to goal_map(s_next) of a uniformly chosen
// transition at offset 0..range-1 later in the same episode; rewards are
// recomputed with threshold delta. Throws when batch_size exceeds occupancy.
RelabeledBatch her_sample(const ReplayBuffer& buf, std::size_t batch_size, double ratio, int range, double delta,
                          std::mt19937_64& rng);

}  // namespace gcrl
