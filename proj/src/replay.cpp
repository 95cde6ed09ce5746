#include "gcrl/replay.hpp"

#include <algorithm>

#include "gcrl/maze.hpp"

namespace gcrl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("replay buffer capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::push(Transition tr) {
  const std::int64_t id = tr.episode_id;
  if (size_ < capacity_) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(tr));
    } else {
      data_[slot(size_)] = std::move(tr);
    }
    ++size_;
  } else {
    Transition& oldest = data_[head_];
    auto it = episode_length_.find(oldest.episode_id);
    if (it != episode_length_.end() && oldest.t + 1 >= it->second) episode_length_.erase(it);
    oldest = std::move(tr);
    head_ = (head_ + 1) % capacity_;
  }
  auto& len = episode_length_[id];
  len = std::max(len, at(size_ - 1).t + 1);
  ++pushed_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer::at");
  return data_[slot(i)];
}

std::size_t ReplayBuffer::remaining_in_episode(std::size_t i) const {
  const Transition& tr = at(i);
  const int len = episode_length_.at(tr.episode_id);
  return static_cast<std::size_t>(len - tr.t);
}

RelabeledBatch her_sample(const ReplayBuffer& buf, std::size_t batch_size, double ratio, int range, double delta,
                          std::mt19937_64& rng) {
  if (buf.empty()) throw Error("her_sample: replay buffer is empty");
  if (batch_size > buf.size()) throw Error("her_sample: batch size exceeds buffer occupancy");
  if (range < 1) throw ConfigError("her_sample: relabel range must be >= 1");

  std::uniform_int_distribution<std::size_t> pick(0, buf.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  RelabeledBatch batch;
  batch.reserve(batch_size);
  for (std::size_t n = 0; n < batch_size; ++n) {
    const std::size_t i = pick(rng);
    const Transition& tr = buf.at(i);
    RelabeledSample smp{tr.s, tr.a, tr.r, tr.s_next, tr.g, tr.done, false, &tr};
    if (coin(rng) < ratio) {
      const std::size_t window = std::min<std::size_t>(static_cast<std::size_t>(range), buf.remaining_in_episode(i));
      std::uniform_int_distribution<std::size_t> offset(0, window - 1);
      const Transition& future = buf.at(i + offset(rng));
      smp.g_used = goal_map(future.s_next);
      smp.r = reward(tr.s_next, smp.g_used, delta);
      smp.success = smp.r == 0.0;
      smp.relabeled = true;
    }
    batch.push_back(smp);
  }
  return batch;
}

}  // namespace gcrl
